"""Scalar special functions driving the curvature calculus.

The whole toolkit is built on the convex gap of the exponential,

    ups(x) = exp(x) - 1 - x,

and the derived profile

    H(x) = 0.5 * exp(-x) * ups(2x),

together with its derivative H' and the inverse (H')^{-1}.  H' is a strictly
increasing bijection of the real line with H'(0) = 0, quadratic behaviour of H
near zero (H(x) ~ x^2) and exponential growth at +infinity (H(x) ~ exp(x)/2,
H'(x) ~ exp(x)/2), which makes (H')^{-1}(y) - log(2y) -> 0 for large y.  These
asymptotics are what the Lagrange-multiplier machinery in
:mod:`jumpcd.cdfuncs` relies on.

Everything here is pure and thread-safe.  The public functions accept floats;
vectorised variants on numpy arrays are provided with an ``_arr`` suffix for
the inner loops of the kernel-weighted sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "upsilon",
    "upsilon_arr",
    "h_pair",
    "h_eval",
    "h_eval_arr",
    "h_prime",
    "h_prime_arr",
    "h_second",
    "h_prime_inv",
    "h_prime_inv_arr",
    "NuCertificate",
    "nu_certificate",
    "nu_constant",
]

# Below this threshold exp(x)-1-x loses ~8 digits to cancellation; the quartic
# tail of the series is < 1e-17 relative there.
_SERIES_CUT = 1e-4


def upsilon(x: float) -> float:
    """exp(x) - 1 - x, nonnegative, with a series branch near zero."""
    if abs(x) < _SERIES_CUT:
        return x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    return math.expm1(x) - x


def upsilon_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUT
    out = np.expm1(x) - x
    if np.any(small):
        xs = x[small]
        out[small] = xs * xs * (0.5 + xs * (1.0 / 6.0 + xs * (1.0 / 24.0 + xs / 120.0)))
    return out


def h_pair(x: float, y: float) -> float:
    """Two-argument profile 0.5 * exp(-x) * ups(x + y)."""
    return 0.5 * math.exp(-x) * upsilon(x + y)


def h_eval(x: float) -> float:
    """Diagonal profile H(x) = 0.5 * exp(-x) * ups(2x).

    Strictly positive for x != 0; H(x)/x^2 -> 1 as x -> 0 (the series branch
    of :func:`upsilon` keeps that limit clean in floating point).
    """
    return 0.5 * math.exp(-x) * upsilon(2.0 * x)


def h_eval_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 0.5 * np.exp(-x) * upsilon_arr(2.0 * x)


def h_prime(x: float) -> float:
    """H'(x) = 0.5*(exp(x) - exp(-x) + 2x exp(-x)) = sinh(x) + x*exp(-x).

    Both summands share the sign of x, so the rearranged form is free of
    cancellation for every x and needs no series branch: H'(x)/(2x) -> 1.
    """
    return math.sinh(x) + x * math.exp(-x)


def h_prime_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sinh(x) + x * np.exp(-x)


def h_second(x: float) -> float:
    """H''(x) = 0.5*(exp(x) + (3 - 2x) exp(-x)); positive on all of R."""
    return 0.5 * (math.exp(x) + (3.0 - 2.0 * x) * math.exp(-x))


def _h_second_arr(x: np.ndarray) -> np.ndarray:
    return 0.5 * (np.exp(x) + (3.0 - 2.0 * x) * np.exp(-x))


def h_prime_inv(y: float, rtol: float = 1e-12) -> float:
    """Inverse of H' on [0, infinity).

    Safeguarded Newton iteration: initial guess y/2 for y <= 1 (where
    H'(x) ~ 2x) and log(2y) for y > 1 (where H'(x) ~ exp(x)/2), bracketed on
    [0, max(1, log(2y) + 2)].  A Newton step leaving the bracket falls back to
    bisection, so termination is unconditional.  The result x satisfies
    |H'(x) - y| <= rtol * max(1, y).
    """
    if y < 0.0:
        raise ValueError(f"h_prime_inv requires y >= 0, got {y}")
    if y == 0.0:
        return 0.0
    lo, hi = 0.0, max(1.0, math.log(2.0 * y) + 2.0)
    x = 0.5 * y if y <= 1.0 else math.log(2.0 * y)
    tol = rtol * max(1.0, y)
    for _ in range(200):
        f = h_prime(x) - y
        if abs(f) <= tol:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        step = f / h_second(x)
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            return x
        x = x_new
    return x  # bracket has collapsed to rounding width by now


def h_prime_inv_arr(y: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Vectorised :func:`h_prime_inv` (Newton; H' convex so steps from above
    the root converge monotonically)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("h_prime_inv_arr requires y >= 0")
    x = np.where(y <= 1.0, 0.5 * y, np.log(np.maximum(2.0 * y, 1.0)))
    pos = y > 0.0
    tol = rtol * np.maximum(1.0, y)
    for _ in range(80):
        f = h_prime_arr(x) - y
        active = pos & (np.abs(f) > tol)
        if not np.any(active):
            break
        step = np.where(active, f / _h_second_arr(x), 0.0)
        x = np.maximum(x - step, 0.0)
    else:
        # Newton did not settle everywhere (extremely unusual); finish the
        # stragglers with the scalar safeguarded routine.
        f = h_prime_arr(x) - y
        bad = pos & (np.abs(f) > tol)
        flat_x = x.reshape(-1)
        flat_y = y.reshape(-1)
        for idx in np.nonzero(bad.reshape(-1))[0]:
            flat_x[idx] = h_prime_inv(float(flat_y[idx]), rtol)
        x = flat_x.reshape(x.shape)
    return np.where(pos, x, 0.0)


@dataclass(frozen=True)
class NuCertificate:
    """Numerically certified constant nu with |x|^gamma <= nu * H(x).

    ``value`` is the grid supremum of |x|^gamma / H(x) inflated by 5 percent;
    ``argmax`` records the grid point attaining the supremum, ``sup_pos`` and
    ``sup_neg`` the per-axis suprema before inflation.
    """

    gamma: float
    value: float
    argmax: float
    sup_pos: float
    sup_neg: float
    grid_points: int

    def holds_at(self, x: float) -> bool:
        if x == 0.0:
            return True
        return abs(x) ** self.gamma <= self.value * h_eval(x)


def nu_certificate(gamma: float, grid_points: int = 4001) -> NuCertificate:
    """Certify nu(gamma) = sup |x|^gamma / H(x) over a log-spaced grid.

    The ratio tends to 0 at +-infinity (H grows like exp(|x|) on both sides)
    and to 0 (gamma > 2) or 1 (gamma = 2) at the origin, so a grid on
    [1e-8, x_max] on each axis with x_max comfortably past the interior
    maximiser captures the supremum; 5 percent inflation absorbs the grid gap.
    """
    if gamma < 2.0:
        raise ValueError(f"nu_certificate requires gamma >= 2, got {gamma}")
    x_max = max(50.0, 6.0 * gamma)
    xs = np.logspace(-8, math.log10(x_max), grid_points)
    ratio_pos = xs**gamma / h_eval_arr(xs)
    ratio_neg = xs**gamma / h_eval_arr(-xs)
    i_pos = int(np.argmax(ratio_pos))
    i_neg = int(np.argmax(ratio_neg))
    sup_pos = float(ratio_pos[i_pos])
    sup_neg = float(ratio_neg[i_neg])
    if sup_pos >= sup_neg:
        argmax = float(xs[i_pos])
        sup = sup_pos
    else:
        argmax = -float(xs[i_neg])
        sup = sup_neg
    # gamma = 2 approaches its positive-axis limit 1 only in the x -> 0 limit;
    # keep the endpoint in the certificate.
    if gamma == 2.0:
        sup = max(sup, 1.0)
    return NuCertificate(
        gamma=gamma,
        value=1.05 * sup,
        argmax=argmax,
        sup_pos=sup_pos,
        sup_neg=sup_neg,
        grid_points=grid_points,
    )


def nu_constant(gamma: float) -> float:
    """Certified nu with |x|^gamma <= nu * H(x) for all real x (grid check)."""
    return nu_certificate(gamma).value
