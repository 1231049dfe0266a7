"""CD-functions and relaxation functions.

The dimension term of the curvature inequality is a *CD-function*: continuous
F on [0, inf) with F(0) = 0, F(r)/r strictly increasing and 1/F integrable at
infinity.  This module provides

* the plain powers ``PowerCD``:  F(r) = c r^gamma, gamma >= 2,
* the spliced shape ``FhatCD``:  c e^(dM) r^gamma on [0, M] and c M^gamma
  e^(dr) beyond, continuous at M by construction; the constraint M >= 2/d
  makes r^(-2) F(r) non-decreasing, the property the Li-Yau argument needs,
* the finite-support bound ``FiniteSupportCD``: c0 |k|_1 H(r / |k|_1),
* the kernel-optimal ``LagrangeCD``.

``LagrangeCD`` realises the best dimension term obtainable from the quadratic
lower bound on the second-order operator.  With

    rho(lam) = sum_{k(j) > 0} k(j) * hpinv(lam / k(j)),

a strictly increasing bijection of [0, inf) whenever the kernel's
log-condition sum converges, the optimal function is G(a) = integral of
rho^{-1} from 0 to a, attained at the profile v_j = hpinv(rho^{-1}(a)/k(j)).
Numerically G is evaluated directly as sum k(j)^2 H(v_j) after solving for
the multiplier; the identity H(x) = H'(x) - 2x e^(-x) turns the far tail into
lam * (outside |k|_1 mass) with a certified defect, so no truncation is ever
silent.  Far summands of rho itself use hpinv(y) = log(2y) + O(log(y)/y^2).

Relaxation functions phi solve phi' = -F(phi), phi(0+) = inf.  For the fhat
shape phi is closed-form piecewise (log branch up to t_star, power branch
beyond); for all other kinds phi inverts the tabulated decay clock
T(x) = integral_x^inf dr/F(r) by bisection on a monotone spline table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import DivergentSeriesError, Kernel, ToleranceError, kernel_aggregate, truncate
from .scalars import h_eval_arr, h_prime, h_prime_inv_arr

__all__ = [
    "CDFunction",
    "PowerCD",
    "FhatCD",
    "FiniteSupportCD",
    "LagrangeCD",
    "ScaledCD",
    "make_cd",
    "finite_support_cd",
    "lagrange_G",
    "rho_eval",
    "rho_inverse",
    "ExtremalProfile",
    "extremal_profile",
    "fhat_minorant_constant",
    "power_exponent",
    "power_cd",
    "GOLDEN_BETA",
    "RelaxationFunction",
    "FhatRelaxation",
    "NumericRelaxation",
    "relaxation",
]

GOLDEN_BETA = 0.5 * (1.0 + math.sqrt(5.0))


# ---------------------------------------------------------------------------
# CD-function kinds
# ---------------------------------------------------------------------------


class CDFunction:
    """Base: evaluable F on [0, inf) with asymptotic metadata.

    ``small_exponent`` is gamma with F(r) ~ r^gamma near 0 (when known);
    ``growth_delta``/``growth_prefactor`` describe F(r) ~ prefactor*e^(delta r)
    at infinity (None for plain powers).
    """

    kind: str = "abstract"
    small_exponent: float | None = None
    growth_delta: float | None = None
    growth_prefactor: float | None = None

    def __call__(self, r):  # pragma: no cover - abstract
        raise NotImplementedError

    def derivative(self, r: float) -> float | None:
        """F'(r) where available (None disables derivative-based tables)."""
        return None

    def scaled(self, factor: float) -> "CDFunction":
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return ScaledCD(self, factor)

    def inverse_integrable_at_inf(self) -> bool:
        if self.growth_delta is not None:
            return True
        return self.small_exponent is not None and self.small_exponent > 1.0

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "small_exponent": self.small_exponent,
            "growth_delta": self.growth_delta,
            "growth_prefactor": self.growth_prefactor,
        }


@dataclass(frozen=True)
class PowerCD(CDFunction):
    c: float
    gamma: float
    kind: str = "power_gamma"

    def __post_init__(self):
        if not (self.c > 0 and self.gamma >= 2.0):
            raise ValueError("power_gamma needs c > 0 and gamma >= 2")
        object.__setattr__(self, "small_exponent", self.gamma)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.c * np.abs(r) ** self.gamma
        return float(out) if out.ndim == 0 else out

    def derivative(self, r: float) -> float:
        return self.c * self.gamma * abs(r) ** (self.gamma - 1.0)

    def scaled(self, factor: float) -> "PowerCD":
        return PowerCD(self.c * factor, self.gamma)

    def describe(self) -> dict:
        d = super().describe()
        d.update(c=self.c, gamma=self.gamma)
        return d


@dataclass(frozen=True)
class FhatCD(CDFunction):
    """c * (e^(delta M) r^gamma on [0, M]; M^gamma e^(delta r) beyond)."""

    c: float
    gamma: float
    delta: float
    m_switch: float
    kind: str = "fhat"

    def __post_init__(self):
        if not (self.c > 0 and self.gamma >= 2.0 and self.delta > 0):
            raise ValueError("fhat needs c > 0, gamma >= 2, delta > 0")
        if self.m_switch < 2.0 / self.delta:
            raise ValueError(
                f"fhat switch point M={self.m_switch:g} below 2/delta={2.0 / self.delta:g}; "
                "r^-2 F(r) would fail to be non-decreasing"
            )
        object.__setattr__(self, "small_exponent", self.gamma)
        object.__setattr__(self, "growth_delta", self.delta)
        object.__setattr__(self, "growth_prefactor", self.c * self.m_switch**self.gamma)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        left = math.exp(self.delta * self.m_switch) * np.abs(r) ** self.gamma
        with np.errstate(over="ignore"):
            right = self.m_switch**self.gamma * np.exp(self.delta * r)
        out = self.c * np.where(r <= self.m_switch, left, right)
        return float(out) if out.ndim == 0 else out

    def derivative(self, r: float) -> float:
        if r <= self.m_switch:
            return self.c * math.exp(self.delta * self.m_switch) * self.gamma * abs(r) ** (self.gamma - 1.0)
        return self.c * self.m_switch**self.gamma * self.delta * math.exp(self.delta * r)

    def scaled(self, factor: float) -> "FhatCD":
        return FhatCD(self.c * factor, self.gamma, self.delta, self.m_switch)

    def describe(self) -> dict:
        d = super().describe()
        d.update(c=self.c, gamma=self.gamma, delta=self.delta, M=self.m_switch)
        return d


class FiniteSupportCD(CDFunction):
    """F(r) = c0 |k|_1 H(r / |k|_1) for a finite-support kernel.

    c0 is the smallest positive rate; the sparse odd-site pattern attains
    equality, so this bound is sharp within its class.
    """

    kind = "finite_support"

    def __init__(self, kernel: Kernel):
        if kernel.support.kind != "finite":
            raise ValueError("finite_support_cd needs a finite-support kernel")
        self.kernel = kernel
        self.c0 = kernel.min_support_rate()
        self.l1 = kernel_aggregate(kernel, "l1", 1e-14)
        self.small_exponent = 2.0
        self.growth_delta = 1.0 / self.l1
        self.growth_prefactor = 0.5 * self.c0 * self.l1

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = self.c0 * self.l1 * h_eval_arr(r / self.l1)
        return float(out) if out.ndim == 0 else out

    def derivative(self, r: float) -> float:
        return self.c0 * h_prime(r / self.l1)

    def describe(self) -> dict:
        d = super().describe()
        d.update(c0=self.c0, l1=self.l1, kernel=self.kernel.label)
        return d


class ScaledCD(CDFunction):
    kind = "scaled"

    def __init__(self, base: CDFunction, factor: float):
        self.base = base
        self.factor = factor
        self.small_exponent = base.small_exponent
        self.growth_delta = base.growth_delta
        if base.growth_prefactor is not None:
            self.growth_prefactor = factor * base.growth_prefactor

    def __call__(self, r):
        return self.factor * self.base(r)

    def derivative(self, r: float) -> float | None:
        d = self.base.derivative(r)
        return None if d is None else self.factor * d

    def scaled(self, factor: float) -> "ScaledCD":
        return ScaledCD(self.base, self.factor * factor)

    def describe(self) -> dict:
        d = super().describe()
        d.update(factor=self.factor, base=self.base.describe())
        return d


def make_cd(spec: dict) -> CDFunction:
    """CD-function from ``{"kind": ..., "params": {...}}`` (CLI surface)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("cd spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    params = dict(spec.get("params", {}))
    if kind == "power_gamma":
        return PowerCD(params["c"], params["gamma"])
    if kind == "fhat":
        return FhatCD(params["c"], params["gamma"], params["delta"], params["M"])
    raise ValueError(f"unknown cd kind {kind!r} (lagrange is built from a kernel)")


def finite_support_cd(kernel: Kernel) -> FiniteSupportCD:
    return FiniteSupportCD(kernel)


# ---------------------------------------------------------------------------
# rho machinery
# ---------------------------------------------------------------------------

_RHO_CAP = 1 << 23  # direct-summation radius budget per evaluation


class _RhoMachine:
    """rho, d(rho)/d(lam) and the G objective for one kernel.

    Direct summation runs to a radius where the envelope is below lam/100 (so
    the far summands sit deep in the logarithmic regime of hpinv) and the
    residual tail is assembled from the |k|_1 and entropy aggregates:

        sum_{j>R} k (H')^{-1}(lam/k) = log(2 lam) T1(R) + Mtail(R) + err,

    with |err| <= sum k * (2X-1) e^(-2X) <= T1(R) * (envelope/lam)^2 * O(log).
    The G tail uses H(x) = H'(x) - 2x e^(-x) and e^(-x) <= k/(2 lam).
    """

    def __init__(self, kernel: Kernel):
        self.kernel = kernel
        if not kernel._converges(("log_condition_sum", None)):
            raise DivergentSeriesError(
                f"rho is undefined for {kernel.label}: the log-condition sum "
                "sum k(j) log(2 + 1/k(j)) diverges"
            )
        agg_tol = 1e-13
        self.l1 = kernel_aggregate(kernel, "l1", agg_tol)
        self.mk = kernel_aggregate(kernel, "entropy_m", agg_tol)
        self.agg_tol = agg_tol
        self.finite = kernel.support.kind == "finite"
        if self.finite:
            r = kernel.support.radius
            j = np.arange(1, r + 1)
            k = kernel.rates(j)
            self._j = j[k > 0]
            self._k = k[k > 0]
        else:
            self._grow(4096)

    def _grow(self, radius: int) -> None:
        j = np.arange(1, radius + 1)
        k = self.kernel.rates(j)
        self._j, self._k = j, k
        self._csum_k = np.cumsum(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(k > 0, -k * np.log(np.where(k > 0, k, 1.0)), 0.0)
        self._csum_ent = np.cumsum(ent)

    def _radius_for(self, lam: float, tol: float) -> int:
        r = 4096
        while self.kernel.envelope(r + 1) > lam / 100.0:
            r *= 2
            if r > _RHO_CAP:
                raise ToleranceError(
                    f"rho({lam:g}) for {self.kernel.label} needs direct summation "
                    f"beyond the radius budget {_RHO_CAP}"
                )
        # tail defect bound ~ T1 * (env/lam)^2 * (log(2 lam/env) + 2)
        while True:
            env = self.kernel.envelope(r + 1)
            t1 = max(self.l1 - 2.0 * self._partial_k(r), 0.0)
            defect = t1 * (env / lam) ** 2 * (abs(math.log(max(2.0 * lam / max(env, 1e-300), 2.0))) + 2.0)
            if defect <= 0.25 * tol or r > _RHO_CAP:
                break
            r *= 2
        if r > _RHO_CAP:
            raise ToleranceError(
                f"rho({lam:g}) tail defect cannot meet tol {tol:g} within the radius budget"
            )
        return r

    def _partial_k(self, radius: int) -> float:
        if radius > self._j.size:
            self._grow(radius)
        return float(self._csum_k[radius - 1])

    def _partial_ent(self, radius: int) -> float:
        if radius > self._j.size:
            self._grow(radius)
        return float(self._csum_ent[radius - 1])

    def eval(self, lam: float, tol: float = 1e-11, want_g: bool = False):
        """Return (rho, drho[, g]); tol is absolute on rho (and on g)."""
        if lam < 0:
            raise ValueError("rho needs lam >= 0")
        if lam == 0.0:
            return (0.0, math.inf, 0.0) if want_g else (0.0, math.inf)
        if self.finite:
            y = lam / self._k
            x = h_prime_inv_arr(y)
            hpp = 0.5 * (np.exp(x) + (3.0 - 2.0 * x) * np.exp(-x))
            rho = 2.0 * float(np.dot(self._k, x))
            drho = 2.0 * float(np.sum(1.0 / hpp))
            if not want_g:
                return rho, drho
            g = 2.0 * float(np.dot(self._k**2, h_eval_arr(x)))
            return rho, drho, g

        r = self._radius_for(lam, tol)
        k = self._k[:r]
        pos = k > 0
        kp = k[pos]
        x = h_prime_inv_arr(lam / kp)
        hpp = 0.5 * (np.exp(x) + (3.0 - 2.0 * x) * np.exp(-x))
        t1 = max(self.l1 - 2.0 * self._partial_k(r), 0.0)
        mtail = self.mk - 2.0 * self._partial_ent(r)
        rho = 2.0 * float(np.dot(kp, x)) + math.log(2.0 * lam) * t1 + mtail
        drho = 2.0 * float(np.sum(1.0 / hpp)) + t1 / lam
        if not want_g:
            return rho, drho
        g_direct = 2.0 * float(np.dot(kp**2, h_eval_arr(x)))
        g = g_direct + lam * t1
        return rho, drho, g

    def inverse(self, a: float, tol: float = 1e-11) -> float:
        """lam with |rho(lam) - a| <= tol, by safeguarded Newton."""
        if a < 0:
            raise ValueError("rho_inverse needs a >= 0")
        if a == 0.0:
            return 0.0
        eval_tol = 0.25 * tol
        # initial guess from the additive asymptotics, clamped small
        lam = 0.5 * math.exp(min((a - self.mk) / self.l1, 700.0))
        lam = min(max(lam, 1e-300), 1e300)
        # bracket
        lo, hi = 0.0, lam
        r, dr = self.eval(lam, eval_tol)
        it = 0
        while r < a:
            lo = hi
            hi *= 4.0
            r, dr = self.eval(hi, eval_tol)
            it += 1
            if it > 400:
                raise ToleranceError("rho_inverse failed to bracket")
        lam = hi
        for _ in range(200):
            r, dr = self.eval(lam, eval_tol)
            if abs(r - a) <= tol:
                return lam
            if r < a:
                lo = lam
            else:
                hi = lam
            step = (r - a) / dr if math.isfinite(dr) and dr > 0 else 0.0
            lam_new = lam - step
            if not (lo < lam_new < hi) or step == 0.0:
                lam_new = 0.5 * (lo + hi)
            if lam_new == lam:
                return lam
            lam = lam_new
        return lam


def _rho_machine(kernel: Kernel) -> _RhoMachine:
    key = ("rho_machine",)
    m = kernel._cache.get(key)
    if m is None:
        m = _RhoMachine(kernel)
        kernel._cache[key] = m
    return m


def rho_eval(kernel: Kernel, lam: float, tol: float = 1e-10) -> float:
    """rho(lam) = sum over the support of k(j) (H')^{-1}(lam / k(j))."""
    return _rho_machine(kernel).eval(lam, tol)[0]


def rho_inverse(kernel: Kernel, a: float, tol: float = 1e-10) -> float:
    """The unique lam >= 0 with rho(lam) = a, within tol on rho."""
    return _rho_machine(kernel).inverse(a, tol)


# ---------------------------------------------------------------------------
# the Lagrange-optimal CD-function
# ---------------------------------------------------------------------------


class LagrangeCD(CDFunction):
    """G(a) = integral_0^a rho^{-1}.  Sharp for the extremal profiles.

    Evaluation solves for the multiplier and sums k^2 H(.) directly (exact up
    to certified tails).  Repeated queries hit a table indexed by the
    multiplier lam: each knot carries (a, G, G' = lam, G'' = 1/rho'(lam)),
    all direct evaluations, and the piecewise quintic Hermite through those
    derivative triples reproduces G to ~1e-10 relative at geometric knot
    ratios.  Below the smallest table knot the log-log tangent continues the
    curve (the small-a behaviour is an exact power law in the limit, so the
    extrapolation error vanishes with a).
    """

    kind = "lagrange"

    def __init__(self, kernel: Kernel, rel_tol: float = 1e-9):
        self.kernel = kernel
        self.machine = _rho_machine(kernel)
        self.rel_tol = rel_tol
        self.l1 = self.machine.l1
        self.mk = self.machine.mk
        self.growth_delta = 1.0 / self.l1
        self.growth_prefactor = 0.5 * self.l1 * math.exp(-self.mk / self.l1)
        beta = kernel.params.get("beta")
        if kernel.family in ("power", "fractional") and beta is not None:
            self.small_exponent = (1.0 + 2.0 * beta) / beta
        elif kernel.support.kind == "finite":
            self.small_exponent = 2.0
        else:
            self.small_exponent = None
        self._lam: np.ndarray | None = None  # table knots, geometric
        self._a: np.ndarray | None = None
        self._g: np.ndarray | None = None
        self._d2: np.ndarray | None = None
        self._poly = None  # piecewise quintic for G, and cubic for lam(a)
        self._lam_poly = None

    # -- exact path ----------------------------------------------------------

    def exact(self, a: float, tol_rel: float = 1e-10) -> float:
        if a < 0:
            raise ValueError("CD-functions live on [0, inf)")
        if a == 0.0:
            return 0.0
        # G'(a) is the multiplier, so a multiplier-equation residual d maps to
        # a G error of about lam * d; since G(a) << a near zero, re-solve with
        # the residual tolerance rescaled to the actual G once it is known
        tol = max(1e-300, tol_rel * max(a, 1.0))
        lam = self.machine.inverse(a, tol)
        _, _, g = self.machine.eval(lam, tol, want_g=True)
        err_est = lam * tol
        target = tol_rel * max(g, 1e-300)
        if err_est > target and g > 0:
            tol2 = max(1e-300, 0.5 * target / max(lam, 1e-300))
            lam = self.machine.inverse(a, tol2)
            _, _, g = self.machine.eval(lam, tol2, want_g=True)
        return g

    # -- table ---------------------------------------------------------------

    def _rebuild(self):
        self._spline = PchipInterpolator(self._log_a, self._log_g, extrapolate=False)

    # the table never extends to smaller a than this: the multiplier there
    # would need direct sums past the radius budget for slowly decaying
    # kernels; the log-log tangent continues the exact power-law limit
    _A_FLOOR = 1e-4
    _KNOT_RATIO = math.exp(0.08)
    _KNOT_TOL = 1e-12  # absolute, on the multiplier equation at the knots

    def _knot(self, lam: float) -> tuple[float, float, float]:
        rho, drho, g = self.machine.eval(lam, self._KNOT_TOL, want_g=True)
        return rho, g, (1.0 / drho if math.isfinite(drho) and drho > 0 else 0.0)

    def _build_table(self, lam_lo: float, lam_hi: float) -> None:
        n = max(int(math.log(lam_hi / lam_lo) / math.log(self._KNOT_RATIO)) + 2, 8)
        lams = np.geomspace(lam_lo, lam_hi, n)
        rows = [self._knot(l) for l in lams]
        self._lam = lams
        self._a = np.array([r[0] for r in rows])
        self._g = np.array([r[1] for r in rows])
        self._d2 = np.array([r[2] for r in rows])
        self._rebuild()

    def _rebuild(self) -> None:
        from scipy.interpolate import BPoly

        yd = np.column_stack([self._g, self._lam, self._d2])
        self._poly = BPoly.from_derivatives(self._a, yd)
        ld = np.column_stack([self._lam, self._d2])
        self._lam_poly = BPoly.from_derivatives(self._a, ld)

    def _ensure_table(self, a: float) -> None:
        if self._lam is None:
            lam_lo = min(1.0, self.kernel.envelope(1.0))
            # walk the low end down until the table floor in a is reached (or
            # the radius budget refuses to go further)
            while True:
                try:
                    rho_lo, _, _ = self._knot(lam_lo)
                except ToleranceError:
                    lam_lo *= 10.0
                    rho_lo, _, _ = self._knot(lam_lo)
                    break
                if rho_lo <= self._A_FLOOR:
                    break
                lam_lo /= 10.0
            lam_hi = lam_lo
            target = max(a, 8.0 * self.l1)
            while self.machine.eval(lam_hi, self._KNOT_TOL)[0] < target:
                lam_hi *= 8.0
            self._build_table(lam_lo, lam_hi)
            return
        if a > self._a[-1]:
            lam_hi = self._lam[-1]
            while self.machine.eval(lam_hi, self._KNOT_TOL)[0] < a:
                lam_hi *= 8.0
            self._build_table(self._lam[0], lam_hi * self._KNOT_RATIO)

    def __call__(self, r):
        arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(arr)
        for i, a in enumerate(arr):
            out[i] = self._eval_one(float(a))
        return float(out[0]) if np.asarray(r).ndim == 0 else out

    def _eval_one(self, a: float) -> float:
        if a < 0:
            raise ValueError("CD-functions live on [0, inf)")
        if a == 0.0:
            return 0.0
        self._ensure_table(a)
        if a < self._a[0]:
            # log-log tangent continuation toward 0
            la0, la1 = math.log(self._a[0]), math.log(self._a[1])
            lg0, lg1 = math.log(self._g[0]), math.log(self._g[1])
            slope = (lg1 - lg0) / (la1 - la0)
            if self.small_exponent is not None:
                slope = max(slope, self.small_exponent)
            return math.exp(lg0 + slope * (math.log(a) - la0))
        return float(self._poly(a))

    def multiplier(self, a: float) -> float:
        """rho^{-1}(a) from the table (Hermite cubic between exact knots).

        Below the table floor the log-log tangent continues the curve, in the
        same way as the function values (the limit there is an exact power
        law, so the continuation error vanishes with a).
        """
        if a <= 0:
            return 0.0
        self._ensure_table(a)
        if a <= self._a[0]:
            s = (math.log(self._lam[1]) - math.log(self._lam[0])) / (
                math.log(self._a[1]) - math.log(self._a[0])
            )
            return math.exp(
                math.log(self._lam[0]) + s * (math.log(a) - math.log(self._a[0]))
            )
        return float(self._lam_poly(a))

    def derivative(self, r: float) -> float:
        # G' = rho^{-1}, the defining property of the construction
        return self.multiplier(r) if r > 0 else 0.0

    def describe(self) -> dict:
        d = super().describe()
        d.update(kernel=self.kernel.label, l1=self.l1, entropy_m=self.mk)
        return d


def lagrange_G(kernel: Kernel, rel_tol: float = 1e-9) -> LagrangeCD:
    """The optimal CD-function of the quadratic lower-bound route.

    Instances (and their spline tables) are cached on the kernel, so repeated
    requests share the refinement work.
    """
    key = ("lagrange_G", rel_tol)
    g = kernel._cache.get(key)
    if g is None:
        g = LagrangeCD(kernel, rel_tol)
        kernel._cache[key] = g
    return g


@dataclass(frozen=True)
class ExtremalProfile:
    """Optimal profile v_j = (H')^{-1}(rho^{-1}(a) / k(j)) on |j| <= radius."""

    js: np.ndarray
    vs: np.ndarray
    lam: float
    a: float
    kernel_label: str

    def constraint_sum(self, kernel: Kernel) -> float:
        return float(np.dot(kernel.rates(self.js), self.vs))

    def objective(self, kernel: Kernel) -> float:
        return float(np.dot(kernel.rates(self.js) ** 2, h_eval_arr(self.vs)))

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(j), float(v)) for j, v in zip(self.js, self.vs)]


def extremal_profile(kernel: Kernel, a: float, radius: int, tol: float = 1e-9) -> ExtremalProfile:
    """Equality case of the optimal bound, on the radius-truncated kernel.

    The profile is exact for the truncated kernel: its constraint sum equals
    ``a`` and its objective equals the truncated kernel's G(a) (both up to the
    multiplier root-finding tolerance).
    """
    if not a > 0:
        raise ValueError("extremal_profile needs a > 0")
    kt = kernel if (kernel.support.kind == "finite" and kernel.support.radius <= radius) else truncate(kernel, radius)
    lam = rho_inverse(kt, a, tol=min(tol, 1e-10))
    j = np.arange(-radius, radius + 1)
    k = kt.rates(j)
    mask = k > 0
    js = j[mask]
    vs = h_prime_inv_arr(lam / k[mask])
    return ExtremalProfile(js=js, vs=vs, lam=lam, a=a, kernel_label=kt.label)


def fhat_minorant_constant(
    G: CDFunction,
    gamma: float,
    delta: float,
    m_switch: float,
    a_lo: float = 1e-3,
    a_hi: float | None = None,
    n: int = 400,
) -> float:
    """Largest certified c with c * fhat <= G on a log grid (deflated 0.1%).

    Underestimating c is safe everywhere downstream: smaller c means a larger
    relaxation function and therefore weaker, still-valid bounds.
    """
    shape = FhatCD(1.0, gamma, delta, m_switch)
    if a_hi is None:
        a_hi = 80.0 / delta
    grid = np.logspace(math.log10(a_lo), math.log10(a_hi), n)
    vals = np.array([G(float(a)) / shape(float(a)) for a in grid])
    c = float(np.min(vals))
    if not c > 0:
        raise ValueError("minorant constant collapsed to zero on the grid")
    return 0.999 * c


def power_exponent(beta: float, eps: float = 0.05) -> float:
    """Small-argument exponent of the best available CD-function for the
    power-type kernel: (1+2 beta)/beta up to the golden ratio, then the
    moment route (beta-eps)/(beta-eps-1)."""
    if not (0.0 < beta < 2.0):
        raise ValueError("power_exponent needs beta in (0, 2)")
    if beta <= GOLDEN_BETA:
        return (1.0 + 2.0 * beta) / beta
    if not (0.0 < eps < beta - 1.0):
        raise ValueError("eps must lie in (0, beta - 1)")
    return (beta - eps) / (beta - eps - 1.0)


def power_cd(
    beta: float,
    eps: float = 0.05,
    which: str = "power_kernel",
    budget: int = 4000,
    seed: int = 0,
) -> FhatCD:
    """fhat-kind CD-function certified for the power-type or fractional kernel.

    The exponents are analytic; the prefactor is an empirically certified
    lower bound (grid infimum against the kernel's optimal G below the golden
    ratio; above it, the moment-route constant is calibrated by adversarial
    search, which can only overestimate the admissible constant's reciprocal,
    and a 10% deflation absorbs that bias).
    """
    if which not in ("power_kernel", "fractional"):
        raise ValueError("which must be power_kernel or fractional")
    from .kernels import make_kernel

    family = "power" if which == "power_kernel" else "fractional"
    kernel = make_kernel({"family": family, "params": {"beta": beta}})
    gamma = power_exponent(beta, eps)
    g_fun = lagrange_G(kernel)
    l1 = g_fun.l1
    delta = 1.0 / l1
    m_switch = 2.0 * l1
    if beta <= GOLDEN_BETA:
        c = fhat_minorant_constant(g_fun, gamma, delta, m_switch)
        return FhatCD(c, gamma, delta, m_switch)
    # moment-route exponent: only the exponential branch is covered by G;
    # the power branch constant comes from the adversarial dimension search
    from .verify import certify_d

    d_hat = certify_d(kernel, gamma, window=24, budget=budget, seed=seed)
    c_small = math.exp(-delta * m_switch) / (1.1 * d_hat)
    shape_tail = np.logspace(math.log10(m_switch), math.log10(60.0 * l1), 200)
    tail_ratio = np.array(
        [g_fun(float(x)) / (m_switch**gamma * math.exp(delta * x)) for x in shape_tail]
    )
    c_tail = 0.999 * float(np.min(tail_ratio))
    return FhatCD(min(c_small, c_tail), gamma, delta, m_switch)


# ---------------------------------------------------------------------------
# relaxation functions
# ---------------------------------------------------------------------------


class RelaxationFunction:
    """phi with phi' = -F(phi), phi(0+) = inf; strictly decreasing."""

    kind: str = "abstract"
    log_singular: bool = False

    def __call__(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def integral(self, t1: float, t2: float) -> float:  # pragma: no cover
        raise NotImplementedError


class FhatRelaxation(RelaxationFunction):
    """Closed form for F = fhat(c, gamma, delta, M):

    phi(t) = -(1/delta) log(c delta M^gamma t)            on (0, t_star],
             (c (gamma-1) e^(delta M) t + C)^(-1/(gamma-1)) beyond,

    with t_star = M^(-gamma) e^(-delta M) / (c delta) and
    C = M^(-gamma) (M - (gamma-1)/delta); both branches meet at phi = M.
    """

    kind = "closed_form_fhat"
    log_singular = True

    def __init__(self, F: FhatCD):
        self.F = F
        c, g, d, m = F.c, F.gamma, F.delta, F.m_switch
        self.t_star = m**-g * math.exp(-d * m) / (c * d)
        self.C = m**-g * (m - (g - 1.0) / d)
        self._k_log = c * d * m**g
        self._a_pow = c * (g - 1.0) * math.exp(d * m)

    def __call__(self, t: float) -> float:
        if not t > 0:
            raise ValueError("relaxation functions live on (0, inf)")
        if t <= self.t_star:
            return -math.log(self._k_log * t) / self.F.delta
        return (self._a_pow * t + self.C) ** (-1.0 / (self.F.gamma - 1.0))

    def _int_log(self, t1: float, t2: float) -> float:
        # integral of -(1/d) log(K s): -(1/d)[s(log(K s) - 1)]
        def anti(s: float) -> float:
            if s == 0.0:
                return 0.0
            return -(s * (math.log(self._k_log * s) - 1.0)) / self.F.delta

        return anti(t2) - anti(t1)

    def _int_pow(self, t1: float, t2: float) -> float:
        a, c_ = self._a_pow, self.C
        g = self.F.gamma
        if g == 2.0:
            return (math.log(a * t2 + c_) - math.log(a * t1 + c_)) / a
        p = (g - 2.0) / (g - 1.0)
        return ((a * t2 + c_) ** p - (a * t1 + c_) ** p) * (g - 1.0) / (a * (g - 2.0))

    def integral(self, t1: float, t2: float) -> float:
        """integral of phi over [t1, t2]; t1 = 0 allowed (log singularity)."""
        if t1 < 0 or t2 < t1:
            raise ValueError("need 0 <= t1 <= t2")
        ts = self.t_star
        lo, hi = t1, t2
        total = 0.0
        if lo < ts:
            total += self._int_log(lo, min(hi, ts))
        if hi > ts:
            total += self._int_pow(max(lo, ts), hi)
        return total


class NumericRelaxation(RelaxationFunction):
    """phi from the tabulated decay clock T(x) = integral_x^inf dr / F(r).

    phi(t) solves T(phi(t)) = t.  The clock values come from per-interval
    Gauss-Legendre integration on a geometric grid (step shrinking where
    exponential growth makes the clock fall fastest); the interpolant through
    them is a cubic Hermite with the *exact* derivative T'(x) = -1/F(x) at
    every knot.  Inversion bisects the interpolated clock to relative
    interval width 1e-10 in log x.  The companion table of
    R(x) = integral_x^inf r/F(r) dr turns time integrals of phi into
    differences (enabling t1 = 0 whenever that integral converges, i.e. for
    genuinely exponential growth).
    """

    kind = "numeric"

    _GL_NODES = np.array(
        [-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
         -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
         0.7966664774136267, 0.9602898564975363]
    )
    _GL_WEIGHTS = np.array(
        [0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
         0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
         0.2223810344533745, 0.1012285362903763]
    )

    def __init__(self, F: CDFunction, x_lo: float | None = None, x_hi: float | None = None,
                 base_log_step: float = 0.03):
        from scipy.interpolate import BPoly

        if not F.inverse_integrable_at_inf():
            raise ValueError("1/F is not certified integrable at infinity")
        self.F = F
        gamma = F.small_exponent if F.small_exponent is not None else 2.0
        if x_hi is None:
            if F.growth_delta is not None:
                pref = F.growth_prefactor if F.growth_prefactor else 1.0
                x_hi = (math.log(1e18) + abs(math.log(pref))) / F.growth_delta + 10.0
            else:
                c_eff = F(1.0)
                x_hi = (1e18 * c_eff * (gamma - 1.0)) ** (1.0 / (gamma - 1.0)) + 10.0
        if x_lo is None:
            x_lo = min(1e-8, 1e-3 * x_hi)
        self.log_singular = F.growth_delta is not None
        u_lo, u_hi = math.log(x_lo), math.log(x_hi)
        us_list = [u_lo]
        while us_list[-1] < u_hi:
            step = base_log_step
            if F.growth_delta is not None:
                step = min(step, 0.02 / max(F.growth_delta * math.exp(us_list[-1]), 1e-9))
            us_list.append(us_list[-1] + max(step, 1e-5))
        us = np.asarray(us_list)
        us[-1] = u_hi
        self._xs = np.exp(us)  # increasing
        f_x = np.asarray(self.F(self._xs), dtype=float)
        inv_f_x = 1.0 / f_x
        # per-interval GL of (1/F)(e^u) e^u du, accumulated from the right so
        # ts[i] = T(xs[i]); ts is decreasing in x
        inv_f = lambda r: 1.0 / np.asarray(self.F(r), dtype=float)
        t_steps = self._gl_intervals(us, lambda u: inv_f(np.exp(u)) * np.exp(u))
        tail_t = self._tail_inv_f(float(self._xs[-1]))
        self._ts = np.concatenate([np.cumsum(t_steps[::-1])[::-1], [0.0]]) + tail_t
        # Hermite interpolation with exact T' = -1/F; where F' is available the
        # table is quintic (T'' = F'/F^2), else cubic
        fp = [F.derivative(float(x)) for x in self._xs]
        if all(v is not None for v in fp):
            fp_x = np.asarray(fp, dtype=float)
            t_cols = np.column_stack([self._ts, -inv_f_x, fp_x * inv_f_x**2])
        else:
            fp_x = None
            t_cols = np.column_stack([self._ts, -inv_f_x])
        self._t_of_x = BPoly.from_derivatives(self._xs, t_cols)
        tail_r = self._tail_r_over_f(float(self._xs[-1]))
        if tail_r is not None:
            r_steps = self._gl_intervals(us, lambda u: inv_f(np.exp(u)) * np.exp(2.0 * u))
            self._rs = np.concatenate([np.cumsum(r_steps[::-1])[::-1], [0.0]]) + tail_r
            if fp_x is not None:
                # R' = -x/F, R'' = (x F' - F)/F^2
                r_cols = np.column_stack(
                    [self._rs, -self._xs * inv_f_x, (self._xs * fp_x - f_x) * inv_f_x**2]
                )
            else:
                r_cols = np.column_stack([self._rs, -self._xs * inv_f_x])
            self._r_of_x = BPoly.from_derivatives(self._xs, r_cols)
        else:
            self._rs = None
            self._r_of_x = None

    def _gl_intervals(self, us: np.ndarray, fn) -> np.ndarray:
        mid = 0.5 * (us[:-1] + us[1:])
        half = 0.5 * np.diff(us)
        nodes = mid[:, None] + half[:, None] * self._GL_NODES[None, :]
        vals = fn(nodes.ravel()).reshape(nodes.shape)
        return half * np.dot(vals, self._GL_WEIGHTS)

    def _tail_inv_f(self, x: float) -> float:
        F = self.F
        if F.growth_delta is not None:
            # 1/F(r) <= (1/F(x)) e^(-delta (r-x)) for r >= x (F(r)/e^(delta r)
            # is asymptotically constant; beyond the table edge this is exact
            # to table accuracy)
            return 1.0 / (float(F(x)) * F.growth_delta)
        gamma = F.small_exponent
        return x / (float(F(x)) * (gamma - 1.0))

    def _tail_r_over_f(self, x: float) -> float | None:
        F = self.F
        if F.growth_delta is not None:
            d = F.growth_delta
            return (x + 1.0 / d) / (float(F(x)) * d)
        gamma = F.small_exponent
        if gamma <= 2.0:
            return None  # r/F(r) ~ r^(1-gamma) not integrable
        return x * x / (float(F(x)) * (gamma - 2.0))

    def __call__(self, t: float) -> float:
        if not t > 0:
            raise ValueError("relaxation functions live on (0, inf)")
        if t < self._ts[-1] or t > self._ts[0]:
            raise ValueError(
                f"t={t:g} outside the tabulated clock range [{self._ts[-1]:g}, {self._ts[0]:g}]"
            )
        # bisection in log x on the interpolated monotone clock (well below
        # the 1e-10 interval-width requirement), then a Newton polish with the
        # interpolant's own derivative to remove the quantisation entirely
        a, b = math.log(float(self._xs[0])), math.log(float(self._xs[-1]))
        for _ in range(200):
            if b - a <= 1e-12 * max(1.0, abs(a), abs(b)):
                break
            m = 0.5 * (a + b)
            if float(self._t_of_x(math.exp(m))) > t:  # clock too large -> x too small
                a = m
            else:
                b = m
        x = math.exp(0.5 * (a + b))
        dT = self._t_of_x.derivative()
        for _ in range(2):
            f = float(self._t_of_x(x)) - t
            d = float(dT(x))
            if d >= 0.0:
                break
            x_new = x - f / d
            if not (math.exp(a) * 0.5 <= x_new <= math.exp(b) * 2.0):
                break
            x = x_new
        return x

    def _clock(self, x: float) -> float:
        """Interpolated T(x)."""
        return float(self._t_of_x(x))

    def integral(self, t1: float, t2: float) -> float:
        """integral of phi over [t1, t2] via the r/F companion table."""
        if t1 < 0 or t2 < t1:
            raise ValueError("need 0 <= t1 <= t2")
        if t1 == t2:
            return 0.0
        if t1 == 0.0:
            if self._rs is None or not self.log_singular:
                raise ValueError("integral from t1 = 0 requires an integrable singularity")
            x2 = self(t2)
            return self._r_value(x2)
        x1, x2 = self(t1), self(t2)
        return self._r_value(x2) - self._r_value(x1)

    def _r_value(self, x: float) -> float:
        if self._r_of_x is None:
            raise ValueError("r/F table unavailable (non-integrable at infinity)")
        return float(self._r_of_x(x))


def relaxation(F: CDFunction) -> RelaxationFunction:
    """The relaxation function of F: closed form for fhat, tabulated else."""
    if isinstance(F, FhatCD):
        return FhatRelaxation(F)
    if isinstance(F, ScaledCD) and isinstance(F.base, FhatCD):
        return FhatRelaxation(F.base.scaled(F.factor))
    if not F.inverse_integrable_at_inf():
        raise ValueError("F lacks an integrability certificate at infinity")
    return NumericRelaxation(F)
