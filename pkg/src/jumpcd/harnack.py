"""Harnack path sums, optimal intermediate points, and heat-kernel bounds.

For positive solutions obeying the differential Harnack estimate
d/dt log u >= psi_ups(log u) - phi(t), values at (t1, x1) and (t2, x2) are
linked through any chain of distinct points y_0 = x1, ..., y_N = x2 with
positive step rates:

    u(t1,x1) <= u(t2,x2) * exp( int_t1^t2 phi + 2 S / (t2 - t1) ),

with the path sum S = N * sum_i 1/k(y_i - y_{i-1}).  Minimising S is a small
combinatorial problem; this module solves it exactly by per-length dynamic
programming, classifies the regime through the elasticity of q = 1/k
(elasticity <= 2 everywhere favours the direct jump, >= 2 unit steps), and
assembles two-sided heat-kernel bounds from the closed-form relaxation
integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import psi as digamma

from .cdfuncs import FhatCD, FhatRelaxation, RelaxationFunction
from .kernels import Kernel

__all__ = [
    "HarnackPath",
    "harnack_sum",
    "optimize_path",
    "RegimeVerdict",
    "step_regime",
    "harnack_rhs",
    "HeatBounds",
    "heat_bounds",
]


@dataclass(frozen=True)
class HarnackPath:
    points: tuple
    step_rates: tuple
    value: float  # S = N * sum 1/rate

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def recompute(self, kernel: Kernel) -> float:
        rates = [kernel.rate(b - a) for a, b in zip(self.points[:-1], self.points[1:])]
        return self.steps * sum(1.0 / r for r in rates)


def harnack_sum(kernel: Kernel, points) -> HarnackPath:
    """S = N * sum_i 1/k(y_i - y_{i-1}) for an explicit chain of points."""
    pts = [int(p) for p in points]
    if len(pts) < 2:
        raise ValueError("a path needs at least two points")
    if len(set(pts)) != len(pts):
        raise ValueError("path points must be distinct")
    rates = []
    for i, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        r = kernel.rate(b - a)
        if r <= 0.0:
            raise ValueError(f"step {i} ({a} -> {b}) has zero rate")
        rates.append(r)
    n = len(pts) - 1
    s = n * math.fsum(1.0 / r for r in rates)
    return HarnackPath(points=tuple(pts), step_rates=tuple(rates), value=s)


def optimize_path(
    kernel: Kernel,
    x1: int,
    x2: int,
    window_ext: int = 0,
    n_max: int | None = None,
) -> HarnackPath:
    """Exact minimiser of the path sum between x1 and x2.

    Points range over [min(x1,x2) - window_ext, max(x1,x2) + window_ext];
    lengths run up to ``n_max`` (default: span + 2*window_ext).  Dynamic
    programming per fixed length over walk endpoints: any revisiting walk
    loop-erases to a strictly cheaper distinct path at a smaller length, so
    the walk optimum equals the distinct-path optimum.  Ties break toward
    fewer steps, then the lexicographically smallest point sequence (the
    reconstruction scans successors in increasing order against backward
    suffix costs).
    """
    if x1 == x2:
        raise ValueError("endpoints must differ")
    lo = min(x1, x2) - window_ext
    hi = max(x1, x2) + window_ext
    span = hi - lo
    if n_max is None:
        n_max = span
    n_max = max(1, min(n_max, span + 2 * window_ext + 2))
    sites = np.arange(lo, hi + 1)
    npts = sites.size
    rates = kernel.rates(sites[:, None] - sites[None, :])
    with np.errstate(divide="ignore"):
        q = np.where(rates > 0.0, 1.0 / rates, np.inf)  # q[a, b]: cost of a -> b
    i1, i2 = x1 - lo, x2 - lo
    q_min = float(np.min(q[q > 0.0])) if np.any(np.isfinite(q)) else math.inf

    # suffix costs: cost[n][y] = min over n-step walks y -> x2
    best_s = math.inf
    best_n = 0
    suffix = [np.full(npts, math.inf)]
    suffix[0][i2] = 0.0
    for n in range(1, n_max + 1):
        prev = suffix[n - 1]
        nxt = np.min(q + prev[None, :], axis=1)
        nxt[np.isnan(nxt)] = math.inf
        suffix.append(nxt)
        total = n * nxt[i1]
        if math.isfinite(total) and total < best_s:  # strict: ties keep smaller n
            best_s = total
            best_n = n
        # pruning: any longer walk costs at least n^2 q_min
        if math.isfinite(best_s) and (n + 1) ** 2 * q_min > best_s:
            break
    if not math.isfinite(best_s):
        raise ValueError(
            f"no admissible path from {x1} to {x2} within window_ext={window_ext}"
        )
    # forward reconstruction, smallest next point among optimal successors
    pts = [x1]
    pos = i1
    for n in range(best_n, 0, -1):
        target = suffix[n][pos]
        nxt_candidates = np.nonzero(
            np.isclose(q[pos] + suffix[n - 1], target, rtol=1e-12, atol=1e-300)
        )[0]
        pos = int(nxt_candidates[0])
        pts.append(int(sites[pos]))
    # walks can in principle revisit on exact ties; loop-erase to keep the
    # distinct-point invariant (never increases S)
    seen: dict = {}
    out: list = []
    for p in pts:
        if p in seen:
            del out[seen[p] + 1 :]
            seen = {v: i for i, v in enumerate(out)}
        else:
            out.append(p)
            seen[p] = len(out) - 1
    return harnack_sum(kernel, out)


@dataclass(frozen=True)
class RegimeVerdict:
    regime: str  # "direct" | "unit" | "mixed"
    direct_optimal: bool
    unit_optimal: bool
    elasticity: np.ndarray  # samples of q'(y) y / q(y) on [1, M]
    grid: np.ndarray
    convex_ok: bool


def _elasticity(kernel: Kernel, y: np.ndarray) -> np.ndarray:
    fam = kernel.family
    p = kernel.params
    if fam == "power":
        return np.full(y.shape, 1.0 + p["beta"])
    if fam == "fractional":
        b = p["beta"]
        return y * (digamma(y + 1.0 + b / 2.0) - digamma(y - b / 2.0))
    if fam == "exponential":
        return p["alpha"] * y
    if fam == "log":
        a = p["alpha"]
        return 1.0 + (1.0 + a) * y / ((1.0 + y) * np.log1p(y))
    raise ValueError(
        f"no smooth rate interpolant is defined for the {fam!r} family"
    )


def step_regime(kernel: Kernel, m_span: int, grid_points: int = 512) -> RegimeVerdict:
    """Classify the optimal-step regime over distance ``m_span``.

    Requires a kernel that is non-increasing on the positive axis with a
    convex smooth interpolant q of 1/k; elasticity q'(y) y / q(y) at most 2
    on [1, M] certifies the direct jump, at least 2 certifies unit steps,
    and a crossing means the optimum depends on the distance.
    """
    if m_span < 1:
        raise ValueError("m_span must be >= 1")
    j = np.arange(1, max(m_span, 2) + 1)
    k = kernel.rates(j)
    if np.any(k[:-1] < k[1:]) or np.any(k <= 0.0):
        raise ValueError(
            "step_regime needs a kernel that is positive and non-increasing "
            f"on [1, {m_span}]"
        )
    y = np.linspace(1.0, float(m_span), grid_points)
    e = _elasticity(kernel, y)
    # convexity of q on the grid (second differences of the interpolant)
    q = 1.0 / kernel.rates(j) if kernel.family not in ("power", "fractional", "exponential", "log") else None
    if q is not None and j.size >= 3:
        convex_ok = bool(np.all(np.diff(q, 2) >= -1e-12))
    else:
        ys = np.linspace(1.0, float(m_span), 128)
        fam, p = kernel.family, kernel.params
        if fam == "power":
            qv = ys ** (1.0 + p["beta"])
        elif fam == "exponential":
            qv = np.exp(p["alpha"] * ys)
        elif fam == "fractional":
            from scipy.special import gammaln

            b = p["beta"]
            qv = np.exp(gammaln(ys + 1.0 + b / 2.0) - gammaln(ys - b / 2.0)) / p["c_beta"]
        else:
            qv = ys * np.log1p(ys) ** (1.0 + p["alpha"])
        convex_ok = bool(np.all(np.diff(qv, 2) >= -1e-9 * np.abs(qv[2:])))
    direct = bool(np.all(e <= 2.0 + 1e-12))
    unit = bool(np.all(e >= 2.0 - 1e-12))
    if direct and not unit:
        regime = "direct"
    elif unit and not direct:
        regime = "unit"
    elif direct and unit:
        regime = "direct"  # elasticity identically 2: both are optimal
    else:
        regime = "mixed"
    return RegimeVerdict(
        regime=regime,
        direct_optimal=direct,
        unit_optimal=unit,
        elasticity=e,
        grid=y,
        convex_ok=convex_ok,
    )


def harnack_rhs(
    kernel: Kernel,
    phi: RelaxationFunction,
    t1: float,
    t2: float,
    path: HarnackPath,
    tol: float = 1e-10,
) -> float:
    """The Harnack multiplier exp(int_t1^t2 phi + 2 S / (t2 - t1)).

    t1 = 0 is admitted when phi is integrable at 0 (true for the logarithmic
    singularity of the closed-form and exponential-growth relaxations).
    """
    if not (0.0 <= t1 < t2):
        raise ValueError("need 0 <= t1 < t2")
    if t1 == 0.0 and not phi.log_singular:
        raise ValueError("t1 = 0 needs an integrable (logarithmic) singularity of phi")
    time_part = phi.integral(t1, t2)
    jump_part = 2.0 * path.value / (t2 - t1)
    return math.exp(time_part + jump_part)


@dataclass(frozen=True)
class HeatBounds:
    t: float
    lower: float
    upper: float | None
    upper_undefined_reason: str | None
    lam_t: float  # accumulated relaxation integral Lambda(t)
    c0: float  # computed constant with phi(s) <= c0 s^(-1/(gamma-1))
    c0_grid: tuple
    c_t_nu: float
    proof_rate_constant: str  # which in-rate enters the upper bound
    statement_rate_constant: str
    params: dict


def _c0_constant(phi: FhatRelaxation, gamma: float) -> tuple[float, tuple]:
    # smallest c0 with phi(s) <= c0 s^(-1/(gamma-1)) along a log grid; the
    # product tends to a finite limit at infinity and to 0 at 0+, and the 1%
    # inflation absorbs the grid gap
    grid = np.logspace(-8, 8, 1201)
    vals = np.array([phi(float(s)) * float(s) ** (1.0 / (gamma - 1.0)) for s in grid])
    limit = phi._a_pow ** (-1.0 / (gamma - 1.0))
    c0 = 1.01 * max(float(np.max(vals)), limit)
    return c0, (float(grid[0]), float(grid[-1]), grid.size)


def heat_bounds(
    t: float,
    params: dict,
    x_minus_y: int,
    tol: float = 1e-9,
) -> HeatBounds:
    """Two-sided heat-kernel bounds from the certified fhat wiring.

    ``params`` carries c, gamma, delta, nu, k1 (the unit-step rate) and l1
    (|k|_1).  The switch point is pinned at M = 2/delta; phi is the
    closed-form relaxation of c * fhat, so

        lower(t) = exp(-(Lambda(t) + 2 |x-y|^2 / (k1 t))),
        upper(t) = exp(c0 nu + 2/k1) / (2 floor(sqrt(c(t,nu) - t))),

    with Lambda(t) the exact integral of phi from 0 to t (closed form on both
    branches, cross-checked by quadrature in the tests) and
    c(t,nu) = e^nu t for gamma = 2, the power-mean form for gamma > 2.  The
    step-rate constant follows the unit-step chain (2/k1); the variant with
    2/l1 is reported alongside.  A c(t,nu) - t below 1 leaves the floor at
    zero and the upper bound undefined; that is signalled, not fabricated.
    """
    c, gamma, delta, nu = params["c"], params["gamma"], params["delta"], params["nu"]
    k1, l1 = params["k1"], params["l1"]
    if not (t > 0 and c > 0 and gamma >= 2.0 and delta > 0 and nu >= 0 and k1 > 0):
        raise ValueError("heat_bounds needs t, c, delta, k1 > 0, gamma >= 2, nu >= 0")
    m_switch = 2.0 / delta
    shape = FhatCD(c, gamma, delta, m_switch)
    phi = FhatRelaxation(shape)
    lam_t = phi.integral(0.0, t)
    lower = math.exp(-(lam_t + 2.0 * x_minus_y**2 / (k1 * t)))
    c0, c0_grid = _c0_constant(phi, gamma)
    if gamma == 2.0:
        c_t_nu = math.exp(nu) * t
    else:
        p = (gamma - 2.0) / (gamma - 1.0)
        c_t_nu = (p * nu + t**p) ** (1.0 / p)
    upper = None
    reason = None
    gap = c_t_nu - t
    floor = math.floor(math.sqrt(gap)) if gap > 0 else 0
    if floor < 1:
        reason = (
            f"c(t,nu) - t = {gap:g} < 1: the spatial ball is empty and the "
            "upper bound is undefined for this (t, nu)"
        )
    else:
        upper = math.exp(c0 * nu + 2.0 / k1) / (2.0 * floor)
    return HeatBounds(
        t=t,
        lower=lower,
        upper=upper,
        upper_undefined_reason=reason,
        lam_t=lam_t,
        c0=c0,
        c0_grid=c0_grid,
        c_t_nu=c_t_nu,
        proof_rate_constant=f"2/k(1) = {2.0 / k1:g}",
        statement_rate_constant=f"2/|k|_1 = {2.0 / l1:g}",
        params=dict(params),
    )
