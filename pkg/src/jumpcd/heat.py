"""Heat semigroup on a truncated lattice window.

The infinite-lattice equation du/dt = L u is approximated on [-W, W] by a
dense generator matrix (the kernel is long range, so there is no sparsity to
exploit).  Two truncations are exposed and every consumer names its mode:

``conservative``
    off-diagonal rates k(x-y) inside the window, diagonal = minus the row
    sum.  A genuine Markov generator on the window: mass is conserved, the
    semigroup is stochastic, and probabilistic identities (symmetry,
    Chapman-Kolmogorov) hold exactly for the truncated system.

``killed``
    same off-diagonal rates but the full rate |k|_1 on the diagonal, so jumps
    leaving the window are lost.  The resulting kernel is a pointwise lower
    bound for the infinite-lattice heat kernel, which is what one wants when
    checking lower bounds.

Solutions use the scaling-and-squaring matrix exponential; positivity of the
output is verified, never enforced by clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .kernels import Kernel, kernel_aggregate

__all__ = ["GeneratorMatrix", "HeatSolution", "build_generator", "solve_heat", "heat_kernel"]


@dataclass(frozen=True)
class GeneratorMatrix:
    window: int
    mode: str  # "conservative" | "killed"
    matrix: np.ndarray  # (2W+1)^2 dense
    kernel_label: str

    @property
    def size(self) -> int:
        return 2 * self.window + 1

    def sites(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)


@dataclass(frozen=True)
class HeatSolution:
    window: int
    mode: str
    times: np.ndarray  # increasing, length T
    values: np.ndarray  # (T, 2W+1)
    initial: np.ndarray  # (2W+1,)
    kernel_label: str
    initial_exterior: float = 0.0

    def at(self, t_index: int) -> np.ndarray:
        return self.values[t_index]

    def sites(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)

    def to_csv(self, path: str) -> None:
        """Columns t, x, value; generator metadata in a leading comment."""
        sites = self.sites()
        with open(path, "w", newline="") as fh:
            fh.write(
                f"# generator: mode={self.mode} window={self.window} "
                f"kernel={self.kernel_label}\n"
            )
            fh.write("t,x,value\n")
            for ti, t in enumerate(self.times):
                row = self.values[ti]
                for x, v in zip(sites, row):
                    fh.write(f"{t:.17g},{x},{v:.17g}\n")


def build_generator(kernel: Kernel, window: int, mode: str = "conservative") -> GeneratorMatrix:
    """Dense (2W+1)^2 truncated generator; O(W^2) construction."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if mode not in ("conservative", "killed"):
        raise ValueError(f"unknown generator mode {mode!r}")
    n = 2 * window + 1
    sites = np.arange(-window, window + 1)
    diffs = sites[:, None] - sites[None, :]
    q = kernel.rates(diffs.ravel()).reshape(n, n)
    np.fill_diagonal(q, 0.0)
    if mode == "conservative":
        np.fill_diagonal(q, -q.sum(axis=1))
    else:
        total = kernel_aggregate(kernel, "l1", 1e-13)
        np.fill_diagonal(q, -total)
    return GeneratorMatrix(window=window, mode=mode, matrix=q, kernel_label=kernel.label)


def solve_heat(
    gen: GeneratorMatrix,
    u0: np.ndarray,
    times: np.ndarray,
    allow_nonnegative: bool = False,
    initial_exterior: float = 0.0,
) -> HeatSolution:
    """u(t) = exp(t Q) u0 on the window, for each requested time.

    ``u0`` must be strictly positive (``allow_nonnegative=True`` relaxes this
    to nonnegative-and-not-identically-zero, used by the heat-kernel
    constructor whose initial datum is a point mass).  If any output entry
    fails to be positive for t > 0 the solve aborts: accuracy must make
    clipping unnecessary, and a negative entry is reported, never hidden.
    """
    u0 = np.asarray(u0, dtype=float)
    times = np.asarray(times, dtype=float)
    if u0.shape != (gen.size,):
        raise ValueError(f"u0 must have shape ({gen.size},)")
    if np.any(u0 < 0.0) or not np.any(u0 > 0.0):
        raise ValueError("initial data must be nonnegative and not identically zero")
    if not allow_nonnegative and not np.all(u0 > 0.0):
        raise ValueError("initial data must be strictly positive")
    if np.any(times < 0.0) or np.any(np.diff(times) < 0.0):
        raise ValueError("times must be nonnegative and nondecreasing")
    out = np.empty((times.size, gen.size))
    # group by time; exp(tQ) by scaling-and-squaring, reusing increments when
    # the grid repeats a spacing would complicate error control, so each
    # distinct time gets its own exponential (desk-scale cost)
    cache: dict = {}
    for i, t in enumerate(times):
        if t == 0.0:
            out[i] = u0
            continue
        key = float(t)
        if key not in cache:
            cache[key] = expm(gen.matrix * t)
        out[i] = cache[key] @ u0
        if np.any(out[i] <= 0.0) and not np.all(u0 > 0.0):
            # point-mass data in killed mode can underflow to 0 far from the
            # source at tiny times; treat exact zeros as a reporting error
            # only when they are negative
            if np.any(out[i] < 0.0):
                raise ArithmeticError(
                    f"matrix exponential produced a negative component at t={t:g}"
                )
        elif np.any(out[i] <= 0.0):
            raise ArithmeticError(
                f"positivity lost at t={t:g}: min component {out[i].min():g}"
            )
    return HeatSolution(
        window=gen.window,
        mode=gen.mode,
        times=times,
        values=out,
        initial=u0,
        kernel_label=gen.kernel_label,
        initial_exterior=initial_exterior,
    )


def heat_kernel(gen: GeneratorMatrix, x0: int, times: np.ndarray) -> HeatSolution:
    """p_t(., x0): the solution from a unit point mass at x0.

    In conservative mode the rows are probability distributions (mass exactly
    1); in killed mode the values lower-bound the infinite-lattice kernel on
    the window interior.
    """
    if abs(x0) > gen.window:
        raise ValueError(f"x0={x0} outside window [-{gen.window}, {gen.window}]")
    u0 = np.zeros(gen.size)
    u0[x0 + gen.window] = 1.0
    sol = solve_heat(gen, u0, times, allow_nonnegative=True)
    return HeatSolution(
        window=sol.window,
        mode=sol.mode,
        times=sol.times,
        values=sol.values,
        initial=u0,
        kernel_label=sol.kernel_label,
    )
