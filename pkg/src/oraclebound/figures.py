"""Figure data generators and matplotlib rendering.

Two families: smoothing profiles of a one-dimensional piecewise-linear
function at several smoothing levels, and level-set grids of powers of the
l1-norm in the plane.  Data is emitted as CSV columns; the render helpers
draw the same data to PNG files next to the CSVs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "PiecewiseLinear1D",
    "DEFAULT_PROFILE",
    "smoothing_columns",
    "levelset_columns",
    "render_smoothing",
    "render_levelsets",
    "render_run_curve",
]


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """Convex ``g(x) = max_k (slope_k * x + intercept_k)`` with slopes in [-1, 1]."""

    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]

    def __post_init__(self):
        if len(self.slopes) != len(self.intercepts) or not self.slopes:
            raise InputError("need matching, nonempty slope and intercept lists")
        if any(abs(a) > 1.0 for a in self.slopes):
            raise InputError("slopes must lie in [-1, 1] to keep g 1-Lipschitz")
        if len(set(self.slopes)) != len(self.slopes):
            raise InputError("slopes must be distinct")

    def __call__(self, x: float) -> float:
        return max(a * x + b for a, b in zip(self.slopes, self.intercepts))

    def _upper_hull(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Active pieces sorted by slope and the breakpoints between them."""
        order = np.argsort(self.slopes)
        a = np.asarray(self.slopes, dtype=float)[order]
        b = np.asarray(self.intercepts, dtype=float)[order]
        keep_a, keep_b = [a[0]], [b[0]]
        for ai, bi in zip(a[1:], b[1:]):
            # drop pieces that never attain the max
            while keep_a:
                x_cross = (keep_b[-1] - bi) / (ai - keep_a[-1])
                if len(keep_a) == 1:
                    break
                x_prev = (keep_b[-2] - keep_b[-1]) / (keep_a[-1] - keep_a[-2])
                if x_cross > x_prev:
                    break
                keep_a.pop()
                keep_b.pop()
            keep_a.append(ai)
            keep_b.append(bi)
        a = np.array(keep_a)
        b = np.array(keep_b)
        breaks = (b[:-1] - b[1:]) / (a[1:] - a[:-1])
        return a, b, breaks

    def smooth(self, x: float, mu: float) -> float:
        """Exact quadratic smoothing value at ``x``.

        The inner minimizer z satisfies ``mu*(z - x) = -g'(z)``; scanning the
        hull pieces (z interior, slope fixed) and breakpoints (z pinned,
        subgradient interval) finds it exactly.
        """
        if mu <= 0:
            raise InputError(f"smoothing parameter must be > 0, got {mu}")
        a, b, breaks = self._upper_hull()
        lo = np.concatenate(([-np.inf], breaks))
        hi = np.concatenate((breaks, [np.inf]))
        z = None
        for ai, lo_i, hi_i in zip(a, lo, hi):
            cand = x - ai / mu
            if lo_i <= cand <= hi_i:
                z = cand
                break
        if z is None:
            for j, bp in enumerate(breaks):
                if a[j] / mu <= x - bp <= a[j + 1] / mu:
                    z = bp
                    break
        if z is None:  # strong convexity guarantees a minimizer; guard round-off
            candidates = np.concatenate((x - a / mu, breaks))
            vals = [self(c) + 0.5 * mu * (c - x) ** 2 for c in candidates]
            z = candidates[int(np.argmin(vals))]
        return self(z) + 0.5 * mu * (z - x) ** 2


DEFAULT_PROFILE = PiecewiseLinear1D(
    slopes=(-1.0, -0.25, 0.5, 1.0),
    intercepts=(-0.6, 0.0, -0.35, -1.1),
)


def smoothing_columns(
    profile: PiecewiseLinear1D,
    mus: list[float],
    x_lo: float = -2.0,
    x_hi: float = 2.0,
    samples: int = 401,
) -> tuple[list[str], np.ndarray]:
    """Grid columns (x, g, one smoothed column per mu)."""
    if not mus or any(m <= 0 for m in mus):
        raise InputError("need at least one positive smoothing level")
    if samples < 2 or not x_hi > x_lo:
        raise InputError("need an increasing range with at least two samples")
    xs = np.linspace(x_lo, x_hi, samples)
    columns = [xs, np.array([profile(x) for x in xs])]
    header = ["x", "g"]
    for mu in mus:
        columns.append(np.array([profile.smooth(x, mu) for x in xs]))
        header.append(f"smoothed_mu_{mu:g}")
    return header, np.column_stack(columns)


def levelset_columns(
    powers: list[float],
    extent: float = 1.5,
    samples: int = 101,
) -> tuple[list[str], np.ndarray]:
    """Plane grid columns (x1, x2, one ``||x||_1^p`` column per power)."""
    if not powers or any(p <= 0 for p in powers):
        raise InputError("need at least one positive power")
    if samples < 2 or extent <= 0:
        raise InputError("need a positive extent and at least two samples")
    axis = np.linspace(-extent, extent, samples)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    columns = [x1.ravel(), x2.ravel()]
    header = ["x1", "x2"]
    base = np.abs(x1) + np.abs(x2)
    for p in powers:
        columns.append((base**p).ravel())
        header.append(f"norm1_pow_{p:g}")
    return header, np.column_stack(columns)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_smoothing(header: list[str], data: np.ndarray, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = data[:, 0]
    ax.plot(xs, data[:, 1], "k-", lw=2.0, label=header[1])
    for j in range(2, data.shape[1]):
        ax.plot(xs, data[:, j], lw=1.2, label=header[j])
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    ax.set_title("quadratic smoothing of a piecewise-linear function")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_levelsets(header: list[str], data: np.ndarray, path: str) -> None:
    plt = _pyplot()
    n_side = int(round(np.sqrt(data.shape[0])))
    n_pows = data.shape[1] - 2
    fig, axes = plt.subplots(1, n_pows, figsize=(3.2 * n_pows, 3.2), squeeze=False)
    x1 = data[:, 0].reshape(n_side, n_side)
    x2 = data[:, 1].reshape(n_side, n_side)
    for j in range(n_pows):
        ax = axes[0, j]
        z = data[:, 2 + j].reshape(n_side, n_side)
        ax.contour(x1, x2, z, levels=10)
        ax.set_title(header[2 + j], fontsize=9)
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_run_curve(
    ks: np.ndarray, values: np.ndarray, residuals: np.ndarray, path: str
) -> None:
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(ks, values, ".-", ms=3)
    ax1.set_xlabel("oracle call")
    ax1.set_ylabel("objective value")
    positive = residuals > 0
    if positive.any():
        ax2.loglog(ks[positive], residuals[positive], ".-", ms=3)
    ax2.set_xlabel("oracle call")
    ax2.set_ylabel("residual vs closed-form minimum bound")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
