"""Exact smoothing of max-of-signed-coordinate affine functions.

A chain function is ``g(x) = max_k [ sign_k * x[coord_k] - offset_k ]`` with
pairwise distinct coordinates, so the active gradients ``sign_k * e_{coord_k}``
are orthonormal.  For such functions the quadratic smoothing

    ``G(x) = min_y { g(y) + (mu/2) * ||y - x||^2 }``

has a closed form: writing ``s_k = sign_k * x[coord_k] - offset_k``, the dual of
the minimization is ``max_{w in simplex} <w, s> - ||w||^2 / (2*mu)``, solved
exactly by ``w = project_simplex(mu * s)``.  The minimizer is
``z = x - (1/mu) * sum_k w_k * sign_k * e_{coord_k}`` and the gradient of G is
``mu * (x - z)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "AffinePiece",
    "ChainFunction",
    "EnvelopeResult",
    "eval_max",
    "simplex_project",
    "envelope",
    "holder_constant",
]


@dataclass(frozen=True)
class AffinePiece:
    """One affine piece ``sign * x[coord] - offset`` (coord is 1-based)."""

    coord: int
    sign: int
    offset: float

    def __post_init__(self):
        if self.coord < 1:
            raise InputError(f"piece coordinate must be >= 1, got {self.coord}")
        if self.sign not in (-1, 1):
            raise InputError(f"piece sign must be -1 or +1, got {self.sign}")
        if not np.isfinite(self.offset) or self.offset < 0:
            raise InputError(f"piece offset must be finite and >= 0, got {self.offset}")


@dataclass(frozen=True)
class ChainFunction:
    """Ordered pieces of a max-of-signed-coordinate function on R^dim.

    Coordinates must be pairwise distinct (duplicates would break the
    orthonormality the closed-form envelope relies on, so they are rejected
    here rather than handled generically).  ``delta`` records the nominal
    spacing between consecutive offsets; adversary-built chains use offsets
    ``(k-1)*delta`` exactly, hand-built chains may use any offsets.
    """

    pieces: tuple[AffinePiece, ...]
    dim: int
    delta: float
    # cached piece arrays; derived, not part of the value
    _coords0: np.ndarray = field(init=False, repr=False, compare=False)
    _signs: np.ndarray = field(init=False, repr=False, compare=False)
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"chain dimension must be >= 1, got {self.dim}")
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise InputError(f"chain delta must be finite and > 0, got {self.delta}")
        if len(self.pieces) > self.dim:
            raise InputError(
                f"chain has {len(self.pieces)} pieces but dimension {self.dim}"
            )
        coords = [p.coord for p in self.pieces]
        if any(c > self.dim for c in coords):
            raise InputError("piece coordinate exceeds chain dimension")
        if len(set(coords)) != len(coords):
            raise InputError("chain pieces must use pairwise distinct coordinates")
        object.__setattr__(self, "_coords0", np.array(coords, dtype=np.intp) - 1)
        object.__setattr__(
            self, "_signs", np.array([p.sign for p in self.pieces], dtype=float)
        )
        object.__setattr__(
            self, "_offsets", np.array([p.offset for p in self.pieces], dtype=float)
        )

    def __len__(self) -> int:
        return len(self.pieces)

    def piece_values(self, x: np.ndarray) -> np.ndarray:
        """Values of all pieces at ``x`` (no max taken)."""
        return self._signs * x[self._coords0] - self._offsets

    def piece_values_batch(self, X: np.ndarray) -> np.ndarray:
        """Piece values for a batch of points, shape (len(X), len(pieces))."""
        return self._signs * X[:, self._coords0] - self._offsets


@dataclass(frozen=True)
class EnvelopeResult:
    """Smoothed value, its gradient, the inner minimizer, and dual weights."""

    value: float
    gradient: np.ndarray
    prox_point: np.ndarray
    dual_weights: np.ndarray


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise InputError(f"expected a vector of dimension {dim}, got shape {x.shape}")
    return x


def eval_max(chain: ChainFunction, x) -> tuple[float, int]:
    """Evaluate the chain max at ``x``.

    Returns ``(value, active_index)`` where ``active_index`` is the 1-based
    index of the first piece attaining the max (ties broken by smallest index).
    """
    if len(chain) == 0:
        raise InputError("cannot evaluate an empty chain")
    x = _as_vector(x, chain.dim)
    vals = chain.piece_values(x)
    k = int(np.argmax(vals))  # first occurrence: smallest index on ties
    return float(vals[k]), k + 1


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-based thresholding: exact in O(m log m) operations.  Output is
    nonnegative and sums to 1 up to round-off.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise InputError(f"expected a nonempty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("cannot project non-finite values")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, v.size + 1)
    # largest prefix whose threshold keeps its last entry positive;
    # nonempty because u[0] - (u[0] - 1) = 1 > 0
    rho = np.nonzero(u - css / j > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def envelope(chain: ChainFunction, x, mu: float) -> EnvelopeResult:
    """Evaluate the quadratic smoothing of a chain function at ``x``.

    Uses the simplex-dual closed form; the duality gap is zero, so the value
    equals ``g(z) + (mu/2)*||z - x||^2`` at the returned ``prox_point`` z.
    """
    if len(chain) == 0:
        raise InputError("cannot smooth an empty chain")
    if not np.isfinite(mu) or mu <= 0:
        raise InputError(f"smoothing parameter must be finite and > 0, got {mu}")
    x = _as_vector(x, chain.dim)
    s = chain.piece_values(x)
    w = simplex_project(mu * s)
    value = float(w @ s - (w @ w) / (2.0 * mu))
    gradient = np.zeros(chain.dim)
    gradient[chain._coords0] = w * chain._signs
    prox_point = x - gradient / mu
    return EnvelopeResult(value, gradient, prox_point, w)


def holder_constant(beta: float, mu: float, nu: float) -> float:
    """Gradient Holder constant of degree ``nu`` for the scaled smoothing.

    A 1-Lipschitz function smoothed at level ``mu`` and scaled by ``beta``
    has gradient Holder constant ``beta * 2**(1 - nu) * mu**nu`` for every
    ``nu`` in [0, 1].
    """
    if beta <= 0 or mu <= 0:
        raise InputError("beta and mu must be positive")
    if not 0.0 <= nu <= 1.0:
        raise InputError(f"nu must lie in [0, 1], got {nu}")
    return beta * 2.0 ** (1.0 - nu) * mu**nu
