"""Dense linear algebra for regularized design matrices.

Everything revolves around the regularized precision matrix
``V = sum_i phi_i phi_i^T + lam * I`` of a growing set of feature vectors.
We never form ``V`` or its inverse explicitly: a lower-triangular Cholesky
factor ``M`` (with ``M M^T = V``) is maintained under rank-one appends, and
quadratic forms in ``V^{-1}`` are obtained from triangular solves.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular


def _check_vector(phi: np.ndarray, dim: int, name: str = "phi") -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (dim,):
        raise ValueError(f"{name} has shape {phi.shape}, expected ({dim},)")
    if not np.all(np.isfinite(phi)):
        raise ValueError(f"{name} contains non-finite entries")
    return phi


class PrecisionState:
    """Cholesky factor of ``V = Phi^T Phi + lam * I`` under rank-one appends.

    Instances are immutable from the caller's point of view: ``update``
    returns a new state and never mutates the receiver, so snapshots can be
    shared freely across threads.

    Attributes
    ----------
    dim : int
        Feature dimension d.
    lam : float
        Ridge regularizer, strictly positive.
    chol : ndarray, shape (d, d)
        Lower-triangular ``M`` with ``M M^T = V`` and positive diagonal.
    count : int
        Number of rank-one updates applied since construction.
    """

    __slots__ = ("dim", "lam", "chol", "count", "_whitening")

    def __init__(self, dim: int, lam: float, chol: np.ndarray, count: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError("lam must be a positive finite real")
        self.dim = dim
        self.lam = lam
        self.chol = chol
        self.count = count
        self._whitening = None

    @classmethod
    def identity(cls, dim: int, lam: float) -> "PrecisionState":
        """State of an empty design, ``V = lam * I``."""
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError("lam must be a positive finite real")
        return cls(dim, lam, np.eye(dim) * math.sqrt(lam), count=0)

    @classmethod
    def from_features(cls, features, lam: float, dim: int | None = None) -> "PrecisionState":
        """Accumulate a batch of feature vectors into a fresh state."""
        features = [np.asarray(f, dtype=np.float64) for f in features]
        if dim is None:
            if not features:
                raise ValueError("dim is required when features is empty")
            dim = features[0].shape[0]
        state = cls.identity(dim, lam)
        for phi in features:
            state = precision_update(state, phi)
        return state

    @classmethod
    def from_spd(cls, matrix: np.ndarray, lam: float = 1.0) -> "PrecisionState":
        """Wrap an explicit SPD matrix (test and diagnostic use)."""
        matrix = np.asarray(matrix, dtype=np.float64)
        chol = np.linalg.cholesky(matrix)
        return cls(matrix.shape[0], lam, chol, count=0)

    def matrix(self) -> np.ndarray:
        """Reconstruct ``V`` densely (diagnostics only)."""
        return self.chol @ self.chol.T

    def logdet(self) -> float:
        """log det V from the factor diagonal."""
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def whitening(self) -> np.ndarray:
        """Matrix ``L = M^{-T}`` with ``L L^T = V^{-1}``, cached per state.

        Computed at most once per state; states are frozen after
        construction so the cache never goes stale.
        """
        if self._whitening is None:
            inv = solve_triangular(
                self.chol, np.eye(self.dim), lower=True, check_finite=False
            )
            self._whitening = inv.T
        return self._whitening


def precision_update(state: PrecisionState, phi: np.ndarray) -> PrecisionState:
    """Factor of ``V + phi phi^T`` from the factor of ``V``, in O(d^2).

    Classic rank-one Cholesky update via Givens-style rotations; the input
    state is left untouched.
    """
    phi = _check_vector(phi, state.dim)
    d = state.dim
    L = state.chol.copy()
    x = phi.copy()
    for k in range(d):
        lkk = L[k, k]
        xk = x[k]
        r = math.hypot(lkk, xk)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        if k + 1 < d:
            L[k + 1 :, k] = (L[k + 1 :, k] + s * x[k + 1 :]) / c
            x[k + 1 :] = c * x[k + 1 :] - s * L[k + 1 :, k]
    return PrecisionState(d, state.lam, L, state.count + 1)


def uncertainty_quad_form(state: PrecisionState, phi: np.ndarray) -> float:
    """Quadratic form ``phi^T V^{-1} phi`` via one triangular solve.

    With ``M M^T = V`` and ``z = M^{-1} phi`` the form equals ``||z||^2``,
    which is nonnegative by construction.
    """
    phi = _check_vector(phi, state.dim)
    z = solve_triangular(state.chol, phi, lower=True, check_finite=False)
    return float(z @ z)


def quad_form_batch(state: PrecisionState, phis: np.ndarray) -> np.ndarray:
    """Quadratic forms for the rows of ``phis`` in one batched solve."""
    phis = np.asarray(phis, dtype=np.float64)
    if phis.ndim != 2 or phis.shape[1] != state.dim:
        raise ValueError(f"expected (_, {state.dim}) feature block, got {phis.shape}")
    z = solve_triangular(state.chol, phis.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def whitened_infnorm_direction(
    state: PrecisionState, index: int, sign: float = 1.0
) -> np.ndarray:
    """Column ``L v`` of the whitening matrix for ``v = sign * e_index``.

    ``L = M^{-T}`` satisfies ``L L^T = V^{-1}``, so for any feature phi,
    ``<L v, phi> = sign * (L^T phi)_index``. Computed by one backward solve
    against the stored factor.
    """
    if not 0 <= index < state.dim:
        raise ValueError(f"basis index {index} out of range for dim {state.dim}")
    if sign not in (1.0, -1.0, 1, -1):
        raise ValueError("sign must be +1 or -1")
    v = np.zeros(state.dim)
    v[index] = float(sign)
    return solve_triangular(state.chol, v, lower=True, trans="T", check_finite=False)


def ridge_solve(
    features, targets, lam: float, dim: int | None = None
) -> np.ndarray:
    """Solve ``(Phi^T Phi + lam I) w = Phi^T q`` through a Cholesky factor.

    Parameters
    ----------
    features : sequence of ndarray
        Row features phi_i, all of one dimension d.
    targets : sequence of float
        Regression targets q_i, one per feature.
    lam : float
        Ridge regularizer, strictly positive.
    dim : int, optional
        Feature dimension, required only when ``features`` is empty
        (the solution is then the zero vector).
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError("lam must be a positive finite real")
    features = [np.asarray(f, dtype=np.float64) for f in features]
    targets = np.asarray(targets, dtype=np.float64)
    if len(features) != targets.shape[0]:
        raise ValueError(
            f"{len(features)} features but {targets.shape[0]} targets"
        )
    if not features:
        if dim is None:
            raise ValueError("dim is required for an empty design")
        return np.zeros(dim)
    d = features[0].shape[0]
    if dim is not None and dim != d:
        raise ValueError(f"features have dim {d}, expected {dim}")
    phi = np.vstack([_check_vector(f, d, "feature") for f in features])
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets contain non-finite entries")
    state = PrecisionState.from_features(phi, lam, dim=d)
    return solve_from_factor(state, phi.T @ targets)


def solve_from_factor(state: PrecisionState, rhs: np.ndarray) -> np.ndarray:
    """Solve ``V w = rhs`` with the maintained factor (two triangular solves)."""
    rhs = _check_vector(rhs, state.dim, "rhs")
    y = solve_triangular(state.chol, rhs, lower=True, check_finite=False)
    return solve_triangular(state.chol, y, lower=True, trans="T", check_finite=False)
