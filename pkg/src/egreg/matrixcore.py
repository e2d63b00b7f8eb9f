"""Dense-matrix foundation used by every estimator and risk formula.

Centering/standardization with replayable transforms, a thin SVD with a
deterministic sign convention, sample cross-covariances, and a Frobenius
subspace distance.  All operations are pure functions of their inputs and
safe to share read-only across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ContractError,
    DegenerateColumnError,
    DimensionError,
    ParameterError,
    RankZeroError,
)

# Column means of a "centered" matrix must sit within this band of zero.
CENTER_TOL = 1e-10

#: Default relative cutoff for the numerical rank of a design matrix.
DEFAULT_RANK_RTOL = 1e-10


def _as_matrix(a, name="array"):
    """Coerce to a 2-D float array; 1-D input becomes a single column."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Transform:
    """Column-wise affine map fitted at ingestion and replayed at prediction.

    ``mode`` is ``"center"`` or ``"standardize"``; in center mode the scale
    vectors are all ones.  Transformed values are ``(raw - mean) / scale``.
    """

    mode: str
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray


@dataclass(frozen=True)
class Dataset:
    """Predictor/response pair with an explicit centering state.

    Parameters
    ----------
    X : (n, p) array
        Predictor matrix.
    Y : (n, q) array
        Response matrix; a 1-D vector is treated as a single column.
    centered : bool
        If set, every column mean of X and Y must be within 1e-10 of zero
        (verified at construction).
    standardized : bool
        If set, the data were scaled to unit sample standard deviation.
    transform : Transform or None
        The ingestion transform, retained for prediction-time reuse.
    """

    X: np.ndarray
    Y: np.ndarray
    centered: bool = False
    standardized: bool = False
    transform: Transform | None = None

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        Y = _as_matrix(self.Y, "Y")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if X.shape[0] != Y.shape[0]:
            raise DimensionError(
                f"X and Y must share their row count, got {X.shape[0]} and {Y.shape[0]}"
            )
        if X.shape[0] < 2:
            raise DimensionError(f"need at least 2 rows, got {X.shape[0]}")
        if self.centered:
            for name, M in (("X", X), ("Y", Y)):
                worst = float(np.max(np.abs(M.mean(axis=0))))
                if worst > CENTER_TOL:
                    raise ContractError(
                        f"{name} is flagged centered but max |column mean| = {worst:.3e}"
                    )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``X = U diag(D) V'`` truncated at the numerical rank r.

    Columns of U and V are orthonormal; D is strictly positive and
    descending.  The sign of each column pair is fixed so that the
    largest-magnitude entry of every V column is positive.
    """

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    r: int

    def __post_init__(self):
        if self.r < 1 or self.D.shape != (self.r,):
            raise DimensionError("rank/D mismatch in SvdFactors")
        if np.any(self.D <= 0) or np.any(np.diff(self.D) > 0):
            raise ContractError("singular values must be positive and descending")


@dataclass(frozen=True)
class CovPair:
    """Sample second moments of a centered dataset: Sx = X'X/n, Sxy = X'Y/n."""

    Sx: np.ndarray
    Sxy: np.ndarray

    def __post_init__(self):
        asym = float(np.max(np.abs(self.Sx - self.Sx.T)))
        if asym > 1e-12 * max(1.0, float(np.max(np.abs(self.Sx)))):
            raise ContractError(f"Sx is not symmetric (max asymmetry {asym:.3e})")


def _recenter(M):
    """Subtract column means twice so the residual means are at noise level."""
    out = M - M.mean(axis=0)
    out -= out.mean(axis=0)
    return out


def center_standardize(raw: Dataset, mode: str = "center") -> Dataset:
    """Center (and optionally scale) both matrices column-wise.

    Parameters
    ----------
    raw : Dataset
        Input data in original units.
    mode : {"center", "standardize"}
        "center" subtracts column means; "standardize" additionally divides
        by the sample standard deviation (divisor n-1).

    Returns
    -------
    Dataset
        Transformed data with the fitted :class:`Transform` attached.

    Raises
    ------
    DegenerateColumnError
        If a column is constant in standardize mode (the message names the
        matrix and column index).
    """
    if mode not in ("center", "standardize"):
        raise ParameterError(f"mode must be 'center' or 'standardize', got {mode!r}")
    X, Y = raw.X, raw.Y
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    if mode == "standardize":
        x_scale = X.std(axis=0, ddof=1)
        y_scale = Y.std(axis=0, ddof=1)
        for name, scale in (("X", x_scale), ("Y", y_scale)):
            bad = np.flatnonzero(scale <= 0.0)
            if bad.size:
                raise DegenerateColumnError(
                    f"{name} column {int(bad[0])} is constant; cannot standardize"
                )
    else:
        x_scale = np.ones(raw.p)
        y_scale = np.ones(raw.q)
    Xt = _recenter(X / x_scale if mode == "standardize" else X)
    Yt = _recenter(Y / y_scale if mode == "standardize" else Y)
    tr = Transform(mode=mode, x_mean=x_mean, x_scale=x_scale, y_mean=y_mean, y_scale=y_scale)
    return Dataset(Xt, Yt, centered=True, standardized=(mode == "standardize"), transform=tr)


def thin_svd(X, rel_tol: float = DEFAULT_RANK_RTOL) -> SvdFactors:
    """Thin SVD truncated at the numerical rank, with deterministic signs.

    The rank r counts singular values above ``rel_tol * sigma_1``.  Each
    column of V is flipped (together with its U column) so its
    largest-magnitude entry is positive, making downstream score rankings
    reproducible across LAPACK builds.

    Raises
    ------
    RankZeroError
        If X is identically zero (or no singular value clears the cutoff).
    """
    X = _as_matrix(X, "X")
    if rel_tol <= 0:
        raise ParameterError(f"rel_tol must be positive, got {rel_tol}")
    if not X.any():
        raise RankZeroError("X is identically zero")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    r = int(np.count_nonzero(s > rel_tol * s[0]))
    if r == 0:
        raise RankZeroError(f"no singular value exceeds rel_tol*sigma_1 = {rel_tol * s[0]:.3e}")
    U = U[:, :r].copy()
    D = s[:r].copy()
    V = Vt[:r].T.copy()
    lead = np.argmax(np.abs(V), axis=0)
    flip = V[lead, np.arange(r)] < 0
    V[:, flip] *= -1.0
    U[:, flip] *= -1.0
    return SvdFactors(U=U, D=D, V=V, r=r)


def cross_cov(data: Dataset) -> CovPair:
    """Sample covariances Sx = X'X/n and Sxy = X'Y/n of a centered dataset."""
    if not data.centered:
        raise ContractError("cross_cov requires centered data; run center_standardize first")
    n = data.n
    G = data.X.T @ data.X / n
    # BLAS matmul is not exactly symmetric; fold the round-off away.
    Sx = (G + G.T) / 2.0
    Sxy = data.X.T @ data.Y / n
    return CovPair(Sx=Sx, Sxy=Sxy)


def _check_orthonormal(M, name):
    G = M.T @ M
    err = float(np.max(np.abs(G - np.eye(M.shape[1]))))
    if err > 1e-8:
        raise ContractError(f"{name} is not orthonormal (max |A'A - I| = {err:.3e})")


def subspace_distance(A, B) -> float:
    """Frobenius distance ``||AA' - BB'||_F`` between two column spaces.

    Zero iff the spaces coincide; invariant to right-multiplication of either
    basis by an orthogonal matrix.  Both inputs must be orthonormal p-by-k
    bases of the same shape.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise ContractError(f"bases must share shape, got {A.shape} and {B.shape}")
    _check_orthonormal(A, "A")
    _check_orthonormal(B, "B")
    return float(np.linalg.norm(A @ A.T - B @ B.T, "fro"))
