"""Finite-sample prediction-risk machinery, conditional on the design.

Closed-form reducible risks (bias-variance split) for EgReg and NIECE when
the envelope scores are treated as given, the irreducible remainder shared
by every estimator living in the retained PC span, the regularization
threshold below which EgReg strictly beats NIECE, and the replication
average used by the simulation studies.

All quantities condition on X; no expectation over the design is attempted.
The score ranking is likewise held fixed: when validating against Monte
Carlo, freeze X and the scores and redraw only the noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .envscore import EnvelopeScores, top_ranked
from .exceptions import ContractError, DegeneracyWarning, DimensionError, ParameterError
from .matrixcore import SvdFactors, _as_matrix


@dataclass(frozen=True)
class TruthSpec:
    """Ground truth of the generating model: beta*, Sigma_x, Sigma_eps."""

    beta_star: np.ndarray
    Sigma_x: np.ndarray
    Sigma_eps: np.ndarray

    def __post_init__(self):
        beta = _as_matrix(self.beta_star, "beta_star")
        Sx = _as_matrix(self.Sigma_x, "Sigma_x")
        Se = _as_matrix(self.Sigma_eps, "Sigma_eps")
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "Sigma_x", Sx)
        object.__setattr__(self, "Sigma_eps", Se)
        p, q = beta.shape
        if Sx.shape != (p, p):
            raise DimensionError(f"Sigma_x must be {p}x{p}, got {Sx.shape}")
        if Se.shape != (q, q):
            raise DimensionError(f"Sigma_eps must be {q}x{q}, got {Se.shape}")
        for name, S in (("Sigma_x", Sx), ("Sigma_eps", Se)):
            asym = float(np.max(np.abs(S - S.T)))
            scale = max(1.0, float(np.max(np.abs(S))))
            if asym > 1e-10 * scale:
                raise ContractError(f"{name} is not symmetric")
            # Steeply decaying spectra reconstruct with eigvalsh noise of
            # order eps * ||S||, so "positive" is enforced only up to that.
            if float(np.linalg.eigvalsh(S)[0]) < -1e-10 * scale:
                raise ContractError(f"{name} must be positive semidefinite")

    @property
    def p(self) -> int:
        return self.beta_star.shape[0]

    @property
    def q(self) -> int:
        return self.beta_star.shape[1]


@dataclass(frozen=True)
class RiskReport:
    """Bias-variance split of the reducible risk, plus the irreducible part.

    ``reducible == bias_sq + variance`` by construction; the irreducible
    component depends only on the retained PC span, not on the estimator.
    """

    bias_sq: float
    variance: float
    reducible: float
    irreducible: float
    method: str

    def __post_init__(self):
        for name in ("bias_sq", "variance", "irreducible"):
            if getattr(self, name) < -1e-12:
                raise ContractError(f"{name} is negative: {getattr(self, name)}")
        if abs(self.reducible - (self.bias_sq + self.variance)) > 1e-10:
            raise ContractError("reducible must equal bias_sq + variance")


def _column_quadratic(V, S):
    """v_j' S v_j for every column v_j of V."""
    return np.einsum("ij,ij->j", V, S @ V)


def _sigma_trace(M, S):
    """tr{M' S M}."""
    return float(np.einsum("ij,ij->", M, S @ M))


def irreducible_risk(svd: SvdFactors, truth: TruthSpec, d: int) -> float:
    """Risk floor from the part of beta* outside the span of the first d PCs."""
    if not 1 <= d <= svd.r:
        raise DimensionError(f"d must satisfy 1 <= d <= r = {svd.r}, got {d}")
    Vd = svd.V[:, :d]
    Qb = truth.beta_star - Vd @ (Vd.T @ truth.beta_star)
    return _sigma_trace(Qb, truth.Sigma_x)


def reducible_risk_egreg(
    svd: SvdFactors, scores: EnvelopeScores, truth: TruthSpec, d: int, lam: float
) -> RiskReport:
    """Exact reducible risk of EgReg, conditional on X and the scores.

    Variance: ``tr{Sigma_eps} * tr{V_d D_d^-2 Phi^2 (Phi+lam)^-2 V_d' Sigma_x}``.
    Bias: ``lam^2 * tr{beta*' A Sigma_x A beta*}`` with
    ``A = V_d (Phi+lam)^-1 V_d'``.  The target is the projection of beta*
    onto the retained span; the excluded part is reported separately as the
    irreducible component.

    ``lam`` must be strictly positive; the lambda -> 0 limit is
    :func:`reducible_risk_niece` with u = d.
    """
    if not lam > 0:
        raise ParameterError(
            "lambda must be positive; for the lambda -> 0 limit use "
            "reducible_risk_niece with u = d"
        )
    idx = top_ranked(scores, d, d)
    phi = scores.phi[idx]
    Dd = svd.D[idx]
    Vd = svd.V[:, idx]
    tr_se = float(np.trace(truth.Sigma_eps))
    w = phi / (Dd * (phi + lam))
    variance = tr_se * float(w**2 @ _column_quadratic(Vd, truth.Sigma_x))
    Ab = Vd @ ((Vd.T @ truth.beta_star) / (phi + lam)[:, None])
    bias_sq = lam**2 * _sigma_trace(Ab, truth.Sigma_x)
    return RiskReport(
        bias_sq=bias_sq,
        variance=variance,
        reducible=bias_sq + variance,
        irreducible=irreducible_risk(svd, truth, d),
        method="EgReg",
    )


def reducible_risk_niece(
    svd: SvdFactors, scores: EnvelopeScores, truth: TruthSpec, u: int, d: int | None = None
) -> RiskReport:
    """Exact reducible risk of NIECE, conditional on X and the scores.

    Variance: ``tr{Sigma_eps} * tr{V_u D_u^-2 V_u' Sigma_x}`` over the u
    top-scoring PCs.  Bias: quadratic form of beta* in the projector
    difference between the retained u-span and the full d-span; with u = d
    the difference vanishes and the bias is exactly 0.
    """
    if d is None:
        d = scores.d
    idx = top_ranked(scores, u, d)
    Vu = svd.V[:, idx]
    Du = svd.D[idx]
    tr_se = float(np.trace(truth.Sigma_eps))
    variance = tr_se * float((1.0 / Du**2) @ _column_quadratic(Vu, truth.Sigma_x))
    if u == d:
        bias_sq = 0.0
    else:
        Vd = svd.V[:, :d]
        delta = Vu @ (Vu.T @ truth.beta_star) - Vd @ (Vd.T @ truth.beta_star)
        bias_sq = _sigma_trace(delta, truth.Sigma_x)
    return RiskReport(
        bias_sq=bias_sq,
        variance=variance,
        reducible=bias_sq + variance,
        irreducible=irreducible_risk(svd, truth, d),
        method="NIECE",
    )


def lambda_guarantee_threshold(
    svd: SvdFactors, scores: EnvelopeScores, truth: TruthSpec, d: int
) -> float:
    """Largest lambda scale at which EgReg provably beats NIECE with u = d.

    Any lambda strictly below
    ``tr{Sigma_eps} / (sigma_1(beta* beta*') * sigma_1(Phi_d^-1 D_d^2))``
    yields a strictly smaller reducible risk than NIECE at u = d.  PCs with
    exactly zero score are excluded from the second factor (they carry no
    variance under EgReg) and flagged with a warning; a zero beta* makes the
    comparison trivial for every lambda, so the threshold degenerates to
    +inf, also with a warning.
    """
    if not np.any(truth.beta_star):
        warnings.warn(
            "beta_star is zero: any lambda > 0 improves on NIECE, threshold is +inf",
            DegeneracyWarning,
            stacklevel=2,
        )
        return math.inf
    idx = top_ranked(scores, d, d)
    phi = scores.phi[idx]
    Dd = svd.D[idx]
    pos = phi > 0
    if not np.all(pos):
        warnings.warn(
            f"{int(np.count_nonzero(~pos))} zero-score direction(s) excluded "
            "from the lambda threshold",
            DegeneracyWarning,
            stacklevel=2,
        )
    if not np.any(pos):
        return math.inf
    ratio = float(np.max(Dd[pos] ** 2 / phi[pos]))
    top_beta = float(np.linalg.norm(truth.beta_star, 2)) ** 2
    return float(np.trace(truth.Sigma_eps)) / (top_beta * ratio)


def empirical_risk_terms(beta_hats, truth: TruthSpec) -> np.ndarray:
    """Per-replication risks ``tr{(b - beta*)' Sigma_x (b - beta*)}``."""
    mats = list(beta_hats)
    if not mats:
        raise ParameterError("at least one replication is required")
    out = np.empty(len(mats))
    for i, b in enumerate(mats):
        diff = np.asarray(b, dtype=float) - truth.beta_star
        if diff.shape != truth.beta_star.shape:
            raise DimensionError(
                f"replication {i} has shape {np.asarray(b).shape}, "
                f"expected {truth.beta_star.shape}"
            )
        out[i] = _sigma_trace(diff, truth.Sigma_x)
    return out


def empirical_risk(beta_hats, truth: TruthSpec) -> float:
    """Replication-averaged prediction risk against the true coefficients."""
    return float(np.mean(empirical_risk_terms(beta_hats, truth)))
