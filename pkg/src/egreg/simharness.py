"""Data generators, k-fold cross-validation, and the four study drivers.

Replication protocol: the design X and true coefficients are fixed per seed,
and only the noise is redrawn across replications.  Random streams are
counter-based -- ``default_rng([seed, stream, tag, counter])`` with stream =
grid-point index and tags 0 (design), 1 (noise), 2 (fold shuffle) -- so grid
points and replications produce bitwise-identical results whether they run
serially or in parallel.

The cross-validation scorer shares one implementation between
:func:`kfold_cv` and the study drivers: per training fold the SVD is
factored once and every tuning-parameter value is scored as a diagonal
reweighting of the same projections, which is what keeps the full studies in
the seconds-to-minutes range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .envscore import _rank_scores, envelope_scores
from .estimators import (
    _simpls_components,
    egreg_coefficients,
    niece_coefficients,
    pcr_coefficients,
    ridge_coefficients,
    simpls_coefficients,
)
from .exceptions import ConfigError, ContractError, DimensionError, ParameterError
from .matrixcore import Dataset, _as_matrix, _recenter, thin_svd
from .riskanalytics import TruthSpec, empirical_risk_terms

_TAG_MODEL = 0
_TAG_NOISE = 1
_TAG_FOLDS = 2

#: Number of points in the default log-spaced lambda grid.
LAMBDA_GRID_SIZE = 50


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeSimConfig:
    """Inputs of the planted-envelope generator.

    ``P`` holds 1-based eigenvector indices (strictly increasing) marking
    which eigenvectors of Sigma_x span the material subspace; ``alpha`` is
    the |P|-by-q reduced coefficient matrix.  Eigenvalues follow
    ``10 * exp(-decay_gamma * (i - 1))`` unless an explicit ``eigenvalues``
    vector (positive, nonincreasing) overrides the decay -- the flat-spectrum
    study uses that override.
    """

    n: int
    p: int
    q: int
    decay_gamma: float
    P: tuple
    alpha: np.ndarray
    Sigma_eps: np.ndarray
    seed: int
    replications: int = 100
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2 or self.p < 1 or self.q < 1:
            raise ConfigError(f"need n >= 2, p >= 1, q >= 1, got ({self.n}, {self.p}, {self.q})")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        P = tuple(int(i) for i in self.P)
        object.__setattr__(self, "P", P)
        if not P:
            raise ConfigError("P must be a non-empty index set")
        if any(b <= a for a, b in zip(P, P[1:])):
            raise ConfigError("P must be strictly increasing")
        if P[0] < 1 or P[-1] > self.p:
            raise ConfigError(f"P contains index {P[-1] if P[-1] > self.p else P[0]} "
                              f"outside 1..p = 1..{self.p}")
        alpha = _as_matrix(self.alpha, "alpha")
        object.__setattr__(self, "alpha", alpha)
        if alpha.shape != (len(P), self.q):
            raise ConfigError(
                f"alpha must be |P| x q = {len(P)}x{self.q}, got {alpha.shape}"
            )
        Se = _as_matrix(self.Sigma_eps, "Sigma_eps")
        object.__setattr__(self, "Sigma_eps", Se)
        if Se.shape != (self.q, self.q):
            raise ConfigError(f"Sigma_eps must be {self.q}x{self.q}, got {Se.shape}")
        if self.eigenvalues is not None:
            ev = np.asarray(self.eigenvalues, dtype=float)
            if ev.shape != (self.p,) or np.any(ev <= 0) or np.any(np.diff(ev) > 0):
                raise ConfigError("eigenvalues must be p positive nonincreasing values")
            object.__setattr__(self, "eigenvalues", ev)
        elif not self.decay_gamma > 0:
            raise ConfigError("decay_gamma must be positive")

    @property
    def u_star(self) -> int:
        return len(self.P)

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of Sigma_x, largest first."""
        if self.eigenvalues is not None:
            return self.eigenvalues
        return 10.0 * np.exp(-self.decay_gamma * np.arange(self.p))


def _haar_orthogonal(p, rng):
    """Uniform random orthogonal matrix: QR of a Gaussian with sign correction."""
    Z = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(Z)
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def _model_frame(cfg: EnvelopeSimConfig, stream: int = 0):
    """Design-side draws (fixed across replications): X, planted basis, truth."""
    sig = cfg.spectrum()
    rng = np.random.default_rng([cfg.seed, stream, _TAG_MODEL])
    V = _haar_orthogonal(cfg.p, rng)
    Z = rng.standard_normal((cfg.n, cfg.p))
    X = (Z * np.sqrt(sig)) @ V.T
    P0 = np.asarray(cfg.P, dtype=int) - 1
    Gamma = V[:, P0].copy()
    beta_star = Gamma @ cfg.alpha
    Sx = (V * sig) @ V.T
    Sigma_x = (Sx + Sx.T) / 2.0
    return X, Gamma, beta_star, Sigma_x


def _draw_noise(cfg: EnvelopeSimConfig, rep: int, stream: int = 0):
    rng = np.random.default_rng([cfg.seed, stream, _TAG_NOISE, rep])
    Z = rng.standard_normal((cfg.n, cfg.q))
    L = np.linalg.cholesky(cfg.Sigma_eps)
    return Z @ L.T


def gen_envelope_model(cfg: EnvelopeSimConfig, rep: int = 0, stream: int = 0):
    """Draw one planted-envelope dataset.

    Returns ``(data, truth, planted_basis)``: a centered :class:`Dataset`,
    the generating :class:`TruthSpec` (beta* = Gamma alpha, Sigma_x, Sigma_eps),
    and the p-by-u* planted basis (the selected eigenvectors of Sigma_x).
    The design depends only on ``(seed, stream)``; ``rep`` indexes the noise
    draw so replications share X and beta*.
    """
    X, Gamma, beta_star, Sigma_x = _model_frame(cfg, stream)
    E = _draw_noise(cfg, rep, stream)
    Y = X @ beta_star + E
    data = Dataset(_recenter(X), _recenter(Y), centered=True)
    truth = TruthSpec(beta_star, Sigma_x, cfg.Sigma_eps)
    return data, truth, Gamma


_BASELINE_BETA = (2.0, -2.0, 1.0, -1.0, 0.5, -0.5)


def _baseline_sigma(kind: str, p: int, rho: float):
    if kind == "CS":
        return rho * np.ones((p, p)) + (1.0 - rho) * np.eye(p)
    if kind == "AR1":
        idx = np.arange(p)
        return rho ** np.abs(idx[:, None] - idx[None, :])
    raise ParameterError(f"kind must be 'CS' or 'AR1', got {kind!r}")


def _baseline_beta(p: int, stub=None):
    stub = _BASELINE_BETA if stub is None else tuple(float(v) for v in stub)
    if len(stub) > p:
        raise ConfigError(f"beta_star has {len(stub)} entries but p = {p}")
    beta = np.zeros((p, 1))
    beta[: len(stub), 0] = stub
    return beta


def gen_baseline(
    kind: str,
    n: int,
    p: int,
    rho: float,
    beta_star=None,
    sigma_eps_sq: float = 10.0,
    seed: int = 0,
    rep: int = 0,
    stream: int = 0,
):
    """Draw one dataset with no planted structure (CS or AR1 covariance).

    ``beta_star`` defaults to the sparse vector (2, -2, 1, -1, 1/2, -1/2,
    0, ..., 0); shorter vectors are zero-padded to length p.  As in
    :func:`gen_envelope_model`, the design is fixed per ``(seed, stream)``
    and ``rep`` indexes the noise draw.
    """
    if not 0.0 <= rho < 1.0:
        raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    if n < 2 or p < 1:
        raise ParameterError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    if not sigma_eps_sq > 0:
        raise ParameterError("sigma_eps_sq must be positive")
    kind = str(kind).upper()
    Sigma_x = _baseline_sigma(kind, p, rho)
    beta = _baseline_beta(p, beta_star)
    L = np.linalg.cholesky(Sigma_x)
    rng = np.random.default_rng([seed, stream, _TAG_MODEL])
    X = rng.standard_normal((n, p)) @ L.T
    E = np.random.default_rng([seed, stream, _TAG_NOISE, rep]).standard_normal((n, 1))
    Y = X @ beta + math.sqrt(sigma_eps_sq) * E
    data = Dataset(_recenter(X), _recenter(Y), centered=True)
    truth = TruthSpec(beta, Sigma_x, [[sigma_eps_sq]])
    return data, truth


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass
class _Fold:
    tr: np.ndarray
    va: np.ndarray
    svd: object
    A: np.ndarray      # X_va @ V / D: held-out rows in whitened PC coordinates
    Xtr: np.ndarray
    Xva: np.ndarray


def _fold_indices(n, k, seed):
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), k)


def _fold_caches(X, folds):
    caches = []
    everything = np.arange(X.shape[0])
    for va in folds:
        tr = np.setdiff1d(everything, va)
        svd_f = thin_svd(X[tr])
        A = (X[va] @ svd_f.V) / svd_f.D
        caches.append(_Fold(tr=tr, va=va, svd=svd_f, A=A, Xtr=X[tr], Xva=X[va]))
    return caches


def _fold_phi(fold, B):
    """Envelope scores of the training fold from the projected response.

    With B = U'Y_tr, the score of PC j is (sigma_j ||B_j|| / n_tr)^2.
    """
    n_tr = fold.tr.shape[0]
    return (fold.svd.D**2) * np.einsum("ij,ij->i", B, B) / float(n_tr) ** 2


def _sse_by_count(A_cols, B_rows, Yva):
    """Held-out SSE after keeping 1, 2, ..., all of the given PC contributions."""
    T = A_cols[:, :, None] * B_rows[None, :, :]
    cum = np.cumsum(T, axis=1)
    err = cum - Yva[:, None, :]
    return np.einsum("mdq,mdq->d", err, err)


def _group_by(grid, key, default=None):
    groups = {}
    for i, entry in enumerate(grid):
        groups.setdefault(entry.get(key, default), []).append(i)
    return groups


def _cv_sse(caches, Y, method: str, grid) -> np.ndarray:
    """Pooled held-out SSE for every grid entry (one shared implementation)."""
    sse = np.zeros(len(grid))
    for fold in caches:
        Ytr = Y[fold.tr]
        Yva = Y[fold.va]
        r_f = fold.svd.r

        if method == "simpls":
            d_max = max(e["d"] for e in grid)
            if d_max > r_f:
                raise ParameterError(f"d = {d_max} exceeds a training-fold rank {r_f}")
            path = np.empty(d_max + 1)
            path[0] = float(np.sum(Yva**2))
            pred = np.zeros_like(Yva)
            count = 0
            for r_w, t in _simpls_components(fold.Xtr, Ytr, d_max):
                pred = pred + (fold.Xva @ r_w)[:, None] * (t @ Ytr)[None, :]
                count += 1
                path[count] = float(np.sum((pred - Yva) ** 2))
            path[count + 1 :] = path[count]
            for i, e in enumerate(grid):
                sse[i] += path[e["d"]]
            continue

        B = fold.svd.U.T @ Ytr

        if method == "pcr":
            by_d = _sse_by_count(fold.A, B, Yva)
            for i, e in enumerate(grid):
                d = e["d"]
                if d > r_f:
                    raise ParameterError(f"d = {d} exceeds a training-fold rank {r_f}")
                sse[i] += by_d[d - 1]

        elif method == "ridge":
            D2 = fold.svd.D**2
            for i, e in enumerate(grid):
                w = D2 / (D2 + e["lambda"])
                pred = fold.A @ (w[:, None] * B)
                sse[i] += float(np.sum((pred - Yva) ** 2))

        elif method == "niece":
            phi = _fold_phi(fold, B)
            order = _rank_scores(phi, fold.svd.D)[0]
            for d_pool, idxs in _group_by(grid, "d").items():
                d_pool = r_f if d_pool is None else d_pool
                if d_pool > r_f:
                    raise ParameterError(f"d = {d_pool} exceeds a training-fold rank {r_f}")
                pool = order[order < d_pool]
                by_u = _sse_by_count(fold.A[:, pool], B[pool], Yva)
                for i in idxs:
                    u = grid[i]["u"]
                    if u > d_pool:
                        raise ParameterError(f"u = {u} exceeds the candidate pool {d_pool}")
                    sse[i] += by_u[u - 1]

        elif method == "egreg":
            phi = _fold_phi(fold, B)
            for lam, idxs in _group_by(grid, "lambda").items():
                if lam is None:
                    raise ParameterError("egreg grid entries need a 'lambda' value")
                denom = phi + lam
                w = np.zeros(r_f)
                np.divide(phi, denom, out=w, where=denom > 0)
                by_d = _sse_by_count(fold.A, w[:, None] * B, Yva)
                for i in idxs:
                    d = grid[i].get("d")
                    d = r_f if d is None else d
                    if d > r_f:
                        raise ParameterError(f"d = {d} exceeds a training-fold rank {r_f}")
                    sse[i] += by_d[d - 1]

        else:
            raise ParameterError(f"unknown method {method!r}")
    return sse


def _pick_best(grid, scores):
    """Index of the best entry: lowest score, then smaller d/u, then larger lambda."""
    def key(i):
        e = grid[i]
        size = e.get("u", e.get("d"))
        size = math.inf if size is None else size
        return (scores[i], size, -float(e.get("lambda") or 0.0))

    return min(range(len(grid)), key=key)


_CV_METHOD_KEYS = {
    "pcr": "pcr",
    "ridge": "ridge",
    "niece": "niece",
    "simpls": "simpls",
    "egreg": "egreg",
}


def kfold_cv(data: Dataset, method: str, param_grid, k: int = 10, seed=0):
    """Select tuning parameters by k-fold cross-validation.

    Folds come from a seeded shuffle split into contiguous blocks.  The score
    of a grid entry is the mean held-out squared prediction error (summed
    over response columns, pooled over folds).  Ties break toward the smaller
    d/u and then the larger lambda.

    ``param_grid`` is a sequence of dicts with keys among {"d", "u",
    "lambda"}, e.g. ``[{"d": 2}, {"d": 3}]`` for PCR or ``[{"d": 3,
    "lambda": 0.1}, ...]`` for EgReg (omit "d" for the full-rank EgReg
    variant).  Returns ``(best_params, cv_table)`` where the table carries a
    "cv_score" per entry.
    """
    if not data.centered:
        raise ContractError("kfold_cv requires centered data")
    key = _CV_METHOD_KEYS.get(str(method).lower())
    if key is None:
        raise ParameterError(f"unknown method {method!r}")
    grid = [dict(e) for e in param_grid]
    if not grid:
        raise ParameterError("parameter grid is empty")
    n = data.n
    if k < 2 or n < k:
        raise ParameterError(f"need 2 <= k <= n, got k={k}, n={n}")
    caches = _fold_caches(data.X, _fold_indices(n, k, seed))
    scores = _cv_sse(caches, data.Y, key, grid) / n
    best = _pick_best(grid, scores)
    table = [{**e, "cv_score": float(s)} for e, s in zip(grid, scores)]
    return dict(grid[best]), table


# ---------------------------------------------------------------------------
# Study drivers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyResult:
    """Per-method empirical risks and standard errors over a study grid."""

    study: str
    grid_name: str
    grid: tuple
    methods: tuple
    risks: np.ndarray
    ses: np.ndarray
    config: dict
    seed: int

    def rows(self):
        """Header row plus one row per grid point, ready for CSV emission."""
        header = [self.grid_name]
        for m in self.methods:
            header += [f"{m}_risk", f"{m}_se"]
        out = [header]
        for i, gval in enumerate(self.grid):
            row = [gval]
            for j in range(len(self.methods)):
                row += [float(self.risks[i, j]), float(self.ses[i, j])]
            out.append(row)
        return out


_SAMPLE_METHODS = ("PCR", "Ridge", "NIECE", "SIMPLS", "EgReg", "EgReg(r)")
_DD_METHODS = ("NIECE", "EgReg", "EgReg(r)")

_CANON_METHOD = {
    "pcr": "PCR",
    "ridge": "Ridge",
    "niece": "NIECE",
    "simpls": "SIMPLS",
    "pls": "SIMPLS",
    "egreg": "EgReg",
    "egreg(r)": "EgReg(r)",
    "egreg_r": "EgReg(r)",
}

_P_OVER_N = (0.25, 0.5, 1.0, 2.0, 4.0)

_STUDY_DEFAULTS = {
    "P1": {
        "n": 100, "replications": 100, "seed": 0, "folds": 10,
        "p1": 7, "p_over_n": _P_OVER_N, "decay_gamma": 1.0,
        "sigma_eps_sq": 10.0, "methods": _SAMPLE_METHODS,
    },
    "u_star": {
        "n": 100, "replications": 100, "seed": 0, "folds": 10,
        "u_star": "half", "p_over_n": _P_OVER_N, "decay_gamma": 1.0,
        "sigma_eps_sq": 10.0, "methods": _SAMPLE_METHODS,
    },
    "baseline": {
        "n": 100, "replications": 100, "seed": 0, "folds": 10,
        "kind": "CS", "rho": 0.5, "p_over_n": _P_OVER_N,
        "sigma_eps_sq": 10.0, "beta_star": None, "methods": _SAMPLE_METHODS,
    },
    "double_descent": {
        "n": 100, "replications": 100, "seed": 0, "folds": 10,
        "u_star_over_n": (0.2, 0.5, 0.75, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 5.0),
        "methods": _DD_METHODS,
    },
}


def _canon_methods(methods, allowed, study):
    out = []
    for m in methods:
        label = _CANON_METHOD.get(str(m).lower())
        if label is None or label not in allowed:
            raise ConfigError(f"method {m!r} is not available in the {study} study")
        if label not in out:
            out.append(label)
    if not out:
        raise ConfigError("methods list is empty")
    return tuple(out)


def _lambda_grid(sigma1_sq):
    return np.geomspace(1e-4 * sigma1_sq, 1e2 * sigma1_sq, LAMBDA_GRID_SIZE)


@dataclass
class _Frame:
    """One grid point: fixed design plus a replication-indexed noise drawer."""

    X: np.ndarray
    truth: TruthSpec
    draw_noise: Callable


def _final_fit(label, best, svd_full, scores_full, Xc, Yc):
    if label == "PCR":
        return pcr_coefficients(svd_full, Yc, best["d"])
    if label == "Ridge":
        return ridge_coefficients(svd_full, Yc, best["lambda"])
    if label == "NIECE":
        return niece_coefficients(svd_full, scores_full, Yc, best["u"], svd_full.r)
    if label == "SIMPLS":
        return simpls_coefficients(Xc, Yc, best["d"])[0]
    # EgReg and EgReg(r)
    d = best.get("d", svd_full.r)
    return egreg_coefficients(svd_full, scores_full, Yc, d, best["lambda"])[0]


def _run_sample_point(frame: _Frame, methods, folds_k, R, fold_seed):
    """Tune, fit, and score every method at one grid point (shared X)."""
    Xc = _recenter(frame.X)
    n = Xc.shape[0]
    svd_full = thin_svd(Xc)
    caches = _fold_caches(Xc, _fold_indices(n, folds_k, fold_seed))
    r_cap = min(svd_full.r, min(c.svd.r for c in caches))
    lam_grid = _lambda_grid(svd_full.D[0] ** 2)
    grids = {
        "PCR": [{"d": d} for d in range(1, r_cap + 1)],
        "Ridge": [{"lambda": float(l)} for l in lam_grid],
        "NIECE": [{"u": u} for u in range(1, r_cap + 1)],
        "SIMPLS": [{"d": d} for d in range(1, r_cap + 1)],
        "EgReg": [
            {"d": d, "lambda": float(l)}
            for d in range(1, r_cap + 1)
            for l in lam_grid
        ],
        "EgReg(r)": [{"lambda": float(l)} for l in lam_grid],
    }
    cv_key = {"PCR": "pcr", "Ridge": "ridge", "NIECE": "niece",
              "SIMPLS": "simpls", "EgReg": "egreg", "EgReg(r)": "egreg"}
    beta_hats = {m: [] for m in methods}
    for rep in range(R):
        E = frame.draw_noise(rep)
        Yc = _recenter(frame.X @ frame.truth.beta_star + E)
        Sxy = Xc.T @ Yc / n
        scores_full = envelope_scores(svd_full, Sxy, svd_full.r)
        for label in methods:
            grid = grids[label]
            sse = _cv_sse(caches, Yc, cv_key[label], grid)
            best = grid[_pick_best(grid, sse / n)]
            if label == "EgReg(r)":
                best = {**best, "d": svd_full.r}
            beta_hats[label].append(
                _final_fit(label, best, svd_full, scores_full, Xc, Yc)
            )
    terms = np.vstack([empirical_risk_terms(beta_hats[m], frame.truth) for m in methods])
    return terms


def _summarize(terms):
    R = terms.shape[1]
    risks = terms.mean(axis=1)
    ses = terms.std(axis=1, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(terms.shape[0])
    return risks, ses


def _alternating(k):
    return (-1.0) ** np.arange(k)


def _run_envelope_study(study, cfg):
    n = int(cfg["n"])
    R = int(cfg["replications"])
    seed = int(cfg["seed"])
    folds_k = int(cfg["folds"])
    methods = _canon_methods(cfg["methods"], _SAMPLE_METHODS, study)
    grid = tuple(float(v) for v in cfg["p_over_n"])
    risks = np.empty((len(grid), len(methods)))
    ses = np.empty_like(risks)
    for g, ratio in enumerate(grid):
        p = int(round(ratio * n))
        if study == "P1":
            p1 = int(cfg["p1"])
            P = tuple(range(p1, p1 + 10))
            alpha = _alternating(10)[:, None]
        else:
            u_req = cfg["u_star"]
            u_star = min(n, p) // 2 if u_req == "half" else int(u_req)
            if u_star < 1:
                raise ConfigError(f"u_star must be >= 1, got {u_star}")
            P = tuple(range(1, 2 * u_star, 2))
            if u_star == 1:
                mag = np.array([0.1])
            else:
                j = np.arange(u_star)
                mag = 0.1 + j * 0.9 / (u_star - 1)
            alpha = (_alternating(u_star) * mag)[:, None]
        if P[-1] > p:
            raise ConfigError(
                f"p = {p} is too small for material indices up to {P[-1]} "
                f"(p/n = {ratio}, n = {n})"
            )
        sim = EnvelopeSimConfig(
            n=n, p=p, q=1, decay_gamma=float(cfg["decay_gamma"]), P=P, alpha=alpha,
            Sigma_eps=[[float(cfg["sigma_eps_sq"])]], seed=seed, replications=R,
        )
        X, _, beta_star, Sigma_x = _model_frame(sim, stream=g)
        truth = TruthSpec(beta_star, Sigma_x, sim.Sigma_eps)
        frame = _Frame(X=X, truth=truth,
                       draw_noise=lambda rep, _sim=sim, _g=g: _draw_noise(_sim, rep, _g))
        terms = _run_sample_point(frame, methods, folds_k, R, [seed, g, _TAG_FOLDS])
        risks[g], ses[g] = _summarize(terms)
    return StudyResult(
        study=study, grid_name="p_over_n", grid=grid, methods=methods,
        risks=risks, ses=ses, config=dict(cfg), seed=seed,
    )


def _run_baseline(cfg):
    n = int(cfg["n"])
    R = int(cfg["replications"])
    seed = int(cfg["seed"])
    folds_k = int(cfg["folds"])
    methods = _canon_methods(cfg["methods"], _SAMPLE_METHODS, "baseline")
    kind = str(cfg["kind"]).upper()
    rho = float(cfg["rho"])
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"rho must lie in [0, 1), got {rho}")
    sig_sq = float(cfg["sigma_eps_sq"])
    grid = tuple(float(v) for v in cfg["p_over_n"])
    risks = np.empty((len(grid), len(methods)))
    ses = np.empty_like(risks)
    for g, ratio in enumerate(grid):
        p = int(round(ratio * n))
        Sigma_x = _baseline_sigma(kind, p, rho)
        beta = _baseline_beta(p, cfg["beta_star"])
        L = np.linalg.cholesky(Sigma_x)
        X = np.random.default_rng([seed, g, _TAG_MODEL]).standard_normal((n, p)) @ L.T
        truth = TruthSpec(beta, Sigma_x, [[sig_sq]])

        def draw(rep, _g=g):
            z = np.random.default_rng([seed, _g, _TAG_NOISE, rep]).standard_normal((n, 1))
            return math.sqrt(sig_sq) * z

        frame = _Frame(X=X, truth=truth, draw_noise=draw)
        terms = _run_sample_point(frame, methods, folds_k, R, [seed, g, _TAG_FOLDS])
        risks[g], ses[g] = _summarize(terms)
    return StudyResult(
        study="baseline", grid_name="p_over_n", grid=grid, methods=methods,
        risks=risks, ses=ses, config=dict(cfg), seed=seed,
    )


def _dd_point(u_star, n):
    """Feasibility-checked (p, P, alpha) for one flat-spectrum grid point."""
    if u_star < 12:
        raise ConfigError(
            f"u_star = {u_star} is infeasible: the first material index 7 needs "
            f"p = round(1.5 u_star) >= u_star + 6, i.e. u_star >= 12"
        )
    p = int(np.rint(1.5 * u_star))
    P = tuple(range(7, 7 + u_star))
    eta = _alternating(u_star)
    alpha = (math.sqrt(10.0) * eta / np.linalg.norm(eta))[:, None]
    return p, P, alpha


def _run_double_descent(cfg):
    """Flat-spectrum study with the material basis treated as known.

    NIECE here is the known-basis estimator: ordinary least squares of Y on
    the reduced design X Gamma_P when u* <= n-1; at u* = n the stability cap
    u = n-1 keeps the first n-1 planted directions (the planted scores are
    all equal, so the tie-break keeps the lowest indices); for u* > n it is
    the minimum-norm interpolator on all u* planted directions (the
    lambda -> 0 limit of the reduced ridge problem).  EgReg is ridge on the
    reduced design with lambda tuned by CV (the planted scores are equal, so
    the score rescaling is a scalar absorbed by the lambda grid); EgReg(r)
    is the fully sample-based estimator with d = r.  The sample PC-ranked
    NIECE cannot spike at u*/n = 1 -- its reduced design is X's own singular
    frame -- which is why this study keeps the basis known.
    """
    n = int(cfg["n"])
    R = int(cfg["replications"])
    seed = int(cfg["seed"])
    folds_k = int(cfg["folds"])
    methods = _canon_methods(cfg["methods"], _DD_METHODS, "double_descent")
    ratios = tuple(float(v) for v in cfg["u_star_over_n"])
    points = [_dd_point(int(round(r * n)), n) for r in ratios]  # validate all first
    u_stars = [int(round(r * n)) for r in ratios]
    risks = np.empty((len(ratios), len(methods)))
    ses = np.empty_like(risks)
    for g, (u_star, (p, P, alpha)) in enumerate(zip(u_stars, points)):
        sim = EnvelopeSimConfig(
            n=n, p=p, q=1, decay_gamma=1.0, P=P, alpha=alpha,
            Sigma_eps=[[10.0]], seed=seed, replications=R,
            eigenvalues=np.ones(p),
        )
        X, Gamma, beta_star, Sigma_x = _model_frame(sim, stream=g)
        Xc = _recenter(X)
        truth = TruthSpec(beta_star, Sigma_x, sim.Sigma_eps)
        folds = _fold_indices(n, folds_k, [seed, g, _TAG_FOLDS])

        pre = {}
        if "NIECE" in methods:
            # u* < n: least squares on all planted directions; u* = n: the
            # stability cap u = n - 1 avoids exact singularity; u* > n:
            # minimum-norm interpolation on all u* directions (pinv of the
            # wide reduced design).
            keep = n - 1 if u_star == n else u_star
            G_keep = Gamma[:, :keep]
            pre["NIECE"] = (G_keep, np.linalg.pinv(Xc @ G_keep))
        if "EgReg" in methods:
            Xg = Xc @ Gamma
            svd_g = thin_svd(Xg)
            caches_g = _fold_caches(Xg, folds)
            grid_g = [{"lambda": float(l)} for l in _lambda_grid(svd_g.D[0] ** 2)]
            pre["EgReg"] = (svd_g, caches_g, grid_g)
        if "EgReg(r)" in methods:
            svd_full = thin_svd(Xc)
            caches_x = _fold_caches(Xc, folds)
            grid_x = [{"lambda": float(l)} for l in _lambda_grid(svd_full.D[0] ** 2)]
            pre["EgReg(r)"] = (svd_full, caches_x, grid_x)

        beta_hats = {m: [] for m in methods}
        for rep in range(R):
            E = _draw_noise(sim, rep, g)
            Yc = _recenter(X @ beta_star + E)
            for label in methods:
                if label == "NIECE":
                    G_keep, piv = pre["NIECE"]
                    beta_hats[label].append(G_keep @ (piv @ Yc))
                elif label == "EgReg":
                    svd_g, caches_g, grid_g = pre["EgReg"]
                    sse = _cv_sse(caches_g, Yc, "ridge", grid_g)
                    lam = grid_g[_pick_best(grid_g, sse / n)]["lambda"]
                    eta_hat = ridge_coefficients(svd_g, Yc, lam)
                    beta_hats[label].append(Gamma @ eta_hat)
                else:
                    svd_full, caches_x, grid_x = pre["EgReg(r)"]
                    sse = _cv_sse(caches_x, Yc, "egreg", grid_x)
                    lam = grid_x[_pick_best(grid_x, sse / n)]["lambda"]
                    scores_full = envelope_scores(
                        svd_full, Xc.T @ Yc / n, svd_full.r
                    )
                    beta = egreg_coefficients(
                        svd_full, scores_full, Yc, svd_full.r, lam
                    )[0]
                    beta_hats[label].append(beta)
        terms = np.vstack(
            [empirical_risk_terms(beta_hats[m], truth) for m in methods]
        )
        risks[g], ses[g] = _summarize(terms)
    return StudyResult(
        study="double_descent", grid_name="u_star_over_n", grid=ratios,
        methods=methods, risks=risks, ses=ses, config=dict(cfg), seed=seed,
    )


def run_study(study: str, config: dict | None = None) -> StudyResult:
    """Run one of the four studies: P1, u_star, baseline, double_descent.

    ``config`` overrides the study defaults; unknown keys are rejected so
    typos cannot silently fall back to defaults.  See ``CONFIG_SCHEMAS`` for
    the accepted keys per study.
    """
    if study not in _STUDY_DEFAULTS:
        raise ConfigError(
            f"unknown study {study!r}; expected one of {sorted(_STUDY_DEFAULTS)}"
        )
    cfg = dict(_STUDY_DEFAULTS[study])
    if config:
        unknown = sorted(set(config) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config key(s) for {study}: {', '.join(unknown)}")
        cfg.update(config)
    if study == "baseline":
        return _run_baseline(cfg)
    if study == "double_descent":
        return _run_double_descent(cfg)
    return _run_envelope_study(study, cfg)


# ---------------------------------------------------------------------------
# Config schemas (JSON)
# ---------------------------------------------------------------------------

_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_POS_NUM_ARRAY = {"type": "array", "items": _POS_NUM, "minItems": 1}


def _schema(study, extra):
    props = {
        "study": {"const": study},
        "seed": {"type": "integer"},
        "replications": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 2},
        "folds": {"type": "integer", "minimum": 2},
        "methods": {"type": "array", "items": {"type": "string"}, "minItems": 1},
    }
    props.update(extra)
    return {
        "type": "object",
        "properties": props,
        "required": ["study", "seed"],
        "additionalProperties": False,
    }


CONFIG_SCHEMAS = {
    "P1": _schema("P1", {
        "p1": {"type": "integer", "minimum": 1},
        "p_over_n": _POS_NUM_ARRAY,
        "decay_gamma": _POS_NUM,
        "sigma_eps_sq": _POS_NUM,
    }),
    "u_star": _schema("u_star", {
        "u_star": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "half"}]},
        "p_over_n": _POS_NUM_ARRAY,
        "decay_gamma": _POS_NUM,
        "sigma_eps_sq": _POS_NUM,
    }),
    "baseline": _schema("baseline", {
        "kind": {"enum": ["CS", "AR1"]},
        "rho": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "p_over_n": _POS_NUM_ARRAY,
        "sigma_eps_sq": _POS_NUM,
        "beta_star": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
                {"type": "null"},
            ]
        },
    }),
    "double_descent": _schema("double_descent", {
        "u_star_over_n": _POS_NUM_ARRAY,
    }),
}
