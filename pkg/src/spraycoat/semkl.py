"""Alternating multi-kernel SVR training with closed-form lp-norm weight updates.

One training iteration solves the SVR dual at fixed kernel weights, then
refreshes the weights from the per-kernel component norms:

    gamma_m = n_m^(2/(1+p)) / ( sum_k n_k^(2p/(1+p)) )^(1/p)

where n_m = gamma_m * sqrt(beta' G_m beta) is the RKHS norm of the m-th
component function. The loop stops when the relative change of the
regularized primal objective falls below gap_tol. Weight updates run in
log space so the procedure stays finite up to p = 2^15.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import (
    KernelBank,
    KernelWeights,
    bank_grams,
    combined_kernel,
    gram_matrix,
    lp_norm,
)
from .svr import SvrProblem, SvrSolution, decision_function, solve_svr

MODEL_MAGIC = "spraycoat-semkl-model"
MODEL_VERSION = 1

NEG_RADICAND_TOL = -1e-10


class TrainingError(RuntimeError):
    """Training could not proceed (bad data or solver failure)."""


class ModelFormatError(ValueError):
    """Model file is corrupt, has the wrong magic, or an unknown version."""


class TargetGroup(str, enum.Enum):
    PIP = "PIP"  # particle in-flight properties
    PPP = "PPP"  # process performance properties
    CQP = "CQP"  # coating quality properties


class QualityTarget(str, enum.Enum):
    PARTICLE_VELOCITY = "particle_velocity"
    PARTICLE_TEMPERATURE = "particle_temperature"
    DEPOSITION_RATE = "deposition_rate"
    DEPOSITION_EFFICIENCY = "deposition_efficiency"
    COATING_THICKNESS = "coating_thickness"
    COATING_ROUGHNESS = "coating_roughness"
    COATING_HARDNESS = "coating_hardness"
    COATING_POROSITY = "coating_porosity"

    @property
    def group(self) -> TargetGroup:
        return _TARGET_GROUPS[self]


_TARGET_GROUPS = {
    QualityTarget.PARTICLE_VELOCITY: TargetGroup.PIP,
    QualityTarget.PARTICLE_TEMPERATURE: TargetGroup.PIP,
    QualityTarget.DEPOSITION_RATE: TargetGroup.PPP,
    QualityTarget.DEPOSITION_EFFICIENCY: TargetGroup.PPP,
    QualityTarget.COATING_THICKNESS: TargetGroup.CQP,
    QualityTarget.COATING_ROUGHNESS: TargetGroup.CQP,
    QualityTarget.COATING_HARDNESS: TargetGroup.CQP,
    QualityTarget.COATING_POROSITY: TargetGroup.CQP,
}


@dataclass(frozen=True)
class Hyperparams:
    C: float
    p: float
    epsilon: float = 0.1
    max_iters: int = 100
    gap_tol: float = 1e-4
    svr_tol: float = 1e-8

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_iters < 1 or not self.gap_tol > 0:
            raise ValueError("max_iters must be >= 1 and gap_tol > 0")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring fitted on training data; constant columns dropped."""

    mean: np.ndarray
    std: np.ndarray
    kept: np.ndarray  # indices into the raw feature vector

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        kept = np.flatnonzero(std > 0)
        return Standardizer(mean=mean[kept], std=std[kept], kept=kept)

    @property
    def raw_dim(self) -> int:
        # widest raw index seen; predict validates against this
        return int(self.kept.max()) + 1 if self.kept.size else 0

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X[:, self.kept] - self.mean) / self.std


@dataclass(frozen=True)
class SemklModel:
    bank: KernelBank
    weights: KernelWeights
    alpha: np.ndarray
    alpha_star: np.ndarray
    b: float
    X_train: np.ndarray  # standardized training inputs
    standardizer: Standardizer
    target: QualityTarget | None
    converged: bool
    iters: int
    hyperparams: Hyperparams
    objective_trace: tuple[float, ...] = field(default=())
    degenerate_weights: bool = False

    @property
    def beta(self) -> np.ndarray:
        return self.alpha - self.alpha_star


def norm_in_hm(gram_m: np.ndarray, gamma_m: float, beta: np.ndarray) -> float:
    """RKHS norm of the m-th component: gamma_m * sqrt(beta' G_m beta)."""
    if gamma_m == 0.0:
        return 0.0
    quad = float(beta @ (gram_m @ beta))
    if quad < NEG_RADICAND_TOL:
        raise TrainingError(f"base Gram is not PSD (beta'Gb = {quad})")
    return gamma_m * np.sqrt(max(quad, 0.0))


def update_weights(norms: np.ndarray, p: float) -> tuple[KernelWeights, bool]:
    """Closed-form lp-norm weight update; returns (weights, degenerate_flag).

    Computed in log space: for large p the direct powers overflow or
    collapse to 0. Kernels with zero component norm get weight zero; if
    every norm is zero the update is undefined and uniform feasible
    weights are returned with the degenerate flag set.
    """
    norms = np.asarray(norms, dtype=float)
    m = norms.shape[0]
    active = norms > 0
    if not np.any(active):
        return KernelWeights(tuple([m ** (-1.0 / p)] * m), p), True
    log_n = np.log(norms[active])
    log_num = (2.0 / (1.0 + p)) * log_n
    pow_logs = (2.0 * p / (1.0 + p)) * log_n
    # log of ( sum exp(pow_logs) )^(1/p), stabilized against overflow
    top = pow_logs.max()
    log_den = (top + np.log(np.sum(np.exp(pow_logs - top)))) / p
    gamma = np.zeros(m)
    gamma[active] = np.exp(log_num - log_den)
    # the closed form lands on ||gamma||_p = 1; renormalize away float error
    nrm = lp_norm(gamma, p)
    if nrm > 1.0:
        gamma /= nrm
    return KernelWeights(tuple(gamma), p), False


def primal_objective(
    grams: list[np.ndarray],
    weights: KernelWeights,
    beta: np.ndarray,
    b: float,
    y: np.ndarray,
    C: float,
    epsilon: float,
) -> float:
    """Regularized primal value 1/2 sum_m gamma_m b'G_m b + C sum l_eps.

    The quadratic term is the minimal-split value of sum ||f_m||^2/gamma_m
    (0/0 treated as 0, so switched-off kernels contribute nothing).
    """
    gamma = weights.as_array
    quad = 0.0
    K_beta = np.zeros_like(beta)
    for g_m, G in zip(gamma, grams):
        if g_m != 0.0:
            Gb = G @ beta
            quad += g_m * float(beta @ Gb)
            K_beta += g_m * Gb
    f = K_beta + b
    resid = np.abs(y - f) - epsilon
    loss = float(np.sum(np.maximum(resid, 0.0)))
    return 0.5 * quad + C * loss


def _check_features(X: np.ndarray, names: list[str] | None = None) -> None:
    bad = ~np.isfinite(X)
    if bad.any():
        col = int(np.argwhere(bad)[0][1])
        label = names[col] if names else f"column {col}"
        raise TrainingError(f"non-finite value in feature {label}")


def train_on_grams(
    grams: list[np.ndarray],
    y: np.ndarray,
    bank: KernelBank,
    hp: Hyperparams,
) -> tuple[KernelWeights, SvrSolution, list[float], bool, int, bool]:
    """Alternating optimization given precomputed base Grams.

    Returns (weights, svr_solution, objective_trace, converged, iters,
    degenerate). Shared by train() and the cross-validation grid, which
    reuses Grams across many hyperparameter cells.
    """
    m = bank.size
    y = np.asarray(y, dtype=float)
    weights = KernelWeights.uniform(m, hp.p)
    trace: list[float] = []
    warm = None
    sol = None
    converged = False
    degenerate = False
    it = 0
    for it in range(1, hp.max_iters + 1):
        K = combined_kernel(bank, weights, grams)
        problem = SvrProblem(K=K, y=y, C=hp.C, epsilon=hp.epsilon)
        sol = solve_svr(problem, tol=hp.svr_tol, warm_beta=warm)
        if not sol.converged and it == 1 and warm is None:
            # retry once from scratch with more passes before giving up
            sol = solve_svr(problem, tol=hp.svr_tol, max_passes=100)
        warm = sol.beta
        obj = primal_objective(grams, weights, sol.beta, sol.b, y, hp.C, hp.epsilon)
        trace.append(obj)
        norms = np.array([norm_in_hm(G, g_m, sol.beta) for G, g_m in zip(grams, weights.as_array)])
        weights, degenerate = update_weights(norms, hp.p)
        if degenerate:
            converged = True
            break
        if len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if abs(prev - cur) <= hp.gap_tol * max(1.0, abs(prev)):
                converged = True
                break
    if sol is None:
        raise TrainingError("training produced no solver iterations")
    # re-solve at the final weights so (alpha, b) and gamma describe the
    # same combined kernel
    K = combined_kernel(bank, weights, grams)
    sol = solve_svr(SvrProblem(K=K, y=y, C=hp.C, epsilon=hp.epsilon), tol=hp.svr_tol, warm_beta=warm)
    trace.append(primal_objective(grams, weights, sol.beta, sol.b, y, hp.C, hp.epsilon))
    return weights, sol, trace, converged, it, degenerate


def train(
    X: np.ndarray,
    y: np.ndarray,
    bank: KernelBank,
    hp: Hyperparams,
    target: QualityTarget | None = None,
    feature_names: list[str] | None = None,
) -> SemklModel:
    """Fit a multi-kernel SVR model; standardization is fitted here and stored."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise TrainingError("empty dataset")
    if y.shape != (X.shape[0],):
        raise TrainingError(f"label shape {y.shape} does not match {X.shape[0]} rows")
    _check_features(X, feature_names)
    std = Standardizer.fit(X)
    Xs = std.transform(X)
    grams = bank_grams(bank, Xs)
    weights, sol, trace, converged, iters, degenerate = train_on_grams(grams, y, bank, hp)
    return SemklModel(
        bank=bank,
        weights=weights,
        alpha=sol.alpha,
        alpha_star=sol.alpha_star,
        b=sol.b,
        X_train=Xs,
        standardizer=std,
        target=target,
        converged=converged,
        iters=iters,
        hyperparams=hp,
        objective_trace=tuple(trace),
        degenerate_weights=degenerate,
    )


def kernel_rows(model: SemklModel, X_raw: np.ndarray) -> np.ndarray:
    """Combined-kernel rows K(x, x_n; gamma) for a batch of raw queries."""
    X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
    if not np.all(np.isfinite(X_raw)):
        raise ValueError("non-finite query input")
    if X_raw.shape[1] < model.standardizer.raw_dim:
        raise ValueError(
            f"query has {X_raw.shape[1]} features, model expects at least "
            f"{model.standardizer.raw_dim}"
        )
    Xs = model.standardizer.transform(X_raw)
    rows = np.zeros((Xs.shape[0], model.X_train.shape[0]))
    for g_m, spec in zip(model.weights.gamma, model.bank.specs):
        if g_m != 0.0:
            rows += g_m * gram_matrix(spec, Xs, model.X_train)
    return rows


def predict(model: SemklModel, x_raw: np.ndarray) -> float:
    """Standardize one raw feature vector and evaluate the trained model."""
    return float(predict_batch(model, np.atleast_2d(np.asarray(x_raw, dtype=float)))[0])


def predict_batch(model: SemklModel, X_raw: np.ndarray) -> np.ndarray:
    rows = kernel_rows(model, X_raw)
    sol = SvrSolution(model.alpha, model.alpha_star, model.b, 0.0, model.converged, model.iters)
    return np.array([decision_function(sol, r) for r in rows])


def save_model(model: SemklModel, path: str | Path) -> None:
    """Write the model as versioned JSON; floats round-trip exactly."""
    doc = {
        "magic": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "bank": model.bank.to_dict(),
        "gamma": list(model.weights.gamma),
        "p": model.weights.p,
        "alpha": model.alpha.tolist(),
        "alpha_star": model.alpha_star.tolist(),
        "b": model.b,
        "X_train": model.X_train.tolist(),
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
            "kept": model.standardizer.kept.tolist(),
        },
        "target": model.target.value if model.target else None,
        "converged": model.converged,
        "iters": model.iters,
        "hyperparams": {
            "C": model.hyperparams.C,
            "p": model.hyperparams.p,
            "epsilon": model.hyperparams.epsilon,
            "max_iters": model.hyperparams.max_iters,
            "gap_tol": model.hyperparams.gap_tol,
            "svr_tol": model.hyperparams.svr_tol,
        },
        "objective_trace": list(model.objective_trace),
        "degenerate_weights": model.degenerate_weights,
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path: str | Path) -> SemklModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not a model file (bad magic)")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')} (expected {MODEL_VERSION})"
        )
    hp = Hyperparams(**doc["hyperparams"])
    std = Standardizer(
        mean=np.asarray(doc["standardizer"]["mean"], dtype=float),
        std=np.asarray(doc["standardizer"]["std"], dtype=float),
        kept=np.asarray(doc["standardizer"]["kept"], dtype=int),
    )
    return SemklModel(
        bank=KernelBank.from_dict(doc["bank"]),
        weights=KernelWeights(tuple(doc["gamma"]), doc["p"]),
        alpha=np.asarray(doc["alpha"], dtype=float),
        alpha_star=np.asarray(doc["alpha_star"], dtype=float),
        b=float(doc["b"]),
        X_train=np.asarray(doc["X_train"], dtype=float),
        standardizer=std,
        target=QualityTarget(doc["target"]) if doc["target"] else None,
        converged=bool(doc["converged"]),
        iters=int(doc["iters"]),
        hyperparams=hp,
        objective_trace=tuple(doc.get("objective_trace", ())),
        degenerate_weights=bool(doc.get("degenerate_weights", False)),
    )
