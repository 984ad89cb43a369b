"""
One-Class SVM with a Gaussian kernel, trained on a single (healthy) class.

The nu-formulation dual is solved directly:

    minimize    1/2 sum_ij a_i a_j K(x_i, x_j)
    subject to  0 <= a_i <= 1 / (nu N),   sum_i a_i = 1

with an SMO-style solver that updates two coordinates per step, picking the
pair by maximal KKT violation (second-order selection for the partner). The
decision function is ``f(x) = sum_i a_i K(x_i, x) - rho``; f >= 0 marks an
inlier.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConvergenceError, DataError

MODEL_FORMAT_VERSION = 1
STD_FLOOR = 1e-12

DEFAULT_NU_GRID = (0.01, 0.02, 0.05, 0.1, 0.2)
DEFAULT_GAMMA_GRID = tuple(2.0**e for e in range(-10, 5))


@dataclass(frozen=True)
class OcSvmHyperParams:
    nu: float
    gamma: float

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Score:
    value: float

    @property
    def is_inlier(self) -> bool:
        return self.value >= 0


def gaussian_kernel(x, y, gamma: float, squared: bool = True) -> float:
    """exp(-gamma ||x - y||^2), or exp(-gamma ||x - y||) with ``squared=False``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = x - y
    dist = float(np.dot(d, d))
    return math.exp(-gamma * (dist if squared else math.sqrt(dist)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float, squared: bool = True) -> np.ndarray:
    d = cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")
    if not squared:
        d = np.sqrt(d)
    return np.exp(-gamma * d)


def fit_scaler(train_set) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and (population) standard deviation, std floored at 1e-12."""
    x = np.asarray(train_set, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("scaler needs a 2-D matrix with at least 2 rows")
    return x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR)


def apply_scaler(x, mean, std) -> np.ndarray:
    return (np.asarray(x, dtype=float) - mean) / std


@dataclass
class SolverResult:
    alpha: np.ndarray
    rho: float
    n_iter: int
    violation: float


def solve_dual(k: np.ndarray, nu: float, tol: float = 1e-6,
               max_iter: int = 10_000_000) -> SolverResult:
    """SMO on the nu-One-Class dual for a precomputed kernel matrix ``k``.

    Stops once max_{a_j > 0} G_j - min_{a_i < C} G_i < tol, where G = K a.
    ``rho`` here comes from the solver's gradient; :func:`train` recomputes it
    with the scoring arithmetic.
    """
    n = k.shape[0]
    c = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_full = min(int(math.floor(nu * n)), n)
    alpha[:n_full] = c
    if n_full < n:
        alpha[n_full] = 1.0 - c * n_full
    alpha = np.clip(alpha, 0.0, c)
    grad = k @ alpha
    diag = np.diag(k).copy()

    it = 0
    violation = np.inf
    while True:
        up = alpha < c
        low = alpha > 0
        g_up = np.where(up, grad, np.inf)
        i = int(np.argmin(g_up))
        gmin = g_up[i]
        g_low = np.where(low, grad, -np.inf)
        violation = float(g_low.max() - gmin)
        if violation < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (violation {violation:.3g})")
        b = g_low - gmin
        cand = b > 0
        eta = np.maximum(diag[i] + diag - 2.0 * k[i], 1e-12)
        gain = np.where(cand, b * b / eta, -np.inf)
        j = int(np.argmax(gain))
        delta = b[j] / eta[j]
        room_i = c - alpha[i]
        if delta >= room_i and room_i <= alpha[j]:
            delta = room_i
            alpha[i] = c
            alpha[j] -= delta
            if alpha[j] < 0:
                alpha[j] = 0.0
        elif delta >= alpha[j]:
            delta = alpha[j]
            alpha[i] += delta
            alpha[j] = 0.0
        else:
            alpha[i] += delta
            alpha[j] -= delta
        grad += delta * (k[:, i] - k[:, j])
        it += 1

    return SolverResult(alpha, _offset(alpha, grad, c), it, violation)


def _offset(alpha: np.ndarray, grad: np.ndarray, c: float) -> float:
    """Mean gradient over margin SVs; midpoint of the feasible interval if there are none."""
    margin = (alpha > 0) & (alpha < c)
    if margin.any():
        return float(grad[margin].mean())
    at_upper = alpha >= c
    at_zero = alpha <= 0
    lo = grad[at_upper].max() if at_upper.any() else grad.min()
    hi = grad[at_zero].min() if at_zero.any() else grad.max()
    return float(0.5 * (lo + hi))


@dataclass
class OcSvmModel:
    support_vectors: np.ndarray     # in scaled feature space
    dual_coeffs: np.ndarray
    rho: float
    gamma: float
    nu: float
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    squared_kernel: bool = True
    feature_set: str = ""
    feature_names: list[str] = field(default_factory=list)
    n_train: int = 0
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return self.scaler_mean.size

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[1]}")
        xs = apply_scaler(x, self.scaler_mean, self.scaler_std)
        return _raw_decision(xs, self.support_vectors, self.dual_coeffs, self.gamma,
                             self.squared_kernel) - self.rho

    def score(self, feature) -> Score:
        f = np.asarray(feature, dtype=float)
        if f.ndim != 1:
            raise ValueError("score expects a single feature vector")
        return Score(float(self.decision_function(f)[0]))

    def predict_inlier(self, x) -> np.ndarray:
        return self.decision_function(x) >= 0

    def to_dict(self) -> dict:
        return {
            "format": "bearingad-ocsvm",
            "version": MODEL_FORMAT_VERSION,
            "feature_set": self.feature_set,
            "feature_names": list(self.feature_names),
            "kernel": "gaussian" if self.squared_kernel else "gaussian-unsquared",
            "gamma": self.gamma,
            "nu": self.nu,
            "rho": self.rho,
            "n_train": self.n_train,
            "n_iter": self.n_iter,
            "scaler_mean": self.scaler_mean.tolist(),
            "scaler_std": self.scaler_std.tolist(),
            "dual_coeffs": self.dual_coeffs.tolist(),
            "support_vectors": self.support_vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OcSvmModel":
        if d.get("format") != "bearingad-ocsvm":
            raise DataError("not a bearingad One-Class SVM model document")
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise DataError(f"unsupported model version {d.get('version')}")
        n_feat = len(d["scaler_mean"])
        return cls(
            support_vectors=np.asarray(d["support_vectors"], dtype=float).reshape(-1, n_feat),
            dual_coeffs=np.asarray(d["dual_coeffs"], dtype=float),
            rho=float(d["rho"]),
            gamma=float(d["gamma"]),
            nu=float(d["nu"]),
            scaler_mean=np.asarray(d["scaler_mean"], dtype=float),
            scaler_std=np.asarray(d["scaler_std"], dtype=float),
            squared_kernel=d["kernel"] == "gaussian",
            feature_set=d.get("feature_set", ""),
            feature_names=list(d.get("feature_names", [])),
            n_train=int(d.get("n_train", 0)),
            n_iter=int(d.get("n_iter", 0)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "OcSvmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _raw_decision(xs, sv, alpha, gamma, squared) -> np.ndarray:
    return kernel_matrix(xs, sv, gamma, squared) @ alpha


def train(features, params: OcSvmHyperParams, tol: float = 1e-6, max_iter: int = 10_000_000,
          squared_kernel: bool = True, scale: bool = True, feature_set: str = "",
          feature_names=(), kernel: np.ndarray | None = None) -> OcSvmModel:
    """Fit scaler (unless ``scale=False``) and solve the dual on healthy-only ``features``.

    ``kernel`` may pass a precomputed training kernel matrix for the scaled data.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("training needs an N x d matrix with N >= 2")
    if not np.all(np.isfinite(x)):
        raise DataError("training features contain non-finite values")
    if scale:
        mean, std = fit_scaler(x)
    else:
        mean, std = np.zeros(x.shape[1]), np.ones(x.shape[1])
    xs = apply_scaler(x, mean, std)
    k = kernel_matrix(xs, xs, params.gamma, squared_kernel) if kernel is None else kernel
    res = solve_dual(k, params.nu, tol=tol, max_iter=max_iter)
    sv = res.alpha > 0
    sv_x, sv_a = xs[sv], res.alpha[sv]
    # Recompute the offset with the exact arithmetic used at scoring time.
    g = _raw_decision(xs, sv_x, sv_a, params.gamma, squared_kernel)
    rho = _offset(res.alpha, g, 1.0 / (params.nu * x.shape[0]))
    return OcSvmModel(sv_x, sv_a, rho, params.gamma, params.nu, mean, std, squared_kernel,
                      feature_set, list(feature_names), x.shape[0], res.n_iter)


@dataclass
class GridSearchResult:
    params: OcSvmHyperParams
    model: OcSvmModel
    rates: dict    # (nu, gamma) -> eval inlier rate


def grid_search(train_set, eval_set, nu_grid=DEFAULT_NU_GRID, gamma_grid=DEFAULT_GAMMA_GRID,
                tol: float = 1e-6, squared_kernel: bool = True, **train_kw) -> GridSearchResult:
    """Exhaustive search for the (nu, gamma) cell with the highest inlier rate on ``eval_set``.

    Ties go to the larger nu, then to the smaller gamma.
    """
    nu_grid = sorted(set(float(v) for v in nu_grid))
    gamma_grid = sorted(set(float(v) for v in gamma_grid))
    if not nu_grid or not gamma_grid:
        raise ValueError("grid search needs non-empty nu and gamma grids")
    x = np.asarray(train_set, dtype=float)
    ev = np.atleast_2d(np.asarray(eval_set, dtype=float))
    if ev.shape[0] == 0 or ev.shape[1] != x.shape[1]:
        raise DataError("eval set must be non-empty with the training set's dimension")
    mean, std = fit_scaler(x)
    xs = apply_scaler(x, mean, std)
    d2 = cdist(xs, xs, "sqeuclidean")
    dist = d2 if squared_kernel else np.sqrt(d2)

    rates = {}
    best = None
    best_key = None
    for gamma in gamma_grid:
        k = np.exp(-gamma * dist)
        for nu in nu_grid:
            params = OcSvmHyperParams(nu, gamma)
            model = train(x, params, tol=tol, squared_kernel=squared_kernel, kernel=k, **train_kw)
            rate = float(np.mean(model.decision_function(ev) >= 0))
            rates[(nu, gamma)] = rate
            key = (rate, nu, -gamma)
            if best_key is None or key > best_key:
                best_key, best = key, (params, model)
    return GridSearchResult(best[0], best[1], rates)
