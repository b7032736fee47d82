"""Blind-perception scoring: 284-value feature assembly, min-max scaling,
an epsilon-insensitive support vector regressor trained by sequential
pairwise dual updates, and model persistence.

The solver keeps the artifact free of external regression dependencies
and fully deterministic: same data, same seed, same model bytes.
"""

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConvergenceError, DataError, ModelFormatError
from .features import ChannelConfig, FeatureVector, global_features, local_features
from .image_io import YCbCrImage

MODEL_VERSION = "nrbp-model/1"
NRBP_LEN = 284

# log2 hyperparameter ranges searched when no explicit c is given.
DEFAULT_C_EXPONENTS = tuple(range(-1, 11))
DEFAULT_GAMMA_EXPONENTS = tuple(range(-10, 3))


def nrbp_features(img: YCbCrImage, cfg: ChannelConfig = ChannelConfig()) -> FeatureVector:
    """284 values: the whole-image vector followed by the patch-averaged one."""
    values = np.concatenate([global_features(img, cfg).values,
                             local_features(img, cfg).values])
    return FeatureVector(schema="NRBP-284", values=values)


@dataclass(frozen=True)
class SvrConfig:
    """Training settings. With `grid` set (or when `c` is left unset) the
    cost and kernel width are picked by cross-validated grid search."""

    c: Optional[float] = None
    epsilon: float = 0.1
    gamma: object = "auto"  # positive real, or "auto" for 1/n_features
    grid: Optional[Tuple[Sequence[int], Sequence[int]]] = None
    folds: int = 5
    tol: float = 1e-3
    max_passes: int = 10_000_000
    seed: int = 0

    def __post_init__(self):
        if self.c is not None and self.c <= 0:
            raise DataError("c must be positive")
        if self.epsilon <= 0:
            raise DataError("epsilon must be positive")
        if self.gamma != "auto" and float(self.gamma) <= 0:
            raise DataError("gamma must be positive or 'auto'")
        if self.folds < 2:
            raise DataError("need at least 2 folds")
        if self.tol <= 0 or self.max_passes < 1:
            raise DataError("tol and max_passes must be positive")


@dataclass(frozen=True)
class SvrModel:
    version: str
    feature_schema: str
    scale_min: np.ndarray
    scale_max: np.ndarray
    support_vectors: np.ndarray  # scaled rows, shape (m, d); m may be 0
    dual_coefs: np.ndarray
    bias: float
    kernel_gamma: float
    train_meta: dict

    def __post_init__(self):
        smin = np.asarray(self.scale_min, dtype=np.float64)
        smax = np.asarray(self.scale_max, dtype=np.float64)
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        coef = np.asarray(self.dual_coefs, dtype=np.float64)
        if sv.size == 0:
            sv = sv.reshape(0, smin.size)
        for name, val in (("scale_min", smin), ("scale_max", smax),
                          ("support_vectors", sv), ("dual_coefs", coef)):
            object.__setattr__(self, name, val)
        if self.version != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {self.version!r}")
        d = smin.size
        if self.feature_schema == "NRBP-284" and d != NRBP_LEN:
            raise ModelFormatError(f"NRBP-284 model must have {NRBP_LEN} dims, got {d}")
        if smax.size != d or sv.shape[1:] != (d,):
            raise ModelFormatError("scale vectors and support vectors disagree on length")
        if np.any(smin > smax):
            raise ModelFormatError("scale_min exceeds scale_max")
        if coef.shape != (sv.shape[0],):
            raise ModelFormatError("one dual coefficient per support vector required")
        if self.kernel_gamma <= 0:
            raise ModelFormatError("kernel_gamma must be positive")
        cost = self.train_meta.get("c")
        if cost is not None and coef.size and np.max(np.abs(coef)) > cost:
            raise ModelFormatError("dual coefficient outside the box constraint")

    @property
    def n_dims(self) -> int:
        return self.scale_min.size


def fit_scaler(rows) -> Tuple[np.ndarray, np.ndarray]:
    """Per-dimension min and max over the training rows. Dimensions with
    min == max are constant and scale to 0 at prediction time."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"scaler needs >= 2 rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature value")
    return X.min(axis=0), X.max(axis=0)


def apply_scaler(rows: np.ndarray, smin: np.ndarray, smax: np.ndarray) -> np.ndarray:
    """Map each dimension to [-1, 1] over the training range; constant
    dimensions map to 0."""
    X = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    span = smax - smin
    safe = np.where(span == 0.0, 1.0, span)
    out = -1.0 + 2.0 * (X - smin) / safe
    out[:, span == 0.0] = 0.0
    return out


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def _solve_smo(kmat: np.ndarray, target: np.ndarray, c: float, epsilon: float,
               tol: float, max_passes: int) -> Tuple[np.ndarray, float, float]:
    """Dual epsilon-SVR solver, maximal-violating-pair updates.

    Works on the doubled variable vector a = [alpha; alpha*] with signs
    y = [+1; -1], linear term p = [eps - t; eps + t] and gradient
    G = Qa + p maintained incrementally. Converged when the largest KKT
    violation m - M drops to tol. Returns (beta, bias, residual).
    """
    n = target.size
    y = np.concatenate([np.ones(n), -np.ones(n)])
    a = np.zeros(2 * n)
    grad = np.concatenate([epsilon - target, epsilon + target])
    kext = np.vstack([kmat, kmat])

    residual = np.inf
    for _ in range(max_passes):
        neg_yg = -y * grad
        up = ((y > 0) & (a < c)) | ((y < 0) & (a > 0))
        low = ((y < 0) & (a < c)) | ((y > 0) & (a > 0))
        if not up.any() or not low.any():
            residual = 0.0
            break
        i = int(np.argmax(np.where(up, neg_yg, -np.inf)))
        j = int(np.argmin(np.where(low, neg_yg, np.inf)))
        residual = float(neg_yg[i] - neg_yg[j])
        if residual <= tol:
            break
        ki, kj = i % n, j % n
        quad = kmat[ki, ki] + kmat[kj, kj] - 2.0 * kmat[ki, kj]
        step = residual / max(quad, 1e-12)
        cap_i = (c - a[i]) if y[i] > 0 else a[i]
        cap_j = a[j] if y[j] > 0 else (c - a[j])
        step = min(step, cap_i, cap_j)
        a[i] = min(max(a[i] + y[i] * step, 0.0), c)
        a[j] = min(max(a[j] - y[j] * step, 0.0), c)
        grad += step * y * (kext[:, ki] - kext[:, kj])
    else:
        raise ConvergenceError(
            f"no convergence within {max_passes} updates", residual=residual)

    free = (a > 0.0) & (a < c)
    if free.any():
        bias = float(np.mean(neg_yg[free]))
    else:
        up = ((y > 0) & (a < c)) | ((y < 0) & (a > 0))
        low = ((y < 0) & (a < c)) | ((y > 0) & (a > 0))
        hi = float(np.max(np.where(up, neg_yg, -np.inf))) if up.any() else 0.0
        lo = float(np.min(np.where(low, neg_yg, np.inf))) if low.any() else 0.0
        bias = (hi + lo) / 2.0
    beta = a[:n] - a[n:]
    return beta, bias, float(residual)


def _cv_rmse(dist: np.ndarray, t: np.ndarray, c: float, gam: float,
             fold_parts, cfg: SvrConfig) -> float:
    """Pooled validation RMSE over the precomputed fold partition."""
    all_idx = np.arange(t.size)
    sq_sum = 0.0
    for part in fold_parts:
        test_idx = part
        train_idx = np.setdiff1d(all_idx, test_idx)
        ktrain = np.exp(-gam * dist[np.ix_(train_idx, train_idx)])
        beta, bias, _ = _solve_smo(ktrain, t[train_idx], c, cfg.epsilon,
                                   cfg.tol, cfg.max_passes)
        kval = np.exp(-gam * dist[np.ix_(test_idx, train_idx)])
        pred = kval @ beta + bias
        sq_sum += float(np.sum((pred - t[test_idx]) ** 2))
    return float(np.sqrt(sq_sum / t.size))


def _grid_search(Xs: np.ndarray, t: np.ndarray, cfg: SvrConfig,
                 c_exps: Sequence[int], g_exps: Sequence[int]) -> Tuple[float, float]:
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(t.size)
    folds = min(cfg.folds, t.size)
    fold_parts = np.array_split(perm, folds)
    dist = _sq_dists(Xs, Xs)
    best = (np.inf, None, None)
    for ce in c_exps:
        for ge in g_exps:
            c, gam = 2.0 ** ce, 2.0 ** ge
            rmse = _cv_rmse(dist, t, c, gam, fold_parts, cfg)
            if rmse < best[0]:
                best = (rmse, c, gam)
    return best[1], best[2]


def svr_train(X, y, cfg: SvrConfig = SvrConfig()) -> SvrModel:
    """Fit the regressor. Hyperparameters come from cfg.c/cfg.gamma when
    c is given, otherwise from cross-validated log2 grid search (the grid
    from cfg.grid when present, else the default ranges)."""
    Xa = np.asarray(X, dtype=np.float64)
    t = np.asarray(y, dtype=np.float64)
    if Xa.ndim != 2 or Xa.shape[0] != t.size:
        raise DataError(f"X/y shapes disagree: {Xa.shape} vs {t.shape}")
    if t.size < 10:
        raise DataError(f"need >= 10 training rows, got {t.size}")
    if not (np.all(np.isfinite(Xa)) and np.all(np.isfinite(t))):
        raise DataError("non-finite training value")

    smin, smax = fit_scaler(Xa)
    Xs = apply_scaler(Xa, smin, smax)
    d = Xa.shape[1]
    gamma = 1.0 / d if cfg.gamma == "auto" else float(cfg.gamma)

    if cfg.grid is not None:
        c, gamma = _grid_search(Xs, t, cfg, cfg.grid[0], cfg.grid[1])
    elif cfg.c is not None:
        c = float(cfg.c)
    else:
        c, gamma = _grid_search(Xs, t, cfg, DEFAULT_C_EXPONENTS, DEFAULT_GAMMA_EXPONENTS)

    kmat = np.exp(-gamma * _sq_dists(Xs, Xs))
    beta, bias, _ = _solve_smo(kmat, t, c, cfg.epsilon, cfg.tol, cfg.max_passes)
    keep = beta != 0.0
    schema = "NRBP-284" if d == NRBP_LEN else f"RAW-{d}"
    return SvrModel(
        version=MODEL_VERSION, feature_schema=schema,
        scale_min=smin, scale_max=smax,
        support_vectors=Xs[keep], dual_coefs=beta[keep],
        bias=bias, kernel_gamma=gamma,
        train_meta={"c": float(c), "epsilon": float(cfg.epsilon),
                    "seed": int(cfg.seed), "n_train": int(t.size)})


def svr_predict(model: SvrModel, x) -> float:
    """Kernel expansion over the stored support vectors; the raw input is
    scaled with the model's training ranges first. No output clamping."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    if xa.size != model.n_dims:
        raise ModelFormatError(
            f"input has {xa.size} dims, model expects {model.n_dims}")
    if not np.all(np.isfinite(xa)):
        raise DataError("non-finite prediction input")
    if model.support_vectors.shape[0] == 0:
        return float(model.bias)
    xs = apply_scaler(xa, model.scale_min, model.scale_max)[0]
    dd = np.sum((model.support_vectors - xs) ** 2, axis=1)
    return float(model.dual_coefs @ np.exp(-model.kernel_gamma * dd) + model.bias)


def save_model(model: SvrModel, path: str) -> None:
    doc = {
        "version": model.version,
        "feature_schema": model.feature_schema,
        "scale_min": [float(v) for v in model.scale_min],
        "scale_max": [float(v) for v in model.scale_max],
        "support_vectors": [[float(v) for v in row] for row in model.support_vectors],
        "dual_coefs": [float(v) for v in model.dual_coefs],
        "bias": float(model.bias),
        "kernel_gamma": float(model.kernel_gamma),
        "train_meta": model.train_meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path: str) -> SvrModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a valid model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model file must hold a JSON object")
    required = ("version", "feature_schema", "scale_min", "scale_max",
                "support_vectors", "dual_coefs", "bias", "kernel_gamma", "train_meta")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ModelFormatError(f"{path}: missing fields {missing}")
    return SvrModel(
        version=doc["version"], feature_schema=doc["feature_schema"],
        scale_min=np.asarray(doc["scale_min"], dtype=np.float64),
        scale_max=np.asarray(doc["scale_max"], dtype=np.float64),
        support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
        dual_coefs=np.asarray(doc["dual_coefs"], dtype=np.float64),
        bias=float(doc["bias"]), kernel_gamma=float(doc["kernel_gamma"]),
        train_meta=dict(doc["train_meta"]))
