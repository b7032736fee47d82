"""Agreement criteria between objective scores and subjective opinion:
rank and ordinal correlation, the five-parameter logistic mapping with
linear correlation and error after mapping, and the repeated-split
train/test protocol for the learned metric.
"""

import json
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import rankdata

from .errors import DataError, FitError, ProtocolError
from .features import ChannelConfig
from .image_io import DatasetManifest, decode_image
from .nrbp import SvrConfig, nrbp_features, svr_predict, svr_train


class LogisticParams(NamedTuple):
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float


@dataclass(frozen=True)
class EvalReport:
    srcc: float
    krcc: float
    plcc: float
    rmse: float
    n: int
    logistic: LogisticParams
    protocol_meta: dict

    def to_json(self) -> str:
        return json.dumps({
            "srcc": self.srcc, "krcc": self.krcc,
            "plcc": self.plcc, "rmse": self.rmse, "n": self.n,
            "logistic": list(self.logistic),
            "protocol_meta": self.protocol_meta,
        })


def _paired(s, o, min_len: int) -> Tuple[np.ndarray, np.ndarray]:
    sa = np.asarray(s, dtype=np.float64)
    oa = np.asarray(o, dtype=np.float64)
    if sa.shape != oa.shape or sa.ndim != 1:
        raise DataError(f"score lists disagree: {sa.shape} vs {oa.shape}")
    if sa.size < min_len:
        raise DataError(f"need at least {min_len} pairs, got {sa.size}")
    return sa, oa


def srcc(s, o) -> float:
    """Rank correlation: one minus six times the summed squared rank
    differences over T(T^2 - 1). Ties get fractional (average) ranks."""
    sa, oa = _paired(s, o, 3)
    d = rankdata(sa, method="average") - rankdata(oa, method="average")
    t = sa.size
    return float(1.0 - 6.0 * np.sum(d * d) / (t * (t * t - 1.0)))


def krcc(s, o) -> float:
    """Ordinal association: twice the concordant-minus-discordant pair
    count over T(T-1). Pairs tied in either list count as neither."""
    sa, oa = _paired(s, o, 2)
    prod = np.sign(sa[:, None] - sa[None, :]) * np.sign(oa[:, None] - oa[None, :])
    conc = np.count_nonzero(prod > 0) // 2
    disc = np.count_nonzero(prod < 0) // 2
    t = sa.size
    return float(2.0 * (conc - disc) / (t * (t - 1.0)))


def _logistic_curve(beta: np.ndarray, q: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4, b5 = beta
    z = np.clip(b2 * (q - b3), -500.0, 500.0)
    return b1 * (0.5 - 1.0 / (1.0 + np.exp(z))) + b4 * q + b5


def logistic_fit(q, s) -> LogisticParams:
    """Least-squares fit of the five-parameter monotone mapping from raw
    scores to the opinion scale.

    Starts from a data-driven initialization (amplitude from the opinion
    range, slope from the score spread, the linear terms from ordinary
    regression) and refines by Levenberg-Marquardt. If the refined curve
    is no better than the plain linear start, the linear map wins.
    """
    qa, sa = _paired(q, s, 5)
    q_std = float(np.std(qa))
    if q_std == 0.0:
        raise FitError("scores are constant, nothing to map")

    q_mean = float(np.mean(qa))
    b4 = float(np.sum((qa - q_mean) * (sa - np.mean(sa))) / np.sum((qa - q_mean) ** 2))
    b5 = float(np.mean(sa) - b4 * q_mean)
    init = np.array([float(np.max(sa) - np.min(sa)), 4.0 / q_std, q_mean, b4, b5])
    linear = LogisticParams(0.0, init[1], init[2], b4, b5)
    lin_rmse = float(np.sqrt(np.mean((_logistic_curve(np.array(linear), qa) - sa) ** 2)))

    try:
        sol = least_squares(lambda beta: _logistic_curve(beta, qa) - sa, init,
                            method="lm", gtol=1e-10, ftol=1e-15, xtol=1e-15,
                            max_nfev=2000)
        fit_rmse = float(np.sqrt(np.mean(sol.fun ** 2)))
        ok = np.all(np.isfinite(sol.x))
    except Exception:
        fit_rmse, ok = np.inf, False
    if not ok or not fit_rmse < lin_rmse:
        return linear
    return LogisticParams(*[float(v) for v in sol.x])


def plcc_rmse(q, s) -> Tuple[float, float, LogisticParams]:
    """Linear correlation and error after the logistic mapping."""
    qa, sa = _paired(q, s, 5)
    params = logistic_fit(qa, sa)
    mapped = _logistic_curve(np.array(params), qa)
    dm = mapped - np.mean(mapped)
    ds = sa - np.mean(sa)
    denom = float(np.sqrt(np.sum(dm * dm) * np.sum(ds * ds)))
    plcc = float(np.sum(dm * ds) / denom) if denom > 0.0 else 0.0
    rmse = float(np.sqrt(np.mean((mapped - sa) ** 2)))
    return plcc, rmse, params


def _split_contents(contents: List[str], seed: int, rep: int) -> Tuple[set, set]:
    rng = np.random.default_rng((seed, rep))
    perm = rng.permutation(len(contents))
    n_test = max(1, min(int(round(0.2 * len(contents))), len(contents) - 1))
    test = {contents[k] for k in perm[:n_test]}
    train = {contents[k] for k in perm[n_test:]}
    return train, test


def run_protocol(db: DatasetManifest, model_cfg: SvrConfig, splits: int = 100,
                 seed: int = 0, cfg: ChannelConfig = ChannelConfig()) -> EvalReport:
    """Repeated content-wise 80/20 train/test evaluation.

    Features are extracted once per image; each repetition draws its own
    deterministic content split, trains a fresh regressor, and scores the
    held-out images. The report carries the per-criterion median and a
    pooled logistic fit over all held-out predictions.
    """
    contents = sorted({e.content_id for e in db.entries})
    if len(contents) < 2:
        raise ProtocolError(f"need >= 2 content groups, got {len(contents)}")
    if splits < 1:
        raise ProtocolError("splits must be >= 1")

    feats = {}
    for e in db.entries:
        if e.image_path not in feats:
            feats[e.image_path] = nrbp_features(decode_image(e.image_path), cfg).values

    crit = {"srcc": [], "krcc": [], "plcc": [], "rmse": []}
    pooled_pred: List[float] = []
    pooled_mos: List[float] = []
    for rep in range(splits):
        train_ids, test_ids = _split_contents(contents, seed, rep)
        train_rows = [e for e in db.entries if e.content_id in train_ids]
        test_rows = [e for e in db.entries if e.content_id in test_ids]
        model = svr_train([feats[e.image_path] for e in train_rows],
                          [e.mos for e in train_rows], model_cfg)
        preds = [svr_predict(model, feats[e.image_path]) for e in test_rows]
        mos = [e.mos for e in test_rows]
        crit["srcc"].append(srcc(mos, preds))
        crit["krcc"].append(krcc(mos, preds))
        p, r, _ = plcc_rmse(preds, mos)
        crit["plcc"].append(p)
        crit["rmse"].append(r)
        pooled_pred.extend(preds)
        pooled_mos.extend(mos)

    pooled = logistic_fit(pooled_pred, pooled_mos)
    return EvalReport(
        srcc=float(np.median(crit["srcc"])), krcc=float(np.median(crit["krcc"])),
        plcc=float(np.median(crit["plcc"])), rmse=float(np.median(crit["rmse"])),
        n=len(db.entries), logistic=pooled,
        protocol_meta={"splits": int(splits), "seed": int(seed),
                       "aggregation": "median"})
