"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or computation error.
Human-readable numbers use 6 significant digits; `--json` switches to a
machine format that is byte-identical across runs for the same inputs.

Setting precedence: command-line flag, then `--config` file (plain
`key = value` lines), then the DQA_PPD environment variable (ppd only),
then built-in defaults.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .errors import ConfigMismatchError, DataError, DqaError
from .evaluation import krcc, plcc_rmse, run_protocol, srcc
from .features import ChannelConfig
from .image_io import decode_image, load_manifest
from .structure import LocalMomentConfig
from .nrbp import (SvrConfig, SvrModel, load_model, nrbp_features, save_model,
                   svr_predict, svr_train)
from .rrpd import RRFeaturePacket, extract_rr_packet, rrpd_score

_IMAGE_SUFFIXES = {".png", ".bmp", ".ppm"}


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _read_config(path: str) -> dict:
    doc = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigMismatchError(f"{path}:{ln}: expected 'key = value'")
            key, val = line.split("=", 1)
            doc[key.strip()] = val.strip().strip('"').strip("'")
    return doc


class _Settings:
    """Resolves one option through the precedence chain; reports whether
    the value was set explicitly or fell through to the default."""

    def __init__(self, args):
        self.args = args
        path = getattr(args, "config", None)
        self.doc = _read_config(path) if path else {}

    def get(self, name, cast, default, env: Optional[str] = None):
        val = getattr(self.args, name, None)
        source = None
        if val is not None:
            source = "flag"
        elif name in self.doc:
            val, source = self.doc[name], "config"
        elif env is not None and os.environ.get(env) is not None:
            val, source = os.environ[env], "env"
        if source is None:
            return default, False
        try:
            return cast(val), True
        except (TypeError, ValueError) as exc:
            raise ConfigMismatchError(f"bad value for {name} (from {source}): {val!r}") from exc


def _channel_config(st: _Settings, fallback_ppd: Optional[float] = None) -> ChannelConfig:
    ppd, explicit = st.get("ppd", float, None, env="DQA_PPD")
    if not explicit:
        ppd = fallback_ppd if fallback_ppd is not None else 32.0
    patch, _ = st.get("patch_size", int, 32)
    window, _ = st.get("window", int, 7)
    sigma_w, _ = st.get("sigma_w", float, 7.0 / 6.0)
    c_stab, _ = st.get("c_stab", float, 1.0)
    moments = LocalMomentConfig(window=window, sigma_w=sigma_w, c_stab=c_stab)
    return ChannelConfig(patch_size=patch, ppd=ppd, local_moment=moments)


def _svr_config(st: _Settings, args) -> SvrConfig:
    c, c_set = st.get("c", float, None)
    gamma, _ = st.get("gamma", lambda v: v if v == "auto" else float(v), "auto")
    epsilon, _ = st.get("epsilon", float, 0.1)
    folds, _ = st.get("folds", int, 5)
    tol, _ = st.get("tol", float, 1e-3)
    seed, _ = st.get("seed", int, 0)
    if getattr(args, "grid", False) or not c_set:
        c = None  # grid-search path
    return SvrConfig(c=c, epsilon=epsilon, gamma=gamma, grid=None,
                     folds=folds, tol=tol, seed=seed)


@dataclass(frozen=True)
class SweepResult:
    """Ranked candidate scores; `rows` is quality-sorted, best first."""

    rows: List[Tuple[str, float, str]]
    best: str


def _list_candidates(directory: str) -> List[str]:
    if not os.path.isdir(directory):
        raise DataError(f"{directory}: not a directory")
    names = sorted(n for n in os.listdir(directory)
                   if os.path.splitext(n)[1].lower() in _IMAGE_SUFFIXES)
    if not names:
        raise DataError(f"{directory}: no candidate images (.png/.bmp/.ppm)")
    return [os.path.join(directory, n) for n in names]


def _load_packet_or_image(ref: str, cfg: ChannelConfig) -> RRFeaturePacket:
    if ref.lower().endswith(".json"):
        with open(ref, "r", encoding="utf-8") as fh:
            return RRFeaturePacket.from_json(fh.read())
    return extract_rr_packet(decode_image(ref), cfg)


def sweep(ref: Optional[str], candidates_dir: str, mode: str,
          model: Optional[SvrModel], cfg: ChannelConfig) -> SweepResult:
    """Score every image in the directory and rank them. rrpd mode sorts
    ascending (lower discrepancy is better); nrbp mode sorts descending
    (higher predicted opinion is better)."""
    paths = _list_candidates(candidates_dir)
    rows: List[Tuple[str, float, str]] = []
    if mode == "rrpd":
        if ref is None:
            raise UsageError("rrpd sweep needs --ref (image or packet file)")
        packet = _load_packet_or_image(ref, cfg)
        for p in paths:
            rows.append((p, rrpd_score(packet, decode_image(p), cfg), mode))
        rows.sort(key=lambda r: r[1])
    elif mode == "nrbp":
        if model is None:
            raise UsageError("nrbp sweep needs --model")
        for p in paths:
            feats = nrbp_features(decode_image(p), cfg)
            rows.append((p, svr_predict(model, feats.values), mode))
        rows.sort(key=lambda r: -r[1])
    else:
        raise UsageError(f"unknown sweep mode {mode!r}")
    return SweepResult(rows=rows, best=rows[0][0])


def _cmd_rrpd_extract(args) -> int:
    st = _Settings(args)
    cfg = _channel_config(st)
    packet = extract_rr_packet(decode_image(args.input), cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(packet.to_json())
    if args.json:
        print(json.dumps({"output": args.output, "ppd": packet.ppd}))
    else:
        print(f"wrote {args.output}")
    return 0


def _cmd_rrpd_score(args) -> int:
    st = _Settings(args)
    if args.packet:
        with open(args.packet, "r", encoding="utf-8") as fh:
            packet = RRFeaturePacket.from_json(fh.read())
    else:
        packet = extract_rr_packet(decode_image(args.ref), _channel_config(st))
    cfg = _channel_config(st, fallback_ppd=packet.ppd)
    q = rrpd_score(packet, decode_image(args.input), cfg)
    if args.json:
        print(json.dumps({"score": q, "lower_is_better": True}))
    else:
        print(_fmt(q))
    return 0


def _cmd_nrbp_features(args) -> int:
    st = _Settings(args)
    cfg = _channel_config(st)
    vec = nrbp_features(decode_image(args.input), cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(vec.to_json())
    if args.json:
        print(json.dumps({"output": args.output, "schema": vec.schema}))
    else:
        print(f"wrote {args.output}")
    return 0


def _cmd_nrbp_train(args) -> int:
    st = _Settings(args)
    cfg = _channel_config(st)
    manifest = load_manifest(args.manifest)
    X = []
    y = []
    for entry in manifest.entries:
        X.append(nrbp_features(decode_image(entry.image_path), cfg).values)
        y.append(entry.mos)
    model = svr_train(X, y, _svr_config(st, args))
    save_model(model, args.model)
    meta = model.train_meta
    if args.json:
        print(json.dumps({"model": args.model, "c": meta["c"],
                          "gamma": model.kernel_gamma,
                          "support_vectors": int(model.dual_coefs.size),
                          "n_train": meta["n_train"]}))
    else:
        print(f"wrote {args.model} (c={_fmt(meta['c'])} gamma={_fmt(model.kernel_gamma)} "
              f"sv={model.dual_coefs.size} n={meta['n_train']})")
    return 0


def _cmd_nrbp_predict(args) -> int:
    st = _Settings(args)
    cfg = _channel_config(st)
    model = load_model(args.model)
    if args.manifest and not args.output:
        raise UsageError("batch predict needs -o/--output")
    if args.input:
        score = svr_predict(model, nrbp_features(decode_image(args.input), cfg).values)
        if args.json:
            print(json.dumps({"score": score, "higher_is_better": True}))
        else:
            print(_fmt(score))
        return 0
    manifest = load_manifest(args.manifest)
    scores = []
    for entry in manifest.entries:
        feats = nrbp_features(decode_image(entry.image_path), cfg)
        scores.append((entry.image_path, svr_predict(model, feats.values)))
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_path", "score"])
        for path, score in scores:
            w.writerow([path, repr(score)])
    if args.json:
        print(json.dumps({"output": args.output, "n": len(scores)}))
    else:
        print(f"wrote {args.output} ({len(scores)} rows)")
    return 0


def _load_predictions(path: str) -> dict:
    preds = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["image_path", "score"]:
            raise DataError(f"{path}: expected header 'image_path,score'")
        for ln, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{ln}: expected 2 columns, got {len(row)}")
            key = row[0].strip()
            if key in preds:
                raise DataError(f"{path}:{ln}: duplicate image_path {key!r}")
            try:
                preds[key] = float(row[1])
            except ValueError as exc:
                raise DataError(f"{path}:{ln}: bad score {row[1]!r}") from exc
    return preds


def _print_criteria(out: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(out))
        return
    for key in ("n", "srcc", "krcc", "plcc", "rmse"):
        val = out[key]
        print(f"{key}: {val if key == 'n' else _fmt(val)}")
    print("logistic: " + " ".join(_fmt(b) for b in out["logistic"]))


def _cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    preds = _load_predictions(args.pred)
    want = {e.image_path for e in manifest.entries}
    have = set(preds)
    if want != have:
        missing = sorted(want - have)[:3]
        extra = sorted(have - want)[:3]
        raise DataError(f"prediction/manifest mismatch; missing={missing} extra={extra}")
    mos = [e.mos for e in manifest.entries]
    obj = [preds[e.image_path] for e in manifest.entries]
    plcc, rmse, params = plcc_rmse(obj, mos)
    out = {"n": len(mos), "srcc": srcc(mos, obj), "krcc": krcc(mos, obj),
           "plcc": plcc, "rmse": rmse, "logistic": list(params)}
    _print_criteria(out, args.json)
    return 0


def _cmd_protocol(args) -> int:
    st = _Settings(args)
    cfg = _channel_config(st)
    manifest = load_manifest(args.manifest)
    splits, _ = st.get("splits", int, 100)
    seed, _ = st.get("seed", int, 0)
    report = run_protocol(manifest, _svr_config(st, args), splits=splits,
                          seed=seed, cfg=cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    out = {"n": report.n, "srcc": report.srcc, "krcc": report.krcc,
           "plcc": report.plcc, "rmse": report.rmse,
           "logistic": list(report.logistic),
           "protocol_meta": report.protocol_meta}
    if args.json:
        print(json.dumps(out))
    else:
        _print_criteria(out, False)
        meta = report.protocol_meta
        print(f"protocol: {meta['splits']} splits, seed {meta['seed']}, "
              f"{meta['aggregation']} aggregation")
    return 0


def _cmd_sweep(args) -> int:
    st = _Settings(args)
    if args.mode == "rrpd" and not args.ref:
        raise UsageError("--mode rrpd requires --ref")
    if args.mode == "nrbp" and not args.model:
        raise UsageError("--mode nrbp requires --model")
    fallback = None
    if args.mode == "rrpd" and args.ref and args.ref.lower().endswith(".json"):
        with open(args.ref, "r", encoding="utf-8") as fh:
            fallback = RRFeaturePacket.from_json(fh.read()).ppd
    cfg = _channel_config(st, fallback_ppd=fallback)
    model = load_model(args.model) if args.mode == "nrbp" else None
    result = sweep(args.ref, args.candidates, args.mode, model, cfg)

    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["candidate_path", "score", "mode"])
            for path, score, mode in result.rows:
                w.writerow([path, repr(score), mode])
    if args.json:
        print(json.dumps({"mode": args.mode, "best": result.best,
                          "rows": [[p, s] for p, s, _ in result.rows]}))
        return 0
    direction = "lower is better" if args.mode == "rrpd" else "higher is better"
    print(f"rank  score ({args.mode}, {direction})  candidate")
    for rank, (path, score, _) in enumerate(result.rows, 1):
        print(f"{rank:>4}  {_fmt(score):>14}  {path}")
    print(f"best: {result.best}")
    return 0


def _add_common(sub, imaging: bool = True):
    sub.add_argument("--config", help="key = value settings file")
    sub.add_argument("--json", action="store_true", help="machine-readable output")
    if imaging:
        sub.add_argument("--ppd", type=float, help="pixels per degree of visual angle")
        sub.add_argument("--patch-size", type=int, dest="patch_size",
                         help="local-channel patch edge, default 32")
        sub.add_argument("--window", type=int, help="local-moment window side, default 7")
        sub.add_argument("--sigma-w", type=float, dest="sigma_w",
                         help="local-moment Gaussian spread, default 7/6")
        sub.add_argument("--c-stab", type=float, dest="c_stab",
                         help="normalization stabilizer, default 1.0")


def _add_svr_flags(sub):
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--c", type=float, help="SVR cost; skips the grid search")
    group.add_argument("--grid", action="store_true",
                       help="force cross-validated grid search (the default)")
    sub.add_argument("--gamma", help="RBF width, or 'auto' for 1/n_features")
    sub.add_argument("--epsilon", type=float, help="SVR tube width, default 0.1")
    sub.add_argument("--folds", type=int, help="CV folds for the grid search")
    sub.add_argument("--tol", type=float, help="solver KKT tolerance")
    sub.add_argument("--seed", type=int, help="fold-split seed")


def _build_parser() -> _Parser:
    parser = _Parser(prog="dqa", description="Dehazed-image quality assessment")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    rrpd = subs.add_parser("rrpd", help="reduced-reference scoring")
    rrpd_subs = rrpd.add_subparsers(dest="subcommand", required=True)
    ext = rrpd_subs.add_parser("extract", help="build a side-channel feature packet")
    ext.add_argument("-i", "--input", required=True, help="haze-free reference image")
    ext.add_argument("-o", "--output", required=True, help="packet JSON path")
    _add_common(ext)
    ext.set_defaults(func=_cmd_rrpd_extract)
    sco = rrpd_subs.add_parser("score", help="score a dehazed image against a packet")
    sco.add_argument("-i", "--input", required=True, help="dehazed image")
    src = sco.add_mutually_exclusive_group(required=True)
    src.add_argument("--packet", help="packet JSON from 'rrpd extract'")
    src.add_argument("--ref", help="reference image (extracts on the fly)")
    _add_common(sco)
    sco.set_defaults(func=_cmd_rrpd_score)

    nrbp = subs.add_parser("nrbp", help="no-reference scoring")
    nrbp_subs = nrbp.add_subparsers(dest="subcommand", required=True)
    fea = nrbp_subs.add_parser("features", help="write the 284-value feature vector")
    fea.add_argument("-i", "--input", required=True)
    fea.add_argument("-o", "--output", required=True)
    _add_common(fea)
    fea.set_defaults(func=_cmd_nrbp_features)
    tra = nrbp_subs.add_parser("train", help="train the opinion regressor")
    tra.add_argument("--manifest", required=True, help="training manifest CSV")
    tra.add_argument("--model", required=True, help="output model JSON")
    _add_common(tra)
    _add_svr_flags(tra)
    tra.set_defaults(func=_cmd_nrbp_train)
    pre = nrbp_subs.add_parser("predict", help="predict opinion scores")
    pre.add_argument("--model", required=True)
    tgt = pre.add_mutually_exclusive_group(required=True)
    tgt.add_argument("-i", "--input", help="single image; prints the score")
    tgt.add_argument("--manifest", help="batch manifest; needs -o")
    pre.add_argument("-o", "--output", help="batch CSV output")
    _add_common(pre)
    pre.set_defaults(func=_cmd_nrbp_predict)

    ev = subs.add_parser("eval", help="correlation criteria for a prediction file")
    ev.add_argument("--pred", required=True, help="CSV of image_path,score")
    ev.add_argument("--manifest", required=True)
    _add_common(ev, imaging=False)
    ev.set_defaults(func=_cmd_eval)

    pro = subs.add_parser("protocol", help="repeated-split training evaluation")
    pro.add_argument("--manifest", required=True)
    pro.add_argument("--splits", type=int, help="repetitions, default 100")
    pro.add_argument("--out", help="write the report JSON here")
    _add_common(pro)
    _add_svr_flags(pro)
    pro.set_defaults(func=_cmd_protocol)

    sw = subs.add_parser("sweep", help="rank dehazer outputs by predicted quality")
    sw.add_argument("candidates", help="directory of candidate images")
    sw.add_argument("--mode", choices=("rrpd", "nrbp"), required=True)
    sw.add_argument("--ref", help="reference image or packet (rrpd mode)")
    sw.add_argument("--model", help="model JSON (nrbp mode)")
    sw.add_argument("--csv", help="also write the ranking as CSV")
    _add_common(sw)
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DqaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
