"""Command-line entry point: ``mvm train | descriptors | diagnose | gradcheck``.

Exit codes: 0 success, 1 a check failed (gradcheck), 2 bad input or config,
3 training aborted because a loss or gradient went non-finite.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io, metric
from .config import ConfigError, dump_config, load_config
from .gradcheck import CASES, run_gradcheck
from .kernels import BACKEND
from .tinynet import load_checkpoint, save_checkpoint
from .trainer import TrainingAborted, train

log = logging.getLogger("mvm")

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_ABORTED = 0, 1, 2, 3


def setup_logging():
    """Verbosity comes from ``MVM_LOG`` (level name or number); default WARNING."""
    raw = os.environ.get("MVM_LOG", "WARNING").strip()
    level = int(raw) if raw.isdigit() else getattr(logging, raw.upper(), None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _fail(msg, code=EXIT_INPUT):
    print(f"mvm: error: {msg}", file=sys.stderr)
    return code


def _resolve_metric(spec):
    if spec == "euclidean":
        return metric.EUCLIDEAN
    return metric.Metric(load_checkpoint(spec))


def _parse_p_list(text):
    ps = [float(t) for t in text.split(",") if t.strip()]
    if not ps:
        raise ValueError("empty --p list")
    return ps


# -- train --------------------------------------------------------------------

def _write_outputs(out: Path, trace, initial, generator, metric_net, snapshots):
    files = {"trace": "trace.csv", "eigen": "eigen.csv",
             "generator": "generator.ckpt", "metric": "metric.ckpt"}
    io.write_trace(out / files["trace"], trace)
    io.write_spectra(out / files["eigen"], [initial] + list(trace))
    save_checkpoint(generator, out / files["generator"])
    save_checkpoint(metric_net, out / files["metric"])
    snap_files = {}
    if snapshots:
        (out / "snapshots").mkdir(exist_ok=True)
        for epoch, pts in sorted(snapshots.items()):
            name = f"snapshots/fake_{epoch:05d}.csv"
            io.write_points(out / name, pts)
            snap_files[str(epoch)] = name
    files["snapshots"] = snap_files
    return files


def cmd_train(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot read config: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))

    started = time.time()
    status, code = "ok", EXIT_OK
    try:
        # overflow is reported through the non-finite abort, not numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            res = train(cfg)
        gen, met, trace, initial, snaps = res.generator, res.metric_net, res.trace, res.initial, res.snapshots
    except TrainingAborted as exc:
        print(f"mvm: {exc}", file=sys.stderr)
        status, code = "aborted", EXIT_ABORTED
        gen, met, trace, initial, snaps = exc.generator, exc.metric_net, exc.trace, exc.initial, {}
    finished = time.time()

    files = _write_outputs(out, trace, initial, gen, met, snaps)
    manifest = {
        "status": status,
        "version": __version__,
        "kernel_backend": BACKEND,
        "config_file": "config.txt",
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(cfg).items()},
        "output_dir": str(out.resolve()),
        "files": files,
        "epochs_completed": len(trace),
        "initial": {f: getattr(initial, f) for f in ("d_c", "d_g", "d_p", "d_H")},
        "started_unix": started,
        "finished_unix": finished,
        "wall_seconds": finished - started,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if code == EXIT_OK and trace:
        last = trace[-1]
        print(f"trained {len(trace)} epochs: d_c {initial.d_c:.4g} -> {last.d_c:.4g}, "
              f"d_H {initial.d_H:.4g} -> {last.d_H:.4g}")
    return code


# -- descriptors / diagnose -----------------------------------------------------

def _load_points(path, m):
    X = io.read_points(path)
    if m.kind == "pullback" and X.shape[1] != m.embedding.input_dim:
        raise ValueError(f"{path}: points have dimension {X.shape[1]}, "
                         f"checkpoint expects {m.embedding.input_dim}")
    return X


def cmd_descriptors(args) -> int:
    try:
        m = _resolve_metric(args.metric)
        ps = _parse_p_list(args.p)
        S = _load_points(args.input, m)
        rows = [("frechet_mean_index", metric.frechet_mean_discrete(S, m))]
        rows += [(f"diam_p{p:g}", metric.p_diameter(S, m, p)) for p in ps]
        if args.input2:
            S2 = _load_points(args.input2, m)
            if S2.shape[1] != S.shape[1]:
                raise ValueError("the two point files have different dimensions")
            rows.append(("centroid_distance", metric.centroid_distance(S, S2, m.embedding)))
            rows.append(("hausdorff", metric.hausdorff_distance(S, S2, m)))
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    lines = ["descriptor,value"] + [f"{k},{io.format_value(v)}" for k, v in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    try:
        m = _resolve_metric(args.metric)
        S = _load_points(args.input, m)
        M = metric.distance_matrix(S, m, normalize=True)
        ev = metric.top_eigenvalues(M, min(args.count, M.shape[0]))
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    lines = ["rank,eigenvalue"] + [f"{i},{io.format_value(v)}" for i, v in enumerate(ev, start=1)]
    _emit("\n".join(lines) + "\n", args.out)
    if args.pca:
        io.write_points(args.pca, metric.pca_project_2d(m.embed(S)))
    return EXIT_OK


def _emit(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# -- gradcheck ----------------------------------------------------------------

def cmd_gradcheck(args) -> int:
    report = run_gradcheck(seed=args.seed, corrupt=args.corrupt)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvm", description="metric-learning manifold matching toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training job from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("descriptors", help="Frechet mean, p-diameters and set distances of a point file")
    p.add_argument("--input", required=True)
    p.add_argument("--input2")
    p.add_argument("--metric", default="euclidean", help="'euclidean' or a metric checkpoint path")
    p.add_argument("--p", default="2", help="comma-separated p values, e.g. 1,2,8")
    p.add_argument("--out")
    p.set_defaults(func=cmd_descriptors)

    p = sub.add_parser("diagnose", help="top eigenvalues of the normalized distance matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--metric", default="euclidean")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--pca", help="write a 2-d PCA projection of the embedded points here")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("gradcheck", help="finite-difference check of every loss gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", choices=sorted(CASES), help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
