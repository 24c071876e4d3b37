"""Command-line entry points: gen, train, evaluate, render.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
failure. Progress goes to stderr; results go to files only.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("firelattice")

# training defaults per profile; the desk profile trains on random crops
TRAIN_DEFAULTS = {
    "paper": {"epochs": 400, "lr": 1e-4, "batch_size": 8, "crop": None, "windows_per_seq": None},
    "desk": {"epochs": 30, "lr": 3e-3, "batch_size": 16, "crop": 32, "windows_per_seq": 8},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def _resolve(args, defaults: dict) -> dict:
    """Flags beat the config file, which beats ``defaults``."""
    cfg = {**defaults, **_load_config(getattr(args, "config", None))}
    for k, v in vars(args).items():
        if k in ("func", "config"):
            continue
        if v is not None:
            cfg[k] = v
        cfg.setdefault(k, v)
    return cfg


def _write_config(out: Path, name: str, cfg: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    clean = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}
    (out / f"{name}_config.json").write_text(json.dumps(clean, indent=1, sort_keys=True))


def cmd_gen(args) -> int:
    from .dataset import build_corpus
    cfg = _resolve(args, {"seed": 0, "jobs": 1, "max_steps": 400})
    out = Path(cfg["out"])
    t = time.time()
    manifest = build_corpus(cfg["corpus"], int(cfg["n"]), int(cfg["seed"]), out,
                            with_validation=bool(cfg["with_validation"]), jobs=int(cfg["jobs"]),
                            max_steps=int(cfg["max_steps"]))
    _write_config(out, "gen", cfg)
    sizes = {k: len(v) for k, v in manifest["splits"].items()}
    log.info("wrote %s to %s in %.1fs", sizes, out, time.time() - t)
    return EXIT_OK


def _training_setup(cfg):
    from .dataset import NormStats, load_manifest, load_split
    manifest = load_manifest(cfg["data"])
    return manifest, NormStats.from_json(manifest["norm_stats"]), tuple(manifest["channels"]), \
        load_split(cfg["data"], "train")


def cmd_train(args) -> int:
    from .dataset import training_arrays
    from .neural import build_model, save_model, train
    profile = args.profile or "desk"
    cfg = _resolve(args, {"profile": profile, "seed": 0, **TRAIN_DEFAULTS[profile]})
    manifest, stats, channels, seqs = _training_setup(cfg)
    model = build_model(cfg["model"], len(channels), cfg["profile"], int(cfg["seed"]))
    rng = np.random.default_rng(int(cfg["seed"]))
    x, y = training_arrays(seqs, channels, stats, history=model.history,
                           windows_per_seq=cfg["windows_per_seq"], crop=cfg["crop"], rng=rng)
    log.info("%s (%d parameters) on %d windows of shape %s", model.kind, model.n_params(), len(x), x.shape[1:])
    res = train(model, x, y, int(cfg["epochs"]), float(cfg["lr"]), int(cfg["batch_size"]), int(cfg["seed"]),
                progress=lambda e, loss: log.info("epoch %d loss %.6g", e + 1, loss))
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, extra={"corpus": manifest["corpus"], "channels": list(channels),
                                  "norm_stats": stats.to_json(), "initial_loss": res.initial_loss,
                                  "final_loss": res.final_loss})
    (out.parent / (out.name + ".loss.json")).write_text(json.dumps(
        {"initial": res.initial_loss, "final": res.final_loss, "history": res.history}, indent=1))
    _write_config(out.parent, out.name + ".train", cfg)
    log.info("loss %.6g -> %.6g; checkpoint %s", res.initial_loss, res.final_loss, out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .bootstrap import write_bands_csv
    from .dataset import NormStats, load_manifest, load_split
    from .evaluation import PredictorFactory, bootstrap_bands, per_sequence_metrics
    from .metrics import METRICS, TARGETS
    if (args.model is None) == (args.baseline is None):
        raise UsageError("evaluate: give exactly one of --model or --baseline")
    cfg = _resolve(args, {"steps": 50, "bootstrap": 20, "seed": 0, "jobs": 1, "split": "test", "t_start": 0})
    manifest = load_manifest(cfg["data"])
    stats = NormStats.from_json(manifest["norm_stats"])
    channels = tuple(manifest["channels"])
    model = None
    history = 10
    if cfg["model"] is not None:
        from .neural import load_model
        model, header = load_model(cfg["model"])
        ck_channels = header.get("extra", {}).get("channels")
        if ck_channels is not None and tuple(ck_channels) != channels:
            raise ValueError(f"checkpoint expects channels {ck_channels}, data has {list(channels)}")
        history = model.history
    factory = PredictorFactory(cfg["baseline"] or "model", stats, channels, model, int(cfg["t_start"]), history)
    seqs = load_split(cfg["data"], cfg["split"])
    per_seq = per_sequence_metrics(factory, seqs, int(cfg["t_start"]), int(cfg["steps"]), int(cfg["jobs"]))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.csv", "w") as fh:
        fh.write("step,target,metric,value\n")
        for t in TARGETS:
            for m in METRICS:
                for s, v in enumerate(per_seq[(t, m)].mean(axis=0)):
                    fh.write(f"{s},{t},{m},{float(v)!r}\n")
    b = bootstrap_bands(per_seq, int(cfg["bootstrap"]), int(cfg["seed"]))
    write_bands_csv(out / "bands.csv", b)
    _write_config(out, "evaluate", cfg)
    log.info("evaluated %d sequences; mean final scar JSC %.4f", len(seqs), b.point[("scar", "jsc")][-1])
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import render_comparison, render_frames
    from .seqio import read_sequence
    cfg = _resolve(args, {"channel": "front"})
    out = Path(cfg["out"])
    seq = read_sequence(cfg["sequence"])
    if cfg["truth"] is not None:
        truth = read_sequence(cfg["truth"])
        paths = render_comparison(seq, truth, out, cfg["channel"])
    else:
        paths = render_frames(seq, out, cfg["channel"])
    _write_config(out, "render", cfg)
    log.info("wrote %d images to %s", len(paths), out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="firelattice", description="Lattice fire simulation corpora and learned spread models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="simulate a corpus")
    g.add_argument("--corpus", required=True, choices=["wind", "wind-slope", "complex"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--with-validation", action="store_true")
    g.add_argument("--jobs", type=int)
    g.add_argument("--max-steps", type=int)
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model on a corpus")
    t.add_argument("--model", required=True, choices=["cnn", "cnn-thresholded", "convlstm"])
    t.add_argument("--data", required=True)
    t.add_argument("--profile", choices=["paper", "desk"])
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--crop", type=int)
    t.add_argument("--windows-per-seq", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True)
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="autoregressive rollout metrics with bootstrap bands")
    e.add_argument("--model")
    e.add_argument("--baseline", choices=["oracle", "zero", "persistence"])
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=["train", "test", "validation"])
    e.add_argument("--steps", type=int)
    e.add_argument("--t-start", type=int)
    e.add_argument("--bootstrap", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--jobs", type=int)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", help="write frames as PGM, or comparison panels as PPM")
    r.add_argument("--sequence", required=True)
    r.add_argument("--truth", help="aligned truth sequence; writes truth/prediction/error composites")
    r.add_argument("--channel", choices=["front", "scar", "fuel"])
    r.add_argument("--out", required=True)
    r.add_argument("--config")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    from .neural.checkpoint import CheckpointError
    from .neural.train import TrainingDiverged
    from .rollout import RolloutError
    from .seqio import SequenceFormatError

    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("firelattice: choose a subcommand (gen, train, evaluate, render)")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, RolloutError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SequenceFormatError, CheckpointError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
