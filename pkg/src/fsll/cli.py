"""Command-line entry point.

Subcommands:
  run       one protocol run; writes metrics, checkpoint, registry, mask
            dump, and a resolved config that reproduces the run
  ablate    sweep one axis (fraction, lambda, cosine, regularization)
  report    merge finished runs into comparison tables and figures
  gen-data  write a synthetic corpus as delimited files
  check     quick built-in verification battery

FSLL_LOG selects the log level: error, info (default), or debug.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import replace

from .config import RunConfig, apply_overrides, load_config, resolved_text
from .data import Corpus, SyntheticSpec, generate_synthetic, load_delimited, \
    write_delimited
from .errors import ConfigError, DataFormatError, ProtocolError
from .masking import write_mask
from .model import save_checkpoint
from .prototypes import write_registry
from .protocol import SessionObserver, build_schedule, run_protocol

log = logging.getLogger("fsll.cli")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("FSLL_LOG", "info").lower()
    if name not in LOG_LEVELS:
        print(f"warning: FSLL_LOG={name!r} is not one of {sorted(LOG_LEVELS)}, "
              "using info", file=sys.stderr)
        name = "info"
    logging.basicConfig(level=LOG_LEVELS[name],
                        format="%(levelname)s %(name)s: %(message)s")


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.set:
        config = apply_overrides(config, args.set)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config.validate()
    return config


def _build_corpus(config: RunConfig) -> Corpus:
    if config.data_train is not None:
        train = load_delimited(config.data_train, grid_size=config.grid_size)
        test = load_delimited(config.data_test, grid_size=config.grid_size)
        return Corpus(train, test)
    grid_size = None
    if config.grid:
        grid_size = math.isqrt(config.dim)
        if grid_size * grid_size != config.dim:
            raise ConfigError(f"grid corpus needs a square dim, got {config.dim}")
    seed = config.data_seed if config.data_seed is not None else config.seed
    spec = SyntheticSpec(num_classes=config.classes, dim=config.dim,
                         train_per_class=config.train_per_class,
                         test_per_class=config.test_per_class,
                         center_scale=config.center_scale, noise=config.noise,
                         seed=seed, grid_size=grid_size)
    return generate_synthetic(spec)


class _MaskCapture(SessionObserver):
    def __init__(self):
        self.last = None

    def after_session(self, session_index, store, mask):
        self.last = mask


def execute_run(config: RunConfig, out_dir: str) -> dict:
    """The whole run pipeline; shared by the run command and ablation
    workers. Returns the metrics document."""
    config.validate()
    corpus = _build_corpus(config)
    standardize = config.standardize and corpus.train.grid_size is None
    if config.standardize and not standardize:
        log.info("grid corpus: skipping feature standardisation")
    schedule = build_schedule(corpus.train, corpus.test,
                              base_classes=config.base_classes, ways=config.ways,
                              shots=config.shots, increments=config.increments,
                              seed=config.seed, standardize=standardize)
    capture = _MaskCapture()
    report, store, registry = run_protocol(schedule, config.method,
                                           config.to_train_config(),
                                           config.to_arch(), observer=capture)
    os.makedirs(out_dir, exist_ok=True)
    doc = report.to_json_dict()
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_csv_text())
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    save_checkpoint(store, os.path.join(out_dir, "checkpoint.json"))
    write_registry(registry, os.path.join(out_dir, "registry.json"))
    if capture.last is not None:
        write_mask(capture.last, os.path.join(out_dir, "mask.json"))
    with open(os.path.join(out_dir, "config.resolved"), "w", encoding="utf-8") as fh:
        fh.write(resolved_text(config))
    return doc


def cmd_run(args) -> int:
    config = _load_run_config(args)
    doc = execute_run(config, args.out)
    final = doc["sessions"][-1]
    print(f"{config.method} seed={config.seed}: final joint_acc "
          f"{final['joint_acc']:.4f} (base {final['base_acc']:.4f})")
    print(f"artifacts in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# ablations

ABLATION_AXES = ("fraction", "lambda", "cosine", "regularization")


def _axis_variant(config: RunConfig, axis: str, value: str) -> RunConfig:
    if axis == "fraction":
        return replace(config, fraction=float(value))
    if axis == "lambda":
        return replace(config, lam=float(value))
    if axis == "cosine":
        return replace(config, cosine_loss=_parse_switch(value))
    if axis == "regularization":
        return replace(config, lam=config.lam if _parse_switch(value) else 0.0)
    raise ConfigError(f"unknown ablation axis {axis!r}; valid axes: "
                      f"{', '.join(ABLATION_AXES)}")


def _parse_switch(value: str) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"expected on/off, got {value!r}")


def _ablate_worker(item):
    config, out_dir = item
    return execute_run(config, out_dir)


def cmd_ablate(args) -> int:
    config = _load_run_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("no ablation values given")
    jobs = []
    for value in values:
        variant = _axis_variant(config, args.axis, value)
        variant.validate()
        jobs.append((value, variant, os.path.join(args.out, f"{args.axis}={value}")))

    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            docs = list(pool.map(_ablate_worker, [(v, d) for _, v, d in jobs]))
    else:
        docs = [execute_run(variant, out_dir) for _, variant, out_dir in jobs]

    sweep_path = os.path.join(args.out, "sweep.csv")
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write("axis,value,session,joint_acc,base_acc,new_acc\n")
        for (value, _, _), doc in zip(jobs, docs):
            for row in doc["sessions"]:
                fh.write(f"{args.axis},{value},{row['session']},"
                         f"{row['joint_acc']!r},{row['base_acc']!r},"
                         f"{row['new_acc']!r}\n")
    for (value, _, _), doc in zip(jobs, docs):
        print(f"{args.axis}={value}: final joint_acc "
              f"{doc['sessions'][-1]['joint_acc']:.4f}")
    print(f"sweep table in {sweep_path}")
    return 0


def cmd_report(args) -> int:
    from .reporting import write_report  # defers the matplotlib import
    paths = write_report(args.runs, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_gen_data(args) -> int:
    config = _load_run_config(args)
    corpus = _build_corpus(config)
    os.makedirs(args.out, exist_ok=True)
    train_path = os.path.join(args.out, "train.csv")
    test_path = os.path.join(args.out, "test.csv")
    write_delimited(corpus.train, train_path)
    write_delimited(corpus.test, test_path)
    print(f"wrote {train_path} ({corpus.train.features.shape[0]} rows)")
    print(f"wrote {test_path} ({corpus.test.features.shape[0]} rows)")
    return 0


def cmd_check(args) -> int:
    from .selfcheck import run_all
    with tempfile.TemporaryDirectory() as tmp:
        failures = run_all(tmp)
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="key = value configuration file")
    parser.add_argument("--set", metavar="K=V", action="append", default=[],
                        help="override one configuration key (repeatable)")
    parser.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the run seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsll",
        description="Few-shot lifelong learning lab: masked incremental "
                    "training with prototype classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one method over one schedule")
    _add_common(p)
    p.add_argument("--out", metavar="DIR", default="runs/out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="sweep one configuration axis")
    _add_common(p)
    p.add_argument("--axis", required=True, choices=ABLATION_AXES)
    p.add_argument("--values", required=True, metavar="V1,V2,...",
                   help="comma-separated axis values")
    p.add_argument("--out", metavar="DIR", default="runs/ablation")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel worker processes")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="compare finished runs")
    p.add_argument("runs", nargs="+", metavar="RUN_DIR",
                   help="run directories (first one is the reference)")
    p.add_argument("--out", metavar="DIR", default="runs/report")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gen-data", help="write a synthetic corpus to files")
    _add_common(p)
    p.add_argument("--out", metavar="DIR", default="data")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("check", help="built-in verification battery")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
