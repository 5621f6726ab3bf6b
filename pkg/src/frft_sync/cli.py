"""Command-line entry point.

Subcommands::

    gen-ts      write the training sequence to ts.csv
    simulate    one trial, estimate printed as JSON
    sweep       Monte Carlo sweep -> trials.csv, summary.csv, run_meta.json
    compare     complexity and accuracy of proposed vs traditional chains
    complexity  closed-form multiplication counts only

Exit status is 0 on success, 2 on a config or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import complexity_report, ts_reference
from .framing import generate_ts
from .harness import (
    SweepConfig,
    TrialConfig,
    compare_methods,
    load_config,
    run_sweep,
    run_trial,
)

log = logging.getLogger("frft_sync")

SPS_CHOICES = {"1": 1.0, "1.0": 1.0, "1.25": 1.25, "2": 2.0, "2.0": 2.0}


class ConfigError(Exception):
    pass


def _sps(text):
    try:
        return SPS_CHOICES[text]
    except KeyError:
        raise argparse.ArgumentTypeError("sps must be 1, 1.25 or 2") from None


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _to_json(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_json(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _emit(payload, out_dir, name):
    text = json.dumps(_to_json(payload), indent=2)
    print(text)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")


def _load(path, cls, overrides):
    cfg = cls() if path is None else load_config(path, cls)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _load_json(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def cmd_gen_ts(args):
    data = _load_json(args.config)
    unknown = set(data) - {"alpha", "ns", "tx_sps", "rolloff", "baud"}
    if unknown:
        raise ConfigError(f"unknown gen-ts keys: {sorted(unknown)}")
    ts = generate_ts(data.get("alpha", np.pi / 4), data.get("ns", 1024))
    if args.sps is None:
        samples = ts.samples.samples
    else:
        ref = ts_reference(ts, data.get("tx_sps", 2), args.sps,
                           data.get("rolloff", 0.1), data.get("baud", 60e9))
        samples = ref.samples
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ts.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "re", "im"])
        for i, v in enumerate(samples):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
    log.info("wrote %d samples to %s", samples.size, path)
    return 0


def cmd_simulate(args):
    cfg = _load(args.config, TrialConfig, {"sps": args.sps})
    res = run_trial(cfg, args.seed)
    payload = {
        "truth": {"cd_ps_nm": res.cd_true, "fo_hz": res.fo_true, "to_samples": res.to_true},
        "ok": res.ok,
        "error": res.error,
        "estimate": res.extra.get("estimate"),
        "traditional": res.extra.get("traditional"),
        "errors": {"cd": res.cd_err, "fo": res.fo_err, "to": res.to_err},
        "seed": res.seed,
    }
    _emit(payload, args.out, "simulate.json")
    return 0


def cmd_sweep(args):
    cfg = _load(args.config, SweepConfig, {"sps": args.sps, "seed": args.seed})
    _, summary = run_sweep(cfg, args.out or "sweep_out")
    for row in summary:
        log.info("point %d  z=%g km  fo=%g Hz  mean|cd|=%.2f  failed=%d",
                 row["point"], row["distance_km"], row["fo_true"],
                 row["cd_err_mean"], row["n_failed"])
    return 0


def cmd_compare(args):
    cfg = _load(args.config, TrialConfig, {"sps": args.sps})
    report = compare_methods(cfg, trials=args.trials, seed=args.seed or 0)
    _emit(report, args.out, "compare.json")
    return 0


def cmd_complexity(args):
    data = _load_json(args.config)
    unknown = set(data) - {"M", "N", "K"}
    if unknown:
        raise ConfigError(f"unknown complexity keys: {sorted(unknown)}")
    M = args.M if args.M is not None else data.get("M", 65536)
    N = args.N if args.N is not None else data.get("N", 1024)
    K = args.K if args.K is not None else data.get("K", 587)
    _emit(complexity_report(M, N, K).as_dict(), args.out, "complexity.json")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=_seed, default=None, help="master seed (u64)")
    seeded.add_argument("--sps", type=_sps, default=None, help="receiver sps: 1, 1.25 or 2")

    p = argparse.ArgumentParser(prog="frft-sync", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-ts", parents=[common, seeded],
                   help="write the training sequence").set_defaults(func=cmd_gen_ts)
    sub.add_parser("simulate", parents=[common, seeded],
                   help="run a single trial").set_defaults(func=cmd_simulate)
    sub.add_parser("sweep", parents=[common, seeded],
                   help="run a Monte Carlo sweep").set_defaults(func=cmd_sweep)
    c = sub.add_parser("compare", parents=[common, seeded], help="compare both chains")
    c.add_argument("--trials", type=int, default=5)
    c.set_defaults(func=cmd_compare)
    k = sub.add_parser("complexity", parents=[common], help="closed-form counts")
    k.add_argument("--M", type=int)
    k.add_argument("--N", type=int)
    k.add_argument("--K", type=int)
    k.set_defaults(func=cmd_complexity)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "seed", None) is None and args.command == "simulate":
        args.seed = 0
    try:
        return args.func(args)
    except (ConfigError, ValueError, TypeError, json.JSONDecodeError, OSError) as err:
        print(f"frft-sync {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
