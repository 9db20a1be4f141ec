"""Command-line front end: ``rcsm {sweep,bench,analyze,convergence}``.

Every subcommand accepts ``--config FILE`` with flat ``key=value`` lines
named like the long flags (``snr-db=10``, ``detector=cavi``); flags given on
the command line win over the file.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import analysis
from .detectors import cavi_detect
from .errors import ArgumentError, RCSMError
from .harness import (ExperimentConfig, draw_trial, emit_csv, normalize_sweep_name,
                      run_bench, run_sweep)
from .model import (IndexVector, draw_channel, qam_constellation, simulate_received_slot,
                    transmit_slot)
from .numerics import RngStream

log = logging.getLogger("rcsm")

DEFAULTS = {
    "n": 10, "l": 20, "k": 2, "m": 4, "snr_db": 10.0, "order": 4, "detector": "cavi",
    "mu": 0.5, "iters": 10, "trials": 1000, "seed": 0, "sweep": None, "threads": 1,
    "all_subsets": False, "out": "-", "mlga_method": "covariance", "no_timing": False,
    "repeats": 3, "support": None,
}
_TYPES = {
    "n": int, "l": int, "k": int, "m": int, "snr_db": float, "order": int, "mu": float,
    "iters": int, "trials": int, "seed": int, "threads": int, "repeats": int,
}
_BOOLS = {"all_subsets", "no_timing"}


def parse_sweep(text: str):
    """``"mu=0.1,0.2"`` -> ``("mu", ("0.1", "0.2"))``."""
    if "=" not in text:
        raise ArgumentError(f"--sweep expects name=v1,v2,..., got {text!r}")
    name, values = text.split("=", 1)
    vals = tuple(v.strip() for v in values.split(",") if v.strip())
    if not vals:
        raise ArgumentError(f"--sweep {text!r} has no values")
    return normalize_sweep_name(name), vals


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_").lower()
            if key not in DEFAULTS:
                raise ArgumentError(f"{path}:{lineno}: unknown key {key!r}")
            if key == "sweep":
                out[key] = value
            elif key in _BOOLS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = _TYPES.get(key, str)(value)
    return out


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--n", type=int, help="receive antennas N")
    p.add_argument("--l", type=int, help="transmit antennas L")
    p.add_argument("--k", type=int, help="active antennas K")
    p.add_argument("--m", type=int, help="slot length M")
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--order", type=int, choices=(4, 16), help="QAM order")
    p.add_argument("--detector", choices=("correlator", "ml-ga", "cavi", "exact-mixture"))
    p.add_argument("--mu", type=float, help="CAVI step size")
    p.add_argument("--iters", type=int, help="CAVI sweeps")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", help="name=v1,v2,... (mu, iters, snr_db, M, L, K, N, order)")
    p.add_argument("--threads", type=int)
    p.add_argument("--all-subsets", dest="all_subsets", action="store_const", const=True,
                   help="draw supports from all C(L,K) subsets, not only addressable ones")
    p.add_argument("--mlga-method", dest="mlga_method", choices=("covariance", "gram"))
    p.add_argument("--no-timing", dest="no_timing", action="store_const", const=True,
                   help="write zero runtimes (byte-reproducible output)")
    p.add_argument("--out", help="output CSV path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcsm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "Monte Carlo index-error rates"),
                        ("bench", "detector runtime benchmark"),
                        ("analyze", "analytic index-error estimate only"),
                        ("convergence", "CAVI probability trajectory for one slot")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "bench":
            p.add_argument("--repeats", type=int)
        if name == "convergence":
            p.add_argument("--support", help="1-based active antennas, e.g. 2,6,10")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return opts


def make_config(opts: dict) -> ExperimentConfig:
    sweep = parse_sweep(opts["sweep"]) if opts["sweep"] else None
    return ExperimentConfig(
        N=opts["n"], L=opts["l"], K=opts["k"], M=opts["m"], snr_db=opts["snr_db"],
        order=opts["order"], detector=opts["detector"], mu=opts["mu"], iters=opts["iters"],
        trials=opts["trials"], seed=opts["seed"], sweep=sweep, threads=opts["threads"],
        all_subsets=bool(opts["all_subsets"]), mlga_method=opts["mlga_method"],
        timing=not opts["no_timing"],
    )


def _open_out(path):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _write_rows(header, rows, path):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def cmd_rows(rows, path):
    emit_csv(rows, sys.stdout if path == "-" else path)


def cmd_analyze(cfg: ExperimentConfig, path):
    header = ("N", "L", "Q", "M", "snr_db", "alpha_bar", "omega_bar", "lambda_star",
              "pep", "p_ie", "regime")
    points = [cfg] if cfg.sweep is None else [cfg.with_value(cfg.sweep[0], v)
                                             for v in cfg.sweep[1]]
    out = []
    for p in points:
        a = analysis.AsymptoticParams.from_system(p.noise.snr, p.K, p.N)
        est = analysis.approx_index_error(p.L, p.K, a, p.M)
        out.append((p.N, p.L, p.K, p.M, repr(float(p.snr_db)), repr(a.alpha_bar),
                    repr(a.omega_bar), repr(est.lambda_star), repr(est.pep), repr(est.p_ie),
                    est.regime))
    _write_rows(header, out, path)


def cmd_convergence(cfg: ExperimentConfig, support, path):
    if support:
        truth = IndexVector.from_labels(cfg.L, [int(s) for s in support.split(",")])
        if truth.K != cfg.K:
            raise ArgumentError(f"--support has {truth.K} antennas but K={cfg.K}")
        rng = RngStream(cfg.seed, 0)
        H = draw_channel(rng, cfg.N, cfg.L)
        slot = transmit_slot(truth, qam_constellation(cfg.order), cfg.M, rng)
        received = simulate_received_slot(H, slot, cfg.noise, rng)
    else:
        trial = draw_trial(cfg, 0)
        H, truth, received = trial.H, trial.truth, trial.received
    res = cavi_detect(H, received, cfg.K, cfg.noise, step_size=cfg.mu, iterations=cfg.iters,
                      keep_trajectory=True)
    traj = res.diagnostics["state"].trajectory
    active = set(truth.labels())
    rows = [(i, l + 1, repr(float(q[l])), int(l + 1 in active))
            for i, q in enumerate(traj) for l in range(cfg.L)]
    _write_rows(("iteration", "antenna", "q", "active"), rows, path)
    log.info("true support %s, estimate %s", truth.labels(), res.estimate.labels())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        cfg = make_config(opts)
        if args.command == "sweep":
            cmd_rows(run_sweep(cfg), opts["out"])
        elif args.command == "bench":
            cmd_rows(run_bench(cfg, repeats=opts["repeats"]), opts["out"])
        elif args.command == "analyze":
            cmd_analyze(cfg, opts["out"])
        else:
            cmd_convergence(cfg, opts["support"], opts["out"])
    except (RCSMError, OSError) as exc:
        print(f"rcsm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
