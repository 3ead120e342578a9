"""Command-line interface.

Examples::

    eitdeflect scenario optical --out theta.csv
    eitdeflect sweep --config fig3a.json --format json --out sweep.json
    eitdeflect trace --config optical.json --frozen-gradient --out ray.csv
    eitdeflect chi --rabi-over-gamma 5 --delta-range -0.2 0.2 41
    eitdeflect crosscheck --config magnetic.json

Exit codes: 0 success, 2 config error, 3 numerical guard failure.
Guard warnings are written to stderr as JSON lines; data goes to --out or stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, GuardWarning, IoFailure, NumericalGuardError
from .medium import Detunings, chi_first_order, chi_full, refraction_index
from .scenarios import (
    ScenarioConfig,
    config_from_dict,
    crosscheck,
    format_records,
    load_config,
    run_magnetic_scenario,
    run_optical_scenario,
    sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3


def _diag(event: str, **fields):
    sys.stderr.write(json.dumps({"event": event, **fields}) + "\n")


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, (float(v) for v in row))) for row in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{float(v):.17g}" for v in row])
    return buf.getvalue()


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc


def _config(args, kind=None) -> ScenarioConfig:
    cfg = load_config(args.config, kind) if args.config else config_from_dict({}, kind)
    opts = cfg.trace
    if args.step is not None:
        opts = replace(opts, step=args.step)
    if args.frozen_gradient:
        opts = replace(opts, frozen_gradient=True)
    if args.track_absorption:
        opts = replace(opts, track_absorption=True)
    cfg = replace(cfg, trace=opts)
    if getattr(args, "workers", None):
        cfg = replace(cfg, workers=args.workers)
    return cfg


def _crosscheck_text(cfg: ScenarioConfig, K: int, fmt: str) -> str:
    cc = crosscheck(cfg, K)
    _diag(
        "crosscheck",
        K=K,
        iterations=cc.path.iterations,
        sup_deviation_m=cc.sup_deviation,
        sup_deviation_over_L=cc.sup_deviation / cfg.length_m,
    )
    nodes = cc.path.nodes
    rows = np.column_stack([nodes[:, 2], cc.x_ode, cc.y_ode, nodes[:, 0], nodes[:, 1]])
    return _table(("z", "x_ode", "y_ode", "x_fermat", "y_fermat"), rows, fmt)


def cmd_chi(args) -> int:
    cfg = _config(args)
    m = cfg.medium
    G = m.Gamma
    rabi = args.rabi_over_gamma * G
    rows = []
    for Dl in np.linspace(*args.Delta_range[:2], int(args.Delta_range[2])):
        for dl in np.linspace(*args.delta_range[:2], int(args.delta_range[2])):
            chi = chi_full(m, Detunings(Dl * G, dl * G), rabi)
            first = chi_first_order(m, dl * G, rabi)
            rows.append((Dl, dl, chi.real, chi.imag, first, refraction_index(chi)))
    header = ("Delta_over_Gamma", "delta_over_Gamma", "chi_re", "chi_im", "chi_first_order", "n")
    _write(_table(header, rows, args.format), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    from .raytracer import trace

    cfg = _config(args)
    fld, geom = cfg.build()
    r0, d0 = cfg.incidence()
    traj = trace(fld, geom, r0, d0, cfg.trace)
    cols = [traj.s, *traj.positions.T, *traj.directions.T]
    header = ["s", "x", "y", "z", "dx", "dy", "dz"]
    if traj.absorbance is not None:
        cols.append(traj.absorbance)
        header.append("absorbance")
    _diag("trace", exit_face=traj.exit_face.value, samples=len(traj))
    _write(_table(header, np.column_stack(cols), args.format), args.out)
    return EXIT_OK


def cmd_scenario(args) -> int:
    cfg = _config(args, args.kind)
    runner = run_optical_scenario if args.kind == "optical" else run_magnetic_scenario
    records = runner(cfg)
    _write(format_records(records, args.format), args.out)
    if args.crosscheck:
        text = _crosscheck_text(cfg, args.K, args.format)
        if args.out:
            out = Path(args.out)
            _write(text, str(out.with_name(out.stem + ".crosscheck" + out.suffix)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    records = sweep(cfg)
    _write(format_records(records, args.format), args.out)
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    cfg = _config(args)
    _write(_crosscheck_text(cfg, args.K, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON scenario config")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--step", type=float, help="RK4 arclength step in m")
    common.add_argument("--frozen-gradient", action="store_true")
    common.add_argument("--track-absorption", action="store_true")

    ap = argparse.ArgumentParser(prog="eitdeflect", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chi", parents=[common], help="susceptibility table over a (Delta, delta) grid")
    p.add_argument("--rabi-over-gamma", type=float, default=5.0)
    p.add_argument("--delta-range", type=float, nargs=3, default=(-0.1, 0.1, 21),
                   metavar=("MIN", "MAX", "NUM"), help="two-photon detuning grid in Gamma")
    p.add_argument("--Delta-range", type=float, nargs=3, default=(0.0, 0.0, 1),
                   metavar=("MIN", "MAX", "NUM"), help="one-photon detuning grid in Gamma")
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("trace", parents=[common], help="single ray, full trajectory")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("scenario", parents=[common], help="deflection record(s) for one scenario")
    p.add_argument("kind", choices=("optical", "magnetic"))
    p.add_argument("--crosscheck", action="store_true", help="also compare against the Fermat path")
    p.add_argument("--K", type=int, default=256)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep as configured")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("crosscheck", parents=[common], help="ODE path vs Fermat minimiser")
    p.add_argument("--K", type=int, default=256)
    p.set_defaults(func=cmd_crosscheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GuardWarning)
            code = args.func(args)
        for w in caught:
            if issubclass(w.category, GuardWarning):
                _diag("warning", message=str(w.message))
        return code
    except ConfigError as exc:
        _diag("error", kind="config", message=str(exc))
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        _diag("error", kind="guard", message=str(exc))
        return EXIT_GUARD
    except IoFailure as exc:
        _diag("error", kind="io", message=str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
