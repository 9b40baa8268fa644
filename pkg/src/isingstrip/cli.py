"""Command-line entry point.

Exit codes: 0 when no record FAILs, 1 on a FAIL or an internal error (a
partial report is still written), 2 on bad usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import iom, qseries, suite
from .config import load_config
from .precision import to_float
from .report import PASS, FAIL, CheckRecord, VerificationReport

VERIFY_TARGETS = ("inversion", "spectrum", "tl", "iom", "characters", "free-energy", "all")


def _b_arg(value: str) -> str:
    mapping = {"+1": "+1", "1": "+1", "+": "+1", "-1": "-1", "-": "-1", "both": "both"}
    if value not in mapping:
        raise argparse.ArgumentTypeError("b must be +1, -1 or both")
    return mapping[value]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--L", type=int, dest="L")
    p.add_argument("--max-L", type=int, dest="max_L")
    p.add_argument("--b", type=_b_arg)
    p.add_argument("--x", type=float)
    p.add_argument("--u", type=float)
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--orders", type=int)
    p.add_argument("--precision", choices=("double", "extended"))
    p.add_argument("--digits", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--m-max", type=int, dest="m_max")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isingstrip", description="Verify the critical Ising strip transfer matrix.")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("target", choices=VERIFY_TARGETS)
    _common(v)
    e = sub.add_parser("extract-iom", help="extract the charges A_1..A_N for one (L, b)")
    _common(e)
    c = sub.add_parser("characters", help="three-form character table")
    _common(c)
    pf = sub.add_parser("partition-function", help="partition-function asymptotics")
    _common(pf)
    return parser


OVERRIDE_KEYS = ("L", "max_L", "b", "x", "u", "M", "orders", "precision", "digits", "tolerance", "seed",
                 "truncation", "m_max", "format", "out")


def _emit(report: VerificationReport, cfg, extra: dict | None = None):
    if cfg.format == "csv":
        text = report.to_csv()
    else:
        data = report.to_dict()
        if extra:
            data.update(extra)
        text = json.dumps(data, indent=2, sort_keys=True)
    if cfg.out:
        Path(cfg.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _extract(cfg) -> tuple[VerificationReport, dict]:
    L = cfg.L if cfg.L is not None else cfg.max_L
    report = VerificationReport(cfg.as_dict(), cfg.seed)
    charges = {}
    for b in cfg.b_values:
        fam = iom.extract_iom(L, b, cfg.effective_orders, cfg.prec)
        report.extend(suite.scalar_charge_records(fam, cfg.tol))
        comm = fam.max_commutator()
        report.extend([CheckRecord("charge_commutation", PASS if comm <= cfg.tol else FAIL,
                                   {"L": L, "b": b}, comm, cfg.tol)])
        charges[str(b)] = {str(k): to_float(a).tolist() for k, a in fam.charges.items()}
    return report, {"charges": charges}


def _characters(cfg) -> VerificationReport:
    report = VerificationReport(cfg.as_dict(), cfg.seed)
    L = cfg.L if cfg.L is not None else cfg.max_L
    for sector in (qseries.PLUS, qseries.MINUS):
        a = qseries.char_partition(L, sector, cfg.truncation)
        f = qseries.char_fermionic(L, sector, cfg.truncation)
        bo = qseries.char_bosonic(L, sector, cfg.truncation)
        for e in sorted(set(a.coeffs) | set(f.coeffs) | set(bo.coeffs)):
            ok = a.coefficient(e) == f.coefficient(e) == bo.coefficient(e)
            report.records.append(CheckRecord(
                "character_coefficient", PASS if ok else FAIL,
                {"L": L, "sector": sector, "doubled_exponent": e, "partition": a.coefficient(e),
                 "fermionic": f.coefficient(e), "bosonic": bo.coefficient(e)},
                0.0 if ok else 1.0, 0.0))
    return report


def _partition_function(cfg) -> VerificationReport:
    report = VerificationReport(cfg.as_dict(), cfg.seed)
    Ls = cfg.L_values if cfg.L is not None else [1, 2, 4]
    for L in Ls:
        M = cfg.M if cfg.M is not None else suite.TREND_RATIO * L
        for b in cfg.b_values:
            for variant in ("printed", "corrected"):
                r = qseries.partition_function_check(L, M, b, cfg.u, variant)
                report.records.append(CheckRecord(
                    "partition_function", PASS, {"L": L, "M": M, "b": b, "u": cfg.u, "variant": variant,
                                                  "log_z": r.log_z, "log_z_asymptotic": r.log_z_asymptotic, "q": r.q},
                    r.deviation, None))
    return report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: getattr(args, k, None) for k in OVERRIDE_KEYS}
    try:
        cfg = load_config(args.config, overrides)
    except (ValueError, KeyError, OSError) as exc:
        print(f"isingstrip: configuration error: {exc}", file=sys.stderr)
        return 2
    np.seterr(all="ignore")
    extra = None
    try:
        if args.command == "verify":
            report = suite.run_suite(args.target, cfg)
        elif args.command == "extract-iom":
            report, extra = _extract(cfg)
        elif args.command == "characters":
            report = _characters(cfg)
        else:
            report = _partition_function(cfg)
    except Exception as exc:
        report = VerificationReport(cfg.as_dict(), cfg.seed)
        report.error = f"{type(exc).__name__}: {exc}"
    _emit(report, cfg, extra)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
