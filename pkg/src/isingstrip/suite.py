"""Verification suites: each runs one family of checks and returns CheckRecords.

Known discrepancies between the printed closed forms and what the lattice
produces are recorded as ERRATUM_RECORDED; the e_1 boundary relations are
KNOWN_BOUNDARY_EXCEPTION.  Everything else is PASS/FAIL against tolerance.
"""
from __future__ import annotations

import logging
import math
import time
from contextlib import contextmanager

import numpy as np

from . import free_energy as fe
from . import iom, qseries, spectrum, tl
from .config import Config
from .lattice import SpectralPoint, SpinBasis, transfer_matrix
from .precision import max_abs
from .report import (
    ERRATUM_RECORDED,
    FAIL,
    KNOWN_BOUNDARY_EXCEPTION,
    PASS,
    CheckRecord,
    VerificationReport,
    status_for,
)

log = logging.getLogger(__name__)

SPECTRUM_TOL = 1e-8
PAIRING_TOL = 1e-8
RESUMMATION_TOL = 1e-12
INTEGRAL_TOL = 1e-8
EXPANSION_TOL = 1e-10
TREND_LS = (1, 2, 4, 8)
TREND_RATIO = 4


class _Timer:
    def __init__(self):
        self.elapsed = 0.0


@contextmanager
def timed():
    t = _Timer()
    start = time.perf_counter()
    try:
        yield t
    finally:
        t.elapsed = time.perf_counter() - start


def sample_x(rng: np.random.Generator, count: int, signed: bool = True) -> list[float]:
    xs = rng.uniform(1.2, 4.0, count)
    if signed:
        xs = xs * rng.choice([-1.0, 1.0], count)
    return [float(round(v, 12)) for v in xs]


def _rng(cfg: Config, salt: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, salt])


# -- inversion ------------------------------------------------------------------

def verify_inversion(cfg: Config) -> list[CheckRecord]:
    out = []
    prec, tol = cfg.prec, cfg.tol
    rng = _rng(cfg, 1)
    for L in cfg.L_values:
        with timed() as t:
            fres = spectrum.factorization_residual(L, prec, seed=cfg.seed)
        out.append(CheckRecord("chebyshev_factorization", status_for(fres, tol), {"L": L}, fres, tol, wall_time=t.elapsed))
        xs = [cfg.x] if cfg.x is not None else sample_x(rng, 5)
        for b in cfg.b_values:
            poly = iom.extract_D(L, b, prec=prec)
            for x in xs:
                with timed() as t:
                    r = spectrum.inversion_check(L, b, x, poly, prec)
                out.append(CheckRecord("inversion_identity", status_for(r.residual, tol),
                                       {"L": L, "b": b, "x": x}, r.residual, tol, wall_time=t.elapsed))
    return out


# -- spectrum -------------------------------------------------------------------

def verify_spectrum(cfg: Config) -> list[CheckRecord]:
    out = []
    prec = cfg.prec
    tol = cfg.tolerance if cfg.tolerance is not None else SPECTRUM_TOL
    rng = _rng(cfg, 2)
    for L in cfg.L_values:
        for b in cfg.b_values:
            x = cfg.x if cfg.x is not None else sample_x(rng, 1, signed=False)[0]
            with timed() as t:
                rep = spectrum.spectrum_match(L, b, x, prec, seed=cfg.seed)
            worst = max(rep.probe_residual, *rep.trace_residuals.values())
            status = PASS if rep.passed(tol) else FAIL
            out.append(CheckRecord("spectrum_match", status, {"L": L, "b": b, "x": x}, worst, tol,
                                   wall_time=t.elapsed, note=f"sector size {rep.sector_size}, dim {rep.dim}"))
    out.extend(_orientation_records(cfg, tol))
    out.extend(_sine_sum_records(cfg))
    out.extend(_eigen_table_records(cfg))
    return out


def _orientation_records(cfg: Config, tol: float) -> list[CheckRecord]:
    """The product formula taken at +x matches the matrix only for odd L."""
    mismatches = []
    for L in (2, 3):
        for b in (1, -1):
            rep = spectrum.spectrum_match(L, b, 2.0, seed=cfg.seed, orientation=spectrum.PRINTED)
            if not rep.passed(tol):
                mismatches.append((L, b))
    if not mismatches:
        return [CheckRecord("eigenvalue_orientation", PASS, {"L": [2, 3]}, 0.0, tol)]
    return [CheckRecord("eigenvalue_orientation", ERRATUM_RECORDED, {"mismatched": mismatches}, None, tol,
                        note="matrix eigenvalues are the product formula at -x; at +x the sectors swap for even L")]


def _sine_sum_records(cfg: Config) -> list[CheckRecord]:
    out = []
    tol = cfg.tol
    odd_signs, even_signs, out_of_range = set(), set(), []
    worst_odd, worst_even = 0.0, 0.0
    for L in range(0, max(cfg.L_values) + 1):
        for r in range(1, 2 * cfg.effective_orders + 1):
            fit = spectrum.compare_sine_sum(L, r, cfg.prec, tol)
            if r % 2:
                odd_signs.add(fit.sign)
                worst_odd = max(worst_odd, fit.residual)
            elif spectrum.even_formula_in_range(L, r // 2):
                even_signs.add(fit.sign)
                worst_even = max(worst_even, fit.residual)
            elif not fit.matched:
                out_of_range.append((L, r))
    sign = odd_signs.pop() if len(odd_signs) == 1 else None
    out.append(CheckRecord("odd_sine_sum", status_for(worst_odd, tol), {}, worst_odd, tol, fitted_sign=sign))
    sign = even_signs.pop() if len(even_signs) == 1 else None
    status = status_for(worst_even, tol)
    if status == PASS and sign == -1:
        status = ERRATUM_RECORDED
    out.append(CheckRecord("even_sine_sum_sign", status, {}, worst_even, tol, fitted_sign=sign,
                           note="printed even closed form carries the opposite overall sign"))
    if out_of_range:
        out.append(CheckRecord("even_sine_sum_range", ERRATUM_RECORDED, {"L_r": out_of_range}, None, tol,
                               note="even closed form holds only for r <= 4L+4"))
    return out


def _eigen_table_records(cfg: Config) -> list[CheckRecord]:
    prec, tol = cfg.prec, cfg.tol
    signs: dict[str, set] = {"even_charge": set(), "odd_charge": set(), "split": set()}
    worst = {k: 0.0 for k in signs}
    slopes = []
    N_slope = min(cfg.effective_orders, 4)
    for L in cfg.L_values:
        for b in cfg.b_values:
            for P in spectrum.enumerate_sector(L, b):
                table = spectrum.iom_eigen(P, cfg.effective_orders, prec)
                for key, fit in table.fitted_signs.items():
                    kind = key.rsplit("_", 1)[0]
                    signs[kind].add(fit.sign)
                    worst[kind] = max(worst[kind], fit.residual)
            slopes.append(spectrum.log_expansion_slope(spectrum.enumerate_sector(L, b)[-1], N_slope))
    out = []
    for kind, note in (("even_charge", "printed even eigenvalues carry the opposite sign"),
                       ("odd_charge", ""), ("split", "")):
        s = signs[kind]
        sign = next(iter(s)) if len(s) == 1 else None
        status = status_for(worst[kind], tol) if sign is not None else FAIL
        if status == PASS and sign == -1:
            status = ERRATUM_RECORDED
        out.append(CheckRecord(f"{kind}_sign", status, {"orders": cfg.effective_orders}, worst[kind], tol,
                               fitted_sign=sign, note=note if sign == -1 else ""))
    # error of the N-term exponential should fall like x^-(N+1)
    excess = max(s + (N_slope + 1) for s in slopes)
    out.append(CheckRecord("eigenvalue_log_expansion", status_for(excess, 0.3), {"N": N_slope, "x": [4.0, 64.0]},
                           excess, 0.3, note="residual is slope + (N+1)"))
    return out


# -- TL -------------------------------------------------------------------------

def verify_tl(cfg: Config, families: dict | None = None) -> list[CheckRecord]:
    out = []
    prec, tol = cfg.prec, cfg.tol
    for L in cfg.L_values:
        if L < 2:
            continue
        for b in cfg.b_values:
            with timed() as t:
                rep = tl.verify_tl_relations(L, b, prec, tol)
            status = PASS if not rep.failures else FAIL
            out.append(CheckRecord("tl_relations", status, {"L": L, "b": b}, rep.max_residual, tol, wall_time=t.elapsed,
                                   note=f"{len(rep.checks)} relations"))
            for c in rep.exceptions:
                out.append(CheckRecord("tl_boundary_generator", KNOWN_BOUNDARY_EXCEPTION,
                                       {"L": L, "b": b, "relation": c.relation, "indices": list(c.indices)},
                                       c.residual, tol, note="e_1 is a multiple of the identity on the fixed-spin space"))
    out.extend(verify_decompositions(cfg, families))
    return out


def decomposition_records(family: iom.IomFamily, orders: int, tol: float) -> list[CheckRecord]:
    out = []
    prec = family.prec
    gens = tl.TLGenerators(family.L, family.b, prec)
    for n in range(1, orders + 1, 2):
        if n != 1 and n not in tl.DECOMPOSITIONS:
            break
        _, jmax = tl.decomposition_requirements(n)
        if jmax > family.L:
            continue
        with timed() as t, prec.context():
            rhs = tl.iom_rhs(gens, n, family.charges)
            res = max_abs(rhs - family[n]) / max(max_abs(family[n]), 1.0)
        out.append(CheckRecord("tl_decomposition", status_for(res, tol, tl.decomposition_is_extrapolated(n)),
                               {"L": family.L, "b": family.b, "n": n}, res, tol, wall_time=t.elapsed))
    return out


def _family(cfg: Config, L: int, b: int, families: dict | None):
    key = (L, b, cfg.precision, cfg.digits, cfg.effective_orders)
    if families is not None and key in families:
        return families[key]
    fam = iom.extract_iom(L, b, cfg.effective_orders, cfg.prec)
    if families is not None:
        families[key] = fam
    return fam


def verify_decompositions(cfg: Config, families: dict | None = None) -> list[CheckRecord]:
    out = []
    for L in cfg.L_values:
        if L < 1:
            continue
        for b in cfg.b_values:
            fam = _family(cfg, L, b, families)
            out.extend(decomposition_records(fam, fam.order, cfg.tol))
    return out


# -- IOM ------------------------------------------------------------------------

def scalar_charge_records(fam: iom.IomFamily, tol: float) -> list[CheckRecord]:
    out = []
    rep = iom.verify_scalar_charges(fam, tol)
    for c in rep.checks:
        params = {"L": fam.L, "b": fam.b, "k": c.k}
        if c.status == PASS:
            status, note = PASS, ""
        elif not c.in_printed_range and c.exact_residual <= tol:
            status, note = ERRATUM_RECORDED, "printed linear-in-L value holds only for k <= 4L+4; exact power sum matches"
        else:
            status, note = FAIL, ""
        out.append(CheckRecord("scalar_charge", status, params, c.printed_residual, tol, note=note))
    return out


def verify_iom(cfg: Config, families: dict | None = None) -> list[CheckRecord]:
    out = []
    prec, tol = cfg.prec, cfg.tol
    rng = _rng(cfg, 3)
    for L in cfg.L_values:
        for b in cfg.b_values:
            with timed() as t:
                poly = iom.extract_D(L, b, prec=prec)
            out.append(CheckRecord("polynomial_fit", status_for(poly.fit_residual, tol), {"L": L, "b": b},
                                   poly.fit_residual, tol, wall_time=t.elapsed))
            fam = _family(cfg, L, b, families)
            N = fam.order
            with prec.context():
                composed = iom.bell_compose(fam, N)
                # D_k for k > L+1 vanish only through cancellation, so scale by A_k
                rt = max(max_abs(composed[k] - (poly.coeffs[k] if k < len(poly.coeffs) else 0)) /
                         max(1.0, max_abs(composed[k]), max_abs(fam[k])) for k in range(1, N + 1))
            out.append(CheckRecord("bell_round_trip", status_for(rt, tol), {"L": L, "b": b, "N": N}, rt, tol))
            asym = max(fam.max_asymmetry().values())
            out.append(CheckRecord("charge_symmetry", status_for(asym, tol), {"L": L, "b": b}, asym, tol))
            with timed() as t:
                comm = fam.max_commutator()
            out.append(CheckRecord("charge_commutation", status_for(comm, tol), {"L": L, "b": b, "N": N}, comm, tol,
                                   wall_time=t.elapsed))
            us = [float(round(v, 12)) for v in rng.uniform(0.02, math.pi / 8 - 0.02, 2)]
            worst = 0.0
            for u in us:
                T = transfer_matrix(SpinBasis(L, b), SpectralPoint.from_u(u, prec).x, prec)
                worst = max(worst, fam.commutator_with(T))
            out.append(CheckRecord("transfer_commutation", status_for(worst, tol), {"L": L, "b": b, "u": us}, worst, tol))
            out.extend(scalar_charge_records(fam, tol))
            if L <= 5:
                ks = list(range(1, min(N, 10) + 1))
                worst = 0.0
                for x in sample_x(rng, 3, signed=False):
                    res = spectrum.trace_pairing(fam, x, ks)
                    worst = max(worst, max(res.values()))
                ptol = max(PAIRING_TOL, tol)
                out.append(CheckRecord("trace_pairing", status_for(worst, ptol), {"L": L, "b": b, "k_max": ks[-1]},
                                       worst, ptol))
    return out


# -- characters and partition function ---------------------------------------------

def verify_characters(cfg: Config) -> list[CheckRecord]:
    out = []
    trunc = cfg.truncation
    Ls = cfg.L_values if cfg.L is not None else list(range(0, 13))
    for L in Ls:
        for sector in (qseries.PLUS, qseries.MINUS):
            with timed() as t:
                a = qseries.char_partition(L, sector, trunc)
                f = qseries.char_fermionic(L, sector, trunc)
                bo = qseries.char_bosonic(L, sector, trunc)
                full = qseries.char_bosonic(L, sector, None)
            ok = a == f == bo and full.at_one() == 2 ** L and all(c > 0 for c in full.coeffs.values())
            out.append(CheckRecord("character_forms", PASS if ok else FAIL,
                                   {"L": L, "sector": sector, "truncation": trunc}, 0.0 if ok else 1.0, 0.0,
                                   wall_time=t.elapsed))
    for sector in (qseries.PLUS, qseries.MINUS):
        printed = qseries.virasoro_printed(sector)
        lim = qseries.virasoro_limit(sector, printed.truncation)
        ok = lim == printed
        out.append(CheckRecord("virasoro_limit", PASS if ok else FAIL, {"sector": sector}, 0.0 if ok else 1.0, 0.0))
    # printed labels: '+' as the odd-size sum
    swapped = qseries.char_partition(5, qseries.MINUS, trunc) == qseries.char_fermionic(5, qseries.PLUS, trunc)
    out.append(CheckRecord("character_parity_labels", PASS if swapped else ERRATUM_RECORDED, {"L": 5},
                           note="" if swapped else "the partition sums carry swapped odd/even labels; even size pairs with '+'"))
    out.extend(verify_partition_function(cfg))
    return out


def verify_partition_function(cfg: Config) -> list[CheckRecord]:
    out = []
    for b in cfg.b_values:
        for variant in fe.VARIANTS:
            with timed() as t:
                tr = qseries.partition_function_trend(TREND_LS, TREND_RATIO, b, cfg.u, variant)
            params = {"b": b, "u": cfg.u, "L": list(TREND_LS), "M_over_L": TREND_RATIO, "variant": variant,
                      "deviations": tr.deviations}
            if variant == fe.CORRECTED_VARIANT:
                status = PASS if tr.monotone else FAIL
                name = "partition_function_trend"
            else:
                status = PASS if tr.monotone else ERRATUM_RECORDED
                name = "modular_parameter"
            out.append(CheckRecord(name, status, params, tr.deviations[-1], None, wall_time=t.elapsed,
                                   note="" if status == PASS else
                                   "printed modular parameter and boundary term: deviation grows"))
    return out


# -- free energy ------------------------------------------------------------------

def verify_free_energy(cfg: Config) -> list[CheckRecord]:
    out = []
    x0 = cfg.x if cfg.x is not None and cfg.x > 1 else 2.0
    even_printed_bad = []
    for L in range(0, max(cfg.L_values) + 1):
        r = fe.resummation_check(L, x0, 30)
        out.append(CheckRecord("odd_resummation", status_for(r.odd_residual, RESUMMATION_TOL), {"L": L, "x": x0, "N": 30},
                               r.odd_residual, RESUMMATION_TOL))
        out.append(CheckRecord("even_resummation", status_for(r.even_residual_corrected, RESUMMATION_TOL),
                               {"L": L, "x": x0, "N": 30, "variant": fe.CORRECTED_VARIANT},
                               r.even_residual_corrected, RESUMMATION_TOL))
        if r.even_residual > RESUMMATION_TOL:
            even_printed_bad.append((L, r.even_residual))
    if even_printed_bad:
        out.append(CheckRecord("even_resummation_log_weight", ERRATUM_RECORDED, {"x": x0, "cases": even_printed_bad},
                               max(v for _, v in even_printed_bad), RESUMMATION_TOL,
                               note="log(1-1/x^2) enters with weight 1/4, so the boundary term is (1/2) log(1+1/x)"))
    worst = 0.0
    for x in np.geomspace(1.5, 100, 12):
        worst = max(worst, fe.integral_identity_check(float(x)))
    out.append(CheckRecord("integral_identity", status_for(worst, INTEGRAL_TOL), {"x_range": [1.5, 100]}, worst, INTEGRAL_TOL))
    diffs = [fe.f_bulk_integral_comparison(x).difference for x in (2.0, 4.0, 8.0)]
    consistent = max(abs(fe.f_bulk_integral_comparison(x).consistent_form - float(fe.f_bulk(x))) for x in (2.0, 4.0, 8.0))
    status = ERRATUM_RECORDED if max(abs(d) for d in diffs) > INTEGRAL_TOL else PASS
    out.append(CheckRecord("bulk_integral_form", status, {"x": [2.0, 4.0, 8.0], "differences": diffs}, consistent,
                           INTEGRAL_TOL, note="integral expression differs by an x-dependent amount; "
                           "-(integral - (pi/2) log 2)/(2 pi) is the consistent form"))
    x1 = cfg.x if cfg.x is not None and cfg.x >= 3 else 3.0
    for L in cfg.L_values:
        for b in cfg.b_values:
            worst_c, worst_p, arg = 0.0, 0.0, None
            for P in spectrum.enumerate_sector(L, b):
                rc = fe.logT_expansion_check(L, b, P, x1, cfg.m_max, fe.CORRECTED_VARIANT)
                rp = fe.logT_expansion_check(L, b, P, x1, cfg.m_max, fe.PRINTED_VARIANT)
                if rc > worst_c:
                    worst_c, arg = rc, list(P.members)
                worst_p = max(worst_p, rp)
            out.append(CheckRecord("log_eigenvalue_expansion", status_for(worst_c, EXPANSION_TOL),
                                   {"L": L, "b": b, "x": x1, "m_max": cfg.m_max, "worst_partition": arg},
                                   worst_c, EXPANSION_TOL,
                                   note="" if worst_c <= EXPANSION_TOL else "truncation in m; converges for larger m_max"))
            if worst_p > EXPANSION_TOL:
                out.append(CheckRecord("boundary_free_energy", ERRATUM_RECORDED, {"L": L, "b": b, "x": x1},
                                       worst_p, EXPANSION_TOL, note="printed boundary term is off by a constant in L"))
    return out


SUITES = {
    "inversion": verify_inversion,
    "spectrum": verify_spectrum,
    "tl": verify_tl,
    "iom": verify_iom,
    "characters": verify_characters,
    "free-energy": verify_free_energy,
}


def run_suite(name: str, cfg: Config) -> VerificationReport:
    report = VerificationReport(cfg.as_dict(), cfg.seed)
    names = list(SUITES) if name == "all" else [name]
    families: dict = {}
    try:
        for n in names:
            log.info("running %s", n)
            fn = SUITES[n]
            if n in ("tl", "iom"):
                report.extend(fn(cfg, families))
            else:
                report.extend(fn(cfg))
    except Exception as exc:  # partial report with the error attached
        log.exception("suite %s failed", name)
        report.error = f"{type(exc).__name__}: {exc}"
    return report
