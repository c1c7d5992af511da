"""Command-line front end: strict configs, subcommand dispatch, CSV/report output.

    parastab SUBCOMMAND --config FILE [--out DIR] [--seed N] [--workers N] [--plot] [--set key=value]

Exit status: 0 success, 1 numerical assertion failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import exponents as ex
from .forms import (
    HilbertMetric,
    PositiveTypeOperator,
    SesquilinearForm,
    SpectrumError,
    associated_operator,
    random_accretive_form,
)
from .fracpow import ImaginaryPowerBoundError, fractional_power, imaginary_power_norm, power_semigroup_check
from .io import ConfigError, load_document, parse_matrix, write_csv, write_json, write_text
from .kato import kato_battery, verify_constant_relation
from .rds import (
    DomainSpec,
    ReactionDiffusionSpec,
    cubic_nonlinearity,
    galerkin_assemble,
    hyperbola_curves,
    laplace_eigenvalues,
    region_scan,
    sign_conditions,
    simulate_rd,
)
from .semigroup import BlowUpError, Trajectory, decay_fit, smoothing_profile

SUBCOMMANDS = ("exponents", "kato-check", "fracpow", "smoothing", "stability-region", "simulate", "decay-fit")
RESERVED = ("subcommand", "seed", "workers")


class NumericalFailure(ArithmeticError):
    pass


# -- schema ---------------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    parse: Callable[[Any, str], Any]
    required: bool = False
    default: Any = None


def validate(doc: dict, schema: dict, path: str = "") -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("expected a mapping", path)
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(map(repr, unknown))}; allowed: {', '.join(sorted(schema))}",
                          path)
    out = {}
    for name, key in schema.items():
        p = f"{path}.{name}" if path else name
        if name in doc and doc[name] is not None:
            out[name] = key.parse(doc[name], p)
        elif key.required:
            raise ConfigError("required key missing", p)
        else:
            out[name] = key.default
    return out


def p_int(lo=None):
    def parse(v, path):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"expected an integer, got {v!r}", path)
        if lo is not None and v < lo:
            raise ConfigError(f"must be >= {lo}", path)
        return v
    return parse


def p_float(lo=None, hi=None, lo_open=False):
    def parse(v, path):
        if isinstance(v, bool):
            raise ConfigError("expected a number", path)
        try:
            x = float(ex.rational(v)) if isinstance(v, str) else float(v)
        except (TypeError, ValueError, ZeroDivisionError):
            raise ConfigError(f"expected a number, got {v!r}", path) from None
        if lo is not None and (x < lo or (lo_open and x == lo)):
            raise ConfigError(f"must be {'>' if lo_open else '>='} {lo}", path)
        if hi is not None and x > hi:
            raise ConfigError(f"must be <= {hi}", path)
        return x
    return parse


def p_rational(v, path):
    try:
        return ex.rational(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"expected an exact rational such as '3/2' or 'inf', got {v!r}", path) from None


def p_bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError("expected true or false", path)
    return v


def p_choice(*choices):
    def parse(v, path):
        if v not in choices:
            raise ConfigError(f"expected one of {choices}, got {v!r}", path)
        return v
    return parse


def p_list(item, min_len=1, length=None):
    def parse(v, path):
        if not isinstance(v, (list, tuple)):
            raise ConfigError("expected a list", path)
        if length is not None and len(v) != length:
            raise ConfigError(f"expected {length} entries", path)
        if len(v) < min_len:
            raise ConfigError(f"expected at least {min_len} entries", path)
        return [item(x, f"{path}[{i}]") for i, x in enumerate(v)]
    return parse


def p_range(lo=None, lo_open=False):
    def parse(v, path):
        a, b = p_list(p_float(lo, lo_open=lo_open), length=2)(v, path)
        if not a < b:
            raise ConfigError("range must satisfy lo < hi", path)
        return a, b
    return parse


def p_matrix(v, path):
    return parse_matrix(v, path)


def p_mapping(schema):
    def parse(v, path):
        return validate(v, schema, path)
    return parse


def p_str(v, path):
    if not isinstance(v, str):
        raise ConfigError("expected a string", path)
    return v


DOMAIN = {
    "kind": Key(p_choice("interval", "rectangle"), default="interval"),
    "lengths": Key(p_list(p_float(0, lo_open=True)), default=[1.0]),
    "bc": Key(p_list(p_choice("dirichlet", "neumann"), min_len=2), default=["dirichlet", "dirichlet"]),
}

SCHEMAS = {
    "exponents": {
        "d": Key(p_int(1), required=True),
        "p_star": Key(p_rational), "p": Key(p_rational), "r": Key(p_rational),
        "sigma": Key(p_rational), "gamma": Key(p_rational),
        "case": Key(p_choice("L2", "L2p", "W1", "all"), default="all"),
        "lip_case": Key(p_choice("LL2", "LL2p", "LW1")),
    },
    "kato-check": {
        "form": Key(p_matrix, required=True),
        "v_metric": Key(p_matrix), "h_metric": Key(p_matrix),
        "s_values": Key(p_list(p_float()), default=[-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0]),
        "M_values": Key(p_list(p_float(0)), default=[0.0, 1.0, 10.0]),
        "tol": Key(p_float(0, lo_open=True), default=1e-8),
        "sweep": Key(p_mapping({
            "count": Key(p_int(0), default=0),
            "dim_min": Key(p_int(1), default=2),
            "dim_max": Key(p_int(1), default=8),
        }), default={"count": 0, "dim_min": 2, "dim_max": 8}),
    },
    "fracpow": {
        "matrix": Key(p_matrix, required=True),
        "metric": Key(p_matrix),
        "alphas": Key(p_list(p_float()), required=True),
        "method": Key(p_choice("auto", "eig", "schur"), default="auto"),
        "trials": Key(p_int(1), default=16),
        "tol": Key(p_float(0, lo_open=True), default=1e-10),
    },
    "smoothing": {
        "matrix": Key(p_matrix, required=True),
        "metric": Key(p_matrix),
        "alpha": Key(p_float(0, 1), default=0.5),
        "t_range": Key(p_range(0, lo_open=True), default=(1e-4, 10.0)),
        "n_t": Key(p_int(2), default=20001),
        "expected": Key(p_float()),
        "tol": Key(p_float(0, lo_open=True), default=1e-4),
    },
    "stability-region": {
        "domain": Key(p_mapping(DOMAIN), default=None),
        "B": Key(p_matrix, required=True),
        "K": Key(p_int(1), default=64),
        "d1_range": Key(p_range(0, lo_open=True), required=True),
        "d2_range": Key(p_range(0, lo_open=True), required=True),
        "grid": Key(p_list(p_int(1), length=2), default=[100, 100]),
        "curve_points": Key(p_int(2), default=400),
    },
    "simulate": {
        "domain": Key(p_mapping(DOMAIN), default=None),
        "diffusion": Key(p_list(p_float(0, lo_open=True)), required=True),
        "B": Key(p_matrix, required=True),
        "nonlinearity": Key(p_mapping({
            "kind": Key(p_choice("linear", "cubic"), default="linear"),
            "coefficient": Key(p_float(), default=1.0),
        }), default={"kind": "linear", "coefficient": 1.0}),
        "K": Key(p_int(1), default=16),
        "horizon": Key(p_float(0, lo_open=True), required=True),
        "step": Key(p_float(0, lo_open=True), default=0.01),
        "record_every": Key(p_int(1), default=1),
        "tail_fraction": Key(p_float(0, 1, lo_open=True), default=0.5),
        "alphas": Key(p_list(p_float(0, 1)), default=[0.0, 0.5]),
        "u0": Key(p_mapping({
            "kind": Key(p_choice("zero", "mode", "random"), default="mode"),
            "mode": Key(p_int(1), default=1),
            "amplitude": Key(p_float(0), default=1e-2),
        }), default={"kind": "mode", "mode": 1, "amplitude": 1e-2}),
    },
    "decay-fit": {
        "trajectory": Key(p_str, required=True),
        "alpha": Key(p_float(), default=0.0),
        "tail_fraction": Key(p_float(0, 1, lo_open=True), default=0.5),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    config_path: Path | None = None
    out_dir: Path = Path("out")
    seed: int = 0
    workers: int = 1
    plot: bool = False
    overrides: dict = field(default_factory=dict)


def _apply_overrides(doc: dict, overrides: dict) -> dict:
    doc = dict(doc)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot override inside a non-mapping", dotted)
        node[parts[-1]] = value
    return doc


def load_config(path, subcommand: str | None = None, overrides: dict | None = None, **flags) -> RunConfig:
    """Read and validate a config file; unknown keys are rejected."""
    path = Path(path)
    doc = _apply_overrides(load_document(path), overrides or {})
    declared = doc.get("subcommand")
    sub = subcommand or declared
    if sub is None:
        raise ConfigError("no subcommand given on the command line or in the file", "subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {sub!r}; expected one of {SUBCOMMANDS}", "subcommand")
    if declared is not None and declared != sub:
        raise ConfigError(f"file declares {declared!r} but {sub!r} was requested", "subcommand")
    seed = doc.get("seed", 0)
    p_int(0)(seed, "seed")
    workers = doc.get("workers", 1)
    p_int(1)(workers, "workers")
    params = validate({k: v for k, v in doc.items() if k not in RESERVED}, SCHEMAS[sub])
    cfg = RunConfig(sub, params, path, seed=seed, workers=workers, overrides=dict(overrides or {}))
    for k, v in flags.items():
        if v is not None:
            setattr(cfg, k, v)
    return cfg


# -- helpers -------------------------------------------------------------------------

def _build(path: str, fn, *args, **kwargs):
    """Construct a downstream object, reporting invariant violations as config errors."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), path) from exc


def _metric(m, dim, path):
    if m is None:
        return HilbertMetric.euclidean(dim)
    if m.shape[0] != dim:
        raise ConfigError(f"metric dimension {m.shape[0]} differs from {dim}", path)
    return _build(path, HilbertMetric, m)


def _domain(params):
    d = params["domain"] or {"kind": "interval", "lengths": [1.0], "bc": ["dirichlet", "dirichlet"]}
    return _build("domain", DomainSpec, d["kind"], tuple(d["lengths"]), tuple(d["bc"]))


def _say(msg):
    print(msg, flush=True)


# -- subcommands -----------------------------------------------------------------------

def cmd_exponents(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    q = _build("exponents", ex.ExponentQuery, p["d"], p["p_star"], p["p"], p["r"], p["sigma"], p["gamma"])
    cases = ex.CASES if p["case"] == "all" else (p["case"],)
    rows = _build("exponents", ex.exponent_table, q, cases)
    out = [write_csv(cfg.out_dir / "exponents.csv", ex.TABLE_COLUMNS, [[r[c] for c in ex.TABLE_COLUMNS] for r in rows])]
    for r in rows:
        _say("  ".join(f"{c}={r[c]}" for c in ex.TABLE_COLUMNS if r[c]))
    extra = []
    if q.r is not None:
        th = ex.weakev_thresholds(q)
        extra += [("gamma_tilde_0", ex.fmt(th.gamma_tilde_0)), ("gamma_tilde_p", ex.fmt(th.gamma_tilde_p)),
                  ("gamma_tilde_inf", ex.fmt(th.gamma_tilde_inf))]
        if q.d >= 3 and q.sigma is not None:
            ov = ex.overlap_check(q)
            extra += [("overlap", str(ov.holds).lower()), ("overlap_witness", ex.fmt(ov.witness)),
                      ("overlap_reason", ov.reason)]
    if p["lip_case"]:
        lip = _build("lip_case", ex.lip_admissible, q, p["lip_case"])
        extra += [("lip_case", lip.case), ("p_tilde", ex.fmt(lip.p_tilde)), ("lip_q_gamma", ex.fmt(lip.q_gamma)),
                  ("sigma_bound", ex.fmt(lip.sigma_bound)), ("sigma_strict", str(lip.sigma_strict).lower()),
                  ("lip_admissible", str(lip.admissible).lower()),
                  ("lip_violations", "; ".join(map(str, lip.violations)))]
    if extra:
        out.append(write_csv(cfg.out_dir / "thresholds.csv", ["name", "value"], extra))
        for k, v in extra:
            _say(f"{k}={v}")
    return out


def _battery_text(items) -> str:
    lines = []
    for it in items:
        lines.append(f"[{it.id}] {it.description}")
        lines.append(f"  passed: {str(it.passed).lower()}")
        for k in sorted(it.constants):
            lines.append(f"  {k}: {it.constants[k]!r}")
        for k in sorted(it.thresholds):
            lines.append(f"  threshold {k}: {it.thresholds[k]}")
    return "\n".join(lines) + "\n"


def cmd_kato(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    coeff = p["form"]
    n = coeff.shape[0]
    v = _metric(p["v_metric"], n, "v_metric")
    h = _metric(p["h_metric"], n, "h_metric")
    form = SesquilinearForm(coeff, v)
    items = _build("form", kato_battery, form, h, tuple(s for s in p["s_values"] if s))
    op = associated_operator(form, h)
    relation = [(M, verify_constant_relation(op, M)) for M in p["M_values"]]
    doc = {"battery": [it.__dict__ for it in items],
           "relation": [{"M": M, "deviation": dev} for M, dev in relation]}
    out = [write_json(cfg.out_dir / "kato_report.json", doc),
           write_text(cfg.out_dir / "kato_report.txt", _battery_text(items)
                      + "".join(f"[relation] M = {M!r}: |2 c1 - (1 + alpha)| = {dev!r}\n" for M, dev in relation))]
    failures = [it.id for it in items if not it.passed]
    failures += [f"relation(M={M:g})" for M, dev in relation if dev > p["tol"]]
    sw = p["sweep"]
    if sw["count"]:
        if sw["dim_min"] > sw["dim_max"]:
            raise ConfigError("dim_min exceeds dim_max", "sweep")
        rng = np.random.default_rng(cfg.seed)
        rows = []
        for trial in range(sw["count"]):
            dim = int(rng.integers(sw["dim_min"], sw["dim_max"] + 1))
            a = associated_operator(random_accretive_form(rng, dim))
            worst_rel = max(verify_constant_relation(a, M) for M in p["M_values"])
            ratio = 0.0
            for s in p["s_values"]:
                if s:
                    nrm = imaginary_power_norm(a, s, check=False)
                    ratio = max(ratio, nrm / math.exp(math.pi * abs(s) / 2))
            rows.append([trial, dim, worst_rel, ratio])
            if worst_rel > p["tol"]:
                failures.append(f"sweep[{trial}].relation")
            if ratio > 1 + 1e-10:
                failures.append(f"sweep[{trial}].imaginary_power")
        out.append(write_csv(cfg.out_dir / "kato_sweep.csv",
                             ["trial", "dim", "max_relation_deviation", "max_imag_power_ratio"], rows))
    for it in items:
        _say(f"{it.id}: {'pass' if it.passed else 'FAIL'}  " + ", ".join(
            f"{k}={val:.6g}" for k, val in sorted(it.constants.items()) if isinstance(val, float)))
    if failures:
        raise NumericalFailure("failed checks: " + ", ".join(failures))
    return out


def cmd_fracpow(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    a = p["matrix"]
    metric = _metric(p["metric"], a.shape[0], "metric")
    op = _build("matrix", PositiveTypeOperator, a, metric)
    rows = []
    for alpha in p["alphas"]:
        pw = _build("alphas", fractional_power, op, alpha, p["method"]).entries
        for i in range(pw.shape[0]):
            for j in range(pw.shape[1]):
                rows.append([alpha, i, j, float(pw[i, j].real), float(pw[i, j].imag)])
    out = [write_csv(cfg.out_dir / "fracpow.csv", ["alpha", "row", "col", "re", "im"], rows)]
    rng = np.random.default_rng(cfg.seed)
    checks = []
    alphas = p["alphas"]
    for g, d in zip(alphas, alphas[1:] + alphas[:1]):
        dev = power_semigroup_check(op, g, d, p["trials"], rng)
        checks.append([g, d, dev])
    out.append(write_csv(cfg.out_dir / "fracpow_check.csv", ["gamma", "delta", "max_relative_deviation"], checks))
    _say(f"decomposition: {op.decomposition.kind}; worst A^g A^d vs A^(g+d): {max(c[2] for c in checks):.3e}")
    bad = [c for c in checks if c[2] > p["tol"]]
    if bad:
        raise NumericalFailure(f"power law violated for (gamma, delta) = {[(c[0], c[1]) for c in bad]}")
    return out


def cmd_smoothing(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    a = p["matrix"]
    op = _build("matrix", PositiveTypeOperator, a, _metric(p["metric"], a.shape[0], "metric"))
    t = np.geomspace(*p["t_range"], p["n_t"])
    prof = smoothing_profile(op, p["alpha"], t)
    k = int(np.argmax(prof))
    out = [write_csv(cfg.out_dir / "smoothing.csv", ["t", "value"], [[float(x), float(y)] for x, y in zip(t, prof)])]
    summary = {"alpha": p["alpha"], "sup": float(prof[k]), "argmax_t": float(t[k]), "expected": p["expected"]}
    out.append(write_json(cfg.out_dir / "smoothing_summary.json", summary))
    _say(f"sup_t t^{p['alpha']:g} |A^{p['alpha']:g} e^(-tA)| = {prof[k]:.12g} at t = {t[k]:.6g}")
    if p["expected"] is not None and abs(prof[k] - p["expected"]) > p["tol"]:
        raise NumericalFailure(f"sup {prof[k]:.12g} differs from expected {p['expected']:.12g} by more than {p['tol']:g}")
    return out


def cmd_region(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    B = p["B"]
    if B.shape != (2, 2) or np.iscomplexobj(B):
        raise ConfigError("B must be a real 2x2 matrix", "B")
    dom = _domain(p)
    eig = laplace_eigenvalues(dom, p["K"])
    n1, n2 = p["grid"]
    d1 = np.linspace(*p["d1_range"], n1)
    d2 = np.linspace(*p["d2_range"], n2)
    scan = region_scan(B, eig.kappas, d1, d2, workers=cfg.workers, include_zero=eig.includes_zero)
    out = [write_csv(cfg.out_dir / "region.csv", ["d1", "d2", "in_region", "gap"], scan.rows())]
    signs = sign_conditions(B)
    summary = {"sign_conditions": list(signs), "cells": int(n1 * n2), "boundary_cells": int(scan.boundary.sum()),
               "agreement": scan.agreement, "kappa_1": float(eig.kappas[0]), "K": p["K"]}
    if all(signs):
        d1c = np.linspace(0.0, p["d1_range"][1], p["curve_points"])
        curves = hyperbola_curves(B, eig.kappas, d1c)
        out.append(write_csv(cfg.out_dir / "curves.csv", ["k", "d1", "d2"], curves))
    out.append(write_json(cfg.out_dir / "region_summary.json", summary))
    _say(f"sign conditions {signs}; agreement {summary['agreement']!r} on "
         f"{summary['cells'] - summary['boundary_cells']} cells")
    if cfg.plot:
        out += _plot_region(cfg.out_dir)
    if all(signs) and scan.agreement < 1.0:
        raise NumericalFailure(f"region test and spectral gap disagree (agreement {scan.agreement:.6f})")
    return out


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    dom = _domain(p)
    B = p["B"]
    if np.iscomplexobj(B):
        raise ConfigError("B must be real", "B")
    nl = p["nonlinearity"]
    f = cubic_nonlinearity(B, nl["coefficient"]) if nl["kind"] == "cubic" else None
    spec = _build("simulate", ReactionDiffusionSpec, dom, p["diffusion"], B, f, p["K"])
    system = galerkin_assemble(spec)
    n, K = spec.n, system.n_modes
    u0 = np.zeros(n * K)
    init = p["u0"]
    if init["kind"] == "mode":
        if init["mode"] > K:
            raise ConfigError(f"mode index exceeds the {K} retained modes", "u0.mode")
        u0[np.arange(n) * K + init["mode"] - 1] = init["amplitude"]
    elif init["kind"] == "random":
        x = np.random.default_rng(cfg.seed).standard_normal(n * K)
        u0 = init["amplitude"] * x / np.linalg.norm(x)
    if p["step"] > p["horizon"]:
        raise ConfigError("step exceeds horizon", "step")
    try:
        traj, report = simulate_rd(spec, u0, p["horizon"], p["step"], system, p["tail_fraction"],
                                   p["record_every"], tuple(p["alphas"]))
    except BlowUpError as exc:
        raise NumericalFailure(str(exc)) from exc
    out = [write_text(cfg.out_dir / "trajectory.csv", traj.to_csv(alpha=p["alphas"][0]))]
    rows = [[a, r if r == r else "", pf, lam0] for a, r, pf, lam0 in report.rows]
    out.append(write_csv(cfg.out_dir / "decay.csv", ["alpha", "rate", "prefactor", "lambda0"], rows))
    _say(f"lambda0 = {report.lambda0:.12g} ({'stable' if report.stable else 'unstable'})")
    for a, r, pf, lam0 in report.rows:
        _say(f"alpha = {a:g}: fitted rate {r:.12g}")
    if cfg.plot:
        out += _plot_trajectory(cfg.out_dir)
    return out


def cmd_decay(cfg: RunConfig) -> list[Path]:
    p = cfg.params
    src = Path(p["trajectory"])
    if not src.is_absolute() and cfg.config_path is not None:
        src = cfg.config_path.parent / src
    try:
        traj = Trajectory.from_csv(src.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory: {exc.strerror}", "trajectory") from exc
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed trajectory CSV: {exc}", "trajectory") from exc
    alpha = p["alpha"]
    if float(alpha) not in traj.norms and alpha != 0:
        raise ConfigError(f"trajectory has no norm column for alpha = {alpha:g}", "alpha")
    try:
        fit = decay_fit(traj, alpha, p["tail_fraction"])
    except ValueError as exc:
        raise NumericalFailure(str(exc)) from exc
    out = [write_csv(cfg.out_dir / "decay.csv", ["alpha", "rate", "prefactor", "truncated"],
                     [[alpha, fit.rate, fit.prefactor, str(fit.truncated).lower()]])]
    _say(f"rate = {fit.rate:.12g}, prefactor = {fit.prefactor:.12g}" + (" (truncated at a zero)" if fit.truncated else ""))
    return out


HANDLERS = {
    "exponents": cmd_exponents,
    "kato-check": cmd_kato,
    "fracpow": cmd_fracpow,
    "smoothing": cmd_smoothing,
    "stability-region": cmd_region,
    "simulate": cmd_simulate,
    "decay-fit": cmd_decay,
}


# -- plotting (reads the CSVs back) ---------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _read_csv(path):
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _plot_region(out_dir: Path) -> list[Path]:
    plt = _pyplot()
    _, rows = _read_csv(out_dir / "region.csv")
    d1 = np.array([float(r[0]) for r in rows])
    d2 = np.array([float(r[1]) for r in rows])
    inside = np.array([r[2] == "1" for r in rows])
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(d1[inside], d2[inside], s=2, c="tab:green", label="stable (region test)")
    ax.scatter(d1[~inside], d2[~inside], s=2, c="tab:red", label="unstable")
    if (out_dir / "curves.csv").exists():
        _, crows = _read_csv(out_dir / "curves.csv")
        for k in sorted({int(r[0]) for r in crows})[:6]:
            pts = np.array([[float(r[1]), float(r[2])] for r in crows if int(r[0]) == k])
            ax.plot(pts[:, 0], pts[:, 1], lw=1, label=f"C_{k}")
    ax.set_xlim(d1.min(), d1.max())
    ax.set_ylim(d2.min(), d2.max())
    ax.set_xlabel("d1")
    ax.set_ylabel("d2")
    ax.legend(fontsize=7, markerscale=4)
    path = out_dir / "region.png"
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return [path]


def _plot_trajectory(out_dir: Path) -> list[Path]:
    plt = _pyplot()
    header, rows = _read_csv(out_dir / "trajectory.csv")
    t = np.array([float(r[0]) for r in rows])
    nrm = np.array([float(r[-1]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = nrm > 0
    ax.semilogy(t[pos], nrm[pos])
    ax.set_xlabel("t")
    ax.set_ylabel(header[-1])
    path = out_dir / "trajectory.png"
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return [path]


# -- entry points -----------------------------------------------------------------------------

def run(cfg: RunConfig) -> int:
    """Execute one configured subcommand; returns the exit status."""
    try:
        artifacts = HANDLERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ImaginaryPowerBoundError, BlowUpError, SpectrumError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    for a in artifacts:
        _say(f"wrote {a}")
    return 0


def _parse_set(items) -> dict:
    out = {}
    for s in items or []:
        if "=" not in s:
            raise ConfigError(f"override {s!r} is not key=value", "--set")
        k, v = s.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parastab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="YAML (or JSON) config file")
    ap.add_argument("--out", default=None, help="output directory (default: out/<subcommand>)")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized sweeps (default 0)")
    ap.add_argument("--workers", type=int, default=None, help="process pool size for stability-region")
    ap.add_argument("--plot", action="store_true", help="render PNGs from the written CSVs")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted path)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("must be >= 1", "--workers")
        out = Path(args.out) if args.out else Path("out") / args.subcommand
        cfg = load_config(args.config, args.subcommand, _parse_set(args.set), out_dir=out, seed=args.seed,
                          workers=args.workers, plot=args.plot or None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
