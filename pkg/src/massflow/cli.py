"""``massflow`` command line.

Exit codes: 0 success, 1 suite failure, 2 configuration error, 3 numerical
failure.  Every command writes a JSON report (with ``schema_version``) and,
where there is tabular data, a CSV next to it in the output directory.
``--format`` picks what is echoed to stdout.

A config file given by ``--config`` uses ``key = value`` lines grouped in
sections: ``[massflow]`` applies to every command and ``[<command>]`` (for
example ``[verify]``) to one.  Keys are option names with ``-`` or ``_``.
Options given on the command line win over the file.
"""

from __future__ import annotations

import configparser
import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource

from . import __version__
from .catalog import (
    make_flat,
    make_isotropic_schwarzschild,
    make_schwarzschild,
    sample_nonneg_scalar_metric,
    sample_perturbed_horizon,
)
from .errors import AllStrategiesFailed, MassflowError, NumericalFailure
from .geometry import ConformalMetric
from .grids import RadialGrid
from .imcf import imcf_flow
from .io import metric_rows, read_metric_csv, to_json, write_csv, write_json
from .masses import FIT_RTOL, mass_report
from .qsflow import BoundaryData, bartnik_upper_bound, theorem5_bound
from .staticext import schwarzschild_match, shoot_static_extension
from .suites import DEFAULT_TOLERANCES, SUITES, run_suite

EXIT_SUITE_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

METRICS = ("flat", "schwarzschild", "isotropic_schwarzschild", "sourced", "perturbed_horizon", "file")


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def _fail_numerical(exc: Exception):
    click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
    sys.exit(EXIT_NUMERICAL)


def _parse_tols(pairs, known: dict) -> dict:
    out = {}
    for item in pairs:
        name, sep, val = item.partition("=")
        name = name.strip()
        if not sep or name not in known:
            raise ConfigError(f"bad --tol {item!r}; known names: {', '.join(sorted(known))}")
        try:
            out[name] = float(val)
        except ValueError:
            raise ConfigError(f"--tol {name} needs a number, got {val!r}") from None
    return out


def _floats(text):
    if text is None or text == "":
        return None
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _apply_config_file(ctx: click.Context, command: str):
    """Fill options still at their defaults from the config file."""
    path = ctx.params.get("config")
    if not path:
        return
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = {}
    for section in ("massflow", command):
        if parser.has_section(section):
            values.update({k.replace("-", "_"): v for k, v in parser.items(section)})
    params = {}
    for p in ctx.command.params:
        params[p.name] = p
        for opt in p.opts:
            params[opt.lstrip("-").replace("-", "_")] = p
    for key, raw in values.items():
        if key not in params or key == "config":
            raise ConfigError(f"unknown key {key!r} in config section for {command}")
        p = params[key]
        if ctx.get_parameter_source(p.name) != ParameterSource.DEFAULT:
            continue
        raw = raw.split() if p.multiple else raw
        try:
            ctx.params[p.name] = p.type_cast_value(ctx, raw)
        except click.BadParameter as exc:
            raise ConfigError(f"config key {key}: {exc.message}") from None


def _out_dir(out) -> Path:
    path = Path(os.environ.get("MASSFLOW_OUT") or out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def common_options(command_name):
    def deco(f):
        @click.option("--out", default="massflow-out", show_default=True, help="Output directory (MASSFLOW_OUT overrides).")
        @click.option("--seed", type=int, default=None, help="Seed for randomized metrics and suites.")
        @click.option("--jobs", type=int, default=None, help="Worker processes (default: logical CPUs).")
        @click.option("--tol", multiple=True, metavar="NAME=VAL", help="Override a named tolerance; repeatable.")
        @click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
        @click.option("--config", type=click.Path(dir_okay=False), default=None, help="key = value config file.")
        @functools.wraps(f)
        def wrapper(**kwargs):
            ctx = click.get_current_context()
            _apply_config_file(ctx, command_name)
            kwargs = {k: ctx.params.get(k, v) for k, v in kwargs.items()}
            try:
                return f(**kwargs)
            except NumericalFailure as exc:
                _fail_numerical(exc)
            except (MassflowError, ValueError) as exc:
                raise ConfigError(f"{type(exc).__name__}: {exc}") from None

        return wrapper

    return deco


def metric_options(f):
    f = click.option("--metric", type=click.Choice(METRICS), default="schwarzschild", show_default=True)(f)
    f = click.option("--m", "mass", type=float, default=1.0, show_default=True, help="Mass parameter.")(f)
    f = click.option("--amplitude", type=float, default=0.05, show_default=True, help="Source amplitude (sourced).")(f)
    f = click.option("--r-min", type=float, default=None, help="Inner radius (default depends on the metric).")(f)
    f = click.option("--r-max", type=float, default=None, help="Outer radius (default depends on the metric).")(f)
    f = click.option("--n", "nodes", type=int, default=4096, show_default=True, help="Radial nodes.")(f)
    f = click.option("--spacing", type=click.Choice(["uniform", "geometric"]), default=None)(f)
    f = click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None)(f)
    return f


def _grid_defaults(metric, mass):
    if metric == "schwarzschild":
        return max(1.0, 2.5 * mass), 400.0, "uniform"
    if metric in ("isotropic_schwarzschild", "perturbed_horizon"):
        return 0.05 * mass, 1e4 * max(mass, 1.0), "geometric"
    return 1.0, 400.0, "uniform"


def build_metric(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, seed):
    """(metric object, config echo) for the metric options."""
    if metric == "file":
        if not input_path:
            raise ConfigError("--metric file needs --input")
        return read_metric_csv(input_path), {"metric": "file", "input": str(input_path)}
    d_min, d_max, d_sp = _grid_defaults(metric, mass)
    grid = RadialGrid(r_min if r_min is not None else d_min, r_max if r_max is not None else d_max, nodes, spacing or d_sp)
    echo = {
        "metric": metric,
        "m": mass,
        "r_min": grid.r_min,
        "r_max": grid.r_max,
        "n": grid.n,
        "spacing": grid.spacing,
    }
    if metric == "flat":
        return make_flat(grid), echo
    if metric == "schwarzschild":
        return make_schwarzschild(mass, grid), echo
    if metric == "isotropic_schwarzschild":
        return make_isotropic_schwarzschild(mass, grid), echo
    if seed is None:
        raise ConfigError(f"--metric {metric} needs --seed")
    echo["seed"] = seed
    if metric == "sourced":
        echo["amplitude"] = amplitude
        return sample_nonneg_scalar_metric(seed, grid, amplitude), echo
    fixture, shells = sample_perturbed_horizon(seed, grid, mass)
    echo["shells"] = [list(s) for s in ((sh.amplitude, sh.inner, sh.outer) for sh in shells)]
    return fixture, echo


def _emit(fmt, payload, rows=None, columns=None):
    if fmt == "csv" and rows is not None:
        click.echo(",".join(columns))
        for row in rows:
            click.echo(",".join(format(float(row[c]), ".17g") if row[c] is not None else "" for c in columns))
    else:
        click.echo(to_json(payload), nl=False)


@click.group()
@click.version_option(__version__, prog_name="massflow")
def main():
    """Mass functionals, extensions and geometric-inequality checks."""


@main.command()
@metric_options
@click.option("--radii", default=None, help="Comma-separated evaluation radii (default: 4 radii r_max/8..r_max).")
@click.option("--order", type=int, default=1, show_default=True, help="Order of the 1/r extrapolation.")
@common_options("mass")
def mass(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, radii, order, out, seed, jobs, tol, fmt, config):
    """ADM, Hawking and Misner-Sharp masses of a metric."""
    tols = _parse_tols(tol, {"fit_rtol": FIT_RTOL})
    g, echo = build_metric(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, seed)
    report = mass_report(g, _floats(radii), order, rtol=tols.get("fit_rtol", FIT_RTOL))
    payload = {"command": "mass", "config": dict(echo, radii=report.radii, order=order, tol=tols)}
    payload.update(report.to_dict())
    if isinstance(g, ConformalMetric):
        payload["notes"] = payload["notes"] + ["hawking values are for coordinate spheres rho = const"]
    d = _out_dir(out)
    write_json(d / "mass.json", payload)
    cols = ("r", "adm_finite", "hawking", "misner_sharp")
    write_csv(d / "mass.csv", report.rows(), cols)
    _emit(fmt, payload, report.rows(), cols)


@main.command()
@click.option("--r", "radius", type=float, required=True, help="Boundary area radius.")
@click.option("--H", "H", type=float, required=True, help="Boundary mean curvature (constant).")
@click.option("--strategies", default="radial,pde", show_default=True)
@click.option("--r-max", type=float, default=None, help="Outer radius of the extensions (default 100 r).")
@common_options("extend")
def extend(radius, H, strategies, r_max, out, seed, jobs, tol, fmt, config):
    """Bartnik upper bound, round-data bound and static fit side by side."""
    tols = _parse_tols(tol, {"order_slack": 1e-6})
    slack = tols.get("order_slack", 1e-6)
    names = tuple(s.strip() for s in strategies.split(",") if s.strip())
    bad = [s for s in names if s not in ("radial", "pde")]
    if bad or not names:
        raise ConfigError(f"unknown strategies {bad}; choose from radial, pde")
    bd = BoundaryData(radius, H)
    r_ext = r_max or 100.0 * radius
    opts = {"radial": {"r_max": max(r_ext, 400.0)}, "pde": {"r_max": r_ext}}
    try:
        bound = bartnik_upper_bound(bd, names, **opts)
    except AllStrategiesFailed as exc:
        click.echo(json.dumps(exc.failures, indent=2), err=True)
        _fail_numerical(exc)
    t5 = theorem5_bound(bd)
    match = schwarzschild_match(bd)
    static = shoot_static_extension(bd, r_out=r_ext)
    flags = []
    if bound.mass > t5 + slack:
        flags.append(f"bartnik bound {bound.mass:.12g} exceeds round-data bound {t5:.12g}")
    if static.m_fit > bound.mass + slack:
        flags.append(f"static mass {static.m_fit:.12g} exceeds the constructed upper bound {bound.mass:.12g}")
    best = bound.results[bound.strategy]
    payload = {
        "command": "extend",
        "config": {"r": radius, "H": H, "strategies": list(names), "r_max": r_ext, "tol": tols},
        "bartnik_upper_bound": bound.mass,
        "bartnik_error": bound.error,
        "strategy": bound.strategy,
        "per_strategy": {k: {"adm": v.adm, "adm_error": v.adm_error, "notes": v.notes} for k, v in bound.results.items()},
        "failures": bound.failures,
        "theorem5_bound": t5,
        "schwarzschild_match": match,
        "static_m_fit": static.m_fit,
        "static_residual": static.residual.max,
        "ordering_flags": flags,
    }
    d = _out_dir(out)
    write_json(d / "extend.json", payload)
    rows, cols = metric_rows(best.metric)
    write_csv(d / "extend.csv", rows, cols)
    _emit(fmt, payload, rows, cols)


@main.command("static-fit")
@click.option("--r", "radius", type=float, required=True)
@click.option("--H", "H", type=float, required=True)
@click.option("--r-out", type=float, default=None, help="Outer radius of the output grid (default 100 r).")
@click.option("--n", "nodes", type=int, default=1024, show_default=True)
@common_options("static-fit")
def static_fit(radius, H, r_out, nodes, out, seed, jobs, tol, fmt, config):
    """Static spherically symmetric exterior for round boundary data."""
    _parse_tols(tol, {})
    bd = BoundaryData(radius, H)
    sol = shoot_static_extension(bd, r_out=r_out, n=nodes)
    payload = {
        "command": "static-fit",
        "config": {"r": radius, "H": H, "r_out": sol.metric.grid.r_max, "n": nodes},
        "m_fit": sol.m_fit,
        "schwarzschild_match": schwarzschild_match(bd),
        "flux": sol.flux,
        "residual_ricci": sol.residual.ricci,
        "residual_laplace": sol.residual.laplace,
        "notes": sol.notes,
    }
    d = _out_dir(out)
    write_json(d / "static.json", payload)
    write_csv(d / "static.csv", sol.rows(), ("r", "u", "V"))
    _emit(fmt, payload, sol.rows(), ("r", "u", "V"))


@main.command()
@metric_options
@click.option("--r-start", type=float, required=True)
@click.option("--t-max", type=float, default=2.0, show_default=True)
@click.option("--steps", type=int, default=201, show_default=True, help="Output samples.")
@common_options("imcf")
def imcf(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, r_start, t_max, steps, out, seed, jobs, tol, fmt, config):
    """Round inverse mean curvature flow with the Hawking mass along it."""
    _parse_tols(tol, {})
    g, echo = build_metric(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, seed)
    if isinstance(g, ConformalMetric):
        raise ConfigError("imcf needs a radial metric (u^2 dr^2 + r^2 dOmega^2)")
    trace = imcf_flow(g, r_start, t_max, steps)
    m_H = trace.m_H
    payload = {
        "command": "imcf",
        "config": dict(echo, r_start=r_start, t_max=t_max, steps=steps),
        "stopped": trace.stopped,
        "t_final": float(trace.t[-1]),
        "area_law_error": trace.area_law_error(),
        "m_H_start": float(m_H[0]),
        "m_H_end": float(m_H[-1]),
        "max_decrease": float(max(0.0, np.max(-np.diff(m_H)))) if m_H.size > 1 else 0.0,
    }
    d = _out_dir(out)
    write_json(d / "imcf.json", payload)
    write_csv(d / "imcf.csv", trace.rows(), trace.COLUMNS)
    _emit(fmt, payload, trace.rows(), trace.COLUMNS)


@main.command()
@click.option("--suite", type=click.Choice(sorted(SUITES)), required=True)
@click.option("--n", "count", type=int, default=200, show_default=True, help="Number of cases.")
@click.option("--amplitude", type=float, default=0.05, show_default=True)
@common_options("verify")
def verify(suite, count, amplitude, out, seed, jobs, tol, fmt, config):
    """Run a seeded property suite; exit 1 if any case fails."""
    if seed is None:
        raise ConfigError("verify needs --seed")
    tols = _parse_tols(tol, DEFAULT_TOLERANCES)
    report = run_suite(suite, count, seed, jobs, tols, amplitude)
    payload = {"command": "verify"}
    payload.update(report.to_dict())
    d = _out_dir(out)
    write_json(d / f"verify_{suite}.json", payload)
    cols = ("index", "seed", "passed", "value", "margin")
    rows = [{c: (float(r[c]) if r[c] is not None else None) for c in cols} for r in report.cases]
    write_csv(d / f"verify_{suite}.csv", rows, cols)
    if fmt == "csv":
        _emit(fmt, payload, rows, cols)
    else:
        click.echo(f"{suite}: {report.passed}/{report.n} passed, worst margin {report.worst_margin if report.worst_margin is None else float(report.worst_margin)!r}")
    for case in report.cases:
        if not case["passed"]:
            click.echo(f"  case {case['index']} (seed {case['seed']}) failed: {case.get('error', case)}", err=True)
    if not report.ok:
        sys.exit(EXIT_SUITE_FAILURE)


@main.command("export-fixture")
@metric_options
@click.option("--name", default=None, help="File stem (default: the metric kind).")
@common_options("export-fixture")
def export_fixture(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, name, out, seed, jobs, tol, fmt, config):
    """Write a catalog metric as CSV (r,u or rho,phi) plus a JSON description."""
    _parse_tols(tol, {})
    if metric == "file":
        raise ConfigError("export-fixture builds catalog metrics; --metric file is not exportable")
    g, echo = build_metric(metric, mass, amplitude, r_min, r_max, nodes, spacing, input_path, seed)
    stem = name or metric
    d = _out_dir(out)
    rows, cols = metric_rows(g)
    write_csv(d / f"{stem}.csv", rows, cols)
    payload = {"command": "export-fixture", "config": echo, "columns": list(cols), "csv": f"{stem}.csv"}
    write_json(d / f"{stem}.json", payload)
    _emit(fmt, payload, rows, cols)


if __name__ == "__main__":
    main()
