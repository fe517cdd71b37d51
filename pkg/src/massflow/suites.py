"""Seeded property suites run by ``massflow verify``.

Every case gets its own seed from ``SeedSequence([seed, index])`` so a case
can be rerun alone, and results are collected in index order whatever the
number of workers.  Each case reports ``value`` (the quantity tested) and
``margin``, its signed distance to the failure threshold: a case passes iff
``margin >= 0`` and no numerical error occurred.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from . import __version__
from .catalog import (
    make_schwarzschild,
    penrose_margin_exact,
    sample_nonneg_scalar_metric,
    sample_nonneg_scalar_source,
    sample_perturbed_horizon,
    sourced_metric,
)
from .errors import MassflowError
from .geometry import scalar_curvature, second_variation_residual_profile
from .grids import RadialGrid
from .imcf import geroch_increment_error, geroch_monotonicity_check, penrose_check
from .masses import adm_mass, hawking_mass, misner_sharp_mass
from .qsflow import BoundaryData, bartnik_upper_bound, theorem5_bound
from .staticext import schwarzschild_match, shoot_static_extension

DEFAULT_TOLERANCES = {
    "pmt": 1e-6,  # adm >= -tol
    "penrose": 1e-6,  # margin >= -tol
    "penrose_strict": 1e-4,  # reported count of margins above this
    "monotone": 1e-6,  # max (-dm_H/dr)_+ <= tol
    "order_lo": 1.7,
    "order_hi": 2.3,
    "bounds": 1e-6,
    "ratio_lo": 3.2,
    "ratio_hi": 4.8,
    "hawking": 1e-10,
}

PMT_GRID = dict(r_min=1.0, r_max=400.0, n=4096)
GEROCH_GRID = dict(r_min=1.0, r_max=400.0, n=4097)
IDENTITY_GRID = dict(r_min=1.0, r_max=20.0, n=1024)
PENROSE_GRID = dict(r_min=0.05, r_max=1e4, n=8192, spacing="geometric")


def case_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _pmt(cs, tol, amplitude):
    metric = sample_nonneg_scalar_metric(cs, RadialGrid(**PMT_GRID), amplitude)
    est = adm_mass(metric)
    return {
        "value": est.mass,
        "margin": est.mass + tol["pmt"],
        "adm_error": est.error,
        "misner_sharp_rmax": float(misner_sharp_mass(metric, metric.grid.r_max)),
    }


def _penrose(cs, tol, amplitude):
    metric, shells = sample_perturbed_horizon(cs, RadialGrid(**PENROSE_GRID))
    res = penrose_check(metric)
    return {
        "value": res.margin,
        "margin": res.margin + tol["penrose"],
        "exact": penrose_margin_exact(1.0, shells),
        "strict": bool(res.margin > tol["penrose_strict"]),
        "horizon_rho": res.horizon.rho,
        "adm": res.adm,
    }


def _geroch(cs, tol, amplitude):
    grid = RadialGrid(**GEROCH_GRID)
    source = sample_nonneg_scalar_source(cs, grid, amplitude)
    coarse = sourced_metric(grid, source)
    fine = sourced_metric(grid.refined(), source)
    violation = geroch_monotonicity_check(coarse)
    e1, e2 = geroch_increment_error(coarse), geroch_increment_error(fine)
    order = float(np.log2(e1 / e2))
    margin = min(tol["monotone"] - violation, order - tol["order_lo"], tol["order_hi"] - order)
    return {"value": violation, "margin": margin, "order": order, "increment_error": e1}


def _bounds(cs, tol, amplitude):
    rng = np.random.default_rng(cs)
    r = float(rng.uniform(0.5, 10.0))
    x = float(rng.uniform(0.0, 1.0))
    bd = BoundaryData(r, 2.0 * x / r)
    exact = schwarzschild_match(bd)
    t5 = theorem5_bound(bd)
    qs = bartnik_upper_bound(bd, strategies=("radial",)).mass
    static = shoot_static_extension(bd).m_fit
    dev = max(abs(t5 - exact), abs(qs - exact), abs(static - exact))
    margin = min(tol["bounds"] - dev, t5 + tol["bounds"] - qs)
    return {"value": dev, "margin": margin, "r": r, "H": bd.H_const, "theorem5": t5, "bartnik": qs, "static": static}


def _identities(cs, tol, amplitude):
    grid = RadialGrid(**IDENTITY_GRID)
    source = sample_nonneg_scalar_source(cs, grid, amplitude)
    coarse, fine = sourced_metric(grid, source), sourced_metric(grid.refined(), source)

    def fd_residual(m):
        return float(np.max(np.abs(scalar_curvature(m, "fd") - scalar_curvature(m))))

    def sv_residual(m):
        return float(np.max(np.abs(second_variation_residual_profile(m))))

    ratios = [sv_residual(coarse) / sv_residual(fine), fd_residual(coarse) / fd_residual(fine)]
    radii = coarse.r[:: grid.n // 8]
    hawk = max(abs(hawking_mass(coarse, x) - misner_sharp_mass(coarse, x)) for x in radii)
    margin = min(
        min(q - tol["ratio_lo"] for q in ratios),
        min(tol["ratio_hi"] - q for q in ratios),
        tol["hawking"] - hawk,
    )
    return {"value": hawk, "margin": margin, "second_variation_ratio": ratios[0], "fd_ratio": ratios[1]}


SUITES = {"pmt": _pmt, "penrose": _penrose, "geroch": _geroch, "bounds": _bounds, "identities": _identities}


def run_case(suite: str, seed: int, tol: dict, amplitude: float, index: int) -> dict:
    cs = case_seed(seed, index)
    record = {"index": index, "seed": cs}
    try:
        record.update(SUITES[suite](cs, tol, amplitude))
        record["passed"] = bool(record["margin"] >= 0)
    except MassflowError as exc:
        record.update(value=None, margin=None, passed=False, error=f"{type(exc).__name__}: {exc}")
    return record


@dataclass
class SuiteReport:
    suite: str
    n: int
    passed: int
    failed: int
    worst_margin: Optional[float]
    worst_value: Optional[float]
    cases: list
    config: dict
    version: str = __version__
    summary: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_dict(self) -> dict:
        return asdict(self)


def run_suite(
    suite: str,
    n: int,
    seed: int,
    jobs: Optional[int] = None,
    tolerances: Optional[dict] = None,
    amplitude: float = 0.05,
) -> SuiteReport:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    if n < 1:
        raise ValueError("n must be positive")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (tolerances or {}).items():
        if k not in tol:
            raise ValueError(f"unknown tolerance {k!r}; known: {sorted(tol)}")
        tol[k] = float(v)
    jobs = jobs or os.cpu_count() or 1
    work = partial(run_case, suite, seed, tol, amplitude)
    t0 = time.perf_counter()
    if jobs == 1 or n == 1:
        cases = [work(i) for i in range(n)]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, n)) as pool:
            cases = list(pool.map(work, range(n), chunksize=max(1, n // (4 * jobs))))
    wall = time.perf_counter() - t0

    n_pass = sum(c["passed"] for c in cases)
    margins = [c["margin"] for c in cases if c["margin"] is not None]
    worst = min(range(len(cases)), key=lambda i: (cases[i]["margin"] is not None, cases[i]["margin"] or 0.0))
    summary = {}
    if suite == "penrose":
        summary["strict_count"] = sum(bool(c.get("strict")) for c in cases)
    if suite == "geroch":
        orders = [c["order"] for c in cases if "order" in c]
        summary["order_range"] = [min(orders), max(orders)] if orders else None
    if suite == "pmt":
        control = adm_mass(make_schwarzschild(-1.0, RadialGrid(**PMT_GRID)), order=2)
        summary["negative_mass_control"] = {"m": -1.0, "adm": control.mass, "adm_error": control.error}
    config = {"suite": suite, "n": n, "seed": seed, "amplitude": amplitude, "tolerances": tol}
    return SuiteReport(
        suite,
        n,
        n_pass,
        n - n_pass,
        min(margins) if margins else None,
        cases[worst]["value"],
        cases,
        config,
        summary=summary,
        wall_time=wall,
    )
