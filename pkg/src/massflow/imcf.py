"""Round inverse mean curvature flow, Geroch monotonicity and Penrose checks.

In ``u^2 dr^2 + r^2 dOmega^2`` a coordinate sphere moving with normal speed
``1/H`` has ``dr/dt = 1/(H u)``, and with ``H = 2/(u r)`` this is ``r/2``.
The flow is still integrated numerically from H so that the exponential
area law is a real check on the mean-curvature code path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.optimize import bisect

from .errors import GaugeBreakdown, NoHorizon, NonPositiveMeanCurvature
from .geometry import ConformalMetric, RadialMetric, mean_curvature_sphere, scalar_curvature
from .masses import adm_mass, hawking_mass, horizon_mass, misner_sharp_mass

MONOTONE_TOL = 1e-6
PENROSE_TOL = 1e-6
EQUALITY_TOL = 1e-6
ROOT_XTOL = 1e-10


@dataclass(frozen=True)
class FlowTrace:
    t: np.ndarray
    r: np.ndarray
    area: np.ndarray
    H: np.ndarray
    m_H: np.ndarray
    stopped: str = ""  # "t_max" or "grid edge"

    COLUMNS = ("t", "r", "area", "H", "m_H")

    def rows(self) -> list:
        return [dict(zip(self.COLUMNS, vals)) for vals in zip(self.t, self.r, self.area, self.H, self.m_H)]

    def area_law_error(self) -> float:
        """max |area(t)/area(0) - e^t| / e^t."""
        e = np.exp(self.t)
        return float(np.max(np.abs(self.area / self.area[0] - e) / e))


def _H(metric: RadialMetric, r: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonPositiveMeanCurvature)
        return mean_curvature_sphere(metric, r)


def imcf_flow(metric: RadialMetric, r_start: float, t_max: float, n_out: int = 201, rtol: float = 1e-12) -> FlowTrace:
    """Flow the coordinate sphere at ``r_start`` by inverse mean curvature until ``t_max`` or the grid edge."""
    if not metric.grid.contains(r_start):
        raise ValueError(f"r_start={r_start} is outside the grid")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if _H(metric, r_start) <= 0:
        raise GaugeBreakdown(f"H <= 0 at r_start={r_start}")
    r_edge = metric.grid.r_max

    def speed(t, y):
        r = min(y[0], r_edge)
        H = _H(metric, r)
        if H <= 0:
            raise GaugeBreakdown(f"H <= 0 at r={r}; the round flow would jump")
        return [1.0 / (H * float(metric.u_at(r)))]

    def edge(t, y):
        return y[0] - r_edge

    edge.terminal = True
    edge.direction = 1
    t_eval = np.linspace(0.0, t_max, n_out)
    sol = solve_ivp(speed, (0.0, t_max), [r_start], method="DOP853", rtol=rtol, atol=0.0, t_eval=t_eval, events=edge)
    if sol.status == -1:
        raise GaugeBreakdown(f"flow integration failed: {sol.message}")
    t, r = sol.t, sol.y[0]
    stopped = "t_max"
    if sol.status == 1:
        t = np.append(t, sol.t_events[0][0])
        r = np.append(r, r_edge)
        stopped = "grid edge"
    H = np.array([_H(metric, x) for x in r])
    m_H = np.array([hawking_mass(metric, x) for x in r])
    return FlowTrace(t, r, 4.0 * np.pi * r**2, H, m_H, stopped)


def geroch_monotonicity_check(metric: RadialMetric) -> float:
    """Largest decrease rate ``max (-dm_H/dr)_+`` between neighbouring nodes."""
    m = metric.misner_sharp()
    slope = np.diff(m) / np.diff(metric.r)
    return float(max(0.0, np.max(-slope)))


def geroch_increment_error(metric: RadialMetric, R: Optional[np.ndarray] = None) -> float:
    """max |(m_H(r) - m_H(r_min)) - int (s^2/4) R ds| with trapezoid sums on the nodes.

    The integrand uses the closed-form curvature of the profile unless ``R``
    is given; the error is second order in the node spacing.
    """
    if R is None:
        R = scalar_curvature(metric)
    r = metric.r
    m = metric.misner_sharp()
    incr = cumulative_trapezoid(0.25 * r**2 * R, r, initial=0.0)
    return float(np.max(np.abs((m - m[0]) - incr)))


class MinimalSphere(NamedTuple):
    rho: float
    area_radius: float
    area: float


def _area_slope(metric: ConformalMetric, rho):
    """``phi + 2 rho phi'``; d(rho phi^2)/d rho has the sign of this."""
    return metric.phi_at(rho) + 2.0 * rho * metric.dphi_at(rho)


def find_minimal_spheres(metric: ConformalMetric) -> list:
    """Round minimal spheres, innermost first; the outermost horizon is the last entry."""
    rho = metric.rho
    if metric.dphi is not None:
        f = metric.phi + 2.0 * rho * metric.dphi
    else:
        f = _area_slope(metric, rho)
    out = []
    for i in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0):
        a, b = rho[i], rho[i + 1]
        if f[i] == 0.0:
            root = a
        elif f[i + 1] == 0.0:
            continue  # picked up as the left end of the next interval
        else:
            root = bisect(lambda x: float(_area_slope(metric, x)), a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        ar = float(metric.area_radius_at(root))
        out.append(MinimalSphere(float(root), ar, 4.0 * np.pi * ar * ar))
    return out


@dataclass(frozen=True)
class PenroseResult:
    margin: float
    adm: float
    adm_error: float
    horizon_mass: float
    horizon: MinimalSphere
    equality: bool

    @property
    def passed(self) -> bool:
        return self.margin >= -PENROSE_TOL


def penrose_check(metric: ConformalMetric, radii=None, order: int = 2) -> PenroseResult:
    """``m_ADM - sqrt(|S|/16 pi)`` for the outermost round minimal sphere S."""
    spheres = find_minimal_spheres(metric)
    if not spheres:
        raise NoHorizon("no minimal sphere in the grid")
    outer = spheres[-1]
    est = adm_mass(metric, radii, order)
    mh = horizon_mass(outer.area)
    margin = est.mass - mh
    return PenroseResult(margin, est.mass, est.error, mh, outer, abs(margin) <= EQUALITY_TOL)


def flow_identity_error(trace: FlowTrace, metric: RadialMetric) -> float:
    """max |m_H - m_MS| along a flow trace."""
    return float(np.max(np.abs(trace.m_H - misner_sharp_mass(metric, trace.r))))
