"""Mass functionals: ADM (surface integral plus extrapolation), Hawking, Misner-Sharp, horizon."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import InsufficientDecay, NonConvergent, NonPositiveArea
from .geometry import (
    ConformalMetric,
    QSGridMetric,
    RadialMetric,
    area_radius,
    mean_curvature_sphere,
    sphere_area,
)

FIT_RTOL = 1e-2
DECAY_LIMIT = 0.5


@dataclass(frozen=True)
class MassEstimate:
    """An extrapolated mass with its error estimate and the finite-radius data behind it."""

    mass: float
    error: float
    radii: tuple
    values: tuple
    order: int = 1
    method: str = ""

    def __float__(self):
        return self.mass


def default_radii(r_max: float, count: int = 4) -> list:
    """``count`` geometrically spaced radii from ``r_max/8`` to ``r_max``."""
    return list(np.geomspace(r_max / 8.0, r_max, count))


def extrapolate_inverse_r(radii, values, order: int = 1, rtol: float = FIT_RTOL, method: str = "") -> MassEstimate:
    """Least-squares fit ``a + b/r (+ c/r^2 ...)``; returns ``a`` with ``|b|/r_max`` as error."""
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.size < max(3, order + 1):
        raise ValueError(f"need at least {max(3, order + 1)} radii for an order-{order} fit")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing")
    X = np.vander(1.0 / r, order + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    resid = v - X @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    if rms > rtol * scale and rms > 1e-12:
        raise NonConvergent(f"1/r fit residual {rms:.3e} exceeds {rtol:g} x {scale:.3e}")
    a = float(coef[0])
    err = max(abs(float(coef[1])) / r[-1], rms, np.finfo(float).eps * max(abs(a), 1.0))
    return MassEstimate(a, err, tuple(r.tolist()), tuple(v.tolist()), order, method)


def isotropic_radius(metric: RadialMetric):
    """Spline of the isotropic radius ``rho(r)`` with ``u dr = phi^2 d rho``, ``r = phi^2 rho``.

    Normalized at ``r_max`` by the Schwarzschild relation for the Misner-Sharp
    mass there, which is exact when the exterior of the grid is vacuum.
    """
    r, u = metric.r, metric.u
    integrand = u / r
    if metric.du is not None:
        spline = CubicHermiteSpline(r, integrand, metric.du / r - u / r**2)
    else:
        spline = CubicSpline(r, integrand)
    prim = spline.antiderivative()
    R = r[-1]
    m_end = 0.5 * R * (1.0 - u[-1] ** -2)
    rho_end = 0.5 * ((R - m_end) + np.sqrt(R * R - 2.0 * m_end * R))
    log_rho_end = np.log(rho_end)
    R_prim = prim(R)
    return lambda x: np.exp(log_rho_end - (R_prim - prim(x)))


def adm_surface_integral(metric: Union[RadialMetric, ConformalMetric], radii) -> np.ndarray:
    """ADM flux integral ``(1/16 pi) oint (d_i g_ij - d_j g_ii) dS_j`` on coordinate spheres.

    For a conformally flat metric the integrand reduces to ``-8 phi^3 d_j phi``,
    giving ``-2 rho^2 phi^3 phi'``.  Radial metrics are first moved to
    isotropic coordinates, where the same value is ``(r^2/rho)(u-1)/u``.
    """
    x = np.asarray(radii, dtype=float)
    if isinstance(metric, ConformalMetric):
        if not metric.grid.contains(x):
            raise ValueError("radii must lie inside the grid")
        phi, dphi = metric.phi_at(x), metric.dphi_at(x)
        return -2.0 * x**2 * phi**3 * dphi
    if isinstance(metric, RadialMetric):
        if not metric.grid.contains(x):
            raise ValueError("radii must lie inside the grid")
        if metric.closed_form is not None and metric.closed_form.kind == "flat":
            return np.zeros_like(x)
        rho = isotropic_radius(metric)(x)
        u = metric.u_at(x)
        return (x**2 / rho) * (u - 1.0) / u
    raise TypeError(f"ADM mass is not implemented for {type(metric).__name__}")


def _decay_check(metric, r_last: float):
    if isinstance(metric, RadialMetric):
        dev = abs(float(metric.u_at(r_last)) ** 2 - 1.0)
    else:
        dev = abs(float(metric.phi_at(r_last)) ** 4 - 1.0)
    if dev >= DECAY_LIMIT:
        raise InsufficientDecay(f"|g - delta| = {dev:.3g} at r = {r_last}; metric is not near-flat")


def adm_mass(
    metric: Union[RadialMetric, ConformalMetric],
    radii: Optional[Sequence[float]] = None,
    order: int = 1,
    rtol: float = FIT_RTOL,
) -> MassEstimate:
    """ADM mass from surface integrals at finite radii, extrapolated in 1/r."""
    if radii is None:
        radii = default_radii(metric.grid.r_max)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("adm_mass needs at least 3 radii")
    _decay_check(metric, radii[-1])
    values = adm_surface_integral(metric, radii)
    method = "isotropic flux" if isinstance(metric, RadialMetric) else "conformal flux"
    return extrapolate_inverse_r(radii, values, order, rtol, method=f"{method}, a+b/r fit order {order}")


def hawking_mass(metric, r: float) -> float:
    """``sqrt(|S|/16 pi) (1 - (1/16 pi) oint H^2)`` for the coordinate sphere at ``r``."""
    area = sphere_area(metric, r)
    if isinstance(metric, QSGridMetric):
        H = mean_curvature_sphere(metric, r)
        willmore = r**2 * metric.sgrid.integrate(H**2)
    else:
        H = mean_curvature_sphere(metric, r)
        willmore = H**2 * area
    return float(np.sqrt(area / (16.0 * np.pi)) * (1.0 - willmore / (16.0 * np.pi)))


def misner_sharp_mass(metric: RadialMetric, r) -> float:
    """Spherical mass ``(r/2)(1 - u^-2)``."""
    u = metric.u_at(r)
    return (0.5 * np.asarray(r) * (1.0 - u**-2))[()]


def horizon_mass(area: float) -> float:
    if not area > 0:
        raise NonPositiveArea(f"area must be positive, got {area}")
    return float(np.sqrt(area / (16.0 * np.pi)))


def herzlich_condition(metric, r: float) -> bool:
    """True iff ``max H <= 2 / r_area`` (diagnostic only)."""
    H = mean_curvature_sphere(metric, r)
    return bool(np.max(H) <= 2.0 / area_radius(sphere_area(metric, r)) + 1e-12)


@dataclass
class MassReport:
    adm: float
    adm_error: float
    radii: list
    adm_finite: list
    hawking: list
    misner_sharp: Optional[list]
    horizon: Optional[float] = None
    method: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list:
        """One row per evaluation radius, for CSV output."""
        ms = self.misner_sharp or [None] * len(self.radii)
        return [
            {"r": r, "adm_finite": a, "hawking": h, "misner_sharp": m}
            for r, a, h, m in zip(self.radii, self.adm_finite, self.hawking, ms)
        ]


def mass_report(
    metric, radii=None, order: int = 1, horizon_area: Optional[float] = None, rtol: float = FIT_RTOL
) -> MassReport:
    est = adm_mass(metric, radii, order, rtol)
    radii = list(est.radii)
    hawking = [hawking_mass(metric, r) for r in radii]
    ms = [float(misner_sharp_mass(metric, r)) for r in radii] if isinstance(metric, RadialMetric) else None
    horizon = None if horizon_area is None else horizon_mass(horizon_area)
    return MassReport(est.mass, est.error, radii, list(est.values), hawking, ms, horizon, est.method)
