"""Metric representations and curvature of spherically symmetric and quasi-spherical 3-metrics.

Three metric families are supported:

* :class:`RadialMetric`  ``g = u(r)^2 dr^2 + r^2 dOmega^2`` (areal radius ``r``),
* :class:`ConformalMetric`  ``g = phi(rho)^4 (d rho^2 + rho^2 dOmega^2)``,
* :class:`QSGridMetric`  ``g = u(r,theta,phi)^2 dr^2 + r^2 dOmega^2`` (zero shift).

Mean curvatures are positive for round spheres in flat space (``H = 2/r``).
With that sign the second-variation identity holds in the form
``R = -2 u^-1 dH/dr - |II|^2 - H^2 + 2K - 2 u^-1 Lap u``, i.e. the normal
derivative term is taken along the inward unit normal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import (
    BadGrid,
    GridTooCoarse,
    NonPositiveArea,
    NonPositiveMeanCurvature,
    NonPositiveU,
    PerturbationTooLarge,
)
from .grids import RadialGrid, SphereGrid, derivative, derivatives


class ClosedForm(NamedTuple):
    kind: str  # "flat" | "schwarzschild" | "isotropic_schwarzschild"
    m: float = 0.0


def _as_profile(values, grid: RadialGrid, name: str) -> np.ndarray:
    a = np.array(values, dtype=float)
    if a.shape != (grid.n,):
        raise ValueError(f"{name} must have shape ({grid.n},), got {a.shape}")
    a.flags.writeable = False
    return a


def _hermite_or_spline(x, y, dy):
    if dy is not None:
        return CubicHermiteSpline(x, y, dy)
    return CubicSpline(x, y)


@dataclass(frozen=True, eq=False)
class RadialMetric:
    """Spherically symmetric metric ``u^2 dr^2 + r^2 dOmega^2`` sampled on a radial grid.

    ``du`` holds exact node derivatives when they are known (closed forms,
    ODE right-hand sides); otherwise derivatives come from the cubic
    interpolant of ``u``.
    """

    grid: RadialGrid
    u: np.ndarray
    du: Optional[np.ndarray] = None
    closed_form: Optional[ClosedForm] = None

    def __post_init__(self):
        u = _as_profile(self.u, self.grid, "u")
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise NonPositiveU("u must be finite and positive at every node")
        object.__setattr__(self, "u", u)
        if self.du is not None:
            object.__setattr__(self, "du", _as_profile(self.du, self.grid, "du"))
        cf = self.closed_form
        if cf is not None:
            if cf.kind == "schwarzschild":
                if not self.grid.r_min > 2.0 * cf.m:
                    raise BadGrid("schwarzschild closed form needs r_min > 2m")
                exact = (1.0 - 2.0 * cf.m / self.r) ** -0.5
                if np.max(np.abs(u / exact - 1.0)) > 1e-12:
                    raise ValueError("u does not match the schwarzschild closed form")
            elif cf.kind == "flat":
                if np.any(u != 1.0):
                    raise ValueError("u does not match the flat closed form")
            else:
                raise ValueError(f"unknown closed form for a radial metric: {cf.kind!r}")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def _interp(self):
        return _hermite_or_spline(self.r, self.u, self.du)

    def u_at(self, r):
        """u at arbitrary radii inside the grid (cubic interpolation)."""
        cf = self.closed_form
        if cf is not None:
            r = np.asarray(r, dtype=float)
            return np.ones_like(r) if cf.kind == "flat" else (1.0 - 2.0 * cf.m / r) ** -0.5
        return self._interp(r)

    def du_at(self, r):
        cf = self.closed_form
        if cf is not None:
            r = np.asarray(r, dtype=float)
            if cf.kind == "flat":
                return np.zeros_like(r)
            return -(cf.m / r**2) * (1.0 - 2.0 * cf.m / r) ** -1.5
        return self._interp(r, 1)

    @cached_property
    def du_nodes(self) -> np.ndarray:
        if self.du is not None:
            return self.du
        return self._interp(self.r, 1)

    def misner_sharp(self) -> np.ndarray:
        return 0.5 * self.r * (1.0 - self.u**-2)

    def scaled(self, k: float) -> "RadialMetric":
        """The same geometry with every length multiplied by ``k``."""
        g = RadialGrid(k * self.grid.r_min, k * self.grid.r_max, self.grid.n, self.grid.spacing)
        cf = None if self.closed_form is None else ClosedForm(self.closed_form.kind, k * self.closed_form.m)
        du = None if self.du is None else self.du / k
        return RadialMetric(g, self.u, du, cf)


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    """Conformally flat metric ``phi^4 delta`` with a radial conformal factor."""

    grid: RadialGrid
    phi: np.ndarray
    dphi: Optional[np.ndarray] = None
    d2phi: Optional[np.ndarray] = None
    closed_form: Optional[ClosedForm] = None

    def __post_init__(self):
        phi = _as_profile(self.phi, self.grid, "phi")
        if not np.all(np.isfinite(phi)) or np.any(phi <= 0):
            raise NonPositiveU("phi must be finite and positive at every node")
        if abs(phi[-1] - 1.0) >= 0.1:
            raise BadGrid(f"phi(rho_max) = {phi[-1]} is not within 0.1 of 1; extend the grid")
        object.__setattr__(self, "phi", phi)
        for name in ("dphi", "d2phi"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _as_profile(getattr(self, name), self.grid, name))

    @property
    def rho(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def _interp(self):
        return _hermite_or_spline(self.rho, self.phi, self.dphi)

    def phi_at(self, rho):
        cf = self.closed_form
        if cf is not None and cf.kind == "isotropic_schwarzschild":
            return 1.0 + cf.m / (2.0 * np.asarray(rho, dtype=float))
        return self._interp(rho)

    def dphi_at(self, rho):
        cf = self.closed_form
        if cf is not None and cf.kind == "isotropic_schwarzschild":
            return -cf.m / (2.0 * np.asarray(rho, dtype=float) ** 2)
        return self._interp(rho, 1)

    def area_radius_at(self, rho):
        return np.asarray(rho) * self.phi_at(rho) ** 2


@dataclass(frozen=True, eq=False)
class QSGridMetric:
    """Quasi-spherical metric with zero shift on a (radial x sphere) product grid.

    ``u`` has shape ``(rgrid.n, sgrid.size)``.
    """

    rgrid: RadialGrid
    sgrid: SphereGrid
    u: np.ndarray
    beta1: Optional[np.ndarray] = None
    beta2: Optional[np.ndarray] = None

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        shape = (self.rgrid.n, self.sgrid.size)
        if u.shape != shape:
            raise ValueError(f"u must have shape {shape}, got {u.shape}")
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise NonPositiveU("u must be finite and positive at every node")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if b is None:
                b = np.zeros(shape)
            b = np.asarray(b, dtype=float)
            if b.shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
            if np.any(b != 0):
                raise NotImplementedError("non-zero shift is not supported")
            object.__setattr__(self, name, b)

    @property
    def r(self) -> np.ndarray:
        return self.rgrid.nodes

    def hawking_masses(self) -> np.ndarray:
        """Hawking mass of every coordinate sphere, ``(r/2)(1 - <u^-2>)``."""
        return 0.5 * self.r * (1.0 - self.sgrid.mean(self.u**-2))


Metric = Union[RadialMetric, ConformalMetric, QSGridMetric]


@dataclass(frozen=True)
class FoliationFrame:
    """Extrinsic and intrinsic data of one leaf of the coordinate-sphere foliation."""

    r: float
    second_fundamental_form: np.ndarray  # (..., 2, 2) in the (theta, phi) coordinate basis
    H: np.ndarray
    K: float
    lapse: np.ndarray
    induced_metric: np.ndarray


def radial_scalar_curvature_formula(r, u, du):
    """R of ``u^2 dr^2 + r^2 dOmega^2`` from u and u'."""
    return 2.0 / r**2 * (1.0 - u**-2) + 4.0 * du / (r * u**3)


def areal_scalar_curvature_formula(A, dA, P, dP, d2P):
    """R of ``A(r) dr^2 + P(r)^2 dOmega^2`` in a general radial gauge."""
    return 2.0 / P**2 - 4.0 * d2P / (A * P) - 2.0 * dP**2 / (A * P**2) + 2.0 * dA * dP / (A**2 * P)


def qs_scalar_curvature_formula(r, sin_theta, cos_theta, u, u_r, u_t, u_tt, u_pp):
    """Coordinate scalar curvature of ``u(r,theta,phi)^2 dr^2 + r^2 dOmega^2``.

    Obtained from the Christoffel symbols of the diagonal metric; it contains
    only first radial derivatives and the angular derivatives of u.
    """
    ang = u_tt + (cos_theta / sin_theta) * u_t + u_pp / sin_theta**2
    return 2.0 / r**2 - 2.0 / (u**2 * r**2) + 4.0 * u_r / (r * u**3) - 2.0 * ang / (r**2 * u)


def scalar_curvature(metric: Metric, method: str = "closed", order: int = 2) -> np.ndarray:
    """Scalar curvature at every node.

    ``method="closed"`` uses exact node derivatives where the metric carries
    them (or the cubic interpolant otherwise); ``method="fd"`` differentiates
    the node values with finite differences of the given ``order``.  A
    :class:`QSGridMetric` always uses radial finite differences and spectral
    angular derivatives.
    """
    if method not in ("closed", "fd"):
        raise ValueError("method must be 'closed' or 'fd'")
    if isinstance(metric, RadialMetric):
        if metric.closed_form is not None and method == "closed":
            return np.zeros(metric.grid.n)
        du = metric.du_nodes if method == "closed" else derivative(metric.u, metric.grid, order)
        return radial_scalar_curvature_formula(metric.r, metric.u, du)
    if isinstance(metric, ConformalMetric):
        rho, phi = metric.rho, metric.phi
        cf = metric.closed_form
        if method == "closed" and cf is not None and cf.kind == "isotropic_schwarzschild":
            return np.zeros(metric.grid.n)
        if method == "closed" and metric.dphi is not None and metric.d2phi is not None:
            d1, d2 = metric.dphi, metric.d2phi
        elif method == "closed":
            d1, d2 = metric._interp(rho, 1), metric._interp(rho, 2)
        else:
            d1, d2 = derivatives(phi, metric.grid, order)
        lap = d2 + 2.0 * d1 / rho
        return -8.0 * phi**-5 * lap
    if isinstance(metric, QSGridMetric):
        return qs_scalar_curvature(metric, order=order)
    raise TypeError(f"unsupported metric type {type(metric).__name__}")


def qs_scalar_curvature(metric: QSGridMetric, order: int = 2) -> np.ndarray:
    """FD scalar curvature of a quasi-spherical grid metric, shape (n_r, n_sphere)."""
    if metric.rgrid.n < 4:
        raise GridTooCoarse("need at least 4 radial nodes")
    s = metric.sgrid
    u = metric.u
    u_r = derivative(u, metric.rgrid, order, axis=0)
    u_t, u_tt, _, u_pp = s.angular_derivatives(u)
    r = metric.r[:, None]
    return qs_scalar_curvature_formula(r, np.sin(s.theta), np.cos(s.theta), u, u_r, u_t, u_tt, u_pp)


def area_radius(area) -> float:
    if not np.all(np.asarray(area) > 0):
        raise NonPositiveArea(f"area must be positive, got {area}")
    return np.sqrt(np.asarray(area, dtype=float) / (4.0 * np.pi))[()]


def mean_curvature_sphere(metric: Metric, r: float):
    """Mean curvature of the coordinate sphere at radius ``r``.

    Returns a float for the symmetric metrics (H is constant on the sphere)
    and a per-node field for a :class:`QSGridMetric`.  Emits
    :class:`NonPositiveMeanCurvature` when ``min H <= 0``.
    """
    if isinstance(metric, RadialMetric):
        H = float(2.0 / (metric.u_at(r) * r))
    elif isinstance(metric, ConformalMetric):
        phi, dphi = metric.phi_at(r), metric.dphi_at(r)
        H = float(phi**-2 * (2.0 / r + 4.0 * dphi / phi))
    elif isinstance(metric, QSGridMetric):
        i = metric.rgrid.index_of(r)
        div_beta = 0.0
        H = (2.0 - div_beta) / (metric.u[i] * metric.r[i])
    else:
        raise TypeError(f"unsupported metric type {type(metric).__name__}")
    if np.min(H) <= 0:
        warnings.warn(f"mean curvature min H = {np.min(H)} <= 0 at r = {r}", NonPositiveMeanCurvature, stacklevel=2)
    return H


def sphere_area(metric: Metric, r: float) -> float:
    if isinstance(metric, ConformalMetric):
        return float(4.0 * np.pi * metric.area_radius_at(r) ** 2)
    return 4.0 * np.pi * r**2


def foliation_frame(metric: Union[RadialMetric, QSGridMetric], r: float) -> FoliationFrame:
    """Leaf data (II, H, K, lapse) of the coordinate sphere at radius ``r``."""
    if isinstance(metric, RadialMetric):
        lapse = np.asarray(metric.u_at(r), dtype=float)
        sin2 = None
    elif isinstance(metric, QSGridMetric):
        lapse = metric.u[metric.rgrid.index_of(r)]
        sin2 = np.sin(metric.sgrid.theta) ** 2
    else:
        raise TypeError("foliation frames need a radial or quasi-spherical metric")
    s2 = 1.0 if sin2 is None else sin2
    gamma = np.zeros(np.shape(lapse) + (2, 2))
    gamma[..., 0, 0] = r**2
    gamma[..., 1, 1] = r**2 * s2
    # II_ab = (1/2 lapse) d_r gamma_ab for a zero-shift foliation
    second = gamma / (r * np.asarray(lapse)[..., None, None])
    H = 2.0 / (lapse * r)
    return FoliationFrame(float(r), second, H, 1.0 / r**2, lapse, gamma)


def second_variation_terms(metric: RadialMetric, order: int = 2):
    """Per-node terms of the second-variation identity for the coordinate-sphere foliation.

    Returns ``(R, rhs)`` where ``R`` is the closed-form scalar curvature and
    ``rhs = 2 D_n H - |II|^2 - H^2 + 2K - 2 lapse^-1 Lap lapse`` with the
    radial derivative of the lapse taken by finite differences.
    """
    r, u = metric.r, metric.u
    R = scalar_curvature(metric, "closed")
    du_fd = derivative(u, metric.grid, order)
    H = 2.0 / (u * r)
    dH_dr = -H * (du_fd / u + 1.0 / r)
    Dn_H = -dH_dr / u
    II_sq = 0.5 * H**2
    K = 1.0 / r**2
    lap_lapse = 0.0  # lapse u is constant on each leaf
    rhs = 2.0 * Dn_H - II_sq - H**2 + 2.0 * K - 2.0 * lap_lapse / u
    return R, rhs


def second_variation_residual(metric: RadialMetric, r: float, order: int = 2) -> float:
    """R minus the second-variation expression at an interior node ``r``."""
    i = metric.grid.index_of(r)
    if i == 0 or i == metric.grid.n - 1:
        raise GridTooCoarse("second_variation_residual needs an interior node")
    R, rhs = second_variation_terms(metric, order)
    return float(R[i] - rhs[i])


def second_variation_residual_profile(metric: RadialMetric, order: int = 2) -> np.ndarray:
    R, rhs = second_variation_terms(metric, order)
    return R - rhs


def _check_perturbation(metric: RadialMetric, h_rr, h_sphere, scale: float = 1.0):
    if np.any(np.abs(scale * h_rr) >= 0.5 * metric.u**2) or np.any(np.abs(scale * h_sphere) >= 0.5):
        raise PerturbationTooLarge("perturbation is not small compared with the metric")


def linearized_scalar_curvature(metric: RadialMetric, h_rr, h_sphere, order: int = 2) -> np.ndarray:
    """DR(g)h = div div h - Lap tr h - Ric.h for ``h = h_rr dr^2 + h_sphere r^2 dOmega^2``."""
    grid, r, u = metric.grid, metric.r, metric.u
    a = _as_profile(h_rr, grid, "h_rr")
    hs = _as_profile(h_sphere, grid, "h_sphere")
    _check_perturbation(metric, a, hs)
    du = metric.du_nodes
    b = r**2 * hs  # h_thetatheta
    # divergence vector X^r = nabla_j h^{rj}, so u r^2 X^r = flux' + rest;
    # nested derivatives are expanded so the ends keep full order
    flux = r**2 * a / u**3
    rest = du * r**2 * a / u**4 - 2.0 * b / (u * r)
    divdiv = (derivatives(flux, grid, order)[1] + derivative(rest, grid, order)) / (u * r**2)
    tr = a / u**2 + 2.0 * hs
    d_tr, d2_tr = derivatives(tr, grid, order)
    lap_tr = (d2_tr + (2.0 / r - du / u) * d_tr) / u**2
    ric_rr = 2.0 * du / (u * r)
    ric_tt = 1.0 - u**-2 * (1.0 - r * du / u)
    ric_dot_h = ric_rr * a / u**4 + 2.0 * ric_tt * b / r**4
    return divdiv - lap_tr - ric_dot_h


def perturbed_scalar_curvature(metric: RadialMetric, h_rr, h_sphere, t: float, order: int = 2) -> np.ndarray:
    """R(g + t h) in the general radial gauge, derivatives by finite differences."""
    grid, r = metric.grid, metric.r
    a = _as_profile(h_rr, grid, "h_rr")
    hs = _as_profile(h_sphere, grid, "h_sphere")
    _check_perturbation(metric, a, hs, abs(t))
    A = metric.u**2 + t * a
    P = r * np.sqrt(1.0 + t * hs)
    dA = derivative(A, grid, order)
    dP, d2P = derivatives(P, grid, order)
    return areal_scalar_curvature_formula(A, dA, P, dP, d2P)
