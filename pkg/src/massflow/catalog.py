"""Metric fixtures with known mass and scalar curvature.

Sourced metrics prescribe ``R(r) = rho(r) >= 0`` as a sum of Gaussian bumps
``A exp(-((r - c)/w)^2)`` and integrate the radial scalar-curvature equation.
Because ``d m_MS/dr = r^2 R / 4`` is linear, the enclosed mass (and so u) is
available in closed form through error functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import erf

from .errors import BadGrid, HorizonInsideGrid, RejectionLimitExceeded
from .geometry import ClosedForm, ConformalMetric, RadialMetric
from .grids import RadialGrid

MAX_DRAWS = 100
HORIZON_MARGIN = 0.98


@dataclass(frozen=True)
class MetricSpec:
    """Serializable description of a catalog metric."""

    kind: str  # flat | schwarzschild | isotropic_schwarzschild | sourced
    m: float = 0.0
    seed: Optional[int] = None
    amplitude: float = 0.05
    r_min: float = 1.0
    r_max: float = 400.0
    n: int = 4096
    spacing: str = "uniform"

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid(self.r_min, self.r_max, self.n, self.spacing)

    def build(self):
        kind = self.kind
        if kind == "flat":
            return make_flat(self.grid)
        if kind == "schwarzschild":
            return make_schwarzschild(self.m, self.grid)
        if kind == "isotropic_schwarzschild":
            return make_isotropic_schwarzschild(self.m, self.grid)
        if kind == "sourced":
            if self.seed is None:
                raise ValueError("sourced metrics need a seed")
            return sample_nonneg_scalar_metric(self.seed, self.grid, self.amplitude)
        raise ValueError(f"unknown metric kind {kind!r}")


@dataclass(frozen=True)
class GaussianSource:
    """Scalar-curvature profile ``sum_k A_k exp(-((r - c_k)/w_k)^2)``."""

    amplitudes: tuple
    centers: tuple
    widths: tuple

    def __post_init__(self):
        if not (len(self.amplitudes) == len(self.centers) == len(self.widths)):
            raise ValueError("amplitudes, centers and widths must have equal length")
        if any(a < 0 for a in self.amplitudes) or any(w <= 0 for w in self.widths):
            raise ValueError("amplitudes must be non-negative and widths positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for A, c, w in zip(self.amplitudes, self.centers, self.widths):
            out = out + A * np.exp(-(((r - c) / w) ** 2))
        return out

    def moment2(self, r):
        """Antiderivative of ``s^2 rho(s)`` (defined up to a constant)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        sqpi = np.sqrt(np.pi)
        for A, c, w in zip(self.amplitudes, self.centers, self.widths):
            t = (r - c) / w
            e = np.exp(-(t**2))
            i0 = 0.5 * sqpi * erf(t)
            i1 = -0.5 * e
            i2 = 0.25 * sqpi * erf(t) - 0.5 * t * e
            out = out + A * w * (c * c * i0 + 2.0 * c * w * i1 + w * w * i2)
        return out

    def enclosed_mass(self, r, r0: float):
        """``(1/4) int_{r0}^{r} s^2 rho(s) ds``."""
        return 0.25 * (self.moment2(r) - self.moment2(r0))


def make_flat(grid: RadialGrid) -> RadialMetric:
    return RadialMetric(grid, np.ones(grid.n), np.zeros(grid.n), ClosedForm("flat"))


def make_schwarzschild(m: float, grid: RadialGrid) -> RadialMetric:
    """Spatial Schwarzschild slice in areal coordinates; negative m is allowed."""
    if m == 0:
        return make_flat(grid)
    if not grid.r_min > max(0.0, 2.0 * m):
        raise HorizonInsideGrid(f"r_min={grid.r_min} must exceed 2m={2 * m}")
    r = grid.nodes
    w = 1.0 - 2.0 * m / r
    return RadialMetric(grid, w**-0.5, -(m / r**2) * w**-1.5, ClosedForm("schwarzschild", float(m)))


def make_isotropic_schwarzschild(m: float, grid: RadialGrid) -> ConformalMetric:
    """Schwarzschild in isotropic form, ``phi = 1 + m/(2 rho)``, horizon at ``rho = m/2``."""
    if not m > 0:
        raise BadGrid("isotropic Schwarzschild fixture needs m > 0")
    if not grid.r_min < m / 2 < grid.r_max:
        raise BadGrid("the grid must contain the minimal sphere rho = m/2")
    rho = grid.nodes
    return ConformalMetric(
        grid,
        1.0 + m / (2.0 * rho),
        -m / (2.0 * rho**2),
        m / rho**3,
        ClosedForm("isotropic_schwarzschild", float(m)),
    )


def sourced_metric(grid: RadialGrid, source: GaussianSource, m0: float = 0.0) -> RadialMetric:
    """Metric with scalar curvature ``source`` and Misner-Sharp mass ``m0`` at ``r_min``.

    Raises ValueError if the enclosed mass reaches ``r/2`` somewhere on the grid.
    """
    r = grid.nodes
    m = m0 + source.enclosed_mass(r, grid.r_min)
    w = 1.0 - 2.0 * m / r
    if np.any(w <= 0):
        raise ValueError("source forms a horizon inside the grid")
    u = w**-0.5
    du = (u - u**3) / (2.0 * r) + r * u**3 * source(r) / 4.0
    return RadialMetric(grid, u, du)


def draw_source(rng: np.random.Generator, grid: RadialGrid, amplitude: float) -> GaussianSource:
    """Random bumps placed near the inner edge so the exterior is numerically vacuum."""
    k = int(rng.integers(1, 6))
    scale = grid.r_min
    centers = grid.r_min + scale * rng.uniform(0.5, 4.0, size=k)
    widths = scale * rng.uniform(0.2, 0.8, size=k)
    amps = amplitude * rng.uniform(0.2, 1.0, size=k)
    return GaussianSource(tuple(amps), tuple(centers), tuple(widths))


def sample_nonneg_scalar_source(seed: int, grid: RadialGrid, amplitude: float = 0.05) -> GaussianSource:
    """The source behind :func:`sample_nonneg_scalar_metric`, for rebuilding on other grids."""
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    r = grid.nodes
    for _ in range(MAX_DRAWS):
        source = draw_source(rng, grid, amplitude)
        m = source.enclosed_mass(r, grid.r_min)
        if np.all(2.0 * m < HORIZON_MARGIN * r):
            return source
    raise RejectionLimitExceeded(f"no admissible draw in {MAX_DRAWS} attempts (seed={seed})")


def sample_nonneg_scalar_metric(seed: int, grid: RadialGrid, amplitude: float = 0.05) -> RadialMetric:
    """Deterministic random metric with ``R >= 0`` and ``2 m_MS / r < 0.98`` everywhere."""
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if amplitude == 0:
        return make_flat(grid)
    return sourced_metric(grid, sample_nonneg_scalar_source(seed, grid, amplitude))


# -- perturbed horizons ------------------------------------------------------


@dataclass(frozen=True)
class Shell:
    """Non-negative density ``A ((s-a)(b-s))^2 / ((b-a)/2)^4`` on ``[a, b]`` (peak value A)."""

    amplitude: float
    inner: float
    outer: float

    @property
    def poly(self) -> Polynomial:
        a, b = self.inner, self.outer
        q = Polynomial([-a, 1.0]) * Polynomial([b, -1.0])
        return self.amplitude * q**2 / ((b - a) / 2.0) ** 4


def _shell_potential(shells, rho):
    """Potential psi with Lap psi = -nu, psi -> 0 at infinity, plus psi' and psi''."""
    rho = np.asarray(rho, dtype=float)
    psi = np.zeros_like(rho)
    dpsi = np.zeros_like(rho)
    nu = np.zeros_like(rho)
    x = Polynomial([0.0, 1.0])
    for sh in shells:
        p = sh.poly
        a, b = sh.inner, sh.outer
        I2 = (p * x**2).integ(lbnd=a)
        I1 = (p * x).integ(lbnd=a)
        c = np.clip(rho, a, b)
        inner_mass = I2(c)
        psi = psi + inner_mass / rho + (I1(b) - I1(c))
        dpsi = dpsi - inner_mass / rho**2
        nu = nu + np.where((rho > a) & (rho < b), p(rho), 0.0)
    d2psi = -nu - 2.0 * dpsi / rho
    return psi, dpsi, d2psi


def shell_mass(shells) -> float:
    x = Polynomial([0.0, 1.0])
    return float(sum((sh.poly * x**2).integ(lbnd=sh.inner)(sh.outer) for sh in shells))


def penrose_margin_exact(m: float, shells) -> float:
    """Analytic ``m_ADM - sqrt(A/16 pi)`` for isotropic Schwarzschild plus shells outside the horizon."""
    x = Polynomial([0.0, 1.0])
    return float(sum((sh.poly * x * (2.0 * x - m)).integ(lbnd=sh.inner)(sh.outer) for sh in shells))


def make_perturbed_isotropic(m: float, grid: RadialGrid, shells) -> ConformalMetric:
    """``phi = 1 + m/(2 rho) + psi`` with a superharmonic ``psi`` sourced by shells (so ``R >= 0``)."""
    if not m > 0:
        raise BadGrid("perturbed horizon fixture needs m > 0")
    if any(sh.inner <= m / 2 for sh in shells):
        raise ValueError("shells must lie outside the unperturbed horizon rho = m/2")
    rho = grid.nodes
    psi, dpsi, d2psi = _shell_potential(shells, rho)
    return ConformalMetric(
        grid,
        1.0 + m / (2.0 * rho) + psi,
        -m / (2.0 * rho**2) + dpsi,
        m / rho**3 + d2psi,
    )


def draw_shell(rng: np.random.Generator, m: float = 1.0) -> Shell:
    inner = m * rng.uniform(0.8, 3.0)
    outer = inner + m * rng.uniform(0.5, 3.0)
    return Shell(float(rng.uniform(1e-3, 1e-2)), float(inner), float(outer))


def sample_perturbed_horizon(seed: int, grid: RadialGrid, m: float = 1.0) -> tuple:
    """Random perturbed horizon fixture; returns ``(metric, shells)``."""
    rng = np.random.default_rng(seed)
    shells = tuple(draw_shell(rng, m) for _ in range(int(rng.integers(1, 4))))
    return make_perturbed_isotropic(m, grid, shells), shells
