"""Quasi-spherical extensions of round boundary data and the resulting quasi-local mass bounds.

With zero shift the quasi-spherical metric ``u^2 dr^2 + r^2 dOmega^2`` has
prescribed scalar curvature R exactly when

    r du/dr = (u^2/2) Lap u + (u - u^3)/2 + r^2 u^3 R / 4,

a forward parabolic equation on the sphere with r playing the role of time.
The radial solver integrates the symmetric reduction in ``w = u^-2``, which
is linear and stays regular at horizon boundary data (``H = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import Radau, solve_ivp

from .errors import (
    AllStrategiesFailed,
    GaugeBreakdown,
    NumericalFailure,
    Overflow,
    ResidualExceeded,
    StepSizeUnderflow,
)
from .geometry import QSGridMetric, RadialMetric, qs_scalar_curvature, qs_scalar_curvature_formula
from .grids import RadialGrid, SphereGrid
from .masses import MassEstimate, extrapolate_inverse_r

OVERFLOW_U = 1e8
HORIZON_OFFSET = 1e-6
TOL_R = 1e-4


@dataclass(frozen=True)
class BoundaryData:
    """Round boundary sphere of area radius ``r`` with mean curvature ``H``.

    ``H`` is either a constant or a field sampled on ``sgrid``.
    """

    r: float
    H: Union[float, np.ndarray]
    sgrid: Optional[SphereGrid] = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("boundary area radius must be positive")
        if np.ndim(self.H) == 0:
            object.__setattr__(self, "H", float(self.H))
        else:
            H = np.array(self.H, dtype=float)
            if self.sgrid is None or H.shape != (self.sgrid.size,):
                raise ValueError("a mean-curvature field needs a matching sgrid")
            H.flags.writeable = False
            object.__setattr__(self, "H", H)
        if np.min(self.H) < 0:
            raise ValueError("boundary mean curvature must be non-negative")

    @property
    def is_constant(self) -> bool:
        return np.ndim(self.H) == 0 or bool(np.ptp(self.H) == 0)

    @property
    def H_min(self) -> float:
        return float(np.min(self.H))

    @property
    def H_const(self) -> float:
        if not self.is_constant:
            raise ValueError("boundary mean curvature is not constant")
        return float(np.ravel(self.H)[0])

    @classmethod
    def from_u(cls, r: float, u0, sgrid: Optional[SphereGrid] = None) -> "BoundaryData":
        """Boundary data whose quasi-spherical lapse at ``r`` is ``u0``."""
        return cls(r, 2.0 / (np.asarray(u0, dtype=float) * r), sgrid)


@dataclass
class ExtensionResult:
    metric: Union[RadialMetric, QSGridMetric]
    adm: float
    adm_error: float
    horizon_formed: bool
    final_r: float
    strategy: str
    min_scalar_curvature: float = 0.0
    residual: Optional[float] = None
    residual_profile: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return not self.horizon_formed and self.min_scalar_curvature >= -1e-6


def theorem5_bound(bd: BoundaryData) -> float:
    """Upper bound ``(r/2)(1 - (r^2/4) min H^2)`` for the quasi-local mass of round data."""
    return 0.5 * bd.r * (1.0 - 0.25 * bd.r**2 * bd.H_min**2)


def _extension_grid(r0: float, r_max: float, n: int, horizon: bool) -> RadialGrid:
    start = r0 * (1.0 + HORIZON_OFFSET) if horizon else r0
    return RadialGrid(start, r_max, n, "geometric")


def _adm_from_masses(r, m) -> MassEstimate:
    """Extrapolate Misner-Sharp/Hawking masses at the outer quarter of the grid."""
    targets = np.geomspace(r[-1] / 8.0, r[-1], 4)
    idx = np.unique(np.clip(np.searchsorted(r, targets), 0, len(r) - 1))
    if idx.size < 3:
        idx = np.arange(len(r) - 3, len(r))
    return extrapolate_inverse_r(r[idx], m[idx], method="Misner-Sharp extrapolation")


def qs_solve_radial(
    bd: BoundaryData,
    r_max: float = 400.0,
    source: Optional[Callable] = None,
    n: int = 2048,
    rtol: float = 1e-12,
) -> ExtensionResult:
    """Spherically symmetric quasi-spherical extension with scalar curvature ``source`` (default 0).

    Integrates ``w' = (1 - w)/r - r R / 2`` for ``w = u^-2 = (H r/2)^2`` with
    an adaptive Runge-Kutta 4(5) scheme.  If u passes the overflow guard a
    horizon has formed: the partial extension is returned flagged.
    """
    H0 = bd.H_const
    if H0 < 0:
        raise GaugeBreakdown("boundary mean curvature must be non-negative")
    r0 = bd.r
    if not r_max > r0:
        raise ValueError("r_max must exceed the boundary radius")
    rho = source if source is not None else (lambda r: 0.0)
    w0 = (0.5 * H0 * r0) ** 2
    horizon_boundary = w0 == 0.0  # also catches H so small that w0 underflows

    def rhs(r, w):
        return (1.0 - w) / r - 0.5 * r * rho(r)

    def overflow(r, w):
        return w[0] - OVERFLOW_U**-2

    overflow.terminal = True
    overflow.direction = -1

    grid = _extension_grid(r0, r_max, n, horizon_boundary)
    r_nodes = grid.nodes
    sol = solve_ivp(
        rhs, (r0, r_max), [w0], method="RK45", rtol=rtol, atol=1e-14,
        dense_output=True, events=None if horizon_boundary else overflow,
    )
    if not sol.success:
        raise NumericalFailure(f"radial QS integration failed: {sol.message}")
    horizon_formed = sol.status == 1
    final_r = float(sol.t[-1])
    if horizon_formed:
        keep = r_nodes < final_r
        if keep.sum() < 16:
            raise Overflow(f"horizon formed at r = {final_r:.6g} just outside the boundary")
        grid = RadialGrid(grid.r_min, float(r_nodes[keep][-1]), int(keep.sum()), "geometric")
        r_nodes = grid.nodes
    w = sol.sol(r_nodes)[0]
    w[0] = (1.0 - r0 / r_nodes[0]) if horizon_boundary and w[0] <= 0 else w[0]
    if np.any(w <= 0):
        raise Overflow("u is not finite on the extension grid")
    u = w**-0.5
    R = np.array([rho(x) for x in r_nodes], dtype=float) if source is not None else np.zeros_like(r_nodes)
    du = (u - u**3) / (2.0 * r_nodes) + r_nodes * u**3 * R / 4.0
    metric = RadialMetric(grid, u, du)
    m = metric.misner_sharp()
    if horizon_formed:
        est = MassEstimate(float("inf"), float("inf"), (), ())
    else:
        est = _adm_from_masses(r_nodes, m)
    notes = []
    if horizon_boundary:
        notes.append(f"horizon boundary: grid starts at r0*(1+{HORIZON_OFFSET:g})")
    return ExtensionResult(
        metric, est.mass, est.error, horizon_formed, final_r, "radial",
        min_scalar_curvature=float(np.min(R)) if R.size else 0.0, notes=notes,
    )


# -- PDE flow ------------------------------------------------------------------


class _QSSystem:
    """Right-hand side of the zero-shift QS equation in harmonic coefficients, with s = log r."""

    def __init__(self, sgrid: SphereGrid):
        self.sgrid = sgrid
        self.Y = sgrid.Y
        self.WY = sgrid.weights[:, None] * sgrid.Y
        self.lam = sgrid.eigenvalues

    def fun(self, s, c):
        u = self.Y @ c
        lap = self.Y @ (self.lam * c)
        f = 0.5 * u**2 * lap + 0.5 * (u - u**3)
        return self.WY.T @ f

    def jac(self, s, c):
        u = self.Y @ c
        lap = self.Y @ (self.lam * c)
        diag = u * lap + 0.5 * (1.0 - 3.0 * u**2)
        J = self.WY.T @ (diag[:, None] * self.Y + (0.5 * u**2)[:, None] * (self.Y * self.lam))
        return J


def qs_residual_at(u_prev, u_mid, u_next, r_prev, r_mid, r_next, sgrid: SphereGrid) -> float:
    """Max |R| at the middle radius from a 3-point nonuniform radial stencil."""
    h1, h2 = r_mid - r_prev, r_next - r_mid
    u_r = (-h2 / (h1 * (h1 + h2))) * u_prev + ((h2 - h1) / (h1 * h2)) * u_mid + (h1 / (h2 * (h1 + h2))) * u_next
    u_t, u_tt, _, u_pp = sgrid.angular_derivatives(u_mid)
    R = qs_scalar_curvature_formula(r_mid, np.sin(sgrid.theta), np.cos(sgrid.theta), u_mid, u_r, u_t, u_tt, u_pp)
    return float(np.max(np.abs(R)))


def qs_solve_pde(
    bd: BoundaryData,
    r_max: float = 100.0,
    n_r: int = 640,
    sgrid: Optional[SphereGrid] = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    tol_R: float = TOL_R,
    min_step: float = 1e-12,
) -> ExtensionResult:
    """Quasi-spherical extension of a mean-curvature field by the method of lines.

    The angular Laplacian is applied spectrally through the quadrature grid's
    harmonic transform; radial stepping uses the implicit Radau IIA scheme.
    Every newly completed radial node is checked with the finite-difference
    scalar curvature of the accumulated metric; exceeding ``tol_R`` aborts.
    """
    if bd.sgrid is None and not bd.is_constant:
        raise ValueError("non-constant boundary data needs an sgrid")
    sgrid = sgrid or bd.sgrid or SphereGrid(8)
    H = np.broadcast_to(np.asarray(bd.H, dtype=float), (sgrid.size,))
    if np.min(H) <= 0:
        raise GaugeBreakdown("quasi-spherical flow needs H > 0 on the initial sphere")
    r0 = bd.r
    rgrid = RadialGrid(r0, r_max, n_r, "geometric")
    r_nodes = rgrid.nodes
    s_nodes = np.log(r_nodes)
    system = _QSSystem(sgrid)
    u0 = 2.0 / (H * r0)
    c0 = sgrid.analyze(u0)
    u_start = sgrid.synthesize(c0)

    stepper = Radau(system.fun, s_nodes[0], c0, s_nodes[-1], rtol=rtol, atol=atol, jac=system.jac)
    U = np.empty((n_r, sgrid.size))
    U[0] = u_start
    filled = 1
    residuals = np.zeros(n_r)
    horizon_formed = False
    final_r = r_max
    while filled < n_r:
        message = stepper.step()
        if stepper.status == "failed":
            raise StepSizeUnderflow(f"QS flow stalled at r = {np.exp(stepper.t):.6g}: {message}")
        if stepper.step_size is not None and stepper.step_size < min_step and stepper.status == "running":
            raise StepSizeUnderflow(f"step size {stepper.step_size:.3g} below {min_step:g}")
        dense = stepper.dense_output()
        while filled < n_r and s_nodes[filled] <= stepper.t + 1e-14:
            U[filled] = sgrid.synthesize(dense(s_nodes[filled]))
            if not np.all(np.isfinite(U[filled])) or np.min(U[filled]) <= 0:
                raise GaugeBreakdown(f"u lost positivity near r = {r_nodes[filled]:.6g}")
            if np.max(U[filled]) > OVERFLOW_U:
                horizon_formed = True
                final_r = float(r_nodes[filled])
                break
            if filled >= 2:
                i = filled - 1
                res = qs_residual_at(U[i - 1], U[i], U[i + 1], r_nodes[i - 1], r_nodes[i], r_nodes[i + 1], sgrid)
                residuals[i] = res
                if res > tol_R:
                    raise ResidualExceeded(f"FD scalar curvature {res:.3e} > {tol_R:g} at r = {r_nodes[i]:.6g}")
            filled += 1
        if horizon_formed:
            break
    if horizon_formed:
        rgrid = RadialGrid(r0, float(r_nodes[filled - 1]), filled, "geometric")
        U = U[:filled]
    metric = QSGridMetric(rgrid, sgrid, U)
    R = qs_scalar_curvature(metric)
    profile = np.max(np.abs(R), axis=1)
    if np.max(profile) > tol_R:
        raise ResidualExceeded(f"FD scalar curvature {np.max(profile):.3e} > {tol_R:g} at the grid edge")
    m = metric.hawking_masses()
    if horizon_formed:
        est = MassEstimate(float("inf"), float("inf"), (), ())
    else:
        est = _adm_from_masses(metric.r, m)
    return ExtensionResult(
        metric, est.mass, est.error, horizon_formed, final_r, "pde",
        # R = 0 is prescribed; the FD value is truncation error, bounded by the gate
        min_scalar_curvature=0.0, residual=float(np.max(profile)), residual_profile=profile,
    )


@dataclass
class BartnikBound:
    mass: float
    error: float
    strategy: str
    results: dict
    failures: dict

    @property
    def flagged(self) -> list:
        return sorted(self.failures)


STRATEGIES = ("radial", "pde")


def bartnik_upper_bound(bd: BoundaryData, strategies: Sequence[str] = STRATEGIES, **options) -> BartnikBound:
    """Minimum ADM mass over the constructed admissible extensions.

    Strategies that fail, or whose extension forms a horizon, are recorded in
    ``failures`` and excluded.  ``options`` may hold per-strategy keyword
    dictionaries under the keys ``radial`` and ``pde``.
    """
    results, failures = {}, {}
    for name in strategies:
        kwargs = dict(options.get(name, {}))
        try:
            if name == "radial":
                if not bd.is_constant:
                    failures[name] = "radial strategy needs constant H"
                    continue
                res = qs_solve_radial(bd, **kwargs)
            elif name == "pde":
                res = qs_solve_pde(bd, **kwargs)
            else:
                raise ValueError(f"unknown strategy {name!r}")
        except NumericalFailure as exc:
            failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        if res.horizon_formed:
            failures[name] = f"horizon formed at r = {res.final_r:.6g} (inadmissible)"
            continue
        if not res.admissible:
            failures[name] = f"negative scalar curvature {res.min_scalar_curvature:.3g}"
            continue
        results[name] = res
    if not results:
        raise AllStrategiesFailed("no strategy produced an admissible extension", failures)
    best = min(results, key=lambda k: results[k].adm)
    return BartnikBound(results[best].adm, results[best].adm_error, best, results, failures)
