"""Static extensions in spherical symmetry.

The static equations ``Ric = V^-1 Hess V``, ``Lap V = 0`` are integrated
outward from the boundary sphere in the variables ``w = u^-2`` and ``V``:

    w' = 2(1 - w)/r - 2 C sqrt(w) / (r^2 V),     V' = C / (r^2 sqrt(w)),

where ``C = r^2 V'/u`` is the conserved flux of the harmonic function V.
These encode the angular Ricci equation and ``Lap V = 0``; the radial Ricci
equation holds iff ``E = m_MS - C sqrt(w)/V`` vanishes.  Along the flow
``E' = -E/r``, so imposing ``E = 0`` on the boundary is enough, and the only
shooting freedom left is the overall scale of V.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import GridTooCoarse, NoSolution, OutOfRange
from .geometry import RadialMetric
from .grids import RadialGrid, derivatives
from .qsflow import BoundaryData

FAR_FACTOR = 1e4
HORIZON_START = 1e-4


@dataclass(frozen=True)
class StaticResidual:
    ricci: float  # max over nodes and both frame components of |Ric - V^-1 Hess V|
    laplace: float  # max |Lap V|

    def __iter__(self):
        return iter((self.ricci, self.laplace))

    @property
    def max(self) -> float:
        return max(self.ricci, self.laplace)


@dataclass
class StaticSolution:
    metric: RadialMetric
    V: np.ndarray
    dV: np.ndarray
    d2V: np.ndarray
    m_fit: float
    flux: float
    residual: StaticResidual
    iterations: int
    notes: list = field(default_factory=list)
    m_metric: float = float("nan")  # mass read from the g_rr asymptotics at r_out

    def rows(self) -> list:
        return [{"r": r, "u": u, "V": v} for r, u, v in zip(self.metric.r, self.metric.u, self.V)]


def schwarzschild_match(bd: BoundaryData) -> float:
    """Mass of the Schwarzschild exterior with the same area radius and mean curvature."""
    x = 0.5 * bd.H_const * bd.r
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"Hr/2 = {x} is outside [0, 1]")
    return 0.5 * bd.r * (1.0 - x * x)


def static_residual(metric: RadialMetric, V, dV=None, d2V=None, order: int = 4) -> StaticResidual:
    """Residuals of the static equations in an orthonormal frame (units 1/length^2).

    Missing derivatives of V are computed by finite differences of ``order``.
    """
    V = np.asarray(V, dtype=float)
    if np.any(V <= 0):
        raise ValueError("V must be positive on the grid")
    if dV is None or d2V is None:
        if metric.grid.n < 6:
            raise GridTooCoarse("static residual needs at least 6 nodes")
        fd1, fd2 = derivatives(V, metric.grid, order)
        dV = fd1 if dV is None else np.asarray(dV, dtype=float)
        d2V = fd2 if d2V is None else np.asarray(d2V, dtype=float)
    r, u, du = metric.r, metric.u, metric.du_nodes
    ric_rr = 2.0 * du / (u * r)
    ric_tt = 1.0 - u**-2 * (1.0 - r * du / u)
    hess_rr = d2V - (du / u) * dV
    hess_tt = r * dV / u**2
    res_rr = (ric_rr - hess_rr / V) / u**2
    res_tt = (ric_tt - hess_tt / V) / r**2
    lap = (d2V + (2.0 / r - du / u) * dV) / u**2
    ricci = float(max(np.max(np.abs(res_rr)), np.max(np.abs(res_tt))))
    return StaticResidual(ricci, float(np.max(np.abs(lap))))


def _rhs(C):
    def f(r, y):
        w, V = y
        sw = np.sqrt(max(w, 0.0))
        return [2.0 * (1.0 - w) / r - 2.0 * C * sw / (r * r * V), C / (r * r * sw)]

    return f


def _integrate(r_start, y0, C, r_end, t_eval=None, rtol=1e-12):
    sol = solve_ivp(_rhs(C), (r_start, r_end), y0, method="DOP853", rtol=rtol, atol=1e-15, t_eval=t_eval)
    if not sol.success or np.any(sol.y[0] <= 0) or np.any(sol.y[1] <= 0):
        raise NoSolution(f"static integration broke down: {sol.message}")
    return sol


def _far_field(r, w, V, C):
    """(E at r, V at infinity) from the asymptotic tail of the harmonic V."""
    m = 0.5 * r * (1.0 - w)
    E = m - C * np.sqrt(w) / V
    V_inf = V + C * (1.0 / r + m / (2.0 * r**2) + m * m / (2.0 * r**3))
    return E, V_inf


def _horizon_start(r0: float, eps: float, C: float):
    """Series for (w, V) at a regular V = 0 horizon, derived from the system itself."""
    w = eps / r0 - eps**2 / r0**2 + eps**3 / r0**3
    V = eps**0.5 * (2.0 * C / r0**1.5 - C * eps / r0**2.5 + 0.75 * C * eps**2 / r0**3.5)
    return w, V


def shoot_static_extension(
    bd: BoundaryData,
    r_out: Optional[float] = None,
    n: int = 1024,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> StaticSolution:
    """Static asymptotically flat exterior matching ``(r, H)`` on a round boundary sphere.

    The shooting unknown is the scale of V.  On a boundary with ``H > 0``
    the slope is tied to the boundary value by the radial static equation
    ``E = 0`` (and ``E`` is then zero everywhere); with ``H = 0`` the start is
    a series at the totally geodesic ``V = 0`` horizon.  Newton iteration with
    a numerical derivative drives the far-field limit of V to 1.
    """
    H = bd.H_const
    r0 = bd.r
    x = 0.5 * H * r0
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"need 0 <= H r/2 <= 1, got {x}")
    r_out = r_out or 100.0 * r0
    r_far = FAR_FACTOR * max(r0, r_out)
    notes = []

    if H == 0.0:
        r_start = r0 * (1.0 + HORIZON_START)
        w0, V_unit = _horizon_start(r0, r_start - r0, 1.0)
        C_unit = 1.0
        notes.append(f"horizon boundary: series start at r0*(1+{HORIZON_START:g})")
    else:
        r_start = r0
        w0, V_unit = x * x, 1.0
        C_unit = 0.5 * r0 * (1.0 - x * x) / x

    def defect(k):
        sol = _integrate(r_start, [w0, k * V_unit], k * C_unit, r_far)
        E, V_inf = _far_field(r_far, sol.y[0, -1], sol.y[1, -1], k * C_unit)
        return V_inf - 1.0, E

    k = 1.0
    for iterations in range(1, max_iter + 1):
        G, E = defect(k)
        if abs(G) < tol:
            break
        dk = 1e-6 * abs(k)
        slope = (defect(k + dk)[0] - G) / dk
        if not np.isfinite(slope) or slope == 0.0:
            raise NoSolution("shooting derivative vanished")
        k = k - G / slope
        if not k > 0:
            raise NoSolution("shooting drove the V scale non-positive")
    else:
        raise NoSolution(f"shooting did not converge in {max_iter} iterations (|V_inf - 1| = {abs(G):.3e})")

    C = k * C_unit
    grid = RadialGrid(r_start, r_out, n, "geometric")
    sol = _integrate(r_start, [w0, k * V_unit], C, r_out, t_eval=grid.nodes)
    r = grid.nodes
    w, V = sol.y
    sw = np.sqrt(w)
    dw = 2.0 * (1.0 - w) / r - 2.0 * C * sw / (r * r * V)
    u = 1.0 / sw
    du = -0.5 * dw / w**1.5
    dV = C / (r * r * sw)
    d2V = C * (-2.0 / (r**3 * sw) - 0.5 * dw / (r * r * w**1.5))
    metric = RadialMetric(grid, u, du)
    residual = static_residual(metric, V, dV, d2V)
    m_fit = C  # V = 1 - C/r + O(r^-2)
    m_metric = 0.5 * r_out * (1.0 - w[-1])  # g_rr = 1 + 2m/r + O(r^-2)
    if abs(m_metric - m_fit) > 1e-6 * max(1.0, abs(m_fit)):
        notes.append(f"metric asymptotics give m = {m_metric:.12g}, V asymptotics m = {m_fit:.12g}")
    notes.append(f"far-field radial-equation defect E = {E:.3e}")
    return StaticSolution(metric, V, dV, d2V, m_fit, C, residual, iterations, notes, m_metric)
