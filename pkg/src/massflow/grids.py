"""Radial and spherical discretizations plus finite-difference operators.

Radial derivatives are taken in a computational coordinate ``xi`` (the node
index) in which every supported grid is uniform, then mapped back with the
chain rule.  This keeps one stencil family for uniform and geometric grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import sph_legendre_p

from .errors import BadGrid, GridTooCoarse

SPACINGS = ("uniform", "geometric")


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    n: int = 1024
    spacing: str = "uniform"

    def __post_init__(self):
        if not self.r_min > 0:
            raise BadGrid(f"r_min must be positive, got {self.r_min}")
        if not self.r_max > self.r_min:
            raise BadGrid(f"r_max={self.r_max} must exceed r_min={self.r_min}")
        if int(self.n) != self.n or self.n < 16:
            raise BadGrid(f"need an integer n >= 16 nodes, got {self.n}")
        if self.spacing not in SPACINGS:
            raise BadGrid(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        object.__setattr__(self, "r_min", float(self.r_min))
        object.__setattr__(self, "r_max", float(self.r_max))
        object.__setattr__(self, "n", int(self.n))

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.spacing == "uniform":
            r = np.linspace(self.r_min, self.r_max, self.n)
        else:
            r = np.geomspace(self.r_min, self.r_max, self.n)
        r[0], r[-1] = self.r_min, self.r_max
        r.flags.writeable = False
        return r

    @cached_property
    def _log_ratio(self) -> float:
        return np.log(self.r_max / self.r_min) / (self.n - 1)

    @cached_property
    def dr_dxi(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.full(self.n, (self.r_max - self.r_min) / (self.n - 1))
        return self.nodes * self._log_ratio

    @cached_property
    def d2r_dxi2(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.zeros(self.n)
        return self.nodes * self._log_ratio**2

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Grid with the spacing divided by ``factor``; old nodes are kept."""
        return RadialGrid(self.r_min, self.r_max, factor * (self.n - 1) + 1, self.spacing)

    def index_of(self, r: float, rtol: float = 1e-9) -> int:
        """Index of the node equal to ``r``; raises ValueError for off-node radii."""
        i = int(np.argmin(np.abs(self.nodes - r)))
        if abs(self.nodes[i] - r) > rtol * max(abs(r), 1.0):
            raise ValueError(f"r={r} is not a grid node (nearest {self.nodes[i]})")
        return i

    def contains(self, r) -> bool:
        r = np.asarray(r)
        span = self.r_max - self.r_min
        return bool(np.all((r >= self.r_min - 1e-12 * span) & (r <= self.r_max + 1e-12 * span)))


# stencils on a unit-spaced computational grid
_C4_FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_C4_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# one-sided rows for the first two and last two nodes (5 points for f', 6 for f'')
_E4_FIRST = np.array(
    [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ]
) / 12.0
_E4_SECOND = np.array(
    [
        [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
        [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
    ]
) / 12.0


def _xi_derivatives(f: np.ndarray, order: int, axis: int = 0):
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    f = f - f[:1]  # constants then differentiate to exactly zero
    n = f.shape[0]
    if order == 2:
        if n < 3:
            raise GridTooCoarse("second-order stencils need at least 3 nodes")
        d1 = np.gradient(f, axis=0, edge_order=2)
        d2 = np.empty_like(f)
        d2[1:-1] = f[2:] - 2.0 * f[1:-1] + f[:-2]
        d2[0] = 2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]
        d2[-1] = 2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]
    elif order == 4:
        if n < 6:
            raise GridTooCoarse("fourth-order stencils need at least 6 nodes")
        d1 = np.empty_like(f)
        d2 = np.empty_like(f)
        for k in range(5):
            sl = slice(k, n - 4 + k)
            if k == 0:
                d1[2:-2] = _C4_FIRST[k] * f[sl]
                d2[2:-2] = _C4_SECOND[k] * f[sl]
            else:
                d1[2:-2] += _C4_FIRST[k] * f[sl]
                d2[2:-2] += _C4_SECOND[k] * f[sl]
        head = f[:6]
        tail = f[-6:][::-1]
        for j in range(2):
            d1[j] = np.tensordot(_E4_FIRST[j], head[:5], axes=1)
            d2[j] = np.tensordot(_E4_SECOND[j], head, axes=1)
            d1[-1 - j] = -np.tensordot(_E4_FIRST[j], tail[:5], axes=1)
            d2[-1 - j] = np.tensordot(_E4_SECOND[j], tail, axes=1)
    else:
        raise ValueError(f"order must be 2 or 4, got {order}")
    return np.moveaxis(d1, 0, axis), np.moveaxis(d2, 0, axis)


def _broadcast(profile: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return profile.reshape(shape)


def derivative(f, grid: RadialGrid, order: int = 2, axis: int = 0) -> np.ndarray:
    """d f / d r on the nodes of ``grid``."""
    f = np.asarray(f, dtype=float)
    if f.shape[axis] != grid.n:
        raise ValueError(f"profile has {f.shape[axis]} nodes along axis {axis}, grid has {grid.n}")
    d1, _ = _xi_derivatives(f, order, axis)
    return d1 / _broadcast(grid.dr_dxi, f.ndim, axis)


def derivatives(f, grid: RadialGrid, order: int = 2, axis: int = 0):
    """(d f/dr, d^2 f/dr^2) on the nodes of ``grid``."""
    f = np.asarray(f, dtype=float)
    if f.shape[axis] != grid.n:
        raise ValueError(f"profile has {f.shape[axis]} nodes along axis {axis}, grid has {grid.n}")
    d1, d2 = _xi_derivatives(f, order, axis)
    rx = _broadcast(grid.dr_dxi, f.ndim, axis)
    rxx = _broadcast(grid.d2r_dxi2, f.ndim, axis)
    return d1 / rx, (d2 - d1 * rxx / rx) / rx**2


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre nodes in cos(theta) times uniform nodes in phi.

    Exact for spherical harmonics of degree up to ``2*n_theta - 1``.  The
    harmonic basis used for transforms is the real orthonormal one, truncated
    at ``lmax = n_theta - 1`` so that analysis followed by synthesis is exact
    on band-limited fields.
    """

    n_theta: int = 12
    n_phi: int = field(default=0)

    def __post_init__(self):
        if self.n_theta < 2:
            raise BadGrid("n_theta must be at least 2")
        if self.n_phi == 0:
            object.__setattr__(self, "n_phi", 2 * self.n_theta)
        if self.n_phi < 2 * self.n_theta:
            raise BadGrid("n_phi must be at least 2*n_theta for exact quadrature")

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def degree_bound(self) -> int:
        return 2 * self.n_theta - 1

    @property
    def lmax(self) -> int:
        return self.n_theta - 1

    @cached_property
    def _nodes(self):
        x, wx = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x)[::-1]
        wx = wx[::-1]
        phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        T, P = np.meshgrid(theta, phi, indexing="ij")
        W = np.outer(wx, np.full(self.n_phi, 2.0 * np.pi / self.n_phi))
        return T.ravel(), P.ravel(), W.ravel()

    @property
    def theta(self) -> np.ndarray:
        return self._nodes[0]

    @property
    def phi(self) -> np.ndarray:
        return self._nodes[1]

    @property
    def weights(self) -> np.ndarray:
        return self._nodes[2]

    def integrate(self, f) -> np.ndarray:
        """Integral over the unit sphere; the last axis of ``f`` runs over nodes."""
        return np.asarray(f) @ self.weights

    def mean(self, f) -> np.ndarray:
        return self.integrate(f) / (4.0 * np.pi)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([l for l, _ in self._lm])

    @cached_property
    def _lm(self):
        return [(l, m) for l in range(self.lmax + 1) for m in range(-l, l + 1)]

    @cached_property
    def _basis(self):
        theta, phi = self.theta, self.phi
        cols = [[], [], [], [], []]  # Y, Y_theta, Y_thetatheta, Y_phi, Y_phiphi
        for l, m in self._lm:
            am = abs(m)
            p, dp, ddp = sph_legendre_p(l, am, theta, diff_n=2)
            if m == 0:
                trig, dtrig, ddtrig = np.ones_like(phi), np.zeros_like(phi), np.zeros_like(phi)
            elif m > 0:
                s = np.sqrt(2.0)
                trig, dtrig, ddtrig = s * np.cos(m * phi), -s * m * np.sin(m * phi), -s * m * m * np.cos(m * phi)
            else:
                s = np.sqrt(2.0)
                trig, dtrig, ddtrig = s * np.sin(am * phi), s * am * np.cos(am * phi), -s * am * am * np.sin(am * phi)
            cols[0].append(p * trig)
            cols[1].append(dp * trig)
            cols[2].append(ddp * trig)
            cols[3].append(p * dtrig)
            cols[4].append(p * ddtrig)
        return tuple(np.array(c).T for c in cols)

    @property
    def Y(self) -> np.ndarray:
        """Real orthonormal harmonics, shape (size, (lmax+1)^2)."""
        return self._basis[0]

    def ylm(self, l: int, m: int) -> np.ndarray:
        """Grid values of one real orthonormal harmonic (any degree)."""
        am = abs(m)
        p = np.asarray(sph_legendre_p(l, am, self.theta)).reshape(self.theta.shape)
        if m == 0:
            return p
        trig = np.cos(am * self.phi) if m > 0 else np.sin(am * self.phi)
        return np.sqrt(2.0) * p * trig

    def analyze(self, f) -> np.ndarray:
        """Harmonic coefficients of ``f`` (last axis = nodes)."""
        return (np.asarray(f) * self.weights) @ self.Y

    def synthesize(self, c) -> np.ndarray:
        return np.asarray(c) @ self.Y.T

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Laplacian eigenvalue -l(l+1) per coefficient."""
        l = self.degrees
        return -l * (l + 1.0)

    def laplacian(self, f) -> np.ndarray:
        return self.synthesize(self.analyze(f) * self.eigenvalues)

    def angular_derivatives(self, f):
        """(f_theta, f_thetatheta, f_phi, f_phiphi) from the harmonic expansion of f."""
        c = self.analyze(f)
        _, Yt, Ytt, Yp, Ypp = self._basis
        return c @ Yt.T, c @ Ytt.T, c @ Yp.T, c @ Ypp.T
