import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from massflow.catalog import (
    GaussianSource,
    MetricSpec,
    Shell,
    _shell_potential,
    make_flat,
    make_isotropic_schwarzschild,
    make_perturbed_isotropic,
    make_schwarzschild,
    penrose_margin_exact,
    sample_nonneg_scalar_metric,
    sample_nonneg_scalar_source,
    sample_perturbed_horizon,
    shell_mass,
    sourced_metric,
)
from massflow.errors import BadGrid, HorizonInsideGrid, RejectionLimitExceeded
from massflow.geometry import scalar_curvature
from massflow.grids import RadialGrid

GRID = RadialGrid(1.0, 400.0, 4096)


def test_flat():
    m = make_flat(GRID)
    assert np.all(m.u == 1) and np.all(scalar_curvature(m) == 0)


def test_schwarzschild_requires_grid_outside_horizon():
    with pytest.raises(HorizonInsideGrid):
        make_schwarzschild(1.0, RadialGrid(2.0, 10.0, 32))
    make_schwarzschild(1.0, RadialGrid(2.0 + 1e-9, 10.0, 32))
    neg = make_schwarzschild(-1.0, RadialGrid(0.1, 10.0, 32))
    assert np.all(neg.u < 1)
    assert make_schwarzschild(0.0, GRID).closed_form.kind == "flat"


@pytest.mark.parametrize("m", [-1.0, 0.5, 1.0, 3.0])
def test_schwarzschild_satisfies_vacuum_ode(m):
    g = RadialGrid(max(0.5, 2.5 * m), 100.0, 512)
    s = make_schwarzschild(m, g)
    u = s.u
    np.testing.assert_allclose(s.du, (u - u**3) / (2 * g.nodes), rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(s.misner_sharp(), m, rtol=1e-12)


def test_isotropic_schwarzschild():
    g = RadialGrid(0.05, 1e4, 2048, "geometric")
    iso = make_isotropic_schwarzschild(1.0, g)
    assert np.all(scalar_curvature(iso) == 0)
    with pytest.raises(BadGrid):
        make_isotropic_schwarzschild(-1.0, g)
    with pytest.raises(BadGrid):
        make_isotropic_schwarzschild(1.0, RadialGrid(1.0, 10, 32))


def test_moment2_matches_quadrature():
    src = GaussianSource((0.03, 0.01), (2.0, 4.5), (0.4, 1.3))
    for a, b in [(1.0, 3.0), (1.0, 50.0), (2.5, 7.0)]:
        ref, _ = quad(lambda s: s * s * src(s), a, b, epsabs=1e-14)
        assert src.moment2(b) - src.moment2(a) == pytest.approx(ref, rel=1e-12)


def test_gaussian_source_validation():
    with pytest.raises(ValueError):
        GaussianSource((0.1,), (1.0, 2.0), (1.0,))
    with pytest.raises(ValueError):
        GaussianSource((-0.1,), (1.0,), (1.0,))
    with pytest.raises(ValueError):
        GaussianSource((0.1,), (1.0,), (0.0,))


def test_sourced_metric_has_prescribed_curvature():
    src = GaussianSource((0.05,), (3.0,), (0.5,))
    m = sourced_metric(GRID, src)
    np.testing.assert_allclose(scalar_curvature(m), src(GRID.nodes), atol=1e-12)
    assert m.misner_sharp()[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sourced_metric(GRID, GaussianSource((50.0,), (3.0,), (0.5,)))


def test_sample_seed_42():
    m = sample_nonneg_scalar_metric(42, GRID, 0.05)
    R = scalar_curvature(m)
    assert R.min() >= -1e-8
    assert m.misner_sharp()[-1] > 0
    assert np.min(1 - 2 * m.misner_sharp() / m.r) >= 0.02


def test_sample_amplitude_zero_is_flat():
    m = sample_nonneg_scalar_metric(7, GRID, 0.0)
    assert np.all(m.u == 1)
    with pytest.raises(ValueError):
        sample_nonneg_scalar_metric(7, GRID, -0.1)
    with pytest.raises(ValueError):
        sample_nonneg_scalar_source(7, GRID, 0.0)


def test_generator_is_deterministic():
    a = sample_nonneg_scalar_metric(123, GRID)
    b = sample_nonneg_scalar_metric(123, GRID)
    assert a.u.tobytes() == b.u.tobytes()
    c = sample_nonneg_scalar_metric(124, GRID)
    assert a.u.tobytes() != c.u.tobytes()


def test_rejection_limit():
    with pytest.raises(RejectionLimitExceeded):
        sample_nonneg_scalar_source(0, GRID, 100.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.2))
def test_every_sample_is_admissible(seed, amplitude):
    g = RadialGrid(1.0, 400.0, 1024)
    try:
        src = sample_nonneg_scalar_source(seed, g, amplitude)
    except RejectionLimitExceeded:
        return
    m = sourced_metric(g, src)
    assert len(src.amplitudes) <= 5
    assert scalar_curvature(m).min() >= -1e-8
    assert np.min(1 - 2 * m.misner_sharp() / m.r) >= 0.02 - 1e-12


def test_sourced_ode_integration_matches_closed_form():
    from scipy.integrate import solve_ivp

    src = sample_nonneg_scalar_source(42, GRID)
    m = sourced_metric(GRID, src)

    def rhs(r, y):
        u = y[0]
        return [(u - u**3) / (2 * r) + r * u**3 * src(r) / 4]

    sol = solve_ivp(rhs, (1.0, 400.0), [1.0], t_eval=GRID.nodes, rtol=1e-12, atol=1e-14, method="DOP853")
    np.testing.assert_allclose(sol.y[0], m.u, rtol=1e-9)


def test_metric_spec_build():
    assert np.all(MetricSpec("flat", n=32).build().u == 1)
    s = MetricSpec("schwarzschild", m=1.0, r_min=3.0, n=32).build()
    assert s.closed_form.m == 1.0
    iso = MetricSpec("isotropic_schwarzschild", m=1.0, r_min=0.05, r_max=1e3, n=64, spacing="geometric").build()
    assert iso.closed_form.kind == "isotropic_schwarzschild"
    src = MetricSpec("sourced", seed=42, n=1024).build()
    assert np.allclose(src.u, sample_nonneg_scalar_metric(42, RadialGrid(1.0, 400.0, 1024)).u)
    with pytest.raises(ValueError):
        MetricSpec("sourced").build()
    with pytest.raises(ValueError):
        MetricSpec("kerr").build()


# -- shells ---------------------------------------------------------------------


SHELLS = (Shell(0.005, 1.0, 2.5), Shell(0.002, 2.0, 4.0))


def test_shell_potential_solves_poisson_equation():
    rho = np.linspace(0.3, 8.0, 2001)
    psi, dpsi, d2psi = _shell_potential(SHELLS, rho)
    nu = sum(np.where((rho > s.inner) & (rho < s.outer), s.poly(rho), 0.0) for s in SHELLS)
    np.testing.assert_allclose(d2psi + 2 * dpsi / rho, -nu, atol=1e-15)
    np.testing.assert_allclose(np.gradient(psi, rho), dpsi, atol=1e-6)
    np.testing.assert_allclose(np.gradient(dpsi, rho)[5:-5], d2psi[5:-5], atol=1e-4)
    # vacuum outside: psi = M / rho with M the shell mass
    far = np.array([10.0, 100.0])
    np.testing.assert_allclose(_shell_potential(SHELLS, far)[0], shell_mass(SHELLS) / far, rtol=1e-12)


def test_shell_mass_matches_quadrature():
    ref = sum(quad(lambda s, sh=sh: s * s * sh.poly(s), sh.inner, sh.outer)[0] for sh in SHELLS)
    assert shell_mass(SHELLS) == pytest.approx(ref, rel=1e-12)


def test_penrose_margin_exact_matches_direct_evaluation():
    # ADM mass from the 1/rho coefficient and the horizon from the minimal sphere
    m = 1.0
    adm = m + 2 * shell_mass(SHELLS)

    def phi(r):
        return 1 + m / (2 * r) + _shell_potential(SHELLS, r)[0]

    def area_derivative(r):
        psi, dpsi, _ = _shell_potential(SHELLS, r)
        return phi(r) + 2 * r * (-m / (2 * r * r) + dpsi)

    rho = brentq(area_derivative, 0.2, 0.9, xtol=1e-15)
    area = 4 * np.pi * phi(rho) ** 4 * rho**2
    assert penrose_margin_exact(m, SHELLS) == pytest.approx(adm - np.sqrt(area / (16 * np.pi)), abs=1e-12)
    assert penrose_margin_exact(m, SHELLS) > 0
    assert penrose_margin_exact(m, ()) == 0.0


def test_perturbed_isotropic_is_nonnegatively_curved():
    g = RadialGrid(0.05, 1e4, 8192, "geometric")
    metric = make_perturbed_isotropic(1.0, g, SHELLS)
    assert scalar_curvature(metric).min() >= -1e-12
    with pytest.raises(ValueError):
        make_perturbed_isotropic(1.0, g, (Shell(0.01, 0.4, 1.0),))
    with pytest.raises(BadGrid):
        make_perturbed_isotropic(0.0, g, SHELLS)


def test_sample_perturbed_horizon_deterministic():
    g = RadialGrid(0.05, 1e4, 512, "geometric")
    a, sa = sample_perturbed_horizon(9, g)
    b, sb = sample_perturbed_horizon(9, g)
    assert sa == sb and a.phi.tobytes() == b.phi.tobytes()
    assert 1 <= len(sa) <= 3
