import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracstable import registry
from fracstable.errors import DomainError
from fracstable.integrability import lalpha_increment_norm
from fracstable.oracle import char_exponent
from fracstable.simulate import (
    PathEnsemble,
    SimulationGrid,
    cell_coefficients,
    empirical_scale,
    replication_stream,
    sas_sample,
    simulate_paths,
)

TENT = registry.build("tent")


# -- SaS variates ---------------------------------------------------------------


def test_sas_domain():
    rng = np.random.default_rng(0)
    for a in (0.0, 2.0, 2.5, -1.0):
        with pytest.raises(DomainError):
            sas_sample(rng, 10, a)


def test_gaussian_limit():
    # the variance is infinite for alpha < 2, so compare the second moment
    # below 6 (where the Gaussian part is negligible) instead of the raw one
    x = sas_sample(np.random.default_rng(0), 10**6, 1.99) / math.sqrt(2)
    m = np.mean(x[np.abs(x) <= 6] ** 2)
    assert abs(m - 1) <= 0.05


def test_symmetry():
    x = sas_sample(np.random.default_rng(1), 10**5, 1.3)
    # density at 0 of a standard SaS law is Gamma(1 + 1/alpha) / pi
    f0 = math.gamma(1 + 1 / 1.3) / math.pi
    se = 1 / (2 * f0 * math.sqrt(x.size))
    assert abs(np.median(x)) <= 3 * se


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.6])
def test_characteristic_function(alpha):
    x = sas_sample(np.random.default_rng(2), 10**6, alpha)
    for th in (0.5, 1.0, 2.0):
        c = np.cos(th * x)
        phi = c.mean()
        se = c.std() / math.sqrt(x.size) / phi  # delta method for -log
        assert abs(-math.log(phi) - th**alpha) <= 3 * se + 1e-12


def test_streams_are_distinct_and_reproducible():
    a = replication_stream(5, 0).standard_normal(4)
    b = replication_stream(5, 1).standard_normal(4)
    c = replication_stream(5, 0).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)
    with pytest.raises(DomainError):
        replication_stream(-1, 0)


# -- grid and paths -------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(DomainError):
        SimulationGrid((1.0, 0.5))
    with pytest.raises(DomainError):
        SimulationGrid(())
    with pytest.raises(DomainError):
        SimulationGrid((1.0,), U=1.5)
    with pytest.raises(DomainError):
        SimulationGrid((1.0,), ratio=0.9)


def test_u_edges_are_graded():
    g = SimulationGrid((1.0, 2.0))
    e = g.u_edges()
    assert np.all(np.diff(e) > 0)
    for p in g.singular_points():
        assert p in e
        near = np.min(np.abs(e[e != p] - p))
        assert near == pytest.approx(g.delta)


def test_zero_kernel_paths():
    zero = registry.build("mixed-lfsm", atoms=((1.0, 0.0, 0.0),))
    ens = simulate_paths(zero, SimulationGrid((0.5, 1.0)), 50)
    assert np.all(ens.values == 0)


def test_time_zero_column():
    ens = simulate_paths(TENT, SimulationGrid((0.0, 1.0), v_cells=2), 100)
    assert np.all(ens.column(0) == 0)
    assert np.any(ens.column(1) != 0)


def test_marginal_scale_is_exact_per_cell():
    grid = SimulationGrid((1.0, 2.0), v_cells=4)
    A = cell_coefficients(TENT, grid)
    disc = np.sum(np.abs(A) ** 1.6, axis=1) ** (1 / 1.6)
    for j, t in enumerate(grid.t_grid):
        sigma = lalpha_increment_norm(TENT, t).value
        assert disc[j] == pytest.approx(sigma, rel=2e-3)


def test_refinement_converges_to_quadrature():
    # the cell masses approach sigma(1) monotonically as the u and v grids refine
    sigma = lalpha_increment_norm(TENT, 1.0).value
    errs = []
    for ratio, v in ((1.4, 4), (1.4**0.5, 8), (1.4**0.25, 16)):
        A = cell_coefficients(TENT, SimulationGrid((1.0,), ratio=ratio, v_cells=v))
        errs.append(abs(np.sum(np.abs(A) ** 1.6) ** (1 / 1.6) - sigma))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-4 * sigma


def test_thread_reproducibility():
    grid = SimulationGrid((0.5, 1.0), seed=99, v_cells=2, block=64)
    a = simulate_paths(TENT, grid, 500, threads=1).values
    b = simulate_paths(TENT, grid, 500, threads=3).values
    assert a.tobytes() == b.tobytes()
    c = simulate_paths(TENT, SimulationGrid((0.5, 1.0), seed=100, v_cells=2, block=64), 500).values
    assert not np.array_equal(a, c)


def test_prefix_stability():
    # replication r does not depend on how many replications are drawn
    grid = SimulationGrid((1.0,), seed=4, v_cells=2, block=16)
    a = simulate_paths(TENT, grid, 40).values
    b = simulate_paths(TENT, grid, 100).values
    assert np.array_equal(a, b[:40])


def test_joint_law_consistency():
    grid = SimulationGrid((0.5, 1.0), seed=11, v_cells=4)
    ens = simulate_paths(TENT, grid, 20_000)
    for th in ([1.0, -1.0], [0.5, 1.0]):
        psi = char_exponent(TENT, [0.5, 1.0], th).value
        c = np.cos(ens.values @ np.array(th))
        se = c.std() / math.sqrt(c.size)
        assert abs(c.mean() - math.exp(-psi)) <= 3 * se


def test_csv(tmp_path):
    ens = PathEnsemble(np.array([[0.0, 1.5], [0.25, -2.0]]), (0.0, 1.0), 1.6)
    buf = io.StringIO()
    ens.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "rep,t,value"
    assert lines[1:] == ["0,0.0,0.0", "0,1.0,1.5", "1,0.0,0.25", "1,1.0,-2.0"]


def test_simulation_errors():
    with pytest.raises(DomainError):
        simulate_paths(TENT, SimulationGrid((1.0,)), 0)
    with pytest.raises(DomainError):
        simulate_paths(TENT, SimulationGrid((1.0,)), 10, threads=0)


# -- scale estimation ---------------------------------------------------------


def test_synthetic_scale():
    x = 2.0 * sas_sample(np.random.default_rng(3), 10**5, 1.6)
    est = empirical_scale(x, alpha=1.6)
    assert abs(est.sigma - 2.0) <= 3 * est.standard_error
    assert est.standard_error < 0.05


@settings(max_examples=5, deadline=None)
@given(st.floats(0.2, 20.0))
def test_scale_homogeneity(c):
    x = sas_sample(np.random.default_rng(4), 20_000, 1.6)
    a = empirical_scale(x, alpha=1.6, n_boot=20)
    b = empirical_scale(c * x, alpha=1.6, n_boot=20)
    # the default theta grid scales with the data, so the fit is exactly equivariant
    assert b.sigma == pytest.approx(c * a.sigma, rel=1e-9)


def test_scale_errors():
    with pytest.raises(DomainError):
        empirical_scale(np.ones(10), alpha=1.6)
    with pytest.raises(DomainError):
        empirical_scale(np.array([1.0, 2.0]))
    with pytest.raises(DomainError):
        empirical_scale(np.array([1.0, 2.0, 3.0]), alpha=1.6, theta_grid=[0.0, 1.0])


def test_ensemble_scale_uses_its_alpha():
    x = sas_sample(np.random.default_rng(5), 5000, 1.2)[:, None]
    ens = PathEnsemble(x, (1.0,), 1.2)
    assert empirical_scale(ens, n_boot=10).sigma == empirical_scale(x[:, 0], alpha=1.2, n_boot=10).sigma
