import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracstable import registry
from fracstable.classify import (
    ALPHA_CAVEAT,
    ClassifierConfig,
    TransformedKernel,
    classify_cfsm,
    fixed_point_residual,
    uniqueness_search,
)
from fracstable.errors import DomainError
from fracstable.kernel import KernelSpec, normalize_speed

TENT = registry.build("tent")
LFSM = registry.build("mixed-lfsm")
# coarser grids keep the unit tests quick; acceptance runs the defaults
SMALL = ClassifierConfig(shift_grid=11, k_grid=11)


def test_config_validation():
    with pytest.raises(DomainError):
        ClassifierConfig(fit_tol=0.1, separation_floor=0.01)
    with pytest.raises(DomainError):
        ClassifierConfig(c_steps=10, c_step=0.2)
    c = ClassifierConfig().c_grid()
    assert len(c) == 20 and min(c) == pytest.approx(0.8) and max(c) == pytest.approx(1.2)


def test_c_must_differ_from_one():
    with pytest.raises(DomainError):
        fixed_point_residual(TENT, 0, 1.0)
    with pytest.raises(DomainError):
        fixed_point_residual(TENT, 0, -2.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 2.0).filter(lambda c: abs(c - 1) > 1e-3))
def test_lfsm_is_fixed_for_every_c(c):
    r = fixed_point_residual(LFSM, 0, c)
    assert r.residual <= 1e-10
    assert r.b == pytest.approx(c**LFSM.kappa, rel=1e-10)
    assert r.a == 0.0 and r.d == 0.0


@pytest.mark.parametrize("name", list(registry.REGISTRY))
def test_period_return_is_exact(name):
    spec = registry.build(name)
    atom = spec.atoms[0]
    c = math.exp(atom.q / abs(atom.s))
    r = fixed_point_residual(spec, 0, c)
    assert r.residual <= 1e-10
    assert r.b == pytest.approx(c**spec.kappa * atom.b1, rel=1e-12)
    assert (r.a, r.d) == (0.0, 0.0)


@pytest.mark.parametrize("c", [0.85, 0.9, 1.1, 1.2])
def test_tent_has_no_fixed_point_relation(c):
    # observed minimum about 0.9 relative to the identity fit
    r = fixed_point_residual(TENT, 0, c)
    assert r.relative >= 0.5
    assert r.residual >= 0.1


def test_fit_dict():
    d = fixed_point_residual(TENT, 0, 1.1).to_dict()
    assert set(d) >= {"c", "b", "a", "d", "residual", "relative", "converged"}


def test_zero_kernel_is_degenerate():
    zero = registry.build("mixed-lfsm", atoms=((1.0, 0.0, 0.0),))
    r = fixed_point_residual(zero, 0, 1.1)
    assert r.degenerate and r.residual == 0.0


def test_tent_cyclic():
    rep = classify_cfsm(TENT)
    assert rep.overall == "CFSM" and rep.verdicts == ["CYCLIC"]
    assert rep.caveat is None
    assert rep.atoms[0].min_relative >= 1e-2


def test_lfsm_fixed():
    rep = classify_cfsm(LFSM)
    assert rep.verdicts == ["FIXED"] and rep.overall == "mixed LFSM"


def test_direct_sum():
    mix = KernelSpec(TENT.params, TENT.atoms + LFSM.atoms, "tent+lfsm")
    rep = classify_cfsm(mix)
    assert rep.verdicts == ["CYCLIC", "FIXED"]
    assert rep.overall == "PFSM with mixed LFSM component"


def test_alpha_caveat():
    rep = classify_cfsm(registry.build("tent", alpha=0.8, H=0.5))
    assert rep.caveat == ALPHA_CAVEAT


def test_speed_normalisation_invariance():
    spec = registry.build("cosine", lambda_atoms=[(2.0, 1.0)])
    assert classify_cfsm(spec).verdicts == classify_cfsm(normalize_speed(spec)).verdicts == ["CYCLIC"]


def test_report_dict():
    d = classify_cfsm(LFSM).to_dict()
    assert d["overall"] == "mixed LFSM"
    assert d["atoms"][0]["verdict"] == "FIXED"


# -- essential identity --------------------------------------------------------


def test_self_search():
    r = uniqueness_search(TENT, TENT, SMALL)
    assert r.verdict == "essentially-identical" and r.iff
    assert (r.h, r.k, r.g, r.j) == pytest.approx((1.0, 1.0, 0.0, 0.0), abs=1e-8)
    assert r.residual <= 1e-4 and r.same_fdd is True


def test_different_kappa():
    r = uniqueness_search(TENT, registry.build("tent", H=0.6))
    assert r.verdict == "essentially-different"


def test_different_alpha_rejected():
    with pytest.raises(DomainError):
        uniqueness_search(TENT, registry.build("tent", alpha=1.5))


def test_tent_vs_indicator_both_directions():
    ind = registry.build("indicator")
    ab = uniqueness_search(TENT, ind, SMALL)
    ba = uniqueness_search(ind, TENT, SMALL)
    assert ab.verdict == ba.verdict == "essentially-different"
    assert min(ab.residual, ba.residual) >= 1e-2


def test_transform_validation():
    with pytest.raises(DomainError):
        TransformedKernel(TENT, h=0.0)
    with pytest.raises(DomainError):
        TransformedKernel(TENT, k=-1.0)
    with pytest.raises(DomainError):
        TransformedKernel(registry.build("cosine", n_atoms=2))


def test_weight_enters_fdd_verdict():
    heavy = KernelSpec(TENT.params, (replace(TENT.atoms[0], weight=4.0),), "tent")
    r = uniqueness_search(TENT, heavy, SMALL)
    assert r.verdict == "essentially-identical"
    assert r.same_fdd is False


def test_report_schema():
    d = uniqueness_search(TENT, TENT, SMALL).to_dict()
    assert set(d) == {"best", "residual", "grid_min", "verdict", "thresholds", "if_and_only_if", "identical_fdd", "notes"}
    assert set(d["best"]) == {"h", "k", "g", "j"}
