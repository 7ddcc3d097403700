"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test prints one ``criterion N: PASS|FAIL ...`` line (visible with ``-s``)
and the lines are repeated in the pytest terminal summary.
"""

import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from fracstable import registry
from fracstable.classify import ClassifierConfig, TransformedKernel, classify_cfsm, fixed_point_residual, uniqueness_search
from fracstable.flows import (
    CyclicFlow,
    generation_residual,
    random_samples,
    verify_cocycle,
    verify_flow_identity,
    verify_semi_additive_1,
    verify_semi_additive_2,
)
from fracstable.integrability import cq_norm, lalpha_increment_norm, sufficient_conditions
from fracstable.kernel import StableParams, floor_mod, frac_part, int_part
from fracstable.oracle import (
    SPANNING_SCALES,
    representation_equivalence,
    self_similarity_residual,
    spanning_thetas,
    stationary_increments_residual,
)
from fracstable.quadrature import QuadratureConfig
from fracstable.simulate import SimulationGrid, empirical_scale, simulate_paths

from conftest import ACCEPTANCE_LINES
from generators import random_triple

EXAMPLES = ("linear", "tent", "indicator", "cosine")
CFG = QuadratureConfig(rel_tol=1e-4)


def report(n, ok, detail, elapsed, budget=None):
    status = "PASS" if ok else "FAIL"
    limit = f" / {budget:g}s" if budget else ""
    line = f"criterion {n}: {status}  {detail}  [{elapsed:.1f}s{limit}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _half(th):
    # Psi is even in theta, so one of each +- pair suffices
    return th[th[:, 0] > 0]


def test_criterion_01_scalar_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    n = 10**5
    x = rng.uniform(-1e3, 1e3, n) * 10 ** rng.uniform(-3, 0, n)
    a = 10 ** rng.uniform(-3, 1, n)
    ulp = np.spacing(np.maximum(np.abs(x), a))
    N, F = floor_mod(x, a)
    in_range = bool(np.all((F >= 0) & (F < a)))
    worst_vec = float(np.max(np.abs(a * N + F - x) / ulp))
    # scalar path, checked in exact rational arithmetic on a subsample
    worst_exact = 0.0
    for xi, ai, ui in zip(x[:10_000], a[:10_000], ulp[:10_000]):
        k, f = int_part(xi, ai), frac_part(xi, ai)
        in_range &= 0 <= f < ai
        worst_exact = max(worst_exact, float(abs(Fraction(ai) * k + Fraction(f) - Fraction(xi)) / Fraction(ui)))
    # [A+B] = [A] + [{A}+B] and {A+B} = {{A}+B}
    A, B = x[:20_000], rng.uniform(-1e3, 1e3, 20_000)
    q = a[:20_000]
    nl, fl = floor_mod(A + B, q)
    nA, fA = floor_mod(A, q)
    nr, fr = floor_mod(fA + B, q)
    tol = 1e-12 * np.maximum(1.0, np.abs(A) + np.abs(B))
    d = np.abs(fl - fr)
    frac_err = np.minimum(d, q - d)
    clear = (np.minimum(fl, q - fl) > tol) & (np.minimum(fr, q - fr) > tol)
    brackets = bool(np.all(frac_err <= tol) and np.all(nl[clear] == (nA + nr)[clear]))
    ok = in_range and worst_vec <= 1 and worst_exact <= 1 and brackets
    detail = f"reconstruction {worst_vec:.2f} ulp (exact {worst_exact:.2f} ulp), brackets ok={brackets}"
    report(1, ok, detail, time.perf_counter() - t0)


def test_criterion_02_flow_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for b1 in (1, -1):
        for params in (StableParams(1.6, 0.5), StableParams(1.6, 0.625)):  # kappa < 0 and kappa = 0
            q = float(rng.uniform(0.5, 3))
            s = float(rng.choice([-1, 1]) * rng.uniform(0.3, 3))
            tr = random_triple(rng, q, s, b1)
            S = random_samples(tr.flow, 0, 10_000, rng, log_range=2)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                worst = max(
                    worst,
                    verify_flow_identity(tr.flow, S),
                    verify_cocycle(tr, S),
                    verify_semi_additive_1(tr, S),
                    verify_semi_additive_2(tr, params, S),
                )
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-12 and elapsed < 1, f"max residual {worst:.2e} over 4 x 10^4 samples", elapsed, 1)


def test_criterion_03_generation():
    specs = [registry.build(name) for name in registry.REGISTRY]
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        worst = max(generation_residual(s, [0.5, 2.0, math.e], rng=3) for s in specs)
    elapsed = time.perf_counter() - t0
    report(3, worst <= 1e-12 and elapsed < 1, f"max residual {worst:.2e} for {len(specs)} kernels", elapsed, 1)


def test_criterion_04_integrability():
    t0 = time.perf_counter()
    cases = [("linear", 0.5), ("tent", 0.5), ("indicator", 0.5), ("tent", 0.8)]
    finite = {}
    for name, H in cases:
        r = cq_norm(registry.build(name, H=H))
        finite[(name, H)] = r.finite and r.converged

    def pattern(name, H):
        spec = registry.build(name, H=H)
        cl = sufficient_conditions(spec.atoms[0], spec.params)
        return {c.name: c.ok for c in cl.checks}, cl.sufficient

    tent_lo, tent_hi = pattern("tent", 0.5), pattern("tent", 0.8)
    lin_hi, ind = pattern("linear", 0.8), pattern("indicator", 0.5)
    patterns = (
        all(tent_lo[0].values()) and tent_lo[1]
        and all(tent_hi[0].values()) and tent_hi[1]
        and lin_hi[0]["s3"] is False and not lin_hi[1]
        and ind[0]["s2"] is False and not ind[1]
    )
    elapsed = time.perf_counter() - t0
    ok = all(finite.values()) and patterns and elapsed < 30
    detail = f"finite norms {sum(finite.values())}/4, checklist patterns ok={patterns}"
    report(4, ok, detail, elapsed, 30)


# a representative subset of the spanning set: one time vector of each length
SELFSIM_TIMES = ((1.0,), (0.25, 2.0), (0.5, 1.0, 2.0))


def test_criterion_05_self_similarity():
    t0 = time.perf_counter()
    worst = 0.0
    converged = True
    for name in registry.REGISTRY:
        spec = registry.build(name)
        s1 = lalpha_increment_norm(spec, 1.0, CFG).value
        for a in SPANNING_SCALES:
            sa = lalpha_increment_norm(spec, a, CFG).value
            worst = max(worst, abs(sa - a**spec.H * s1) / (a**spec.H * s1))
            for t in SELFSIM_TIMES:
                r = self_similarity_residual(spec, a, list(t), _half(spanning_thetas(len(t))), CFG)
                worst = max(worst, float(np.max(r.residual)))
                converged &= r.converged
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and converged and elapsed < 120
    report(5, ok, f"max relative error {worst:.2e} over 5 kernels", elapsed, 120)


def test_criterion_06_stationary_increments():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("tent", "cosine"):
        spec = registry.build(name)
        for h in (0.7, 1.3):
            for t in ((0.25, 1.0), (0.5, 1.0, 2.0)):
                th = _half(spanning_thetas(len(t)))
                r = stationary_increments_residual(spec, h, list(t), th, CFG)
                worst = max(worst, float(np.max(r.residual)))
    elapsed = time.perf_counter() - t0
    report(6, worst <= 1e-3 and elapsed < 60, f"max relative error {worst:.2e}", elapsed, 60)


def test_criterion_07_representations():
    t0 = time.perf_counter()
    spec = registry.build("tent")
    worst = {}
    for rep in ("W", "Winv", "Shift", "ShiftInv"):
        r1 = representation_equivalence(spec, "V", rep, [1.0], [1.0], CFG)
        r2 = representation_equivalence(spec, "V", rep, [0.5, 2.0], [1.0, -0.5], CFG)
        worst[rep] = max(r1.residual, r2.residual)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-3 and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (Winv on the window (e^-q, 1))"
    report(7, ok, detail, elapsed, 60)


def test_criterion_08_classification():
    t0 = time.perf_counter()
    verdicts = {name: classify_cfsm(registry.build(name)).verdicts for name in registry.REGISTRY}
    ok_verdicts = all(verdicts[n] == ["CYCLIC"] for n in EXAMPLES) and verdicts["mixed-lfsm"] == ["FIXED"]
    worst = 0.0
    exact = True
    for name in registry.REGISTRY:
        spec = registry.build(name)
        atom = spec.atoms[0]
        c = math.exp(atom.q / abs(atom.s))
        r = fixed_point_residual(spec, 0, c)
        worst = max(worst, r.residual)
        exact &= math.isclose(r.b, c**spec.kappa * atom.b1, rel_tol=1e-12) and r.a == 0 and r.d == 0
    elapsed = time.perf_counter() - t0
    ok = ok_verdicts and worst <= 1e-10 and exact and elapsed < 120
    detail = f"verdicts ok={ok_verdicts}, period-return residual {worst:.1e}"
    report(8, ok, detail, elapsed, 120)


def test_criterion_09_uniqueness():
    t0 = time.perf_counter()
    cfg = ClassifierConfig()
    specs = {n: registry.build(n) for n in EXAMPLES}
    pair_min = math.inf
    all_different = True
    for i, a in enumerate(EXAMPLES):
        for b in EXAMPLES[i + 1 :]:
            for x, y in ((a, b), (b, a)):
                r = uniqueness_search(specs[x], specs[y], cfg)
                all_different &= r.verdict == "essentially-different"
                pair_min = min(pair_min, r.residual)
    tent = specs["tent"]
    own = uniqueness_search(tent, tent, cfg)
    self_ok = own.residual <= 1e-4 and np.allclose((own.h, own.k, own.g, own.j), (1, 1, 0, 0), atol=1e-6)
    # a transformed copy is recovered up to whole log periods m:
    # k = k0 e^m, g = g0 e^m, h = h0 b1^m e^(-m kappa)
    h0, k0, g0 = 0.7, 2.0, -0.15
    tr = uniqueness_search(TransformedKernel(tent, h=h0, k=k0, g=g0), tent, cfg)
    m = round(math.log(tr.k / k0))
    want = (h0 * math.exp(-m * tent.kappa), k0 * math.exp(m), g0 * math.exp(m))
    tr_ok = tr.residual <= 1e-4 and np.allclose((tr.h, tr.k, tr.g), want, rtol=1e-6)
    elapsed = time.perf_counter() - t0
    ok = all_different and pair_min >= 1e-2 and self_ok and tr_ok and elapsed < 300
    detail = (
        f"12 directed searches min residual {pair_min:.3f}; self {own.residual:.1e}; "
        f"transform {tr.residual:.1e} (m = {m})"
    )
    report(9, ok, detail, elapsed, 300)


def test_criterion_10_simulation():
    t0 = time.perf_counter()
    spec = registry.build("tent")
    grid = SimulationGrid((1.0, 2.0), seed=2024)
    n = 10**5
    ens = simulate_paths(spec, grid, n, threads=1)
    sigma1 = lalpha_increment_norm(spec, 1.0).value
    e1 = empirical_scale(ens, t_index=0, seed=7)
    e2 = empirical_scale(ens, t_index=1, seed=7)
    rel = abs(e1.sigma - sigma1) / sigma1
    # same bootstrap seed, so the replicates are paired resamples of the same paths
    ratio = e2.sigma / e1.sigma
    se = float(np.nanstd(e2.replicates / e1.replicates, ddof=1))
    z = abs(ratio - 2**spec.H) / se
    again = simulate_paths(spec, grid, n, threads=3)
    bitwise = ens.values.tobytes() == again.values.tobytes()
    elapsed = time.perf_counter() - t0
    ok = rel <= 0.05 and z <= 3 and bitwise and elapsed < 180
    detail = (
        f"sigma(1) {e1.sigma:.4f} vs {sigma1:.4f} ({100 * rel:.2f}%), "
        f"ratio {ratio:.4f} vs {2**spec.H:.4f} ({z:.2f} SE), bitwise={bitwise}"
    )
    report(10, ok, detail, elapsed, 180)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
