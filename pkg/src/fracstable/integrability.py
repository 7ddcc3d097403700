"""Well-definedness: increment norms, the C^q norm and the sufficient-condition checklist."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError
from .exponent import joint_exponent
from .kernel import AtomSpec, KernelSpec, StableParams, normalize_speed
from .quadrature import QuadratureConfig

__all__ = [
    "QuadratureConfig",
    "NormReport",
    "ConditionCheck",
    "Checklist",
    "cq_norm",
    "lalpha_increment_norm",
    "sufficient_conditions",
    "harmonizable_bound",
]


@dataclass
class NormReport:
    """Outcome of a norm computation.

    ``value`` is ``inf`` when the integral was judged divergent.  A report that
    is neither converged nor divergent is inconclusive.
    """

    value: float
    converged: bool
    error_estimate: float
    divergent: bool = False
    pieces: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.divergent:
            return "divergent"
        return "converged" if self.converged else "inconclusive"

    @property
    def finite(self) -> bool:
        return self.converged and not self.divergent

    def to_dict(self) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else None,
            "converged": self.converged,
            "error_estimate": self.error_estimate,
            "status": self.status,
        }


def _root_report(power: float, err: float, div: bool, conv: bool, alpha: float, cfg, pieces) -> NormReport:
    if div:
        return NormReport(math.inf, False, math.inf, True, pieces)
    power = max(power, 0.0)
    value = power ** (1 / alpha)
    if power > 0:
        # first-order propagation through x -> x^(1/alpha)
        root_err = value * err / (alpha * power)
    else:
        root_err = err ** (1 / alpha)
    # judged on the root itself; engine-level misses are already in err
    conv = root_err <= max(cfg.abs_tol, cfg.rel_tol * value)
    return NormReport(value, bool(conv), float(root_err), False, pieces)


def lalpha_increment_norm(spec: KernelSpec, t: float, cfg: QuadratureConfig | None = None) -> NormReport:
    """Scale parameter ``sigma(t)`` of ``X(t)``: the L^alpha norm of ``G_t``."""
    cfg = cfg or QuadratureConfig()
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    if t == 0 or spec.is_zero():
        return NormReport(0.0, True, 0.0)
    res = joint_exponent(spec, [t], [[1.0]], cfg, form="V")
    pieces = _atom_pieces(res.pieces)
    return _root_report(res.values[0], res.errors[0], res.divergent[0], res.converged[0], spec.alpha, cfg, pieces)


def cq_norm(spec: KernelSpec, cfg: QuadratureConfig | None = None) -> NormReport:
    """The C^q norm of the ring kernel (the alpha-th root of the double integral).

    Computed as ``sum weight * int_1^{e^q} h^{-alpha H - 1} ||K(. + h) - K||^alpha dh``
    with Gauss-Legendre panels on dyadic pieces of the h-range; atoms with a
    speed other than 1 are first brought to unit speed.
    """
    cfg = cfg or QuadratureConfig()
    if spec.is_zero():
        return NormReport(0.0, True, 0.0)
    spec = normalize_speed(spec)
    res = joint_exponent(spec, [1.0], [[1.0]], cfg, form="Shift")
    pieces = _atom_pieces(res.pieces)
    return _root_report(res.values[0], res.errors[0], res.divergent[0], res.converged[0], spec.alpha, cfg, pieces)


def _atom_pieces(raw) -> list:
    """Collapse the engine's per-segment diagnostics into per-atom, per-side sums."""
    acc: dict = {}
    for atom, _line, _center, direction, vals in raw:
        key = (atom, int(direction))
        acc.setdefault(key, []).append(float(np.asarray(vals).ravel()[0]))
    return [
        {"atom": a, "side": "right" if d > 0 else "left", "raw_sum": math.fsum(v)}
        for (a, d), v in sorted(acc.items())
    ]


# ---------------------------------------------------------------------------
# sufficient conditions


@dataclass
class ConditionCheck:
    name: str
    required: bool
    passed: dict  # profile name -> bool
    detail: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


@dataclass
class Checklist:
    kappa: float
    checks: list

    @property
    def sufficient(self) -> bool:
        return all(c.ok for c in self.checks if c.required)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "verdict": "sufficient" if self.sufficient else "not-established",
            "conditions": {
                c.name: {"required": c.required, "passed": c.ok, "profiles": c.passed, "detail": c.detail}
                for c in self.checks
            },
        }


def sufficient_conditions(atom: AtomSpec, params: StableParams) -> Checklist:
    """Checklist of bounded profiles (s1), bounded derivatives (s2), matching ends (s3).

    s3 only enters the verdict when ``kappa >= 0``.  A failed checklist does
    not mean the process is ill-defined; the conditions are only sufficient.
    """
    kappa = params.kappa
    profiles = {"F1": atom.F1, "F2": atom.F2}
    s1 = ConditionCheck(
        "s1",
        True,
        {k: math.isfinite(p.sup_abs()) for k, p in profiles.items()},
        {k: {"sup_abs": p.sup_abs()} for k, p in profiles.items()},
    )
    s2 = ConditionCheck(
        "s2",
        True,
        {k: p.absolutely_continuous() and math.isfinite(p.sup_abs_derivative()) for k, p in profiles.items()},
        {
            k: {"absolutely_continuous": p.absolutely_continuous(), "ess_sup_derivative": p.sup_abs_derivative()}
            for k, p in profiles.items()
        },
    )
    s3_pass, s3_detail = {}, {}
    for k, p in profiles.items():
        f0, fq = p.value_at_zero(), p.left_limit_at_q()
        scale = max(1.0, abs(f0), abs(fq))
        s3_pass[k] = abs(f0 - atom.b1 * fq) <= 1e-12 * scale
        s3_detail[k] = {"F(0)": f0, "F(q-)": fq, "b1": atom.b1}
    s3 = ConditionCheck("s3", kappa >= 0, s3_pass, s3_detail)
    return Checklist(kappa, [s1, s2, s3])


# ---------------------------------------------------------------------------
# harmonizable cosine kernel


def _bound_integrals(kappa: float, alpha: float) -> tuple[float, float, float]:
    """The two one-dimensional integrals of the cosine-kernel bound, at t = 1."""

    def f1(u):
        return abs((1 + u) ** kappa - (u ** kappa if u > 0 else 0.0)) ** alpha

    def f2(u):
        return u ** (kappa * alpha) * math.log1p(1 / u) ** alpha

    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-10)
    a1, e1 = integrate.quad(f1, -1, 0, **opts)
    b1, e2 = integrate.quad(f1, 0, 1, **opts)
    c1, e3 = integrate.quad(f1, 1, np.inf, **opts)
    a2, e4 = integrate.quad(f2, 0, 1, **opts)
    b2, e5 = integrate.quad(f2, 1, np.inf, **opts)
    return a1 + b1 + c1, a2 + b2, e1 + e2 + e3 + e4 + e5


def harmonizable_bound(lambda_atoms: Sequence[tuple[float, float]], params: StableParams) -> NormReport:
    """Upper bound on ``sigma(1)^alpha`` for the cosine kernel with ``lambda = sum w_k delta_{z_k}``.

    ``lambda_atoms`` holds ``(z, weight)`` pairs.  The bound is
    ``2pi 2^alpha (sum w) I1 + 2pi 2^alpha (sum |z|^alpha w) I2`` with
    ``I1 = int |(1+u)_+^kappa - u_+^kappa|^alpha du`` and
    ``I2 = int u_+^{kappa alpha} |ln|1+u| - ln|u||^alpha du``; the factor ``2pi``
    is the v-range, which the integrand does not depend on.
    """
    alpha, kappa = params.alpha, params.kappa
    mass = []
    moment = []
    for i, (z, w) in enumerate(lambda_atoms):
        if not (math.isfinite(z) and math.isfinite(w)) or w < 0:
            raise DomainError(f"lambda atom {i} must have finite z and nonnegative finite weight")
        mass.append(w)
        moment.append(abs(z) ** alpha * w)
    m0, m1 = math.fsum(mass), math.fsum(moment)
    if not (math.isfinite(m0) and math.isfinite(m1)):
        raise DomainError("lambda must have finite mass and finite alpha-moment")
    if m0 == 0:
        return NormReport(0.0, True, 0.0)
    i1, i2, err = _bound_integrals(kappa, alpha)
    c = 2 * math.pi * 2 ** alpha
    value = c * (m0 * i1 + m1 * i2)
    return NormReport(value, True, c * (m0 + m1) * err, False, [{"I1": i1, "I2": i2, "mass": m0, "moment": m1}])
