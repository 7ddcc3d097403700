"""Deterministic finite-dimensional laws: characteristic exponents and identity residuals.

An SaS vector ``(X(t_1), ..., X(t_n))`` has ``E exp(i sum theta_j X(t_j)) =
exp(-Psi(t, theta))``, so self-similarity and stationarity of increments can
be checked exactly (up to quadrature) on ``Psi`` instead of on samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentIntegralError, DomainError
from .exponent import FORMS, joint_exponent
from .kernel import KernelSpec
from .quadrature import QuadratureConfig

__all__ = [
    "ExponentEntry",
    "CharFunctionalReport",
    "ResidualReport",
    "char_exponent",
    "self_similarity_residual",
    "stationary_increments_residual",
    "representation_equivalence",
    "spanning_times",
    "spanning_thetas",
    "SPANNING_SCALES",
]

SPANNING_POINTS = (0.25, 0.5, 1.0, 2.0)
SPANNING_SCALES = (0.5, 2.0, math.e)
SPANNING_COEFS = (1.0, -1.0, 0.5, -0.5)


def spanning_times(max_len: int = 3) -> list[tuple[float, ...]]:
    """Increasing time vectors of length 1..max_len drawn from {1/4, 1/2, 1, 2}."""
    out = []
    for n in range(1, max_len + 1):
        out.extend(itertools.combinations(SPANNING_POINTS, n))
    return out


def spanning_thetas(n: int) -> np.ndarray:
    """All of {+-1, +-1/2}^n, one per row."""
    return np.array(list(itertools.product(SPANNING_COEFS, repeat=n)), dtype=float)


@dataclass
class ExponentEntry:
    t: tuple
    theta: tuple
    psi: float
    error_estimate: float
    converged: bool


@dataclass
class CharFunctionalReport:
    entries: list
    residuals: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        if len(self.entries) != 1:
            raise DomainError("report holds several entries; index .entries instead")
        return self.entries[0].psi

    @property
    def values(self) -> np.ndarray:
        return np.array([e.psi for e in self.entries])

    @property
    def converged(self) -> bool:
        return all(e.converged for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "t": list(e.t),
                    "theta": list(e.theta),
                    "psi": e.psi,
                    "error_estimate": e.error_estimate,
                    "converged": e.converged,
                }
                for e in self.entries
            ],
            "residuals": self.residuals,
        }


@dataclass
class ResidualReport:
    """A relative residual (scalar, or one per theta row) and whether both sides converged."""

    residual: object
    converged: bool
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.atleast_1d(self.residual)))

    def to_dict(self) -> dict:
        r = self.residual
        return {
            "residual": r.tolist() if isinstance(r, np.ndarray) else r,
            "max_residual": self.max_residual,
            "converged": self.converged,
            **self.details,
        }


def _thetas(t, theta) -> tuple[np.ndarray, np.ndarray, bool]:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    th = np.asarray(theta, dtype=float)
    single = th.ndim == 1
    th = np.atleast_2d(th)
    if t.size < 1 or th.shape[1] != t.size:
        raise DomainError("t and theta must have the same positive length")
    return t, th, single


def _psi(spec, t, th, cfg, form="V", window="natural"):
    res = joint_exponent(spec, t, th, cfg, form=form, window=window)
    if np.any(res.divergent):
        raise DivergentIntegralError("the kernel is not in L^alpha: the process is ill-defined")
    return res


def char_exponent(
    spec: KernelSpec, t, theta, cfg: QuadratureConfig | None = None, form: str = "V"
) -> CharFunctionalReport:
    """``Psi(t, theta)``; ``theta`` may be one vector or a matrix with one vector per row."""
    cfg = cfg or QuadratureConfig()
    t, th, _ = _thetas(t, theta)
    res = _psi(spec, t, th, cfg, form)
    entries = [
        ExponentEntry(tuple(t.tolist()), tuple(row.tolist()), float(v), float(e), bool(c))
        for row, v, e, c in zip(th, res.values, res.errors, res.converged)
    ]
    return CharFunctionalReport(entries)


def _rel(a, b, floor):
    return np.abs(a - b) / np.maximum(np.abs(b), floor)


def _pack(residual, single):
    return float(residual[0]) if single else residual


def self_similarity_residual(
    spec: KernelSpec, a: float, t, theta, cfg: QuadratureConfig | None = None, floor: float = 1e-300
) -> ResidualReport:
    """``|Psi(a t, theta) - a^{alpha H} Psi(t, theta)| / Psi(t, theta)``."""
    cfg = cfg or QuadratureConfig()
    if not (math.isfinite(a) and a > 0):
        raise DomainError("a must be positive")
    t, th, single = _thetas(t, theta)
    base = _psi(spec, t, th, cfg)
    if a == 1:
        return ResidualReport(_pack(np.zeros(len(th)), single), bool(np.all(base.converged)))
    scaled = _psi(spec, a * t, th, cfg)
    r = _rel(scaled.values, a ** (spec.alpha * spec.H) * base.values, floor)
    return ResidualReport(
        _pack(r, single),
        bool(np.all(base.converged) and np.all(scaled.converged)),
        {"a": a, "psi_t": base.values.tolist(), "psi_at": scaled.values.tolist()},
    )


def _recombined(t, th):
    """Coefficients of ``sum_j theta_j (X(t_j) - X(t_1))`` on the times ``t``."""
    c = th.copy()
    c[:, 0] = th[:, 0] - th.sum(axis=1)
    return c


def stationary_increments_residual(
    spec: KernelSpec, h: float, t, theta, cfg: QuadratureConfig | None = None, floor: float = 1e-300
) -> ResidualReport:
    """Compare ``sum theta_j (X(t_j + h) - X(t_1 + h))`` with the unshifted combination."""
    cfg = cfg or QuadratureConfig()
    if not math.isfinite(h):
        raise DomainError("h must be finite")
    t, th, single = _thetas(t, theta)
    if np.any(np.diff(t) <= 0):
        raise DomainError("t must be strictly increasing")
    c = _recombined(t, th)
    base = _psi(spec, t, c, cfg)
    if h == 0:
        return ResidualReport(_pack(np.zeros(len(th)), single), bool(np.all(base.converged)))
    shifted = _psi(spec, t + h, c, cfg)
    r = _rel(shifted.values, base.values, floor)
    return ResidualReport(
        _pack(r, single),
        bool(np.all(base.converged) and np.all(shifted.converged)),
        {"h": h, "psi": base.values.tolist(), "psi_shifted": shifted.values.tolist()},
    )


def representation_equivalence(
    spec: KernelSpec,
    rep_a: str,
    rep_b: str,
    t,
    theta,
    cfg: QuadratureConfig | None = None,
    window: str = "natural",
    floor: float = 1e-300,
) -> ResidualReport:
    """Relative difference of ``Psi`` computed under two of the five parameterisations."""
    cfg = cfg or QuadratureConfig()
    for r in (rep_a, rep_b):
        if r not in FORMS:
            raise DomainError(f"unknown representation {r!r}; expected one of {FORMS}")
    t, th, single = _thetas(t, theta)
    pa = _psi(spec, t, th, cfg, rep_a, window)
    pb = _psi(spec, t, th, cfg, rep_b, window)
    r = np.where((pa.values == 0) & (pb.values == 0), 0.0, _rel(pb.values, pa.values, floor))
    return ResidualReport(
        _pack(r, single),
        bool(np.all(pa.converged) and np.all(pb.converged)),
        {rep_a: pa.values.tolist(), rep_b: pb.values.tolist(), "window": window},
    )
