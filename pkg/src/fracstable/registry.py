"""Named kernel builders: the single-atom examples, the cosine kernel and mixed LFSMs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .kernel import (
    AtomSpec,
    KernelSpec,
    MixedLfsmSpec,
    ProfileFn,
    StableParams,
    constant_profile,
    embed_mixed_lfsm,
)

DEFAULT_ALPHA = 1.6
DEFAULT_H = 0.5


def _single(params: StableParams, profile: ProfileFn, label: str, b1: int = 1) -> KernelSpec:
    atom = AtomSpec(1.0, profile.q, b1, 1.0, profile, constant_profile(0.0, profile.q), 0.0)
    return KernelSpec(params, (atom,), label)


def linear(alpha=DEFAULT_ALPHA, H=DEFAULT_H, slope=1.0, intercept=0.0) -> KernelSpec:
    """``F(u) = u`` on [0, 1), meant for kappa < 0."""
    p = StableParams(alpha, H)
    return _single(p, ProfileFn.make("linear", 1.0, slope=slope, intercept=intercept), "linear")


def tent(alpha=DEFAULT_ALPHA, H=DEFAULT_H, amplitude=1.0) -> KernelSpec:
    """``F(u) = min(u, 1 - u)`` on [0, 1), usable for any kappa."""
    p = StableParams(alpha, H)
    return _single(p, ProfileFn.make("tent", 1.0, amplitude=amplitude), "tent")


def indicator(alpha=DEFAULT_ALPHA, H=DEFAULT_H, start=0.0, stop=0.5, height=1.0) -> KernelSpec:
    """``F(u) = 1{u < 1/2}`` on [0, 1), meant for kappa < 0."""
    p = StableParams(alpha, H)
    return _single(p, ProfileFn.make("indicator", 1.0, start=start, stop=stop, height=height), "indicator")


def gauss_lambda(n: int, lo: float = 1.0, hi: float = 3.0, mass: float = 1.0) -> list[tuple[float, float]]:
    """``n``-point Gauss-Legendre discretisation of ``mass`` spread uniformly over [lo, hi]."""
    if n < 1 or not (0 < lo < hi):
        raise DomainError("need n >= 1 and 0 < lo < hi")
    x, w = np.polynomial.legendre.leggauss(n)
    z = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return [(float(zz), float(mass * ww / 2)) for zz, ww in zip(z, w)]


def cosine(alpha=DEFAULT_ALPHA, H=DEFAULT_H, lambda_atoms: Sequence[tuple[float, float]] | None = None, n_atoms: int | None = None) -> KernelSpec:
    """Harmonizable cosine kernel ``cos(v + z ln|u|) u_+^kappa`` with ``v`` in [0, 2pi).

    Each lambda atom ``(z, weight)`` becomes an atom with period ``2pi``, speed
    ``z`` and profile ``cos``.  The default is a point mass at ``z = 1``;
    ``n_atoms`` discretises a uniform lambda on [1, 3] instead.
    """
    p = StableParams(alpha, H)
    if lambda_atoms is None:
        lambda_atoms = gauss_lambda(n_atoms) if n_atoms else [(1.0, 1.0)]
    q = 2 * math.pi
    atoms = []
    for z, w in lambda_atoms:
        if z == 0:
            raise DomainError("cosine atoms need z != 0 (z = 0 has no oscillation and no speed)")
        f1 = ProfileFn.make("cosine", q, frequency=1.0, phase=0.0, amplitude=1.0)
        atoms.append(AtomSpec(float(w), q, 1, float(z), f1, constant_profile(0.0, q), 0.0))
    return KernelSpec(p, tuple(atoms), "cosine")


def mixed_lfsm(alpha=DEFAULT_ALPHA, H=DEFAULT_H, atoms: Sequence[tuple[float, float, float]] = ((1.0, 1.0, 0.0),)) -> KernelSpec:
    """Mixed LFSM with atoms ``(weight, F1, F2)``, in canonical form."""
    return embed_mixed_lfsm(MixedLfsmSpec(StableParams(alpha, H), tuple(atoms)))


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    builder: Callable[..., KernelSpec]
    summary: str


REGISTRY: dict[str, RegistryEntry] = {
    e.name: e
    for e in (
        RegistryEntry("linear", linear, "F(u) = u on [0,1); well-defined for kappa < 0"),
        RegistryEntry("tent", tent, "F(u) = min(u, 1-u) on [0,1); any kappa"),
        RegistryEntry("indicator", indicator, "F(u) = 1{u < 1/2} on [0,1); well-defined for kappa < 0"),
        RegistryEntry("cosine", cosine, "cos(v + z ln|u|) u_+^kappa, v in [0, 2pi)"),
        RegistryEntry("mixed-lfsm", mixed_lfsm, "F1 (t+u)_+^kappa + F2 (t+u)_-^kappa increments"),
    )
}


def build(name: str, alpha: float = DEFAULT_ALPHA, H: float = DEFAULT_H, **kwargs) -> KernelSpec:
    if name not in REGISTRY:
        raise DomainError(f"unknown registry kernel {name!r}; choose from {sorted(REGISTRY)}")
    return REGISTRY[name].builder(alpha, H, **kwargs)


def example_kernels(alpha: float = DEFAULT_ALPHA, H: float = DEFAULT_H) -> dict[str, KernelSpec]:
    """All five registry kernels at one parameter pair."""
    return {name: build(name, alpha, H) for name in REGISTRY}
