"""Cyclic flows in normal form, their cocycles and semi-additive functionals.

On atom ``z`` with period ``q`` and speed ``s`` the flow is the rotation

    psi_c(v) = {v + s ln c}_q,

and with generators ``b~`` (sign valued), ``g~`` and ``(j~, j~1)`` the three
functionals are

    b_c(v) = b~(psi_c v) / b~(v) * b1^[v + s ln c]_q
    g_c(v) = g~(psi_c v) - c^{-1} g~(v)
    j_c(v) = b_c(v) j~(psi_c v) - c^{-kappa} j~(v) + j~1 [v + s ln c]_q / b~(v)   (b1 = 1, kappa = 0)

Everything rests on ``[x + y]_q = [x]_q + [{x}_q + y]_q``.  The canonical
kernel is generated by the triple with ``b~ = 1``, ``g~ = 0``,
``j~(v) = F3 v / s`` and ``j~1 = F3 q / s``, which collapses to
``j_c = F3 ln c``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .kernel import KernelSpec, StableParams, floor_mod, kernel_values

__all__ = [
    "CyclicFlow",
    "FlowTriple",
    "apply_flow",
    "cocycle_eval",
    "g_eval",
    "j_eval",
    "circular_distance",
    "random_samples",
    "verify_flow_identity",
    "verify_cocycle",
    "verify_semi_additive_1",
    "verify_semi_additive_2",
    "canonical_triple",
    "generation_residual",
]

Generator = Optional[Callable[[np.ndarray], np.ndarray]]

# bracket arguments this close to a multiple of q are treated as the null set
# where rounding decides the branch
_WRAP_SLACK = 1e-12


@dataclass(frozen=True)
class CyclicFlow:
    q: tuple
    s: tuple

    def __post_init__(self):
        if len(self.q) != len(self.s) or not self.q:
            raise DomainError("need one (q, s) pair per atom")
        for i, (q, s) in enumerate(zip(self.q, self.s)):
            if not (math.isfinite(q) and q > 0):
                raise DomainError(f"atom {i}: period must be positive")
            if not math.isfinite(s) or s == 0:
                raise DomainError(f"atom {i}: speed must be finite and nonzero")

    @classmethod
    def from_spec(cls, spec: KernelSpec) -> "CyclicFlow":
        return cls(tuple(a.q for a in spec.atoms), tuple(a.s for a in spec.atoms))

    @property
    def n_atoms(self) -> int:
        return len(self.q)

    def return_time(self, i: int) -> float:
        """Smallest ``c > 1`` with ``psi_c = id`` on atom ``i``."""
        return math.exp(self.q[i] / abs(self.s[i]))


def _log_c(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise DomainError("c must be positive and finite")
    return np.log(c)


def _check_atom(flow: CyclicFlow, i: int) -> None:
    if not 0 <= i < flow.n_atoms:
        raise DomainError(f"atom index {i} out of range")


def _check_v(flow: CyclicFlow, i: int, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v >= flow.q[i]):
        raise DomainError(f"v must lie in [0, {flow.q[i]})")
    return v


def _step(flow: CyclicFlow, i: int, v, logc):
    return floor_mod(v + flow.s[i] * logc, flow.q[i])


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def apply_flow(flow: CyclicFlow, atom_index: int, v, c):
    """``{v + s ln c}_q``; ``v`` and ``c`` broadcast."""
    _check_atom(flow, atom_index)
    v = _check_v(flow, atom_index, v)
    return _out(_step(flow, atom_index, v, _log_c(c))[1])


def circular_distance(x, y, q: float):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % q
    return np.minimum(d, q - d)


@dataclass(frozen=True)
class FlowTriple:
    """A cyclic flow with generators for its cocycle and semi-additive functionals.

    Generators are per-atom vectorised callables on ``[0, q)``; ``None`` means
    the trivial choice (``b~ = 1``, ``g~ = 0``, ``j~ = 0``).
    """

    flow: CyclicFlow
    b1: tuple
    b_tilde: tuple = ()
    g_tilde: tuple = ()
    j_tilde: tuple = ()
    j1: tuple = ()

    def __post_init__(self):
        n = self.flow.n_atoms
        if len(self.b1) != n or any(b not in (-1, 1) for b in self.b1):
            raise DomainError("b1 must hold one value in {-1, 1} per atom")
        for name in ("b_tilde", "g_tilde", "j_tilde"):
            val = getattr(self, name)
            if not val:
                object.__setattr__(self, name, (None,) * n)
            elif len(val) != n:
                raise DomainError(f"{name} needs one entry per atom")
        if not self.j1:
            object.__setattr__(self, "j1", (0.0,) * n)
        elif len(self.j1) != n:
            raise DomainError("j1 needs one entry per atom")

    def _gen(self, name, i, x, default):
        f = getattr(self, name)[i]
        if f is None:
            return np.full(np.shape(x), default, dtype=float)
        return np.asarray(f(x), dtype=float)

    def btil(self, i, x):
        b = self._gen("b_tilde", i, x, 1.0)
        if np.any((b != 1) & (b != -1)):
            raise DomainError("b~ must take values in {-1, 1}")
        return b


def _cocycle(triple, i, v, logc):
    n, f = _step(triple.flow, i, v, logc)
    sign = np.where(np.fmod(n, 2.0) == 0, 1.0, -1.0) if triple.b1[i] == -1 else 1.0
    return triple.btil(i, f) / triple.btil(i, v) * sign, n, f


def cocycle_eval(triple: FlowTriple, atom_index: int, v, c):
    _check_atom(triple.flow, atom_index)
    v = _check_v(triple.flow, atom_index, v)
    b, _, _ = _cocycle(triple, atom_index, v, _log_c(c))
    return _out(b)


def _g(triple, i, v, logc):
    _, f = _step(triple.flow, i, v, logc)
    return triple._gen("g_tilde", i, f, 0.0) - np.exp(-logc) * triple._gen("g_tilde", i, v, 0.0)


def g_eval(triple: FlowTriple, atom_index: int, v, c):
    _check_atom(triple.flow, atom_index)
    v = _check_v(triple.flow, atom_index, v)
    return _out(_g(triple, atom_index, v, _log_c(c)))


def _j(triple, kappa, i, v, logc):
    b, n, f = _cocycle(triple, i, v, logc)
    out = b * triple._gen("j_tilde", i, f, 0.0) - np.exp(-kappa * logc) * triple._gen("j_tilde", i, v, 0.0)
    if triple.b1[i] == 1 and kappa == 0 and triple.j1[i] != 0:
        out = out + triple.j1[i] * n / triple.btil(i, v)
    return out


def j_eval(triple: FlowTriple, params: StableParams, atom_index: int, v, c):
    _check_atom(triple.flow, atom_index)
    v = _check_v(triple.flow, atom_index, v)
    return _out(_j(triple, params.kappa, atom_index, v, _log_c(c)))


# ---------------------------------------------------------------------------
# verification


def random_samples(flow: CyclicFlow, atom_index: int, n: int, rng=None, log_range: float = 3.0) -> np.ndarray:
    """``n`` rows ``(v, c1, c2)`` with ``v`` uniform on ``[0, q)`` and ``ln c`` uniform on +-log_range."""
    rng = np.random.default_rng(rng)
    v = rng.uniform(0, flow.q[atom_index], n)
    c = np.exp(rng.uniform(-log_range, log_range, (n, 2)))
    return np.column_stack([v, c])


def _unpack(flow, i, samples):
    _check_atom(flow, i)
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    if s.shape[1] != 3:
        raise DomainError("samples must be rows (v, c1, c2)")
    v = _check_v(flow, i, s[:, 0])
    return v, _log_c(s[:, 1]), _log_c(s[:, 2])


def _regular(flow, i, v, l1, l2):
    """Mask of samples whose bracket arguments are not at a rounding-ambiguous wrap."""
    q, s = flow.q[i], flow.s[i]
    _, f1 = floor_mod(v + s * l1, q)
    ok = np.ones(v.shape, bool)
    for x in (v + s * (l1 + l2), v + s * l1, f1 + s * l2):
        _, r = floor_mod(x, q)
        ok &= np.minimum(r, q - r) > _WRAP_SLACK * (1 + np.abs(x))
    skipped = int(np.sum(~ok))
    if skipped:
        warnings.warn(f"{skipped} sample(s) sit on a wrap point and were skipped", RuntimeWarning, stacklevel=3)
    return ok


def _max(x) -> float:
    return float(np.max(x)) if np.size(x) else 0.0


def verify_flow_identity(flow: CyclicFlow, samples, atom_index: int = 0) -> float:
    """max circular distance between ``psi_{c1 c2}(v)`` and ``psi_{c1}(psi_{c2}(v))``."""
    v, l1, l2 = _unpack(flow, atom_index, samples)
    _, lhs = _step(flow, atom_index, v, l1 + l2)
    _, inner = _step(flow, atom_index, v, l2)
    _, rhs = _step(flow, atom_index, inner, l1)
    return _max(circular_distance(lhs, rhs, flow.q[atom_index]))


def verify_cocycle(triple: FlowTriple, samples, atom_index: int = 0) -> float:
    """max ``|b_{c1c2}(v) - b_{c1}(v) b_{c2}(psi_{c1} v)|`` (so 0 or 2)."""
    flow = triple.flow
    v, l1, l2 = _unpack(flow, atom_index, samples)
    ok = _regular(flow, atom_index, v, l1, l2)
    v, l1, l2 = v[ok], l1[ok], l2[ok]
    lhs, _, _ = _cocycle(triple, atom_index, v, l1 + l2)
    b1, _, f1 = _cocycle(triple, atom_index, v, l1)
    b2, _, _ = _cocycle(triple, atom_index, f1, l2)
    return _max(np.abs(lhs - b1 * b2))


def verify_semi_additive_1(triple: FlowTriple, samples, atom_index: int = 0) -> float:
    """max ``|g_{c1c2}(v) - c2^{-1} g_{c1}(v) - g_{c2}(psi_{c1} v)|``."""
    flow = triple.flow
    v, l1, l2 = _unpack(flow, atom_index, samples)
    ok = _regular(flow, atom_index, v, l1, l2)
    v, l1, l2 = v[ok], l1[ok], l2[ok]
    _, f1 = _step(flow, atom_index, v, l1)
    lhs = _g(triple, atom_index, v, l1 + l2)
    rhs = np.exp(-l2) * _g(triple, atom_index, v, l1) + _g(triple, atom_index, f1, l2)
    return _max(np.abs(lhs - rhs))


def verify_semi_additive_2(triple: FlowTriple, params: StableParams, samples, atom_index: int = 0) -> float:
    """max ``|j_{c1c2}(v) - c2^{-kappa} j_{c1}(v) - b_{c1}(v) j_{c2}(psi_{c1} v)|``."""
    flow = triple.flow
    kappa = params.kappa
    v, l1, l2 = _unpack(flow, atom_index, samples)
    ok = _regular(flow, atom_index, v, l1, l2)
    v, l1, l2 = v[ok], l1[ok], l2[ok]
    b1, _, f1 = _cocycle(triple, atom_index, v, l1)
    lhs = _j(triple, kappa, atom_index, v, l1 + l2)
    rhs = np.exp(-kappa * l2) * _j(triple, kappa, atom_index, v, l1) + b1 * _j(triple, kappa, atom_index, f1, l2)
    return _max(np.abs(lhs - rhs))


# ---------------------------------------------------------------------------
# generation of the canonical kernel


def canonical_triple(spec: KernelSpec) -> FlowTriple:
    """The triple generating ``spec``: ``b_c = b1^[v + s ln c]_q``, ``g = 0``, ``j_c = F3 ln c``."""
    flow = CyclicFlow.from_spec(spec)
    kappa = spec.kappa
    jt, j1 = [], []
    for a in spec.atoms:
        if a.log_active(kappa):
            # j~(v) = F3 v / s and j~1 = F3 q / s telescope to F3 ln c
            jt.append(lambda x, k=a.F3 / a.s: k * np.asarray(x, dtype=float))
            j1.append(a.F3 * a.q / a.s)
        else:
            jt.append(None)
            j1.append(0.0)
    return FlowTriple(flow, tuple(a.b1 for a in spec.atoms), j_tilde=tuple(jt), j1=tuple(j1))


def default_grid(spec: KernelSpec, n: int = 1000, rng=None) -> np.ndarray:
    """Rows ``(atom, v, u)`` with ``v`` uniform and ``ln|u|`` uniform on [-4, 4], random sign."""
    rng = np.random.default_rng(rng)
    atoms = rng.integers(0, len(spec.atoms), n)
    q = np.array([a.q for a in spec.atoms])[atoms]
    v = rng.uniform(0, 1, n) * q
    u = np.exp(rng.uniform(-4, 4, n)) * rng.choice([-1.0, 1.0], n)
    return np.column_stack([atoms, v, u])


def generation_residual(
    spec: KernelSpec,
    c_list: Sequence[float],
    grid=None,
    triple: FlowTriple | None = None,
    rng=None,
) -> float:
    """max relative residual of ``c^{-kappa} G(v, c u) = b_c(v) G(psi_c v, u) + j_c(v)``.

    Residuals are measured against the local envelope ``|u|^kappa sup|F|``
    (plus the log term when active) or the size of either side, whichever is
    larger.

    Grid points at ``u = 0`` (and points on a wrap of the bracket) are skipped
    with a warning.
    """
    triple = triple or canonical_triple(spec)
    grid = default_grid(spec, rng=rng) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != 3:
        raise DomainError("grid rows must be (atom, v, u)")
    kappa = spec.kappa
    worst = 0.0
    zero = grid[:, 2] == 0
    if np.any(zero):
        warnings.warn(f"{int(zero.sum())} singular grid point(s) at u = 0 skipped", RuntimeWarning, stacklevel=2)
    for c in c_list:
        logc = float(_log_c(c))
        if logc == 0:
            continue
        for i, atom in enumerate(spec.atoms):
            sel = (grid[:, 0] == i) & ~zero
            if not np.any(sel):
                continue
            v = _check_v(triple.flow, i, grid[sel, 1])
            u = grid[sel, 2]
            lu = np.log(np.abs(u))
            # the two bracket evaluations must land on the same branch
            ok = np.ones(v.shape, bool)
            for x in (v + atom.s * logc, v + atom.s * (logc + lu)):
                _, r = floor_mod(x, atom.q)
                ok &= np.minimum(r, atom.q - r) > _WRAP_SLACK * (1 + np.abs(x))
            if not np.all(ok):
                warnings.warn(f"{int((~ok).sum())} grid point(s) on a wrap skipped", RuntimeWarning, stacklevel=2)
            v, u = v[ok], u[ok]
            b, _, f = _cocycle(triple, i, v, logc)
            j = _j(triple, kappa, i, v, logc)
            lhs = math.exp(-kappa * logc) * kernel_values(atom, kappa, v, c * u)
            rhs = b * kernel_values(atom, kappa, f, u) + j
            # relative to the local size of the kernel, so zero crossings of F do not blow up
            env = np.abs(u) ** kappa * max(atom.F1.sup_abs(), atom.F2.sup_abs())
            if atom.log_active(kappa):
                env = env + abs(atom.F3) * (np.abs(np.log(np.abs(c * u))) + np.abs(lu))
            scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.abs(j), env, np.full(lhs.shape, 1e-300)])
            worst = max(worst, _max(np.abs(lhs - rhs) / scale))
    return worst
