"""Scalar primitives, profile functions and the canonical PFSM kernel.

The canonical kernel of an atom with data ``(q, b1, s, F1, F2, F3)`` is::

    G(v, u) = b1**[v + s ln|u|]_q * (F1({v + s ln|u|}_q) u_+^kappa
                                     + F2({v + s ln|u|}_q) u_-^kappa)
              + 1{b1 = 1} 1{kappa = 0} F3 ln|u|

with ``[x]_a`` / ``{x}_a`` the integer and fractional parts modulo ``a`` and
``kappa = H - 1/alpha``.  ``Z`` is always a finite set of weighted atoms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError, SingularPointError, SpecError

__all__ = [
    "int_part",
    "frac_part",
    "floor_mod",
    "signed_power",
    "StableParams",
    "ProfileFn",
    "AtomSpec",
    "KernelSpec",
    "MixedLfsmSpec",
    "constant_profile",
    "kernel_values",
    "eval_G",
    "eval_K",
    "eval_increment",
    "embed_mixed_lfsm",
    "normalize_speed",
    "spec_to_dict",
    "spec_from_dict",
    "load_spec",
    "dump_spec",
]


# ---------------------------------------------------------------------------
# scalar primitives


def _check_modulus(x: float, a: float) -> None:
    if not (math.isfinite(x) and math.isfinite(a)):
        raise DomainError(f"non-finite input x={x!r}, a={a!r}")
    if a <= 0:
        raise DomainError(f"modulus must be positive, got a={a!r}")


def int_part(x: float, a: float) -> int:
    """Return ``max{n : n*a <= x}``."""
    return _int_frac(float(x), float(a))[0]


def frac_part(x: float, a: float) -> float:
    """Return ``x - a*int_part(x, a)``, always in ``[0, a)``."""
    return _int_frac(float(x), float(a))[1]


def _int_frac(x: float, a: float) -> tuple[int, float]:
    _check_modulus(x, a)
    # fmod is exact; the remaining corrections only move f across [0, a).
    f = math.fmod(x, a)
    n = round((x - f) / a)
    if f < 0:
        f += a
        n -= 1
    if f >= a:
        f = 0.0
        n += 1
    return int(n), f


def floor_mod(x, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(int_part, frac_part)``; the integer part is returned as float."""
    x = np.asarray(x, dtype=float)
    f = np.fmod(x, a)
    n = np.round((x - f) / a)
    neg = f < 0
    f = np.where(neg, f + a, f)
    n = np.where(neg, n - 1.0, n)
    over = f >= a
    f = np.where(over, 0.0, f)
    n = np.where(over, n + 1.0, n)
    return n, f


def signed_power(u: float, kappa: float, side: str) -> float:
    """``u_+^kappa`` or ``u_-^kappa``.

    For ``kappa == 0`` these are the indicators of ``(0, inf)`` and
    ``(-inf, 0]``.  For ``kappa != 0`` both sides vanish at ``u = 0``.
    """
    if not (math.isfinite(u) and math.isfinite(kappa)):
        raise DomainError("non-finite input")
    if side not in ("plus", "minus"):
        raise DomainError(f"side must be 'plus' or 'minus', got {side!r}")
    if kappa == 0:
        if side == "plus":
            return 1.0 if u > 0 else 0.0
        return 1.0 if u <= 0 else 0.0
    if side == "plus":
        return abs(u) ** kappa if u > 0 else 0.0
    return abs(u) ** kappa if u < 0 else 0.0


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class StableParams:
    alpha: float
    H: float

    def __post_init__(self):
        if not (0 < self.alpha < 2):
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if not (0 < self.H < 1):
            raise DomainError(f"H must lie in (0, 1), got {self.H!r}")

    @property
    def kappa(self) -> float:
        k = self.H - 1.0 / self.alpha
        # H == 1/alpha written in decimal should land exactly on the kappa = 0 branch
        if abs(k) <= 4 * np.finfo(float).eps * max(self.H, 1.0 / self.alpha):
            return 0.0
        return k


# ---------------------------------------------------------------------------
# profile functions on [0, q)

_PROFILE_PARAMS: dict[str, tuple[str, ...]] = {
    "linear": ("slope", "intercept"),
    "tent": ("amplitude",),
    "indicator": ("start", "stop", "height"),
    "cosine": ("frequency", "phase", "amplitude"),
    "constant": ("value",),
    "tabulated": ("x", "y"),
}


def _profile_defaults(family: str, q: float) -> dict[str, Any]:
    return {
        "linear": {"slope": 1.0, "intercept": 0.0},
        "tent": {"amplitude": 1.0},
        "indicator": {"start": 0.0, "stop": 0.5 * q, "height": 1.0},
        "cosine": {"frequency": 2 * math.pi / q, "phase": 0.0, "amplitude": 1.0},
        "constant": {"value": 0.0},
        "tabulated": {},
    }[family]


def _contains_grid_point(lo: float, hi: float, offset: float, step: float) -> bool:
    """Whether ``offset + k*step`` lies in ``[lo, hi]`` for some integer ``k``."""
    k = math.ceil((lo - offset) / step)
    return offset + k * step <= hi


@dataclass(frozen=True)
class ProfileFn:
    """A profile ``F: [0, q) -> R`` from a closed-form family.

    Families and parameters (``x`` in absolute units on ``[0, q)``):

    ``linear``     ``intercept + slope*x``
    ``tent``       ``amplitude*min(x, q - x)``
    ``indicator``  ``height*1{start <= x < stop}``
    ``cosine``     ``amplitude*cos(frequency*x + phase)``
    ``constant``   ``value``
    ``tabulated``  piecewise linear through knots ``(x, y)`` with ``x[0] = 0``,
                   ``x[-1] = q``; a repeated abscissa encodes a jump.
    """

    family: str
    q: float
    params: tuple = field(default=())

    def __post_init__(self):
        if self.family not in _PROFILE_PARAMS:
            raise DomainError(f"unknown profile family {self.family!r}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise DomainError(f"profile period must be positive, got {self.q!r}")
        p = _profile_defaults(self.family, self.q)
        given = dict(self.params)
        unknown = set(given) - set(_PROFILE_PARAMS[self.family])
        if unknown:
            raise DomainError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        p.update(given)
        if self.family == "tabulated":
            p = self._validated_table(p)
        else:
            for k, v in p.items():
                if not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise DomainError(f"parameter {k} must be a finite number")
                p[k] = float(v)
        object.__setattr__(self, "params", tuple(sorted(p.items())))

    def _validated_table(self, p):
        if "x" not in p or "y" not in p:
            raise DomainError("tabulated profile needs knots 'x' and 'y'")
        x = tuple(float(v) for v in p["x"])
        y = tuple(float(v) for v in p["y"])
        if len(x) != len(y) or len(x) < 2:
            raise DomainError("tabulated knots need equal lengths >= 2")
        if not all(math.isfinite(v) for v in x + y):
            raise DomainError("tabulated knots must be finite")
        if any(b < a for a, b in zip(x, x[1:])):
            raise DomainError("tabulated abscissae must be nondecreasing")
        if any(a == b == c for a, b, c in zip(x, x[1:], x[2:])):
            raise DomainError("an abscissa may repeat at most once")
        tol = 1e-12 * self.q
        if abs(x[0]) > tol or abs(x[-1] - self.q) > tol:
            raise DomainError("tabulated abscissae must span exactly [0, q]")
        return {"x": x, "y": y}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def make(cls, family: str, q: float, **params) -> "ProfileFn":
        return cls(family, float(q), tuple(sorted(params.items())))

    def p(self, name: str):
        return dict(self.params)[name]

    def as_dict(self) -> dict:
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params}
        return {"family": self.family, "params": params}

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size and (np.min(x) < 0 or np.max(x) >= self.q):
            raise DomainError("profile evaluated outside [0, q); reduce modulo q first")
        return self._eval(x)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        f, q = self.family, self.q
        if f == "linear":
            return self.p("intercept") + self.p("slope") * x
        if f == "tent":
            return self.p("amplitude") * np.minimum(x, q - x)
        if f == "indicator":
            inside = (x >= self.p("start")) & (x < self.p("stop"))
            return np.where(inside, self.p("height"), 0.0)
        if f == "cosine":
            return self.p("amplitude") * np.cos(self.p("frequency") * x + self.p("phase"))
        if f == "constant":
            return np.full_like(x, self.p("value"))
        xs = np.asarray(self.p("x"))
        ys = np.asarray(self.p("y"))
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        dx = xs[i + 1] - xs[i]
        w = np.where(dx > 0, (x - xs[i]) / np.where(dx > 0, dx, 1.0), 0.0)
        return ys[i] + w * (ys[i + 1] - ys[i])

    def value_at_zero(self) -> float:
        return float(self._eval(np.array([0.0]))[0])

    def left_limit_at_q(self) -> float:
        """The exact value ``F(q-)``."""
        f, q = self.family, self.q
        if f == "linear":
            return self.p("intercept") + self.p("slope") * q
        if f == "tent":
            return 0.0
        if f == "indicator":
            start, stop = self.p("start"), self.p("stop")
            return self.p("height") if (start < q <= stop) else 0.0
        if f == "cosine":
            return self.p("amplitude") * math.cos(self.p("frequency") * q + self.p("phase"))
        if f == "constant":
            return self.p("value")
        return self.p("y")[-1]

    def is_zero(self) -> bool:
        if self.family == "constant":
            return self.p("value") == 0.0
        if self.family == "tabulated":
            return all(v == 0.0 for v in self.p("y"))
        key = {"linear": None, "tent": "amplitude", "indicator": "height", "cosine": "amplitude"}
        k = key[self.family]
        if k is None:
            return self.p("slope") == 0.0 and self.p("intercept") == 0.0
        return self.p(k) == 0.0 or (
            self.family == "indicator" and min(self.p("stop"), self.q) <= max(self.p("start"), 0.0)
        )

    def breakpoints(self) -> tuple[float, ...]:
        """Points of ``(0, q)`` where the profile is not smooth (``0`` excluded)."""
        q = self.q
        if self.family == "tent":
            pts = [q / 2]
        elif self.family == "indicator":
            pts = [self.p("start"), self.p("stop")]
        elif self.family == "tabulated":
            pts = list(self.p("x"))
        else:
            pts = []
        return tuple(sorted({float(x) for x in pts if 0 < x < q}))

    # -- exact bounds used by the sufficient-condition checklist -------------

    def sup_abs(self) -> float:
        f, q = self.family, self.q
        if f == "linear":
            b, m = self.p("intercept"), self.p("slope")
            return max(abs(b), abs(b + m * q))
        if f == "tent":
            return abs(self.p("amplitude")) * q / 2
        if f == "indicator":
            return abs(self.p("height")) if not self.is_zero() else 0.0
        if f == "cosine":
            a, w, ph = self.p("amplitude"), self.p("frequency"), self.p("phase")
            lo, hi = sorted((ph, ph + w * q))
            if _contains_grid_point(lo, hi, 0.0, math.pi):
                return abs(a)
            return abs(a) * max(abs(math.cos(lo)), abs(math.cos(hi)))
        if f == "constant":
            return abs(self.p("value"))
        return max(abs(v) for v in self.p("y"))

    def absolutely_continuous(self) -> bool:
        if self.family == "indicator":
            if self.is_zero():
                return True
            return self.p("start") <= 0 and self.p("stop") >= self.q
        if self.family == "tabulated":
            xs, ys = self.p("x"), self.p("y")
            return not any(x0 == x1 and y0 != y1 for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]))
        return True

    def sup_abs_derivative(self) -> float:
        """Essential supremum of ``|F'|`` on ``[0, q)``.

        Jumps do not enter (they are a failure of absolute continuity, reported
        separately); for tabulated profiles the value is exact because the
        interpolant is piecewise linear.
        """
        f, q = self.family, self.q
        if f == "linear":
            return abs(self.p("slope"))
        if f == "tent":
            return abs(self.p("amplitude"))
        if f in ("indicator", "constant"):
            return 0.0
        if f == "cosine":
            a, w, ph = self.p("amplitude"), self.p("frequency"), self.p("phase")
            lo, hi = sorted((ph, ph + w * q))
            if _contains_grid_point(lo, hi, math.pi / 2, math.pi):
                return abs(a * w)
            return abs(a * w) * max(abs(math.sin(lo)), abs(math.sin(hi)))
        xs, ys = self.p("x"), self.p("y")
        slopes = [abs((y1 - y0) / (x1 - x0)) for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]) if x1 > x0]
        return max(slopes, default=0.0)

    # -- reparametrisations --------------------------------------------------

    def stretched(self, factor: float) -> "ProfileFn":
        """Profile ``x -> F(factor*x)`` on ``[0, q/factor)``."""
        if not factor > 0:
            raise DomainError("stretch factor must be positive")
        f, q = self.family, self.q / factor
        d = dict(self.params)
        if f == "linear":
            d["slope"] *= factor
        elif f == "tent":
            d["amplitude"] *= factor
        elif f == "indicator":
            d["start"] /= factor
            d["stop"] /= factor
        elif f == "cosine":
            d["frequency"] *= factor
        elif f == "tabulated":
            xs = [x / factor for x in d["x"]]
            xs[-1] = q
            d["x"] = tuple(xs)
        return ProfileFn(f, q, tuple(sorted(d.items())))

    def reflected(self) -> "ProfileFn":
        """Profile ``x -> F(q - x)`` (equal almost everywhere)."""
        f, q = self.family, self.q
        d = dict(self.params)
        if f == "linear":
            d["intercept"] = d["intercept"] + d["slope"] * q
            d["slope"] = -d["slope"]
        elif f == "indicator":
            d["start"], d["stop"] = q - d["stop"], q - d["start"]
        elif f == "cosine":
            d["phase"] = -d["frequency"] * q - d["phase"]
        elif f == "tabulated":
            d["x"] = tuple([0.0] + [q - x for x in reversed(d["x"][:-1])])
            d["y"] = tuple(reversed(d["y"]))
        return ProfileFn(f, q, tuple(sorted(d.items())))


def constant_profile(value: float, q: float = 1.0) -> ProfileFn:
    return ProfileFn.make("constant", q, value=float(value))


# ---------------------------------------------------------------------------
# kernel specifications


@dataclass(frozen=True)
class AtomSpec:
    weight: float
    q: float
    b1: int
    s: float
    F1: ProfileFn
    F2: ProfileFn
    F3: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise DomainError(f"atom weight must be positive and finite, got {self.weight!r}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise DomainError(f"atom period q must be positive, got {self.q!r}")
        if self.b1 not in (-1, 1):
            raise DomainError(f"b1 must be -1 or +1, got {self.b1!r}")
        if not math.isfinite(self.s) or self.s == 0:
            raise DomainError(f"speed s must be finite and nonzero, got {self.s!r}")
        if self.F1.q != self.q or self.F2.q != self.q:
            raise DomainError("profiles F1, F2 must have the atom's period q")
        if not math.isfinite(self.F3):
            raise DomainError("F3 must be finite")

    def log_active(self, kappa: float) -> bool:
        return self.b1 == 1 and kappa == 0 and self.F3 != 0

    @property
    def log_period(self) -> float:
        """Multiplicative period of the kernel in ``ln|u|``."""
        return self.q / abs(self.s)


@dataclass(frozen=True)
class KernelSpec:
    params: StableParams
    atoms: tuple[AtomSpec, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise DomainError("a kernel spec needs at least one atom")

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def H(self) -> float:
        return self.params.H

    @property
    def kappa(self) -> float:
        return self.params.kappa

    def atom(self, index: int) -> AtomSpec:
        if not 0 <= index < len(self.atoms):
            raise DomainError(f"atom index {index} out of range")
        return self.atoms[index]

    def is_zero(self) -> bool:
        return all(a.F1.is_zero() and a.F2.is_zero() and not a.log_active(self.kappa) for a in self.atoms)


@dataclass(frozen=True)
class MixedLfsmSpec:
    """Mixed LFSM data: atoms ``(weight, F1, F2)`` with constant coefficients."""

    params: StableParams
    atoms: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(w), float(a), float(b)) for w, a, b in self.atoms)
        if not atoms:
            raise DomainError("need at least one atom")
        if any(not (w > 0 and math.isfinite(w)) for w, _, _ in atoms):
            raise DomainError("atom weights must be positive")
        object.__setattr__(self, "atoms", atoms)


# ---------------------------------------------------------------------------
# kernel evaluation


def kernel_values(atom: AtomSpec, kappa: float, v, u) -> np.ndarray:
    """Vectorised ``G(v, u)`` for one atom; ``v`` and ``u`` broadcast.

    Returns 0 at ``u = 0`` unless the log term is active, where ``-inf*sign(F3)``
    is returned (callers that need an error use :func:`eval_G`).
    """
    v, u = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(u, dtype=float))
    shape = u.shape
    v = v.ravel()
    u = u.ravel()
    out = np.zeros(u.shape)
    nz = u != 0
    if not np.all(nz):
        if atom.log_active(kappa):
            out[~nz] = -math.inf * math.copysign(1.0, atom.F3)
        uz, vz = u[nz], v[nz]
    else:
        uz, vz = u, v
    au = np.abs(uz)
    lau = np.log(au)
    n, xi = floor_mod(vz + atom.s * lau, atom.q)
    pos = uz > 0
    val = np.empty(uz.shape)
    val[pos] = atom.F1._eval(xi[pos])
    val[~pos] = atom.F2._eval(xi[~pos])
    if kappa != 0:
        val *= np.exp(kappa * lau)
    if atom.b1 == -1:
        val = np.where(np.fmod(n, 2.0) == 0, val, -val)
    if atom.log_active(kappa):
        val += atom.F3 * lau
    out[nz] = val
    return out.reshape(shape)


def _check_v(atom: AtomSpec, v: float) -> None:
    if not math.isfinite(v) or not (0 <= v < atom.q):
        raise DomainError(f"v={v!r} outside [0, q={atom.q})")


def eval_G(spec: KernelSpec, atom_index: int, v: float, u: float) -> float:
    atom = spec.atom(atom_index)
    _check_v(atom, v)
    if not math.isfinite(u):
        raise DomainError("non-finite u")
    if u == 0 and atom.log_active(spec.kappa):
        raise SingularPointError("u = 0 with an active log term")
    return float(kernel_values(atom, spec.kappa, v, u))


def eval_K(spec: KernelSpec, atom_index: int, u: float) -> float:
    """The ring kernel ``K(z, u) = G(z, 0, u)``, defined for unit speed."""
    if spec.atom(atom_index).s != 1:
        raise DomainError("K is defined for s = 1; normalize the speed first")
    return eval_G(spec, atom_index, 0.0, u)


def eval_increment(spec: KernelSpec, atom_index: int, v: float, t: float, u: float) -> float:
    return eval_G(spec, atom_index, v, t + u) - eval_G(spec, atom_index, v, u)


def embed_mixed_lfsm(m: MixedLfsmSpec, label: str = "mixed-lfsm") -> KernelSpec:
    """Canonical-form representation of a mixed LFSM with ``b1 = 1``, ``q = s = 1``."""
    kappa = m.params.kappa
    atoms = []
    for w, f1, f2 in m.atoms:
        if kappa != 0:
            atoms.append(AtomSpec(w, 1.0, 1, 1.0, constant_profile(f1), constant_profile(f2), 0.0))
        else:
            atoms.append(AtomSpec(w, 1.0, 1, 1.0, constant_profile(f2), constant_profile(0.0), f1))
    return KernelSpec(m.params, tuple(atoms), label)


def normalize_speed(spec: KernelSpec) -> KernelSpec:
    """An equivalent spec with unit speed on every atom.

    With ``P = q/|s|`` the atom becomes ``(weight*|s|, P, b1, 1, F1', F2', F3)``
    where ``F'(x) = F(|s| x)`` (after ``x -> q - x`` when ``s < 0``).  The new
    kernel satisfies ``G'(v', u) = G(v, u)`` with ``v' = v/s`` for ``s > 0`` and
    ``v' = (q - v)/|s|`` for ``s < 0`` (``v != 0``), so the finite-dimensional
    laws coincide.
    """
    atoms = []
    for a in spec.atoms:
        if a.s == 1:
            atoms.append(a)
            continue
        f1, f2 = a.F1, a.F2
        if a.s < 0:
            f1, f2 = f1.reflected(), f2.reflected()
        k = abs(a.s)
        f1, f2 = f1.stretched(k), f2.stretched(k)
        atoms.append(AtomSpec(a.weight * k, f1.q, a.b1, 1.0, f1, f2, a.F3))
    return replace(spec, atoms=tuple(atoms))


# ---------------------------------------------------------------------------
# JSON documents

_TOP_KEYS = ("label", "alpha", "H", "atoms")
_ATOM_KEYS = ("weight", "q", "b1", "s", "F1", "F2", "F3")


def spec_to_dict(spec: KernelSpec) -> dict:
    return {
        "label": spec.label,
        "alpha": spec.alpha,
        "H": spec.H,
        "atoms": [
            {
                "weight": a.weight,
                "q": a.q,
                "b1": a.b1,
                "s": a.s,
                "F1": a.F1.as_dict(),
                "F2": a.F2.as_dict(),
                "F3": a.F3,
            }
            for a in spec.atoms
        ],
    }


def _require_keys(obj, keys: Sequence[str], path: str, optional: Sequence[str] = ()) -> None:
    if not isinstance(obj, Mapping):
        raise SpecError(path, "expected an object")
    unknown = sorted(set(obj) - set(keys))
    if unknown:
        raise SpecError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown field")
    for k in keys:
        if k not in obj and k not in optional:
            raise SpecError(f"{path}.{k}" if path else k, "missing field")


def _number(obj, key: str, path: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(path, "expected a number")
    return float(v)


def _profile_from(obj, q: float, path: str) -> ProfileFn:
    _require_keys(obj, ("family", "params"), path, optional=("params",))
    fam = obj["family"]
    if fam not in _PROFILE_PARAMS:
        raise SpecError(f"{path}.family", f"unknown family {fam!r}")
    params = obj.get("params", {})
    if not isinstance(params, Mapping):
        raise SpecError(f"{path}.params", "expected an object")
    for k in params:
        if k not in _PROFILE_PARAMS[fam]:
            raise SpecError(f"{path}.params.{k}", "unknown field")
    clean = {}
    for k, v in params.items():
        if fam == "tabulated":
            if not isinstance(v, list):
                raise SpecError(f"{path}.params.{k}", "expected a list of numbers")
            clean[k] = tuple(v)
        else:
            clean[k] = _number(params, k, f"{path}.params.{k}")
    try:
        return ProfileFn(fam, q, tuple(sorted(clean.items())))
    except DomainError as exc:
        raise SpecError(f"{path}.params", str(exc)) from None


def spec_from_dict(doc: Mapping) -> KernelSpec:
    """Parse a spec document, rejecting unknown or missing fields."""
    _require_keys(doc, _TOP_KEYS, "")
    label = doc["label"]
    if not isinstance(label, str):
        raise SpecError("label", "expected a string")
    try:
        params = StableParams(_number(doc, "alpha", "alpha"), _number(doc, "H", "H"))
    except DomainError as exc:
        raise SpecError("alpha" if "alpha" in str(exc) else "H", str(exc)) from None
    atoms_doc = doc["atoms"]
    if not isinstance(atoms_doc, list) or not atoms_doc:
        raise SpecError("atoms", "expected a nonempty list")
    atoms = []
    for i, a in enumerate(atoms_doc):
        path = f"atoms[{i}]"
        _require_keys(a, _ATOM_KEYS, path)
        q = _number(a, "q", f"{path}.q")
        if not (math.isfinite(q) and q > 0):
            raise SpecError(f"{path}.q", "must be positive")
        b1 = a["b1"]
        if b1 not in (-1, 1) or isinstance(b1, bool):
            raise SpecError(f"{path}.b1", "must be -1 or 1")
        f1 = _profile_from(a["F1"], q, f"{path}.F1")
        f2 = _profile_from(a["F2"], q, f"{path}.F2")
        try:
            atoms.append(
                AtomSpec(
                    _number(a, "weight", f"{path}.weight"),
                    q,
                    int(b1),
                    _number(a, "s", f"{path}.s"),
                    f1,
                    f2,
                    _number(a, "F3", f"{path}.F3"),
                )
            )
        except DomainError as exc:
            raise SpecError(path, str(exc)) from None
    return KernelSpec(params, tuple(atoms), label)


def load_spec(path: str | Path) -> KernelSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError("", f"invalid JSON: {exc}") from None
    return spec_from_dict(doc)


def dump_spec(spec: KernelSpec, path: str | Path | None = None) -> str:
    text = json.dumps(spec_to_dict(spec), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
