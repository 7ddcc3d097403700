"""Fixed-point tests (CYCLIC vs FIXED atoms) and the essential-identity search.

Both searches compare kernel sections ``G(0, .)`` in a weighted L^alpha norm
on a symmetric log-spaced window ``|u| in [e^-L, e^L]``:

    ||f||^alpha = int |f(u)|^alpha |u|^{-kappa alpha} du / |u|

The weight makes every log-period of a self-similar section count equally,
so shifts near the origin are as visible as the behaviour at large ``|u|``.
The coefficients that enter linearly (``b, d`` and ``h, j``) are fitted by
iteratively reweighted least squares; the remaining parameters go through a
coarse grid followed by a local refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError
from .kernel import AtomSpec, KernelSpec, kernel_values, normalize_speed

__all__ = [
    "ClassifierConfig",
    "AffineFitResult",
    "AtomVerdict",
    "ClassificationReport",
    "UniquenessReport",
    "TransformedKernel",
    "fixed_point_residual",
    "classify_cfsm",
    "uniqueness_search",
    "ALPHA_CAVEAT",
]

ALPHA_CAVEAT = (
    "PFSM/CFSM labels are only claimed for 1 < alpha < 2; "
    "outside that range the numerical verdict describes the kernel, not the process"
)


@dataclass(frozen=True)
class ClassifierConfig:
    fit_tol: float = 1e-4
    separation_floor: float = 1e-2
    c_steps: int = 10
    c_step: float = 0.02
    shift_grid: int = 41
    shift_range: float = 5.0
    k_grid: int = 41
    k_decades: float = 1.0
    window_periods: float = 3.0
    min_window: float = 6.0
    max_spacing: float = 0.02
    irls_iter: int = 40

    def __post_init__(self):
        if not (0 < self.fit_tol < self.separation_floor):
            raise DomainError("need 0 < fit_tol < separation_floor")
        if self.c_steps < 2 or not (0 < self.c_step * self.c_steps < 1):
            raise DomainError("c-grid must stay inside (0, 2)")

    def c_grid(self) -> np.ndarray:
        k = np.arange(1, self.c_steps + 1)
        return np.concatenate([1 - self.c_step * k, 1 + self.c_step * k])


# ---------------------------------------------------------------------------
# sections and the weighted norm


@dataclass(frozen=True)
class _Window:
    u: np.ndarray
    w: np.ndarray

    @classmethod
    def build(cls, period: float, kappa: float, alpha: float, cfg: ClassifierConfig) -> "_Window":
        L = max(cfg.min_window, cfg.window_periods * period)
        dy = min(cfg.max_spacing, period / 64)
        n = int(math.ceil(2 * L / dy))
        dy = 2 * L / n
        # midpoints keep the grid off u = 0 and off the integers
        y = -L + (np.arange(n) + 0.5) * dy
        r = np.exp(y)
        w = dy * np.exp(-kappa * alpha * y)
        return cls(np.concatenate([-r[::-1], r]), np.concatenate([w[::-1], w]))


def _section(atom: AtomSpec, kappa: float, u) -> np.ndarray:
    return kernel_values(atom, kappa, 0.0, u)


def _norm(f, w, alpha, axis=-1):
    return np.sum(w * np.abs(f) ** alpha, axis=axis) ** (1 / alpha)


def _irls(Y, X, w, alpha, with_const, iters):
    """Batched weighted L^alpha regression ``Y ~ beta X + gamma`` over rows of ``X``.

    Returns ``(beta, gamma, distance)`` with one entry per row.
    """
    X = np.atleast_2d(X)
    ok = np.isfinite(X) & np.isfinite(Y)
    Xz = np.where(ok, X, 0.0)
    Yb = np.where(ok, Y, 0.0)
    wv = np.where(ok, w, 0.0)
    scale = max(float(np.max(np.abs(Y[np.isfinite(Y)]), initial=0.0)), 1e-300)
    eps = 1e-12 * scale
    omega = wv
    beta = gamma = None
    for it in range(iters):
        s_xx = np.sum(omega * Xz * Xz, axis=1)
        s_xy = np.sum(omega * Xz * Yb, axis=1)
        if with_const:
            s_1 = np.sum(omega, axis=1) if omega.ndim == 2 else np.full(len(Xz), omega.sum())
            s_x = np.sum(omega * Xz, axis=1)
            s_y = np.sum(omega * Yb, axis=1)
            det = s_xx * s_1 - s_x * s_x
            safe = np.abs(det) > 1e-300
            nb = np.where(safe, (s_xy * s_1 - s_x * s_y) / np.where(safe, det, 1), 0.0)
            ng = np.where(safe, (s_xx * s_y - s_x * s_xy) / np.where(safe, det, 1), s_y / np.maximum(s_1, 1e-300))
        else:
            safe = s_xx > 1e-300
            nb = np.where(safe, s_xy / np.where(safe, s_xx, 1), 0.0)
            ng = np.zeros_like(nb)
        if beta is not None and np.all(np.abs(nb - beta) <= 1e-14 * (1 + np.abs(nb))) and np.all(
            np.abs(ng - gamma) <= 1e-14 * (1 + np.abs(ng))
        ):
            beta, gamma = nb, ng
            break
        beta, gamma = nb, ng
        r = Yb - beta[:, None] * Xz - gamma[:, None]
        omega = wv * np.maximum(np.abs(r), eps) ** (alpha - 2)
    r = Yb - beta[:, None] * Xz - gamma[:, None]
    return beta, gamma, _norm(r, wv, alpha, axis=1)


# ---------------------------------------------------------------------------
# fixed points


@dataclass
class AffineFitResult:
    c: float
    b: float
    a: float
    d: float
    residual: float
    converged: bool
    baseline: float = math.nan
    degenerate: bool = False

    @property
    def relative(self) -> float:
        """Residual as a fraction of the identity fit ``||G(c.) - G||``."""
        if self.degenerate or self.baseline == 0:
            return 0.0
        return self.residual / self.baseline

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "b": self.b,
            "a": self.a,
            "d": self.d,
            "residual": self.residual,
            "baseline": self.baseline,
            "relative": self.relative,
            "converged": self.converged,
            "degenerate": self.degenerate,
        }


def _period_candidate(atom: AtomSpec, kappa: float, c: float):
    """Exact ``(b, a, d)`` when ``c`` is a period return ``e^{m q/|s|}``, else None."""
    P = atom.q / abs(atom.s)
    m = math.log(c) / P
    mr = round(m)
    if mr == 0 or abs(m - mr) > 1e-12 * max(1.0, abs(m)):
        return None
    # v = 0 moves by s ln c = +-m q, crossing |m| periods in the direction of s
    steps = mr if atom.s > 0 else -mr
    b = c ** kappa * (atom.b1 ** (steps % 2))
    d = atom.F3 * math.log(c) if atom.log_active(kappa) else 0.0
    return b, 0.0, d


def fixed_point_residual(
    spec: KernelSpec, atom_index: int, c: float, cfg: ClassifierConfig | None = None
) -> AffineFitResult:
    """Best ``||G(0, c.) - b G(0, . + a) - d|| / ||G(0, c.)||`` over ``(b, a, d)``.

    ``d`` is only free when kappa = 0; otherwise the power-law ends of the
    section pin it to 0.
    """
    cfg = cfg or ClassifierConfig()
    atom = spec.atom(atom_index)
    if not (math.isfinite(c) and c > 0) or c == 1:
        raise DomainError("c must be positive and different from 1")
    kappa, alpha = spec.kappa, spec.alpha
    win = _Window.build(atom.q / abs(atom.s), kappa, alpha, cfg)
    Y = _section(atom, kappa, c * win.u)
    fin = np.isfinite(Y)
    ynorm = _norm(Y[fin], win.w[fin], alpha)
    if ynorm == 0:
        return AffineFitResult(c, 1.0, 0.0, 0.0, 0.0, False, 0.0, True)
    with_d = kappa == 0
    base = _section(atom, kappa, win.u)
    ok = fin & np.isfinite(base)
    baseline = _norm(Y[ok] - base[ok], win.w[ok], alpha) / ynorm

    def fit(a_vals):
        X = _section(atom, kappa, win.u[None, :] + np.asarray(a_vals, dtype=float)[:, None])
        return _irls(Y, X, win.w, alpha, with_d, cfg.irls_iter)

    cand = _period_candidate(atom, kappa, c)
    if cand is not None:
        b, a, d = cand
        r = _norm(np.where(ok, Y - b * base - d, 0.0), win.w, alpha) / ynorm
        if r <= cfg.fit_tol:
            return AffineFitResult(c, b, a, d, float(r), True, baseline)

    a_grid = np.linspace(-cfg.shift_range, cfg.shift_range, cfg.shift_grid)
    bs, ds, dist = fit(a_grid)
    # ties go to the smaller |a|, then the smaller a
    order = np.lexsort((a_grid, np.abs(a_grid), np.round(dist / ynorm, 12)))
    i = int(order[0])
    best = (float(dist[i] / ynorm), float(bs[i]), float(a_grid[i]), float(ds[i]))
    step = a_grid[1] - a_grid[0] if len(a_grid) > 1 else cfg.shift_range
    res = optimize.minimize_scalar(
        lambda a: float(fit([a])[2][0]) / ynorm,
        bounds=(best[2] - step, best[2] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if res.fun < best[0]:
        b2, d2, r2 = fit([res.x])
        best = (float(r2[0] / ynorm), float(b2[0]), float(res.x), float(d2[0]))
    r, b, a, d = best
    conv = bool(res.success) and all(map(math.isfinite, best))
    return AffineFitResult(c, b, a, d, r, conv, baseline)


@dataclass
class AtomVerdict:
    atom: int
    verdict: str  # CYCLIC | FIXED | INCONCLUSIVE
    fits: list
    min_relative: float
    max_relative: float

    def to_dict(self) -> dict:
        return {
            "atom": self.atom,
            "verdict": self.verdict,
            "min_relative": self.min_relative,
            "max_relative": self.max_relative,
            "fits": [f.to_dict() for f in self.fits],
        }


@dataclass
class ClassificationReport:
    atoms: list
    overall: str
    caveat: str | None = None

    @property
    def verdicts(self) -> list:
        return [a.verdict for a in self.atoms]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "atoms": [a.to_dict() for a in self.atoms],
            "caveat": self.caveat,
        }


def _atom_verdict(fits: list, cfg: ClassifierConfig) -> tuple[str, float, float]:
    rel = np.array([f.relative for f in fits])
    if rel.size == 0:
        return "INCONCLUSIVE", math.nan, math.nan
    lo, hi = float(rel.min()), float(rel.max())
    if all(f.degenerate for f in fits):
        return "FIXED", lo, hi
    if lo >= cfg.separation_floor:
        return "CYCLIC", lo, hi
    if hi <= cfg.fit_tol:
        return "FIXED", lo, hi
    # otherwise the fit must improve as c -> 1 and end below fit_tol
    dist = np.array([abs(f.c - 1) for f in fits])
    order = np.argsort(dist, kind="stable")
    r = rel[order]
    trend = np.all(np.diff(r) >= -cfg.fit_tol)
    if r[0] <= cfg.fit_tol and trend:
        return "FIXED", lo, hi
    return "INCONCLUSIVE", lo, hi


def classify_cfsm(spec: KernelSpec, cfg: ClassifierConfig | None = None) -> ClassificationReport:
    """Per-atom CYCLIC / FIXED verdicts and the overall classification.

    A CYCLIC atom admits no affine fixed-point relation for any ``c`` on the
    grid near 1 (period returns ``e^{m q/|s|}`` are skipped).  Overall:
    ``CFSM`` when every atom is CYCLIC, ``mixed LFSM`` when every atom is
    FIXED, ``PFSM with mixed LFSM component`` for a mixture.
    """
    cfg = cfg or ClassifierConfig()
    verdicts = []
    for i, atom in enumerate(spec.atoms):
        P = atom.q / abs(atom.s)
        fits = []
        for c in cfg.c_grid():
            m = math.log(c) / P
            if abs(m - round(m)) < 1e-6 and round(m) != 0:
                continue
            fits.append(fixed_point_residual(spec, i, float(c), cfg))
        v, lo, hi = _atom_verdict(fits, cfg)
        verdicts.append(AtomVerdict(i, v, fits, lo, hi))
    kinds = {a.verdict for a in verdicts}
    if "INCONCLUSIVE" in kinds:
        overall = "INCONCLUSIVE"
    elif kinds == {"CYCLIC"}:
        overall = "CFSM"
    elif kinds == {"FIXED"}:
        overall = "mixed LFSM"
    else:
        overall = "PFSM with mixed LFSM component"
    caveat = None if 1 < spec.alpha < 2 else ALPHA_CAVEAT
    return ClassificationReport(verdicts, overall, caveat)


# ---------------------------------------------------------------------------
# essential identity


@dataclass(frozen=True)
class TransformedKernel:
    """The section ``u -> h G(0, k u + g) + j`` of a single-atom kernel."""

    base: KernelSpec
    h: float = 1.0
    k: float = 1.0
    g: float = 0.0
    j: float = 0.0

    def __post_init__(self):
        if len(self.base.atoms) != 1:
            raise DomainError("transformed kernels need a single-atom base")
        if self.h == 0 or not self.k > 0:
            raise DomainError("need h != 0 and k > 0")

    @property
    def atoms(self):
        return self.base.atoms

    @property
    def params(self):
        return self.base.params

    @property
    def kappa(self):
        return self.base.kappa

    @property
    def alpha(self):
        return self.base.alpha


def _sections(spec):
    """List of (section callable, log period, atom q, atom s) per atom."""
    if isinstance(spec, TransformedKernel):
        base = normalize_speed(spec.base)
        atom = base.atoms[0]
        kap = base.kappa
        f = lambda u, a=atom, T=spec: T.h * _section(a, kap, T.k * np.asarray(u) + T.g) + T.j  # noqa: E731
        return [(f, atom.q, atom.q, atom.s)]
    spec = normalize_speed(spec)
    kap = spec.kappa
    return [(lambda u, a=a: _section(a, kap, u), a.q, a.q, a.s) for a in spec.atoms]


@dataclass
class UniquenessReport:
    h: float
    k: float
    g: float
    j: float
    residual: float
    verdict: str  # essentially-identical | essentially-different | inconclusive
    fit_tol: float
    separation_floor: float
    grid_min: float
    iff: bool
    same_fdd: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best": {"h": self.h, "k": self.k, "g": self.g, "j": self.j},
            "residual": self.residual,
            "grid_min": self.grid_min,
            "verdict": self.verdict,
            "thresholds": {"fit_tol": self.fit_tol, "separation_floor": self.separation_floor},
            "if_and_only_if": self.iff,
            "identical_fdd": self.same_fdd,
            "notes": self.notes,
        }


def _pair_search(fa, Pa, fb, kappa, alpha, with_j, cfg, Pb=None):
    """min over (h, k, g, j) of ||fa - h fb(k . + g) - j|| / ||fa||; returns (params, residual, grid_min)."""
    win = _Window.build(Pa, kappa, alpha, cfg)
    Y = fa(win.u)
    fin = np.isfinite(Y)
    ynorm = _norm(Y[fin], win.w[fin], alpha)
    if ynorm == 0:
        return (1.0, 1.0, 0.0, 0.0), 0.0, 0.0

    def fit(k, g):
        k = np.atleast_1d(k)
        g = np.atleast_1d(g)
        X = fb(k[:, None] * win.u[None, :] + g[:, None])
        return _irls(Y, X, win.w, alpha, with_j, cfg.irls_iter)

    ks = np.logspace(-cfg.k_decades, cfg.k_decades, cfg.k_grid)
    gs = np.linspace(-cfg.shift_range, cfg.shift_range, cfg.shift_grid)
    K, G = np.meshgrid(ks, gs, indexing="ij")
    K, G = K.ravel(), G.ravel()
    dist = np.empty(K.size)
    hs = np.empty(K.size)
    js = np.empty(K.size)
    chunk = max(1, 2_000_000 // win.u.size)
    for s in range(0, K.size, chunk):
        h, j, d = fit(K[s : s + chunk], G[s : s + chunk])
        hs[s : s + chunk], js[s : s + chunk], dist[s : s + chunk] = h, j, d
    rel = dist / ynorm
    rel[~np.isfinite(rel)] = np.inf
    grid_min = float(rel.min())
    # deterministic ordering: residual, then |ln k|, then |g|
    order = np.lexsort((np.abs(G), np.abs(np.log(K)), np.round(rel, 12)))

    def obj(x):
        h, j, d = fit(math.exp(x[0]), x[1])
        r = float(d[0] / ynorm)
        return r if math.isfinite(r) else 1e300

    # refine the promising starts; among exact fits prefer the smallest |ln k|,
    # since log-periodicity makes k and k e^{mP} equally good
    starts = [i for i in order[:6] if rel[i] <= 2 * grid_min + cfg.fit_tol] or [order[0]]
    cands = []
    for idx in starts:
        x0 = np.array([math.log(K[idx]), G[idx]])
        res = optimize.minimize(
            obj,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 2000, "initial_simplex": x0 + np.array([[0, 0], [0.05, 0], [0, 0.1]])},
        )
        cands.append((float(res.fun), res.x) if res.fun < rel[idx] else (float(rel[idx]), x0))
    exact = [c for c in cands if c[0] <= cfg.fit_tol]
    if exact and Pb:
        # fold k back by whole log-periods of the second kernel and re-refine
        r0, x0 = min(exact, key=lambda c: c[0])
        m = round(x0[0] / Pb)
        if m:
            for g0 in (x0[1] * math.exp(-m * Pb), x0[1]):
                xs = np.array([x0[0] - m * Pb, g0])
                res = optimize.minimize(obj, xs, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 2000, "initial_simplex": xs + np.array([[0, 0], [0.05, 0], [0, 0.1]])})
                if res.fun <= cfg.fit_tol:
                    exact.append((float(res.fun), res.x))
    if exact:
        best = min(exact, key=lambda c: (round(abs(c[1][0]), 9), round(abs(c[1][1]), 9)))
    else:
        best = min(cands, key=lambda c: c[0])
    r, x = best
    k, g = math.exp(x[0]), float(x[1])
    h, j, _ = fit(k, g)
    return (float(h[0]), k, g, float(j[0])), r, grid_min


def uniqueness_search(spec_a, spec_b, cfg: ClassifierConfig | None = None) -> UniquenessReport:
    """Search for ``G_a(0, u) = h G_b(0, k u + g) + j``.

    For single-atom unit-speed kernels with equal periods the match is
    necessary and sufficient for essential identity.  Otherwise only the
    necessary direction is available: a failed match certifies essential
    difference, a good one is inconclusive.  Atoms with another speed are
    first brought to unit speed, which leaves ``G(0, .)`` unchanged.
    """
    cfg = cfg or ClassifierConfig()
    if spec_a.alpha != spec_b.alpha:
        raise DomainError("the two kernels must share alpha")
    secs_a, secs_b = _sections(spec_a), _sections(spec_b)
    kappa, alpha = spec_a.kappa, spec_a.alpha
    if abs(kappa - spec_b.kappa) > 1e-12:
        notes = ["kappa differs: the processes have different self-similarity exponents"]
        return UniquenessReport(math.nan, math.nan, math.nan, math.nan, math.inf, "essentially-different", cfg.fit_tol, cfg.separation_floor, math.inf, False, None, notes)
    with_j = kappa == 0
    single = len(secs_a) == 1 and len(secs_b) == 1
    iff = single and abs(secs_a[0][2] - secs_b[0][2]) <= 1e-12 * secs_a[0][2]
    notes = []
    if not iff:
        notes.append("necessary condition only: a small residual does not certify identity")

    # every atom of a must be matched by some atom of b
    worst = None
    for fa, Pa, _, _ in secs_a:
        best = None
        for fb, Pb, _, _ in secs_b:
            params, r, gmin = _pair_search(fa, Pa, fb, kappa, alpha, with_j, cfg, Pb)
            if best is None or r < best[1]:
                best = (params, r, gmin)
        if worst is None or best[1] > worst[1]:
            worst = best
    (h, k, g, j), r, gmin = worst
    if r >= cfg.separation_floor:
        verdict = "essentially-different"
    elif r <= cfg.fit_tol and iff:
        verdict = "essentially-identical"
    else:
        verdict = "inconclusive"
    same_fdd = None
    if verdict == "essentially-identical":
        # sigma_a^alpha = w_a |h|^alpha k^{kappa alpha} sigma_b^alpha / w_b for the increments
        wa, wb = spec_a.atoms[0].weight, spec_b.atoms[0].weight
        ratio = wa * abs(h) ** alpha * k ** (kappa * alpha) / wb
        same_fdd = abs(ratio - 1) <= math.sqrt(cfg.fit_tol)
    return UniquenessReport(h, k, g, j, r, verdict, cfg.fit_tol, cfg.separation_floor, gmin, iff, same_fdd, notes)
