"""Line-integral engine shared by the norm, exponent and classifier code.

The workhorse computes, for a family of "lines" indexed by ``l``,

    I[l, c] = int_R | sum_i coefs[i, c] * G(v_l, lam_l * (u - centers[l, i])) |^alpha du

for one atom.  Each centre is a singular point of its term, so the real line is
cut at the centres and at the midpoints between them; every piece is
integrated in the log-distance ``y = ln|u - centre|``, where the kernel is
log-periodic with period ``P = q/|s|``.  Profile knots of every term become
partition points, each interval gets a 15-point Gauss-Kronrod rule and the
worst intervals are bisected.  Beyond the outermost centres the integral is
carried to a large radius and the rest is extrapolated from per-shell sums,
whose decay is a mix of two known geometric rates:

    jump part   exp(P * kappa * alpha)          (profile discontinuities)
    smooth part exp(P * ((kappa - 1) * alpha + 1))

A growing jump part is how divergence shows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel import AtomSpec, kernel_values

# QUADPACK qk15 abscissae and weights
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
G7_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 from each end, and 0)
for _k, _w in zip((1, 3, 5), _WG[:3]):
    G7_WEIGHTS[_k] = _w
    G7_WEIGHTS[14 - _k] = _w
G7_WEIGHTS[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation of the line integrals.

    ``u_tail_cutoff`` is the radius, in units of the spread of the singular
    points, out to which tails are integrated before extrapolation;
    ``singularity_padding`` is the fraction of local mass, near a singular
    point, that is extrapolated geometrically instead of integrated.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-13
    max_subdivisions: int = 4000
    u_tail_cutoff: float = 1e8
    singularity_padding: float = 1e-6
    log_step: float = 1.0
    v_nodes_min: int = 16
    v_nodes_max: int = 1024
    gl_nodes: int = 64

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 0:
            raise DomainError("max_subdivisions must be nonnegative")
        if not (self.u_tail_cutoff > 1 and 0 < self.singularity_padding < 1):
            raise DomainError("bad truncation parameters")
        if self.v_nodes_min < 2 or self.v_nodes_max < self.v_nodes_min:
            raise DomainError("bad trapezoid node counts")
        if self.gl_nodes < 4 or self.gl_nodes % 2:
            raise DomainError("gl_nodes must be an even integer >= 4")

    def scaled(self, factor: float) -> "QuadratureConfig":
        """Same truncation, tighter (factor < 1) or looser tolerances."""
        from dataclasses import replace

        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


@dataclass
class LineResult:
    """Integrals per (line, column) with error estimates and a divergence flag per column."""

    values: np.ndarray
    errors: np.ndarray
    divergent: np.ndarray
    converged: np.ndarray
    pieces: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# knot bookkeeping


def _has_knots(profile, b1: int) -> bool:
    if profile.family == "constant":
        return b1 == -1 and profile.p("value") != 0
    return not profile.is_zero()


def _knot_offsets(atom: AtomSpec, side: int, v: float, lam: float) -> np.ndarray:
    """Offsets ``o`` such that the term's knots on ``side`` sit at ``ln r = o + m*P``."""
    prof = atom.F1 if side > 0 else atom.F2
    if not _has_knots(prof, atom.b1):
        return np.empty(0)
    xs = np.array((0.0,) + prof.breakpoints())
    return (xs - v) / atom.s - math.log(lam)


def _progression(offsets: np.ndarray, period: float, lo: float, hi: float) -> np.ndarray:
    if offsets.size == 0 or hi <= lo:
        return np.empty(0)
    out = []
    for o in offsets:
        m0 = math.ceil((lo - o) / period)
        m1 = math.floor((hi - o) / period)
        if m1 >= m0:
            out.append(o + period * np.arange(m0, m1 + 1))
    return np.concatenate(out) if out else np.empty(0)


def atom_has_jumps(atom: AtomSpec) -> bool:
    """Whether the ring kernel of ``atom`` jumps somewhere on either half-line."""
    for prof in (atom.F1, atom.F2):
        if prof.is_zero():
            continue
        if not prof.absolutely_continuous():
            return True
        f0, fq = prof.value_at_zero(), prof.left_limit_at_q()
        if abs(f0 - atom.b1 * fq) > 1e-12 * max(1.0, abs(f0), abs(fq)):
            return True
    return False


@dataclass
class _Segment:
    line: int
    center: int  # index of the owning centre within the line
    direction: int
    y_lo: float
    y_hi: float
    outer: bool
    shell_offset: float


def _segments_for_line(l, centers, lam, atom, v, cfg, span, decay):
    """Cut the line at the centres and midpoints; ends snap to shell boundaries."""
    order = np.argsort(centers)
    cs = centers[order]
    segs = []
    n = len(cs)
    pad = cfg.singularity_padding
    P = atom.log_period
    o_shell = (-v) / atom.s - math.log(lam)
    for k in range(n):
        i = int(order[k])
        near = min((abs(cs[j] - cs[k]) for j in range(n) if j != k), default=span)
        # the integrand in ln r decays like r^decay towards a centre
        y_lo = math.log(near) + math.log(pad) / decay
        y_lo = o_shell + P * math.floor((y_lo - o_shell) / P)
        for d in (-1, 1):
            nb = k + d
            if 0 <= nb < n:
                y_hi = math.log(abs(cs[nb] - cs[k]) / 2)
                outer = False
            else:
                y_hi = math.log(span * cfg.u_tail_cutoff)
                y_hi = min(max(y_hi, math.log(span) + 3.5 * P), math.log(span) + math.log(1e12))
                y_hi = o_shell + P * math.ceil((y_hi - o_shell) / P)
                outer = True
            segs.append(_Segment(l, i, d, y_lo, y_hi, outer, o_shell))
    return segs


def _partition(seg: _Segment, centers, lam, atom, v, cfg) -> np.ndarray:
    P = atom.log_period
    c0 = centers[seg.center]
    d = seg.direction
    pts = [np.array([seg.y_lo, seg.y_hi])]
    pts.append(_progression(np.array([seg.shell_offset]), P, seg.y_lo, seg.y_hi))
    pts.append(_progression(_knot_offsets(atom, d, v, lam), P, seg.y_lo, seg.y_hi))
    ua = c0 + d * math.exp(seg.y_lo)
    ub = c0 + d * math.exp(seg.y_hi)
    lo_u, hi_u = min(ua, ub), max(ua, ub)
    for j, cj in enumerate(centers):
        if j == seg.center:
            continue
        side = 1 if lo_u > cj else -1
        dists = sorted((abs(lo_u - cj), abs(hi_u - cj)))
        offs = _knot_offsets(atom, side, v, lam)
        ys = _progression(offs, P, math.log(dists[0]), math.log(dists[1]))
        if ys.size:
            u = cj + side * np.exp(ys)
            r = d * (u - c0)
            r = r[r > 0]
            pts.append(np.log(r))
    y = np.concatenate(pts)
    y = y[(y >= seg.y_lo) & (y <= seg.y_hi)]
    y = np.unique(y)
    keep = np.concatenate([[True], np.diff(y) > 1e-12 * np.maximum(1.0, np.abs(y[1:]))])
    y = y[keep]
    y[-1] = seg.y_hi
    # fill gaps wider than the log step with equal subintervals
    step = min(cfg.log_step, P / 2)
    gaps = np.diff(y)
    k = np.maximum(1, np.ceil(gaps / step - 1e-9).astype(int))
    if np.any(k > 1):
        out = []
        for y0, g, kk in zip(y[:-1], gaps, k):
            out.append(y0 + g * np.arange(kk) / kk)
        out.append(y[-1:])
        y = np.concatenate(out)
    return y


# ---------------------------------------------------------------------------
# main driver


@dataclass
class _SegArrays:
    line: np.ndarray
    center: np.ndarray
    direction: np.ndarray


def _gk_batch(a, b, seg_idx, segs, line_v, line_lam, line_centers, coefs, atom, kappa, alpha):
    """K15 and G7 estimates (and QUADPACK-style errors) for intervals [a, b] in y."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    y = mid[:, None] + half[:, None] * GK_NODES[None, :]  # (m, 15)
    seg_line = segs.line[seg_idx]
    seg_c = segs.center[seg_idx]
    seg_d = segs.direction[seg_idx]
    cen = line_centers[seg_line, seg_c]
    r = np.exp(y)
    u = cen[:, None] + seg_d[:, None] * r  # (m, 15)
    lam = line_lam[seg_line]
    args = lam[:, None, None] * (u[:, :, None] - line_centers[seg_line][:, None, :])  # (m,15,n)
    g = kernel_values(atom, kappa, line_v[seg_line][:, None, None], args)
    f = np.abs(g @ coefs) ** alpha  # (m, 15, ncols)
    f *= r[:, :, None]
    k15 = np.einsum("mkc,k->mc", f, GK_WEIGHTS) * half[:, None]
    g7 = np.einsum("mkc,k->mc", f, G7_WEIGHTS) * half[:, None]
    mean = k15 / np.where(half > 0, 2 * half, 1.0)[:, None]
    resasc = np.einsum("mkc,k->mc", np.abs(f - mean[:, None, :]), GK_WEIGHTS) * half[:, None]
    diff = np.abs(k15 - g7)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200 * diff / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, diff)
    err = np.maximum(err, 50 * np.finfo(float).eps * np.abs(k15))
    return k15, err


def integrate_lines(
    atom: AtomSpec,
    kappa: float,
    alpha: float,
    line_v,
    line_lam,
    line_centers,
    coefs,
    cfg: QuadratureConfig,
) -> LineResult:
    """Integrate ``|sum_i coefs[i, c] G(v_l, lam_l (u - centers[l, i]))|^alpha`` over u.

    ``line_centers`` has shape (L, n) with distinct centres per line; ``coefs``
    has shape (n, ncols) and is shared by all lines.
    """
    line_v = np.atleast_1d(np.asarray(line_v, dtype=float))
    line_lam = np.atleast_1d(np.asarray(line_lam, dtype=float))
    line_centers = np.atleast_2d(np.asarray(line_centers, dtype=float))
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    L, n = line_centers.shape
    ncols = coefs.shape[1]
    if coefs.shape[0] != n:
        raise DomainError("coefficient rows must match the number of centres")
    if np.any(line_lam <= 0):
        raise DomainError("line scales must be positive")
    # centres whose coefficients vanish in every column contribute nothing
    live = np.any(coefs != 0, axis=1)
    if not np.any(live):
        z = np.zeros((L, ncols))
        return LineResult(z, z.copy(), np.zeros(ncols, bool), np.ones(ncols, bool))
    line_centers = line_centers[:, live]
    coefs = coefs[live]
    n = coefs.shape[0]
    if any(len(np.unique(row)) < n for row in line_centers):
        raise DomainError("centres on a line must be distinct")

    decay = min(alpha * kappa + 1.0, 1.0)
    jumps = atom_has_jumps(atom)
    segs: list[_Segment] = []
    a_list, b_list, s_list = [], [], []
    for l in range(L):
        cl = line_centers[l]
        span = (cl.max() - cl.min()) if n > 1 else 1.0 / line_lam[l]
        for seg in _segments_for_line(l, cl, line_lam[l], atom, line_v[l], cfg, span, decay):
            y = _partition(seg, cl, line_lam[l], atom, line_v[l], cfg)
            segs.append(seg)
            a_list.append(y[:-1])
            b_list.append(y[1:])
            s_list.append(np.full(len(y) - 1, len(segs) - 1))
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    sidx = np.concatenate(s_list)
    seg_far = []
    for seg in segs:
        cl = line_centers[seg.line]
        span = (cl.max() - cl.min()) if n > 1 else 1.0 / line_lam[seg.line]
        seg_far.append(math.log(4 * span))
    seg_arrays = _SegArrays(
        np.array([s.line for s in segs]),
        np.array([s.center for s in segs]),
        np.array([float(s.direction) for s in segs]),
    )

    val, err = _gk_batch(a, b, sidx, seg_arrays, line_v, line_lam, line_centers, coefs, atom, kappa, alpha)
    seg_line = seg_arrays.line
    budget = np.full(L, cfg.max_subdivisions)

    def line_totals(val, err, sidx):
        il = seg_line[sidx]
        tv = np.zeros((L, ncols))
        te = np.zeros((L, ncols))
        np.add.at(tv, il, val)
        np.add.at(te, il, err)
        return tv, te

    while True:
        tv, te = line_totals(val, err, sidx)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(tv)) * 0.5
        bad = np.any(te > tol, axis=1) & (budget > 0)
        if not np.any(bad):
            break
        il = seg_line[sidx]
        ratio = np.max(err / tol[il], axis=1)
        cnt = np.bincount(il, minlength=L)
        pick = bad[il] & (ratio * cnt[il] > 1.0)
        if not np.any(pick):
            break
        # respect per-line budgets, worst intervals first
        idx = np.nonzero(pick)[0]
        idx = idx[np.lexsort((-ratio[idx], il[idx]))]
        chosen = []
        used = np.zeros(L, int)
        for i in idx:
            li = il[i]
            if used[li] < budget[li]:
                chosen.append(i)
                used[li] += 1
        if not chosen:
            break
        chosen = np.array(chosen)
        budget -= used
        m = 0.5 * (a[chosen] + b[chosen])
        na = np.concatenate([a[chosen], m])
        nb = np.concatenate([m, b[chosen]])
        ns = np.concatenate([sidx[chosen], sidx[chosen]])
        nv, ne = _gk_batch(na, nb, ns, seg_arrays, line_v, line_lam, line_centers, coefs, atom, kappa, alpha)
        keep = np.ones(len(a), bool)
        keep[chosen] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        sidx = np.concatenate([sidx[keep], ns])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])

    tv, te = line_totals(val, err, sidx)
    tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(tv))
    conv = te <= tol

    # extrapolate inner neighbourhoods and outer tails, segment by segment
    order = np.argsort(sidx, kind="stable")
    bounds = np.searchsorted(sidx[order], np.arange(len(segs) + 1))
    divergent = np.zeros(ncols, bool)
    extra_v = np.zeros((L, ncols))
    extra_e = np.zeros((L, ncols))
    pieces = []
    P = atom.log_period
    for k, seg in enumerate(segs):
        sel = order[bounds[k]:bounds[k + 1]]
        if sel.size == 0:
            continue
        mids = 0.5 * (a[sel] + b[sel])
        shell = np.floor((mids - seg.shell_offset) / P).astype(np.int64)
        vs = val[sel]
        pieces.append((seg.line, seg.center, seg.direction, np.sum(vs, axis=0)))
        inner_v, inner_e = _inner_remainder(shell, vs, P, kappa, alpha)
        extra_v[seg.line] += inner_v
        extra_e[seg.line] += inner_e
        if seg.outer:
            tail_v, tail_e, div = _tail_remainder(
                shell, vs, P, kappa, alpha, seg_far[k], seg.shell_offset, np.sum(vs, axis=0), jumps
            )
            extra_v[seg.line] += tail_v
            extra_e[seg.line] += tail_e
            divergent |= div
    values = tv + extra_v
    errors = te + extra_e
    values[:, divergent] = np.inf
    conv = np.all(errors <= np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(values)), axis=0) & ~divergent
    return LineResult(values, errors, divergent, conv, pieces)


def _shell_sums(shell, vs):
    ids, inv = np.unique(shell, return_inverse=True)
    sums = np.zeros((len(ids), vs.shape[1]))
    np.add.at(sums, inv, vs)
    return ids, sums


def _inner_remainder(shell, vs, P, kappa, alpha):
    """Mass inside the innermost shell boundary, continued geometrically."""
    ids, sums = _shell_sums(shell, vs)
    if len(ids) < 2:
        return np.zeros(vs.shape[1]), np.abs(sums[0]) if len(ids) else 0.0
    s0, s1 = sums[0], sums[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(s1 > 0, s0 / s1, 0.0)
    # near a singular point the integrand in ln r decays at least like r^min(H alpha, 1)
    rho_max = math.exp(-0.5 * P * min(alpha * kappa + 1, 1.0))
    rho = np.clip(rho, 0.0, rho_max)
    est = s0 * rho / (1 - rho)
    return est, np.abs(est) * 0.5 + 1e-3 * np.abs(s0) * rho_max


def _tail_remainder(shell, vs, P, kappa, alpha, first_edge=-math.inf, offset=0.0, scale=None, jumps=True):
    """Extrapolate the outer tail from the last complete shells.

    Returns (tail, error, divergent) per column.  A column is divergent when
    the fitted non-decaying (jump) component is significant against ``scale``
    (the integral over the whole segment), or when the shell sums grow by a
    factor of 1.5 or more across the last three shells while the last shell
    is still above the rounding floor of the segment.
    """
    ids, S = _shell_sums(shell, vs)
    if scale is None:
        scale = np.sum(S, axis=0)
    # only shells far from every centre follow the asymptotic rates
    far = offset + P * ids >= first_edge
    if np.count_nonzero(far) >= 2:
        ids, S = ids[far], S[far]
    else:
        ids, S = ids[-2:], S[-2:]
    ncols = vs.shape[1]
    div = np.zeros(ncols, bool)
    if len(S) < 2:
        return np.zeros(ncols), np.abs(S[-1]) if len(S) else np.zeros(ncols), div
    r_j = math.exp(P * kappa * alpha)
    r_s = math.exp(P * ((kappa - 1) * alpha + 1))
    L = min(6, len(S))
    Sl = S[-L:]
    m = (ids[-L:] - ids[-1]).astype(float)
    if not jumps:
        # continuous kernels: leading smooth rate and its first correction
        rates = [r_s, r_s * math.exp(-P)] if L >= 3 else [r_s]
    elif L >= 3 and abs(r_j - r_s) > 1e-9:
        rates = [r_j, r_s]
    else:
        rates = [max(r_j, r_s)]
    X = np.stack([r ** m for r in rates], axis=1)
    coef, *_ = np.linalg.lstsq(X, Sl, rcond=None)
    resid = Sl - X @ coef
    rms = np.sqrt(np.mean(resid ** 2, axis=0)) if L > len(rates) else np.zeros(ncols)
    tail = np.zeros(ncols)
    for A, r in zip(coef, rates):
        if r >= 1:
            div |= np.abs(A) > 1e-4 * np.maximum(np.abs(scale), 1e-300)
        else:
            tail = tail + A * r / (1 - r)
    if len(S) >= 3:
        # growth among shells at the rounding floor of the segment is noise
        live = S[-1] > 1e-10 * np.abs(scale)
        div |= (S[-1] >= 1.5 * S[-3]) & (S[-3] > 0) & live
    terr = rms / (1 - min(max(rates), 0.999)) + 1e-6 * np.abs(tail)
    return np.where(div, 0.0, tail), terr, div
