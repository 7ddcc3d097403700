"""Joint characteristic exponents under the five equivalent parameterisations.

For times ``t_1..t_n`` and coefficient rows ``theta`` the exponent is

    Psi(t, theta) = sum_atoms weight * int int |sum_j theta_j G_{t_j}(v, u)|^alpha du dv

Form ``V`` integrates the canonical kernel over ``v`` in ``[0, q)`` with a
periodic trapezoid rule (the v-integrand is q-periodic).  The other forms
integrate the ring kernel ``K`` against a power of ``w`` with Gauss-Legendre
panels on dyadic pieces of the w-range:

    W         w^{-H} K(w(t+u))                  w in (1, e^q)
    Winv      w^{H-2/alpha} K(w^{-1}(t+u))      w in (e^{-q}, 1)
    Shift     w^{-H-1/alpha} (K(wt+u) - K(u))   w in (1, e^q)
    ShiftInv  w^{H-1/alpha} (K(t/w+u) - K(u))   w in (e^{-q}, 1)

The w-integrands are invariant under ``w -> e^q w`` (log-periodicity of K), so
any window of multiplicative length ``e^q`` gives the same value; ``window``
selects ``"natural"`` (the ranges above) or ``"upper"`` (always ``(1, e^q)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel import KernelSpec, normalize_speed
from .quadrature import QuadratureConfig, integrate_lines

FORMS = ("V", "W", "Winv", "Shift", "ShiftInv")


@dataclass
class ExponentResult:
    values: np.ndarray
    errors: np.ndarray
    divergent: np.ndarray
    converged: np.ndarray
    pieces: list = field(default_factory=list)


def increment_coefficients(t, thetas):
    """Merge ``sum_j theta_j (G(t_j + u) - G(u))`` into (offsets, coefficient matrix).

    Returns offsets ``tau`` (distinct, including 0 when needed) and an array of
    shape (len(tau), ncols) so that the integrand is ``sum_i C[i] G(tau_i + u)``.
    """
    t = np.asarray(t, dtype=float).ravel()
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    if th.shape[1] != t.size:
        raise DomainError("theta rows must have one entry per time")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(th))):
        raise DomainError("times and coefficients must be finite")
    taus = sorted(set(t.tolist()) | {0.0})
    C = np.zeros((len(taus), th.shape[0]))
    pos = {x: i for i, x in enumerate(taus)}
    for j, tj in enumerate(t):
        C[pos[tj]] += th[:, j]
        C[pos[0.0]] -= th[:, j]
    return np.array(taus), C


def _gl_panels(lo: float, hi: float, n: int, split: int = 1):
    """Gauss-Legendre nodes on dyadic panels of (lo, hi), each cut into ``split`` pieces."""
    edges = [lo]
    while edges[-1] * 2 < hi * (1 - 1e-12):
        edges.append(edges[-1] * 2)
    edges.append(hi)
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a0, b0 in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(a0, b0, split + 1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
            weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _atom_V(atom, kappa, alpha, taus, C, cfg):
    q = atom.q
    ncols = C.shape[1]
    centers = -taus
    N = cfg.v_nodes_min
    v = np.arange(N) * (q / N)
    res = integrate_lines(atom, kappa, alpha, v, np.ones(N), np.tile(centers, (N, 1)), C, cfg)
    I, E = res.values, res.errors
    div = res.divergent.copy()
    conv = res.converged.copy()
    pieces = res.pieces
    prev = None
    total = np.zeros(ncols)
    while True:
        Nn = I.shape[0]
        total = atom.weight * (q / Nn) * np.sum(I, axis=0)
        line_err = atom.weight * (q / Nn) * np.sum(E, axis=0)
        if prev is None:
            half = atom.weight * (q / (Nn // 2)) * np.sum(I[::2], axis=0)
        else:
            half = prev
        with np.errstate(invalid="ignore"):
            verr = np.abs(total - half)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(total))
        done = np.all((verr <= 0.5 * tol) | div)
        if done or 2 * Nn > cfg.v_nodes_max:
            if not done:
                conv &= (verr <= 0.5 * tol) | div
            break
        prev = total
        vn = (np.arange(Nn) + 0.5) * (q / Nn)
        r2 = integrate_lines(atom, kappa, alpha, vn, np.ones(Nn), np.tile(centers, (Nn, 1)), C, cfg)
        div |= r2.divergent
        conv &= r2.converged
        # interleave so that I[::2] is the coarser rule next round
        I2 = np.empty((2 * Nn, ncols))
        E2 = np.empty((2 * Nn, ncols))
        I2[0::2], I2[1::2] = I, r2.values
        E2[0::2], E2[1::2] = E, r2.errors
        I, E = I2, E2
    return total, verr + line_err, div, conv, pieces


def _w_lines(form, atom, H, alpha, taus, window, n, split=1):
    q = atom.q
    if form in ("W", "Shift") or window == "upper":
        lo, hi = 1.0, math.exp(q)
    else:
        lo, hi = math.exp(-q), 1.0
    w, gw = _gl_panels(lo, hi, n, split)
    L = w.size
    if form == "W":
        lam, cen, pw = w, np.tile(-taus, (L, 1)), -alpha * H
    elif form == "Winv":
        lam, cen, pw = 1.0 / w, np.tile(-taus, (L, 1)), alpha * H - 2
    elif form == "Shift":
        lam, cen, pw = np.ones(L), -np.outer(w, taus), -alpha * H - 1
    else:
        lam, cen, pw = np.ones(L), -np.outer(1.0 / w, taus), alpha * H - 1
    return lam, cen, gw * w ** pw


def _atom_w(form, atom, kappa, alpha, H, taus, C, cfg, window, max_split=8):
    """w-integral with panel splitting until two successive rules agree."""
    n = cfg.gl_nodes

    def run(nodes, split):
        lam, cen, f = _w_lines(form, atom, H, alpha, taus, window, nodes, split)
        r = integrate_lines(atom, kappa, alpha, np.zeros(lam.size), lam, cen, C, cfg)
        return atom.weight * (f @ r.values), atom.weight * (f @ r.errors), r

    prev, _, r0 = run(n // 2, 1)
    div, conv, pieces = r0.divergent.copy(), r0.converged.copy(), r0.pieces
    split = 1
    while True:
        fine, line_err, r = run(n, split)
        div |= r.divergent
        conv &= r.converged
        with np.errstate(invalid="ignore"):
            gerr = np.abs(fine - prev)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(fine))
        if np.all((gerr <= 0.5 * tol) | div) or split >= max_split:
            break
        prev = fine
        split *= 2
    return fine, gerr + line_err, div, conv, pieces


def joint_exponent(
    spec: KernelSpec,
    t,
    thetas,
    cfg: QuadratureConfig | None = None,
    form: str = "V",
    window: str = "natural",
) -> ExponentResult:
    """``Psi(t, theta_row)`` for every row of ``thetas`` (shape (m, len(t)))."""
    cfg = cfg or QuadratureConfig()
    if form not in FORMS:
        raise DomainError(f"unknown representation {form!r}; expected one of {FORMS}")
    if window not in ("natural", "upper"):
        raise DomainError("window must be 'natural' or 'upper'")
    taus, C = increment_coefficients(t, thetas)
    ncols = C.shape[1]
    if form != "V":
        spec = normalize_speed(spec)
    kappa, alpha, H = spec.kappa, spec.alpha, spec.H
    vals, errs = [], []
    div = np.zeros(ncols, bool)
    conv = np.ones(ncols, bool)
    pieces = []
    for k, atom in enumerate(spec.atoms):
        if form == "V":
            v, e, d, c, p = _atom_V(atom, kappa, alpha, taus, C, cfg)
        else:
            v, e, d, c, p = _atom_w(form, atom, kappa, alpha, H, taus, C, cfg, window)
        vals.append(v)
        errs.append(e)
        div |= d
        conv &= c
        pieces.extend((k,) + tuple(x) for x in p)
    values = np.array([math.fsum(col) for col in np.array(vals).T])
    errors = np.array([math.fsum(col) for col in np.array(errs).T])
    values[div] = np.inf
    tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(values))
    conv &= ~div & (errors <= tol)
    return ExponentResult(values, errors, div, conv, pieces)
