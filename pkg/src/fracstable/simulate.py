"""Monte Carlo paths from a discretised SaS random measure, and scale estimation.

The (v, u) plane of every atom is cut into cells: ``v`` uniformly, ``u``
geometrically around each singular point ``{0, -t_j}`` out to ``U``.  Cell
``C`` contributes ``a_j(C) eps_C`` to ``X(t_j)`` with one standard SaS
variate per cell shared by all times, where

    |a_j(C)|^alpha = weight * int_C |G_{t_j}(v, u)|^alpha dv du

(tensor Gauss-Legendre inside the cell) and the sign is that of the cell
integral of ``G_{t_j}``.  Every marginal therefore has the scale of the
truncated integral regardless of the cell count; only the dependence between
times is resolved at cell level.

Each replication owns a Philox stream keyed by the seed with the replication
index in the counter, and cells consume draws in a fixed order, so output is
bitwise identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel import KernelSpec, kernel_values

__all__ = [
    "SimulationGrid",
    "PathEnsemble",
    "ScaleEstimate",
    "sas_sample",
    "replication_stream",
    "cell_coefficients",
    "simulate_paths",
    "empirical_scale",
]

_GL = np.polynomial.legendre.leggauss(3)


def sas_sample(rng: np.random.Generator, n: int, alpha: float) -> np.ndarray:
    """``n`` standard SaS variates (``E e^{i theta X} = e^{-|theta|^alpha}``), Chambers-Mallows-Stuck."""
    if not (0 < alpha < 2):
        raise DomainError("alpha must lie in (0, 2)")
    V = rng.uniform(-math.pi / 2, math.pi / 2, n)
    W = rng.standard_exponential(n)
    return _cms(V, W, alpha)


def _cms(V, W, alpha):
    if alpha == 1:
        return np.tan(V)
    return np.sin(alpha * V) / np.cos(V) ** (1 / alpha) * (np.cos((1 - alpha) * V) / W) ** ((1 - alpha) / alpha)


def replication_stream(seed: int, rep: int) -> np.random.Generator:
    """Counter-based stream of replication ``rep``: key = seed, counter high word = rep."""
    if not (0 <= seed < 2**64) or rep < 0:
        raise DomainError("seed must be a 64-bit unsigned integer and rep nonnegative")
    return np.random.Generator(np.random.Philox(counter=[0, 0, 0, rep], key=[seed, 0]))


@dataclass(frozen=True)
class SimulationGrid:
    """Discretisation and seeding of a simulation run.

    ``U`` is the truncation distance from the singular points, ``delta`` the
    innermost cell size and ``ratio`` the geometric growth of cells.
    """

    t_grid: tuple
    seed: int = 0
    U: float = 1e14
    delta: float = 1e-8
    ratio: float = 1.4
    v_cells: int = 8
    block: int = 1024

    def __post_init__(self):
        t = tuple(float(x) for x in self.t_grid)
        object.__setattr__(self, "t_grid", t)
        if not t or any(not math.isfinite(x) for x in t) or any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("t_grid must be a nonempty increasing sequence of finite reals")
        if not (0 < self.delta < 1 < self.ratio) or self.v_cells < 1 or self.block < 1:
            raise DomainError("need 0 < delta < 1 < ratio, v_cells >= 1 and block >= 1")
        if not self.U > max(abs(x) for x in t) + 1:
            raise DomainError("U must exceed max |t| + 1")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")

    def singular_points(self) -> np.ndarray:
        return np.unique(np.concatenate([[0.0], -np.asarray(self.t_grid)]))

    def u_edges(self) -> np.ndarray:
        """Cell edges on the u-axis: geometric around each singular point, merged."""
        pts = self.singular_points()
        n = int(math.ceil(math.log(self.U / self.delta) / math.log(self.ratio)))
        dist = self.delta * self.ratio ** np.arange(n + 1)
        edges = [pts]
        for i, p in enumerate(pts):
            # stop each geometric ladder where a neighbour's ladder takes over
            lo_gap = p - pts[i - 1] if i > 0 else math.inf
            hi_gap = pts[i + 1] - p if i + 1 < len(pts) else math.inf
            edges.append(p - dist[dist < lo_gap / 2])
            edges.append(p + dist[dist < hi_gap / 2])
        e = np.unique(np.concatenate(edges))
        return e[(e >= pts[0] - self.U) & (e <= pts[-1] + self.U)]

    def to_dict(self) -> dict:
        return {
            "t_grid": list(self.t_grid),
            "seed": self.seed,
            "U": self.U,
            "delta": self.delta,
            "ratio": self.ratio,
            "v_cells": self.v_cells,
        }


@dataclass
class PathEnsemble:
    values: np.ndarray  # (replications, len(t_grid))
    t_grid: tuple
    alpha: float
    metadata: dict = field(default_factory=dict)

    @property
    def replications(self) -> int:
        return self.values.shape[0]

    def column(self, t_index: int) -> np.ndarray:
        return self.values[:, t_index]

    def to_csv(self, fh) -> None:
        fh.write("rep,t,value\n")
        for r, row in enumerate(self.values):
            for t, x in zip(self.t_grid, row):
                fh.write(f"{r},{t!r},{float(x)!r}\n")


def _v_breaks(atom, w) -> np.ndarray:
    """v-positions in [0, q) where ``v -> G(v, w)`` may jump or kink, one row per ``w``."""
    lw = atom.s * np.log(np.abs(w))
    cols = []
    for prof, side in ((atom.F1, w > 0), (atom.F2, w < 0)):
        for xb in (0.0,) + tuple(prof.breakpoints()):
            cols.append(np.where(side, np.mod(xb - lw, atom.q), np.nan))
    return np.column_stack(cols)


def _atom_cells(atom, kappa, alpha, t, un, uw, v_cells):
    """Signed cell coefficients (v_cells * u_cells,) for one atom and one time."""
    x, w = _GL
    q = atom.q
    dv = q / v_cells
    cu, nu = un.shape
    uflat = un.ravel()
    br = np.concatenate([_v_breaks(atom, t + uflat), _v_breaks(atom, uflat)], axis=1)
    br = np.where(np.isnan(br), 0.0, br)  # a spare cut at 0 is harmless
    mass = np.zeros((v_cells, cu))
    sgn = np.zeros((v_cells, cu))
    for j in range(v_cells):
        v0, v1 = j * dv, (j + 1) * dv
        cuts = np.sort(np.column_stack([np.full(len(uflat), v0), np.clip(br, v0, v1), np.full(len(uflat), v1)]), axis=1)
        a, b = cuts[:, :-1], cuts[:, 1:]
        half = 0.5 * (b - a)
        vn = (0.5 * (a + b))[..., None] + half[..., None] * x  # (nodes, pieces, 3)
        vw = half[..., None] * w
        ub = uflat[:, None, None]
        g = kernel_values(atom, kappa, vn, t + ub) - kernel_values(atom, kappa, vn, ub)
        inner_m = np.sum(vw * np.abs(g) ** alpha, axis=(1, 2)).reshape(cu, nu)
        inner_s = np.sum(vw * g, axis=(1, 2)).reshape(cu, nu)
        mass[j] = np.sum(uw * inner_m, axis=1)
        sgn[j] = np.sum(uw * inner_s, axis=1)
    sign = np.where(sgn < 0, -1.0, 1.0)
    return (sign * (atom.weight * mass) ** (1 / alpha)).ravel()


def cell_coefficients(spec: KernelSpec, grid: SimulationGrid) -> np.ndarray:
    """Matrix ``A`` of shape (len(t_grid), cells) with ``X(t_j) = sum_C A[j, C] eps_C``."""
    kappa, alpha = spec.kappa, spec.alpha
    edges = grid.u_edges()
    ulo, uhi = edges[:-1], edges[1:]
    x, w = _GL
    uc = 0.5 * (ulo + uhi)
    uh = 0.5 * (uhi - ulo)
    un = uc[:, None] + uh[:, None] * x[None, :]
    uw = uh[:, None] * w[None, :]
    blocks = []
    for atom in spec.atoms:
        if atom.weight == 0 or (atom.F1.is_zero() and atom.F2.is_zero() and not atom.log_active(kappa)):
            continue
        rows = [
            np.zeros(grid.v_cells * len(uc)) if t == 0 else _atom_cells(atom, kappa, alpha, t, un, uw, grid.v_cells)
            for t in grid.t_grid
        ]
        blocks.append(np.array(rows))
    if not blocks:
        return np.zeros((len(grid.t_grid), 0))
    return np.concatenate(blocks, axis=1)


def _block(A, alpha, seed, r0, r1):
    M = A.shape[1]
    E = np.empty((M, r1 - r0))
    for k, rep in enumerate(range(r0, r1)):
        rng = replication_stream(seed, rep)
        V = rng.uniform(-math.pi / 2, math.pi / 2, M)
        Wx = rng.standard_exponential(M)
        E[:, k] = _cms(V, Wx, alpha)
    # einsum without optimisation sums in a fixed order (no BLAS blocking)
    return np.einsum("jm,mb->bj", A, E, optimize=False)


def simulate_paths(spec: KernelSpec, grid: SimulationGrid, replications: int, threads: int = 1) -> PathEnsemble:
    if replications < 1:
        raise DomainError("need at least one replication")
    if threads < 1:
        raise DomainError("threads must be >= 1")
    A = cell_coefficients(spec, grid)
    alpha = spec.alpha
    out = np.zeros((replications, len(grid.t_grid)))
    disc = np.sum(np.abs(A) ** alpha, axis=1) ** (1 / alpha) if A.size else np.zeros(len(grid.t_grid))
    meta = {
        "label": spec.label,
        "grid": grid.to_dict(),
        "cells": int(A.shape[1]),
        "discretized_scale": disc.tolist(),
    }
    if A.shape[1] == 0:
        return PathEnsemble(out, grid.t_grid, alpha, meta)
    spans = [(r, min(r + grid.block, replications)) for r in range(0, replications, grid.block)]
    if threads == 1:
        parts = [_block(A, alpha, grid.seed, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda s: _block(A, alpha, grid.seed, *s), spans))
    for (a, b), p in zip(spans, parts):
        out[a:b] = p
    return PathEnsemble(out, grid.t_grid, alpha, meta)


# ---------------------------------------------------------------------------
# scale estimation


@dataclass
class ScaleEstimate:
    sigma: float
    standard_error: float
    thetas: np.ndarray
    replicates: np.ndarray  # bootstrap values of sigma

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "standard_error": self.standard_error, "thetas": self.thetas.tolist()}


def _fit_sigma(x, thetas, alpha):
    # the law is symmetric, so the imaginary part of phi_hat is pure noise
    phi = np.abs(np.mean(np.cos(np.outer(thetas, x)), axis=1))
    if np.any(phi <= 0):
        return math.nan
    y = -np.log(phi)
    z = np.abs(thetas) ** alpha
    s_alpha = float(np.dot(z, y) / np.dot(z, z))
    return s_alpha ** (1 / alpha) if s_alpha > 0 else math.nan


def _default_thetas(x, alpha):
    # median |X| of a standard SaS variate is close to 1 for all alpha in (0, 2)
    # (it is 1 at alpha = 1 and 0.954 at alpha = 2), so it sets the theta range
    m = float(np.median(np.abs(x)))
    return np.linspace(0.2, 1.2, 11) / m


def empirical_scale(
    ensemble: PathEnsemble | np.ndarray,
    t_index: int = 0,
    theta_grid=None,
    alpha: float | None = None,
    n_boot: int = 200,
    seed: int = 0,
) -> ScaleEstimate:
    """Least-squares fit of ``-log|phi_hat(theta)| = sigma^alpha |theta|^alpha`` with a bootstrap SE.

    The bootstrap resamples are drawn from ``seed`` only, so two calls with the
    same seed and replication count use the same resamples and their
    replicates can be combined (for example into a ratio).
    """
    if isinstance(ensemble, PathEnsemble):
        x = ensemble.column(t_index)
        alpha = ensemble.alpha if alpha is None else alpha
    else:
        x = np.asarray(ensemble, dtype=float).ravel()
        if alpha is None:
            raise DomainError("alpha is required for a bare sample")
    if x.size < 2 or not np.all(np.isfinite(x)) or np.all(x == x[0]):
        raise DomainError("degenerate ensemble: need at least two distinct finite values")
    thetas = _default_thetas(x, alpha) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    if np.any(thetas == 0):
        raise DomainError("theta grid must avoid 0")
    sigma = _fit_sigma(x, thetas, alpha)
    rng = np.random.default_rng(seed)
    reps = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, x.size, x.size)
        reps[b] = _fit_sigma(x[idx], thetas, alpha)
    se = float(np.nanstd(reps, ddof=1)) if n_boot > 1 else math.nan
    return ScaleEstimate(sigma, se, thetas, reps)
