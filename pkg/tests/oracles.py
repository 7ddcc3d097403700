"""Independent reference values.

Nothing here imports the package: the kernels are written out by hand from
their closed forms, the LFSM scale uses mpmath, and the joint exponent of a
single-atom kernel is a brute-force midpoint rule on graded cells.
"""

import math

import mpmath
import numpy as np


def tent(x):
    return min(x, 1.0 - x)


def tent_G(v, u, kappa):
    """Tent atom with q = 1, s = 1, b1 = 1, F2 = 0, F3 = 0."""
    if u <= 0:
        return 0.0
    y = v + math.log(u)
    return tent(y - math.floor(y)) * u ** kappa


def tent_increment(v, t, u, kappa):
    return tent_G(v, t + u, kappa) - tent_G(v, u, kappa)


def lfsm_scale_alpha(kappa, alpha, t=1.0):
    """``int |(t+u)_+^kappa - u_+^kappa|^alpha du`` for kappa in (-1/alpha, 0)."""
    mpmath.mp.dps = 30
    k, a, t = mpmath.mpf(kappa), mpmath.mpf(alpha), mpmath.mpf(t)
    left = t ** (k * a + 1) / (k * a + 1)  # int_{-t}^0 (t+u)^{k a} du
    right = mpmath.quad(lambda u: abs((t + u) ** k - u ** k) ** a, [0, t, 10 * t, mpmath.inf])
    return float(left + right)


def lfsm_bound_integrals(kappa, alpha):
    """The two one-dimensional integrals of the cosine-kernel bound, by mpmath."""
    mpmath.mp.dps = 30
    k, a = mpmath.mpf(kappa), mpmath.mpf(alpha)
    i1 = 1 / (k * a + 1) + mpmath.quad(lambda u: abs((1 + u) ** k - u ** k) ** a, [0, 1, 10, mpmath.inf])
    i2 = mpmath.quad(lambda u: u ** (k * a) * mpmath.log(1 + 1 / u) ** a, [0, 1, 10, mpmath.inf])
    return float(i1), float(i2)


def _graded_cells(points, delta=1e-11, ratio=1.015, far=1e8):
    """Midpoints and widths of cells graded geometrically toward each point."""
    pts = sorted(set(points))
    edges = [pts[0] - far, pts[-1] + far]
    n = int(math.ceil(math.log(far / delta) / math.log(ratio)))
    ladder = delta * ratio ** np.arange(n + 1)
    for i, p in enumerate(pts):
        lo = (p - pts[i - 1]) / 2 if i else far
        hi = (pts[i + 1] - p) / 2 if i + 1 < len(pts) else far
        edges.extend(p - ladder[ladder < lo])
        edges.extend(p + ladder[ladder < hi])
        edges.append(p)
        if i:
            edges.append(p - lo)
    e = np.unique(np.asarray(edges))
    return 0.5 * (e[1:] + e[:-1]), np.diff(e)


def tent_psi(t, theta, kappa, alpha, v_cells=400):
    """``int_0^1 int |sum theta_j G_{t_j}(v, u)|^alpha du dv`` for the tent atom.

    Midpoint in ``v`` and on graded ``u``-cells; the discarded tails beyond
    1e8 weigh about 1e8^{(kappa - 1) alpha + 1} relative.
    """
    t = np.asarray(t, float)
    theta = np.asarray(theta, float)
    uc, du = _graded_cells(np.concatenate([[0.0], -t]))
    vs = (np.arange(v_cells) + 0.5) / v_cells

    def G(v, u):
        out = np.zeros_like(u)
        pos = u > 0
        y = v + np.log(u[pos])
        f = y - np.floor(y)
        out[pos] = np.minimum(f, 1 - f) * u[pos] ** kappa
        return out

    total = 0.0
    for v in vs:
        g0 = G(v, uc)
        acc = np.zeros_like(uc)
        for tj, th in zip(t, theta):
            acc += th * (G(v, tj + uc) - g0)
        total += math.fsum(np.abs(acc) ** alpha * du)
    return total / v_cells
