"""Randomised generator functions for the flow functional equations."""

import numpy as np

from fracstable.flows import CyclicFlow, FlowTriple


def random_triple(rng, q, s, b1):
    """Generators: a random sign pattern b~, a trigonometric g~ and a smooth j~."""
    cuts = np.sort(rng.uniform(0, q, 3))

    def btil(x, c=cuts):
        return np.where(np.searchsorted(c, x) % 2 == 0, 1.0, -1.0)

    a = rng.normal(size=3)

    def gtil(x, a=a):
        return a[0] + a[1] * np.sin(2 * np.pi * x / q) + a[2] * x

    bcoef = rng.normal(size=2)

    def jtil(x, b=bcoef):
        return b[0] * np.cos(x) + b[1] * x**2

    return FlowTriple(CyclicFlow((q,), (s,)), (b1,), (btil,), (gtil,), (jtil,), (float(rng.normal()),))
