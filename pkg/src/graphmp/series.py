"""Generating-value arithmetic in two interchangeable modes.

A generating value is either the evaluation of a cluster-size generating
function H(z) at a fixed real z > 0 (scalar mode, a plain float) or its
truncated power series in z (series mode, a float array indexed by degree,
constant term 0 for message-like values). The percolation engine is generic
over the two via these small algebra objects.

The one combination rule that matters: a message H_{c->s}(z) counts node s
itself, so combining the messages a node receives from several classes while
counting the node once is

    combine(messages) = z * prod_m (m / z),

which is z for an empty collection (a bare node is a cluster of size one).
"""

from __future__ import annotations

import numpy as np


class ScalarAlgebra:
    """Values are H(z) at a fixed z > 0."""

    mode = "scalar"

    def __init__(self, z: float = 1.0):
        if z <= 0:
            raise ValueError("scalar mode requires z > 0")
        self.z = float(z)

    def one(self):
        return 1.0

    def z_value(self):
        return self.z

    def mul(self, a, b):
        return a * b

    def scale(self, a, c: float):
        return c * a

    def add(self, a, b):
        return a + b

    def times_z(self, a):
        return self.z * a

    def combine(self, messages) -> float:
        out = self.z
        for m in messages:
            out *= m / self.z
        return out

    def blend(self, old, new, alpha: float):
        return alpha * old + (1.0 - alpha) * new

    def max_diff(self, a, b) -> float:
        return abs(a - b)

    def is_finite(self, a) -> bool:
        return bool(np.isfinite(a))

    def total(self, a) -> float:
        """Value at the evaluation point (identity in scalar mode)."""
        return float(a)


class SeriesAlgebra:
    """Values are coefficient arrays c[0..s_max]; index = power of z."""

    mode = "series"

    def __init__(self, s_max: int):
        if s_max < 1:
            raise ValueError("series mode requires s_max >= 1")
        self.s_max = int(s_max)
        self.size = self.s_max + 1

    def one(self):
        e = np.zeros(self.size)
        e[0] = 1.0
        return e

    def z_value(self):
        e = np.zeros(self.size)
        e[1] = 1.0
        return e

    def mul(self, a, b):
        return np.convolve(a, b)[: self.size]

    def scale(self, a, c: float):
        return c * a

    def add(self, a, b):
        return a + b

    def times_z(self, a):
        out = np.zeros(self.size)
        out[1:] = a[:-1]
        return out

    def _div_z(self, a):
        # valid for message-like values (zero constant term); the dropped
        # a[0] is zero up to float noise
        out = np.zeros(self.size)
        out[:-1] = a[1:]
        return out

    def combine(self, messages) -> np.ndarray:
        prod = self.one()
        for m in messages:
            prod = self.mul(prod, self._div_z(m))
        return self.times_z(prod)

    def blend(self, old, new, alpha: float):
        return alpha * old + (1.0 - alpha) * new

    def max_diff(self, a, b) -> float:
        return float(np.max(np.abs(a - b)))

    def is_finite(self, a) -> bool:
        return bool(np.all(np.isfinite(a)))

    def total(self, a) -> float:
        """Sum of coefficients = H(1) restricted to degrees <= s_max."""
        return float(np.sum(a))
