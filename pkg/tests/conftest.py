"""Shared lazily-cached grids, operators and eigensolutions.

The dense assemblies and eigensolves dominate suite runtime, so everything
expensive is built once per session and shared across test modules.
"""

import numpy as np
import pytest

from frachardy.fracop import (
    assemble_free,
    assemble_schrodinger,
    green_matrix,
    hardy_diagonal,
)
from frachardy.geometry import DomainSpec, build_grid
from frachardy.specfun import hardy_best_constant
from frachardy.spectral import eigensolve


class Lab:
    """Cache keyed by (domain kind, n, coupling, full-spectrum flag)."""

    def __init__(self):
        self._grids = {}
        self._free = {}
        self._eigs = {}
        self._greens = {}

    @staticmethod
    def _domain(kind):
        if kind == "interval":
            return DomainSpec.interval(-1.0, 1.0)
        if kind == "disk":
            return DomainSpec.disk(1.0)
        return DomainSpec.rectangle(-1.0, 1.0, -1.0, 1.0)

    @staticmethod
    def alpha(kind):
        return 0.5 if kind == "interval" else 1.0

    def c_star(self, kind):
        d = 1 if kind == "interval" else 2
        return hardy_best_constant(d, self.alpha(kind))

    def grid(self, kind, n):
        key = (kind, n)
        if key not in self._grids:
            self._grids[key] = build_grid(self._domain(kind), n)
        return self._grids[key]

    def free(self, kind, n):
        key = (kind, n)
        if key not in self._free:
            self._free[key] = assemble_free(self.grid(kind, n), self.alpha(kind))
        return self._free[key]

    def operator(self, kind, n, c_frac):
        L0 = self.free(kind, n)
        if c_frac == 0.0:
            return L0
        c = c_frac * self.c_star(kind)
        V = hardy_diagonal(self.grid(kind, n), self.alpha(kind), c)
        return assemble_schrodinger(L0, V, c=c)

    def eig(self, kind, n, c_frac, full=False):
        key = (kind, n, c_frac, full)
        if key not in self._eigs:
            k = None if full else 1
            self._eigs[key] = eigensolve(self.operator(kind, n, c_frac), k=k)
        return self._eigs[key]

    def green(self, kind, n, c_frac):
        key = (kind, n, c_frac)
        if key not in self._greens:
            self._greens[key] = green_matrix(self.operator(kind, n, c_frac))
        return self._greens[key]


@pytest.fixture(scope="session")
def lab():
    return Lab()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
