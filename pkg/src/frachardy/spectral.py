"""Eigen-solves and heat kernels by full eigen-expansion.

Everything lives in the measure geometry of the grid: the generalized
symmetric-definite problem  S v = lambda diag(m) v  with S the form matrix
gives eigenvectors orthonormal under the cell-measure inner product, and

    p_t(x_i, x_j) = sum_k exp(-lambda_k t) v_k(i) v_k(j)

reproduces heat-kernel *values*, so traces and compositions carry the measure
explicitly.  Dense solvers only: at the desk-scale cap (~4k unknowns) a full
spectrum costs seconds and is needed anyway for the heat kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
from scipy.linalg import eigh

from .errors import (
    AssemblyError,
    DomainValidationError,
    IrreducibilityError,
    UnderflowError,
)
from .fracop import OperatorMatrix, assemble_free, assemble_schrodinger, form_and_mass, hardy_diagonal
from .geometry import Grid
from .specfun import ModelParams

__all__ = [
    "EigenSolution",
    "HeatKernel",
    "eigensolve",
    "heat_kernel",
    "coupling_sweep",
    "spectrum_to_csv",
    "ground_state_to_csv",
]

_MIXED_SIGN_TOL = 1e-10


@dataclass(frozen=True)
class EigenSolution:
    """Ascending eigenvalues with measure-orthonormal eigenvectors.

    The ground state (first column) is sign-fixed positive and normalized so
    that sum(phi^2 * cell_measure) = 1.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: Grid
    params: ModelParams
    operator: OperatorMatrix

    def __post_init__(self):
        self.eigenvalues.flags.writeable = False
        self.eigenvectors.flags.writeable = False

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def spectral_gap(self) -> float:
        if self.eigenvalues.size < 2:
            raise DomainValidationError("need at least two eigenvalues for a gap")
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def is_full(self) -> bool:
        return self.eigenvalues.size == self.grid.n_nodes


@dataclass(frozen=True)
class HeatKernel:
    """Kernel values p_t(x_i, x_j) of exp(-t L) on one grid."""

    t: float
    matrix: np.ndarray
    grid: Grid
    params: ModelParams

    def __post_init__(self):
        self.matrix.flags.writeable = False

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Semigroup action in the discrete measure: sum_j p_t(i,j) m_j f_j."""
        return self.matrix @ (self.grid.cell_measure * f)

    def trace(self) -> float:
        return float(np.sum(np.diagonal(self.matrix) * self.grid.cell_measure))


def eigensolve(L: OperatorMatrix, k: int | None = None) -> EigenSolution:
    """Lowest k eigenpairs (all of them when k is None).

    Raises AssemblyError when a free operator comes out non-positive (the
    continuum operator is positive definite, so that signals a quadrature
    defect) and IrreducibilityError when the ground state changes sign beyond
    1e-10 relative.
    """
    if L.kind not in ("free", "schrodinger"):
        raise DomainValidationError(f"cannot eigensolve kind={L.kind!r}")
    n = L.n
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise DomainValidationError(f"k={k} outside 1..{n}")
    S, m = form_and_mass(L)
    B = np.diag(m)
    if k == n:
        vals, vecs = eigh(S, B, check_finite=False)
    else:
        vals, vecs = eigh(S, B, subset_by_index=[0, k - 1], check_finite=False)
    if L.kind == "free" and vals[0] <= 0.0:
        raise AssemblyError(
            f"free operator has nonpositive smallest eigenvalue {vals[0]:.3e}"
        )
    phi = vecs[:, 0]
    if float(np.sum(phi * m)) < 0.0:
        vecs = vecs.copy()
        vecs[:, 0] = -phi
        phi = vecs[:, 0]
    scale = float(np.abs(phi).max())
    if phi.min() < -_MIXED_SIGN_TOL * scale:
        raise IrreducibilityError(
            f"ground state has mixed signs (min {phi.min():.3e} at scale {scale:.3e})"
        )
    return EigenSolution(
        eigenvalues=vals, eigenvectors=vecs, grid=L.grid, params=L.params, operator=L
    )


def heat_kernel(eig: EigenSolution, t: float) -> HeatKernel:
    """p_t by eigen-expansion; requires the full spectrum."""
    if t <= 0.0:
        raise DomainValidationError(f"time must be positive, got {t}")
    if not eig.is_full:
        raise DomainValidationError("heat kernel needs the full spectrum")
    if eig.lambda0 * t > 700.0:
        raise UnderflowError(
            f"exp(-lambda0 t) underflows at t={t}; keep t below {700.0 / eig.lambda0:.3g}"
        )
    decay = np.exp(-eig.eigenvalues * t)
    P = (eig.eigenvectors * decay[None, :]) @ eig.eigenvectors.T
    P = 0.5 * (P + P.T)
    return HeatKernel(t=float(t), matrix=P, grid=eig.grid, params=eig.params)


@dataclass(frozen=True)
class SweepEntry:
    c: float
    lambda0: float
    ground_state: np.ndarray
    l2_dist_prev: float  # measure-weighted distance to the previous ground state


def coupling_sweep(grid: Grid, alpha: float, c_list: Sequence[float]) -> list[SweepEntry]:
    """Ground states along an ascending list of couplings in [0, c*].

    lambda0 must come out strictly decreasing (the forms decrease in c); the
    c = 0 entry is the free eigensolve, bit-exact.
    """
    cs = [float(c) for c in c_list]
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise DomainValidationError("c_list must be strictly ascending")
    L0 = assemble_free(grid, alpha)
    m = grid.cell_measure
    out: list[SweepEntry] = []
    prev_phi = None
    for c in cs:
        L = L0 if c == 0.0 else assemble_schrodinger(L0, hardy_diagonal(grid, alpha, c), c=c)
        sol = eigensolve(L, k=1)
        phi = sol.ground_state
        dist = 0.0 if prev_phi is None else float(np.sqrt(np.sum((phi - prev_phi) ** 2 * m)))
        out.append(SweepEntry(c=c, lambda0=sol.lambda0, ground_state=phi, l2_dist_prev=dist))
        prev_phi = phi
    lam = [e.lambda0 for e in out]
    if any(b >= a for a, b in zip(lam, lam[1:])):
        raise AssemblyError(f"lambda0 not strictly decreasing along the sweep: {lam}")
    return out


def spectrum_to_csv(eig: EigenSolution, out: IO[str]) -> None:
    out.write("index,eigenvalue\n")
    for i, v in enumerate(eig.eigenvalues):
        out.write(f"{i},{v:.17g}\n")


def ground_state_to_csv(eig: EigenSolution, out: IO[str]) -> None:
    grid = eig.grid
    dim = grid.dim
    cols = ["x1", "x2"][:dim] + ["dist_origin", "dist_boundary", "phi0"]
    out.write(",".join(cols) + "\n")
    phi = eig.ground_state
    for i in range(grid.n_nodes):
        row = [f"{grid.nodes[i, k]:.17g}" for k in range(dim)]
        row += [
            f"{grid.dist_origin[i]:.17g}",
            f"{grid.dist_boundary[i]:.17g}",
            f"{phi[i]:.17g}",
        ]
        out.write(",".join(row) + "\n")
