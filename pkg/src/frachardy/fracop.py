"""Dense symmetric discretization of the restricted fractional Laplacian.

The operator acting on grid functions is

    (L0 f)_i = A(d,a) * sum_j w_ij (f_i - f_j) + kappa_i f_i,

where w_ij integrates the kernel |x_i - y|^(-d-a) over cell j and kappa is the
exterior killing term realizing the zero exterior condition (no ghost nodes).
The hypersingular self-cell term is handled by the symmetric principal-value
pairing: on a cell-centered grid the odd part cancels exactly, and the even
part is a local second-difference correction with exactly integrated moment
weights.  Pairwise differences keep the jump part annihilating constants, so
L0 applied to the constant vector returns kappa exactly.

Quadrature choices: 1D cell integrals are closed-form for every pair; in 2D,
cells within Chebyshev lattice distance <= 3 are subsampled (12x12 midpoint,
restricted to the domain for cut cells) and farther cells use the midpoint
value times the cell measure.  Assembly is row-blocked with per-row sequential
summation, so results are bitwise reproducible for any BLAS thread count; the
final matrix is symmetrized as (M + M^T)/2 and frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import struct
from typing import IO

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from .errors import (
    AssemblyError,
    ConditioningError,
    DomainValidationError,
    IrreducibilityError,
    ShapeMismatchError,
)
from .geometry import DomainSpec, Grid
from .specfun import ModelParams, form_constant, hardy_best_constant

__all__ = [
    "OperatorMatrix",
    "killing_term",
    "exterior_killing_values",
    "assemble_free",
    "hardy_diagonal",
    "assemble_schrodinger",
    "form_and_mass",
    "green_matrix",
    "apply_in_measure",
    "dump_matrix",
    "load_matrix_header",
]

_ROW_BLOCK = 1024
_NEAR_CHEB = 3
_NEAR_SUB = 12
_MAGIC = b"FHLM"

# condition-number ceiling for Green inversion
_COND_LIMIT = 1e13


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense symmetric matrix tied to a grid.

    kind: "free" (L0), "schrodinger" (L_V = L0 - diag(V)), "green" (K = L0
    inverse in the discrete measure) or "green_schrodinger" (K_V).
    """

    entries: np.ndarray
    grid: Grid
    params: ModelParams
    kind: str

    def __post_init__(self):
        self.entries.flags.writeable = False

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _rectangle_ray_exit(bounds, px, py, ux, uy):
    """Distance along direction (ux, uy) from interior points to the rectangle boundary."""
    ax, bx, ay, by = bounds
    with np.errstate(divide="ignore"):
        tx = np.where(ux > 0, (bx - px) / ux, np.where(ux < 0, (ax - px) / ux, np.inf))
        ty = np.where(uy > 0, (by - py) / uy, np.where(uy < 0, (ay - py) / uy, np.inf))
    return np.minimum(tx, ty)


def exterior_killing_values(spec: DomainSpec, points: np.ndarray, alpha: float) -> np.ndarray:
    """kappa(x) = A(d,a) * integral over the exterior of |x-y|^(-d-a) dy.

    1D uses the closed form; 2D reduces to (A/a) * int rho(theta)^(-a) dtheta
    with rho the ray distance to the boundary (domains here are convex).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if spec.kind == "interval":
        a, b = spec.bounds
        A = form_constant(1, alpha)
        x = pts[:, 0]
        return (A / alpha) * ((x - a) ** -alpha + (b - x) ** -alpha)

    A = form_constant(2, alpha)
    px, py = pts[:, 0], pts[:, 1]
    if spec.kind == "disk":
        radius = spec.bounds[0]
        nth = 1024  # smooth periodic integrand: trapezoid converges spectrally
        th = 2.0 * np.pi * (np.arange(nth) + 0.5) / nth
        ux, uy = np.cos(th), np.sin(th)
        xu = px[:, None] * ux[None, :] + py[:, None] * uy[None, :]
        rr = px * px + py * py
        rho = -xu + np.sqrt(radius * radius - rr[:, None] + xu * xu)
        return (A / alpha) * (rho**-alpha).mean(axis=1) * 2.0 * np.pi

    # rectangle: integrand kinks at the corner directions, Gauss per smooth piece
    ax, bx, ay, by = spec.bounds
    gx, gw = np.polynomial.legendre.leggauss(48)
    out = np.empty(pts.shape[0])
    corners = np.array([[bx, by], [ax, by], [ax, ay], [bx, ay]])
    for i in range(pts.shape[0]):
        angles = np.sort(
            np.arctan2(corners[:, 1] - py[i], corners[:, 0] - px[i]) % (2 * np.pi)
        )
        pieces = np.concatenate([angles, [angles[0] + 2 * np.pi]])
        acc = 0.0
        for a0, a1 in zip(pieces[:-1], pieces[1:]):
            th = 0.5 * (a1 - a0) * gx + 0.5 * (a0 + a1)
            rho = _rectangle_ray_exit(spec.bounds, px[i], py[i], np.cos(th), np.sin(th))
            acc += 0.5 * (a1 - a0) * np.sum(gw * rho**-alpha)
        out[i] = (A / alpha) * acc
    return out


def killing_term(grid: Grid, alpha: float) -> np.ndarray:
    """Per-node exterior killing rates kappa(x_i)."""
    if np.any(grid.dist_boundary <= 0.0):
        raise DomainValidationError("grid contains a node on the boundary")
    return exterior_killing_values(grid.spec, grid.nodes, alpha)


def _second_moment_weights(widths: np.ndarray, alpha: float) -> np.ndarray:
    """Per-node (tau_x[, tau_y]): int over the cell of y_k^2 |y|^(-d-a) dy.

    These feed the even-part correction of the principal value on the self
    cell.  1D is closed form; 2D uses the polar reduction of the square cell.
    """
    if widths.shape[1] == 1:
        h = widths[:, 0]
        return (2.0 * (h / 2.0) ** (2.0 - alpha) / (2.0 - alpha))[:, None]
    tau = np.empty_like(widths)
    nth = 2048
    th = 2.0 * np.pi * (np.arange(nth) + 0.5) / nth
    cth, sth = np.cos(th), np.sin(th)
    for k in (0, 1):
        wx = widths[:, k] / 2.0
        wy = widths[:, 1 - k] / 2.0
        # R(theta) of the rectangle cell boundary, measured from the node
        R = np.minimum(
            wx[:, None] / np.maximum(np.abs(cth)[None, :], 1e-300),
            wy[:, None] / np.maximum(np.abs(sth)[None, :], 1e-300),
        )
        tau[:, k] = (
            (cth**2)[None, :] * R ** (2.0 - alpha) / (2.0 - alpha)
        ).sum(axis=1) * (2.0 * np.pi / nth)
    return tau


def _kernel_weights_1d(grid: Grid, alpha: float) -> np.ndarray:
    """Exact integrals of |x_i - y|^(-1-a) over every cell j != i."""
    x = grid.nodes[:, 0]
    edges = grid.axes[0]
    left = edges[:-1]
    right = edges[1:]
    n = x.size
    W = np.empty((n, n))
    for i0 in range(0, n, _ROW_BLOCK):
        xi = x[i0 : i0 + _ROW_BLOCK, None]
        dl = left[None, :] - xi
        dr = right[None, :] - xi
        with np.errstate(divide="ignore", invalid="ignore"):
            right_of = (np.abs(dl) ** -alpha - np.abs(dr) ** -alpha) / alpha
            left_of = (np.abs(dr) ** -alpha - np.abs(dl) ** -alpha) / alpha
        W[i0 : i0 + _ROW_BLOCK] = np.where(dl >= 0.0, right_of, np.where(dr <= 0.0, left_of, 0.0))
    np.fill_diagonal(W, 0.0)
    return W


def _kernel_weights_2d(grid: Grid, alpha: float) -> np.ndarray:
    """Midpoint-far / subsampled-near integrals of the 2D kernel over cells."""
    xs = grid.nodes[:, 0]
    ys = grid.nodes[:, 1]
    meas = grid.cell_measure
    n = xs.size
    expo = -(2.0 + alpha) / 2.0
    W = np.empty((n, n))
    for i0 in range(0, n, _ROW_BLOCK):
        dx = xs[i0 : i0 + _ROW_BLOCK, None] - xs[None, :]
        dy = ys[i0 : i0 + _ROW_BLOCK, None] - ys[None, :]
        r2 = dx * dx + dy * dy
        r2[r2 == 0.0] = 1.0
        W[i0 : i0 + _ROW_BLOCK] = r2**expo * meas[None, :]
    np.fill_diagonal(W, 0.0)

    # near band: subsample the source cell (inside-mask handles cut cells)
    npa = grid.n_per_axis
    idx_map = np.full((npa, npa), -1, dtype=np.intp)
    idx_map[grid.grid_index[:, 0], grid.grid_index[:, 1]] = np.arange(n)
    sub = (np.arange(_NEAR_SUB) + 0.5) / _NEAR_SUB - 0.5
    bx, by = np.meshgrid(sub, sub, indexing="ij")
    bx = bx.ravel()
    by = by.ravel()
    is_disk = grid.spec.kind == "disk"
    radius = grid.spec.bounds[0] if is_disk else 0.0
    gi = grid.grid_index[:, 0]
    gj = grid.grid_index[:, 1]
    for di in range(-_NEAR_CHEB, _NEAR_CHEB + 1):
        for dj in range(-_NEAR_CHEB, _NEAR_CHEB + 1):
            if di == 0 and dj == 0:
                continue
            a2 = gi + di
            b2 = gj + dj
            ok = (a2 >= 0) & (a2 < npa) & (b2 >= 0) & (b2 < npa)
            jid = np.where(ok, idx_map[np.clip(a2, 0, npa - 1), np.clip(b2, 0, npa - 1)], -1)
            sel = jid >= 0
            if not sel.any():
                continue
            I = np.nonzero(sel)[0]
            J = jid[sel]
            wxj = grid.cell_widths[J, 0][:, None]
            wyj = grid.cell_widths[J, 1][:, None]
            px = xs[J][:, None] + bx[None, :] * wxj
            py = ys[J][:, None] + by[None, :] * wyj
            ker = ((px - xs[I][:, None]) ** 2 + (py - ys[I][:, None]) ** 2) ** expo
            if is_disk:
                ker = ker * (px * px + py * py < radius * radius)
            W[I, J] = ker.mean(axis=1) * (wxj[:, 0] * wyj[:, 0])
    return W


def _axis_neighbor_pairs(grid: Grid):
    """(I, J, axis) arrays of axis-adjacent node pairs; both cells full."""
    if grid.dim == 1:
        n = grid.n_nodes
        I = np.arange(n - 1)
        return [(I, I + 1, 0)]
    npa = grid.n_per_axis
    idx_map = np.full((npa, npa), -1, dtype=np.intp)
    idx_map[grid.grid_index[:, 0], grid.grid_index[:, 1]] = np.arange(grid.n_nodes)
    out = []
    gi, gj = grid.grid_index[:, 0], grid.grid_index[:, 1]
    for axis, (di, dj) in enumerate(((1, 0), (0, 1))):
        a2 = gi + di
        b2 = gj + dj
        ok = (a2 >= 0) & (a2 < npa) & (b2 >= 0) & (b2 < npa)
        jid = np.where(ok, idx_map[np.clip(a2, 0, npa - 1), np.clip(b2, 0, npa - 1)], -1)
        sel = (jid >= 0) & grid.full_cell & np.where(
            jid >= 0, grid.full_cell[np.clip(jid, 0, grid.n_nodes - 1)], False
        )
        out.append((np.nonzero(sel)[0], jid[sel], axis))
    return out


def assemble_free(grid: Grid, alpha: float) -> OperatorMatrix:
    """Assemble L0 = (-Delta)^(a/2) restricted to the grid's domain."""
    if not (0.0 < alpha < min(2.0, grid.dim)):
        raise DomainValidationError(
            f"alpha={alpha} outside (0, min(2, d)) for d={grid.dim}"
        )
    A = form_constant(grid.dim, alpha)
    W = _kernel_weights_1d(grid, alpha) if grid.dim == 1 else _kernel_weights_2d(grid, alpha)
    kappa = killing_term(grid, alpha)
    M = W
    M *= -A
    idx = np.arange(grid.n_nodes)
    M[idx, idx] = -M.sum(axis=1) + kappa

    tau = _second_moment_weights(grid.cell_widths, alpha)
    for I, J, axis in _axis_neighbor_pairs(grid):
        hx = 0.5 * (grid.cell_widths[I, axis] + grid.cell_widths[J, axis])
        sig = A * 0.5 * (tau[I, axis] + tau[J, axis]) / (2.0 * hx * hx)
        np.add.at(M, (I, J), -sig)
        np.add.at(M, (J, I), -sig)
        np.add.at(M, (I, I), sig)
        np.add.at(M, (J, J), sig)

    M += M.T
    M *= 0.5
    params = ModelParams(d=grid.dim, alpha=alpha, c=0.0)
    return OperatorMatrix(entries=M, grid=grid, params=params, kind="free")


def hardy_diagonal(grid: Grid, alpha: float, c: float) -> np.ndarray:
    """V_i = c |x_i|^(-alpha); c must lie in [0, c*]."""
    c_star = hardy_best_constant(grid.dim, alpha)
    if not (0.0 <= c <= c_star * (1.0 + 1e-12)):
        raise DomainValidationError(f"c={c} outside [0, c*] = [0, {c_star}]")
    return c * grid.dist_origin**-alpha


def assemble_schrodinger(L0: OperatorMatrix, V: np.ndarray, c: float | None = None) -> OperatorMatrix:
    """L_V = L0 - diag(V).  V=0 returns an identical-entries matrix."""
    V = np.asarray(V, dtype=float)
    if L0.kind != "free":
        raise DomainValidationError(f"expected a free operator, got kind={L0.kind!r}")
    if V.shape != (L0.n,):
        raise ShapeMismatchError(f"potential has shape {V.shape}, operator has n={L0.n}")
    M = L0.entries.copy()
    idx = np.arange(L0.n)
    M[idx, idx] -= V
    params = L0.params if c is None else replace(L0.params, c=float(c))
    return OperatorMatrix(entries=M, grid=L0.grid, params=params, kind="schrodinger")


def form_and_mass(op: OperatorMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric form matrix S = sym(diag(m) M) and the cell-measure vector m.

    The quadratic form on grid functions is f^T S f and the L2 inner product
    is f^T diag(m) g; eigen-solves and Green inversion live in this geometry.
    """
    m = op.grid.cell_measure
    S = m[:, None] * op.entries
    S += S.T
    S *= 0.5
    return S, m


def green_matrix(L: OperatorMatrix) -> OperatorMatrix:
    """Kernel values of the inverse: K with  K diag(m) L = identity.

    K_ij approximates the Green function G(x_i, x_j); composition with a grid
    function g is sum_j K_ij m_j g_j.  Fails with a conditioning error when L
    is numerically singular (c > c*, or critical-case growth past 1e13).
    """
    if L.kind not in ("free", "schrodinger"):
        raise DomainValidationError(f"cannot invert kind={L.kind!r}")
    S, m = form_and_mass(L)
    try:
        chol = cho_factor(S, check_finite=False)
    except np.linalg.LinAlgError as exc:
        ev = eigvalsh(S, check_finite=False)
        cond = abs(ev[-1] / ev[0]) if ev[0] != 0.0 else np.inf
        raise ConditioningError(
            f"operator not positive definite (min eig {ev[0]:.3e}); "
            f"condition estimate {cond:.3e}",
            cond_estimate=float(cond),
        ) from exc
    K = cho_solve(chol, np.eye(L.n), check_finite=False)
    K = 0.5 * (K + K.T)
    cond = float(np.abs(S).sum(axis=0).max() * np.abs(K).sum(axis=0).max())
    if cond > _COND_LIMIT:
        raise ConditioningError(
            f"condition estimate {cond:.3e} exceeds limit {_COND_LIMIT:.1e}",
            cond_estimate=cond,
        )
    if K.min() <= 0.0:
        raise IrreducibilityError(
            f"Green matrix has a nonpositive entry (min {K.min():.3e}); "
            "discrete irreducibility violated, quadrature defect likely"
        )
    kind = "green" if L.kind == "free" else "green_schrodinger"
    return OperatorMatrix(entries=K, grid=L.grid, params=L.params, kind=kind)


def apply_in_measure(kernel: np.ndarray, m: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Compose a kernel matrix with a grid function: (K f)_i = sum_j K_ij m_j f_j."""
    return kernel @ (m * f)


def dump_matrix(op: OperatorMatrix, out: IO[bytes]) -> None:
    """Binary dump: 32-byte header (magic FHLM, n, d, alpha, c) + row-major f8 LE."""
    header = struct.pack(
        "<4sIIdd4x", _MAGIC, op.n, op.grid.dim, op.params.alpha, op.params.c
    )
    assert len(header) == 32
    out.write(header)
    out.write(np.ascontiguousarray(op.entries, dtype="<f8").tobytes())


def load_matrix_header(data: bytes) -> tuple[int, int, float, float]:
    """Parse the 32-byte dump header; returns (n, d, alpha, c)."""
    magic, n, d, alpha, c = struct.unpack("<4sIIdd4x", data[:32])
    if magic != _MAGIC:
        raise DomainValidationError(f"bad magic {magic!r} in matrix dump")
    return n, d, alpha, c
