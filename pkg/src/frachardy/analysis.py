"""Estimate-by-estimate verification instruments.

Each instrument turns one proved estimate into a number with a pass criterion:
log-log exponent fits for the boundary and origin rates, two-sided
comparability ratios, the Green-representation residual, generalized Rayleigh
quotients for the Hardy inequalities, heat-kernel intrinsic-ultracontractivity
deviations, Green lower bounds, and the critical blow-up diagnostic.

Fit windows are configuration, set by two-grid calibration runs: they exclude
the two innermost grid shells next to the feature being fitted (those are
discretization-dominated) and stay close enough to the feature that the
next-order correction of the continuum profile does not pollute the slope.
Boundary fits use delta in [2h, 12h] in 1D and [2h, 3h] in 2D; origin fits use
|x| in [2h, diam/8] below the critical coupling and [diam/32, diam/8] at it,
where the approach to the limiting exponent is logarithmic and only the outer
window is informative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh

from .errors import InsufficientDataError, ShapeMismatchError
from .fracop import (
    OperatorMatrix,
    apply_in_measure,
    assemble_free,
    assemble_schrodinger,
    form_and_mass,
    hardy_diagonal,
)
from .geometry import Grid
from .spectral import EigenSolution, HeatKernel, eigensolve
from .specfun import ModelParams

__all__ = [
    "ExponentFit",
    "CheckResult",
    "fit_power_law",
    "boundary_fit_window",
    "singularity_fit_window",
    "boundary_exponent",
    "singularity_exponent",
    "comparability_ratio",
    "ground_state_representation_residual",
    "hardy_rayleigh_min",
    "intrinsic_hardy_constant",
    "iuc_ratio",
    "green_lower_bound_ratio",
    "critical_blowup_diagnostic",
    "doob_ground_lower_bound",
]


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares power-law fit in log-log coordinates."""

    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class CheckResult:
    """One named verification outcome: value against tolerance, plus context."""

    name: str
    value: float
    tolerance: float
    passed: bool
    context: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "context": self.context,
        }


def fit_power_law(
    abscissa: np.ndarray, ordinate: np.ndarray, window: tuple[float, float]
) -> ExponentFit:
    """Slope and intercept of log(ordinate) against log(abscissa) inside window."""
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(ordinate, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < 4:
        raise InsufficientDataError(
            f"power-law fit needs >= 4 points in [{lo}, {hi}], found {int(mask.sum())}"
        )
    if np.any(x[mask] <= 0.0) or np.any(y[mask] <= 0.0):
        raise InsufficientDataError("power-law fit requires positive data")
    lx = np.log(x[mask])
    ly = np.log(y[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if sst == 0.0 else 1.0 - float(np.sum(resid**2)) / sst
    return ExponentFit(
        exponent=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        window=(lo, hi),
        n_points=int(mask.sum()),
    )


def boundary_fit_window(grid: Grid) -> tuple[float, float]:
    hi_shells = 12.0 if grid.dim == 1 else 3.0
    return (2.0 * grid.h, min(hi_shells * grid.h, grid.spec.diameter / 8.0))


def singularity_fit_window(grid: Grid, params: ModelParams) -> tuple[float, float]:
    diam = grid.spec.diameter
    lo = diam / 32.0 if params.is_critical else 2.0 * grid.h
    return (max(lo, 2.0 * grid.h), diam / 8.0)


def boundary_exponent(
    eig: EigenSolution, window: tuple[float, float] | None = None
) -> ExponentFit:
    """Fit of the ground state against delta(x), away from the origin.

    The proved rate delta^(alpha/2) is boundary-local and holds for every
    admissible coupling, so the mask keeps |x| >= diam/4.
    """
    grid = eig.grid
    if window is None:
        window = boundary_fit_window(grid)
    keep = grid.dist_origin >= grid.spec.diameter / 4.0
    return fit_power_law(
        grid.dist_boundary[keep], eig.ground_state[keep], window
    )


def singularity_exponent(
    eig: EigenSolution, window: tuple[float, float] | None = None
) -> ExponentFit:
    """Fit of the ground state against |x| near the origin; expect -beta(c)."""
    grid = eig.grid
    if window is None:
        window = singularity_fit_window(grid, eig.params)
    keep = grid.dist_boundary >= grid.spec.diameter / 4.0
    return fit_power_law(grid.dist_origin[keep], eig.ground_state[keep], window)


def comparability_ratio(
    phi: np.ndarray, model: np.ndarray, measure: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, float]:
    """(sup, inf) over masked nodes of phi/model after equalizing L2(m) norms."""
    phi = np.asarray(phi, float)
    model = np.asarray(model, float)
    if mask is None:
        mask = np.ones(phi.shape, dtype=bool)
    if not mask.any():
        raise InsufficientDataError("comparability mask is empty")
    p = phi[mask]
    q = model[mask]
    m = measure[mask]
    if np.any(q <= 0.0):
        raise InsufficientDataError("comparability model must be positive on the mask")
    q = q * np.sqrt(np.sum(p * p * m) / np.sum(q * q * m))
    ratio = p / q
    return float(ratio.max()), float(ratio.min())


def ground_state_representation_residual(
    phi: np.ndarray, lambda0: float, green: OperatorMatrix, V: np.ndarray
) -> float:
    """Relative L2(m) residual of  phi = K(V phi) + lambda0 K phi.

    K must be the Green matrix of the free operator on the same grid; the
    identity is then exact discrete algebra, so the residual only measures
    solver roundoff (and conditioning at the critical coupling).
    """
    if green.kind != "green":
        raise ShapeMismatchError("need the Green matrix of the free operator")
    n = green.n
    if phi.shape != (n,) or V.shape != (n,):
        raise ShapeMismatchError("phi/V do not match the Green matrix grid")
    m = green.grid.cell_measure
    recon = apply_in_measure(green.entries, m, V * phi) + lambda0 * apply_in_measure(
        green.entries, m, phi
    )
    num = float(np.sqrt(np.sum((phi - recon) ** 2 * m)))
    den = float(np.sqrt(np.sum(phi**2 * m)))
    return num / den


def _generalized_min_eig(L0: OperatorMatrix, weight_diag: np.ndarray) -> float:
    S, m = form_and_mass(L0)
    vals = eigh(
        S,
        np.diag(weight_diag * m),
        subset_by_index=[0, 0],
        eigvals_only=True,
        check_finite=False,
    )
    return float(vals[0])


def hardy_rayleigh_min(L0: OperatorMatrix) -> float:
    """Discrete Hardy constant: min of E[f] / int f^2 |x|^(-alpha).

    Scale invariance makes the continuum infimum equal c* on any domain
    containing the origin; the discrete value sits above it and decreases
    toward it under refinement.
    """
    grid = L0.grid
    return _generalized_min_eig(L0, grid.dist_origin ** -L0.params.alpha)


def intrinsic_hardy_constant(L0: OperatorMatrix, eig_free: EigenSolution) -> tuple[float, float]:
    """(mu, C_H): smallest eigenvalue of E[f] / int (f/phi0)^2 and its inverse."""
    phi = eig_free.ground_state
    mu = _generalized_min_eig(L0, phi**-2.0)
    return mu, 1.0 / mu


def iuc_ratio(heat: HeatKernel, eig: EigenSolution) -> float:
    """sup over node pairs of |p_t e^(lambda0 t) / (phi0 x phi0) - 1|.

    Decays like exp(-(lambda1 - lambda0) t) up to a constant; the instrument
    behind every intrinsic-ultracontractivity and large-time claim.
    """
    if heat.grid is not eig.grid and heat.matrix.shape[0] != eig.grid.n_nodes:
        raise ShapeMismatchError("heat kernel and eigensolution grids differ")
    phi = eig.ground_state
    dev = heat.matrix * np.exp(eig.lambda0 * heat.t) / np.outer(phi, phi) - 1.0
    return float(np.abs(dev).max())


def green_lower_bound_ratio(
    green: OperatorMatrix, w: np.ndarray | None = None
) -> float:
    """min over pairs of K(x,y) / (delta^(a/2)(x) delta^(a/2)(y) [w(x) w(y)]).

    Strict positivity realizes the Green lower bound; the value is a kernel
    quantity, hence stable (within a factor) under refinement.
    """
    grid = green.grid
    prof = grid.dist_boundary ** (green.params.alpha / 2.0)
    if w is not None:
        prof = prof * w
    ratios = green.entries / np.outer(prof, prof)
    return float(ratios.min())


def critical_blowup_diagnostic(
    grid_sequence: Sequence[Grid],
    alpha: float,
    c: float,
    ground_states: Sequence[np.ndarray] | None = None,
) -> list[float]:
    """I_n = sum |x_i|^(-alpha) phi(x_i)^2 m_i across a refinement sequence.

    At the critical coupling the continuum integral diverges (logarithmically),
    so I_n must keep increasing; below it the sequence converges.  Ground
    states are solved per grid unless supplied.
    """
    grids = list(grid_sequence)
    if len(grids) < 3:
        raise InsufficientDataError("blow-up diagnostic needs at least 3 grids")
    out = []
    for idx, grid in enumerate(grids):
        if ground_states is not None:
            phi = np.asarray(ground_states[idx], dtype=float)
        else:
            L0 = assemble_free(grid, alpha)
            L = L0 if c == 0.0 else assemble_schrodinger(
                L0, hardy_diagonal(grid, alpha, c), c=c
            )
            phi = eigensolve(L, k=1).ground_state
        out.append(float(np.sum(grid.dist_origin**-alpha * phi**2 * grid.cell_measure)))
    return out


def doob_ground_lower_bound(
    eig_V: EigenSolution, eig_free: EigenSolution
) -> tuple[float, int]:
    """(min ratio, argmin node) of phi0^V / phi0 for L2-normalized states.

    Positivity is the point; the minimizer sits near the boundary, never near
    the origin where the weight singularity pushes the ratio up.
    """
    if eig_V.grid is not eig_free.grid and eig_V.grid.n_nodes != eig_free.grid.n_nodes:
        raise ShapeMismatchError("eigensolutions live on different grids")
    ratio = eig_V.ground_state / eig_free.ground_state
    k = int(np.argmin(ratio))
    return float(ratio[k]), k
