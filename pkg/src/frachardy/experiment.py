"""Config-driven experiment runner with a named-check registry.

A run resolves one ExperimentConfig into a ladder of grids (base n doubled
per refinement), lazily assembles operators and eigensolutions with caching,
executes the requested checks, and persists:

    report.json      {params, grid, checks: [{name, value, tolerance, pass, context}]}
    spectrum.csv     index,eigenvalue             (solve/heat runs)
    groundstate.csv  coordinates, |x|, delta, phi0
    manifest.json    config snapshot, version, wall-clock per stage,
                     sha256 + byte count of every emitted file
    traces/*.csv     per-check raw data

Identical configs produce byte-identical data files (the manifest carries
wall-clock times and is exempt).  Exit-code contract: 0 all checks pass,
1 any check failed, 2 internal/validation error (raised as FracHardyError
and mapped by the CLI).

Constants and Riesz checks are grid-free and accept d=3; everything else
runs on 1D/2D grids.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CheckResult,
    boundary_exponent,
    comparability_ratio,
    critical_blowup_diagnostic,
    doob_ground_lower_bound,
    green_lower_bound_ratio,
    ground_state_representation_residual,
    hardy_rayleigh_min,
    intrinsic_hardy_constant,
    iuc_ratio,
    singularity_exponent,
)
from .doob import build_weighted_form, conjugate, q_transform_residual, weight_vector
from .errors import DomainValidationError
from .fracop import (
    OperatorMatrix,
    assemble_free,
    assemble_schrodinger,
    dump_matrix,
    green_matrix,
    hardy_diagonal,
)
from .geometry import (
    DEFAULT_NODE_BUDGET,
    DomainSpec,
    Grid,
    build_grid,
    grid_to_csv,
    parse_domain,
)
from .riesz import convention_audit, verify_harmonic_identity
from .specfun import (
    ModelParams,
    beta_of_c,
    coupling_F,
    critical_point_check,
    form_constant,
    hardy_best_constant,
    hardy_best_constant_naive,
    riesz_constant_std,
)
from .spectral import (
    EigenSolution,
    coupling_sweep,
    eigensolve,
    ground_state_to_csv,
    heat_kernel,
    spectrum_to_csv,
)

__all__ = [
    "ExperimentConfig",
    "SolveContext",
    "CHECKS",
    "run_solve",
    "run_verify_all",
    "run_heat",
    "run_sweep",
    "run_riesz_check",
    "constants_summary",
    "constants_check_results",
    "riesz_check_results",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment."""

    alpha: float
    domain: DomainSpec
    n: int
    c: float | None = None
    c_frac: float | None = None
    refinements: int = 0
    checks: tuple[str, ...] | None = None
    t_ladder: tuple[float, ...] | None = None
    out_dir: Path = Path("frachardy-out")
    tolerances: dict = field(default_factory=dict)
    node_budget: int = DEFAULT_NODE_BUDGET
    dump_grid: bool = False
    dump_matrix: bool = False

    def __post_init__(self):
        if self.c is not None and self.c_frac is not None:
            raise DomainValidationError("give either c or c_frac, not both")
        d = self.domain.dim
        if not (0.0 < self.alpha < min(2.0, d)):
            raise DomainValidationError(
                f"alpha={self.alpha} invalid for d={d} (need 0 < alpha < min(2, d))"
            )
        if self.refinements < 0:
            raise DomainValidationError("refinements must be >= 0")
        if self.checks is not None:
            unknown = [c for c in self.checks if c not in CHECKS]
            if unknown:
                raise DomainValidationError(
                    f"unknown checks {unknown}; registered: {sorted(CHECKS)}"
                )
        _ = self.coupling  # validates c/c_frac ranges eagerly
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def coupling(self) -> float:
        c_star = hardy_best_constant(self.domain.dim, self.alpha)
        if self.c_frac is not None:
            if not 0.0 <= self.c_frac <= 1.0:
                raise DomainValidationError(f"c_frac={self.c_frac} outside [0, 1]")
            return self.c_frac * c_star
        if self.c is None:
            return 0.0
        if not 0.0 <= self.c <= c_star * (1.0 + 1e-12):
            raise DomainValidationError(f"c={self.c} outside [0, c*] = [0, {c_star}]")
        return float(self.c)

    @property
    def params(self) -> ModelParams:
        return ModelParams(d=self.dim, alpha=self.alpha, c=min(self.coupling, hardy_best_constant(self.dim, self.alpha)))

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        known = {
            "alpha", "domain", "n", "c", "c_frac", "refinements", "checks",
            "t_ladder", "out", "out_dir", "tolerances", "node_budget",
            "dump_grid", "dump_matrix",
        }
        unknown = set(raw) - known
        if unknown:
            raise DomainValidationError(f"unknown config keys: {sorted(unknown)}")
        missing = {"alpha", "domain", "n"} - set(raw)
        if missing:
            raise DomainValidationError(f"config missing required keys: {sorted(missing)}")
        dom = raw["domain"]
        domain = parse_domain(dom) if isinstance(dom, str) else DomainSpec(**dom)
        return ExperimentConfig(
            alpha=float(raw["alpha"]),
            domain=domain,
            n=int(raw["n"]),
            c=None if raw.get("c") is None else float(raw["c"]),
            c_frac=None if raw.get("c_frac") is None else float(raw["c_frac"]),
            refinements=int(raw.get("refinements", 0)),
            checks=None if raw.get("checks") is None else tuple(raw["checks"]),
            t_ladder=None
            if raw.get("t_ladder") is None
            else tuple(float(t) for t in raw["t_ladder"]),
            out_dir=Path(raw.get("out", raw.get("out_dir", "frachardy-out"))),
            tolerances={str(k): float(v) for k, v in (raw.get("tolerances") or {}).items()},
            node_budget=int(raw.get("node_budget", DEFAULT_NODE_BUDGET)),
            dump_grid=bool(raw.get("dump_grid", False)),
            dump_matrix=bool(raw.get("dump_matrix", False)),
        )

    def snapshot(self) -> dict:
        return {
            "alpha": self.alpha,
            "domain": {"kind": self.domain.kind, "bounds": list(self.domain.bounds)},
            "n": self.n,
            "c": self.c,
            "c_frac": self.c_frac,
            "resolved_c": self.coupling,
            "refinements": self.refinements,
            "checks": None if self.checks is None else list(self.checks),
            "t_ladder": None if self.t_ladder is None else list(self.t_ladder),
            "out": str(self.out_dir),
            "tolerances": dict(self.tolerances),
            "node_budget": self.node_budget,
        }


class SolveContext:
    """Lazy, cached access to grids, operators, eigensolutions and Greens."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._grids: dict[int, Grid] = {}
        self._free: dict[int, OperatorMatrix] = {}
        self._eig: dict[tuple, EigenSolution] = {}
        self._green: dict[tuple, OperatorMatrix] = {}

    def grid(self, level: int = 0) -> Grid:
        if level not in self._grids:
            self._grids[level] = build_grid(
                self.cfg.domain, self.cfg.n * 2**level, node_budget=self.cfg.node_budget
            )
        return self._grids[level]

    def free(self, level: int = 0) -> OperatorMatrix:
        if level not in self._free:
            self._free[level] = assemble_free(self.grid(level), self.cfg.alpha)
        return self._free[level]

    def operator(self, level: int, c: float) -> OperatorMatrix:
        L0 = self.free(level)
        if c == 0.0:
            return L0
        V = hardy_diagonal(self.grid(level), self.cfg.alpha, c)
        return assemble_schrodinger(L0, V, c=c)

    def eig(self, level: int, c: float, full: bool = False) -> EigenSolution:
        key = (level, round(c, 15), bool(full))
        if key not in self._eig:
            k = None if full else 1
            self._eig[key] = eigensolve(self.operator(level, c), k=k)
        return self._eig[key]

    def green(self, level: int, c: float) -> OperatorMatrix:
        key = (level, round(c, 15))
        if key not in self._green:
            self._green[key] = green_matrix(self.operator(level, c))
        return self._green[key]

    @property
    def c_star(self) -> float:
        return hardy_best_constant(self.cfg.dim, self.cfg.alpha)

    def subcritical_coupling(self) -> float:
        """Configured c when strictly subcritical, else c*/2."""
        c = self.cfg.coupling
        if 0.0 < c < (1.0 - 1e-9) * self.c_star:
            return c
        return 0.5 * self.c_star


# ---------------------------------------------------------------------------
# grid-free check implementations (valid for d=1..3)
# ---------------------------------------------------------------------------

def constants_check_results(d: int, alpha: float, tolerances: dict | None = None) -> list[CheckResult]:
    tol_of = (tolerances or {}).get
    c_star = hardy_best_constant(d, alpha)
    beta_c = (d - alpha) / 2.0
    consistency = abs(c_star / coupling_F(d, alpha, beta_c) - 1.0)
    naive = hardy_best_constant_naive(d, alpha)
    root = critical_point_check(d, alpha)
    tol_c = float(tol_of("constants_consistency", 1e-12))
    tol_a = float(tol_of("constants_audit", 0.01))
    tol_r = float(tol_of("critical_point", 1e-8))
    results = [
        CheckResult(
            name="constants_consistency",
            value=consistency,
            tolerance=tol_c,
            passed=consistency <= tol_c,
            context={"c_star": c_star, "beta_c": beta_c, "F(beta_c)": coupling_F(d, alpha, beta_c)},
        ),
        CheckResult(
            name="constants_audit",
            value=abs(naive / c_star - 1.0),
            tolerance=tol_a,
            passed=abs(naive / c_star - 1.0) > tol_a,
            context={
                "sense": "value must EXCEED tolerance",
                "c_star_gamma_formula": c_star,
                "half_gap_squared": naive,
                "note": "the ((d-alpha)/2)^2 stand-in matches c* only as alpha -> 2",
            },
        ),
        CheckResult(
            name="critical_point",
            value=abs(root - beta_c),
            tolerance=tol_r,
            passed=abs(root - beta_c) <= tol_r,
            context={"root": root, "beta_c": beta_c},
        ),
    ]
    width = d - alpha
    betas = np.linspace(0.0, width, 1000)
    sym = max(
        abs(coupling_F(d, alpha, b) - coupling_F(d, alpha, width - b))
        / max(1.0, coupling_F(d, alpha, b))
        for b in betas
    )
    tol_sym = float(tol_of("f_symmetry", 1e-12))
    results.append(CheckResult("f_symmetry", sym, tol_sym, sym <= tol_sym, {"n_samples": 1000}))
    bs = np.linspace(1e-6, beta_c - 1e-6, 200)
    fv = [coupling_F(d, alpha, b) for b in bs]
    viol = sum(1 for x, y in zip(fv, fv[1:]) if y <= x)
    results.append(CheckResult("f_monotonicity", float(viol), 0.0, viol == 0, {"n_samples": 200}))
    return results


def riesz_check_results(d: int, alpha: float, tolerances: dict | None = None) -> list[CheckResult]:
    tol_of = (tolerances or {}).get
    beta_c = (d - alpha) / 2.0
    tol_main = float(tol_of("riesz_identity", 1e-3))
    tol_edge = float(tol_of("riesz_identity_edge", 1e-2))
    cases = [
        ("half_beta_c", beta_c / 2.0, tol_main),
        ("beta_c", beta_c, tol_main),
        ("near_zero", 0.05, tol_edge),
        ("near_upper", d - alpha - 0.05, tol_edge),
    ]
    out = []
    for tag, beta, tol in cases:
        if not 0.0 < beta < d - alpha:
            continue
        chk = verify_harmonic_identity(d, alpha, beta, radii=(0.5, 1.0, 2.0), tol=tol)
        out.append(
            CheckResult(
                name=f"riesz_identity_{tag}",
                value=chk.max_rel_error,
                tolerance=tol,
                passed=chk.passed,
                context={"beta": beta, "radii": list(chk.radii)},
            )
        )
    audit = convention_audit(d, alpha, beta_c / 2.0)
    dev = abs(audit["measured_factor"] / audit["expected_factor"] - 1.0)
    out.append(
        CheckResult(
            name="riesz_convention_audit",
            value=audit["measured_factor"],
            tolerance=1e-3,
            passed=dev <= 1e-3 and audit["identity_holds_with_std"],
            context={
                "sense": "alternative normalization overshoots by exactly 2^(d/2)",
                "expected_factor": audit["expected_factor"],
            },
        )
    )
    return out


# ---------------------------------------------------------------------------
# grid-based check implementations
# ---------------------------------------------------------------------------

def _tol(cfg: ExperimentConfig, name: str, default: float) -> float:
    return float(cfg.tolerances.get(name, default))


def _exponent_tol(cfg: ExperimentConfig) -> float:
    return 0.05 if cfg.dim == 1 else 0.08


def _write_trace(cfg: ExperimentConfig, name: str, header: str, rows) -> None:
    tdir = cfg.out_dir / "traces"
    tdir.mkdir(parents=True, exist_ok=True)
    with open(tdir / f"{name}.csv", "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(
                ",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n"
            )


def _check_constants(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    return constants_check_results(cfg.dim, cfg.alpha, cfg.tolerances)


def _check_riesz(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    return riesz_check_results(cfg.dim, cfg.alpha, cfg.tolerances)


def _check_boundary_exponent(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    level = cfg.refinements
    eig = ctx.eig(level, cfg.coupling)
    fit = boundary_exponent(eig)
    target = cfg.alpha / 2.0
    tol = _tol(cfg, "boundary_exponent", _exponent_tol(cfg))
    grid = ctx.grid(level)
    keep = grid.dist_origin >= grid.spec.diameter / 4.0
    _write_trace(
        cfg,
        "boundary_exponent",
        "dist_boundary,phi0",
        zip(grid.dist_boundary[keep].tolist(), eig.ground_state[keep].tolist()),
    )
    err = abs(fit.exponent - target)
    return [
        CheckResult(
            name="boundary_exponent",
            value=err,
            tolerance=tol,
            passed=err <= tol,
            context={
                "fitted": fit.exponent,
                "expected": target,
                "window": list(fit.window),
                "r_squared": fit.r_squared,
                "n_points": fit.n_points,
                "level": level,
            },
        )
    ]


def _check_singularity_exponent(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    level = cfg.refinements
    c = cfg.coupling
    eig = ctx.eig(level, c)
    fit = singularity_exponent(eig)
    target = -beta_of_c(cfg.dim, cfg.alpha, min(c, ctx.c_star)) if c > 0.0 else 0.0
    tol = _tol(cfg, "singularity_exponent", _exponent_tol(cfg))
    grid = ctx.grid(level)
    keep = grid.dist_boundary >= grid.spec.diameter / 4.0
    _write_trace(
        cfg,
        "singularity_exponent",
        "dist_origin,phi0",
        zip(grid.dist_origin[keep].tolist(), eig.ground_state[keep].tolist()),
    )
    err = abs(fit.exponent - target)
    return [
        CheckResult(
            name="singularity_exponent",
            value=err,
            tolerance=tol,
            passed=err <= tol,
            context={
                "fitted": fit.exponent,
                "expected": target,
                "window": list(fit.window),
                "r_squared": fit.r_squared,
                "level": level,
            },
        )
    ]


def _check_comparability(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    level = cfg.refinements
    c = cfg.coupling
    eig = ctx.eig(level, c)
    grid = ctx.grid(level)
    model = grid.dist_boundary ** (cfg.alpha / 2.0)
    if c > 0.0:
        model = model * weight_vector(grid, beta_of_c(cfg.dim, cfg.alpha, min(c, ctx.c_star)))
    sup, inf = comparability_ratio(eig.ground_state, model, grid.cell_measure)
    bound = _tol(cfg, "comparability", 4.0 if c > 0.0 else 3.0)
    value = sup / inf
    return [
        CheckResult(
            name="comparability",
            value=value,
            tolerance=bound,
            passed=value <= bound,
            context={
                "sup": sup,
                "inf": inf,
                "model": "w * delta^(a/2)" if c > 0 else "delta^(a/2)",
            },
        )
    ]


def _check_ground_rep(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    level = cfg.refinements
    c = cfg.coupling
    eig = ctx.eig(level, c)
    green = ctx.green(level, 0.0)
    V = hardy_diagonal(ctx.grid(level), cfg.alpha, c)
    resid = ground_state_representation_residual(eig.ground_state, eig.lambda0, green, V)
    tol = _tol(cfg, "ground_state_representation", 1e-6 if cfg.params.is_critical else 1e-8)
    return [
        CheckResult(
            name="ground_state_representation",
            value=resid,
            tolerance=tol,
            passed=resid <= tol,
            context={"lambda0": eig.lambda0, "c": c, "level": level},
        )
    ]


def _check_hardy_rayleigh(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    levels = list(range(cfg.refinements + 1))
    vals = [hardy_rayleigh_min(ctx.free(lv)) for lv in levels]
    c_star = ctx.c_star
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    above = vals[-1] >= 0.95 * c_star
    _write_trace(cfg, "hardy_rayleigh", "level,value", list(zip(levels, vals)))
    return [
        CheckResult(
            name="hardy_rayleigh",
            value=vals[-1] / c_star,
            tolerance=0.95,
            passed=above and (decreasing or len(vals) == 1),
            context={
                "sense": "value must stay >= tolerance and decrease toward 1 under refinement",
                "values": vals,
                "c_star": c_star,
                "decreasing": decreasing,
            },
        )
    ]


def _check_intrinsic_hardy(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    levels = sorted({max(0, cfg.refinements - 1), cfg.refinements})
    res = []
    for lv in levels:
        mu, ch = intrinsic_hardy_constant(ctx.free(lv), ctx.eig(lv, 0.0))
        res.append((mu, ch))
    mu1, ch1 = res[-1]
    stable = (
        max(res[0][1], ch1) / min(res[0][1], ch1) <= 2.0 if len(levels) > 1 else True
    )
    lam0 = ctx.eig(cfg.refinements, 0.0).lambda0
    ok = (mu1 > 0.0) and stable and (mu1 <= lam0)
    return [
        CheckResult(
            name="intrinsic_hardy",
            value=ch1,
            tolerance=float("inf"),
            passed=ok,
            context={
                "mu": mu1,
                "C_H": ch1,
                "coarse_C_H": res[0][1],
                "lambda0_free": lam0,
                "criterion": "mu > 0, C_H stable within factor 2, mu <= lambda0",
            },
        )
    ]


def _gap_ladder(eig: EigenSolution, cfg: ExperimentConfig) -> list[float]:
    if cfg.t_ladder is not None:
        return list(cfg.t_ladder)
    gap = eig.spectral_gap
    return [m / gap for m in (2.5, 5.0, 7.5, 10.0)]


def _check_iuc(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    eig = ctx.eig(0, cfg.coupling, full=True)
    ladder = _gap_ladder(eig, cfg)
    devs = [iuc_ratio(heat_kernel(eig, t), eig) for t in ladder]
    nonincreasing = all(b <= a for a, b in zip(devs, devs[1:]))
    tol = _tol(cfg, "iuc", 1e-3)
    _write_trace(cfg, "iuc", "t,deviation", list(zip(ladder, devs)))
    return [
        CheckResult(
            name="iuc",
            value=devs[-1],
            tolerance=tol,
            passed=devs[-1] <= tol and nonincreasing,
            context={
                "t_ladder": ladder,
                "deviations": devs,
                "gap": eig.spectral_gap,
                "nonincreasing": nonincreasing,
            },
        )
    ]


def _check_green_lower_bound(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    c = cfg.coupling
    levels = sorted({0, min(1, cfg.refinements)})
    ratios = []
    for lv in levels:
        green = ctx.green(lv, c)
        w = None
        if c > 0.0:
            w = weight_vector(ctx.grid(lv), beta_of_c(cfg.dim, cfg.alpha, min(c, ctx.c_star)))
        ratios.append(green_lower_bound_ratio(green, w))
    stable = max(ratios) / min(ratios) <= 2.0 if len(levels) > 1 else True
    ok = ratios[-1] > 0.0 and stable
    return [
        CheckResult(
            name="green_lower_bound",
            value=ratios[-1],
            tolerance=0.0,
            passed=ok,
            context={
                "sense": "min ratio must be positive and refinement-stable within x2",
                "ratios": ratios,
                "levels": levels,
            },
        )
    ]


def _check_green_domination(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    c = ctx.subcritical_coupling()
    K0 = ctx.green(0, 0.0).entries
    KV = ctx.green(0, c).entries
    worst = float((KV - K0).min())
    tol = 1e-12 * float(np.abs(KV).max())
    return [
        CheckResult(
            name="green_domination",
            value=worst,
            tolerance=tol,
            passed=worst >= -tol,
            context={"sense": "K_V - K must be entrywise nonnegative", "c": c},
        )
    ]


def _check_critical_blowup(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    if cfg.refinements < 2:
        raise DomainValidationError("critical_blowup needs refinements >= 2")
    levels = list(range(cfg.refinements + 1))
    grids = [ctx.grid(lv) for lv in levels]
    c_star = ctx.c_star
    seq_crit = critical_blowup_diagnostic(
        grids,
        cfg.alpha,
        c_star,
        ground_states=[ctx.eig(lv, c_star).ground_state for lv in levels],
    )
    c_half = 0.5 * c_star
    seq_ctrl = critical_blowup_diagnostic(
        grids,
        cfg.alpha,
        c_half,
        ground_states=[ctx.eig(lv, c_half).ground_state for lv in levels],
    )
    increasing = all(b > a for a, b in zip(seq_crit, seq_crit[1:]))
    last_ratio_crit = seq_crit[-1] / seq_crit[-2]
    last_ratio_ctrl = seq_ctrl[-1] / seq_ctrl[-2]
    tol_ctrl = _tol(cfg, "critical_blowup_control", 0.05)
    _write_trace(
        cfg,
        "critical_blowup",
        "level,I_critical,I_control",
        list(zip(levels, seq_crit, seq_ctrl)),
    )
    return [
        CheckResult(
            name="critical_blowup",
            value=last_ratio_crit,
            tolerance=1.0,
            passed=increasing,
            context={
                "sense": "sequence at c* must increase strictly (no saturation)",
                "sequence": seq_crit,
                "increments": [b - a for a, b in zip(seq_crit, seq_crit[1:])],
            },
        ),
        CheckResult(
            name="critical_blowup_control",
            value=abs(last_ratio_ctrl - 1.0),
            tolerance=tol_ctrl,
            passed=abs(last_ratio_ctrl - 1.0) <= tol_ctrl,
            context={"sequence": seq_ctrl, "c": c_half},
        ),
    ]


def _check_doob_similarity(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    c = ctx.subcritical_coupling()
    eig = ctx.eig(0, c, full=True)
    grid = ctx.grid(0)
    beta = beta_of_c(cfg.dim, cfg.alpha, c)
    H = conjugate(ctx.operator(0, c), weight_vector(grid, beta))
    hvals = np.sort(np.linalg.eigvals(H).real)
    rel = float(np.max(np.abs(hvals - eig.eigenvalues) / np.abs(eig.eigenvalues)))
    tol = _tol(cfg, "doob_similarity", 1e-9)
    return [
        CheckResult(
            name="doob_similarity",
            value=rel,
            tolerance=tol,
            passed=rel <= tol,
            context={"c": c, "beta": beta, "n": grid.n_nodes},
        )
    ]


def _check_doob_q_residual(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    if cfg.refinements < 2:
        raise DomainValidationError("doob_q_residual needs refinements >= 2")
    c = ctx.subcritical_coupling()
    beta = beta_of_c(cfg.dim, cfg.alpha, c)
    resids = []
    for lv in range(cfg.refinements + 1):
        wf = build_weighted_form(ctx.operator(lv, c), beta, L0=ctx.free(lv))
        resids.append(q_transform_residual(wf))
    ratios = [a / b for a, b in zip(resids, resids[1:])]
    need = _tol(cfg, "doob_q_residual", 1.4)
    ok = all(r >= need for r in ratios)
    _write_trace(cfg, "doob_q_residual", "level,residual", list(enumerate(resids)))
    return [
        CheckResult(
            name="doob_q_residual",
            value=min(ratios),
            tolerance=need,
            passed=ok,
            context={
                "sense": "each refinement must shrink the residual by >= tolerance",
                "residuals": resids,
                "shrink_factors": ratios,
                "beta": beta,
            },
        )
    ]


def _check_doob_ground_lower_bound(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    c_star = ctx.c_star
    levels = sorted({max(0, cfg.refinements - 1), cfg.refinements})
    vals = []
    argmin_away = True
    for lv in levels:
        eig_v = ctx.eig(lv, c_star)
        eig_f = ctx.eig(lv, 0.0)
        ratio, k = doob_ground_lower_bound(eig_v, eig_f)
        vals.append(ratio)
        grid = ctx.grid(lv)
        if grid.dist_origin[k] < grid.spec.diameter / 8.0:
            argmin_away = False
    stable = max(vals) / min(vals) <= 2.0 if len(levels) > 1 else True
    ok = vals[-1] > 0.0 and stable
    return [
        CheckResult(
            name="doob_ground_lower_bound",
            value=vals[-1],
            tolerance=0.0,
            passed=ok,
            context={
                "sense": "min phi*_0/phi_0 must be positive and refinement-stable within x2",
                "values": vals,
                "argmin_away_from_origin": argmin_away,
            },
        )
    ]


def _check_lambda_monotonicity(ctx: SolveContext, cfg: ExperimentConfig) -> list[CheckResult]:
    c_star = ctx.c_star
    fracs = (0.0, 0.25, 0.5, 0.75, 1.0)
    entries = coupling_sweep(ctx.grid(0), cfg.alpha, [f * c_star for f in fracs])
    lams = [e.lambda0 for e in entries]
    decreasing_lam = all(b < a for a, b in zip(lams, lams[1:]))
    _write_trace(
        cfg,
        "lambda_monotonicity",
        "c,lambda0,l2_dist_prev",
        [(e.c, e.lambda0, e.l2_dist_prev) for e in entries],
    )
    # approximation ladder c_k = c*(1 - 2^-k): successive ground states must
    # become Cauchy as the coupling approaches critical
    ladder = [c_star * (1.0 - 0.5**k) for k in range(1, 7)]
    approach = coupling_sweep(ctx.grid(0), cfg.alpha, ladder)
    dists = [e.l2_dist_prev for e in approach][1:]
    decreasing_dist = all(b < a for a, b in zip(dists, dists[1:]))
    return [
        CheckResult(
            name="lambda_monotonicity",
            value=min(a - b for a, b in zip(lams, lams[1:])),
            tolerance=0.0,
            passed=decreasing_lam,
            context={"lambda0": lams, "c_fracs": list(fracs)},
        ),
        CheckResult(
            name="sweep_ground_state_cauchy",
            value=dists[-1],
            tolerance=float("inf"),
            passed=decreasing_dist,
            context={
                "sense": "ground-state distances along c_k = c*(1 - 2^-k) must decrease",
                "distances": dists,
            },
        ),
    ]


CHECKS = {
    "constants": _check_constants,
    "riesz": _check_riesz,
    "boundary_exponent": _check_boundary_exponent,
    "singularity_exponent": _check_singularity_exponent,
    "comparability": _check_comparability,
    "ground_state_representation": _check_ground_rep,
    "hardy_rayleigh": _check_hardy_rayleigh,
    "intrinsic_hardy": _check_intrinsic_hardy,
    "iuc": _check_iuc,
    "green_lower_bound": _check_green_lower_bound,
    "green_domination": _check_green_domination,
    "critical_blowup": _check_critical_blowup,
    "doob_similarity": _check_doob_similarity,
    "doob_q_residual": _check_doob_q_residual,
    "doob_ground_lower_bound": _check_doob_ground_lower_bound,
    "lambda_monotonicity": _check_lambda_monotonicity,
}

#: checks that only make sense with at least two refinements
_REFINEMENT_CHECKS = {"critical_blowup", "doob_q_residual"}

_SOLVE_DEFAULT_CHECKS = ("boundary_exponent", "singularity_exponent")


# ---------------------------------------------------------------------------
# runners and persistence
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for blk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(blk)
    return digest.hexdigest()


def _write_report(out_dir: Path, params: dict, grid: Grid | None, results: list[CheckResult]) -> Path:
    report = {
        "params": params,
        "grid": None
        if grid is None
        else {
            "kind": grid.spec.kind,
            "bounds": list(grid.spec.bounds),
            "n_per_axis": grid.n_per_axis,
            "n_nodes": grid.n_nodes,
            "h": grid.h,
        },
        "checks": [r.as_dict() for r in results],
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _write_manifest(out_dir: Path, config_snapshot: dict, stages: dict[str, float]) -> Path:
    files = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files.append(
                {
                    "name": str(p.relative_to(out_dir)),
                    "sha256": _sha256(p),
                    "bytes": p.stat().st_size,
                }
            )
    manifest = {
        "config": config_snapshot,
        "version": __version__,
        "stages_sec": {k: round(v, 6) for k, v in stages.items()},
        "files": files,
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _params_dict(cfg: ExperimentConfig) -> dict:
    return {
        "d": cfg.dim,
        "alpha": cfg.alpha,
        "c": cfg.coupling,
        "c_star": hardy_best_constant(cfg.dim, cfg.alpha),
    }


def _emit_solution_files(cfg: ExperimentConfig, ctx: SolveContext, level: int) -> None:
    eig = ctx.eig(level, cfg.coupling, full=True)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / "spectrum.csv", "w") as fh:
        spectrum_to_csv(eig, fh)
    with open(cfg.out_dir / "groundstate.csv", "w") as fh:
        ground_state_to_csv(eig, fh)
    if cfg.dump_grid:
        with open(cfg.out_dir / "grid.csv", "w") as fh:
            grid_to_csv(ctx.grid(level), fh)
    if cfg.dump_matrix:
        with open(cfg.out_dir / "operator.bin", "wb") as fh:
            dump_matrix(ctx.operator(level, cfg.coupling), fh)


def run_solve(cfg: ExperimentConfig) -> int:
    """Assemble, eigensolve, run the requested per-solve checks, write artifacts."""
    if cfg.refinements != 0:
        cfg = dataclasses.replace(cfg, refinements=0)
    stages: dict[str, float] = {}
    ctx = SolveContext(cfg)
    t0 = time.perf_counter()
    ctx.free(0)
    stages["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    _emit_solution_files(cfg, ctx, level=0)
    stages["eigensolve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    names = cfg.checks if cfg.checks is not None else _SOLVE_DEFAULT_CHECKS
    results = []
    for name in names:
        results.extend(CHECKS[name](ctx, cfg))
    stages["checks"] = time.perf_counter() - t0

    _write_report(cfg.out_dir, _params_dict(cfg), ctx.grid(0), results)
    _write_manifest(cfg.out_dir, cfg.snapshot(), stages)
    return 0 if all(r.passed for r in results) else 1


def run_verify_all(cfg: ExperimentConfig) -> int:
    """Run every registered check (or the configured subset) with refinements."""
    names = list(cfg.checks) if cfg.checks is not None else list(CHECKS)
    if any(n in _REFINEMENT_CHECKS for n in names) and cfg.refinements < 2:
        raise DomainValidationError(
            "verify-all with refinement-based checks requires refinements >= 2"
        )
    ctx = SolveContext(cfg)
    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    results = []
    for name in names:
        results.extend(CHECKS[name](ctx, cfg))
    stages["checks"] = time.perf_counter() - t0
    grid = ctx._grids.get(0)
    _write_report(cfg.out_dir, _params_dict(cfg), grid, results)
    _write_manifest(cfg.out_dir, cfg.snapshot(), stages)
    return 0 if all(r.passed for r in results) else 1


def run_heat(cfg: ExperimentConfig) -> int:
    """Full spectrum on the base grid, heat kernels along the t-ladder."""
    ctx = SolveContext(cfg)
    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    eig = ctx.eig(0, cfg.coupling, full=True)
    stages["eigensolve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    ladder = _gap_ladder(eig, cfg)
    rows = []
    for t in ladder:
        hk = heat_kernel(eig, t)
        rows.append((t, hk.trace(), iuc_ratio(hk, eig)))
    stages["heat"] = time.perf_counter() - t0
    _emit_solution_files(cfg, ctx, level=0)
    _write_trace(cfg, "heat_ladder", "t,trace,iuc_deviation", rows)
    results = _check_iuc(ctx, cfg)
    _write_report(cfg.out_dir, _params_dict(cfg), ctx.grid(0), results)
    _write_manifest(cfg.out_dir, cfg.snapshot(), stages)
    return 0 if all(r.passed for r in results) else 1


def run_sweep(cfg: ExperimentConfig) -> int:
    ctx = SolveContext(cfg)
    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    results = _check_lambda_monotonicity(ctx, cfg)
    stages["sweep"] = time.perf_counter() - t0
    _write_report(cfg.out_dir, _params_dict(cfg), ctx.grid(0), results)
    _write_manifest(cfg.out_dir, cfg.snapshot(), stages)
    return 0 if all(r.passed for r in results) else 1


def run_riesz_check(d: int, alpha: float, out_dir: Path, tolerances: dict | None = None) -> int:
    """Grid-free: the Riesz identity suite plus the constants checks, any d in 1..3."""
    out_dir = Path(out_dir)
    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    results = riesz_check_results(d, alpha, tolerances) + constants_check_results(
        d, alpha, tolerances
    )
    stages["riesz"] = time.perf_counter() - t0
    params = {"d": d, "alpha": alpha, "c": None, "c_star": hardy_best_constant(d, alpha)}
    _write_report(out_dir, params, None, results)
    snapshot = {"d": d, "alpha": alpha, "mode": "riesz-check", "out": str(out_dir)}
    _write_manifest(out_dir, snapshot, stages)
    return 0 if all(r.passed for r in results) else 1


def constants_summary(
    d: int,
    alpha: float,
    beta: float | None = None,
    c: float | None = None,
    c_frac: float | None = None,
) -> dict:
    """The table behind the `constants` subcommand."""
    out = {
        "d": d,
        "alpha": alpha,
        "form_constant": form_constant(d, alpha),
        "riesz_constant_std": riesz_constant_std(d, alpha),
        "c_star": hardy_best_constant(d, alpha),
        "c_star_half_gap_squared": hardy_best_constant_naive(d, alpha),
        "beta_c": (d - alpha) / 2.0,
    }
    out["audit_gap"] = abs(out["c_star_half_gap_squared"] / out["c_star"] - 1.0)
    if beta is not None:
        out["F_of_beta"] = coupling_F(d, alpha, beta)
    cc = None
    if c_frac is not None:
        cc = c_frac * out["c_star"]
    elif c is not None:
        cc = c
    if cc is not None and cc > 0:
        out["c"] = cc
        out["beta_of_c"] = beta_of_c(d, alpha, cc)
    return out
