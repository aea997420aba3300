"""Command-line entry point.

Subcommands: constants | solve | verify-all | heat | riesz-check | sweep.
Configuration comes from an optional JSON file (--config) with full flag
override; flags win.  Exit codes: 0 all checks pass, 1 a check failed,
2 validation or internal error.

FRACHARDY_THREADS caps BLAS parallelism; it must be applied before numpy
loads, which is why this module defers all numerical imports into main().
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("FRACHARDY_THREADS")
    if not cap:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="frachardy",
        description="Verification laboratory for the fractional Laplacian with a Hardy potential.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, grid: bool):
        sp.add_argument("--config", help="JSON config file; flags override its entries")
        sp.add_argument("--alpha", type=float, help="order alpha, 0 < alpha < min(2, d)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument(
            "--tolerance",
            action="append",
            default=[],
            metavar="NAME=VALUE",
            help="override a check tolerance (repeatable)",
        )
        if grid:
            sp.add_argument(
                "--domain",
                help="interval:a,b | rect:ax,bx,ay,by | disk:R",
            )
            sp.add_argument("--n", type=int, help="cells per axis")
            sp.add_argument("--refinements", type=int, help="grid doublings on top of n")
            sp.add_argument("--c", type=float, help="absolute coupling in [0, c*]")
            sp.add_argument("--c-frac", type=float, help="coupling as a fraction of c*")
            sp.add_argument("--checks", help="comma-separated check names")
            sp.add_argument("--t-ladder", help="comma-separated times for heat checks")
            sp.add_argument("--node-budget", type=int, help="max nodes per grid")
            sp.add_argument("--dump-grid", action="store_true", help="also write grid.csv")
            sp.add_argument(
                "--dump-matrix", action="store_true", help="also write operator.bin"
            )

    sp = sub.add_parser("constants", help="print the closed-form constants")
    sp.add_argument("--d", type=int, required=True, choices=(1, 2, 3))
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, help="also evaluate F(beta)")
    sp.add_argument("--c", type=float, help="also invert F at this coupling")
    sp.add_argument("--c-frac", type=float, help="coupling as fraction of c*")
    sp.add_argument("--out", help="also write constants.json here")

    add_common(sub.add_parser("solve", help="assemble, eigensolve, write artifacts"), grid=True)
    add_common(
        sub.add_parser("verify-all", help="run the full registered check suite"), grid=True
    )
    add_common(sub.add_parser("heat", help="heat kernels along a t-ladder"), grid=True)
    add_common(sub.add_parser("sweep", help="coupling sweep 0..c*"), grid=True)

    sp = sub.add_parser("riesz-check", help="grid-free Riesz identity suite (d up to 3)")
    sp.add_argument("--d", type=int, required=True, choices=(1, 2, 3))
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE")

    return p


def _parse_tolerances(pairs: list[str]) -> dict:
    out = {}
    for item in pairs:
        name, _, val = item.partition("=")
        if not val:
            raise SystemExit(f"--tolerance expects NAME=VALUE, got {item!r}")
        out[name] = float(val)
    return out


def _config_from_args(args) -> dict:
    raw: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
    if args.alpha is not None:
        raw["alpha"] = args.alpha
    if getattr(args, "domain", None):
        raw["domain"] = args.domain
    if getattr(args, "n", None) is not None:
        raw["n"] = args.n
    if getattr(args, "refinements", None) is not None:
        raw["refinements"] = args.refinements
    if getattr(args, "c", None) is not None:
        raw["c"] = args.c
        raw.pop("c_frac", None)
    if getattr(args, "c_frac", None) is not None:
        raw["c_frac"] = args.c_frac
        if getattr(args, "c", None) is None:
            raw.pop("c", None)
    if getattr(args, "checks", None):
        raw["checks"] = [s.strip() for s in args.checks.split(",") if s.strip()]
    if getattr(args, "t_ladder", None):
        raw["t_ladder"] = [float(s) for s in args.t_ladder.split(",")]
    if getattr(args, "out", None):
        raw["out"] = args.out
    if getattr(args, "node_budget", None) is not None:
        raw["node_budget"] = args.node_budget
    if getattr(args, "dump_grid", False):
        raw["dump_grid"] = True
    if getattr(args, "dump_matrix", False):
        raw["dump_matrix"] = True
    tol = dict(raw.get("tolerances") or {})
    tol.update(_parse_tolerances(args.tolerance))
    if tol:
        raw["tolerances"] = tol
    return raw


def main(argv=None) -> int:
    _apply_thread_cap()
    args = _build_parser().parse_args(argv)

    from .errors import FracHardyError

    try:
        if args.command == "constants":
            from .experiment import constants_summary

            table = constants_summary(
                args.d, args.alpha, beta=args.beta, c=args.c, c_frac=args.c_frac
            )
            width = max(len(k) for k in table)
            for key, val in table.items():
                print(f"{key:<{width}}  {val:.12g}" if isinstance(val, float) else f"{key:<{width}}  {val}")
            print(json.dumps(table, sort_keys=True))
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                with open(os.path.join(args.out, "constants.json"), "w") as fh:
                    json.dump(table, fh, sort_keys=True, indent=2)
                    fh.write("\n")
            return 0

        if args.command == "riesz-check":
            from .experiment import run_riesz_check

            return run_riesz_check(
                args.d,
                args.alpha,
                args.out or "frachardy-out",
                _parse_tolerances(args.tolerance),
            )

        from .experiment import (
            ExperimentConfig,
            run_heat,
            run_solve,
            run_sweep,
            run_verify_all,
        )

        cfg = ExperimentConfig.from_dict(_config_from_args(args))
        runner = {
            "solve": run_solve,
            "verify-all": run_verify_all,
            "heat": run_heat,
            "sweep": run_sweep,
        }[args.command]
        code = runner(cfg)
        report = cfg.out_dir / "report.json"
        if report.exists():
            with open(report) as fh:
                for chk in json.load(fh)["checks"]:
                    status = "PASS" if chk["pass"] else "FAIL"
                    print(
                        f"[{status}] {chk['name']}: value={chk['value']:.6g} "
                        f"tolerance={chk['tolerance']:.6g}"
                    )
        return code
    except FracHardyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
