"""Command-line interface.

Subcommands: srev, solve, verify, ccx, sweep, bundle, kfa, benchmark,
marginals.  Every run prints its resolved configuration and seed to stderr;
results go to --out or stdout as JSON (with a schema_version field) or CSV
(17 significant digits).  Exit codes: 0 success, 1 check failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .closed_form import AuctionParams, srev
from .distributions import (
    DistSpec,
    Seed,
    favorite_marginal,
    nonfavorite_marginal,
)
from .fixed_point import validate
from .experiments import (
    SolutionCache,
    cdw_benchmark,
    competition_complexity,
    grand_bundle_study,
    kfa_study,
    scaling_study,
    solve_cached,
)
from .verification import (
    find_lna_deviation,
    find_naive_deviation,
    menu_bic_check,
)

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _emit_csv(rows: list[dict], out) -> None:
    if not rows:
        return
    header = list(rows[0].keys())
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(row[k]) for k in header) + "\n")


def _emit(doc: dict, rows: list[dict] | None, args) -> None:
    """JSON gets the whole document; CSV gets the tabular rows."""
    target = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.format == "csv":
            _emit_csv(rows if rows is not None else [doc], target)
        else:
            json.dump(doc, target, indent=1, default=_json_default)
            target.write("\n")
    finally:
        if args.out:
            target.close()


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Seed):
        return {"root": obj.root, "stream": obj.stream}
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _resolve_params(args, parser) -> AuctionParams:
    if args.n is None or args.m is None:
        parser.error("--n and --m are required for this subcommand")
    if args.lam is not None and args.t is not None:
        parser.error("--lambda and --t are mutually exclusive")
    if args.lam is not None:
        return AuctionParams.from_lambda(args.n, args.m, args.lam)
    if args.t is not None:
        return AuctionParams(args.n, args.m, args.t)
    parser.error("one of --lambda or --t is required")


def _parse_grid(spec: str, parser, need_lambda_key: bool = False):
    """Parse 'm=2:n=64,128,256' style grids; groups separated by ';' are
    concatenated, keys within a group are cartesian-multiplied."""
    points = []
    for group in spec.split(";"):
        axes: dict[str, list[float]] = {}
        for part in group.split(":"):
            if "=" not in part:
                parser.error(f"bad grid fragment: {part!r}")
            key, vals = part.split("=", 1)
            key = key.strip()
            if key not in {"n", "m", "lambda"}:
                parser.error(f"unknown grid key: {key!r}")
            axes[key] = [float(v) for v in vals.split(",")]
        if "n" not in axes or "m" not in axes:
            parser.error("grid needs both n and m axes")
        lams = axes.get("lambda", [None])
        for m in axes["m"]:
            for n in axes["n"]:
                for lam in lams:
                    points.append((int(n), int(m), lam))
    return points


def _print_config(args, extra: dict) -> None:
    cfg = {
        "command": args.command,
        "seed": args.seed,
        "threads": args.threads,
        "samples": args.samples,
        **extra,
    }
    print("config: " + json.dumps(cfg, default=_json_default), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auctioncc",
        description="Revenue simulation and competition-complexity toolkit "
        "for (truncated) Equal-Revenue auctions",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="bidder count")
    common.add_argument("--m", type=int, default=None, help="item count")
    common.add_argument(
        "--lambda", dest="lam", type=float, default=None,
        help="truncation scale: T = lambda*sqrt(nm)",
    )
    common.add_argument("--t", type=float, default=None, help="truncation T")
    common.add_argument("--samples", type=int, default=10**6)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument(
        "--cache", type=str, default=None, help="solution cache directory"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("srev", parents=[common], help="closed-form separate-sale revenue")
    sub.add_parser("solve", parents=[common], help="solve the interim rate fixed point")
    sub.add_parser("verify", parents=[common], help="validate rates and incentives")
    sub.add_parser("ccx", parents=[common], help="competition complexity at one point")
    p_sweep = sub.add_parser("sweep", parents=[common], help="scaling sweep over a grid")
    p_sweep.add_argument("--grid", type=str, required=True)
    p_bundle = sub.add_parser(
        "bundle", parents=[common], help="grand-bundle revenue study"
    )
    p_bundle.add_argument("--grid", type=str, default=None)
    sub.add_parser("kfa", parents=[common], help="favorite-aware auction study")
    p_bench = sub.add_parser(
        "benchmark", parents=[common], help="virtual-welfare benchmark estimate"
    )
    p_bench.add_argument(
        "--untruncated", action="store_true", help="benchmark the untruncated base"
    )
    p_marg = sub.add_parser(
        "marginals", parents=[common], help="favorite/non-favorite marginal tables"
    )
    p_marg.add_argument("--points", type=int, default=50)
    p_marg.add_argument("--xmax", type=float, default=100.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = Seed(args.seed)
    cache = SolutionCache(args.cache) if args.cache else None

    if args.command == "srev":
        params = _resolve_params(args, parser)
        _print_config(args, {"n": params.n, "m": params.m, "T": params.T})
        result = {
            "n": params.n,
            "m": params.m,
            "T": params.T,
            "srev": srev(params.n, params.m, params.T),
        }
        doc = {"schema_version": SCHEMA_VERSION, "result": result}
        _emit(doc, [result], args)
        return 0

    if args.command == "solve":
        params = _resolve_params(args, parser)
        _print_config(args, {"n": params.n, "m": params.m, "T": params.T})
        sol = solve_cached(params, seed, samples=args.samples, cache=cache)
        doc = {"schema_version": SCHEMA_VERSION, "result": sol.to_dict()}
        _emit(doc, [sol.to_dict()], args)
        return 0 if sol.converged else 1

    if args.command == "verify":
        params = _resolve_params(args, parser)
        _print_config(args, {"n": params.n, "m": params.m, "T": params.T})
        sol = solve_cached(params, seed, samples=args.samples, cache=cache)
        report = validate(
            sol, params, profiles=args.samples, seed=seed.with_stream(1),
            threads=args.threads,
        )
        bic = menu_bic_check(
            sol.rates, params, type_samples=min(args.samples, 10**5),
            seed=seed.with_stream(2),
        )
        result = {
            "validate": report,
            "menu_bic": bic,
            "solution": sol.to_dict(),
        }
        if params.m >= 2:
            result["naive_deviation"] = find_naive_deviation(params).to_dict()
            result["lna_deviation"] = find_lna_deviation(params).to_dict()
        ok = report["passed"] and bic["passed"]
        doc = {"schema_version": SCHEMA_VERSION, "passed": ok, "result": result}
        _emit(doc, None, args)
        return 0 if ok else 1

    if args.command == "ccx":
        params = _resolve_params(args, parser)
        _print_config(args, {"n": params.n, "m": params.m, "T": params.T})
        sol = solve_cached(params, seed, samples=args.samples, cache=cache)
        row = competition_complexity(
            params, sol.rates, residual=sol.residual, converged=sol.converged
        )
        doc = {"schema_version": SCHEMA_VERSION, "result": row.to_dict()}
        _emit(doc, [row.to_dict()], args)
        return 0

    if args.command == "sweep":
        if args.lam is not None and args.t is not None:
            parser.error("--lambda and --t are mutually exclusive")
        grid = _parse_grid(args.grid, parser)
        lam_default = args.lam if args.lam is not None else 1.5
        grid = [(n, m, lam if lam is not None else lam_default) for n, m, lam in grid]
        _print_config(args, {"grid": grid})
        study = scaling_study(
            grid, seed=seed, solver_samples=args.samples, cache=cache
        )
        rows = [r.to_dict() for r in study["rows"]]
        doc = {
            "schema_version": SCHEMA_VERSION,
            "result": {
                "rows": rows,
                "regression": study["regression"],
                "skipped": study["skipped"],
            },
        }
        _emit(doc, rows, args)
        return 0

    if args.command == "bundle":
        if args.grid:
            grid = [(n, m) for n, m, _ in _parse_grid(args.grid, parser)]
        else:
            if args.n is None or args.m is None:
                parser.error("bundle needs --grid or both --n and --m")
            grid = [(args.n, args.m)]
        _print_config(args, {"grid": grid})
        study = grand_bundle_study(
            grid, samples=args.samples, seed=seed, threads=args.threads
        )
        doc = {"schema_version": SCHEMA_VERSION, "result": study}
        _emit(doc, study["rows"], args)
        return 0

    if args.command == "kfa":
        if args.n is None or args.m is None:
            parser.error("--n and --m are required for this subcommand")
        _print_config(args, {"n": args.n, "m": args.m})
        report = kfa_study(
            args.n, args.m, samples=args.samples, seed=seed, threads=args.threads
        )
        doc = {"schema_version": SCHEMA_VERSION, "result": report}
        _emit(doc, [report], args)
        return 0

    if args.command == "benchmark":
        if args.untruncated:
            if args.n is None or args.m is None:
                parser.error("--n and --m are required for this subcommand")
            if args.lam is not None and args.t is not None:
                parser.error("--lambda and --t are mutually exclusive")
            spec = DistSpec.equal_revenue()
            n, m = args.n, args.m
            cfg = {"n": n, "m": m, "dist": "equal_revenue"}
        else:
            params = _resolve_params(args, parser)
            spec = DistSpec.truncated(params.T)
            n, m = params.n, params.m
            cfg = {"n": n, "m": m, "T": params.T, "dist": "truncated"}
        _print_config(args, cfg)
        est = cdw_benchmark(
            spec, n, m, samples=args.samples, seed=seed, threads=args.threads
        )
        result = {**cfg, **est.to_dict()}
        doc = {"schema_version": SCHEMA_VERSION, "result": result}
        _emit(doc, [result], args)
        return 0

    if args.command == "marginals":
        if args.m is None:
            parser.error("--m is required for this subcommand")
        m = args.m
        _print_config(args, {"m": m, "points": args.points, "xmax": args.xmax})
        xs = np.geomspace(1.0, args.xmax, args.points)
        rows = []
        for x in xs:
            fav_c, fav_p = favorite_marginal(m, float(x))
            row = {"x": float(x), "favorite_cdf": fav_c, "favorite_pdf": fav_p}
            if m >= 2:
                nf_c, nf_p = nonfavorite_marginal(m, float(x))
                row["nonfavorite_cdf"] = nf_c
                row["nonfavorite_pdf"] = nf_p
            rows.append(row)
        doc = {"schema_version": SCHEMA_VERSION, "result": {"m": m, "rows": rows}}
        _emit(doc, rows, args)
        return 0

    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
