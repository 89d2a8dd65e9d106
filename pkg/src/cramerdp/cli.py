"""Command-line entry point: evaluate, verify, sweep and info subcommands.

Exit codes: 0 success, 1 usage/validation/IO error, 2 non-convergence,
3 verification failure.  All configuration is explicit through flags;
unknown flags are errors and runs are reproducible from (config, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bellman import BellmanConfig, GridSpec, evaluate_policy
from .distributions import dist_from_jsonable, point_mass
from .io import (
    ExperimentConfig,
    bundled_mdp_names,
    load_bundled_mdp,
    load_mdp,
    load_policy,
    save_field,
    write_report_json,
    write_summary_json,
    write_sweep_csv,
    write_trace_csv,
)
from .spectral import DEFAULT_EPS_LIST, eps_sweep
from .verify import run_default_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_VERIFY_FAILED = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(f"argument error: {message}"))


def _fail(message: str) -> int:
    print(f"cramerdp: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _parse_eps_list(text: str) -> tuple:
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError("empty eps list")
    return values


def _build_parser() -> _Parser:
    parser = _Parser(prog="cramerdp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cramerdp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--mdp", help="MDP spec JSON path, or bundled:<name>")
        p.add_argument("--policy", default="uniform", help="policy JSON path or 'uniform'")
        p.add_argument("--gamma", type=float, default=None, help="override the file's discount")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed recorded in outputs")
        p.add_argument("--out", default=".", help="output directory")

    p_eval = sub.add_parser("evaluate", help="iterate policy evaluation to the fixed point")
    common(p_eval)
    p_eval.add_argument("--backend", choices=("atomic", "grid"), default="atomic")
    p_eval.add_argument("--merge-delta", type=float, default=0.0)
    p_eval.add_argument("--tol", type=float, default=1e-8, help="stopping Banach bound")
    p_eval.add_argument("--max-iter", type=int, default=1000)
    p_eval.add_argument("--grid-step", type=float, default=None, help="grid backend step")

    p_verify = sub.add_parser("verify", help="run the certification suite")
    common(p_verify)
    p_verify.add_argument("--trials", type=int, default=200)

    p_sweep = sub.add_parser("sweep", help="eps sweep of regularised distances")
    common(p_sweep)
    p_sweep.add_argument("--eps-list", default=",".join(str(e) for e in DEFAULT_EPS_LIST))
    p_sweep.add_argument("--pair", default=None,
                         help="two point masses 'a,b' to sweep instead of field entries")
    p_sweep.add_argument("--dist-a", default=None, help="distribution JSON file (first law)")
    p_sweep.add_argument("--dist-b", default=None, help="distribution JSON file (second law)")
    p_sweep.add_argument("--tol", type=float, default=1e-8)
    p_sweep.add_argument("--max-iter", type=int, default=1000)
    p_sweep.add_argument("--merge-delta", type=float, default=1e-9)

    p_info = sub.add_parser("info", help="capabilities, bundled models, validation")
    p_info.add_argument("--mdp", help="validate and summarise an MDP spec file")

    return parser


def _resolve_mdp(spec: str, gamma_override):
    if spec.startswith("bundled:"):
        mdp, policy = load_bundled_mdp(spec[len("bundled:"):])
        if gamma_override is not None:
            raise ValueError("--gamma cannot override a bundled model")
        return mdp, policy
    return load_mdp(spec, gamma_override), None


def _run_evaluate(args) -> int:
    if not args.mdp:
        return _fail("evaluate requires --mdp")
    mdp, embedded = _resolve_mdp(args.mdp, args.gamma)
    policy = embedded if (args.policy == "uniform" and embedded is not None) else load_policy(args.policy, mdp)
    grid = None
    if args.backend == "grid":
        bound = mdp.return_bound
        step = args.grid_step if args.grid_step is not None else bound / 256.0
        n = int((2.0 * bound) / step) + 2
        grid = GridSpec(-bound, step, n)
    config = BellmanConfig(merge_delta=args.merge_delta, backend=args.backend, grid=grid,
                           stop_tol=args.tol, max_iter=args.max_iter)
    result = evaluate_policy(mdp, policy, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    exp = ExperimentConfig(mdp=args.mdp, policy=args.policy, gamma=args.gamma,
                           backend=args.backend, merge_delta=args.merge_delta,
                           stop_tol=args.tol, max_iter=args.max_iter, seed=args.seed,
                           out_dir=str(out))
    save_field(result.field, out / "field.json")
    write_trace_csv(result.trace, out / "trace.csv")
    write_summary_json(result, exp, out / "summary.json")
    if not result.converged:
        print(f"did not converge in {result.iterations} iterations "
              f"(banach bound {result.banach_bound:.3e})", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    print(f"converged in {result.iterations} iterations, banach bound {result.banach_bound:.3e}")
    return EXIT_OK


def _run_verify(args) -> int:
    mdps = None
    if args.mdp:
        mdp, embedded = _resolve_mdp(args.mdp, args.gamma)
        policy = embedded if (args.policy == "uniform" and embedded is not None) else load_policy(args.policy, mdp)
        mdps = [(args.mdp, mdp, policy)]
    reports = run_default_suite(seed=args.seed, trials=args.trials, mdps=mdps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_json(reports, out / "report.json")
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.check_name}: worst_slack={r.worst_slack:.3e} "
              f"tolerance={r.tolerance:.3e} trials={r.trials} seed={r.seed}")
    if failed:
        print(f"{len(failed)} of {len(reports)} checks failed", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    print(f"all {len(reports)} checks passed")
    return EXIT_OK


def _sweep_pairs(args):
    eps = _parse_eps_list(args.eps_list)
    if args.pair is not None:
        a, b = (float(tok) for tok in args.pair.split(","))
        return [("pair", point_mass(a), point_mass(b))], eps
    if args.dist_a or args.dist_b:
        if not (args.dist_a and args.dist_b):
            raise ValueError("--dist-a and --dist-b must be given together")
        da = dist_from_jsonable(json.loads(Path(args.dist_a).read_text()))
        db = dist_from_jsonable(json.loads(Path(args.dist_b).read_text()))
        return [("pair", da, db)], eps
    if args.mdp:
        mdp, embedded = _resolve_mdp(args.mdp, args.gamma)
        policy = embedded if (args.policy == "uniform" and embedded is not None) else load_policy(args.policy, mdp)
        config = BellmanConfig(merge_delta=args.merge_delta, stop_tol=args.tol, max_iter=args.max_iter)
        result = evaluate_policy(mdp, policy, config)
        pairs = []
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                pairs.append((f"s{s}a{a}", result.field.entry(s, a), point_mass(0.0)))
        return pairs, eps
    return [("pair", point_mass(0.0), point_mass(1.0))], eps


def _run_sweep(args) -> int:
    pairs, eps = _sweep_pairs(args)
    rows, labels = [], []
    for label, p1, p2 in pairs:
        for point in eps_sweep(p1, p2, eps):
            rows.append(point)
            labels.append(label)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / "sweep.csv", labels)
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return EXIT_OK


def _run_info(args) -> int:
    print(f"cramerdp {__version__}")
    print("bundled MDPs:", ", ".join(bundled_mdp_names()))
    print("subcommands: evaluate, verify, sweep, info")
    if args.mdp:
        mdp, _ = _resolve_mdp(args.mdp, None)
        print(f"validated {args.mdp}: S={mdp.n_states} A={mdp.n_actions} "
              f"gamma={mdp.gamma} r_max={mdp.r_max} return_bound={mdp.return_bound:g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    handlers = {
        "evaluate": _run_evaluate,
        "verify": _run_verify,
        "sweep": _run_sweep,
        "info": _run_info,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc))


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
