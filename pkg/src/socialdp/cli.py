"""Command-line entry point: ``socialdp run|sweep|validate|graph``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import SocialDPError
from .graph import (
    generate_erdos_renyi,
    generate_random_regular,
    mixing_model,
    read_edge_list,
    write_edge_list,
)
from .runner import check_conditions, load_config, run_experiment, run_sweep


def _int_list(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run_experiment(cfg, seeds=args.seeds, out=args.out)
    for entry in res.manifest["runs"]:
        print(f"seed {entry['seed']}: final running regret {entry['final_running_regret']}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if args.seeds:
        cfg = cfg.replace(seeds=tuple(args.seeds))
    results = run_sweep(cfg, args.axis, values, out=args.out)
    for value, res in results.items():
        if res.traces and res.traces[0].rounds:
            print(f"{args.axis}={value}: mean final running regret {res.mean_running_regret[-1]:.6f}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = check_conditions(cfg)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["all_hold"] else 1


def _cmd_graph_gen(args) -> int:
    if args.kind == "erdos_renyi":
        if args.p is None:
            raise SystemExit("--p is required for erdos_renyi")
        g = generate_erdos_renyi(args.n, args.p, args.seed)
    else:
        if args.d is None:
            raise SystemExit("--d is required for random_regular")
        g = generate_random_regular(args.n, args.d, args.seed)
    write_edge_list(g, args.out)
    print(f"wrote {g.n} nodes, {g.num_edges} edges to {args.out}")
    return 0


def _cmd_graph_check(args) -> int:
    g = read_edge_list(args.path)
    tm = mixing_model(g)
    print(
        json.dumps(
            {"n": g.n, "edges": g.num_edges, "min_degree": min(g.degrees), "max_degree": max(g.degrees),
             "gap": tm.gap, "walk_length": tm.walk_length},
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socialdp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=_int_list, default=None, help="comma-separated seeds")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter over shared seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=["n", "g_choice", "m", "epsilon"])
    p.add_argument("--values", required=True)
    p.add_argument("--seeds", type=_int_list, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="check the theoretical parameter conditions")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("graph", help="generate or check topologies")
    gsub = p.add_subparsers(dest="graph_command", required=True)
    q = gsub.add_parser("gen")
    q.add_argument("kind", choices=["erdos_renyi", "random_regular"])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--p", type=float)
    q.add_argument("--d", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_graph_gen)
    q = gsub.add_parser("check")
    q.add_argument("path")
    q.set_defaults(func=_cmd_graph_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SocialDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
