"""Command line interface.

Subcommands: train, ablate, oracle, eval.  Exit codes: 0 success, 2 for
configuration problems, 3 for numerical failure (non-finite loss).
"""

import argparse
import json
import sys
from pathlib import Path

from . import network as nw
from . import problems as pb
from .estimator import DeepRitzVI
from .exceptions import (
    InvalidArchitectureError,
    InvalidConfigError,
    InvalidDomainError,
    NonFiniteGradientError,
    NonFiniteLossError,
)
from .fd import solve_obstacle_fd
from .runs import evaluate_checkpoint, run_ablation, run_training

_CONFIG_ERRORS = (InvalidConfigError, InvalidDomainError,
                  InvalidArchitectureError, FileNotFoundError)
_NUMERIC_ERRORS = (NonFiniteLossError, NonFiniteGradientError)


def _add_train_flags(p):
    p.add_argument("--problem", default="ex1",
                   help="ex1|ex2|ex3|ex4 or a problem config .json path")
    p.add_argument("--layers", type=int, default=3, help="hidden layer count")
    p.add_argument("--units", type=int, default=20, help="units per hidden layer")
    p.add_argument("--activation", default="tanh", choices=["tanh", "relu", "sigmoid"])
    p.add_argument("--lr", type=float, default=1e-3, help="initial Adam step size")
    p.add_argument("--lr-decay", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=20000)
    p.add_argument("--loss-threshold", type=float, default=1e-4)
    p.add_argument("--nf", type=int, default=2000, help="interior points")
    p.add_argument("--ng", type=int, default=400, help="boundary points")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-bo", action="store_true", help="disable the weight search")
    p.add_argument("--bo-period", type=int, default=1000)
    p.add_argument("--probe-epochs", type=int, default=200)
    p.add_argument("--no-adaptive", action="store_true",
                   help="disable collocation refreshes")
    p.add_argument("--update-period", type=int, default=10000)
    p.add_argument("--update-delta", type=float, default=1e-3)
    p.add_argument("--init", default="lhs", choices=["lhs", "normal"],
                   help="initial interior sampling scheme")
    p.add_argument("--oracle-nodes", type=int, default=None,
                   help="reference grid nodes per axis")
    p.add_argument("--out", required=True, help="output directory")


def _estimator_from(args):
    return DeepRitzVI(
        problem=args.problem,
        hidden_layers=args.layers,
        units=args.units,
        activation=args.activation,
        learning_rate=args.lr,
        lr_decay=args.lr_decay,
        epochs=args.epochs,
        loss_threshold=args.loss_threshold,
        n_interior=args.nf,
        n_boundary=args.ng,
        bayes_opt=not args.no_bo,
        bo_period=args.bo_period,
        probe_epochs=args.probe_epochs,
        adaptive_sampling=not args.no_adaptive,
        update_period=args.update_period,
        update_loss_delta=args.update_delta,
        init_sampling=args.init,
        random_state=args.seed,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="drpinns",
        description="Deep Ritz solver for obstacle-type variational inequalities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train on one problem")
    _add_train_flags(p_train)

    p_abl = sub.add_parser("ablate", help="full vs ablated training arms")
    _add_train_flags(p_abl)
    p_abl.add_argument("--seeds", default=None,
                       help="comma-separated seeds (default: --seed only)")

    p_or = sub.add_parser("oracle", help="finite-difference reference solve")
    p_or.add_argument("--problem", required=True)
    p_or.add_argument("--nodes", type=int, default=257)
    p_or.add_argument("--omega", default="auto",
                      help="relaxation factor in (0,2), or 'auto'")
    p_or.add_argument("--tol", type=float, default=None)
    p_or.add_argument("--max-iter", type=int, default=None)
    p_or.add_argument("--out", required=True)

    p_ev = sub.add_parser("eval", help="evaluate a stored checkpoint")
    p_ev.add_argument("--checkpoint", required=True)
    p_ev.add_argument("--problem", required=True)
    p_ev.add_argument("--oracle-nodes", type=int, default=None)
    p_ev.add_argument("--out", default=None)
    return parser


def _cmd_train(args):
    result = run_training(_estimator_from(args), args.out,
                          oracle_nodes=args.oracle_nodes)
    print(f"trained {args.problem}: epochs={result.estimator.n_epochs_} "
          f"stopped_early={result.estimator.stopped_early_} "
          f"wall={result.wall_seconds:.1f}s")
    print(f"metrics vs oracle: mse={result.metrics['mse']:.3e} "
          f"mae={result.metrics['mae']:.3e} rel2={result.metrics['rel2']:.3e}")
    if result.exact_metrics:
        print(f"metrics vs exact:  mse={result.exact_metrics['mse']:.3e} "
              f"relative_max_error={result.exact_metrics['relative_max_error']:.3e}")
    print(f"constraint violation: {result.constraint_violation:.3e}")
    print(f"outputs in {args.out}")
    return 0


def _cmd_ablate(args):
    seeds = ([int(s) for s in args.seeds.split(",")]
             if args.seeds else [args.seed])
    results, table = run_ablation(_estimator_from(args), args.out, seeds,
                                  oracle_nodes=args.oracle_nodes)
    failures = {k: v for k, v in results.items() if isinstance(v, Exception)}
    print(f"ablation table: {table}")
    for key, exc in failures.items():
        print(f"arm {key} failed: {exc}", file=sys.stderr)
    return 0 if not failures else 3


def _cmd_oracle(args):
    problem = pb.resolve_problem(args.problem)
    omega = args.omega if args.omega == "auto" else float(args.omega)
    sol = solve_obstacle_fd(problem, args.nodes, omega=omega,
                            tol=args.tol, max_iter=args.max_iter)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sol.to_csv(out / "oracle.csv")
    meta = {
        "problem": problem.name,
        "nodes_per_axis": args.nodes,
        "converged": bool(sol.converged),
        "iterations": sol.iterations,
        "final_residual": sol.final_residual,
    }
    with open(out / "oracle_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"oracle {problem.name} n={args.nodes}: converged={sol.converged} "
          f"iters={sol.iterations} residual={sol.final_residual:.2e}")
    print(f"outputs in {args.out}")
    return 0


def _cmd_eval(args):
    report, kind = evaluate_checkpoint(args.checkpoint, args.problem,
                                       oracle_nodes=args.oracle_nodes)
    payload = {"reference": kind, "metrics": report.to_dict()}
    print(json.dumps(payload, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.json", "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"train": _cmd_train, "ablate": _cmd_ablate,
               "oracle": _cmd_oracle, "eval": _cmd_eval}[args.command]
    try:
        return handler(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
