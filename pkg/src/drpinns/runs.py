"""Run artifact emission: histories, checkpoints, metrics and ablation tables.

CSV floats are written with repr (shortest round-trip), so identical runs
produce byte-identical files.
"""

import json
from pathlib import Path

import numpy as np
from sklearn.base import clone

from . import network as nw
from . import problems as pb
from .estimator import (
    RunResult,
    evaluate_network,
    oracle_solution,
    reference_values,
)
from .metrics import compute_metrics

SAMPLE_GRID_NODES = {1: 513, 2: 101, 3: 33}

ABLATION_ARMS = (
    ("full", {}),
    ("no_dataset_update", {"adaptive_sampling": False}),
    ("no_bo", {"bayes_opt": False}),
)

TABLE_METRICS = ("mse", "mae", "rel2", "relative_max_error")


def _fmt(value):
    return repr(float(value))


def write_loss_history(history, path):
    with open(path, "w") as fh:
        fh.write("epoch,energy,constraint,boundary,total,w1,w2,w3\n")
        for row in history:
            fh.write(str(int(row[0])) + ","
                     + ",".join(_fmt(v) for v in row[1:]) + "\n")


def write_bo_history(rows, path):
    with open(path, "w") as fh:
        fh.write("cycle,w1,w2,w3,observed_loss,best_so_far\n")
        for row in rows:
            fh.write(str(int(row[0])) + ","
                     + ",".join(_fmt(v) for v in row[1:]) + "\n")


def sample_grid(problem, per_axis=None):
    """Uniform plotting grid over the problem box."""
    n = per_axis or SAMPLE_GRID_NODES[problem.dim]
    axes = [np.linspace(lo, hi, n) for lo, hi in problem.box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def write_solution_samples(est, path, per_axis=None):
    problem = est.problem_
    pts = sample_grid(problem, per_axis)
    pred = est.predict(pts)
    try:
        _, ref, kind = reference_values(problem, points=pts)
    except Exception:
        ref, kind = None, None
    with open(path, "w") as fh:
        cols = [f"x{k}" for k in range(problem.dim)] + ["u_pred"]
        if ref is not None:
            cols.append(f"u_{kind}")
        fh.write(",".join(cols) + "\n")
        for i, row in enumerate(pts):
            vals = [_fmt(c) for c in row] + [_fmt(pred[i])]
            if ref is not None:
                vals.append(_fmt(ref[i]))
            fh.write(",".join(vals) + "\n")


def run_training(est, out_dir, oracle_nodes=None):
    """Fit the estimator and write the full artifact set into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    est.fit()
    problem = est.problem_

    sol = oracle_solution(problem, oracle_nodes)
    nodes = sol.nodes()
    pred = est.predict(nodes)
    oracle_report = compute_metrics(sol.values, pred)
    exact_report = None
    if problem.has_exact():
        exact_report = compute_metrics(pb.evaluate_exact(problem, nodes), pred)
    violation = est.constraint_violation()

    files = {
        "checkpoint": out / "checkpoint.json",
        "loss_history": out / "loss_history.csv",
        "bo_history": out / "bo_history.csv",
        "metrics": out / "metrics.json",
        "solution_samples": out / "solution_samples.csv",
    }
    nw.save_checkpoint(est.params_, files["checkpoint"])
    write_loss_history(est.loss_history_, files["loss_history"])
    write_bo_history(est.bo_history_, files["bo_history"])
    write_solution_samples(est, files["solution_samples"])
    for snap in est.snapshots_:
        p = out / f"dataset_round_{snap.round}.csv"
        snap.to_csv(p)
        files[f"dataset_round_{snap.round}"] = p

    payload = {
        "problem": problem.name,
        "reference": "oracle",
        "oracle_nodes": int(sol.shape[0]),
        "metrics": oracle_report.to_dict(),
        "exact_metrics": exact_report.to_dict() if exact_report else None,
        "constraint_violation": violation,
        "epochs_run": int(est.n_epochs_),
        "stopped_early": bool(est.stopped_early_),
        "wall_seconds": est.fit_seconds_,
        "final_weights": list(est.weights_.as_array()),
        "config": est.get_params(),
    }
    with open(files["metrics"], "w") as fh:
        json.dump(payload, fh, indent=2, default=str)

    return RunResult(
        estimator=est,
        metrics=oracle_report.to_dict(),
        reference_kind="oracle",
        exact_metrics=exact_report.to_dict() if exact_report else None,
        constraint_violation=violation,
        wall_seconds=est.fit_seconds_,
        files={k: str(v) for k, v in files.items()},
    )


def evaluate_checkpoint(checkpoint_path, problem, points=None, oracle_nodes=None):
    """Metrics of a stored checkpoint against the best available reference."""
    params = nw.load_checkpoint(checkpoint_path)
    problem = pb.resolve_problem(problem)
    report, kind = evaluate_network(params, problem, points, oracle_nodes)
    return report, kind


def run_ablation(base_est, out_dir, seeds=None, oracle_nodes=None):
    """Full / no-refresh / no-weight-search arms sharing seeds and datasets.

    Writes per-arm artifact directories plus table1.csv; with several seeds
    a median block is appended.  A failing arm is recorded and the other
    arms continue.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = list(seeds) if seeds is not None else [base_est.get_params()["random_state"]]

    rows = []
    results = {}
    for seed in seeds:
        for arm, overrides in ABLATION_ARMS:
            est = clone(base_est)
            est.set_params(random_state=seed, **overrides)
            try:
                rr = run_training(est, out / f"seed{seed}_{arm}", oracle_nodes)
            except Exception as exc:  # keep remaining arms alive
                results[(seed, arm)] = exc
                rows.append((est.get_params()["problem"], seed, arm,
                             *[float("nan")] * len(TABLE_METRICS)))
                continue
            results[(seed, arm)] = rr
            rows.append((rr.estimator.problem_.name, seed, arm,
                         *[rr.metrics[m] for m in TABLE_METRICS]))

    if len(seeds) > 1:
        for arm, _ in ABLATION_ARMS:
            vals = np.array([
                [r[3 + k] for r in rows if r[2] == arm]
                for k in range(len(TABLE_METRICS))
            ])
            rows.append((rows[0][0], "median", arm,
                         *[float(np.median(v)) for v in vals]))

    table = out / "table1.csv"
    with open(table, "w") as fh:
        fh.write("problem,seed,method," + ",".join(TABLE_METRICS) + "\n")
        for row in rows:
            fh.write(",".join(str(c) if i < 3 else _fmt(c)
                              for i, c in enumerate(row)) + "\n")
    return results, str(table)
