"""Command-line interface: ``qcnn-forge <command> [options]``.

Commands
    metrics           metric report (CSV + JSON) for one circuit
    search            ansatz search; writes a JSON-lines trial log and the best circuits
    train             train a model for several runs; writes runs/<timestamp>/
    evaluate          accuracy and loss of a trained model on a task's test split
    grid-search       train every grid-search model at a qubit count and rank them
    memory-bound      closed-form qubit bound next to the liveness simulation
    reproduce-tables  regenerate the published metric tables side by side

Exit codes: 0 success, 2 invalid input, 3 simulator capacity exceeded.
Training options may come from a JSON config file (``--config``); flags
given on the command line override its values.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from .data import load_mnist, make_run_dir, prepare, resolve_task
from .encodings import EncodingError, memory_bound, memory_liveness_oracle
from .library import baseline_circuit
from .metrics import (
    SamplingBudget,
    ThresholdSet,
    derive_expr_threshold,
    evaluate_circuit,
    haar_fidelity_histogram,
    haar_mean_entanglement,
)
from .models import (
    HybridModel,
    ModelError,
    grid_search_menu,
    hybrid_forward,
    model_from_dict,
    model_to_dict,
    named_model,
    regular_forward,
)
from .qsim import CircuitError, circuit_from_json, circuit_to_dict
from .reference import TABLE_ALIASES, resolve_table
from .search import SearchConfig, run_search
from .training import BsocSpec, TrainConfig, TrainRun, aggregate_runs, evaluate, train

__all__ = ["main", "build_parser", "CapacityError", "UsageError", "TRAIN_DEFAULTS"]

EXPR_TOLERANCE = 0.06
ENTGL_TOLERANCE = 0.04
THRESHOLD_TOLERANCE = (0.002, 0.001)
DESK_BUDGET = SamplingBudget(10, 2000)
FULL_BUDGET = SamplingBudget(100, 10000)

TRAIN_DEFAULTS = {
    "model": "regular-4q-best",
    "task": "0v1",
    "runs": 5,
    "num_batches": 200,
    "batch_size": 25,
    "learning_rate": 0.01,
    "eval_every": 20,
    "fd_epsilon": 0.1,
    "sigma": 0.02,
    "seed": 0,
    "pad": "pad32",
    "train_per_class": 500,
    "test_per_class": 250,
}


class UsageError(Exception):
    """Invalid user input; exit code 2."""


class CapacityError(Exception):
    """A request needs more qubits than the configured maximum; exit code 3."""


# ---------------------------------------------------------------------------
# Shared helpers


def _budget(args) -> SamplingBudget:
    if getattr(args, "budget", "desk") == "paper":
        print("warning: the full budget (100 x 10,000 samples) takes hours per table", file=sys.stderr)
        base = FULL_BUDGET
    else:
        base = DESK_BUDGET
    inputs = getattr(args, "inputs", None) or base.num_inputs
    samples = getattr(args, "samples", None) or base.num_weight_samples
    return SamplingBudget(inputs, samples, getattr(args, "seed", 0) or 0)


def _check_capacity(num_qubits: int, args) -> None:
    if num_qubits > args.max_qubits:
        raise CapacityError(f"{num_qubits} qubits exceed --max-qubits {args.max_qubits}")


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _write_csv(rows: list[dict], stream) -> None:
    if not rows:
        return
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})


def _load_circuit(ref: str, qubits: int, arch: str):
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        circuit = circuit_from_json(path.read_text())
        if circuit.num_qubits != qubits:
            raise UsageError(f"{ref} has {circuit.num_qubits} qubits, --qubits says {qubits}")
        return circuit, path.stem
    return baseline_circuit(ref, qubits, arch), ref


def _load_model(ref: str):
    path = Path(ref)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
        return model_from_dict(doc.get("model", doc)), doc
    return named_model(ref), None


def _forward_for(model):
    return partial(hybrid_forward, model) if isinstance(model, HybridModel) else partial(regular_forward, model)


def _model_qubits(model) -> int:
    if isinstance(model, HybridModel):
        return max(layer.circuit.num_qubits for layer in model.layers)
    return model.num_qubits


def _dataset(task: str, pad: str, seed: int, train_cap, test_cap, data=None):
    return prepare(load_mnist(data), task, pad, seed, max_train_per_class=train_cap, max_test_per_class=test_cap)


def _train_one(model, ds, config: TrainConfig, num_classes: int, run_index: int) -> TrainRun:
    run = train(
        _forward_for(model),
        model.num_params,
        ds.train_images,
        ds.train_labels,
        ds.test_images,
        ds.test_labels,
        config,
        BsocSpec(num_classes, config.sigma),
        run_index=run_index,
    )
    run.metadata.update({"run_index": run_index, "model": model.name, "task": ds.task})
    return run


def _map(fn, items, threads: int):
    """Ordered map; a process pool when ``threads > 1`` (results do not depend on it)."""
    if threads <= 1 or len(items) <= 1:
        return [fn(*item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *item) for item in items]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Commands


def cmd_metrics(args) -> int:
    _check_capacity(args.qubits, args)
    circuit, cid = _load_circuit(args.circuit, args.qubits, args.arch)
    report = evaluate_circuit(circuit, args.arch, _budget(args), circuit_id=cid, num_classes=args.classes)
    text = report.to_csv()
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.with_suffix(".csv").write_text(text)
        out.with_suffix(".json").write_text(report.to_json() + "\n")
    return 0


def _derived_thresholds(table) -> tuple[float, float]:
    if table.arch == "hybrid":
        expr = derive_expr_threshold(np.full(4, 0.25), 0.05)
    else:
        expr = derive_expr_threshold(haar_fidelity_histogram(table.num_qubits).probabilities, 0.2, relative=True)
    return expr, haar_mean_entanglement(table.num_qubits)


def _compare(published: float, got: float, tol: float) -> tuple[float, str]:
    if math.isinf(published) or math.isinf(got):
        return (0.0, "pass") if published == got else (math.inf, "fail")
    delta = abs(published - got)
    return delta, "pass" if delta <= tol else "fail"


def reproduce_table(table, budget: SamplingBudget, seeds: int = 1) -> list[dict]:
    """Side-by-side rows ``(circuit, field, published, reproduced, delta, tolerance, status)``."""
    thresholds = ThresholdSet.for_qubits(table.num_qubits, table.arch, expr_thr=table.expr_thr)
    rows = []
    for ref in table.rows:
        circuit = baseline_circuit(ref.circuit_id, table.num_qubits, table.arch)
        reports = [
            evaluate_circuit(
                circuit,
                table.arch,
                SamplingBudget(budget.num_inputs, budget.num_weight_samples, budget.rng_seed + s),
                thresholds,
                ref.circuit_id,
            )
            for s in range(seeds)
        ]
        expr = float(np.mean([r.expr_mean for r in reports]))
        entgl = float(np.mean([r.entgl_mean for r in reports]))
        for field, published, got, tol in (
            ("expr", ref.expr_mean, expr, EXPR_TOLERANCE),
            ("entgl", ref.entgl_mean, entgl, ENTGL_TOLERANCE),
        ):
            if field == "entgl" and not 0.0 <= published <= 1.0:
                delta, status = abs(published - got), "skip"
            else:
                delta, status = _compare(published, got, tol)
            rows.append(
                {"table": table.key, "circuit": ref.circuit_id, "field": field, "published": published,
                 "reproduced": got, "delta": delta, "tolerance": tol, "status": status}
            )
    expr_thr, entgl_thr = _derived_thresholds(table)
    for field, published, got, tol in (
        ("expr_thr", table.expr_thr, expr_thr, THRESHOLD_TOLERANCE[0]),
        ("entgl_thr", table.entgl_thr, entgl_thr, THRESHOLD_TOLERANCE[1]),
    ):
        delta, status = _compare(published, got, tol)
        rows.append(
            {"table": table.key, "circuit": "thresholds", "field": field, "published": published,
             "reproduced": got, "delta": delta, "tolerance": tol, "status": status}
        )
    return rows


def cmd_reproduce_tables(args) -> int:
    names = list(dict.fromkeys(TABLE_ALIASES[k] for k in sorted(TABLE_ALIASES))) if args.which == "all" else [
        w.strip() for w in args.which.split(",")
    ]
    try:
        tables = [resolve_table(n) for n in names]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    for table in tables:
        _check_capacity(table.num_qubits, args)
    budget = _budget(args)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for table in tables:
        rows = reproduce_table(table, budget, args.seeds)
        graded = [r for r in rows if r["status"] != "skip" and r["circuit"] != "thresholds"]
        passed = sum(r["status"] == "pass" for r in graded)
        buf = io.StringIO()
        _write_csv(rows, buf)
        sys.stdout.write(buf.getvalue())
        print(f"# {table.key}: {passed}/{len(graded)} metric cells within tolerance")
        if out_dir:
            (out_dir / f"{table.key}.csv").write_text(buf.getvalue())
    return 0


def cmd_memory_bound(args) -> int:
    formula = memory_bound(args.n, args.k, args.m)
    oracle = memory_liveness_oracle(args.n, args.k, args.m)
    print(f"formula={formula} oracle={oracle}")
    return 0


def cmd_search(args) -> int:
    _check_capacity(args.qubits, args)
    config = SearchConfig(
        num_qubits=args.qubits,
        num_trials=args.trials,
        max_duplicates=args.max_duplicates,
        budget=_budget(args),
        architecture=args.arch,
        seed=args.seed,
        mode=args.mode,
    )
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "trials.jsonl", "w", encoding="utf-8") as log:
            result = run_search(config, log_stream=log)
    else:
        result = run_search(config)
    top = result.ranked[: args.top]
    summary = [
        {"rank": i + 1, "trial": rec.trial, "genome_hash": rec.genome_hash, "l_pqc": rec.l_pqc,
         "expr": rec.expr, "entgl": rec.entgl, "params": rec.params, "depth": rec.depth, "gates": rec.gates}
        for i, (_, rec) in enumerate(top)
    ]
    _write_csv(summary, sys.stdout)
    if out:
        (out / "best.json").write_text(json.dumps(circuit_to_dict(top[0][0]), indent=2) + "\n")
        (out / "ranked.json").write_text(
            json.dumps([{"record": s, "circuit": circuit_to_dict(c)} for s, (c, _) in zip(summary, top)], indent=2)
        )
    return 0


def _train_settings(args) -> dict:
    settings = dict(TRAIN_DEFAULTS)
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(doc) - set(TRAIN_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        settings.update(doc)
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _train_config(settings: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=settings["learning_rate"],
        num_batches=settings["num_batches"],
        batch_size=settings["batch_size"],
        eval_every=settings["eval_every"],
        fd_epsilon=settings["fd_epsilon"],
        runs=settings["runs"],
        seed=settings["seed"],
        sigma=settings["sigma"],
    )


def cmd_train(args) -> int:
    settings = _train_settings(args)
    model, _ = _load_model(settings["model"])
    _check_capacity(_model_qubits(model), args)
    task = resolve_task(settings["task"])
    config = _train_config(settings)
    ds = _dataset(task.name, settings["pad"], settings["seed"], settings["train_per_class"],
                  settings["test_per_class"], args.data)
    items = [(model, ds, config, task.num_classes, r) for r in range(config.runs)]
    runs = _map(_train_one, items, args.threads)
    run_dir = make_run_dir(args.out)
    (run_dir / "config.json").write_text(json.dumps({**settings, "dataset": ds.metadata}, indent=2) + "\n")
    with open(run_dir / "history.csv", "w", encoding="utf-8") as fh:
        fh.write("run,batch,loss,accuracy\n")
        for r, run in enumerate(runs):
            for p in run.history:
                fh.write(f"{r},{p.batch},{p.loss!r},{p.accuracy!r}\n")
    with open(run_dir / "summary.csv", "w", encoding="utf-8") as fh:
        _write_csv(aggregate_runs(runs), fh)
    best = max(range(len(runs)), key=lambda i: runs[i].final_accuracy)
    model_doc = {
        "model": model_to_dict(model),
        "params": runs[best].final_params,
        "best_run": best,
        "runs": [run.to_dict() for run in runs],
    }
    (run_dir / "model.json").write_text(json.dumps(model_doc) + "\n")
    final = aggregate_runs(runs)[-1]
    print(json.dumps({"run_dir": str(run_dir), "model": model.name, **final}))
    return 0


def cmd_evaluate(args) -> int:
    path = Path(args.model)
    if path.is_dir():
        path = path / "model.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read model file {args.model}: {exc}") from exc
    model = model_from_dict(doc["model"])
    _check_capacity(_model_qubits(model), args)
    if args.run is not None:
        params = doc["runs"][args.run]["final_params"]
    else:
        params = doc["params"]
    task = resolve_task(args.task)
    ds = _dataset(task.name, args.pad, args.seed, args.train_per_class, args.test_per_class, args.data)
    acc, loss = evaluate(_forward_for(model), params, ds.test_images, ds.test_labels, BsocSpec(task.num_classes))
    print(json.dumps({"model": model.name, "task": ds.task, "accuracy": acc, "loss": loss,
                      "test_size": int(len(ds.test_labels))}))
    return 0


def cmd_grid_search(args) -> int:
    try:
        menu = grid_search_menu(args.qubits)
    except ModelError as exc:
        raise UsageError(str(exc)) from exc
    _check_capacity(args.qubits, args)
    task = resolve_task(args.task)
    settings = {**TRAIN_DEFAULTS, "runs": args.runs, "num_batches": args.num_batches, "seed": args.seed}
    config = _train_config(settings)
    ds = _dataset(task.name, "pad32", args.seed, args.train_per_class, args.test_per_class, args.data)
    items = [(m, ds, config, task.num_classes, r) for m in menu for r in range(config.runs)]
    runs = _map(_train_one, items, args.threads)
    results = []
    for i, model in enumerate(menu):
        mine = runs[i * config.runs : (i + 1) * config.runs]
        accs = np.array([r.final_accuracy for r in mine])
        results.append({"model": model.name, "params": model.num_params,
                        "accuracy_mean": float(accs.mean()), "accuracy_std": float(accs.std())})
    results.sort(key=lambda r: (-r["accuracy_mean"], r["params"], r["model"]))
    for rank, row in enumerate(results, 1):
        row["rank"] = rank
    rows = [{"rank": r["rank"], **{k: v for k, v in r.items() if k != "rank"}} for r in results]
    _write_csv(rows, sys.stdout)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            _write_csv(rows, fh)
    return 0


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcnn-forge", description="Quantum convolutional network toolkit.")
    parser.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                        help="worker processes for training (default: all cores)")
    parser.add_argument("--max-qubits", type=_positive_int, default=20,
                        help="largest register the simulator may allocate (default 20)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def budget_flags(p):
        p.add_argument("--budget", choices=("desk", "paper"), default="desk")
        p.add_argument("--inputs", type=_positive_int, help="inputs |C| (overrides the budget)")
        p.add_argument("--samples", type=_positive_int, help="parameter samples |S| (overrides the budget)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("metrics", help="metric report for one circuit")
    p.add_argument("--circuit", required=True, help="baseline id (C1..C6, AS) or a circuit JSON file")
    p.add_argument("--qubits", type=_positive_int, required=True)
    p.add_argument("--arch", choices=("hybrid", "regular"), default="regular")
    p.add_argument("--classes", type=_positive_int, default=4, help="class count of the hybrid target")
    p.add_argument("--out", help="write <out>.csv and <out>.json")
    budget_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("reproduce-tables", help="regenerate published metric tables")
    p.add_argument("--which", default="all", help="comma-separated s1..s9 or table keys, or 'all'")
    p.add_argument("--seeds", type=_positive_int, default=1, help="average over this many sampling seeds")
    p.add_argument("--out", help="directory for one CSV per table")
    budget_flags(p)
    p.set_defaults(func=cmd_reproduce_tables)

    p = sub.add_parser("memory-bound", help="qubit bound of a tree of convolutions")
    p.add_argument("-n", type=_positive_int, required=True, help="input side length")
    p.add_argument("-k", type=_positive_int, required=True, help="kernel size")
    p.add_argument("-m", type=_positive_int, required=True, help="stride")
    p.set_defaults(func=cmd_memory_bound)

    p = sub.add_parser("search", help="ansatz search")
    p.add_argument("--qubits", type=_positive_int, default=2)
    p.add_argument("--arch", choices=("hybrid", "regular"), default="regular")
    p.add_argument("--trials", type=_positive_int, default=2000)
    p.add_argument("--max-duplicates", type=_positive_int, default=10)
    p.add_argument("--mode", choices=("tpe", "random"), default="tpe")
    p.add_argument("--top", type=_positive_int, default=5)
    p.add_argument("--out", help="directory for trials.jsonl, best.json and ranked.json")
    budget_flags(p)
    p.set_defaults(func=cmd_search)

    def data_flags(p, with_defaults: bool):
        d = TRAIN_DEFAULTS if with_defaults else {}
        p.add_argument("--data", help="dataset directory (default $QCNN_FORGE_DATA, then ./data)")
        p.add_argument("--train-per-class", dest="train_per_class", type=_positive_int,
                       default=d.get("train_per_class"))
        p.add_argument("--test-per-class", dest="test_per_class", type=_positive_int,
                       default=d.get("test_per_class"))

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="JSON file with training settings")
    p.add_argument("--model", help="model name or model JSON file")
    p.add_argument("--task", choices=("0v1", "7v8", "gt4", "0-3"))
    p.add_argument("--runs", type=_positive_int)
    p.add_argument("--batches", dest="num_batches", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=_positive_int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--eval-every", dest="eval_every", type=_positive_int)
    p.add_argument("--epsilon", dest="fd_epsilon", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--pad", choices=("none", "pad32"))
    p.add_argument("--out", default="runs", help="parent directory of the run folder")
    data_flags(p, with_defaults=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained model")
    p.add_argument("--model", required=True, help="model.json or a run directory")
    p.add_argument("--run", type=int, help="evaluate this run's parameters instead of the best run")
    p.add_argument("--task", choices=("0v1", "7v8", "gt4", "0-3"), default="0v1")
    p.add_argument("--pad", choices=("none", "pad32"), default="pad32")
    p.add_argument("--seed", type=int, default=0)
    data_flags(p, with_defaults=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid-search", help="train and rank the grid-search menu")
    p.add_argument("--qubits", type=int, required=True, choices=(1, 4, 16))
    p.add_argument("--task", choices=("0v1", "7v8", "gt4", "0-3"), default="0v1")
    p.add_argument("--runs", type=_positive_int, default=1)
    p.add_argument("--batches", dest="num_batches", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV file for the ranking")
    data_flags(p, with_defaults=True)
    p.set_defaults(func=cmd_grid_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ModelError, CircuitError, EncodingError, KeyError, ValueError, FileNotFoundError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
