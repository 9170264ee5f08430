"""Command-line experiment harness.

Subcommands: gen-data (write a dataset CSV), run (train one configuration),
sweep (strategy x rate x beta grid), rank (average-ranking table from a
result CSV). A JSON config file can set any field; explicit flags override
it. Exit codes: 0 success, 2 config or parse error, 3 divergence in
single-run mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .datasets import (
    gen_classification_blobs,
    gen_regression_simple,
    write_dataset_csv,
)
from .sweep import (
    ExperimentConfig,
    build_dataset,
    emit_plot_script,
    rank_table,
    read_result_csv,
    read_weight_log,
    run_cell,
    run_sweep,
    weight_log_path,
    write_result_csv,
    write_weight_log,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _tokens(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--dataset", help="regression_simple, blobs, or csv:<path>")
    p.add_argument("--target-col", dest="target_col", help="target column for csv datasets")
    p.add_argument("--task", choices=["regression", "classification"], help="task for csv datasets")
    p.add_argument("--model", choices=["linear", "mlp"])
    p.add_argument("--hidden", type=_ints, help="comma list of hidden layer sizes")
    p.add_argument("--activation", choices=["relu", "tanh"])
    p.add_argument("--strategy", help="full, a scorer token, or adaselect")
    p.add_argument("--strategies", type=_tokens, help="comma list for sweeps")
    p.add_argument("--candidates", type=_tokens, help="comma list of scorer tokens for adaselect")
    p.add_argument("--rate", type=float, help="sampling rate for a single run")
    p.add_argument("--rates", type=_floats, help="comma list of sampling rates")
    p.add_argument("--beta", type=float, help="method-weight sensitivity in [-1, 1]")
    p.add_argument("--betas", type=_floats, help="comma list of betas")
    p.add_argument("--kappa", type=float, help="curriculum exponent")
    p.add_argument(
        "--no-curriculum",
        dest="no_curriculum",
        action="store_const",
        const=True,
        default=None,
        help="disable the curriculum reward",
    )
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="result CSV path")


def _merged_config(args: argparse.Namespace) -> ExperimentConfig:
    config = (
        ExperimentConfig.from_json_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    overrides = {}
    direct = {
        "dataset": args.dataset,
        "target_col": args.target_col,
        "task": args.task,
        "model": args.model,
        "hidden": args.hidden,
        "activation": args.activation,
        "candidates": args.candidates,
        "rates": args.rates,
        "betas": args.betas,
        "kappa": args.kappa,
        "epochs": args.epochs,
        "batch": args.batch,
        "lr": args.lr,
        "momentum": args.momentum,
        "seed": args.seed,
        "out": args.out,
    }
    for key, value in direct.items():
        if value is not None:
            overrides[key] = value
    if getattr(args, "strategies", None) is not None:
        overrides["strategies"] = args.strategies
    if args.no_curriculum:
        overrides["curriculum"] = False
    return dataclasses.replace(config, **overrides)


def _cmd_gen_data(args: argparse.Namespace) -> int:
    if args.dataset == "regression_simple":
        dataset = gen_regression_simple(
            n_train=args.n_train, n_test=args.n_test, noise_sigma=args.noise, seed=args.seed
        )
    elif args.dataset == "blobs":
        dataset = gen_classification_blobs(
            n_classes=args.n_classes,
            n_per_class=args.n_per_class,
            dim=args.dim,
            separation=args.separation,
            seed=args.seed,
        )
    else:
        raise ValueError(f"unknown generator {args.dataset!r}")
    write_dataset_csv(dataset, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _replace_cell_rows(out_path: Path, new_rows, new_weight_rows) -> None:
    """Single-run output: replace this cell's rows in the CSVs, keep the rest."""
    cells = {row.cell for row in new_rows}
    kept = []
    if out_path.exists():
        kept = [r for r in read_result_csv(out_path) if r.cell not in cells]
    write_result_csv(out_path, kept + new_rows)
    wlog = weight_log_path(out_path)
    run_ids = {w.run_id for w in new_weight_rows}
    kept_weights = []
    if wlog.exists():
        kept_weights = [w for w in read_weight_log(wlog) if w.run_id not in run_ids]
    write_weight_log(wlog, kept_weights + new_weight_rows)
    emit_plot_script(out_path)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _merged_config(args)
    strategy = args.strategy or config.strategies[0]
    rate = args.rate if args.rate is not None else config.rates[0]
    beta = args.beta if args.beta is not None else config.betas[0]
    dataset = build_dataset(config)
    rows, weight_rows, report = run_cell(config, dataset, strategy, rate, beta)
    _replace_cell_rows(Path(config.out), rows, weight_rows)
    if report is None:
        print(f"run diverged; flagged row written to {config.out}", file=sys.stderr)
        return EXIT_DIVERGED
    final = report.final
    acc = "" if final.test_accuracy is None else f" test_acc={final.test_accuracy:.4f}"
    print(
        f"{dataset.name} strategy={strategy} rate={rate} beta={beta}: "
        f"test_loss={final.test_loss:.6f}{acc} "
        f"backward_samples={report.total_backward_samples()} -> {config.out}"
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _merged_config(args)
    rows = run_sweep(config)
    print(f"sweep complete: {len(rows)} rows in {config.out}")
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    rows = read_result_csv(args.results)
    table = rank_table(rows)
    print(table.format())
    if args.out:
        lines = ["dataset,strategy,average_rank"]
        for ds in table.datasets:
            for strategy in table.strategies:
                rank = table.average_rank.get((ds, strategy))
                if rank is not None:
                    lines.append(f"{ds},{strategy},{rank!r}")
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaselect", description="Adaptive minibatch subsampling benchmark harness."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a dataset CSV")
    gen.add_argument("--dataset", required=True, choices=["regression_simple", "blobs"])
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--n-train", dest="n_train", type=int, default=10000)
    gen.add_argument("--n-test", dest="n_test", type=int, default=5000)
    gen.add_argument("--n-classes", dest="n_classes", type=int, default=4)
    gen.add_argument("--n-per-class", dest="n_per_class", type=int, default=500)
    gen.add_argument("--dim", type=int, default=32)
    gen.add_argument("--separation", type=float, default=6.0)
    gen.set_defaults(func=_cmd_gen_data)

    run = sub.add_parser("run", help="train one configuration")
    _add_common_flags(run)
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run the strategy x rate x beta grid")
    _add_common_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    rank = sub.add_parser("rank", help="average-ranking table from a result CSV")
    rank.add_argument("results", help="result CSV produced by run/sweep")
    rank.add_argument("--out", help="also write the table as CSV")
    rank.set_defaults(func=_cmd_rank)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
