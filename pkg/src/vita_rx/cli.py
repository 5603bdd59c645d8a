"""
CLI Entry Point — command-line interface for the vita-rx harness.

Usage:
    vita-rx gen-data --out data/synth --patients 300 --seed 0
    vita-rx train --data data/synth --out runs/train --variant full
    vita-rx eval --data data/synth --checkpoint runs/train/checkpoint.json --out runs/eval
    vita-rx ablate --data data/synth --variants full,rs,ta_avg --seeds 0,1,2,3,4 --jobs 4
    vita-rx motivate --data data/synth --mode all,no,top1,mid1,bot1
    vita-rx analyze --data data/synth --checkpoint runs/train/checkpoint.json

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from vita_rx import __version__
from vita_rx.core.config import (
    Settings,
    TrainConfig,
    build_synth_config,
    load_train_config,
)
from vita_rx.core.container import Container
from vita_rx.core.logging import setup_logging
from vita_rx.core.timer import RunTimer
from vita_rx.domain.entities import MetricsReport, MetricsSummary, RunManifest
from vita_rx.domain.exceptions import ConfigurationError, NumericalError, VitaError
from vita_rx.domain.value_objects import EncoderVariant, HistoryFilter

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

DEFAULT_SEEDS = "0,1,2,3,4"
DEFAULT_VARIANTS = "full,no_selection,top1,sharp,mean_pool,rnn,std_attention"
DEFAULT_MODES = "all,no,top1,mid1,bot1"

console = Console()
err_console = Console(stderr=True)


# ── argument types ────────────────────────────────────────────


def _seed_list(value: str) -> list[int]:
    try:
        seeds = [int(s) for s in value.split(",") if s.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {value!r}") from e
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return list(dict.fromkeys(seeds))


def _variant(value: str) -> EncoderVariant:
    try:
        return EncoderVariant.from_str(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _variant_list(value: str) -> list[EncoderVariant]:
    variants = [_variant(v) for v in value.split(",") if v.strip()]
    if not variants:
        raise argparse.ArgumentTypeError("at least one variant is required")
    return list(dict.fromkeys(variants))


def _mode_list(value: str) -> list[HistoryFilter]:
    try:
        modes = [HistoryFilter.from_str(m) for m in value.split(",") if m.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    if not modes:
        raise argparse.ArgumentTypeError("at least one mode is required")
    return list(dict.fromkeys(modes))


# ── parser ────────────────────────────────────────────────────


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Data/split seed (default: 0)")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--jobs", type=int, default=None, help="Parallel runs (ablate/motivate)")
    common.add_argument(
        "--force", action="store_true", help="Write into a non-empty output directory"
    )
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", default=None, help="Also log JSON lines to this file")
    return common


def _model_flags() -> argparse.ArgumentParser:
    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--data", type=Path, required=True, help="Dataset directory")
    model.add_argument("--config", type=Path, default=None, help="config.json (TrainConfig)")
    model.add_argument("--dim", type=int, default=None)
    model.add_argument("--lr", dest="learning_rate", type=float, default=None)
    model.add_argument("--epochs", type=int, default=None)
    model.add_argument("--patience", type=int, default=None)
    model.add_argument("--tau-g", dest="tau_g", type=float, default=None)
    model.add_argument("--tau-a", dest="tau_a", type=float, default=None)
    model.add_argument("--beta", type=float, default=None)
    model.add_argument("--max-decode-len", dest="max_decode_len", type=int, default=None)
    return model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vita-rx",
        description="💊 vita-rx — relevant-visit selection medication recommender",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  vita-rx gen-data --out data/synth --patients 300
  vita-rx train --data data/synth --out runs/train
  vita-rx ablate --data data/synth --variants full,rs --seeds 0,1 --jobs 2
        """,
    )
    parser.add_argument("--version", action="version", version=f"vita-rx {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    common = _common_flags()
    model = _model_flags()

    gen = subparsers.add_parser(
        "gen-data", parents=[common], help="Generate a synthetic EHR dataset"
    )
    gen.add_argument("--patients", dest="n_patients", type=int, default=None)
    gen.add_argument("--dx", dest="n_dx", type=int, default=None, help="|D|")
    gen.add_argument("--px", dest="n_px", type=int, default=None, help="|P|")
    gen.add_argument("--rx", dest="n_rx", type=int, default=None, help="|M|")
    gen.add_argument("--clusters", dest="n_clusters", type=int, default=None)
    gen.add_argument("--min-visits", dest="min_visits", type=int, default=None)
    gen.add_argument("--max-visits", dest="max_visits", type=int, default=None)
    gen.add_argument("--code-noise", dest="code_noise", type=float, default=None)
    gen.add_argument("--relevance-noise", dest="relevance_noise", type=float, default=None)
    gen.add_argument("--ddi-density", dest="ddi_density", type=float, default=None)

    train = subparsers.add_parser(
        "train", parents=[common, model], help="Train one model and write a checkpoint"
    )
    train.add_argument("--variant", type=_variant, default=None, help="Encoder variant or alias")
    train.add_argument(
        "--mode",
        dest="history_filter",
        type=HistoryFilter.from_str,
        default=None,
        help="History filter: all, no, top1, mid1, bot1",
    )

    for name, text in (("eval", "Evaluate a checkpoint"), ("analyze", "Selected-visit analysis")):
        sub = subparsers.add_parser(name, parents=[common], help=text)
        sub.add_argument("--data", type=Path, required=True, help="Dataset directory")
        sub.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file")

    ablate = subparsers.add_parser(
        "ablate", parents=[common, model], help="Encoder variant ablation over seeds"
    )
    ablate.add_argument("--variants", type=_variant_list, default=_variant_list(DEFAULT_VARIANTS))
    ablate.add_argument("--seeds", type=_seed_list, default=_seed_list(DEFAULT_SEEDS))

    motivate = subparsers.add_parser(
        "motivate", parents=[common, model], help="History-filter experiment over seeds"
    )
    motivate.add_argument(
        "--mode", dest="modes", type=_mode_list, default=_mode_list(DEFAULT_MODES)
    )
    motivate.add_argument("--variant", type=_variant, default=EncoderVariant.NO_SELECTION)
    motivate.add_argument("--seeds", type=_seed_list, default=_seed_list(DEFAULT_SEEDS))

    return parser


# ── entry point ───────────────────────────────────────────────


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point.

    Args:
        argv: Command-line arguments (defaults to sys.argv).

    Returns:
        Exit code (0 success, 2 usage/validation, 3 numerical failure).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.command is None:
        parser.print_help()
        return EXIT_OK

    try:
        settings = _settings(args)
        setup_logging(settings.log_level, settings.log_file)
        container = Container(settings)
        return _COMMANDS[args.command](args, container)
    except NumericalError as e:
        err_console.print(f"[bold red]❌ Numerical failure ({e.stage}):[/] {e}")
        if e.epoch is not None:
            err_console.print(f"   epoch={e.epoch} patient={e.patient_id}")
        return EXIT_NUMERICAL
    except VitaError as e:
        err_console.print(f"[bold red]❌ {e.stage or 'error'}:[/] {e}")
        return EXIT_USAGE
    except Exception as e:
        log.exception("Unexpected error")
        err_console.print(f"[bold red]❌ Fatal error:[/] {e}")
        return EXIT_INTERNAL


def _settings(args: argparse.Namespace) -> Settings:
    overrides = {
        k: v
        for k, v in {
            "log_level": args.log_level,
            "log_file": args.log_file,
            "jobs": args.jobs,
        }.items()
        if v is not None
    }
    try:
        return Settings(**overrides)
    except Exception as e:
        raise ConfigurationError(f"Invalid runtime settings: {e}", cause=e) from e


def _out_dir(args: argparse.Namespace, settings: Settings) -> Path:
    out: Path = args.out if args.out is not None else settings.output_dir / args.command
    if out.exists() and not out.is_dir():
        raise ConfigurationError(f"--out {out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ConfigurationError(f"--out {out} is not empty; pass --force to write into it")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(
    command: str,
    config: dict[str, Any],
    fingerprint: str,
    seeds: Sequence[int],
    out: Path,
) -> RunManifest:
    return RunManifest(
        command=command,
        config=config,
        dataset_fingerprint=fingerprint,
        seeds=list(seeds),
        output_dir=str(out),
        tool_version=__version__,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _train_config(args: argparse.Namespace, **extra: Any) -> TrainConfig:
    base = load_train_config(args.config)
    keys = (
        "dim",
        "learning_rate",
        "epochs",
        "patience",
        "tau_g",
        "tau_a",
        "beta",
        "max_decode_len",
    )
    overrides = {k: getattr(args, k) for k in keys}
    return base.with_overrides(**overrides, **extra)


# ── commands ──────────────────────────────────────────────────


def _cmd_gen_data(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import GenerateDatasetUseCase

    config = build_synth_config(
        n_patients=args.n_patients,
        n_dx=args.n_dx,
        n_px=args.n_px,
        n_rx=args.n_rx,
        n_clusters=args.n_clusters,
        min_visits=args.min_visits,
        max_visits=args.max_visits,
        code_noise=args.code_noise,
        relevance_noise=args.relevance_noise,
        ddi_density=args.ddi_density,
        seed=args.seed,
    )
    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    cohort = GenerateDatasetUseCase(repo).execute(config, out)
    # written after the data files: the manifest fingerprints them, so a
    # directory without manifest.json is an interrupted generation
    container.report_writer().write_manifest(
        _manifest(
            args.command, config.model_dump(mode="json"), repo.fingerprint(out), [args.seed], out
        ),
        out,
    )

    table = Table(title="🧪 Synthetic dataset")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Patients", str(len(cohort.dataset.patients)))
    table.add_row("Vocab |D| / |P| / |M|", f"{config.n_dx} / {config.n_px} / {config.n_rx}")
    table.add_row("DDI edges", str(len(cohort.dataset.ddi_edges)))
    table.add_row("Foreign past visits", f"{cohort.foreign_past_fraction():.3f}")
    table.add_row("Output", str(out))
    console.print(table)
    return EXIT_OK


def _cmd_train(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import TrainModelUseCase

    config = _train_config(
        args, variant=args.variant, history_filter=args.history_filter, seed=args.seed
    )
    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    writer = container.report_writer()
    writer.write_manifest(
        _manifest(args.command, config.snapshot(), repo.fingerprint(args.data), [config.seed], out),
        out,
    )

    response = TrainModelUseCase(repo, container.checkpoint_store(), writer).execute(
        args.data, config, out, split_seed=args.seed
    )
    console.print(
        f"\n✅ Training complete: best val Jaccard [bold]{response.best_val_jaccard:.4f}[/] "
        f"at epoch {response.best_epoch}"
    )
    console.print(f"   💾 Checkpoint: {response.checkpoint_path}")
    console.print(f"   📈 Log: {response.log_path}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import EvaluateCheckpointUseCase

    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    writer = container.report_writer()
    writer.write_manifest(
        _manifest(
            args.command,
            {"checkpoint": str(args.checkpoint), "split_seed": args.seed},
            repo.fingerprint(args.data),
            [args.seed],
            out,
        ),
        out,
    )

    response = EvaluateCheckpointUseCase(repo, container.checkpoint_store(), writer).execute(
        args.data, args.checkpoint, out, split_seed=args.seed
    )
    _print_runs(
        "📊 Test metrics",
        [
            ("all visits", response.all_visits),
            ("visits with history", response.with_history),
        ],
    )
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import AnalyzeSelectionUseCase

    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    writer = container.report_writer()
    writer.write_manifest(
        _manifest(
            args.command,
            {"checkpoint": str(args.checkpoint), "split_seed": args.seed},
            repo.fingerprint(args.data),
            [args.seed],
            out,
        ),
        out,
    )

    report = (
        AnalyzeSelectionUseCase(repo, container.checkpoint_store(), writer)
        .execute(args.data, args.checkpoint, out, split_seed=args.seed)
        .report
    )
    table = Table(title=f"🔍 Past-visit similarity ({report.variant})")
    for column in ("partition", "count", "min", "median", "mean", "max"):
        table.add_column(column, justify="right" if column != "partition" else "left")
    for name, stats in (
        ("selected", report.selected),
        ("unselected", report.unselected),
        ("all", report.overall),
    ):
        table.add_row(
            name,
            str(stats.count),
            *(
                "-" if v is None else f"{v:.4f}"
                for v in (stats.min, stats.median, stats.mean, stats.max)
            ),
        )
    console.print(table)
    ratio = report.mean_ratio
    console.print(f"Mean ratio selected/unselected: {'n/a' if ratio is None else f'{ratio:.4f}'}")
    return EXIT_OK


def _cmd_ablate(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import RunAblationUseCase

    config = _train_config(args)
    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    writer = container.report_writer()
    manifest_config = {
        **config.snapshot(),
        "variants": [v.value for v in args.variants],
        "split_seed": args.seed,
    }
    writer.write_manifest(
        _manifest(args.command, manifest_config, repo.fingerprint(args.data), args.seeds, out),
        out,
    )

    orchestrator = container.orchestrator()
    result = RunAblationUseCase(repo, writer, orchestrator).execute(
        args.data, config, args.variants, args.seeds, out, split_seed=args.seed
    )
    _print_summary("🧪 Ablation (test, all visits)", result.rows)
    if result.best_tau_a is not None:
        console.print(f"Best sharp τ_a: {result.best_tau_a:g}")
    _print_timings(orchestrator.timer)
    return EXIT_OK


def _cmd_motivate(args: argparse.Namespace, container: Container) -> int:
    from vita_rx.application.use_cases import RunMotivationUseCase

    config = _train_config(args, variant=args.variant)
    out = _out_dir(args, container.settings)
    repo = container.dataset_repository()
    writer = container.report_writer()
    manifest_config = {
        **config.snapshot(),
        "modes": [m.value for m in args.modes],
        "split_seed": args.seed,
    }
    writer.write_manifest(
        _manifest(args.command, manifest_config, repo.fingerprint(args.data), args.seeds, out),
        out,
    )

    orchestrator = container.orchestrator()
    rows = RunMotivationUseCase(repo, writer, orchestrator).execute(
        args.data, config, args.modes, args.seeds, out, split_seed=args.seed
    )
    _print_summary("🧭 History filters (test, visits with history)", rows)
    _print_timings(orchestrator.timer)
    return EXIT_OK


_COMMANDS: dict[str, Callable[[argparse.Namespace, Container], int]] = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "analyze": _cmd_analyze,
    "ablate": _cmd_ablate,
    "motivate": _cmd_motivate,
}


# ── output ────────────────────────────────────────────────────


def _print_runs(title: str, rows: Sequence[tuple[str, MetricsReport]]) -> None:
    table = Table(title=title)
    table.add_column("Scope", style="cyan")
    for column in ("Jaccard", "PRAUC", "F1", "DDI rate", "Visits"):
        table.add_column(column, justify="right")
    for scope, r in rows:
        table.add_row(
            scope,
            f"{r.jaccard:.4f}",
            f"{r.prauc:.4f}",
            f"{r.f1:.4f}",
            f"{r.ddi_rate:.4f}",
            str(r.n_visits),
        )
    console.print(table)


def _print_summary(title: str, rows: Sequence[MetricsReport]) -> None:
    table = Table(title=title)
    table.add_column("Variant", style="cyan")
    table.add_column("Seeds", justify="right")
    for column in ("Jaccard", "PRAUC", "F1", "DDI rate"):
        table.add_column(column, justify="right")
    for s in MetricsSummary.group(rows):
        table.add_row(
            s.variant,
            str(s.n_seeds),
            *(f"{s.mean[m]:.4f} ± {s.std[m]:.4f}" for m in ("jaccard", "prauc", "f1", "ddi_rate")),
        )
    console.print(table)


def _print_timings(timer: RunTimer) -> None:
    table = Table(title=f"⏱️  Timings ({timer.wall_seconds:.1f}s wall)")
    table.add_column("Group", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Total (s)", justify="right")
    table.add_column("Mean (s)", justify="right")
    for group, timing in timer.by_group().items():
        table.add_row(
            group, str(timing.steps), f"{timing.seconds:.1f}", f"{timing.mean_seconds:.1f}"
        )
    console.print(table)


if __name__ == "__main__":
    sys.exit(main())
