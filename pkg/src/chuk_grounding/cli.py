"""
Command line for dataset generation, training, evaluation, gradient checks
and ablations.

Exit codes: 0 on success, 1 when the gradient suite fails, 2 on a bad or
unreadable config, dataset or checkpoint.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from chuk_grounding.config import (
    PRESETS,
    apply_flag_overrides,
    config_reference,
    get_preset,
    load_config,
    load_model_file,
)
from chuk_grounding.data import SceneSpec, generate_dataset, load_dataset, save_dataset
from chuk_grounding.errors import ConfigError, GroundingError
from chuk_grounding.exporters import export_ablation_json, export_records_csv, export_report_json
from chuk_grounding.pipeline import (
    ablate,
    evaluate,
    gradcheck_suite,
    list_axes,
    load_checkpoint,
    save_checkpoint,
    train,
)

logger = logging.getLogger("chuk_grounding")


def _data_path(explicit: str | None, configured: str | None, what: str) -> str:
    path = explicit or configured
    if path is None:
        raise ConfigError(f"no {what} data: pass --{what} or set paths.{what} in the config")
    return path


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds expects comma-separated integers, got {text!r}") from exc


def cmd_gen_data(args: argparse.Namespace) -> int:
    spec = SceneSpec()
    if args.spec:
        spec = load_model_file(args.spec, spec)
    samples = generate_dataset(spec, seed=args.seed, count=args.count, prefix=args.prefix)
    save_dataset(samples, args.out)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else get_preset(args.preset)
    config = apply_flag_overrides(config, args.ablate_flag or [])
    if args.epochs is not None:
        config = config.model_copy(
            update={"optim": config.optim.model_copy(update={"epochs": args.epochs})}
        )
    train_samples = load_dataset(_data_path(args.train, config.paths.train, "train"))
    val_path = args.val or config.paths.val
    val_samples = load_dataset(val_path) if val_path else None
    resume = load_checkpoint(args.resume) if args.resume else None
    result = train(config, train_samples, val_samples, resume=resume, log_path=args.log)
    save_checkpoint(result.checkpoint, args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    samples = load_dataset(args.data)
    report, records = evaluate(checkpoint, samples, hide_object_name=args.hide_object_name)
    text = export_report_json(report)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.records:
        Path(args.records).write_text(export_records_csv(records), encoding="utf-8")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = gradcheck_suite(get_preset(args.preset))
    for check in report.checks:
        status = "ok  " if check.passed else "FAIL"
        print(f"{status} {check.name:<28} max rel error {check.max_rel_error:.2e}")
    print(f"{len(report.checks)} checks in {report.seconds:.1f}s")
    return 0 if report.passed else 1


def cmd_ablate(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else get_preset(args.preset)
    train_samples = load_dataset(_data_path(args.train, config.paths.train, "train"))
    val_samples = load_dataset(_data_path(args.val, config.paths.val, "val"))
    report = ablate(config, args.axis, _parse_seeds(args.seeds), train_samples, val_samples)
    text = export_ablation_json(report)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_config_reference(args: argparse.Namespace) -> int:
    for key in config_reference(get_preset(args.preset)):
        print(f"{key.key} ({key.type}, default {key.default!r}): {key.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chuk-grounding", description=__doc__)
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="Generate a synthetic dataset")
    gen.add_argument("--spec", help="Scene spec file of key = value lines")
    gen.add_argument("--out", required=True, help="Output JSONL file")
    gen.add_argument("--seed", type=int, default=None, help="Base seed (default: spec seed)")
    gen.add_argument("--count", type=int, default=None, help="Samples (default: spec count)")
    gen.add_argument("--prefix", default="s", help="Sample id prefix")
    gen.set_defaults(handler=cmd_gen_data)

    trainer = commands.add_parser("train", help="Train and write a checkpoint")
    trainer.add_argument("--config", help="Run config file")
    trainer.add_argument("--preset", default="desk", choices=list(PRESETS))
    trainer.add_argument("--out", required=True, help="Checkpoint file to write")
    trainer.add_argument(
        "--ablate-flag", action="append", metavar="KEY=VALUE", help="Ablation override"
    )
    trainer.add_argument("--train", help="Training JSONL (default: paths.train)")
    trainer.add_argument("--val", help="Validation JSONL (default: paths.val)")
    trainer.add_argument("--epochs", type=int, default=None, help="Override optim.epochs")
    trainer.add_argument("--log", help="Metrics log (JSON Lines)")
    trainer.add_argument("--resume", help="Checkpoint to continue from")
    trainer.set_defaults(handler=cmd_train)

    evaluator = commands.add_parser("eval", help="Evaluate a checkpoint")
    evaluator.add_argument("--ckpt", required=True, help="Checkpoint file")
    evaluator.add_argument("--data", required=True, help="Dataset JSONL")
    evaluator.add_argument("--report", help="Report JSON file (default: stdout)")
    evaluator.add_argument("--records", help="Per-sample CSV file")
    evaluator.add_argument(
        "--hide-object-name",
        action="store_true",
        help="Replace the shape word of each expression with 'object'",
    )
    evaluator.set_defaults(handler=cmd_eval)

    checker = commands.add_parser("gradcheck", help="Run the gradient-check suite")
    checker.add_argument("--preset", default="toy", choices=list(PRESETS))
    checker.set_defaults(handler=cmd_gradcheck)

    ablation = commands.add_parser("ablate", help="Paired runs over one ablation axis")
    ablation.add_argument("--axis", required=True, choices=list_axes())
    ablation.add_argument("--config", help="Run config file")
    ablation.add_argument("--preset", default="desk", choices=list(PRESETS))
    ablation.add_argument("--seeds", default="0,1,2", help="Comma-separated seeds")
    ablation.add_argument("--train", help="Training JSONL (default: paths.train)")
    ablation.add_argument("--val", help="Validation JSONL (default: paths.val)")
    ablation.add_argument("--out", help="Comparison JSON file (default: stdout)")
    ablation.set_defaults(handler=cmd_ablate)

    reference = commands.add_parser("config-reference", help="List every config key")
    reference.add_argument("--preset", default="desk", choices=list(PRESETS))
    reference.set_defaults(handler=cmd_config_reference)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        code: int = args.handler(args)
        return code
    except (GroundingError, OSError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
