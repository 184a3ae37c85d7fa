"""Runner CLI: zero-shot scoring, finetuning, prediction, toy checkpoints.

Exit codes: 0 success, 1 internal error, 2 usage/validation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunnerConfig
from .engine import NORMALIZATION, MaskedSeq2SeqScorer, RunnerError
from .finetune import finetune
from .protocol import ProtocolError, read_dataset, write_predictions
from .tinymodel import make_tiny_model


def _predict_to_file(model_path: str, dataset_path: str, out: str, config: RunnerConfig) -> None:
    dataset = read_dataset(dataset_path)
    if not dataset.examples:
        write_predictions(out, [], meta={"model": model_path, "note": "empty eval set"})
        print(f"empty eval set; wrote empty predictions to {out}")
        return
    scorer = MaskedSeq2SeqScorer(model_path, config.device)
    predictions = scorer.predict_dataset(dataset, config.batch_size)
    meta = {
        **config.as_dict(),
        "model": model_path,
        "normalization": NORMALIZATION,
        "n_examples": len(predictions),
    }
    write_predictions(out, predictions, meta=meta)
    print(f"wrote {len(predictions)} predictions to {out}")


def cmd_zero_shot(args) -> int:
    config = RunnerConfig(
        model=args.model, mode="zero_shot", batch_size=args.batch_size,
        seed=args.seed, device=args.device,
    )
    _predict_to_file(args.model, args.dataset, args.out, config)
    return 0


def cmd_finetune(args) -> int:
    config = RunnerConfig(
        model=args.model,
        mode=args.mode,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        device=args.device,
    )
    manifest = finetune(args.train, args.dev, config, args.out)
    print(
        f"saved checkpoint to {args.out} (best dev score "
        f"{manifest['dev_score']:.6f} over {len(manifest['epoch_dev_scores'])} epochs)"
    )
    return 0


def cmd_predict(args) -> int:
    checkpoint = Path(args.checkpoint)
    if not checkpoint.is_dir():
        raise RunnerError(f"checkpoint directory not found: {checkpoint}")
    config = RunnerConfig(
        model=str(checkpoint), mode="zero_shot", batch_size=args.batch_size,
        device=args.device,
    )
    _predict_to_file(str(checkpoint), args.dataset, args.out, config)
    return 0


def cmd_make_toy_model(args) -> int:
    path = make_tiny_model(
        args.out, seed=args.seed, d_model=args.d_model,
        num_layers=args.num_layers, num_heads=args.num_heads, d_ff=args.d_ff,
    )
    print(f"wrote toy checkpoint to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escorunner",
        description="Language-model runner for the benchmark file protocol",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zero-shot", help="score an eval set with an untuned model")
    p.add_argument("--model", required=True, help="model-hub name or local path")
    p.add_argument("--dataset", required=True, help="eval set JSONL")
    p.add_argument("--out", required=True, help="predictions JSONL path")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_zero_shot)

    p = sub.add_parser("finetune", help="K-shot finetune with best-checkpoint selection")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=["finetune_ptr", "finetune_instruction"], required=True)
    p.add_argument("--train", required=True, help="train set JSONL")
    p.add_argument("--dev", required=True, help="dev set JSONL")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--lr", type=float, help="override the mode's default learning rate")
    p.add_argument("--epochs", type=int, help="override the mode's default epoch count")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("predict", help="score an eval set with a finetuned checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("make-toy-model", help="write a tiny random local checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--num-layers", type=int, default=2)
    p.add_argument("--num-heads", type=int, default=2)
    p.add_argument("--d-ff", type=int, default=128)
    p.set_defaults(func=cmd_make_toy_model)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProtocolError, RunnerError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
