"""Command-line pipeline: ingest, generate, split, mock-predict, score,
run-experiment.

Every stage reads and writes files (JSONL/JSON), never in-memory handoffs,
so any model-side runner can be swapped in between ``split`` and ``score``.
All commands taking ``--seed`` are bit-reproducible: identical invocations
write identical bytes.

Exit codes: 0 success, 1 internal error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import random
import re
import sys
from pathlib import Path

from . import datagen, ingest, score, splitkit
from .datagen import DatagenError, GenConfig, PromptExample, Task, read_dataset, write_dataset
from .ingest import ColumnMap, IngestError, ValidationFailedError
from .jsonio import SCHEMA_VERSION, write_json
from .score import PredictionRecord, ScoreError
from .splitkit import SplitConfig, SplitError
from .taxonomy import Taxonomy, TaxonomyError

EVAL_SET_RE = re.compile(r"eval_set_(\d+)\.jsonl$")


class ConfigError(Exception):
    pass


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ESCOBENCH_OUT_DIR")
    if not out:
        raise ConfigError("no output location: pass --out or set ESCOBENCH_OUT_DIR")
    return Path(out)


def _load_taxonomy(args, permissive: bool = False) -> tuple[Taxonomy, ingest.ValidationReport]:
    if getattr(args, "esco_dir", None):
        columns = ColumnMap()
        if getattr(args, "columns", None):
            with open(args.columns, encoding="utf-8") as fh:
                columns = _column_map_from_dict(json.load(fh))
        return ingest.load_esco_csv(args.esco_dir, columns, strict=not permissive)
    if args.taxonomy:
        base = Path(args.taxonomy)
        return ingest.load_canonical(
            base / "entities.jsonl", base / "relations.jsonl", strict=not permissive
        )
    if args.entities and args.relations:
        return ingest.load_canonical(args.entities, args.relations, strict=not permissive)
    raise ConfigError("no taxonomy source: pass --taxonomy DIR or --entities/--relations")


def _column_map_from_dict(raw: dict) -> ColumnMap:
    valid = set(ColumnMap.__dataclass_fields__)
    unknown = set(raw) - valid
    if unknown:
        raise ConfigError(f"unknown column map field(s): {sorted(unknown)}")
    return ColumnMap(**raw)


def _print_stats(stats) -> None:
    for name, value in stats.as_dict().items():
        print(f"{name:<16} {value}")


# -- ingest ---------------------------------------------------------------------


def cmd_ingest(args) -> int:
    try:
        taxonomy, report = _load_taxonomy(args, permissive=args.permissive)
    except ValidationFailedError as exc:
        if args.out:
            write_json(Path(args.out) / "validation_report.json", exc.report.as_dict())
        raise
    _print_stats(taxonomy.stats())
    if args.stats_only:
        return 0
    out = _out_dir(args)
    ingest.write_canonical(taxonomy, out / "entities.jsonl", out / "relations.jsonl")
    write_json(out / "validation_report.json", report.as_dict())
    if report.warnings:
        print(f"{len(report.warnings)} warning(s); see validation_report.json", file=sys.stderr)
    return 0


# -- generate ---------------------------------------------------------------------


def _tasks_from_arg(arg: str) -> list[Task]:
    if arg == "all":
        return [Task.ECRC, Task.EL, Task.QA]
    return [Task(arg)]


def cmd_generate(args) -> int:
    taxonomy, _ = _load_taxonomy(args)
    config = GenConfig(
        seed=args.seed,
        qa_positive_count=args.qa_positive_count,
        el_include_preferred_label_synonyms=args.el_include_preferred_synonyms,
        negative_ratio=args.negative_ratio,
    )
    out = _out_dir(args)
    stats = {}
    for task in _tasks_from_arg(args.task):
        preset = datagen.default_preset(task)
        examples = datagen.GENERATORS[task](taxonomy, config, preset)
        write_dataset(
            out / f"{task.value}.jsonl",
            examples,
            preset.verbalizer_table,
            task.value,
            extra_header={"template_preset": preset.name, "seed": config.seed},
        )
        stats[task.value] = datagen.dataset_stats(examples).as_dict()
        print(f"{task.value}: {len(examples)} examples")
    write_json(out / "stats.json", stats)
    return 0


# -- split ------------------------------------------------------------------------


def _write_examples_like(
    path: Path, examples: list[PromptExample], header: dict, extra: dict | None = None
) -> None:
    extra_header = {k: v for k, v in header.items() if k in ("template_preset", "seed")}
    if extra:
        extra_header.update(extra)
    write_dataset(path, examples, header["verbalizers"], header["task"], extra_header)


def cmd_split(args) -> int:
    examples, header = read_dataset(args.dataset)
    task = Task(header["task"])
    config = SplitConfig(
        seed=args.seed, k=args.k, eval_sets=args.eval_sets, eval_size=args.eval_size
    )
    bundle, report = splitkit.make_bundle(examples, task, config)
    out = _out_dir(args)
    _write_examples_like(out / "train_k.jsonl", bundle.train_k, header)
    _write_examples_like(out / "dev_k.jsonl", bundle.dev_k, header)
    _write_examples_like(out / "eval_pool.jsonl", bundle.eval_pool, header)
    for i, eval_set in enumerate(bundle.eval_sets, start=1):
        _write_examples_like(out / f"eval_set_{i}.jsonl", eval_set, header)
    write_json(out / "split_report.json", report.as_dict())
    print(
        f"{task.value}: train {len(bundle.train_k)}, dev {len(bundle.dev_k)}, "
        f"pool {len(bundle.eval_pool)} (decontamination removed "
        f"{report.decontamination_removed}), {len(bundle.eval_sets)} eval sets "
        f"of {report.eval_set_size}"
    )
    return 0


# -- mock predictions ---------------------------------------------------------------


def _mock_predictions(
    examples: list[PromptExample], header: dict, policy: str, seed: int | None
) -> list[PredictionRecord]:
    verbalizers = header["verbalizers"]
    if policy == "gold_oracle":
        return [
            PredictionRecord(
                e.example_id, {s.index: s.gold for s in e.rendered.mask_slots}
            )
            for e in examples
        ]
    if policy == "majority_class":
        tallies: dict[str, dict[str, int]] = {}
        for example in examples:
            for slot in example.rendered.mask_slots:
                counts = tallies.setdefault(slot.class_space, {})
                counts[slot.gold] = counts.get(slot.gold, 0) + 1
        # ties break toward the lexicographically smallest class
        majority = {
            space: max(sorted(counts), key=lambda c: counts[c])
            for space, counts in tallies.items()
        }
        return [
            PredictionRecord(
                e.example_id,
                {s.index: majority[s.class_space] for s in e.rendered.mask_slots},
            )
            for e in examples
        ]
    if policy == "uniform_random":
        if seed is None:
            raise ConfigError("uniform_random policy needs --seed")
        rng = random.Random(f"{seed}:mock:uniform")
        records = []
        for example in examples:
            picks = {}
            for slot in sorted(example.rendered.mask_slots, key=lambda s: s.index):
                picks[slot.index] = rng.choice(sorted(verbalizers[slot.class_space]))
            records.append(PredictionRecord(example.example_id, picks))
        return records
    raise ConfigError(f"unknown mock policy {policy!r}")


def predictions_name(eval_file: Path) -> str:
    return eval_file.stem + ".predictions.jsonl"


def cmd_mock_predict(args) -> int:
    eval_path = Path(args.eval)
    if eval_path.is_dir():
        eval_files = _eval_set_files(eval_path)
        out_dir = _out_dir(args)
        for eval_file in eval_files:
            examples, header = read_dataset(eval_file)
            records = _mock_predictions(examples, header, args.policy, args.seed)
            score.write_predictions(out_dir / predictions_name(eval_file), records)
        print(f"wrote {len(eval_files)} prediction file(s)")
        return 0
    examples, header = read_dataset(eval_path)
    records = _mock_predictions(examples, header, args.policy, args.seed)
    out = args.out or os.environ.get("ESCOBENCH_OUT_DIR")
    if not out:
        raise ConfigError("no output location: pass --out or set ESCOBENCH_OUT_DIR")
    out_path = Path(out)
    if out_path.is_dir():
        out_path = out_path / predictions_name(eval_path)
    score.write_predictions(out_path, records)
    print(f"wrote {out_path}")
    return 0


def _eval_set_files(directory: Path) -> list[Path]:
    files = [p for p in directory.iterdir() if EVAL_SET_RE.search(p.name)]
    if not files:
        raise ConfigError(f"no eval_set_*.jsonl files in {directory}")
    return sorted(files, key=lambda p: int(EVAL_SET_RE.search(p.name).group(1)))


# -- score --------------------------------------------------------------------------


def cmd_score(args) -> int:
    eval_dir = Path(args.eval_dir)
    predictions_dir = Path(args.predictions_dir)
    runs = []
    run_files = []
    for eval_file in _eval_set_files(eval_dir):
        examples, header = read_dataset(eval_file)
        pred_path = predictions_dir / predictions_name(eval_file)
        if not pred_path.is_file():
            raise score.MissingPredictionError(f"missing prediction file {pred_path}")
        predictions = score.read_predictions(pred_path)
        runs.append(score.score_run(examples, predictions, header["verbalizers"]))
        run_files.append(eval_file.name)

    metadata = {"eval_files": run_files}
    split_report = eval_dir / "split_report.json"
    if split_report.is_file():
        with open(split_report, encoding="utf-8") as fh:
            info = json.load(fh)
        metadata.update({k: info[k] for k in ("task", "k", "seed") if k in info})
    report = score.aggregate(runs, metadata)
    if args.out:
        write_json(args.out, report.as_dict())

    width = max(len(r) for r in list(report.per_role) + ["combined"])
    print(f"{'role':<{width}}  {'mean':>12}  {'std':>12}")
    for role in sorted(report.per_role):
        stats = report.per_role[role]
        print(f"{role:<{width}}  {stats['mean']:>12.9g}  {stats['std']:>12.9g}")
    print(
        f"{'combined':<{width}}  {report.combined['mean']:>12.9g}  "
        f"{report.combined['std']:>12.9g}"
    )
    print(f"({len(runs)} run(s))")
    return 0


# -- run-experiment --------------------------------------------------------------------


_CONFIG_KEYS = {"schema_version", "mode", "taxonomy", "tasks", "gen", "split", "out_dir"}
_GEN_KEYS = {"seed", "negative_ratio", "qa_positive_count", "el_include_preferred_label_synonyms"}
_SPLIT_KEYS = {"seed", "k", "eval_sets", "eval_size"}


def _check_keys(section: dict, allowed: set[str], where: str, strict: bool) -> None:
    unknown = set(section) - allowed
    if unknown and strict:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(unknown)}")


def load_experiment_config(path: str | Path, strict: bool = True) -> dict:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    _check_keys(raw, _CONFIG_KEYS, "config", strict)
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {raw.get('schema_version')!r}")
    mode = raw.get("mode")
    if mode not in ("zero_shot", "k_shot", "multitask"):
        raise ConfigError(f"mode must be zero_shot, k_shot or multitask, got {mode!r}")
    gen = raw.get("gen", {})
    _check_keys(gen, _GEN_KEYS, "gen", strict)
    if "seed" not in gen:
        raise ConfigError("gen.seed is required")
    split = raw.get("split", {})
    _check_keys(split, _SPLIT_KEYS, "split", strict)
    if "seed" not in split:
        raise ConfigError("split.seed is required")
    if mode != "zero_shot" and not split.get("k"):
        raise ConfigError(f"split.k is required for mode {mode}")
    taxonomy = raw.get("taxonomy", {})
    _check_keys(taxonomy, {"entities", "relations", "esco_dir"}, "taxonomy", strict)
    if "esco_dir" not in taxonomy and not ("entities" in taxonomy and "relations" in taxonomy):
        raise ConfigError("taxonomy needs esco_dir or entities+relations")
    if "out_dir" not in raw:
        raise ConfigError("out_dir is required")
    # paths resolve relative to the config file
    base = path.parent
    resolved = dict(raw)
    resolved["taxonomy"] = {k: str(base / v) for k, v in taxonomy.items()}
    resolved["out_dir"] = str(base / raw["out_dir"])
    resolved["tasks"] = raw.get("tasks", ["ecrc", "el", "qa"])
    return resolved


def cmd_run_experiment(args) -> int:
    config = load_experiment_config(args.config, strict=not args.permissive)
    taxonomy_cfg = config["taxonomy"]
    if "esco_dir" in taxonomy_cfg:
        taxonomy, _ = ingest.load_esco_csv(taxonomy_cfg["esco_dir"])
    else:
        taxonomy, _ = ingest.load_canonical(
            taxonomy_cfg["entities"], taxonomy_cfg["relations"]
        )
    gen_cfg = GenConfig(
        seed=config["gen"]["seed"],
        negative_ratio=config["gen"].get("negative_ratio", 1.0),
        qa_positive_count=config["gen"].get("qa_positive_count"),
        el_include_preferred_label_synonyms=config["gen"].get(
            "el_include_preferred_label_synonyms", False
        ),
    )
    split_raw = config["split"]
    out = Path(config["out_dir"])
    tasks = [Task(t) for t in config["tasks"]]
    mode = config["mode"]

    headers: dict[Task, dict] = {}
    datasets: dict[Task, list[PromptExample]] = {}
    stats = {}
    for task in tasks:
        preset = datagen.default_preset(task)
        examples = datagen.GENERATORS[task](taxonomy, gen_cfg, preset)
        header_extra = {"template_preset": preset.name, "seed": gen_cfg.seed}
        write_dataset(
            out / "datasets" / f"{task.value}.jsonl",
            examples,
            preset.verbalizer_table,
            task.value,
            extra_header=header_extra,
        )
        datasets[task] = examples
        headers[task] = {
            "task": task.value,
            "verbalizers": preset.verbalizer_table,
            **header_extra,
        }
        stats[task.value] = datagen.dataset_stats(examples).as_dict()
    write_json(out / "datasets" / "stats.json", stats)

    split_cfg = SplitConfig(
        seed=split_raw["seed"],
        k=split_raw.get("k") or 1,
        eval_sets=split_raw.get("eval_sets", 9),
        eval_size=split_raw.get("eval_size", 512),
    )

    bundles: dict[Task, splitkit.SplitBundle] = {}
    for task in tasks:
        task_dir = out / "splits" / task.value
        header = headers[task]
        if mode == "zero_shot":
            eval_sets = splitkit.sample_eval_sets(datasets[task], split_cfg)
            for i, eval_set in enumerate(eval_sets, start=1):
                _write_examples_like(task_dir / f"eval_set_{i}.jsonl", eval_set, header)
            write_json(
                task_dir / "split_report.json",
                {
                    "task": task.value,
                    "mode": "zero_shot",
                    "seed": split_cfg.seed,
                    "eval_sets": len(eval_sets),
                    "eval_set_size": len(eval_sets[0]),
                },
            )
            continue
        bundle, report = splitkit.make_bundle(datasets[task], task, split_cfg)
        bundles[task] = bundle
        _write_examples_like(task_dir / "train_k.jsonl", bundle.train_k, header)
        _write_examples_like(task_dir / "dev_k.jsonl", bundle.dev_k, header)
        _write_examples_like(task_dir / "eval_pool.jsonl", bundle.eval_pool, header)
        for i, eval_set in enumerate(bundle.eval_sets, start=1):
            _write_examples_like(task_dir / f"eval_set_{i}.jsonl", eval_set, header)
        write_json(task_dir / "split_report.json", report.as_dict())

    if mode == "multitask":
        merged_verbalizers = {}
        for task in tasks:
            merged_verbalizers.update(headers[task]["verbalizers"])
        for size in range(1, len(tasks) + 1):
            for combo in itertools.combinations(sorted(tasks, key=lambda t: t.value), size):
                name = "+".join(t.value for t in combo)
                mixed = splitkit.mix_tasks(bundles, list(combo), split_cfg.seed)
                write_dataset(
                    out / "mixed" / f"train_{name}.jsonl",
                    mixed.examples,
                    merged_verbalizers,
                    "mixed",
                    extra_header={"tasks": [t.value for t in combo]},
                )
                mixed_dev = splitkit.mix_examples(
                    [bundles[t].dev_k for t in combo], f"{split_cfg.seed}:mixdev:{name}"
                )
                write_dataset(
                    out / "mixed" / f"dev_{name}.jsonl",
                    mixed_dev,
                    merged_verbalizers,
                    "mixed",
                    extra_header={"tasks": [t.value for t in combo]},
                )
    print(f"experiment written to {out}")
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escobench",
        description="Taxonomy-driven benchmark generation and evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse taxonomy sources into canonical JSONL")
    p.add_argument("--esco-dir", help="directory with ESCO-style CSV files")
    p.add_argument("--entities", help="canonical entities JSONL")
    p.add_argument("--relations", help="canonical relations JSONL")
    p.add_argument("--taxonomy", help="directory with entities.jsonl + relations.jsonl")
    p.add_argument("--columns", help="JSON file overriding CSV column names")
    p.add_argument("--out", help="output directory")
    p.add_argument("--stats-only", action="store_true", help="print stats, write nothing")
    p.add_argument("--permissive", action="store_true", help="warn on bad records, don't fail")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate", help="generate benchmark datasets from a taxonomy")
    p.add_argument("--taxonomy", help="directory with entities.jsonl + relations.jsonl")
    p.add_argument("--entities")
    p.add_argument("--relations")
    p.add_argument("--task", choices=["ecrc", "el", "qa", "all"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--negative-ratio", type=float, default=1.0)
    p.add_argument("--qa-positive-count", type=_positive_int)
    p.add_argument("--el-include-preferred-synonyms", action="store_true")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="K-shot split, decontaminate, sample eval sets")
    p.add_argument("--dataset", required=True, help="generated dataset JSONL")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--eval-sets", type=_positive_int, default=9)
    p.add_argument("--eval-size", type=_positive_int, default=512)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("mock-predict", help="emit predictions without a model")
    p.add_argument("--eval", required=True, help="eval set file, or directory of them")
    p.add_argument(
        "--policy",
        choices=["gold_oracle", "majority_class", "uniform_random"],
        required=True,
    )
    p.add_argument("--seed", type=int, help="seed for uniform_random")
    p.add_argument("--out", help="output file or directory")
    p.set_defaults(func=cmd_mock_predict)

    p = sub.add_parser("score", help="score prediction files against eval sets")
    p.add_argument("--eval-dir", required=True)
    p.add_argument("--predictions-dir", required=True)
    p.add_argument("--out", help="score report JSON path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run-experiment", help="replay an experiment config end-to-end")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--permissive", action="store_true", help="allow unknown config fields")
    p.set_defaults(func=cmd_run_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        DatagenError,
        IngestError,
        ScoreError,
        SplitError,
        TaxonomyError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
