#!/usr/bin/env python3
"""Run the full pipeline on a toy taxonomy: ingest, generate all three
datasets, split one of them, emit mock predictions, and score them.

    python scripts/demo_pipeline.py --workdir /tmp/escobench_demo --task qa
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(*args) -> None:
    command = [str(a) for a in args]
    print("+", " ".join(command))
    subprocess.run(command, check=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--task", choices=["ecrc", "el", "qa"], default="qa")
    parser.add_argument("--k", type=int, default=8)
    parser.add_argument("--policy", default="gold_oracle",
                        choices=["gold_oracle", "majority_class", "uniform_random"])
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    work = Path(args.workdir)
    scripts = Path(__file__).parent

    run(sys.executable, scripts / "make_toy_taxonomy.py", "--out", work / "toy_tax")
    run("escobench", "ingest", "--taxonomy", work / "toy_tax", "--out", work / "tax")
    run("escobench", "generate", "--taxonomy", work / "tax", "--task", "all",
        "--seed", args.seed, "--out", work / "data")
    run("escobench", "split", "--dataset", work / "data" / f"{args.task}.jsonl",
        "--k", args.k, "--seed", args.seed, "--eval-sets", 9, "--eval-size", 64,
        "--out", work / "splits")
    run("escobench", "mock-predict", "--eval", work / "splits", "--policy", args.policy,
        "--seed", args.seed, "--out", work / "preds")
    run("escobench", "score", "--eval-dir", work / "splits",
        "--predictions-dir", work / "preds", "--out", work / "report.json")
    print(f"\nscore report: {work / 'report.json'}")


if __name__ == "__main__":
    main()
