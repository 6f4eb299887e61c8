#!/usr/bin/env python3
"""Run one study from a plan file and print its summary.

    python scripts/run_study.py configs/duffing_trainsize.json --threads 4
"""
import argparse
import json
import logging

from hybridsea.experiments import ExperimentPlan, output_root, run_study, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("plan")
    ap.add_argument("--out-dir")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--export-trajectories", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)
    plan = ExperimentPlan.load(args.plan)
    rows = run_study(plan, args.out_dir, args.threads, args.export_trajectories)
    print(json.dumps(summarize(plan, rows), indent=2))
    print("results in", output_root(args.out_dir or plan.out_dir) / plan.study.value)


if __name__ == "__main__":
    main()
