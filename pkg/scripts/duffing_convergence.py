#!/usr/bin/env python3
"""Training-size sweep for one Duffing forcing model.

Prints the median JSD (mean over z, z', z'') per N_ZUC budget and the
smallest budget after which the curve changes by less than 5%.
"""
import argparse
from dataclasses import replace

from hybridsea.experiments import Study, converged_budget, default_plan, median_jsd, run_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="A")
    ap.add_argument("--budgets", default="10,25,50,100,200")
    ap.add_argument("--seeds", default="1,2,3")
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    budgets = tuple(int(b) for b in args.budgets.split(","))
    plan = replace(default_plan(Study.DUFFING_TRAIN_SIZE), models=(args.model,), budgets=budgets,
                   train_seeds=tuple(int(s) for s in args.seeds.split(",")))
    rows = run_study(plan, out_dir=args.out_dir)
    curve = [median_jsd(rows, model_id=args.model, n_zuc=b) for b in budgets]
    for b, v in zip(budgets, curve):
        print(f"N_ZUC={b:5d}  median JSD={v:.3e}")
    print(f"linear benchmark  median JSD={median_jsd(rows, model_id='linear'):.3e}")
    print("converged at N_ZUC =", converged_budget(budgets, curve))


if __name__ == "__main__":
    main()
