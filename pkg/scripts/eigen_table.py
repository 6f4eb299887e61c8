#!/usr/bin/env python3
"""Eigenvalues and fixed-point types of the low-fidelity models, plus phase fields."""
import argparse
from pathlib import Path

from hybridsea.duffing import DuffingParams, ForcingModel
from hybridsea.eigen import all_reports, phase_field, write_phase_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a1", type=float, default=0.0)
    ap.add_argument("--out-dir", default="results/eigen")
    args = ap.parse_args()
    params = DuffingParams()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in all_reports(params, args.a1):
        print(f"{r.model.value}: {r.lambda1:.5f}, {r.lambda2:.5f}  {r.classification.value}")
    for m in ForcingModel:
        write_phase_csv(out / f"phase_{m.value}.csv", phase_field(m, params, args.a1))
    print("phase fields in", out)


if __name__ == "__main__":
    main()
