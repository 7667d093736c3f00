#!/usr/bin/env python3
"""Tightness sweep on the 1-D lower-bound family: min x s.t. x >= delta.

For this family the planned binomial tail is exact, so the empirical
exceedance frequency should track Phi(0; K, eps) sharply.  Emits CSV
(K, eps, replications, empirical_exceed, planned_tail).

Usage:
    python scripts/tightness_1d.py [--reps 100000] [--seed 0] [--out tightness.csv]
"""

import argparse
import sys

import numpy as np

from scenopt.bounds import SampleSizePlan, StagePlan
from scenopt.probkernel import binomial_cdf
from scenopt.program import LinearRowsGenerator, ScenarioProgram, StageSpec, UniformSampler
from scenopt.validate import violation_survey


def family(eps: float) -> ScenarioProgram:
    stage = StageSpec(
        eps=eps,
        generator=LinearRowsGenerator(a0=[[-1.0]], b0=[0.0], b_delta=[[-1.0]]),
        sampler=UniformSampler(0.0, 1.0),
        zeta_bar=1,
        violation_exact=lambda x: 1.0 - float(x[0]),
    )
    return ScenarioProgram(
        dim=1, cost=np.array([1.0]),
        box_lower=np.array([-100.0]), box_upper=np.array([100.0]),
        stages=[stage],
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    rows = ["K,eps,replications,empirical_exceed,planned_tail"]
    for size, eps in [(10, 0.1), (50, 0.05), (100, 0.02)]:
        program = family(eps)
        tail = binomial_cdf(0, size, eps)
        plan = SampleSizePlan(
            stages=(StagePlan(stage=0, size=size, discard=0, eps=eps,
                              theta=tail, zeta_bar=1, method="implicit"),),
            theta_total=tail,
        )
        survey = violation_survey(program, plan, args.reps, seed=args.seed)
        rows.append(
            f"{size},{eps},{args.reps},{survey.exceed_frequency[0]:.6f},{tail:.6f}"
        )
        print(rows[-1])
    if args.out:
        with open(args.out, "w") as handle:
            handle.write("\n".join(rows) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
