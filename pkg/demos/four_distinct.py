"""Do frame components with four distinct indices ever survive for a diagonal metric?

Samples the oracle on random metrics and reports the largest magnitude.
"""
import sys

from orthocurv.curvature import four_distinct_experiment
from orthocurv.randmetric import random_metric


def main(count=40):
    worst = 0.0
    for n in (4, 5):
        for seed in range(count):
            worst = max(worst, four_distinct_experiment(random_metric(n, seed)))
    print(f"{2 * count} random metrics, largest |R^AB_CD| with A,B,C,D distinct: {worst:.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 40)
