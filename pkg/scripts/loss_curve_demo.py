#!/usr/bin/env python3
"""Reproduce the qualitative loss-interval picture on synthetic records:
high-loss samples are few and mostly erroneous. Prints one row per bin.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from weaklabel.dropreg import loss_interval_stats  # noqa: E402


def synth_records(n: int, seed: int) -> tuple[list[float], list[bool]]:
    rng = np.random.default_rng(seed)
    losses = rng.triangular(0.0, 0.0, 1.0, size=n)  # density falls with loss
    p_error = losses**2  # error probability rises with loss
    flags = rng.random(n) < p_error
    return losses.tolist(), flags.tolist()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=20000)
    parser.add_argument("--bins", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    losses, flags = synth_records(args.records, args.seed)
    bins = loss_interval_stats(losses, flags, args.bins)
    print(f"{'interval':>14} {'count':>8} {'error_rate':>11}")
    for b in bins:
        rate = f"{b.error_rate:.3f}" if b.error_rate is not None else "-"
        print(f"[{b.lower:.2f}, {b.upper:.2f}) {b.count:>8} {rate:>11}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
