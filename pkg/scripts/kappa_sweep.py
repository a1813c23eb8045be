"""Effect of the action-negative distance kappa on precision.

Small kappa puts negatives inside the video; kappa >= T clamps them to the
first and last frames.

    python3 scripts/kappa_sweep.py --kappas 5 10 20 60 --seeds 0
"""

import argparse

from _common import corpus_for, emit, train_and_score
from statechange.core import HyperParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappas", type=int, nargs="+", default=[5, 10, 20, 60])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--noise", type=float, default=0.0)
    ap.add_argument("--no-weighting", action="store_true")
    args = ap.parse_args()

    for k in args.kappas:
        for s in args.seeds:
            row = train_and_score(corpus_for(s, noise_fraction=args.noise), HyperParams(seed=s, kappa=k, epochs=args.epochs), not args.no_weighting)
            row.update(kappa=k, seed=s)
            emit([row])


if __name__ == "__main__":
    main()
