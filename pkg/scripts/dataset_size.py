"""Precision as a function of the number of training videos.

    python3 scripts/dataset_size.py --sizes 25 50 100 200 --seeds 0
"""

import argparse

from _common import corpus_for, emit, train_and_score
from statechange.core import HyperParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--no-weighting", action="store_true")
    args = ap.parse_args()

    for n in args.sizes:
        for s in args.seeds:
            row = train_and_score(corpus_for(s, n_videos=n), HyperParams(seed=s, epochs=args.epochs), not args.no_weighting)
            row.update(n_videos=n, seed=s)
            emit([row])


if __name__ == "__main__":
    main()
