"""Train on clean synthetic corpora and compare with the random constrained baseline.

    python3 scripts/learnability.py --seeds 0 1 2 [--no-weighting]
"""

import argparse

import numpy as np

from _common import corpus_for, emit, train_and_score
from statechange.core import HyperParams
from statechange.evaluation import random_constrained_baseline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--no-weighting", action="store_true")
    ap.add_argument("--geometry", choices=("gaussian", "simplex"), default="gaussian")
    ap.add_argument("--trials", type=int, default=10000)
    args = ap.parse_args()

    rows = []
    for s in args.seeds:
        c = corpus_for(s, geometry=args.geometry)
        row = train_and_score(c, HyperParams(seed=s, epochs=args.epochs), weighted=not args.no_weighting)
        base = random_constrained_baseline({"c": c.gt}, args.trials, s)
        row.update(seed=s, baseline_state=base.macro_state, baseline_action=base.macro_action)
        rows.append(row)
        emit([row])
    emit([{k: float(np.mean([r[k] for r in rows])) for k in ("state_prec", "action_prec", "baseline_state", "baseline_action")} | {"seed": "mean"}])


if __name__ == "__main__":
    main()
