"""Relevance weighting on/off over corpora with a given share of noise videos.

Also prints the retrieval diagnostic (clean videos vs all videos above theta).

    python3 scripts/noise_ablation.py --noise 0.5 --seeds 0 1 2
"""

import argparse

import numpy as np

from _common import corpus_for, emit, relevance_report, train_and_score
from statechange.core import HyperParams
from statechange.weighting import retrieval_diagnostic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, nargs="+", default=[0.5])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=100)
    args = ap.parse_args()

    for noise in args.noise:
        rows = []
        for s in args.seeds:
            c = corpus_for(s, noise_fraction=noise)
            hp = HyperParams(seed=s, epochs=args.epochs)
            rel, all_ = retrieval_diagnostic(relevance_report(c, hp.tau), set(c.clean_ids))
            for weighted in (True, False):
                row = train_and_score(c, hp, weighted)
                row.update(noise=noise, seed=s, weighted=weighted, clean_above=rel, all_above=all_)
                rows.append(row)
                emit([row])
        for weighted in (True, False):
            sel = [r for r in rows if r["weighted"] is weighted]
            emit([{"noise": noise, "weighted": weighted, "seed": "mean", "action_prec": float(np.mean([r["action_prec"] for r in sel])), "state_prec": float(np.mean([r["state_prec"] for r in sel]))}])


if __name__ == "__main__":
    main()
