"""Shared helpers for the experiment scripts."""

import json
import time

from statechange.core import HyperParams
from statechange.synthgen import GenConfig, generate_corpus
from statechange.temporal import relevance_score
from statechange.training import evaluate_model, train_category
from statechange.weighting import compute_weights, select_theta


def relevance_report(corpus, tau):
    scores = [(v.id, relevance_score(v, corpus.exemplars)) for v in corpus.videos]
    return compute_weights(scores, select_theta([s for _, s in scores]), tau)


def train_and_score(corpus, hp: HyperParams, weighted: bool, threads: int = 1) -> dict:
    weights = relevance_report(corpus, hp.tau).weights() if weighted else None
    t0 = time.perf_counter()
    res = train_category(corpus.videos, hp, weights=weights, threads=threads)
    pr = evaluate_model(res.params, corpus.videos, corpus.gt)
    return {
        "state_prec": pr.macro_state,
        "action_prec": pr.macro_action,
        "first_loss": res.log[0].mean_loss,
        "final_loss": res.log[-1].mean_loss,
        "seconds": round(time.perf_counter() - t0, 1),
    }


def corpus_for(seed: int, **overrides):
    return generate_corpus(GenConfig(seed=seed, **overrides))


def emit(rows):
    for r in rows:
        print(json.dumps(r, sort_keys=True), flush=True)
