"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data/format/I-O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .core import GroundTruth, HyperParams, StateChangeError, TemporalLabel
from .evaluation import (
    VideoPrecision,
    aggregate,
    baseline_rng,
    random_constrained_baseline,
    sample_constrained_triples,
    video_precision,
)
from .io import load_checkpoint, load_manifest, save_checkpoint
from .neural import ROLES, gradient_check, init_params
from .synthgen import GenConfig, generate
from .temporal import attention_weights, relevance_score
from .training import predict_label, train_category
from .weighting import RelevanceReport, compute_weights, select_theta

log = logging.getLogger("statechange")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _hp_flags(p):
    d = HyperParams()
    p.add_argument("--delta", type=int, default=d.delta)
    p.add_argument("--kappa", type=int, default=d.kappa)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--mu", type=float, default=d.mu)
    p.add_argument("--tau", type=float, default=d.tau)
    p.add_argument("--lr", type=float, default=d.lr)
    p.add_argument("--momentum", type=float, default=d.momentum)
    p.add_argument("--l2", type=float, default=d.l2)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--hidden-dim", type=int, default=d.hidden_dim)
    p.add_argument("--aug-sigma", type=float, default=d.aug_sigma)


def _hp_from(args) -> HyperParams:
    names = {f.name for f in fields(HyperParams)}
    return HyperParams(**{k: v for k, v in vars(args).items() if k in names})


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="statechange", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic corpus")
    c = GenConfig()
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=c.seed)
    g.add_argument("--n-videos", type=int, default=c.n_videos)
    g.add_argument("--noise-fraction", type=float, default=c.noise_fraction)
    g.add_argument("--t-min", type=int, default=c.t_min)
    g.add_argument("--t-max", type=int, default=c.t_max)
    g.add_argument("--d", type=int, default=c.d)
    g.add_argument("--separation", type=float, default=c.cluster_separation)
    g.add_argument("--frame-noise", type=float, default=c.frame_noise_std)
    g.add_argument("--n-exemplars", type=int, default=c.n_exemplars)
    g.add_argument("--geometry", choices=("gaussian", "simplex"), default=c.geometry)
    g.add_argument("--category", default=c.category)

    r = sub.add_parser("relevance", help="relevance scores, threshold and video weights")
    r.add_argument("--manifest", required=True)
    r.add_argument("--category")
    r.add_argument("--tau", type=float, default=HyperParams().tau)
    r.add_argument("--out")
    r.add_argument("--pretty", action="store_true")

    t = sub.add_parser("train", help="train one category")
    t.add_argument("--manifest", required=True)
    t.add_argument("--category")
    t.add_argument("--out", required=True, help="final checkpoint path")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=1)
    _hp_flags(t)
    t.add_argument("--relevance", help="relevance report JSON; computed from exemplars if absent")
    t.add_argument("--no-weighting", action="store_true", help="force omega = 1 for every video")
    t.add_argument("--attend", action="store_true", help="exemplar-attended labeling")
    t.add_argument("--select-best", action="store_true", help="also keep the best epoch against annotations")
    t.add_argument("--best-out", help="with --select-best, also write the best-epoch checkpoint here")
    t.add_argument("--log", help="JSON-lines epoch log path (default: stdout)")

    lb = sub.add_parser("label", help="predict temporal labels")
    lb.add_argument("--manifest", required=True)
    lb.add_argument("--category")
    lb.add_argument("--checkpoint", required=True)
    lb.add_argument("--out")
    lb.add_argument("--attend", action="store_true")
    lb.add_argument("--tracklets", action="store_true", help="average scores over manifest segments")
    lb.add_argument("--rank", action="store_true", help="order by prediction score, best first")
    lb.add_argument("--threads", type=int, default=1)

    e = sub.add_parser("eval", help="precision of labels against ground truth")
    e.add_argument("--manifest", required=True, action="append")
    e.add_argument("--labels", required=True)
    e.add_argument("--out")
    e.add_argument("--csv")
    e.add_argument("--pretty", action="store_true")

    b = sub.add_parser("baseline", help="random triples under the ordering constraint")
    b.add_argument("--manifest", required=True, action="append")
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--labels-out", help="also write every sampled triple as label records")
    b.add_argument("--pretty", action="store_true")

    gc = sub.add_parser("gradcheck", help="finite-difference check of the MLP gradients")
    gc.add_argument("--instances", type=int, default=20)
    gc.add_argument("--d", type=int, default=6)
    gc.add_argument("--hidden-dim", type=int, default=8)
    gc.add_argument("--batch", type=int, default=12)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--step", type=float, default=1e-5)
    return p


def _emit(doc, out, pretty=False):
    text = json.dumps(doc, indent=1 if pretty else None, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _manifest(args):
    m = load_manifest(args.manifest)
    if getattr(args, "category", None) and args.category != m.category:
        raise StateChangeError(f"manifest holds category {m.category!r}, not {args.category!r}")
    return m


def _relevance(videos, exemplars, tau) -> RelevanceReport:
    scores = [(v.id, relevance_score(v, exemplars)) for v in videos]
    theta = select_theta([s for _, s in scores])
    return compute_weights(scores, theta, tau)


def cmd_generate(args):
    cfg = GenConfig(
        n_videos=args.n_videos,
        noise_fraction=args.noise_fraction,
        t_min=args.t_min,
        t_max=args.t_max,
        d=args.d,
        cluster_separation=args.separation,
        frame_noise_std=args.frame_noise,
        n_exemplars=args.n_exemplars,
        geometry=args.geometry,
        category=args.category,
        seed=args.seed,
    )
    generate(cfg, args.out)


def cmd_relevance(args):
    m = _manifest(args)
    report = _relevance(m.load_videos(), m.load_exemplars(), args.tau)
    _emit(report.to_dict(), args.out, args.pretty)


def cmd_train(args):
    m = _manifest(args)
    hp = _hp_from(args)
    videos = m.load_videos()
    exemplars = m.load_exemplars() if (args.attend or not (args.no_weighting or args.relevance)) else None
    if args.no_weighting:
        weights = {v.id: 1.0 for v in videos}
    elif args.relevance:
        weights = RelevanceReport.from_dict(json.loads(Path(args.relevance).read_text())).weights()
        missing = {v.id for v in videos} - weights.keys()
        if missing:
            raise StateChangeError(f"relevance report lacks {len(missing)} manifest videos")
    else:
        weights = _relevance(videos, exemplars, hp.tau).weights()

    log_fh = open(args.log, "w") if args.log else sys.stdout
    try:
        res = train_category(
            videos,
            hp,
            weights=weights,
            gt=m.ground_truth(),
            exemplars=exemplars,
            attend=args.attend,
            select_best=args.select_best,
            threads=args.threads,
            on_epoch=lambda e: print(json.dumps(e.to_dict(), sort_keys=True), file=log_fh, flush=True),
        )
        save_checkpoint(res.params, args.out)
        if args.select_best and res.best_params is not None:
            if args.best_out:
                save_checkpoint(res.best_params, args.best_out)
            best = res.log[res.best_epoch - 1]
            print(
                json.dumps({"best_epoch": res.best_epoch, "state_prec": best.state_prec, "action_prec": best.action_prec}),
                file=log_fh,
            )
    finally:
        if args.log:
            log_fh.close()


def cmd_label(args):
    m = _manifest(args)
    videos = m.load_videos()
    if not videos:
        raise StateChangeError("manifest has no videos")
    params = load_checkpoint(args.checkpoint, d=videos[0].d).astype(np.float64)
    exemplars = m.load_exemplars() if args.attend else None
    segments = m.segments() if args.tracklets else {}

    def one(v):
        att = attention_weights(v, exemplars) if exemplars is not None else None
        res = predict_label(params, v, att, segments.get(v.id))
        lab = res.label
        return {"video_id": v.id, "s1": int(lab.s1), "a": int(lab.a), "s2": int(lab.s2), "score": float(res.score)}

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            records = list(pool.map(one, videos))
    else:
        records = [one(v) for v in videos]
    if args.rank:
        records.sort(key=lambda r: (-r["score"], r["video_id"]))
        for i, rec in enumerate(records, start=1):
            rec["rank"] = i
    lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)


def _read_labels(path) -> dict[str, list[TemporalLabel]]:
    out = defaultdict(list)
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[str(rec["video_id"])].append(TemporalLabel(int(rec["s1"]), int(rec["a"]), int(rec["s2"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise StateChangeError(f"{path}:{n}: bad label record ({exc})") from None
    return out


def _gt_corpus(manifest_paths) -> dict[str, dict[str, GroundTruth]]:
    corpus = {}
    for path in manifest_paths:
        m = load_manifest(path)
        corpus.setdefault(m.category, {}).update(m.ground_truth())
    return corpus


def _mean_precision(labels, gt) -> VideoPrecision:
    ps = [video_precision(lab, gt) for lab in labels]
    s = [p.state_prec for p in ps if p.state_prec is not None]
    a = [p.action_prec for p in ps if p.action_prec is not None]
    return VideoPrecision(float(np.mean(s)) if s else None, float(np.mean(a)) if a else None)


def _print_table(result, file=sys.stderr):
    print(f"{'category':<24}{'state':>8}{'action':>8}", file=file)
    fmt = lambda x: f"{x:8.3f}" if x is not None else f"{'-':>8}"
    for cat, row in result.per_category.items():
        print(f"{cat:<24}{fmt(row['state_prec'])}{fmt(row['action_prec'])}", file=file)
    print(f"{'macro':<24}{fmt(result.macro_state)}{fmt(result.macro_action)}", file=file)


def cmd_eval(args):
    corpus = _gt_corpus(args.manifest)
    labels = _read_labels(args.labels)
    known = {vid for cat in corpus.values() for vid in cat}
    unknown = set(labels) - known
    if unknown:
        raise StateChangeError(f"labels reference {len(unknown)} videos without ground truth, e.g. {sorted(unknown)[0]!r}")
    results = {
        cat: [(vid, _mean_precision(labels[vid], gt)) for vid, gt in sorted(vids.items()) if vid in labels]
        for cat, vids in corpus.items()
    }
    result = aggregate(results)
    _emit(result.to_dict(), args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["category", "state_prec", "action_prec"])
            for cat, row in result.per_category.items():
                w.writerow([cat, row["state_prec"], row["action_prec"]])
            w.writerow(["macro", result.macro_state, result.macro_action])
    if args.pretty:
        _print_table(result)


def cmd_baseline(args):
    corpus = _gt_corpus(args.manifest)
    result = random_constrained_baseline(corpus, args.trials, args.seed)
    if args.labels_out:
        with open(args.labels_out, "w") as fh:
            for cat in sorted(corpus):
                for vid in sorted(corpus[cat]):
                    T = len(corpus[cat][vid])
                    if T < 3:
                        continue
                    triples = sample_constrained_triples(T, args.trials, baseline_rng(args.seed, cat, vid))
                    for s1, a, s2 in triples.tolist():
                        fh.write(json.dumps({"video_id": vid, "s1": s1, "a": a, "s2": s2, "score": None}) + "\n")
    _emit(result.to_dict(), args.out)
    if args.pretty:
        _print_table(result)


def cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    reports = []
    for i in range(args.instances):
        m = init_params(args.d, args.hidden_dim, [args.seed, i], dtype=np.float64)
        m = m.__class__(**{k: a + rng.normal(0, 0.1, a.shape) for k, a in m.tensors()})
        x = rng.normal(size=(args.batch, args.d))
        roles = list(rng.choice(ROLES, size=args.batch))
        w = rng.uniform(0, 5, size=args.batch)
        reports.append(gradient_check(m, x, roles, w, step=args.step))
    summary = {
        "instances": len(reports),
        "entries": sum(r["entries"] for r in reports),
        "failures": sum(r["failures"] for r in reports),
        "max_rel_error": max(r["max_rel_error"] for r in reports),
        "ok": all(r["ok"] for r in reports),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0 if summary["ok"] else 2


COMMANDS = {
    "generate": cmd_generate,
    "relevance": cmd_relevance,
    "train": cmd_train,
    "label": cmd_label,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "gradcheck": cmd_gradcheck,
}


def run(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return COMMANDS[args.command](args) or 0
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (StateChangeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
