"""Two-layer ReLU MLPs for the state (softmax pair) and action (sigmoid) heads.

Gradients are hand-derived; :func:`gradient_check` compares them to central
finite differences and is meant to run on float64 parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import PARAM_NAMES, ModelParams, ParameterError, ShapeError, ValidationError

PROB_CLAMP = 1e-7

STATE1, STATE2, ACTION_POS, ACTION_NEG = "state1", "state2", "action_pos", "action_neg"
ROLES = (STATE1, STATE2, ACTION_POS, ACTION_NEG)


def init_params(d: int, hidden: int, seed, dtype=np.float32) -> ModelParams:
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    if d < 1 or hidden < 1:
        raise ParameterError("d and hidden must be >= 1")
    rng = np.random.default_rng(seed)

    def he(shape):
        return (rng.standard_normal(shape) * np.sqrt(2.0 / shape[1])).astype(dtype)

    return ModelParams(
        state_w1=he((hidden, d)),
        state_b1=np.zeros(hidden, dtype),
        state_w2=he((2, hidden)),
        state_b2=np.zeros(2, dtype),
        action_w1=he((hidden, d)),
        action_b1=np.zeros(hidden, dtype),
        action_w2=he((1, hidden)),
        action_b2=np.zeros(1, dtype),
    )


@dataclass(frozen=True)
class ForwardOutputs:
    h1: np.ndarray
    h2: np.ndarray
    g: np.ndarray
    # cached activations: inputs, hidden pre-activations and logits
    cache: Optional[tuple] = None


def _sigmoid(u):
    z = np.exp(-np.abs(u))
    return np.where(u >= 0, 1 / (1 + z), z / (1 + z))


def forward(m: ModelParams, x) -> ForwardOutputs:
    """Evaluate both heads on one vector (d,) or a batch (n, d)."""
    x = np.asarray(x)
    single = x.ndim == 1
    X = np.atleast_2d(x).astype(m.dtype, copy=False)
    if X.ndim != 2 or X.shape[1] != m.d:
        raise ShapeError(f"input has shape {x.shape}, expected (..., {m.d})")
    zs = X @ m.state_w1.T + m.state_b1
    hs = np.maximum(zs, 0)
    ls = hs @ m.state_w2.T + m.state_b2
    ls_shift = ls - ls.max(axis=1, keepdims=True)
    es = np.exp(ls_shift)
    ps = es / es.sum(axis=1, keepdims=True)
    za = X @ m.action_w1.T + m.action_b1
    ha = np.maximum(za, 0)
    la = (ha @ m.action_w2.T + m.action_b2)[:, 0]
    g = _sigmoid(la)
    h1, h2 = ps[:, 0], ps[:, 1]
    if single:
        h1, h2, g = h1[0], h2[0], g[0]
    return ForwardOutputs(h1, h2, g, (X, zs, hs, ps, za, ha, g))


_ROLE_CODE = {r: i for i, r in enumerate(ROLES)}


def _role_codes(roles: Sequence[str]) -> np.ndarray:
    try:
        return np.array([_ROLE_CODE[r] for r in roles], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"unknown target role {exc.args[0]!r}") from None


def zeros_like_params(m: ModelParams) -> dict[str, np.ndarray]:
    return {n: np.zeros_like(a) for n, a in m.tensors()}


def backward(m: ModelParams, x, roles: Sequence[str], weights) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted cross-entropy over a batch of (x, role, weight) and its gradient.

    Roles: ``state1`` -> -w log h1, ``state2`` -> -w log h2,
    ``action_pos`` -> -w log g, ``action_neg`` -> -w log(1 - g).
    Probabilities are clamped to [1e-7, 1 - 1e-7] for the loss value only;
    the gradient is the logit-space one, so saturated outputs still learn.
    """
    codes = _role_codes(roles)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(codes) != len(w):
        raise ShapeError("roles and weights differ in length")
    grads = zeros_like_params(m)
    if len(codes) == 0:
        return 0.0, grads
    if np.any(w < 0):
        raise ValidationError("weights must be nonnegative")
    X = np.atleast_2d(np.asarray(x))
    if X.shape[0] != len(codes):
        raise ShapeError("inputs and roles differ in length")
    out = forward(m, X)
    X, zs, hs, ps, za, ha, g = out.cache
    dt = m.dtype
    wd = w.astype(dt)

    is_s = codes <= 1
    is_a = ~is_s
    # selected probability for each row
    p = np.where(codes == 0, ps[:, 0], np.where(codes == 1, ps[:, 1], np.where(codes == 2, g, 1 - g)))
    pc = np.clip(p.astype(np.float64), PROB_CLAMP, 1 - PROB_CLAMP)
    loss = float(-(w * np.log(pc)).sum())

    # d(-log softmax_k)/dlogits = p - onehot(k); d(-log g)/du = g - 1; d(-log(1-g))/du = g
    coef = wd
    dls = np.zeros_like(ps)
    if is_s.any():
        onehot = np.zeros_like(ps)
        onehot[np.arange(len(codes)), np.minimum(codes, 1)] = 1
        dls = (ps - onehot) * (coef * is_s)[:, None]
    dla = np.where(codes == 2, g - 1, g) * coef * is_a

    grads["state_w2"] = dls.T @ hs
    grads["state_b2"] = dls.sum(axis=0)
    dzs = (dls @ m.state_w2) * (zs > 0)
    grads["state_w1"] = dzs.T @ X
    grads["state_b1"] = dzs.sum(axis=0)

    grads["action_w2"] = (dla[None, :] @ ha).astype(dt)
    grads["action_b2"] = np.array([dla.sum()], dtype=dt)
    dza = np.outer(dla, m.action_w2[0]) * (za > 0)
    grads["action_w1"] = dza.T @ X
    grads["action_b1"] = dza.sum(axis=0)
    grads = {n: np.asarray(grads[n], dtype=dt) for n in PARAM_NAMES}
    return loss, grads


def loss_value(m: ModelParams, x, roles, weights) -> float:
    """Loss only, used by the finite-difference checker."""
    codes = _role_codes(roles)
    w = np.asarray(weights, dtype=np.float64)
    if len(codes) == 0:
        return 0.0
    out = forward(m, np.atleast_2d(np.asarray(x)))
    p = np.select(
        [codes == 0, codes == 1, codes == 2],
        [out.h1, out.h2, out.g],
        1 - out.g,
    ).astype(np.float64)
    return float(-(w * np.log(np.clip(p, PROB_CLAMP, 1 - PROB_CLAMP))).sum())


@dataclass(frozen=True)
class OptimizerState:
    velocity: dict
    lr: float
    momentum: float
    l2: float

    @classmethod
    def create(cls, m: ModelParams, lr: float, momentum: float, l2: float) -> "OptimizerState":
        return cls(zeros_like_params(m), float(lr), float(momentum), float(l2))


_DECAYED = frozenset(n for n in PARAM_NAMES if "_w" in n)


def sgd_step(m: ModelParams, grad: dict, opt: OptimizerState) -> tuple[ModelParams, OptimizerState]:
    """Heavy-ball step: v <- momentum*v + (grad + l2*w); w <- w - lr*v.

    The L2 term applies to weight matrices only, not biases.
    """
    dt = m.dtype
    lr, mom, l2 = dt.type(opt.lr), dt.type(opt.momentum), dt.type(opt.l2)
    new_w, new_v = {}, {}
    for name, w in m.tensors():
        gr = np.asarray(grad[name])
        v = opt.velocity[name]
        if gr.shape != w.shape or v.shape != w.shape:
            raise ShapeError(f"{name}: gradient/velocity shape does not match {w.shape}")
        step = gr.astype(dt) + l2 * w if name in _DECAYED else gr.astype(dt)
        v = mom * v + step
        new_v[name] = v
        new_w[name] = w - lr * v
    return ModelParams(**new_w), OptimizerState(new_v, opt.lr, opt.momentum, opt.l2)


def gradient_check(
    m: ModelParams, x, roles, weights, step: float = 1e-5, rtol: float = 1e-4, atol: float = 1e-7
) -> dict:
    """Compare analytic gradients with central differences on every entry.

    An entry passes when |analytic - numeric| <= max(atol, rtol * max(|analytic|, |numeric|)).
    """
    m = m.astype(np.float64)
    _, grads = backward(m, x, roles, weights)
    worst_rel, worst_abs, n_bad, n = 0.0, 0.0, 0, 0
    for name, _ in m.tensors():
        base = {k: np.array(v) for k, v in m.tensors()}
        flat = base[name].reshape(-1)
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_value(ModelParams(**base), x, roles, weights)
            flat[i] = orig - step
            down = loss_value(ModelParams(**base), x, roles, weights)
            flat[i] = orig
            numeric[i] = (up - down) / (2 * step)
        analytic = grads[name].reshape(-1)
        diff = np.abs(analytic - numeric)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        bad = diff > np.maximum(atol, rtol * scale)
        n_bad += int(bad.sum())
        n += flat.size
        rel = np.where(scale > atol, diff / np.maximum(scale, 1e-300), 0.0)
        worst_rel = max(worst_rel, float(rel.max(initial=0.0)))
        worst_abs = max(worst_abs, float(diff.max(initial=0.0)))
    return {"entries": n, "failures": n_bad, "max_rel_error": worst_rel, "max_abs_error": worst_abs, "ok": n_bad == 0}
