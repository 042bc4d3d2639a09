"""From-scratch recurrent encoder-decoder with additive attention.

Everything is plain numpy float64. The encoder is a bidirectional GRU; for
each output step an additive (tanh-energy) attention over all encoder states
produces a context vector that drives a GRU decoder, whose state projects
affinely onto the five gesture classes. Gradients are hand-written
reverse-mode and validated against finite differences (see grad_check).

Parameters live in a flat dict of named arrays:
  enc_f_W (d,3h)  enc_f_U (h,3h)  enc_f_b (3h)     forward encoder GRU
  enc_b_W enc_b_U enc_b_b                           backward encoder GRU
  att_Wq (g,a)  att_Us (2h,a)  att_b (a)  att_v (a) additive attention (a=g)
  dec_W (2h,3g) dec_U (g,3g)  dec_b (3g)            decoder GRU
  out_W (g,5)   out_b (5)                           class projection
Gate packing order inside the 3h/3g axes is [update | reset | candidate].
"""

from __future__ import annotations

import numpy as np

from ..corpus import N_CLASSES, DistributionStats
from ..errors import ConfigError

PROB_CLAMP = 1e-12


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def gru_step_forward(xw, hp, U, b):
    """One GRU step. xw = x @ W precomputed, hp = previous state (B,h)."""
    h = hp.shape[1]
    u = hp @ U
    z = _sigmoid(xw[:, :h] + u[:, :h] + b[:h])
    r = _sigmoid(xw[:, h:2 * h] + u[:, h:2 * h] + b[h:2 * h])
    n = np.tanh(xw[:, 2 * h:] + b[2 * h:] + r * u[:, 2 * h:])
    hn = (1.0 - z) * n + z * hp
    return hn, (hp, u, z, r, n)


def gru_step_backward(dh, cache, U, dU, db):
    """Backward of one GRU step; accumulates dU/db, returns (dxw, dhp)."""
    hp, u, z, r, n = cache
    h = hp.shape[1]
    dz = dh * (hp - n)
    dn = dh * (1.0 - z)
    dhp = dh * z
    dan = dn * (1.0 - n * n)
    dr = dan * u[:, 2 * h:]
    dun = dan * r
    daz = dz * z * (1.0 - z)
    dar = dr * r * (1.0 - r)
    du = np.concatenate([daz, dar, dun], axis=1)
    dxw = np.concatenate([daz, dar, dan], axis=1)
    dU += hp.T @ du
    db += dxw.sum(axis=0)
    dhp += du @ U.T
    return dxw, dhp


def gru_run(X, W, U, b, reverse=False):
    """Run a GRU over (B,l,d) inputs; returns states (B,l,h) and caches."""
    B, l, _ = X.shape
    h = U.shape[0]
    xw = X @ W
    H = np.empty((B, l, h))
    caches = [None] * l
    hp = np.zeros((B, h))
    steps = range(l - 1, -1, -1) if reverse else range(l)
    for t in steps:
        hp, caches[t] = gru_step_forward(xw[:, t], hp, U, b)
        H[:, t] = hp
    return H, caches


def gru_run_backward(dH, caches, X, W, U, reverse=False):
    """BPTT through gru_run; returns (dW, dU, db)."""
    B, l, _ = X.shape
    dU = np.zeros_like(U)
    db = np.zeros(3 * U.shape[0])
    dXW = np.empty((B, l, 3 * U.shape[0]))
    carry = np.zeros((B, U.shape[0]))
    steps = range(l) if reverse else range(l - 1, -1, -1)
    for t in steps:
        dh = dH[:, t] + carry
        dxw, carry = gru_step_backward(dh, caches[t], U, dU, db)
        dXW[:, t] = dxw
    dW = X.reshape(B * l, -1).T @ dXW.reshape(B * l, -1)
    return dW, dU, db


def forward(params, X):
    """Full forward pass.

    X: (B, l, d) padded inputs. Returns (probs (B,l,5), attention (B,l,l),
    cache). Attention row j holds the weights of every input step on output
    step j.
    """
    if X.ndim != 3:
        raise ConfigError(f"X must be (batch, l, d), got shape {X.shape}")
    B, l, d = X.shape
    if params["enc_f_W"].shape[0] != d:
        raise ConfigError(f"input dim {d} does not match encoder weights "
                          f"{params['enc_f_W'].shape}")
    Hf, cf = gru_run(X, params["enc_f_W"], params["enc_f_U"], params["enc_f_b"])
    Hb, cb = gru_run(X, params["enc_b_W"], params["enc_b_U"], params["enc_b_b"],
                     reverse=True)
    S = np.concatenate([Hf, Hb], axis=2)               # (B,l,2h)
    Us = S @ params["att_Us"]                          # (B,l,a)
    g = params["dec_U"].shape[0]
    Wq, v, att_b = params["att_Wq"], params["att_v"], params["att_b"]
    dec_W, dec_U, dec_b = params["dec_W"], params["dec_U"], params["dec_b"]

    D = np.empty((B, l, g))
    attn = np.empty((B, l, l))
    contexts = np.empty((B, l, S.shape[2]))
    tanh_cache = np.empty((B, l, l, v.shape[0]))
    dec_caches = [None] * l
    dstate = np.zeros((B, g))
    for j in range(l):
        pre = dstate @ Wq
        tj = np.tanh(pre[:, None, :] + Us + att_b)     # (B,l,a)
        ej = tj @ v                                    # (B,l)
        aj = _softmax(ej, axis=1)
        cj = np.einsum("bi,bio->bo", aj, S)
        attn[:, j] = aj
        tanh_cache[:, j] = tj
        contexts[:, j] = cj
        dstate, dec_caches[j] = gru_step_forward(cj @ dec_W, dstate, dec_U, dec_b)
        D[:, j] = dstate
    logits = D @ params["out_W"] + params["out_b"]
    probs = _softmax(logits, axis=2)
    cache = {"X": X, "Hf": Hf, "Hb": Hb, "cf": cf, "cb": cb, "S": S,
             "attn": attn, "tanh": tanh_cache, "contexts": contexts,
             "dec_caches": dec_caches, "D": D, "probs": probs}
    return probs, attn, cache


def loss(probs, Y, class_weights):
    """Class-weighted categorical cross-entropy, mean over steps and batch."""
    B, l, _ = probs.shape
    w = class_weights[Y]
    p = np.clip(np.take_along_axis(probs, Y[..., None], axis=2)[..., 0],
                PROB_CLAMP, None)
    return float(np.mean(w * -np.log(p)))


def backward(params, cache, Y, class_weights):
    """Analytic gradients of loss(forward(params, X), Y) w.r.t. params."""
    X, S = cache["X"], cache["S"]
    probs, D = cache["probs"], cache["D"]
    attn, tanh_cache, contexts = cache["attn"], cache["tanh"], cache["contexts"]
    B, l, d = X.shape
    h = params["enc_f_U"].shape[0]
    Wq, Us_w, v = params["att_Wq"], params["att_Us"], params["att_v"]
    dec_W, dec_U = params["dec_W"], params["dec_U"]

    grads = {k: np.zeros_like(p) for k, p in params.items()}

    # output projection
    dlogits = probs.copy()
    np.put_along_axis(
        dlogits, Y[..., None],
        np.take_along_axis(dlogits, Y[..., None], axis=2) - 1.0, axis=2)
    dlogits *= class_weights[Y][..., None] / (B * l)
    grads["out_W"] = D.reshape(B * l, -1).T @ dlogits.reshape(B * l, -1)
    grads["out_b"] = dlogits.sum(axis=(0, 1))
    dD = dlogits @ params["out_W"].T

    # decoder + attention BPTT
    dS = np.zeros_like(S)
    carry = np.zeros((B, dec_U.shape[0]))
    for j in range(l - 1, -1, -1):
        dh = dD[:, j] + carry
        dcw, dprev = gru_step_backward(dh, cache["dec_caches"][j], dec_U,
                                       grads["dec_U"], grads["dec_b"])
        grads["dec_W"] += contexts[:, j].reshape(B, -1).T @ dcw
        dc = dcw @ dec_W.T                              # (B,2h)

        aj = attn[:, j]
        tj = tanh_cache[:, j]
        dalpha = np.einsum("bo,bio->bi", dc, S)
        dS += aj[:, :, None] * dc[:, None, :]
        de = aj * (dalpha - (aj * dalpha).sum(axis=1, keepdims=True))
        grads["att_v"] += np.einsum("bia,bi->a", tj, de)
        dpre = de[:, :, None] * v * (1.0 - tj * tj)
        grads["att_b"] += dpre.sum(axis=(0, 1))
        grads["att_Us"] += np.einsum("bio,bia->oa", S, dpre)
        dS += np.einsum("bia,oa->bio", dpre, Us_w)
        dqw = dpre.sum(axis=1)
        if j > 0:
            grads["att_Wq"] += D[:, j - 1].T @ dqw
        # decoder state j-1 receives both the cell and the query gradients
        carry = dprev + dqw @ Wq.T

    # encoder BPTT (dS split into the two directions)
    dW, dU, db = gru_run_backward(dS[:, :, :h], cache["cf"], X,
                                  params["enc_f_W"], params["enc_f_U"])
    grads["enc_f_W"], grads["enc_f_U"], grads["enc_f_b"] = dW, dU, db
    dW, dU, db = gru_run_backward(dS[:, :, h:], cache["cb"], X,
                                  params["enc_b_W"], params["enc_b_U"],
                                  reverse=True)
    grads["enc_b_W"], grads["enc_b_U"], grads["enc_b_b"] = dW, dU, db
    return grads


def class_weights(stats: DistributionStats) -> np.ndarray:
    """Weights inversely proportional to class frequency, sum(w*p) = 1.

    Classes absent from the training set get weight 0.
    """
    p = stats.proportions
    present = p > 0
    w = np.zeros(N_CLASSES)
    w[present] = 1.0 / p[present] / present.sum()
    return w


def init_params(rng, d: int, enc_dim: int, dec_dim: int) -> dict:
    """Symmetric-uniform init with fan-in scaling; biases start at zero."""
    h, g = enc_dim, dec_dim
    a = dec_dim

    def mat(fan_in, *shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return {
        "enc_f_W": mat(d, d, 3 * h), "enc_f_U": mat(h, h, 3 * h),
        "enc_f_b": np.zeros(3 * h),
        "enc_b_W": mat(d, d, 3 * h), "enc_b_U": mat(h, h, 3 * h),
        "enc_b_b": np.zeros(3 * h),
        "att_Wq": mat(g, g, a), "att_Us": mat(2 * h, 2 * h, a),
        "att_b": np.zeros(a), "att_v": mat(a, a),
        "dec_W": mat(2 * h, 2 * h, 3 * g), "dec_U": mat(g, g, 3 * g),
        "dec_b": np.zeros(3 * g),
        "out_W": mat(g, g, N_CLASSES), "out_b": np.zeros(N_CLASSES),
    }
