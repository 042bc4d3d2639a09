"""Training loop, prediction, checkpointing and gradient verification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..corpus import DistributionStats
from ..errors import ConfigError, NumericError
from ..features import FeatureSet, Normalizer
from . import core
from .optim import AdamState, adam_step

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyper:
    enc_dim: int
    dec_dim: int
    epochs: int
    seed: int
    feature_set: FeatureSet
    learning_rate: float = 1e-3
    batch_size: int = 16

    def __post_init__(self):
        if self.enc_dim < 1 or self.dec_dim < 1:
            raise ConfigError("encoder/decoder dimensions must be >= 1")
        if self.enc_dim > self.feature_set.dim or self.dec_dim > self.feature_set.dim:
            raise ConfigError(
                f"dims must stay within 1..{self.feature_set.dim} "
                f"for {self.feature_set.value}")


@dataclass
class ModelCheckpoint:
    params: dict
    hyper: Hyper
    normalizer: Normalizer | None
    stats: DistributionStats | None
    version: int = CHECKPOINT_VERSION


@dataclass
class TrainResult:
    checkpoint: ModelCheckpoint
    epoch_losses: list[float] = field(default_factory=list)


def train(X: np.ndarray, Y: np.ndarray, hyper: Hyper,
          class_weights: np.ndarray,
          normalizer: Normalizer | None = None,
          stats: DistributionStats | None = None) -> TrainResult:
    """Train one model on padded (n,l,d) inputs and (n,l) label codes.

    Fully deterministic given (X, Y, hyper): initialization and the per-epoch
    shuffles all derive from hyper.seed.
    """
    n = len(X)
    if n == 0:
        raise ConfigError("empty training set")
    rng = np.random.default_rng(hyper.seed)
    params = core.init_params(rng, X.shape[2], hyper.enc_dim, hyper.dec_dim)
    state = AdamState(params)
    Y = Y.astype(np.int64)
    losses = []
    bs = hyper.batch_size
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, bs):
            idx = order[lo:lo + bs]
            probs, _, cache = core.forward(params, X[idx])
            batch_loss = core.loss(probs, Y[idx], class_weights)
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite loss {batch_loss} at epoch {epoch}")
            grads = core.backward(params, cache, Y[idx], class_weights)
            params = adam_step(params, grads, state, hyper.learning_rate)
            total += batch_loss * len(idx)
        losses.append(total / n)
    checkpoint = ModelCheckpoint(params=params, hyper=hyper,
                                 normalizer=normalizer, stats=stats)
    return TrainResult(checkpoint=checkpoint, epoch_losses=losses)


def predict(params: dict, X: np.ndarray) -> np.ndarray:
    """Per-step argmax classes, ties to the lowest class index."""
    probs, _, _ = core.forward(params, X)
    return probs.argmax(axis=2).astype(np.int8)


def predict_checkpoint(ckpt: ModelCheckpoint, X: np.ndarray) -> np.ndarray:
    return predict(ckpt.params, X)


def grad_check(params: dict, X: np.ndarray, Y: np.ndarray,
               class_weights: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error of analytic vs central finite-difference gradients."""
    Y = Y.astype(np.int64)
    probs, _, cache = core.forward(params, X)
    grads = core.backward(params, cache, Y, class_weights)
    worst = 0.0
    for key, p in params.items():
        flat = p.ravel()
        g = grads[key].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = core.loss(core.forward(params, X)[0], Y, class_weights)
            flat[i] = orig - step
            dn = core.loss(core.forward(params, X)[0], Y, class_weights)
            flat[i] = orig
            numeric = (up - dn) / (2.0 * step)
            rel = abs(g[i] - numeric) / max(1e-8, abs(g[i]) + abs(numeric))
            worst = max(worst, rel)
    return worst


def save_checkpoint(path, ckpt: ModelCheckpoint) -> None:
    """Versioned npz container with named tensors and a JSON metadata blob."""
    arrays = {f"param/{k}": v for k, v in ckpt.params.items()}
    meta = {
        "version": ckpt.version,
        "hyper": {
            "enc_dim": ckpt.hyper.enc_dim, "dec_dim": ckpt.hyper.dec_dim,
            "epochs": ckpt.hyper.epochs, "seed": ckpt.hyper.seed,
            "feature_set": ckpt.hyper.feature_set.value,
            "learning_rate": ckpt.hyper.learning_rate,
            "batch_size": ckpt.hyper.batch_size,
        },
        "has_normalizer": ckpt.normalizer is not None,
        "has_stats": ckpt.stats is not None,
    }
    if ckpt.normalizer is not None:
        arrays["norm/mean"] = ckpt.normalizer.mean
        arrays["norm/std"] = ckpt.normalizer.std
        meta["normalizer_fitted_on"] = ckpt.normalizer.fitted_on
    if ckpt.stats is not None:
        arrays["stats/counts"] = ckpt.stats.counts
        meta["stats"] = {"n": ckpt.stats.n, "l": ckpt.stats.l}
    arrays["meta_json"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> ModelCheckpoint:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta_json"]).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta['version']}")
        params = {k[len("param/"):]: data[k] for k in data.files
                  if k.startswith("param/")}
        hy = meta["hyper"]
        hyper = Hyper(enc_dim=hy["enc_dim"], dec_dim=hy["dec_dim"],
                      epochs=hy["epochs"], seed=hy["seed"],
                      feature_set=FeatureSet(hy["feature_set"]),
                      learning_rate=hy["learning_rate"],
                      batch_size=hy["batch_size"])
        normalizer = None
        if meta["has_normalizer"]:
            normalizer = Normalizer(mean=data["norm/mean"], std=data["norm/std"],
                                    feature_set=hyper.feature_set,
                                    fitted_on=meta["normalizer_fitted_on"])
        stats = None
        if meta["has_stats"]:
            counts = data["stats/counts"]
            st = meta["stats"]
            stats = DistributionStats(
                n=st["n"], l=st["l"], counts=counts,
                proportions=counts / float(st["n"] * st["l"]))
    return ModelCheckpoint(params=params, hyper=hyper, normalizer=normalizer,
                           stats=stats, version=meta["version"])
