"""Per-frame input vectors: feature-set assembly, z-scoring, ablation noise."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, N_RAW_FEATURES
from .errors import ConfigError

PROSODY_COLUMNS = ("f0", "f0_dir", "intensity")
MFCC_COLUMNS = tuple(f"mfcc{i:02d}" for i in range(13))
RAW_COLUMNS = PROSODY_COLUMNS + MFCC_COLUMNS


class FeatureSet(enum.Enum):
    Prosody3 = "Prosody3"
    Mfcc13 = "Mfcc13"
    Both16 = "Both16"

    @property
    def dim(self) -> int:
        return {"Prosody3": 3, "Mfcc13": 13, "Both16": 16}[self.value]

    @property
    def columns(self) -> tuple[str, ...]:
        if self is FeatureSet.Prosody3:
            return PROSODY_COLUMNS
        if self is FeatureSet.Mfcc13:
            return MFCC_COLUMNS
        return RAW_COLUMNS

    def raw_indices(self) -> np.ndarray:
        """Column indices into the 16-wide raw feature rows."""
        if self is FeatureSet.Prosody3:
            return np.arange(0, 3)
        if self is FeatureSet.Mfcc13:
            return np.arange(3, 16)
        return np.arange(0, 16)


def assemble(raw: np.ndarray, feature_set: FeatureSet) -> np.ndarray:
    """Project raw (n, 16) frames onto one feature set's columns."""
    if raw.ndim != 2 or raw.shape[1] != N_RAW_FEATURES:
        raise ConfigError(f"raw feature block must be (n, {N_RAW_FEATURES}), "
                          f"got {raw.shape}")
    return raw[:, feature_set.raw_indices()].copy()


@dataclass(frozen=True)
class Normalizer:
    """Per-column z-score statistics, fit on training data only."""
    mean: np.ndarray
    std: np.ndarray
    feature_set: FeatureSet
    fitted_on: str = "train"

    def apply(self, mat: np.ndarray, n_real: int | None = None) -> np.ndarray:
        """Standardize; rows past n_real are padding and stay all-zero."""
        if mat.shape[1] != len(self.mean):
            raise ConfigError(f"matrix has {mat.shape[1]} columns, normalizer "
                              f"expects {len(self.mean)}")
        out = mat.copy()
        n = len(mat) if n_real is None else n_real
        out[:n] = (mat[:n] - self.mean) / self.std
        out[n:] = 0.0
        return out


def fit_normalizer(train: list[np.ndarray], feature_set: FeatureSet,
                   n_real: list[int] | None = None) -> Normalizer:
    """Column means/stddevs over the non-padded frames of the training set."""
    if not train:
        raise ConfigError("cannot fit a normalizer on an empty training set")
    if n_real is None:
        rows = np.vstack(train)
    else:
        rows = np.vstack([m[:k] for m, k in zip(train, n_real)])
    if rows.size == 0:
        raise ConfigError("training set has no frames")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std == 0.0] = 1.0
    return Normalizer(mean=mean, std=std, feature_set=feature_set)


def observed_ranges(train: list[np.ndarray], n_real: list[int] | None = None
                    ) -> np.ndarray:
    """Per-column (min, max) over non-padded training frames, shape (d, 2)."""
    if n_real is None:
        rows = np.vstack(train)
    else:
        rows = np.vstack([m[:k] for m, k in zip(train, n_real)])
    return np.stack([rows.min(axis=0), rows.max(axis=0)], axis=1)


def randomize(mat: np.ndarray, subset, seed: int, ranges: np.ndarray,
              n_real: int | None = None) -> np.ndarray:
    """Replace selected columns of the non-padded rows with uniform noise.

    ranges holds the training set's per-column (lo, hi); draws are
    deterministic given seed. Padded rows and unselected columns are kept
    bit-identical.
    """
    subset = sorted(set(int(c) for c in subset))
    d = mat.shape[1]
    for c in subset:
        if c >= d:
            raise ConfigError(f"column index {c} out of range for d={d}")
    out = mat.copy()
    if not subset:
        return out
    n = len(mat) if n_real is None else n_real
    rng = np.random.default_rng(seed)
    for c in subset:
        lo, hi = ranges[c]
        out[:n, c] = rng.uniform(lo, hi, size=n)
    return out


def dataset_matrices(ds: Dataset, feature_set: FeatureSet,
                     normalizer: Normalizer | None = None) -> np.ndarray:
    """Stack a padded dataset into an (n, l, d) array, optionally normalized."""
    if ds.padded_len is None:
        raise ConfigError("dataset_matrices requires a padded dataset")
    mats = []
    for u in ds.samples:
        m = assemble(u.features, feature_set)
        if normalizer is not None:
            m = normalizer.apply(m, n_real=u.n_frames)
        mats.append(m)
    return np.stack(mats)
