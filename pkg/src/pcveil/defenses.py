"""Preprocessing and augmentation baselines used against protected datasets.

All defenses are deterministic functions of (input, parameters, seed).
Statistical outlier removal (SOR) and simple random sampling (SRS) return
order-preserving subsets of the input; the random augmentations keep the
point count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from pcveil import backend
from pcveil.allocation import validate_kinds
from pcveil.errors import InvalidParameterError
from pcveil.pipeline import LabeledDataset
from pcveil.seeding import child_seed, substream
from pcveil.transforms import (
    ComposedTransform,
    Rotation,
    Scaling,
    Shear,
    Twist,
    apply,
    as_cloud,
)

DEFENSE_METHODS = ("sor", "srs", "jitter", "rotation", "scaling", "rswh")


def sor(cloud, k: int = 2, alpha: float = 1.1) -> np.ndarray:
    """Statistical outlier removal.

    Computes each point's mean Euclidean distance to its k nearest
    neighbors and drops points whose mean distance strictly exceeds
    (global mean + alpha * global std) of those per-point values.
    """
    arr = as_cloud(cloud)
    if k < 1:
        raise InvalidParameterError(f"neighbor count must be >= 1, got {k}")
    if alpha < 0:
        raise InvalidParameterError(f"threshold multiplier must be >= 0, got {alpha}")
    if len(arr) <= k:
        raise InvalidParameterError(f"need more than {k} points for {k}-nearest-neighbor statistics, got {len(arr)}")
    kern = backend.kernels()
    x = np.ascontiguousarray(arr[:, 0])
    y = np.ascontiguousarray(arr[:, 1])
    z = np.ascontiguousarray(arr[:, 2])
    mean_dists = kern.knn_mean_dists(x, y, z, k)
    threshold = mean_dists.mean() + alpha * mean_dists.std()
    return arr[mean_dists <= threshold]


def srs(cloud, drop_count: int, seed: int) -> np.ndarray:
    """Drop ``drop_count`` points chosen uniformly without replacement."""
    arr = as_cloud(cloud)
    if not 0 <= drop_count < len(arr):
        raise InvalidParameterError(
            f"drop count must satisfy 0 <= drop < point count ({len(arr)}), got {drop_count}"
        )
    if drop_count == 0:
        return arr.copy()
    dropped = substream(seed, "srs").choice(len(arr), size=drop_count, replace=False)
    keep = np.ones(len(arr), dtype=bool)
    keep[dropped] = False
    return arr[keep]


def random_jitter(cloud, std: float = 0.05, clip: float = 0.1, seed: int = 0) -> np.ndarray:
    """Add per-coordinate Gaussian noise, clamped to [-clip, clip].

    The clamp is exact on the output: |result - input| never exceeds
    ``clip``, even after rounding in the addition.
    """
    arr = as_cloud(cloud)
    if std < 0 or clip < 0:
        raise InvalidParameterError("jitter std and clip must be >= 0")
    if std == 0:
        return arr.copy()
    noise = substream(seed, "jitter").normal(0.0, std, size=arr.shape)
    out = arr + np.clip(noise, -clip, clip)
    # adding a clamped delta can round one ulp past the clamp; walk those
    # entries back toward the input until the measured delta honors it
    while True:
        delta = out - arr
        over = delta > clip
        under = delta < -clip
        if not (over.any() or under.any()):
            return out
        out = np.where(over, np.nextafter(out, -np.inf), out)
        out = np.where(under, np.nextafter(out, np.inf), out)


def random_rotation(cloud, seed: int) -> np.ndarray:
    """Rotate by one angle, shared by all three axes, uniform on [0, 2*pi)."""
    phi = substream(seed, "rotation").uniform(0.0, 2.0 * math.pi)
    return apply(Rotation(phi, phi, phi), cloud)


def random_scaling(cloud, lo: float = 0.8, hi: float = 1.25, seed: int = 0) -> np.ndarray:
    """Scale uniformly by one factor drawn from [lo, hi]."""
    if not (0 < lo <= hi):
        raise InvalidParameterError(f"scaling bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
    factor = substream(seed, "scaling").uniform(lo, hi)
    return apply(Scaling(factor), cloud)


@dataclass(frozen=True)
class AdaptiveConfig:
    """Ranges for the sample-wise random composed augmentation."""

    kinds: tuple[str, ...] = ("R", "S", "W", "H")
    rot_lo_deg: float = 0.0
    rot_hi_deg: float = 360.0
    scale_lo: float = 0.8
    scale_hi: float = 1.25
    twist_lo_deg: float = 0.0
    twist_hi_deg: float = 20.0
    shear_lo: float = 0.0
    shear_hi: float = 0.4
    shear_plane: str = "xy"

    def __post_init__(self):
        object.__setattr__(self, "kinds", validate_kinds(self.kinds))
        if self.rot_lo_deg > self.rot_hi_deg or self.twist_lo_deg > self.twist_hi_deg \
                or self.shear_lo > self.shear_hi:
            raise InvalidParameterError("range bounds must satisfy lo <= hi")
        if not (0 < self.scale_lo <= self.scale_hi):
            raise InvalidParameterError("scaling bounds must satisfy 0 < lo <= hi")


def adaptive_rswh(cloud, config: AdaptiveConfig, seed: int) -> np.ndarray:
    """Apply a random composition of the configured kinds.

    Parameters are drawn fresh per call (one substream per seed), so applying
    this across a dataset with per-sample derived seeds yields independent
    per-sample transformations.
    """
    rng = substream(seed, "adaptive")
    stages = []
    for kind in config.kinds:
        if kind == "R":
            angles = [math.radians(rng.uniform(config.rot_lo_deg, config.rot_hi_deg)) for _ in range(3)]
            stages.append(Rotation(*angles))
        elif kind == "S":
            stages.append(Scaling(rng.uniform(config.scale_lo, config.scale_hi)))
        elif kind == "W":
            stages.append(Twist(math.radians(rng.uniform(config.twist_lo_deg, config.twist_hi_deg))))
        elif kind == "H":
            s = rng.uniform(config.shear_lo, config.shear_hi)
            t = rng.uniform(config.shear_lo, config.shear_hi)
            stages.append(Shear(config.shear_plane, s, t))
    return apply(ComposedTransform(tuple(stages)), cloud)


@dataclass(frozen=True)
class DefenseConfig:
    """Method selection plus every method's parameters."""

    method: str
    seed: int = 23
    sor_k: int = 2
    sor_alpha: float = 1.1
    srs_drop: int = 500
    jitter_std: float = 0.05
    jitter_clip: float = 0.1
    scale_lo: float = 0.8
    scale_hi: float = 1.25
    adaptive: AdaptiveConfig = AdaptiveConfig()

    def __post_init__(self):
        if self.method not in DEFENSE_METHODS:
            raise InvalidParameterError(f"unknown defense method {self.method!r} (expected one of {DEFENSE_METHODS})")


def defend_cloud(cloud, config: DefenseConfig, sample_seed: int) -> np.ndarray:
    if config.method == "sor":
        return sor(cloud, config.sor_k, config.sor_alpha)
    if config.method == "srs":
        return srs(cloud, config.srs_drop, sample_seed)
    if config.method == "jitter":
        return random_jitter(cloud, config.jitter_std, config.jitter_clip, sample_seed)
    if config.method == "rotation":
        return random_rotation(cloud, sample_seed)
    if config.method == "scaling":
        return random_scaling(cloud, config.scale_lo, config.scale_hi, sample_seed)
    return adaptive_rswh(cloud, config.adaptive, sample_seed)


def apply_defense(dataset: LabeledDataset, config: DefenseConfig, workers: int = 1) -> LabeledDataset:
    """Defend every sample; per-sample seeds derive from (seed, index)."""
    indexed = [(i, cloud, label) for i, (cloud, label) in enumerate(dataset.samples)]

    def work(item):
        i, cloud, label = item
        return defend_cloud(cloud, config, child_seed(config.seed, "defense", i)), label

    if workers <= 1:
        out = [work(item) for item in indexed]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(work, indexed))
    return LabeledDataset(out)
