"""Mechanism experiments: one transformation family, three execution modes.

Sample-wise draws independent parameters per sample, dataset-wise applies a
single fixed parameter set to everything, and class-wise ties parameters to
labels.  Unlike the production protection path, this module also admits the
families excluded from protection (tapering, reflection, translation) so
their behavior under each mode can be studied; class-wise reflection is
limited to three classes because only three distinct mirror planes exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from pcveil.allocation import AllocationConfig
from pcveil.errors import InvalidParameterError
from pcveil.pipeline import LabeledDataset, ProtectionMessage, build_message, protect
from pcveil.seeding import substream
from pcveil.transforms import (
    REFLECTION_PLANES,
    Reflection,
    Rotation,
    Scaling,
    Shear,
    Taper,
    Translation,
    Twist,
    apply,
)

FAMILIES = ("rotation", "scaling", "shear", "twist", "taper", "reflection", "translation")
MODES = ("sample", "dataset", "class")

_FAMILY_KIND = {"rotation": "R", "scaling": "S", "twist": "W", "shear": "H"}


@dataclass(frozen=True)
class ExploreConfig:
    """Family, execution mode, and the per-mode parameter ranges.

    Class-wise ranges for the allocatable families mirror the protection
    defaults; taper rates are specified as degrees and converted like twist
    rates.  Fields under "dataset-wise fixed values" apply to every sample
    in dataset mode.
    """

    family: str
    mode: str
    seed: int = 23
    # class-wise ranges (allocatable families reuse the protection defaults)
    slight_deg: float = 15.0
    primary_deg: float = 120.0
    scale_lo: float = 0.6
    scale_hi: float = 0.8
    twist_lo_deg: float = 0.0
    twist_hi_deg: float = 20.0
    shear_lo: float = 0.0
    shear_hi: float = 0.4
    shear_plane: str = "xy"
    eta_lo_deg: float = 0.0
    eta_hi_deg: float = 50.0
    shift_lo: float = 0.0
    shift_hi: float = 0.3
    # sample-wise rotation uses one common angle range for all three axes
    angle_lo_deg: float = 0.0
    angle_hi_deg: float = 20.0
    # dataset-wise fixed values
    angle_deg: float = 10.0
    scale: float = 0.8
    shear_s: float = 0.2
    shear_t: float = 0.2
    twist_deg: float = 25.0
    eta_deg: float = 25.0
    shift: float = 0.15
    reflection_plane: str = "xy"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown family {self.family!r} (expected one of {FAMILIES})")
        if self.mode not in MODES:
            raise InvalidParameterError(f"unknown mode {self.mode!r} (expected one of {MODES})")


def _sample_transform(config: ExploreConfig, rng):
    family = config.family
    if family == "rotation":
        a, b, g = (math.radians(rng.uniform(config.angle_lo_deg, config.angle_hi_deg)) for _ in range(3))
        return Rotation(a, b, g)
    if family == "scaling":
        return Scaling(rng.uniform(config.scale_lo, config.scale_hi))
    if family == "shear":
        s = rng.uniform(config.shear_lo, config.shear_hi)
        t = rng.uniform(config.shear_lo, config.shear_hi)
        return Shear(config.shear_plane, s, t)
    if family == "twist":
        return Twist(math.radians(rng.uniform(config.twist_lo_deg, config.twist_hi_deg)))
    if family == "taper":
        return Taper(math.radians(rng.uniform(config.eta_lo_deg, config.eta_hi_deg)))
    if family == "reflection":
        return Reflection(REFLECTION_PLANES[rng.integers(0, len(REFLECTION_PLANES))])
    dx, dy, dz = (rng.uniform(config.shift_lo, config.shift_hi) for _ in range(3))
    return Translation(dx, dy, dz)


def _dataset_transform(config: ExploreConfig):
    family = config.family
    if family == "rotation":
        a = math.radians(config.angle_deg)
        return Rotation(a, a, a)
    if family == "scaling":
        return Scaling(config.scale)
    if family == "shear":
        return Shear(config.shear_plane, config.shear_s, config.shear_t)
    if family == "twist":
        return Twist(math.radians(config.twist_deg))
    if family == "taper":
        return Taper(math.radians(config.eta_deg))
    if family == "reflection":
        return Reflection(config.reflection_plane)
    return Translation(config.shift, config.shift, config.shift)


def _class_transforms(config: ExploreConfig, class_ids: list[int]):
    family = config.family
    out = {}
    for cid in class_ids:
        rng = substream(config.seed, f"class-{family}", cid)
        if family == "taper":
            out[cid] = Taper(math.radians(rng.uniform(config.eta_lo_deg, config.eta_hi_deg)))
        elif family == "translation":
            dx, dy, dz = (rng.uniform(config.shift_lo, config.shift_hi) for _ in range(3))
            out[cid] = Translation(dx, dy, dz)
        elif family == "reflection":
            if len(class_ids) > len(REFLECTION_PLANES):
                raise InvalidParameterError(
                    "class-wise reflection supports at most three classes: only three distinct mirror planes exist"
                )
            out[cid] = Reflection(REFLECTION_PLANES[cid % len(REFLECTION_PLANES)])
        else:
            raise InvalidParameterError(f"{family} is handled by the allocation path")
    return out


def explore_dataset(dataset: LabeledDataset, config: ExploreConfig,
                    workers: int = 1) -> tuple[LabeledDataset, ProtectionMessage | None]:
    """Apply the configured family under the configured mode.

    Class mode for the allocatable families (rotation, scaling, twist,
    shear) goes through the same allocation and protection path as the
    production pipeline, so its output matches single-kind protection with
    equal settings; the returned message is non-None exactly in that case.
    """
    if config.mode == "class" and config.family in _FAMILY_KIND:
        alloc = AllocationConfig(
            kinds=(_FAMILY_KIND[config.family],),
            slight_deg=config.slight_deg,
            primary_deg=config.primary_deg,
            scale_lo=config.scale_lo,
            scale_hi=config.scale_hi,
            twist_lo_deg=config.twist_lo_deg,
            twist_hi_deg=config.twist_hi_deg,
            shear_lo=config.shear_lo,
            shear_hi=config.shear_hi,
            shear_plane=config.shear_plane,
            seed=config.seed,
        )
        n_classes = max(dataset.class_ids()) + 1 if dataset.class_ids() else 0
        message = build_message(n_classes, alloc)
        return protect(dataset, message, workers=workers), message

    if config.mode == "class":
        per_class = _class_transforms(config, dataset.class_ids())
        samples = [(apply(per_class[label], cloud), label) for cloud, label in dataset.samples]
    elif config.mode == "dataset":
        shared = _dataset_transform(config)
        samples = [(apply(shared, cloud), label) for cloud, label in dataset.samples]
    else:
        samples = []
        for i, (cloud, label) in enumerate(dataset.samples):
            rng = substream(config.seed, "sample", i)
            samples.append((apply(_sample_transform(config, rng), cloud), label))
    return LabeledDataset(samples), None
