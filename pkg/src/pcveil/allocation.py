"""Category-adaptive allocation of per-class transformation parameters.

Each class receives its own transformation parameters, drawn deterministically
from seeded substreams.  Rotation triples are sampled without replacement from
an A x A x A angle grid with A = ceil(cbrt(N)), which guarantees at least N
distinct combinations; the scalar families (scaling, twisting, shear) are
plain per-class uniform draws within their configured ranges.

Only rotation (R), scaling (S), twisting (W), and shear (H) may be allocated.
Tapering, reflection, and translation are rejected: tapering can collapse
samples onto the z-plane and lose invertibility, reflection offers only three
distinct matrices, and translation is a plain additive shift that trivial
preprocessing removes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from pcveil.errors import ExcludedKindError, InvalidParameterError
from pcveil.seeding import substream
from pcveil.transforms import SHEAR_PLANES

# canonical composition order; the rightmost kind acts on the points first
KIND_ORDER = "RSWH"

KIND_LABELS = {"R": "rotation", "S": "scaling", "W": "twisting", "H": "shear"}

_EXCLUDED_KIND_REASONS = {
    "T": "tapering is excluded: it can collapse samples onto the z-plane and is not always invertible",
    "F": "reflection is excluded: only three distinct matrices exist, too few for class-wise assignment",
    "L": "translation is excluded: a plain additive shift is trivially removed by preprocessing",
}


class AllocationWarning(UserWarning):
    """Non-fatal allocation oddities, e.g. colliding scalar draws."""


def validate_kinds(kinds) -> tuple[str, ...]:
    """Normalize a kind spec ('RS', ('R','S'), ...) to canonical order."""
    tokens = tuple(kinds)
    if not tokens:
        raise InvalidParameterError("at least one transformation kind is required")
    seen = set()
    for tok in tokens:
        if tok in _EXCLUDED_KIND_REASONS:
            raise ExcludedKindError(_EXCLUDED_KIND_REASONS[tok])
        if tok not in KIND_ORDER:
            raise InvalidParameterError(f"unknown transformation kind {tok!r} (expected letters from {KIND_ORDER!r})")
        if tok in seen:
            raise InvalidParameterError(f"duplicate transformation kind {tok!r}")
        seen.add(tok)
    return tuple(k for k in KIND_ORDER if k in seen)


@dataclass(frozen=True)
class AllocationConfig:
    """Ranges and seed for per-class parameter allocation.

    Angle ranges are degrees; ``slight_deg`` bounds the x/y rotation angles
    and ``primary_deg`` the z rotation angle.
    """

    kinds: tuple[str, ...] = ("R", "S")
    slight_deg: float = 15.0
    primary_deg: float = 120.0
    scale_lo: float = 0.6
    scale_hi: float = 0.8
    twist_lo_deg: float = 0.0
    twist_hi_deg: float = 20.0
    shear_lo: float = 0.0
    shear_hi: float = 0.4
    shear_plane: str = "xy"
    seed: int = 23

    def __post_init__(self):
        object.__setattr__(self, "kinds", validate_kinds(self.kinds))
        for name in ("slight_deg", "primary_deg", "scale_lo", "scale_hi",
                     "twist_lo_deg", "twist_hi_deg", "shear_lo", "shear_hi"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.slight_deg < 0 or self.primary_deg < 0:
            raise InvalidParameterError("angle ranges must be non-negative")
        if self.scale_lo <= 0:
            raise InvalidParameterError("scaling lower bound must be positive")
        if self.scale_lo > self.scale_hi:
            raise InvalidParameterError("scaling bounds must satisfy lo <= hi")
        if self.twist_lo_deg > self.twist_hi_deg:
            raise InvalidParameterError("twist bounds must satisfy lo <= hi")
        if self.shear_lo > self.shear_hi:
            raise InvalidParameterError("shear bounds must satisfy lo <= hi")
        if self.shear_plane not in SHEAR_PLANES:
            raise InvalidParameterError(f"unknown shear plane {self.shear_plane!r}")


@dataclass(frozen=True)
class ClassAssignment:
    """The transformation parameters assigned to one class.

    Angle fields are degrees.  A field is None when its kind is absent from
    the allocation.
    """

    class_id: int
    rotation_deg: tuple[float, float, float] | None = None
    scale: float | None = None
    twist_deg: float | None = None
    shear: tuple[str, float, float] | None = None  # (plane, s, t)


def allocation_count(n_classes: int) -> int:
    """Smallest integer A with A**3 >= n_classes."""
    if n_classes < 1:
        raise InvalidParameterError(f"class count must be >= 1, got {n_classes}")
    a = max(1, round(n_classes ** (1.0 / 3.0)))
    while a**3 < n_classes:
        a += 1
    while a > 1 and (a - 1) ** 3 >= n_classes:
        a -= 1
    return a


def allocate_rotations(n_classes: int, slight_deg: float, primary_deg: float, seed: int) -> np.ndarray:
    """Draw one (alpha, beta, gamma) degree triple per class.

    A = allocation_count(n_classes) values are drawn per axis (alpha, beta
    uniform on [0, slight_deg); gamma uniform on [0, primary_deg)); the
    triples are then chosen uniformly without replacement from the A**3
    grid, so triples for distinct classes occupy distinct grid cells.
    """
    a = allocation_count(n_classes)
    alphas = np.array([substream(seed, "rot-alpha", i).uniform(0.0, slight_deg) for i in range(a)])
    betas = np.array([substream(seed, "rot-beta", i).uniform(0.0, slight_deg) for i in range(a)])
    gammas = np.array([substream(seed, "rot-gamma", i).uniform(0.0, primary_deg) for i in range(a)])
    cells = substream(seed, "rot-cells").choice(a**3, size=n_classes, replace=False)
    i, j, k = np.unravel_index(cells, (a, a, a))
    return np.column_stack((alphas[i], betas[j], gammas[k]))


def allocate_scalars(n_classes: int, lo: float, hi: float, seed: int, purpose: str) -> np.ndarray:
    """Draw one uniform value in [lo, hi] per class for the named purpose.

    The purpose tag keys the substream, so draws for different scalar
    families never overlap even under one master seed.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidParameterError("scalar bounds must be finite")
    if lo > hi:
        raise InvalidParameterError(f"scalar bounds must satisfy lo <= hi, got [{lo}, {hi}]")
    return np.array([substream(seed, purpose, i).uniform(lo, hi) for i in range(n_classes)])


def _warn_on_collisions(values: np.ndarray, label: str) -> None:
    if len(np.unique(values)) < len(values):
        warnings.warn(f"{label} values collide across classes (degenerate range?)", AllocationWarning)


def build_assignment(n_classes: int, config: AllocationConfig) -> tuple[ClassAssignment, ...]:
    """Allocate parameters for ``n_classes`` classes under ``config``."""
    if n_classes < 1:
        raise InvalidParameterError(f"class count must be >= 1, got {n_classes}")
    kinds = config.kinds
    rotations = scales = twists = shear_s = shear_t = None
    if "R" in kinds:
        rotations = allocate_rotations(n_classes, config.slight_deg, config.primary_deg, config.seed)
    if "S" in kinds:
        scales = allocate_scalars(n_classes, config.scale_lo, config.scale_hi, config.seed, "scale")
        _warn_on_collisions(scales, "scaling")
    if "W" in kinds:
        twists = allocate_scalars(n_classes, config.twist_lo_deg, config.twist_hi_deg, config.seed, "twist")
        _warn_on_collisions(twists, "twisting")
    if "H" in kinds:
        shear_s = allocate_scalars(n_classes, config.shear_lo, config.shear_hi, config.seed, "shear-s")
        shear_t = allocate_scalars(n_classes, config.shear_lo, config.shear_hi, config.seed, "shear-t")
        if len({(s, t) for s, t in zip(shear_s, shear_t)}) < n_classes:
            warnings.warn("shear (s, t) pairs collide across classes (degenerate range?)", AllocationWarning)
    out = []
    for c in range(n_classes):
        out.append(
            ClassAssignment(
                class_id=c,
                rotation_deg=tuple(rotations[c]) if rotations is not None else None,
                scale=float(scales[c]) if scales is not None else None,
                twist_deg=float(twists[c]) if twists is not None else None,
                shear=(config.shear_plane, float(shear_s[c]), float(shear_t[c])) if shear_s is not None else None,
            )
        )
    return tuple(out)
