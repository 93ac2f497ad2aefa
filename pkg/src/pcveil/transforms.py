"""The seven 3D point-cloud transformation families.

Construction, composition, per-point application, and exact inversion.
Matrices act on column points, ``x' = M x``; clouds are (p, 3) float64
arrays with one point per row.  Angles are radians throughout this module;
degree conversion happens at the package's outer interfaces.

Rotation, scaling, shear, and reflection reduce to one constant matrix per
transform.  Twisting and tapering are z-dependent: each point is mapped by
a matrix evaluated at that point's own z-coordinate.  Both preserve z, so
their inverses see the same z the forward map saw and round trips are
exact.  Translation is a plain additive offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from pcveil import backend
from pcveil.errors import InvalidParameterError, SingularTransformError

# |1 + eta*z| at or below this collapses points onto the z-plane
TAPER_PINCH_EPS = 1e-9

SHEAR_PLANES = ("xy", "xz", "yz")
REFLECTION_PLANES = ("xy", "yz", "xz")


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")


def rotation_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rotation about x by alpha, about y by beta, about z by gamma.

    Returns the product R_alpha @ R_beta @ R_gamma, an orthogonal matrix
    with determinant +1.
    """
    _require_finite("rotation angle", alpha, beta, gamma)
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    r_alpha = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    r_beta = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    r_gamma = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return r_alpha @ r_beta @ r_gamma


def scaling_matrix(factor: float) -> np.ndarray:
    """Uniform scaling matrix ``factor * I``."""
    _require_finite("scaling factor", factor)
    if factor == 0.0:
        raise SingularTransformError("scaling factor must be nonzero")
    return factor * np.eye(3)


def shear_matrix(plane: str, s: float, t: float) -> np.ndarray:
    """Unit-triangular shear: the named pair of axes is shifted by the third.

    ``xy`` shifts x and y by z, ``xz`` shifts x and z by y, ``yz`` shifts
    y and z by x.  Determinant is exactly 1.
    """
    _require_finite("shear coefficient", s, t)
    m = np.eye(3)
    if plane == "xy":
        m[0, 2] = s
        m[1, 2] = t
    elif plane == "xz":
        m[0, 1] = s
        m[2, 1] = t
    elif plane == "yz":
        m[1, 0] = s
        m[2, 0] = t
    else:
        raise InvalidParameterError(f"unknown shear plane {plane!r} (expected one of {SHEAR_PLANES})")
    return m


def reflection_matrix(plane: str) -> np.ndarray:
    """Mirror across the named coordinate plane."""
    if plane not in REFLECTION_PLANES:
        raise InvalidParameterError(f"unknown reflection plane {plane!r} (expected one of {REFLECTION_PLANES})")
    diag = {"xy": (1.0, 1.0, -1.0), "yz": (-1.0, 1.0, 1.0), "xz": (1.0, -1.0, 1.0)}[plane]
    return np.diag(diag)


def twist_matrix(theta: float, z: float) -> np.ndarray:
    """The xy-rotation a twist applies to a point at height z."""
    _require_finite("twist rate", theta)
    ang = theta * z
    c, s = math.cos(ang), math.sin(ang)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def taper_matrix(eta: float, z: float) -> np.ndarray:
    """The xy-scaling a taper applies to a point at height z."""
    _require_finite("taper rate", eta)
    f = 1.0 + eta * z
    if abs(f) <= TAPER_PINCH_EPS:
        raise SingularTransformError(f"taper is singular at z={z!r}: |1 + eta*z| <= {TAPER_PINCH_EPS}")
    return np.diag((f, f, 1.0))


@dataclass(frozen=True)
class Rotation:
    """Rotation by (alpha, beta, gamma) radians about the x, y, z axes."""

    alpha: float
    beta: float
    gamma: float
    # the inverse of an orthogonal matrix is its transpose; keeping the flag
    # instead of re-parameterizing makes the inverse exact
    inverted: bool = False

    def __post_init__(self):
        _require_finite("rotation angle", self.alpha, self.beta, self.gamma)

    def matrix(self) -> np.ndarray:
        m = rotation_matrix(self.alpha, self.beta, self.gamma)
        return m.T.copy() if self.inverted else m


@dataclass(frozen=True)
class Scaling:
    """Uniform scaling by a nonzero factor."""

    factor: float

    def __post_init__(self):
        _require_finite("scaling factor", self.factor)
        if self.factor == 0.0:
            raise SingularTransformError("scaling factor must be nonzero")

    def matrix(self) -> np.ndarray:
        return scaling_matrix(self.factor)


@dataclass(frozen=True)
class Shear:
    """Shear of the named axis pair by the remaining coordinate."""

    plane: str
    s: float
    t: float

    def __post_init__(self):
        shear_matrix(self.plane, self.s, self.t)

    def matrix(self) -> np.ndarray:
        return shear_matrix(self.plane, self.s, self.t)


@dataclass(frozen=True)
class Twist:
    """z-dependent xy-rotation by ``theta`` radians per unit z."""

    theta: float

    def __post_init__(self):
        _require_finite("twist rate", self.theta)


@dataclass(frozen=True)
class Taper:
    """z-dependent xy-scaling by ``1 + eta*z`` (reciprocal when inverted)."""

    eta: float
    inverted: bool = False

    def __post_init__(self):
        _require_finite("taper rate", self.eta)


@dataclass(frozen=True)
class Reflection:
    """Mirror across a coordinate plane; self-inverse."""

    plane: str

    def __post_init__(self):
        reflection_matrix(self.plane)

    def matrix(self) -> np.ndarray:
        return reflection_matrix(self.plane)


@dataclass(frozen=True)
class Translation:
    """Additive offset applied to every point."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        _require_finite("translation offset", self.dx, self.dy, self.dz)


Transform = Rotation | Scaling | Shear | Twist | Taper | Reflection | Translation

_CONSTANT_MATRIX_KINDS = (Rotation, Scaling, Shear, Reflection)


def kind_name(transform: Transform) -> str:
    return type(transform).__name__.lower()


@dataclass(frozen=True)
class ComposedTransform:
    """An ordered product of transforms; ``stages[-1]`` acts first.

    Mirrors matrix-product notation: composing (V1, ..., Vk) applies Vk to
    the points, then Vk-1, and so on.  Families within one composition must
    be pairwise distinct.
    """

    stages: tuple[Transform, ...]

    def __post_init__(self):
        kinds = []
        for stage in self.stages:
            if isinstance(stage, ComposedTransform):
                raise InvalidParameterError("compositions cannot be nested")
            if not isinstance(stage, _CONSTANT_MATRIX_KINDS + (Twist, Taper, Translation)):
                raise InvalidParameterError(f"not a transform: {stage!r}")
            kinds.append(type(stage))
        if len(set(kinds)) != len(kinds):
            raise InvalidParameterError("transformation families within one composition must be pairwise distinct")


def as_cloud(points) -> np.ndarray:
    """Validate and return a (p, 3) float64 view/copy of ``points``."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidParameterError(f"a point cloud must have shape (p, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise InvalidParameterError("a point cloud must contain at least one point")
    if not np.isfinite(arr).all():
        raise InvalidParameterError("point cloud contains non-finite coordinates")
    return arr


def _apply_stage(stage: Transform, x, y, z):
    kern = backend.kernels()
    if isinstance(stage, _CONSTANT_MATRIX_KINDS):
        return kern.linear_map(x, y, z, stage.matrix())
    if isinstance(stage, Twist):
        return kern.twist_map(x, y, z, stage.theta)
    if isinstance(stage, Taper):
        f = 1.0 + stage.eta * z
        if np.min(np.abs(f)) <= TAPER_PINCH_EPS:
            raise SingularTransformError(
                "taper collapses a point onto the z-plane (|1 + eta*z| <= "
                f"{TAPER_PINCH_EPS}); choose a smaller rate"
            )
        if stage.inverted:
            return x / f, y / f, z
        return x * f, y * f, z
    if isinstance(stage, Translation):
        return x + stage.dx, y + stage.dy, z + stage.dz
    raise InvalidParameterError(f"not a transform: {stage!r}")


def apply(transform: Transform | ComposedTransform, cloud) -> np.ndarray:
    """Transform every point of ``cloud``; order and count are preserved."""
    arr = as_cloud(cloud)
    x = np.ascontiguousarray(arr[:, 0])
    y = np.ascontiguousarray(arr[:, 1])
    z = np.ascontiguousarray(arr[:, 2])
    stages = transform.stages if isinstance(transform, ComposedTransform) else (transform,)
    for stage in reversed(stages):
        x, y, z = _apply_stage(stage, x, y, z)
    return np.column_stack((x, y, z))


def invert(transform: Transform | ComposedTransform):
    """Exact inverse; a composed inverse reverses the stage order."""
    if isinstance(transform, ComposedTransform):
        return ComposedTransform(tuple(invert(s) for s in reversed(transform.stages)))
    if isinstance(transform, Rotation):
        return replace(transform, inverted=not transform.inverted)
    if isinstance(transform, Scaling):
        return Scaling(1.0 / transform.factor)
    if isinstance(transform, Shear):
        return Shear(transform.plane, -transform.s, -transform.t)
    if isinstance(transform, Twist):
        return Twist(-transform.theta)
    if isinstance(transform, Taper):
        return replace(transform, inverted=not transform.inverted)
    if isinstance(transform, Reflection):
        return transform
    if isinstance(transform, Translation):
        return Translation(-transform.dx, -transform.dy, -transform.dz)
    raise InvalidParameterError(f"not a transform: {transform!r}")
