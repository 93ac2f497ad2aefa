"""pcveil: class-wise 3D point-cloud protection and restoration.

Per-class compositions of rotation, scaling, twisting, and shear make a
labeled point-cloud dataset unlearnable for unauthorized training; the
exact inverse transforms, driven by a lightweight per-class parameter
message, restore it for authorized users.  The package also ships the
common preprocessing defenses used to attack such schemes and a numerical
verification of the underlying two-class Gaussian-mixture analysis.
"""

from pcveil.allocation import (
    AllocationConfig,
    ClassAssignment,
    allocate_rotations,
    allocate_scalars,
    allocation_count,
    build_assignment,
)
from pcveil.backend import backend_name, use_backend
from pcveil.errors import (
    CoverageError,
    ExcludedKindError,
    InvalidParameterError,
    ParseError,
    PcveilError,
    SingularTransformError,
)
from pcveil.pipeline import (
    LabeledDataset,
    ProtectionMessage,
    build_message,
    parse_message,
    protect,
    restore,
    serialize_message,
)
from pcveil.transforms import (
    ComposedTransform,
    Reflection,
    Rotation,
    Scaling,
    Shear,
    Taper,
    Translation,
    Twist,
    apply,
    invert,
    rotation_matrix,
    scaling_matrix,
    shear_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationConfig",
    "ClassAssignment",
    "ComposedTransform",
    "CoverageError",
    "ExcludedKindError",
    "InvalidParameterError",
    "LabeledDataset",
    "ParseError",
    "PcveilError",
    "ProtectionMessage",
    "Reflection",
    "Rotation",
    "Scaling",
    "Shear",
    "SingularTransformError",
    "Taper",
    "Translation",
    "Twist",
    "allocate_rotations",
    "allocate_scalars",
    "allocation_count",
    "apply",
    "backend_name",
    "build_assignment",
    "build_message",
    "invert",
    "parse_message",
    "protect",
    "restore",
    "rotation_matrix",
    "scaling_matrix",
    "serialize_message",
    "shear_matrix",
    "use_backend",
    "__version__",
]
