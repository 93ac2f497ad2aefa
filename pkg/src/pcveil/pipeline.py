"""Protect and restore labeled point-cloud datasets.

Protection composes the allocated per-class transforms in the canonical
R, S, W, H matrix-product order (the rightmost kind acts on the points
first) and applies the composition to every sample of the class.
Restoration applies the exact inverses in reverse order, driven by the same
lightweight per-class parameter message the protector hands to authorized
users.

The message is a line-oriented text artifact::

    UMTMSG 1
    kinds R S
    class 0 R <alpha> <beta> <gamma> S <scale>
    ...

Angles are degrees; numbers carry 17 significant digits so 64-bit floats
round-trip bit-exactly.  ``parse_message(serialize_message(m)) == m`` and
``serialize_message(parse_message(text)) == text`` on their domains.

The message is not bound to any dataset identity (no checksum or name);
whoever transports it must keep it associated with the dataset it protects.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from pcveil.allocation import (
    AllocationConfig,
    ClassAssignment,
    build_assignment,
    validate_kinds,
)
from pcveil.errors import CoverageError, InvalidParameterError, ParseError
from pcveil.transforms import (
    ComposedTransform,
    Rotation,
    Scaling,
    Shear,
    Twist,
    apply,
    invert,
)

MESSAGE_MAGIC = "UMTMSG"
MESSAGE_VERSION = 1


@dataclass
class LabeledDataset:
    """A list of (cloud, class_id) samples; clouds are (p, 3) arrays."""

    samples: list[tuple[np.ndarray, int]]

    def __len__(self) -> int:
        return len(self.samples)

    def class_ids(self) -> list[int]:
        return sorted({label for _, label in self.samples})


@dataclass(frozen=True)
class ProtectionMessage:
    """Per-class transformation parameters exchanged with authorized users."""

    kinds: tuple[str, ...]
    assignments: tuple[ClassAssignment, ...]

    def __post_init__(self):
        object.__setattr__(self, "kinds", validate_kinds(self.kinds))
        seen = set()
        for a in self.assignments:
            if a.class_id < 0:
                raise InvalidParameterError(f"negative class id {a.class_id}")
            if a.class_id in seen:
                raise InvalidParameterError(f"duplicate class id {a.class_id}")
            seen.add(a.class_id)

    def assignment_for(self, class_id: int) -> ClassAssignment | None:
        for a in self.assignments:
            if a.class_id == class_id:
                return a
        return None


def build_message(n_classes: int, config: AllocationConfig) -> ProtectionMessage:
    """Allocate parameters for ``n_classes`` classes and wrap them in a message."""
    return ProtectionMessage(kinds=config.kinds, assignments=build_assignment(n_classes, config))


def class_transform(message: ProtectionMessage, class_id: int) -> ComposedTransform:
    """The composed transform protecting the given class, in canonical order."""
    a = message.assignment_for(class_id)
    if a is None:
        raise CoverageError(f"message does not cover class {class_id}")
    stages = []
    for kind in message.kinds:  # kinds are already in canonical order
        if kind == "R":
            if a.rotation_deg is None:
                raise InvalidParameterError(f"class {class_id} lacks rotation parameters")
            alpha, beta, gamma = (math.radians(v) for v in a.rotation_deg)
            stages.append(Rotation(alpha, beta, gamma))
        elif kind == "S":
            if a.scale is None:
                raise InvalidParameterError(f"class {class_id} lacks a scaling parameter")
            stages.append(Scaling(a.scale))
        elif kind == "W":
            if a.twist_deg is None:
                raise InvalidParameterError(f"class {class_id} lacks a twist parameter")
            stages.append(Twist(math.radians(a.twist_deg)))
        elif kind == "H":
            if a.shear is None:
                raise InvalidParameterError(f"class {class_id} lacks shear parameters")
            plane, s, t = a.shear
            stages.append(Shear(plane, s, t))
    return ComposedTransform(tuple(stages))


def _transform_dataset(dataset: LabeledDataset, message: ProtectionMessage,
                       inverse: bool, workers: int) -> LabeledDataset:
    missing = [c for c in dataset.class_ids() if message.assignment_for(c) is None]
    if missing:
        raise CoverageError(f"message does not cover classes: {missing}")
    per_class = {c: class_transform(message, c) for c in dataset.class_ids()}
    if inverse:
        per_class = {c: invert(t) for c, t in per_class.items()}

    def work(sample):
        cloud, label = sample
        return apply(per_class[label], cloud), label

    if workers <= 1:
        out = [work(s) for s in dataset.samples]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(work, dataset.samples))
    return LabeledDataset(out)


def protect(dataset: LabeledDataset, message: ProtectionMessage, workers: int = 1) -> LabeledDataset:
    """Apply each class's composed transform to all of its samples.

    Labels, sample order, and point order/count are preserved; results do
    not depend on the worker count.
    """
    return _transform_dataset(dataset, message, inverse=False, workers=workers)


def restore(dataset: LabeledDataset, message: ProtectionMessage, workers: int = 1) -> LabeledDataset:
    """Invert a protection run; ``restore(protect(d, m), m)`` recovers ``d``."""
    return _transform_dataset(dataset, message, inverse=True, workers=workers)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def serialize_message(message: ProtectionMessage) -> str:
    """Render a message as its canonical text artifact."""
    lines = [f"{MESSAGE_MAGIC} {MESSAGE_VERSION}", "kinds " + " ".join(message.kinds)]
    for a in message.assignments:
        parts = ["class", str(a.class_id)]
        for kind in message.kinds:
            if kind == "R":
                parts.append("R")
                parts.extend(_fmt(v) for v in a.rotation_deg)
            elif kind == "S":
                parts.extend(("S", _fmt(a.scale)))
            elif kind == "W":
                parts.extend(("W", _fmt(a.twist_deg)))
            elif kind == "H":
                plane, s, t = a.shear
                parts.extend(("H", plane, _fmt(s), _fmt(t)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _take(tokens: list[str], count: int, line: int, what: str) -> list[str]:
    if len(tokens) < count:
        raise ParseError(f"truncated {what}", line)
    head = tokens[:count]
    del tokens[:count]
    return head


def _parse_float(token: str, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad {what} value {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} value {token!r}", line)
    return value


def parse_message(text: str) -> ProtectionMessage:
    """Parse the text artifact produced by :func:`serialize_message`."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty message", 1)
    head = lines[0].split(" ")
    if len(head) != 2 or head[0] != MESSAGE_MAGIC:
        raise ParseError(f"not a protection message (expected {MESSAGE_MAGIC!r} header)", 1)
    if head[1] != str(MESSAGE_VERSION):
        raise ParseError(f"unsupported message version {head[1]!r}", 1)
    if len(lines) < 2 or not lines[1].startswith("kinds "):
        raise ParseError("missing kinds line", 2)
    kind_tokens = lines[1].split(" ")[1:]
    try:
        kinds = validate_kinds(kind_tokens)
    except InvalidParameterError as exc:
        raise ParseError(str(exc), 2) from None
    if kinds != tuple(kind_tokens):
        raise ParseError("kinds must be listed in canonical R S W H order", 2)

    assignments = []
    seen: set[int] = set()
    for lineno, raw in enumerate(lines[2:], start=3):
        tokens = raw.split(" ")
        tag, cid_tok = _take(tokens, 2, lineno, "class line")
        if tag != "class":
            raise ParseError(f"expected a class line, got {tag!r}", lineno)
        try:
            class_id = int(cid_tok)
        except ValueError:
            raise ParseError(f"bad class id {cid_tok!r}", lineno) from None
        if class_id < 0:
            raise ParseError(f"negative class id {class_id}", lineno)
        if class_id in seen:
            raise ParseError(f"duplicate class id {class_id}", lineno)
        seen.add(class_id)

        rotation = scale = twist = shear = None
        for kind in kinds:
            (tok,) = _take(tokens, 1, lineno, "kind token")
            if tok != kind:
                raise ParseError(f"expected kind token {kind!r}, got {tok!r}", lineno)
            if kind == "R":
                vals = _take(tokens, 3, lineno, "rotation parameters")
                rotation = tuple(_parse_float(v, lineno, "rotation angle") for v in vals)
            elif kind == "S":
                (v,) = _take(tokens, 1, lineno, "scaling parameter")
                scale = _parse_float(v, lineno, "scaling factor")
            elif kind == "W":
                (v,) = _take(tokens, 1, lineno, "twist parameter")
                twist = _parse_float(v, lineno, "twist angle")
            elif kind == "H":
                plane, s_tok, t_tok = _take(tokens, 3, lineno, "shear parameters")
                if plane not in ("xy", "xz", "yz"):
                    raise ParseError(f"unknown shear plane {plane!r}", lineno)
                shear = (plane, _parse_float(s_tok, lineno, "shear coefficient"),
                         _parse_float(t_tok, lineno, "shear coefficient"))
        if tokens:
            raise ParseError(f"trailing tokens: {' '.join(tokens)!r}", lineno)
        assignments.append(
            ClassAssignment(class_id=class_id, rotation_deg=rotation, scale=scale,
                            twist_deg=twist, shear=shear)
        )
    return ProtectionMessage(kinds=kinds, assignments=tuple(assignments))
