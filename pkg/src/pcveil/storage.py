"""On-disk dataset representation.

Two line-oriented text formats:

* point file — one point per line, three decimal numbers separated by single
  spaces; the writer emits 17 significant digits so values round-trip
  bit-exactly, the reader accepts any finite decimal or scientific notation.
* manifest — one ``<class_id> <relative_path>`` entry per line; blank lines
  and ``#`` comments are ignored on read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pcveil.errors import InvalidParameterError, ParseError
from pcveil.pipeline import LabeledDataset
from pcveil.transforms import as_cloud


def write_points(cloud, path) -> None:
    arr = as_cloud(cloud)
    lines = [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in arr]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_points(path) -> np.ndarray:
    points = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            fields = raw.split()
            if len(fields) != 3:
                raise ParseError(f"expected 3 coordinates, got {len(fields)}", lineno)
            row = []
            for field in fields:
                try:
                    value = float(field)
                except ValueError:
                    raise ParseError(f"bad coordinate {field!r}", lineno) from None
                if not math.isfinite(value):
                    raise ParseError(f"non-finite coordinate {field!r}", lineno)
                row.append(value)
            points.append(row)
    if not points:
        raise ParseError(f"no points in {path}", 1)
    return np.array(points, dtype=np.float64)


@dataclass(frozen=True)
class Manifest:
    """Ordered (class_id, relative_path) entries describing a dataset."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        seen = set()
        for class_id, rel in self.entries:
            if class_id < 0:
                raise InvalidParameterError(f"negative class id {class_id} for {rel!r}")
            if not rel:
                raise InvalidParameterError("empty sample path")
            if rel in seen:
                raise InvalidParameterError(f"duplicate sample path {rel!r}")
            seen.add(rel)

    def class_ids(self) -> list[int]:
        return sorted({cid for cid, _ in self.entries})


def write_manifest(manifest: Manifest, path) -> None:
    lines = [f"{cid} {rel}" for cid, rel in manifest.entries]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")


def read_manifest(path) -> Manifest:
    entries = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(maxsplit=1)
            if len(fields) != 2:
                raise ParseError("expected '<class_id> <relative_path>'", lineno)
            try:
                class_id = int(fields[0])
            except ValueError:
                raise ParseError(f"bad class id {fields[0]!r}", lineno) from None
            if class_id < 0:
                raise ParseError(f"negative class id {class_id}", lineno)
            rel = fields[1]
            if rel in seen:
                raise ParseError(f"duplicate sample path {rel!r} (first at line {seen[rel]})", lineno)
            seen[rel] = lineno
            entries.append((class_id, rel))
    return Manifest(tuple(entries))


def normalize_class_ids(manifest: Manifest) -> tuple[Manifest, dict[int, int]]:
    """Remap class ids onto the contiguous range 0..N-1.

    Returns the remapped manifest and the applied old->new mapping (identity
    when the ids were already contiguous from zero).
    """
    ids = manifest.class_ids()
    mapping = {old: new for new, old in enumerate(ids)}
    if all(old == new for old, new in mapping.items()):
        return manifest, mapping
    remapped = tuple((mapping[cid], rel) for cid, rel in manifest.entries)
    return Manifest(remapped), mapping


def load_dataset(manifest_path) -> tuple[LabeledDataset, Manifest, dict[int, int]]:
    """Read a manifest and all point files it references.

    Sample paths are resolved relative to the manifest's directory; class
    ids are normalized to 0..N-1 and the applied mapping is returned.
    """
    manifest_path = Path(manifest_path)
    manifest, mapping = normalize_class_ids(read_manifest(manifest_path))
    base = manifest_path.parent
    samples = [(read_points(base / rel), cid) for cid, rel in manifest.entries]
    return LabeledDataset(samples), manifest, mapping


def save_dataset(dataset: LabeledDataset, manifest: Manifest, out_dir, manifest_name: str = "manifest.txt") -> None:
    """Write point files at the manifest's relative paths plus the manifest."""
    if len(dataset) != len(manifest.entries):
        raise InvalidParameterError(
            f"dataset has {len(dataset)} samples but manifest lists {len(manifest.entries)}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for (cloud, label), (class_id, rel) in zip(dataset.samples, manifest.entries):
        if label != class_id:
            raise InvalidParameterError(f"label {label} does not match manifest class {class_id} for {rel!r}")
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        write_points(cloud, target)
    write_manifest(manifest, out_dir / manifest_name)
