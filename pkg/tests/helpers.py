"""Shared test utilities: toy datasets, on-disk fixtures, directory digests."""

import hashlib
from pathlib import Path

import numpy as np

from pcveil.pipeline import LabeledDataset
from pcveil.storage import Manifest, save_dataset


def toy_dataset(n_classes=3, samples_per_class=2, n_points=20, seed=99) -> LabeledDataset:
    """Small dataset with coordinates in [0.1, 0.9) (safe for every family)."""
    rng = np.random.default_rng(seed)
    samples = []
    for cid in range(n_classes):
        for _ in range(samples_per_class):
            samples.append((0.1 + 0.8 * rng.random((n_points, 3)), cid))
    return LabeledDataset(samples)


def toy_manifest(dataset: LabeledDataset) -> Manifest:
    entries = []
    counters = {}
    for _, cid in dataset.samples:
        k = counters.get(cid, 0)
        counters[cid] = k + 1
        entries.append((cid, f"c{cid}/s{k}.txt"))
    return Manifest(tuple(entries))


def write_toy_dataset(directory, **kwargs) -> Path:
    """Materialize a toy dataset on disk; returns the manifest path."""
    dataset = toy_dataset(**kwargs)
    manifest = toy_manifest(dataset)
    save_dataset(dataset, manifest, directory)
    return Path(directory) / "manifest.txt"


def dir_digest(directory) -> dict[str, str]:
    """Relative path -> sha256 of every file under ``directory``."""
    directory = Path(directory)
    out = {}
    for path in sorted(directory.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(directory))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out
