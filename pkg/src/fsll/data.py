"""Data plumbing: synthetic Gaussian-cluster corpora, delimited file IO, and
quarter-turn rotation of grid-shaped samples.

File format: UTF-8 delimited text, one sample per line, integer class label
in the first column and float features after it. An optional single header
line is auto-detected (first field not parseable as a number) and skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ShapeError

Array = np.ndarray

log = logging.getLogger("fsll.data")


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-cluster corpus: one isotropic cluster per class, cluster
    centers themselves drawn from a wider Gaussian."""
    num_classes: int
    dim: int
    train_per_class: int
    test_per_class: int
    center_scale: float = 3.0
    noise: float = 1.0
    seed: int = 0
    grid_size: int | None = None

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("per-class sample counts must be >= 1")
        if self.center_scale <= 0 or self.noise <= 0:
            raise ValueError("center_scale and noise must be positive")
        if self.grid_size is not None and self.grid_size ** 2 != self.dim:
            raise ValueError(f"grid_size {self.grid_size} does not square to dim {self.dim}")


@dataclass(frozen=True)
class Dataset:
    """One labelled table. Labels are contiguous ints from 0; grid_size is
    set when rows are flattened square grids."""
    features: Array
    labels: Array
    grid_size: int | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        if feats.ndim != 2:
            raise ShapeError(f"features must be 2-d, got shape {feats.shape}")
        if labs.shape != (feats.shape[0],):
            raise ShapeError("labels must align with feature rows")
        if feats.shape[0] == 0:
            raise ValueError("dataset has no rows")
        present = np.unique(labs)
        if present[0] != 0 or present[-1] != present.size - 1:
            raise ValueError("labels must be contiguous integers starting at 0")
        if self.grid_size is not None and self.grid_size ** 2 != feats.shape[1]:
            raise ShapeError(f"grid_size {self.grid_size} does not square to "
                             f"feature dim {feats.shape[1]}")

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def per_class_counts(self) -> dict[int, int]:
        return {int(lab): int((self.labels == lab).sum())
                for lab in np.unique(self.labels)}

    def rows_of(self, label: int) -> Array:
        return self.features[self.labels == int(label)]


@dataclass(frozen=True)
class Corpus:
    train: Dataset
    test: Dataset

    def __post_init__(self):
        if self.train.dim != self.test.dim:
            raise ShapeError("train and test feature dimensions differ")
        if self.train.grid_size != self.test.grid_size:
            raise ShapeError("train and test grid structure differ")


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Deterministic under spec.seed. Train and test rows come from disjoint
    draws of the same per-class clusters."""
    rng = np.random.default_rng(spec.seed)
    centers = rng.normal(0.0, spec.center_scale, size=(spec.num_classes, spec.dim))
    train_rows, train_labs, test_rows, test_labs = [], [], [], []
    for c in range(spec.num_classes):
        train_rows.append(centers[c] + rng.normal(0.0, spec.noise,
                                                  size=(spec.train_per_class, spec.dim)))
        train_labs.append(np.full(spec.train_per_class, c, dtype=np.int64))
        test_rows.append(centers[c] + rng.normal(0.0, spec.noise,
                                                 size=(spec.test_per_class, spec.dim)))
        test_labs.append(np.full(spec.test_per_class, c, dtype=np.int64))
    train = Dataset(np.concatenate(train_rows), np.concatenate(train_labs), spec.grid_size)
    test = Dataset(np.concatenate(test_rows), np.concatenate(test_labs), spec.grid_size)
    return Corpus(train, test)


# ---------------------------------------------------------------------------
# delimited IO

def load_delimited(path, delimiter: str = ",", grid_size: int | None = None) -> Dataset:
    """Parse a delimited sample file. Errors carry 1-based line numbers.
    Non-contiguous labels are remapped to 0..C-1 in ascending order, with a
    warning."""
    rows: list[list[float]] = []
    labels: list[int] = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(delimiter)]
            if width is None and not _is_number(fields[0]):
                continue  # header
            if width is None:
                width = len(fields)
            if len(fields) != width:
                raise DataFormatError(f"{path}: line {lineno}: expected {width} "
                                      f"columns, got {len(fields)}")
            try:
                raw_label = float(fields[0])
                values = [float(f) for f in fields[1:]]
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
            if raw_label != int(raw_label):
                raise DataFormatError(f"{path}: line {lineno}: label {fields[0]} "
                                      "is not an integer")
            labels.append(int(raw_label))
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    labs = np.array(labels, dtype=np.int64)
    present = np.unique(labs)
    if present[0] != 0 or present[-1] != present.size - 1:
        remap = {int(old): new for new, old in enumerate(present)}
        log.warning("%s: labels %s are not contiguous from 0, remapping", path,
                    present.tolist())
        labs = np.array([remap[int(l)] for l in labs], dtype=np.int64)
    return Dataset(np.array(rows, dtype=np.float64), labs, grid_size)


def write_delimited(dataset: Dataset, path, delimiter: str = ",") -> None:
    """Inverse of load_delimited: float features via repr survive the round
    trip bit-exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        header = ["label"] + [f"f{i}" for i in range(dataset.dim)]
        fh.write(delimiter.join(header) + "\n")
        for label, row in zip(dataset.labels, dataset.features):
            fields = [str(int(label))] + [repr(float(v)) for v in row]
            fh.write(delimiter.join(fields) + "\n")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# rotation pretext transforms

def rotate_grid(sample: Array, quarter_turns: int) -> Array:
    """Rotate a square 2-d array counter-clockwise by 90 degrees
    ``quarter_turns`` times."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim != 2 or sample.shape[0] != sample.shape[1]:
        raise ShapeError(f"rotation needs a square grid, got shape {sample.shape}")
    if quarter_turns not in (0, 1, 2, 3):
        raise ValueError("quarter_turns must be in {0, 1, 2, 3}")
    return np.rot90(sample, quarter_turns).copy()


def rotate_flat_batch(features: Array, grid_size: int, quarter_turns) -> Array:
    """Rotate each flattened-grid row by its own quarter-turn count."""
    features = np.asarray(features, dtype=np.float64)
    ks = np.asarray(quarter_turns)
    if features.ndim != 2 or features.shape[1] != grid_size ** 2:
        raise ShapeError(f"rows of shape {features.shape} are not flattened "
                         f"{grid_size}x{grid_size} grids")
    if ks.shape != (features.shape[0],):
        raise ShapeError("one quarter-turn count is needed per row")
    grids = features.reshape(-1, grid_size, grid_size)
    out = np.empty_like(grids)
    for k in range(4):
        sel = ks == k
        if sel.any():
            out[sel] = np.rot90(grids[sel], k, axes=(1, 2))
    return out.reshape(features.shape[0], grid_size ** 2)
