"""Corpus bookkeeping: manifests, imagegroups, and the group-aware 70-30 split.

The manifest is a UTF-8 CSV with header ``image_id,path,class_id,imagegroup_id``
and LF line endings.  Paths are stored relative to the manifest file and
resolved against its directory on load.  Split assignments persist as a CSV
with header ``image_id,split`` where split is ``train`` or ``test``.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ManifestParseError, ManifestValidationError
from .seeding import derive_seed

CLASS_NAMES = {
    0: "Assault Rifle",
    1: "Revolver",
    2: "Self-Loading Pistol",
    3: "Shotgun",
    4: "Sub-Machine Gun",
}
NUM_CLASSES = len(CLASS_NAMES)

MANIFEST_HEADER = ["image_id", "path", "class_id", "imagegroup_id"]
SPLIT_HEADER = ["image_id", "split"]


@dataclass(frozen=True)
class ClassLabel:
    """One of the five weapon categories; id and name are a fixed bijection."""

    id: int
    name: str

    def __post_init__(self) -> None:
        if CLASS_NAMES.get(self.id) != self.name:
            raise ValueError(f"unknown class ({self.id}, {self.name!r})")

    @classmethod
    def from_id(cls, class_id: int) -> "ClassLabel":
        if class_id not in CLASS_NAMES:
            raise ValueError(f"unknown class id {class_id}")
        return cls(id=class_id, name=CLASS_NAMES[class_id])


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    path: str
    class_id: int
    imagegroup_id: str


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.image_id: r for r in self.records}

    def groups(self) -> dict[str, list[ImageRecord]]:
        out: dict[str, list[ImageRecord]] = defaultdict(list)
        for r in self.records:
            out[r.imagegroup_id].append(r)
        return dict(out)

    def class_counts(self) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        for r in self.records:
            out[r.class_id] += 1
        return dict(out)


@dataclass(frozen=True)
class SplitAssignment:
    train: frozenset[str]
    test: frozenset[str]
    seed: int
    ratio: float
    degenerate_classes: tuple[int, ...] = field(default=())


def validate_manifest(records: list[ImageRecord], source: str = "") -> DatasetManifest:
    """Check uniqueness and group-class coherence, returning the manifest."""
    seen: set[str] = set()
    group_class: dict[str, int] = {}
    for rec in records:
        if rec.image_id in seen:
            raise ManifestValidationError(f"duplicate image_id {rec.image_id!r}")
        seen.add(rec.image_id)
        if rec.class_id not in CLASS_NAMES:
            raise ManifestValidationError(
                f"record {rec.image_id!r} has unknown class id {rec.class_id}"
            )
        prev = group_class.setdefault(rec.imagegroup_id, rec.class_id)
        if prev != rec.class_id:
            raise ManifestValidationError(
                f"imagegroup {rec.imagegroup_id!r} mixes classes {prev} and {rec.class_id}"
            )
    return DatasetManifest(records=tuple(records), source=source)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest CSV; relative paths resolve against it."""
    path = Path(path)
    base = path.parent
    records: list[ImageRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestParseError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ManifestParseError(
                f"{path}: line 1: expected header {','.join(MANIFEST_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ManifestParseError(
                    f"{path}: line {lineno}: expected 4 columns, got {len(row)}"
                )
            image_id, rel, class_id, group = row
            try:
                cid = int(class_id)
            except ValueError:
                raise ManifestParseError(
                    f"{path}: line {lineno}: class_id {class_id!r} is not an integer"
                ) from None
            resolved = rel if Path(rel).is_absolute() else str(base / rel)
            records.append(
                ImageRecord(image_id=image_id, path=resolved, class_id=cid, imagegroup_id=group)
            )
    return validate_manifest(records, source=str(path))


def save_manifest(path: str | Path, rows: list[tuple[str, str, int, str]]) -> None:
    """Write manifest rows (image_id, relative path, class_id, imagegroup_id)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow(row)


def stratified_group_split(
    manifest: DatasetManifest, ratio: float = 0.7, seed: int = 0
) -> SplitAssignment:
    """Assign whole imagegroups to train/test, per class, close to ``ratio``.

    Per class the groups are shuffled with a seed-derived stream and added
    greedily to the train side while doing so keeps the achieved train
    fraction at least as close to ``ratio`` as stopping would; the remainder
    goes to test.  A class with a single group cannot populate both sides:
    it is placed entirely in train and reported as degenerate.
    """
    if len(manifest) == 0:
        raise ManifestValidationError("cannot split an empty manifest")
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")

    per_class: dict[int, dict[str, list[str]]] = defaultdict(lambda: defaultdict(list))
    for rec in manifest.records:
        per_class[rec.class_id][rec.imagegroup_id].append(rec.image_id)

    train: set[str] = set()
    test: set[str] = set()
    degenerate: list[int] = []
    for class_id in sorted(per_class):
        groups = sorted(per_class[class_id].items())
        if len(groups) == 1:
            degenerate.append(class_id)
            train.update(groups[0][1])
            continue
        rng = np.random.default_rng(derive_seed(seed, f"split/class{class_id}"))
        order = rng.permutation(len(groups))
        total = sum(len(ids) for _, ids in groups)
        in_train = 0
        stopped = False
        for idx in order:
            ids = groups[idx][1]
            if stopped:
                test.update(ids)
                continue
            d_stop = abs(in_train / total - ratio)
            d_add = abs((in_train + len(ids)) / total - ratio)
            if d_add > d_stop:
                stopped = True
                test.update(ids)
            else:
                train.update(ids)
                in_train += len(ids)
    return SplitAssignment(
        train=frozenset(train),
        test=frozenset(test),
        seed=seed,
        ratio=ratio,
        degenerate_classes=tuple(degenerate),
    )


class StratifiedGroupRatioSplit(BaseEstimator):
    """Single-shot group-atomic stratified splitter with a scikit-learn API.

    ``split(X, y, groups)`` yields one ``(train_indices, test_indices)`` pair
    using the same greedy per-class rule as :func:`stratified_group_split`.
    """

    def __init__(self, train_size: float = 0.7, random_state: int = 0):
        self.train_size = train_size
        self.random_state = random_state

    def get_n_splits(self, X=None, y=None, groups=None) -> int:
        return 1

    def split(self, X, y, groups):
        y = np.asarray(y)
        groups = np.asarray(groups)
        if len(y) != len(groups):
            raise ValueError("y and groups must have equal length")
        records = [
            ImageRecord(image_id=str(i), path="", class_id=int(c), imagegroup_id=str(g))
            for i, (c, g) in enumerate(zip(y, groups))
        ]
        manifest = validate_manifest(records)
        assignment = stratified_group_split(
            manifest, ratio=self.train_size, seed=self.random_state
        )
        train_idx = np.array(sorted(int(i) for i in assignment.train), dtype=np.intp)
        test_idx = np.array(sorted(int(i) for i in assignment.test), dtype=np.intp)
        yield train_idx, test_idx


def split_report(assignment: SplitAssignment, manifest: DatasetManifest) -> dict:
    """Per-class counts, achieved ratios, and the bisection check for a split."""
    per_class: dict[int, dict[str, int]] = {
        c: {"train": 0, "test": 0} for c in sorted(manifest.class_counts())
    }
    for rec in manifest.records:
        side = "train" if rec.image_id in assignment.train else "test"
        per_class[rec.class_id][side] += 1

    bisected = []
    train_groups = 0
    test_groups = 0
    for group_id, members in sorted(manifest.groups().items()):
        sides = {("train" if m.image_id in assignment.train else "test") for m in members}
        if len(sides) > 1:
            bisected.append(group_id)
        elif sides == {"train"}:
            train_groups += 1
        else:
            test_groups += 1

    warnings = []
    classes = {}
    for class_id, counts in per_class.items():
        total = counts["train"] + counts["test"]
        achieved = counts["train"] / total if total else 0.0
        if counts["test"] == 0:
            warnings.append(f"WARN class {class_id}: test side empty (achieved ratio 1.0)")
        classes[str(class_id)] = {
            "name": CLASS_NAMES[class_id],
            "train": counts["train"],
            "test": counts["test"],
            "achieved_ratio": achieved,
        }
    return {
        "ratio": assignment.ratio,
        "seed": assignment.seed,
        "train_total": len(assignment.train),
        "test_total": len(assignment.test),
        "classes": classes,
        "bisected_groups": bisected,
        "train_groups": train_groups,
        "test_groups": test_groups,
        "degenerate_classes": list(assignment.degenerate_classes),
        "warnings": warnings,
    }


def save_split(path: str | Path, assignment: SplitAssignment) -> None:
    """Persist a split assignment as ``image_id,split`` rows (sorted by id)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [(i, "train") for i in assignment.train] + [(i, "test") for i in assignment.test]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPLIT_HEADER)
        for image_id, side in sorted(rows):
            writer.writerow([image_id, side])


def load_split(path: str | Path, manifest: DatasetManifest) -> dict[str, str]:
    """Load an ``image_id,split`` CSV and check it partitions the manifest."""
    path = Path(path)
    sides: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SPLIT_HEADER:
            raise ManifestParseError(f"{path}: line 1: expected header image_id,split")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or row[1] not in ("train", "test"):
                raise ManifestParseError(f"{path}: line {lineno}: malformed split row")
            if row[0] in sides:
                raise ManifestValidationError(f"{path}: duplicate image_id {row[0]!r}")
            sides[row[0]] = row[1]
    ids = {r.image_id for r in manifest.records}
    missing = ids - sides.keys()
    unknown = sides.keys() - ids
    if missing:
        raise ManifestValidationError(f"split is missing ids: {sorted(missing)[:5]}")
    if unknown:
        raise ManifestValidationError(f"split has unknown ids: {sorted(unknown)[:5]}")
    return sides


def check_group_atomicity(sides: dict[str, str], manifest: DatasetManifest) -> list[str]:
    """Return the ids of imagegroups whose members straddle the split boundary."""
    bisected = []
    for group_id, members in sorted(manifest.groups().items()):
        if len({sides[m.image_id] for m in members}) > 1:
            bisected.append(group_id)
    return bisected
