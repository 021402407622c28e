"""Detection label handling: COCO and YOLO formats, split lists, box statistics."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# COCO object-size bucket edges (area in px^2)
SMALL_MAX = 32**2
MEDIUM_MAX = 96**2
TINY_SIDE = 14


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class ImageInfo:
    id: int
    file_name: str
    width: int | None = None
    height: int | None = None


@dataclass(frozen=True)
class Annotation:
    image_id: int
    bbox: tuple  # x, y, w, h in pixels
    category_id: int
    id: int | None = None

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]


@dataclass
class AnnotationSet:
    images: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    categories: list = field(default_factory=list)  # (id, name)

    def __post_init__(self):
        ids = {im.id for im in self.images}
        for ann in self.annotations:
            if ann.image_id not in ids:
                raise LabelError(f"annotation references unknown image_id {ann.image_id}")

    def image_by_name(self) -> dict:
        return {im.file_name: im for im in self.images}

    def annotations_by_image(self) -> dict:
        out = {im.id: [] for im in self.images}
        for ann in self.annotations:
            out[ann.image_id].append(ann)
        return out

    def subset(self, names) -> "AnnotationSet":
        by_name = self.image_by_name()
        images = [by_name[n] for n in names]
        keep = {im.id for im in images}
        anns = [a for a in self.annotations if a.image_id in keep]
        return AnnotationSet(images, anns, list(self.categories))


def clamp_bbox(bbox, width, height) -> tuple:
    """Clip an ``(x, y, w, h)`` box to the image rectangle."""
    x, y, w, h = bbox
    if width is None or height is None:
        return (x, y, w, h)
    x0, y0 = max(0.0, x), max(0.0, y)
    x1, y1 = min(float(width), x + w), min(float(height), y + h)
    return (x0, y0, x1 - x0, y1 - y0)


# --- COCO ------------------------------------------------------------------


def parse_coco(obj: dict | str | os.PathLike) -> AnnotationSet:
    """Load a COCO detection file (or an already-decoded dict)."""
    if not isinstance(obj, dict):
        with open(obj) as f:
            obj = json.load(f)
    for key in ("images", "annotations", "categories"):
        if key not in obj:
            raise LabelError(f"missing required field {key!r}")
    images = []
    for im in obj["images"]:
        try:
            images.append(ImageInfo(int(im["id"]), str(im["file_name"]), im.get("width"), im.get("height")))
        except KeyError as exc:
            raise LabelError(f"image entry missing {exc.args[0]!r}") from None
    sizes = {im.id: (im.width, im.height) for im in images}
    annotations = []
    for ann in obj["annotations"]:
        try:
            image_id = int(ann["image_id"])
            bbox = tuple(float(v) for v in ann["bbox"])
            cat = int(ann["category_id"])
        except KeyError as exc:
            raise LabelError(f"annotation missing {exc.args[0]!r}") from None
        if image_id not in sizes:
            raise LabelError(f"annotation references unknown image_id {image_id}")
        if len(bbox) != 4:
            raise LabelError(f"bbox must have 4 values, got {bbox}")
        bbox = clamp_bbox(bbox, *sizes[image_id])
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise LabelError(f"degenerate bbox {bbox} on image {image_id}")
        annotations.append(Annotation(image_id, bbox, cat, ann.get("id")))
    categories = [(int(c["id"]), str(c.get("name", c["id"]))) for c in obj["categories"]]
    return AnnotationSet(images, annotations, categories)


def to_coco(aset: AnnotationSet) -> dict:
    anns = []
    for k, a in enumerate(aset.annotations, start=1):
        anns.append(
            {
                "id": a.id if a.id is not None else k,
                "image_id": a.image_id,
                "category_id": a.category_id,
                "bbox": list(a.bbox),
                "area": a.area,
                "iscrowd": 0,
            }
        )
    images = []
    for im in aset.images:
        entry = {"id": im.id, "file_name": im.file_name}
        if im.width is not None:
            entry["width"], entry["height"] = im.width, im.height
        images.append(entry)
    return {
        "images": images,
        "annotations": anns,
        "categories": [{"id": cid, "name": name} for cid, name in aset.categories],
    }


def write_coco(aset: AnnotationSet, path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        json.dump(to_coco(aset), f, indent=1)


# --- YOLO ------------------------------------------------------------------


def read_size_index(path: str | os.PathLike) -> list[tuple[str, int, int]]:
    """Read the ``name,width,height`` CSV that gives YOLO labels a resolution."""
    rows = []
    with open(path, newline="") as f:
        for row in csv.reader(f):
            if not row or row[0].startswith("#") or row[0] == "name":
                continue
            if len(row) != 3:
                raise LabelError(f"{path}: expected name,width,height, got {row}")
            rows.append((row[0], int(row[1]), int(row[2])))
    return rows


def write_size_index(aset: AnnotationSet, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["name", "width", "height"])
        for im in aset.images:
            w.writerow([im.file_name, im.width, im.height])


def parse_yolo(label_dir: str | os.PathLike, size_index) -> AnnotationSet:
    """Load YOLO ``class cx cy w h`` label files.

    ``size_index`` is a path to a ``name,width,height`` CSV or a list of such
    tuples; it fixes the image universe and ordering.  Class ``k`` becomes
    category id ``k + 1``; names come from ``classes.txt`` when present.
    Images without a label file have no annotations.
    """
    label_dir = Path(label_dir)
    if not isinstance(size_index, list):
        size_index = read_size_index(size_index)
    images, annotations = [], []
    classes_seen = set()
    for image_id, (name, width, height) in enumerate(size_index, start=1):
        images.append(ImageInfo(image_id, name, width, height))
        label_path = label_dir / (Path(name).stem + ".txt")
        if not label_path.exists():
            continue
        with open(label_path) as f:
            for lineno, line in enumerate(f, start=1):
                parts = line.split()
                if not parts:
                    continue
                where = f"{label_path}:{lineno}"
                if len(parts) != 5:
                    raise LabelError(f"{where}: expected 5 fields, got {len(parts)}")
                try:
                    cls = int(parts[0])
                    cx, cy, bw, bh = (float(v) for v in parts[1:])
                except ValueError:
                    raise LabelError(f"{where}: non-numeric field") from None
                if cls < 0 or not all(0.0 <= v <= 1.0 for v in (cx, cy, bw, bh)):
                    raise LabelError(f"{where}: value out of range")
                bbox = ((cx - bw / 2) * width, (cy - bh / 2) * height, bw * width, bh * height)
                bbox = clamp_bbox(bbox, width, height)
                if bbox[2] <= 0 or bbox[3] <= 0:
                    raise LabelError(f"{where}: degenerate box")
                classes_seen.add(cls)
                annotations.append(Annotation(image_id, bbox, cls + 1, len(annotations) + 1))
    names_path = label_dir / "classes.txt"
    if names_path.exists():
        names = [ln.strip() for ln in names_path.read_text().splitlines() if ln.strip()]
        categories = [(k + 1, n) for k, n in enumerate(names)]
    else:
        categories = [(k + 1, str(k)) for k in sorted(classes_seen)]
    return AnnotationSet(images, annotations, categories)


def write_yolo(aset: AnnotationSet, label_dir: str | os.PathLike, size_index_path=None) -> None:
    """Write one ``<stem>.txt`` per image plus ``classes.txt``.

    Category ids are expected to be 1-based and contiguous so that YOLO
    class ``id - 1`` maps back unchanged.
    """
    label_dir = Path(label_dir)
    label_dir.mkdir(parents=True, exist_ok=True)
    by_image = aset.annotations_by_image()
    for im in aset.images:
        if im.width is None or im.height is None:
            raise LabelError(f"image {im.file_name!r} has no recorded dimensions")
        lines = []
        for a in by_image[im.id]:
            x, y, w, h = a.bbox
            cx, cy = (x + w / 2) / im.width, (y + h / 2) / im.height
            lines.append(
                f"{a.category_id - 1} {cx:.8f} {cy:.8f} {w / im.width:.8f} {h / im.height:.8f}\n"
            )
        (label_dir / (Path(im.file_name).stem + ".txt")).write_text("".join(lines))
    names = dict(aset.categories)
    top = max(names, default=0)
    (label_dir / "classes.txt").write_text(
        "".join(f"{names.get(k, k)}\n" for k in range(1, top + 1))
    )
    if size_index_path is not None:
        write_size_index(aset, size_index_path)


def convert(aset: AnnotationSet, target: str, out) -> None:
    """Write ``aset`` as ``coco`` (a JSON path) or ``yolo`` (a directory)."""
    if target == "coco":
        write_coco(aset, out)
    elif target == "yolo":
        write_yolo(aset, out, Path(out) / "sizes.csv")
    else:
        raise ValueError(f"unknown label format {target!r}")


# --- splits ----------------------------------------------------------------


@dataclass(frozen=True)
class SplitLists:
    train: tuple = ()
    val: tuple = ()
    test: tuple = ()

    def __post_init__(self):
        seen = Counter([*self.train, *self.val, *self.test])
        dup = sorted(n for n, c in seen.items() if c > 1)
        if dup:
            raise LabelError(f"split lists not disjoint: {dup[:5]}")

    @classmethod
    def from_files(cls, train=None, val=None, test=None) -> "SplitLists":
        return cls(*(tuple(read_name_list(p)) if p else () for p in (train, val, test)))


def read_name_list(path: str | os.PathLike) -> list[str]:
    with open(path) as f:
        return [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]


def write_name_list(names, path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        f.writelines(f"{n}\n" for n in names)


def apply_split(aset: AnnotationSet, lists: SplitLists) -> dict:
    """Partition ``aset`` by file name into ``{"train", "val", "test"}`` sets."""
    known = aset.image_by_name()
    out = {}
    for part in ("train", "val", "test"):
        names = getattr(lists, part)
        missing = [n for n in names if n not in known]
        if missing:
            raise LabelError(f"{part} list names {len(missing)} unknown image(s), e.g. {missing[0]!r}")
        out[part] = aset.subset(names)
    return out


# --- statistics ------------------------------------------------------------


@dataclass
class BoxStats:
    count: int
    bucket_counts: dict  # small / medium / large
    tiny_count: int  # area < 14^2
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    pearson_r: float  # area vs. vertical box centre
    labels_per_image: dict  # label count -> number of images
    areas: np.ndarray = field(repr=False, default=None)
    y_centers: np.ndarray = field(repr=False, default=None)


def size_bucket(area: float) -> str:
    if area < SMALL_MAX:
        return "small"
    if area < MEDIUM_MAX:
        return "medium"
    return "large"


def box_stats(aset: AnnotationSet, bins: int = 20) -> BoxStats:
    if not aset.annotations:
        raise LabelError("box statistics need at least one annotation")
    areas = np.array([a.area for a in aset.annotations], dtype=float)
    yc = np.array([a.bbox[1] + a.bbox[3] / 2 for a in aset.annotations], dtype=float)
    buckets = Counter(size_bucket(a) for a in areas)
    lo, hi = areas.min(), areas.max()
    if hi <= lo:
        hi = lo * 2
    edges = np.geomspace(lo, hi, bins + 1)
    counts, _ = np.histogram(areas, bins=edges)
    if len(areas) > 1 and areas.std() > 0 and yc.std() > 0:
        r = float(np.corrcoef(areas, yc)[0, 1])
    else:
        r = math.nan
    per_image = Counter(len(v) for v in aset.annotations_by_image().values())
    return BoxStats(
        count=len(areas),
        bucket_counts={k: buckets.get(k, 0) for k in ("small", "medium", "large")},
        tiny_count=int(np.sum(areas < TINY_SIDE**2)),
        hist_edges=edges,
        hist_counts=counts,
        pearson_r=r,
        labels_per_image=dict(sorted(per_image.items())),
        areas=areas,
        y_centers=yc,
    )


def write_stats_csv(stats: BoxStats, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "value"])
        w.writerow(["count", stats.count])
        for k, v in stats.bucket_counts.items():
            w.writerow([f"bucket_{k}", v])
        w.writerow([f"area_below_{TINY_SIDE}sq", stats.tiny_count])
        w.writerow(["pearson_area_ycenter", f"{stats.pearson_r:.6f}"])
        for n, c in stats.labels_per_image.items():
            w.writerow([f"images_with_{n}_labels", c])
        for lo, hi, c in zip(stats.hist_edges[:-1], stats.hist_edges[1:], stats.hist_counts):
            w.writerow([f"area_bin_{lo:.1f}_{hi:.1f}", int(c)])
