"""COCO-style bounding-box evaluation written from scratch.

Conventions: IoU thresholds 0.50:0.05:0.95, 101-point interpolated
precision, at most 100 detections per image, size buckets split at 32^2 and
96^2 px.  Metrics with no ground truth to score against are reported as -1.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import MEDIUM_MAX, SMALL_MAX, AnnotationSet

IOU_THRESHOLDS = np.linspace(0.5, 0.95, 10)
RECALL_POINTS = np.linspace(0.0, 1.0, 101)
MAX_DETS = 100
AREA_RANGES = {
    "all": (0.0, math.inf),
    "small": (0.0, float(SMALL_MAX)),
    "medium": (float(SMALL_MAX), float(MEDIUM_MAX)),
    "large": (float(MEDIUM_MAX), math.inf),
}
UNDEFINED = -1.0


@dataclass(frozen=True)
class Detection:
    image_id: int
    bbox: tuple
    score: float
    category_id: int = 1

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score on image {self.image_id}")
        if len(self.bbox) != 4 or self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValueError(f"detection bbox {self.bbox} must have positive area")


def load_detections(path_or_list) -> list[Detection]:
    """Read a predictions JSON array of ``{image_id, category_id, bbox, score}``."""
    if isinstance(path_or_list, (str, os.PathLike)):
        with open(path_or_list) as f:
            path_or_list = json.load(f)
    return [
        Detection(int(d["image_id"]), tuple(float(v) for v in d["bbox"]), float(d["score"]),
                  int(d.get("category_id", 1)))
        for d in path_or_list
    ]


def iou(a, b) -> float:
    """Intersection over union of two ``(x, y, w, h)`` boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def iou_matrix(dets, gts) -> np.ndarray:
    """Pairwise IoU, shape ``(len(dets), len(gts))``."""
    if len(dets) == 0 or len(gts) == 0:
        return np.zeros((len(dets), len(gts)))
    d = np.asarray(dets, dtype=float)
    g = np.asarray(gts, dtype=float)
    x0 = np.maximum(d[:, None, 0], g[None, :, 0])
    y0 = np.maximum(d[:, None, 1], g[None, :, 1])
    x1 = np.minimum(d[:, None, 0] + d[:, None, 2], g[None, :, 0] + g[None, :, 2])
    y1 = np.minimum(d[:, None, 1] + d[:, None, 3], g[None, :, 1] + g[None, :, 3])
    inter = np.clip(x1 - x0, 0, None) * np.clip(y1 - y0, 0, None)
    union = (d[:, 2] * d[:, 3])[:, None] + (g[:, 2] * g[:, 3])[None, :] - inter
    return inter / union


def _greedy(ious: np.ndarray, thr: float, gt_ignore: np.ndarray) -> np.ndarray:
    """Match score-sorted detections (rows) to GT (columns, non-ignored first).

    A detection takes the unmatched GT with the highest IoU >= thr; equal
    IoUs go to the lower GT index.  Once a real GT is matched, ignored GT are
    not considered.  Returns the matched column per row or -1.
    """
    thr = min(thr, 1 - 1e-10)
    n_det, n_gt = ious.shape
    taken = np.zeros(n_gt, dtype=bool)
    out = np.full(n_det, -1, dtype=int)
    for d in range(n_det):
        best, m = thr, -1
        for g in range(n_gt):
            if taken[g]:
                continue
            if m > -1 and not gt_ignore[m] and gt_ignore[g]:
                break
            v = ious[d, g]
            if v < best or (m > -1 and v == best):
                continue
            best, m = v, g
        if m > -1:
            taken[m] = True
            out[d] = m
    return out


def match(gt_boxes, det_boxes, det_scores, iou_thr: float) -> list[int]:
    """Greedy COCO matching for one image and category.

    Returns, for each detection in input order, the index of the matched
    ground-truth box or -1 (false positive).
    """
    order = np.argsort(-np.asarray(det_scores, dtype=float), kind="mergesort")
    ious = iou_matrix([det_boxes[i] for i in order], gt_boxes)
    matched = _greedy(ious, iou_thr, np.zeros(len(gt_boxes), dtype=bool))
    out = [-1] * len(det_boxes)
    for rank, i in enumerate(order):
        out[i] = int(matched[rank])
    return out


def precision_envelope(tp_flags, n_gt: int):
    """Raw (recall, precision) along the ranked list and the 101-point
    interpolated precision (max precision at recall >= r)."""
    tp = np.cumsum(np.asarray(tp_flags, dtype=float))
    fp = np.cumsum(1.0 - np.asarray(tp_flags, dtype=float))
    if len(tp) == 0:
        return np.zeros(0), np.zeros(0), np.zeros(len(RECALL_POINTS))
    rc = tp / n_gt
    pr = tp / (tp + fp)
    env = np.maximum.accumulate(pr[::-1])[::-1]
    idx = np.searchsorted(rc, RECALL_POINTS, side="left")
    q = np.where(idx < len(env), env[np.minimum(idx, len(env) - 1)], 0.0)
    return rc, pr, q


def average_precision(matches, n_gt: int) -> float:
    """101-point interpolated AP from pooled ``(score, is_tp)`` pairs.

    Returns -1 when there is no ground truth.
    """
    if n_gt == 0:
        return UNDEFINED
    matches = list(matches)
    scores = np.array([m[0] for m in matches], dtype=float)
    order = np.argsort(-scores, kind="mergesort")
    flags = [bool(matches[i][1]) for i in order]
    _, _, q = precision_envelope(flags, n_gt)
    return float(np.mean(q))


def _group(gt: AnnotationSet, dets):
    gts_by = {}
    for a in gt.annotations:
        gts_by.setdefault((a.image_id, a.category_id), []).append(a)
    dets_by = {}
    for d in dets:
        dets_by.setdefault((d.image_id, d.category_id), []).append(d)
    return gts_by, dets_by


def _evaluate_image(gts, dets, area_rng, iou_thrs, max_dets):
    """Per-image matching for one category and area range.

    Returns ``(scores, matched[T, D], det_ignore[T, D], n_real_gt)``.
    """
    lo, hi = area_rng
    g_ign = np.array([not (lo <= g.area < hi) for g in gts], dtype=bool)
    g_order = np.argsort(g_ign, kind="mergesort")
    gts = [gts[i] for i in g_order]
    g_ign = g_ign[g_order]
    d_order = np.argsort([-d.score for d in dets], kind="mergesort")[:max_dets]
    dets = [dets[i] for i in d_order]
    ious = iou_matrix([d.bbox for d in dets], [g.bbox for g in gts])
    n_t, n_d = len(iou_thrs), len(dets)
    matched = np.zeros((n_t, n_d), dtype=bool)
    ignore = np.zeros((n_t, n_d), dtype=bool)
    d_out = np.array([not (lo <= d.bbox[2] * d.bbox[3] < hi) for d in dets], dtype=bool)
    for t, thr in enumerate(iou_thrs):
        m = _greedy(ious, thr, g_ign)
        for k in range(n_d):
            if m[k] > -1:
                matched[t, k] = True
                ignore[t, k] = g_ign[m[k]]
            else:
                ignore[t, k] = d_out[k]
    scores = np.array([d.score for d in dets], dtype=float)
    return scores, matched, ignore, int(np.sum(~g_ign))


@dataclass
class _Accum:
    precision: np.ndarray  # [T, R] interpolated
    recall: np.ndarray  # [T]
    raw: list  # per threshold (recall, precision) arrays


def _accumulate(gt, dets, category, area_rng, iou_thrs, max_dets, image_ids, gts_by, dets_by):
    scores, matched, ignore, n_gt = [], [], [], 0
    for img in image_ids:
        g = gts_by.get((img, category), [])
        d = dets_by.get((img, category), [])
        if not g and not d:
            continue
        s, m, ig, n = _evaluate_image(g, d, area_rng, iou_thrs, max_dets)
        scores.append(s)
        matched.append(m)
        ignore.append(ig)
        n_gt += n
    if n_gt == 0:
        return None
    n_t = len(iou_thrs)
    if scores:
        scores = np.concatenate(scores)
        matched = np.concatenate(matched, axis=1)
        ignore = np.concatenate(ignore, axis=1)
    else:
        scores = np.zeros(0)
        matched = ignore = np.zeros((n_t, 0), dtype=bool)
    order = np.argsort(-scores, kind="mergesort")
    precision = np.zeros((n_t, len(RECALL_POINTS)))
    recall = np.zeros(n_t)
    raw = []
    for t in range(n_t):
        keep = ~ignore[t, order]
        flags = matched[t, order][keep]
        rc, pr, q = precision_envelope(flags, n_gt)
        precision[t] = q
        recall[t] = rc[-1] if len(rc) else 0.0
        raw.append((rc, pr))
    return _Accum(precision, recall, raw)


@dataclass
class EvalReport:
    ap: float
    ap50: float
    ap75: float
    aps: float
    apm: float
    apl: float
    ar: float
    ars: float
    arm: float
    arl: float
    pr_curves: dict = field(default_factory=dict, repr=False)  # iou -> 101 precisions

    METRICS = ("ap", "ap50", "ap75", "aps", "apm", "apl", "ar", "ars", "arm", "arl")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.METRICS}


def _mean_defined(values) -> float:
    vals = [v for v in values if v is not None]
    if not vals:
        return UNDEFINED
    return float(np.mean(vals))


def _check_inputs(gt: AnnotationSet, dets):
    cats = {c for c, _ in gt.categories} | {a.category_id for a in gt.annotations}
    bad = sorted({d.category_id for d in dets} - cats)
    if bad:
        raise ValueError(f"category mismatch: detections use unknown category ids {bad}")
    known = {im.id for im in gt.images}
    stray = sorted({d.image_id for d in dets} - known)
    if stray:
        raise ValueError(f"detections reference images absent from ground truth: {stray[:5]}")
    return sorted(cats)


def coco_summary(gt: AnnotationSet, dets, max_dets: int = MAX_DETS) -> EvalReport:
    """AP / AR overall and by object size, averaged over IoU 0.50:0.95."""
    dets = list(dets)
    cats = _check_inputs(gt, dets)
    image_ids = sorted(im.id for im in gt.images)
    gts_by, dets_by = _group(gt, dets)

    results = {}
    for area in AREA_RANGES:
        results[area] = [
            _accumulate(gt, dets, c, AREA_RANGES[area], IOU_THRESHOLDS, max_dets, image_ids, gts_by, dets_by)
            for c in cats
        ]

    def ap(area, t=None):
        vals = []
        for acc in results[area]:
            if acc is None:
                continue
            vals.append(acc.precision.mean() if t is None else acc.precision[t].mean())
        return _mean_defined(vals)

    def ar(area):
        return _mean_defined([acc.recall.mean() for acc in results[area] if acc is not None])

    curves = {}
    for t, thr in enumerate(IOU_THRESHOLDS):
        per_cat = [acc.precision[t] for acc in results["all"] if acc is not None]
        if per_cat:
            curves[round(float(thr), 2)] = np.mean(per_cat, axis=0)

    return EvalReport(
        ap=ap("all"),
        ap50=ap("all", 0),
        ap75=ap("all", 5),
        aps=ap("small"),
        apm=ap("medium"),
        apl=ap("large"),
        ar=ar("all"),
        ars=ar("small"),
        arm=ar("medium"),
        arl=ar("large"),
        pr_curves=curves,
    )


@dataclass
class PRCurve:
    iou_thr: float
    points: list  # (recall, precision) per ranked detection
    envelope: list  # (recall, interpolated precision) at 101 recall points


def pr_curve(gt: AnnotationSet, dets, iou_thr: float, max_dets: int = MAX_DETS) -> PRCurve:
    """Precision-recall along the score-ranked detections, pooled over
    images and categories, at a single IoU threshold."""
    dets = list(dets)
    cats = _check_inputs(gt, dets)
    image_ids = sorted(im.id for im in gt.images)
    gts_by, dets_by = _group(gt, dets)
    scores, flags, n_gt = [], [], 0
    for c in cats:
        for img in image_ids:
            g = gts_by.get((img, c), [])
            d = dets_by.get((img, c), [])
            n_gt += len(g)
            if not d:
                continue
            s, m, _, _ = _evaluate_image(g, d, AREA_RANGES["all"], [iou_thr], max_dets)
            scores.append(s)
            flags.append(m[0])
    if not scores or n_gt == 0:
        return PRCurve(iou_thr, [], [(float(r), 0.0) for r in RECALL_POINTS])
    scores = np.concatenate(scores)
    flags = np.concatenate(flags)
    order = np.argsort(-scores, kind="mergesort")
    rc, pr, q = precision_envelope(flags[order], n_gt)
    return PRCurve(
        iou_thr,
        [(float(r), float(p)) for r, p in zip(rc, pr)],
        [(float(r), float(p)) for r, p in zip(RECALL_POINTS, q)],
    )


def write_report_csv(report: EvalReport, path: str | os.PathLike, label: str = "") -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["run", *report.METRICS])
        w.writerow([label, *(f"{v:.6f}" for v in report.as_dict().values())])


def write_pr_csv(curves, path: str | os.PathLike) -> None:
    """Long-format CSV: ``iou,kind,recall,precision`` for raw and interpolated curves."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iou", "kind", "recall", "precision"])
        for c in curves:
            for r, p in c.points:
                w.writerow([f"{c.iou_thr:.2f}", "raw", f"{r:.6f}", f"{p:.6f}"])
            for r, p in c.envelope:
                w.writerow([f"{c.iou_thr:.2f}", "interp", f"{r:.2f}", f"{p:.6f}"])


def format_table(report: EvalReport, label: str = "") -> str:
    head = ["AP", "AP50", "AP75", "APs", "APm", "APl", "AR", "ARs", "ARm", "ARl"]
    vals = [f"{v:6.3f}" for v in report.as_dict().values()]
    width = max(len(label), 7)
    lines = [
        f"{'run':<{width}} " + " ".join(f"{h:>6}" for h in head),
        f"{label:<{width}} " + " ".join(vals),
    ]
    return "\n".join(lines)
