"""Detection sources: the JSONL ingestion format and a naive thermal
blob detector used as a baseline when no external detections exist.
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy import ndimage

from .boxes import BoundingBox, Detection, FrameDetections, ObjectClass
from .errors import FormatError
from .frames import ThermalFrame

# 4-connectivity for blob labelling.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

_CLASS_NAMES = {c.value: c for c in ObjectClass}


def parse_detections_jsonl(source, resolution: tuple[int, int] | None = None) -> list[FrameDetections]:
    """Parse per-frame detections, one JSON object per line.

    Line schema: {"t": seconds, "dets": [{"cls": "patient"|"worker",
    "conf": r, "box": [x, y, w, h]}, ...]}.  "conf" defaults to 1.0 so
    ground-truth files can reuse the format.  When a (width, height)
    resolution is given, boxes are clamped to the frame.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source
    frames = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", line=lineno) from exc
        if not isinstance(obj, dict) or "t" not in obj or "dets" not in obj:
            raise FormatError("expected object with 't' and 'dets'", line=lineno)
        try:
            t = float(obj["t"])
        except (TypeError, ValueError):
            raise FormatError(f"bad timestamp {obj['t']!r}", line=lineno) from None
        if t < 0:
            raise FormatError(f"negative timestamp {t}", line=lineno)
        dets = []
        for d in obj["dets"]:
            cls = _CLASS_NAMES.get(d.get("cls"))
            if cls is None:
                raise FormatError(f"unknown class {d.get('cls')!r}", line=lineno)
            try:
                conf = float(d.get("conf", 1.0))
                x, y, w, h = (float(v) for v in d["box"])
                box = BoundingBox(x, y, w, h)
                det = Detection(box, cls, conf)
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad detection {d!r}: {exc}", line=lineno) from exc
            if resolution is not None:
                clamped = box.clamped(*resolution)
                if clamped is None:
                    continue  # entirely outside the frame
                det = Detection(clamped, cls, conf)
            dets.append(det)
        frames.append(FrameDetections(t, dets))
    frames.sort(key=lambda f: f.timestamp)
    return frames


def detections_to_jsonl(frames: list[FrameDetections]) -> str:
    """Serialize frames back to the JSONL schema (inverse of the parser)."""
    lines = []
    for f in frames:
        dets = [
            {"cls": d.cls.value, "conf": d.confidence,
             "box": [d.box.x, d.box.y, d.box.w, d.box.h]}
            for d in f.detections
        ]
        lines.append(json.dumps({"t": f.timestamp, "dets": dets}))
    return "\n".join(lines) + ("\n" if lines else "")


def blob_detect(
    frame: ThermalFrame,
    min_temp: float,
    min_area: float = 1.0,
    bed_region: BoundingBox | None = None,
) -> list[Detection]:
    """Threshold warm pixels and box the 4-connected components.

    Confidence is component fill ratio (pixels / box area).  The
    component whose centroid lies nearest the bed-region center is
    labelled patient, all others worker; without a configured bed the
    frame center is used.
    """
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    mask = frame.temps >= min_temp
    labels, count = ndimage.label(mask, structure=_CROSS)
    if count == 0:
        return []
    sizes = np.bincount(labels.ravel())
    slices = ndimage.find_objects(labels)
    if bed_region is None:
        bed_cx, bed_cy = frame.width / 2.0, frame.height / 2.0
    else:
        bed_cx, bed_cy = bed_region.center
    candidates = []
    for idx, sl in enumerate(slices, start=1):
        npix = int(sizes[idx])
        if npix < min_area:
            continue
        rs, cs = sl
        box = BoundingBox(float(cs.start), float(rs.start),
                          float(cs.stop - cs.start), float(rs.stop - rs.start))
        rows, cols = np.nonzero(labels == idx)
        cy, cx = rows.mean() + 0.5, cols.mean() + 0.5
        conf = npix / (box.w * box.h)
        dist = math.hypot(cx - bed_cx, cy - bed_cy)
        candidates.append((dist, box, conf))
    if not candidates:
        return []
    patient_idx = min(range(len(candidates)), key=lambda i: candidates[i][0])
    out = []
    for i, (_, box, conf) in enumerate(candidates):
        cls = ObjectClass.PATIENT if i == patient_idx else ObjectClass.WORKER
        out.append(Detection(box, cls, conf))
    return out
