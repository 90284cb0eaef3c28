"""Dataset statistics: box overlap, crowd density, label balance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .model import BoundingBox, CameraDataset, FrameRecord, LABEL_ANOMALOUS


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when they do not overlap."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def frame_max_iou(frame: FrameRecord) -> float:
    """Max pairwise IoU over the frame's person boxes; 0.0 with fewer than 2 persons."""
    n = len(frame.persons)
    if n < 2:
        return 0.0
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            v = iou(frame.persons[i].bbox, frame.persons[j].bbox)
            if v > best:
                best = v
    return best


@dataclass(frozen=True)
class DatasetStats:
    """Summary counts and overlap statistics for one camera's frames."""

    camera_id: str
    frame_count: int
    pose_count: int
    anomaly_frame_count: int
    anomaly_fraction: float
    density_histogram: dict[int, int]
    max_iou_per_frame: np.ndarray

    def density_encoded(self) -> str:
        """Histogram as 'persons:frames' pairs, e.g. '0:12;2:88', keys ascending."""
        return ";".join(f"{k}:{self.density_histogram[k]}" for k in sorted(self.density_histogram))

    def csv_row(self) -> dict[str, str]:
        return {
            "camera_id": self.camera_id,
            "frame_count": str(self.frame_count),
            "pose_count": str(self.pose_count),
            "anomaly_frame_count": str(self.anomaly_frame_count),
            "anomaly_fraction": f"{self.anomaly_fraction:.6f}",
            "mean_max_iou": f"{float(self.max_iou_per_frame.mean()):.6f}",
            "density_histogram": self.density_encoded(),
        }


STATS_CSV_COLUMNS = (
    "camera_id",
    "frame_count",
    "pose_count",
    "anomaly_frame_count",
    "anomaly_fraction",
    "mean_max_iou",
    "density_histogram",
)


def stats_from_frames(frames, camera_id: str) -> DatasetStats:
    """Compute DatasetStats over an iterable of frames (order irrelevant)."""
    frames = list(frames)
    if not frames:
        raise ValidationError("cannot compute statistics of an empty dataset")
    pose_count = 0
    anomaly_frames = 0
    hist: dict[int, int] = {}
    boxes = []
    offsets = [0]
    for fr in frames:
        n = len(fr.persons)
        pose_count += n
        hist[n] = hist.get(n, 0) + 1
        if fr.label == LABEL_ANOMALOUS:
            anomaly_frames += 1
        for obs in fr.persons:
            boxes.append(obs.bbox.as_tuple())
        offsets.append(len(boxes))
    box_arr = np.asarray(boxes, dtype=np.float64).reshape(len(boxes), 4)
    off_arr = np.asarray(offsets, dtype=np.int64)
    max_iou = _kernels.max_iou_per_group(box_arr, off_arr)
    return DatasetStats(
        camera_id=camera_id,
        frame_count=len(frames),
        pose_count=pose_count,
        anomaly_frame_count=anomaly_frames,
        anomaly_fraction=anomaly_frames / len(frames),
        density_histogram=hist,
        max_iou_per_frame=max_iou,
    )


def compute_stats(dataset: CameraDataset) -> DatasetStats:
    """Compute DatasetStats for a CameraDataset; errors on an empty dataset."""
    return stats_from_frames(dataset.frames, dataset.camera_id)
