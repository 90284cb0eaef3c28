"""Core data model: keypoints, person observations, frames, datasets, tracks.

All types are immutable after construction and validate their own invariants,
so downstream code can assume well-formed data. Frame indices are unique
within a camera and act as the frame identity everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError

KEYPOINT_COUNT = 17

# COCO-17 joint order, kept for reference and readable diagnostics.
JOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

LABEL_NORMAL = "normal"
LABEL_ANOMALOUS = "anomalous"
LABELS = (LABEL_NORMAL, LABEL_ANOMALOUS)


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


@dataclass(frozen=True, slots=True)
class Keypoint:
    """A single 2-D joint location with optional detector confidence."""

    x: float
    y: float
    visibility: float | None = None

    def __post_init__(self):
        if not _finite(self.x) or not _finite(self.y):
            raise ValidationError(f"keypoint coordinates must be finite, got ({self.x}, {self.y})")
        if self.visibility is not None:
            if not _finite(self.visibility) or not 0.0 <= self.visibility <= 1.0:
                raise ValidationError(f"keypoint visibility must be in [0, 1], got {self.visibility}")


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not _finite(v) or v < 0:
                raise ValidationError(f"bounding box {name} must be finite and >= 0, got {v}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValidationError(
                f"bounding box must have positive extent, got ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def diagonal(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)

    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True, slots=True)
class PersonObservation:
    """One tracked person in one frame: box, 17 keypoints, provenance flag.

    ``interpolated`` is true exactly when every keypoint carries no
    visibility, which is how gap-filled observations are marked.
    """

    track_id: int
    bbox: BoundingBox
    keypoints: tuple[Keypoint, ...]
    interpolated: bool = False

    def __post_init__(self):
        if not isinstance(self.track_id, int) or self.track_id < 0:
            raise ValidationError(f"track_id must be a non-negative integer, got {self.track_id!r}")
        if len(self.keypoints) != KEYPOINT_COUNT:
            raise ValidationError(
                f"expected keypoint count {KEYPOINT_COUNT}, got {len(self.keypoints)} (track {self.track_id})"
            )
        vis_absent = all(kp.visibility is None for kp in self.keypoints)
        if self.interpolated and not vis_absent:
            raise ValidationError(
                f"interpolated observation must have no keypoint visibility (track {self.track_id})"
            )
        if not self.interpolated and vis_absent:
            raise ValidationError(
                f"non-interpolated observation must carry at least one keypoint visibility (track {self.track_id})"
            )


@dataclass(frozen=True, slots=True)
class FrameRecord:
    """One video frame: label, person observations, optional anomaly boxes."""

    camera_id: str
    frame_index: int
    label: str
    persons: tuple[PersonObservation, ...] = ()
    anomaly_regions: tuple[BoundingBox, ...] = ()

    def __post_init__(self):
        if not self.camera_id:
            raise ValidationError("camera_id must be a non-empty string")
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise ValidationError(f"frame_index must be a non-negative integer, got {self.frame_index!r}")
        if self.label not in LABELS:
            raise ValidationError(
                f"label must be one of {LABELS}, got {self.label!r} (frame {self.frame_index})"
            )
        if self.label == LABEL_NORMAL and self.anomaly_regions:
            raise ValidationError(
                f"normal frame must not carry anomaly regions (frame {self.frame_index})"
            )

    @property
    def is_anomalous(self) -> bool:
        return self.label == LABEL_ANOMALOUS


@dataclass(frozen=True)
class CameraDataset:
    """Frames of a single camera, sorted by strictly increasing frame_index."""

    camera_id: str
    frames: tuple[FrameRecord, ...]

    def __post_init__(self):
        if not self.camera_id:
            raise ValidationError("camera_id must be a non-empty string")
        prev = None
        for fr in self.frames:
            if fr.camera_id != self.camera_id:
                raise ValidationError(
                    f"frame {fr.frame_index} has camera_id {fr.camera_id!r}, expected {self.camera_id!r}"
                )
            if prev is not None and fr.frame_index <= prev:
                raise ValidationError(
                    f"frame_index must be strictly increasing, got {fr.frame_index} after {prev}"
                )
            prev = fr.frame_index

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class SplitSet:
    """A standard-protocol split: all-normal train frames plus a mixed test set."""

    train: CameraDataset
    test: CameraDataset

    def __post_init__(self):
        if self.train.camera_id != self.test.camera_id:
            raise ValidationError(
                f"train and test camera_id differ: {self.train.camera_id!r} vs {self.test.camera_id!r}"
            )
        for fr in self.train.frames:
            if fr.label != LABEL_NORMAL:
                raise ValidationError(f"train frame {fr.frame_index} is not labeled normal")
        train_idx = {fr.frame_index for fr in self.train.frames}
        test_idx = {fr.frame_index for fr in self.test.frames}
        overlap = train_idx & test_idx
        if overlap:
            raise ValidationError(
                f"train and test share frame indices (e.g. {min(overlap)})"
            )

    @property
    def camera_id(self) -> str:
        return self.train.camera_id


@dataclass(frozen=True)
class Track:
    """All observations of one track id, ordered by frame_index."""

    track_id: int
    camera_id: str
    observations: tuple[tuple[int, PersonObservation], ...] = field(default=())

    def __post_init__(self):
        prev = None
        for frame_index, obs in self.observations:
            if obs.track_id != self.track_id:
                raise ValidationError(
                    f"observation track_id {obs.track_id} does not match track {self.track_id}"
                )
            if prev is not None and frame_index <= prev:
                raise ValidationError(
                    f"track {self.track_id} observations must be strictly increasing in frame_index"
                )
            prev = frame_index

    def __len__(self) -> int:
        return len(self.observations)

    def frame_indices(self) -> list[int]:
        return [fi for fi, _ in self.observations]


def tracks_from_frames(frames, camera_id: str) -> list[Track]:
    """Group person observations from an iterable of frames into tracks.

    Tracks are ordered by track_id, observations by frame_index. Raises on a
    duplicate (track_id, frame_index) pair.
    """
    buckets: dict[int, list[tuple[int, PersonObservation]]] = {}
    for fr in frames:
        for obs in fr.persons:
            buckets.setdefault(obs.track_id, []).append((fr.frame_index, obs))
    tracks = []
    for tid in sorted(buckets):
        entries = sorted(buckets[tid], key=lambda e: e[0])
        for a, b in zip(entries, entries[1:]):
            if a[0] == b[0]:
                raise ValidationError(
                    f"duplicate observation for track {tid} at frame {a[0]}"
                )
        tracks.append(Track(track_id=tid, camera_id=camera_id, observations=tuple(entries)))
    return tracks


def group_tracks(dataset: CameraDataset) -> list[Track]:
    """Group a dataset's person observations into per-identity tracks."""
    return tracks_from_frames(dataset.frames, dataset.camera_id)
