"""Track preprocessing: gap interpolation, smoothing, normalization, windowing.

The pipeline order is interpolate -> smooth -> window. Interpolation fills
internal gaps only (no extrapolation past track ends); smoothing and
windowing both operate per maximal run of consecutive frames, so an
unfilled gap splits a track into independent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import (
    KEYPOINT_COUNT,
    BoundingBox,
    Keypoint,
    PersonObservation,
    Track,
    tracks_from_frames,
)


@dataclass(frozen=True)
class PoseWindow:
    """A fixed-length slice of one track with per-frame normalized poses.

    ``features`` has shape (length, 17, 2); ``covered_frames`` lists the
    consecutive frame indices the window spans.
    """

    track_id: int
    camera_id: str
    start_frame: int
    length: int
    features: np.ndarray
    covered_frames: tuple[int, ...]

    def __post_init__(self):
        if self.features.shape != (self.length, KEYPOINT_COUNT, 2):
            raise ValidationError(
                f"window features must have shape ({self.length}, {KEYPOINT_COUNT}, 2), "
                f"got {self.features.shape}"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValidationError(f"window features must be finite (track {self.track_id})")
        if len(self.covered_frames) != self.length:
            raise ValidationError("covered_frames length must equal window length")
        for a, b in zip(self.covered_frames, self.covered_frames[1:]):
            if b != a + 1:
                raise ValidationError("covered_frames must be consecutive")
        if self.covered_frames and self.covered_frames[0] != self.start_frame:
            raise ValidationError("start_frame must equal the first covered frame")


def _runs(entries):
    """Split (frame_index, obs) entries into maximal consecutive-frame runs."""
    runs = []
    cur = []
    prev = None
    for entry in entries:
        if prev is not None and entry[0] != prev + 1:
            runs.append(cur)
            cur = []
        cur.append(entry)
        prev = entry[0]
    if cur:
        runs.append(cur)
    return runs


def interpolate_track(track: Track, max_gap: int = 14) -> Track:
    """Fill internal gaps of up to max_gap frames by per-keypoint linear interpolation.

    Inserted observations are marked interpolated, carry no keypoint
    visibility, and get a linearly interpolated bounding box. Original
    observations are passed through unchanged. Gaps longer than max_gap are
    left open; leading/trailing absence is never extrapolated.
    """
    if max_gap < 1:
        raise ValidationError(f"max_gap must be >= 1, got {max_gap}")
    obs = track.observations
    if len(obs) < 2:
        return track
    out = []
    for (f0, o0), (f1, o1) in zip(obs, obs[1:]):
        out.append((f0, o0))
        gap = f1 - f0 - 1
        if 1 <= gap <= max_gap:
            span = f1 - f0
            for f in range(f0 + 1, f1):
                t = (f - f0) / span
                kps = tuple(
                    Keypoint(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), None)
                    for a, b in zip(o0.keypoints, o1.keypoints)
                )
                bb = BoundingBox(
                    o0.bbox.x1 + t * (o1.bbox.x1 - o0.bbox.x1),
                    o0.bbox.y1 + t * (o1.bbox.y1 - o0.bbox.y1),
                    o0.bbox.x2 + t * (o1.bbox.x2 - o0.bbox.x2),
                    o0.bbox.y2 + t * (o1.bbox.y2 - o0.bbox.y2),
                )
                out.append(
                    (f, PersonObservation(track.track_id, bb, kps, interpolated=True))
                )
    out.append(obs[-1])
    return Track(track.track_id, track.camera_id, tuple(out))


def _centered_moving_average(flat: np.ndarray, window: int) -> np.ndarray:
    n = flat.shape[0]
    h = window // 2
    out = np.empty((n, flat.shape[1]), dtype=np.float64)
    if n >= window:
        sw = np.lib.stride_tricks.sliding_window_view(flat, window, axis=0)
        out[h : n - h] = sw.mean(axis=-1)
        boundary = list(range(h)) + list(range(n - h, n))
    else:
        boundary = list(range(n))
    for i in boundary:
        hw = min(i, n - 1 - i, h)
        out[i] = flat[i - hw : i + hw + 1].mean(axis=0)
    return out


def smooth_track(track: Track, window: int = 15) -> Track:
    """Replace keypoint coordinates by a centered moving average per run.

    The window shrinks symmetrically near run boundaries. Window must be a
    positive odd integer; window 1 is the identity. Bounding boxes,
    visibilities and interpolated flags pass through unchanged.
    """
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"smoothing window must be a positive odd integer, got {window}")
    if window == 1 or len(track) == 0:
        return track
    entries = []
    for run in _runs(track.observations):
        coords = np.array(
            [[(kp.x, kp.y) for kp in obs.keypoints] for _, obs in run], dtype=np.float64
        )
        sm = _centered_moving_average(coords.reshape(len(run), -1), window)
        sm = sm.reshape(coords.shape)
        for i, (fi, obs) in enumerate(run):
            kps = tuple(
                Keypoint(float(sm[i, j, 0]), float(sm[i, j, 1]), obs.keypoints[j].visibility)
                for j in range(KEYPOINT_COUNT)
            )
            entries.append(
                (fi, PersonObservation(obs.track_id, obs.bbox, kps, obs.interpolated))
            )
    return Track(track.track_id, track.camera_id, tuple(entries))


def normalize_pose(obs: PersonObservation) -> np.ndarray:
    """Translate keypoints so the bbox center is the origin, scale by bbox diagonal.

    Returns a (17, 2) float array. The result is invariant to translating
    the person and box together and to uniform scaling about the box center.
    """
    cx, cy = obs.bbox.center()
    diag = obs.bbox.diagonal()
    if not math.isfinite(diag) or diag <= 0.0:
        raise ValidationError("cannot normalize pose against a degenerate bounding box")
    pts = np.array([(kp.x, kp.y) for kp in obs.keypoints], dtype=np.float64)
    pts[:, 0] -= cx
    pts[:, 1] -= cy
    return pts / diag


def window_track(track: Track, length: int = 24, stride: int = 6) -> list[PoseWindow]:
    """Cut a track into fixed-length windows of normalized poses.

    Windows start every ``stride`` observations within each maximal run of
    consecutive frames; a run of n observations yields
    max(0, (n - length) // stride + 1) windows. Windows never span an
    unfilled gap.
    """
    if length < 1:
        raise ValidationError(f"window length must be >= 1, got {length}")
    if stride < 1:
        raise ValidationError(f"window stride must be >= 1, got {stride}")
    windows = []
    for run in _runs(track.observations):
        n = len(run)
        start = 0
        while start + length <= n:
            seg = run[start : start + length]
            feats = np.stack([normalize_pose(obs) for _, obs in seg])
            covered = tuple(fi for fi, _ in seg)
            windows.append(
                PoseWindow(
                    track_id=track.track_id,
                    camera_id=track.camera_id,
                    start_frame=covered[0],
                    length=length,
                    features=feats,
                    covered_frames=covered,
                )
            )
            start += stride
    return windows


def extract_windows(
    frames,
    camera_id: str,
    *,
    length: int = 24,
    stride: int = 6,
    max_gap: int = 14,
    smoothing_window: int = 15,
) -> list[PoseWindow]:
    """Full preprocessing pipeline from frames to pose windows.

    Deterministic: tracks are processed in track_id order and windows in
    scan order within each track.
    """
    windows = []
    for track in tracks_from_frames(frames, camera_id):
        track = interpolate_track(track, max_gap=max_gap)
        track = smooth_track(track, window=smoothing_window)
        windows.extend(window_track(track, length=length, stride=stride))
    return windows
