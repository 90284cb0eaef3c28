"""Shared builders for hand-sized fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from posebench.model import (
    BoundingBox,
    CameraDataset,
    FrameRecord,
    Keypoint,
    PersonObservation,
    Track,
)


def make_keypoints(points, visibility=0.9):
    """17 keypoints from an iterable of (x, y); shorter input is cycled."""
    pts = list(points)
    out = []
    for i in range(17):
        x, y = pts[i % len(pts)]
        out.append(Keypoint(float(x) + 0.01 * i, float(y) + 0.02 * i, visibility))
    return tuple(out)


def box_around(keypoints, pad=2.0):
    xs = [k.x for k in keypoints]
    ys = [k.y for k in keypoints]
    return BoundingBox(min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


def make_obs(track_id=0, origin=(50.0, 60.0), interpolated=False, visibility=0.9):
    if interpolated:
        visibility = None
    kps = make_keypoints([origin], visibility)
    return PersonObservation(
        track_id=track_id,
        keypoints=kps,
        bbox=box_around(kps),
        interpolated=interpolated,
    )


def make_frame(frame_index, label="normal", persons=(), camera_id="cam0"):
    regions = (persons[0].bbox,) if label == "anomalous" and persons else ()
    return FrameRecord(
        camera_id=camera_id,
        frame_index=frame_index,
        label=label,
        persons=tuple(persons),
        anomaly_regions=regions,
    )


def make_track(frame_indices, origins=None, track_id=0, camera_id="cam0"):
    """A track with one observation per frame index."""
    if origins is None:
        origins = [(50.0 + 2.0 * i, 60.0 + i) for i in range(len(frame_indices))]
    pairs = tuple(
        (int(fi), make_obs(track_id=track_id, origin=o))
        for fi, o in zip(frame_indices, origins)
    )
    return Track(camera_id=camera_id, track_id=track_id, observations=pairs)


def walking_dataset(n_frames, camera_id="cam0", track_id=0, start=0, label="normal"):
    """Single person walking diagonally, one frame record per index."""
    frames = []
    for i in range(n_frames):
        obs = make_obs(track_id=track_id, origin=(40.0 + 1.5 * i, 30.0 + 0.5 * i))
        frames.append(make_frame(start + i, label=label, persons=(obs,), camera_id=camera_id))
    return CameraDataset(camera_id=camera_id, frames=tuple(frames))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
