import math

import pytest

from posebench.errors import ValidationError
from posebench.model import (
    BoundingBox,
    CameraDataset,
    FrameRecord,
    JOINT_NAMES,
    Keypoint,
    PersonObservation,
    SplitSet,
    Track,
    group_tracks,
    tracks_from_frames,
)
from conftest import make_frame, make_keypoints, make_obs, box_around


def test_joint_layout():
    assert len(JOINT_NAMES) == 17
    assert JOINT_NAMES[0] == "nose"
    assert JOINT_NAMES[-1] == "right_ankle"


class TestKeypoint:
    def test_valid(self):
        kp = Keypoint(1.0, 2.0, 0.5)
        assert (kp.x, kp.y, kp.visibility) == (1.0, 2.0, 0.5)

    def test_visibility_may_be_absent(self):
        assert Keypoint(0.0, 0.0, None).visibility is None

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValidationError):
            Keypoint(bad, 0.0, 0.5)
        with pytest.raises(ValidationError):
            Keypoint(0.0, bad, 0.5)

    @pytest.mark.parametrize("bad", [-0.1, 1.1, 2.0])
    def test_rejects_out_of_range_visibility(self, bad):
        with pytest.raises(ValidationError):
            Keypoint(0.0, 0.0, bad)


class TestBoundingBox:
    def test_geometry(self):
        b = BoundingBox(0.0, 0.0, 3.0, 4.0)
        assert b.center() == (1.5, 2.0)
        assert math.isclose(b.diagonal(), 5.0)
        assert b.area() == 12.0

    def test_rejects_inverted(self):
        with pytest.raises(ValidationError):
            BoundingBox(3.0, 0.0, 1.0, 4.0)
        with pytest.raises(ValidationError):
            BoundingBox(0.0, 4.0, 3.0, 4.0)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            BoundingBox(-1.0, 0.0, 3.0, 4.0)


class TestPersonObservation:
    def test_requires_17_keypoints(self):
        kps = make_keypoints([(10, 10)])[:16]
        with pytest.raises(ValidationError):
            PersonObservation(track_id=0, keypoints=kps, bbox=BoundingBox(0, 0, 20, 20))

    def test_interpolated_must_have_absent_visibility(self):
        kps = make_keypoints([(10, 10)], visibility=0.9)
        with pytest.raises(ValidationError):
            PersonObservation(
                track_id=0, keypoints=kps, bbox=box_around(kps), interpolated=True
            )

    def test_absent_visibility_requires_interpolated_flag(self):
        kps = make_keypoints([(10, 10)], visibility=None)
        with pytest.raises(ValidationError):
            PersonObservation(track_id=0, keypoints=kps, bbox=box_around(kps))

    def test_interpolated_roundtrip(self):
        obs = make_obs(interpolated=True)
        assert obs.interpolated
        assert all(k.visibility is None for k in obs.keypoints)


class TestFrameRecord:
    def test_normal_frame_rejects_anomaly_regions(self):
        obs = make_obs()
        with pytest.raises(ValidationError):
            FrameRecord(
                camera_id="cam0",
                frame_index=0,
                label="normal",
                persons=(obs,),
                anomaly_regions=(obs.bbox,),
            )

    def test_is_anomalous(self):
        assert make_frame(0, label="anomalous", persons=(make_obs(),)).is_anomalous
        assert not make_frame(0).is_anomalous

    def test_bad_label(self):
        with pytest.raises(ValidationError):
            FrameRecord(camera_id="cam0", frame_index=0, label="odd")


class TestCameraDataset:
    def test_requires_increasing_frame_indices(self):
        frames = (make_frame(2), make_frame(1))
        with pytest.raises(ValidationError):
            CameraDataset(camera_id="cam0", frames=frames)

    def test_requires_matching_camera(self):
        frames = (make_frame(0), make_frame(1, camera_id="other"))
        with pytest.raises(ValidationError):
            CameraDataset(camera_id="cam0", frames=frames)

    def test_duplicate_index_rejected(self):
        frames = (make_frame(1), make_frame(1))
        with pytest.raises(ValidationError):
            CameraDataset(camera_id="cam0", frames=frames)


class TestSplitSet:
    def test_train_must_be_normal(self):
        train = CameraDataset(
            camera_id="cam0",
            frames=(make_frame(0, label="anomalous", persons=(make_obs(),)),),
        )
        test = CameraDataset(camera_id="cam0", frames=(make_frame(5),))
        with pytest.raises(ValidationError):
            SplitSet(train=train, test=test)

    def test_disjoint_frame_indices(self):
        train = CameraDataset(camera_id="cam0", frames=(make_frame(0),))
        test = CameraDataset(camera_id="cam0", frames=(make_frame(0),))
        with pytest.raises(ValidationError):
            SplitSet(train=train, test=test)

    def test_camera_id_property(self):
        train = CameraDataset(camera_id="cam0", frames=(make_frame(0),))
        test = CameraDataset(camera_id="cam0", frames=(make_frame(1),))
        assert SplitSet(train=train, test=test).camera_id == "cam0"


class TestTracks:
    def test_track_orders_and_matches(self):
        obs = make_obs(track_id=3)
        with pytest.raises(ValidationError):
            Track(camera_id="cam0", track_id=3, observations=((5, obs), (5, obs)))
        with pytest.raises(ValidationError):
            Track(camera_id="cam0", track_id=4, observations=((1, obs),))

    def test_tracks_from_frames_buckets_by_id(self):
        a0 = make_obs(track_id=0, origin=(10, 10))
        a1 = make_obs(track_id=0, origin=(12, 10))
        b0 = make_obs(track_id=1, origin=(90, 90))
        frames = [
            make_frame(0, persons=(a0, b0)),
            make_frame(1, persons=(a1,)),
        ]
        tracks = tracks_from_frames(frames, "cam0")
        assert [t.track_id for t in tracks] == [0, 1]
        assert tracks[0].frame_indices() == [0, 1]
        assert tracks[1].frame_indices() == [0]

    def test_duplicate_track_frame_pair_rejected(self):
        a = make_obs(track_id=0)
        frames = [make_frame(0, persons=(a, a))]
        with pytest.raises(ValidationError):
            tracks_from_frames(frames, "cam0")

    def test_group_tracks_on_dataset(self):
        ds = CameraDataset(
            camera_id="cam0",
            frames=(make_frame(0, persons=(make_obs(track_id=7),)),),
        )
        tracks = group_tracks(ds)
        assert len(tracks) == 1
        assert tracks[0].camera_id == "cam0"
