import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from intersim.trajectory import Trajectory, TrajectoryError, read_trajectories, write_trajectories


class TestTrajectory:
    def test_needs_two_samples(self):
        with pytest.raises(TrajectoryError):
            Trajectory("a", "car", [0], [(0.0, 0.0)])

    def test_frames_strictly_increasing(self):
        with pytest.raises(TrajectoryError):
            Trajectory("a", "car", [0, 2, 2], np.zeros((3, 2)))

    def test_length_mismatch(self):
        with pytest.raises(TrajectoryError):
            Trajectory("a", "car", [0, 1, 2], np.zeros((2, 2)))


class TestFile:
    def test_missing_columns(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("agent_id,kind,frame,x\n1,car,0,0.0\n")
        with pytest.raises(TrajectoryError, match="missing columns"):
            read_trajectories(path)

    def test_rows_grouped_and_sorted(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("agent_id,kind,frame,x,y,departure_lane\n"
                        "b,car,5,1.0,0.0,L\na,pedestrian,1,0.0,1.0,\nb,car,4,0.0,0.0,L\na,pedestrian,2,0.0,2.0,\n")
        b, a = read_trajectories(path)
        assert (b.agent_id, b.frames.tolist(), b.departure_lane) == ("b", [4, 5], "L")
        assert (a.agent_id, a.kind, a.departure_lane) == ("a", "pedestrian", None)

    @given(arrays(np.float64, st.tuples(st.integers(2, 20), st.just(2)),
                  elements=st.floats(-1e4, 1e4, allow_nan=False)),
           st.sampled_from(["L", None]))
    @settings(max_examples=40)
    def test_round_trip_is_exact(self, tmp_path_factory, xy, lane):
        tr = Trajectory("x1", "bicycle", np.arange(len(xy)) * 3 + 7, xy, lane)
        path = tmp_path_factory.mktemp("rt") / "t.csv"
        write_trajectories([tr], path)
        (back,) = read_trajectories(path)
        assert np.array_equal(back.xy, tr.xy) and np.array_equal(back.frames, tr.frames)
        assert back.departure_lane == lane and back.kind == "bicycle"
