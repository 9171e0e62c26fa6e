import numpy as np
import pytest

from handguide import fileio
from handguide.controller import Trajectory, record
from handguide.errors import TrajectoryError
from handguide.guidance import HandSample
from handguide.kinematics import JointState


def test_hand_stream_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    samples = [HandSample(rng.normal(size=3), i / 30.0, bool(i % 2))
               for i in range(20)]
    path = tmp_path / "hand.jsonl"
    fileio.write_hand_stream(path, samples)
    back = fileio.read_hand_stream(path)
    assert len(back) == 20
    for a, b in zip(samples, back):
        np.testing.assert_array_equal(a.position, b.position)
        assert a.timestamp == b.timestamp and a.grasping == b.grasping


def test_hand_stream_rejects_non_monotone(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 1.0, "pos": [0,0,0], "grasp": true}\n'
                    '{"t": 1.0, "pos": [0,0,0], "grasp": true}\n')
    with pytest.raises(TrajectoryError, match="strictly increase"):
        fileio.read_hand_stream(path)


def test_hand_stream_reports_bad_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 0.0, "pos": [0,0,0], "grasp": true}\nnot json\n')
    with pytest.raises(TrajectoryError, match="bad.jsonl:2"):
        fileio.read_hand_stream(path)


def test_trajectory_round_trip(tmp_path):
    traj = Trajectory()
    rng = np.random.default_rng(1)
    for i in range(15):
        traj = record(traj, i * 0.1, JointState(rng.normal(size=4)))
    path = tmp_path / "traj.jsonl"
    fileio.write_trajectory(path, traj)
    back = fileio.read_trajectory(path)
    assert back.times == traj.times
    for a, b in zip(traj.states, back.states):
        np.testing.assert_array_equal(a, b)
    # identical data writes byte-identical files
    path2 = tmp_path / "traj2.jsonl"
    fileio.write_trajectory(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_trajectory_empty_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n")
    with pytest.raises(TrajectoryError):
        fileio.read_trajectory(path)


def test_command_state_csv(tmp_path):
    rows = [(0.0, np.array([1.0, 2.0]), np.array([0.5, 1.5])),
            (0.1, np.array([1.1, 2.1]), np.array([0.6, 1.6]))]
    path = tmp_path / "trace.csv"
    fileio.write_command_state_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,cmd_0,cmd_1,state_0,state_1"
    assert len(lines) == 3
    assert [float(v) for v in lines[1].split(",")] == [0.0, 1.0, 2.0, 0.5, 1.5]
