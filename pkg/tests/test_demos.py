import json

import numpy as np
import pytest

from softgrip.config import lite_pick
from softgrip.demos import DemoTrajectory, load_demos_into_buffer, record_demo, replay_demo
from softgrip.env import GripperEnv
from softgrip.errors import DemoIntegrityError
from softgrip.harness.scripted import PickDriver
from softgrip.learner import OFFLINE, ReplayBuffer, rlpd_batch


@pytest.fixture(scope="module")
def recorded(tmp_path_factory):
    env = GripperEnv(lite_pick())
    demo = None
    for seed in range(20):
        driver = PickDriver(env)
        demo, reason = record_demo(env, lambda obs: driver(obs), seed=seed)
        if demo is not None:
            break
    assert demo is not None
    path = tmp_path_factory.mktemp("demos") / "demo.jsonl"
    demo.save(path)
    return env, demo, path


def test_record_then_load_roundtrip(recorded):
    env, demo, path = recorded
    loaded = DemoTrajectory.load_file(path)
    assert loaded.header["demo_id"] == demo.header["demo_id"]
    assert len(loaded) == len(demo)
    assert loaded.rewards == demo.rewards
    # byte-identical second save (timestamp is copied through unchanged)
    assert loaded.to_jsonl() == demo.to_jsonl()


def test_replay_regenerates_identical_transitions(recorded):
    env, demo, path = recorded
    loaded = DemoTrajectory.load_file(path)
    observations, rewards, dones = replay_demo(env, loaded)  # raises on divergence
    assert rewards == demo.rewards
    assert len(observations) == len(demo) + 1


def test_load_twice_identical_buffers(recorded):
    env, demo, path = recorded
    bufs = []
    for _ in range(2):
        buf = ReplayBuffer(capacity=512, num_points=env.config.observation.num_points,
                           provenance=OFFLINE)
        n = load_demos_into_buffer([path], env, buf)
        assert n == len(demo)
        bufs.append(buf)
    a, b = bufs
    assert np.array_equal(a.points[:len(a)], b.points[:len(b)])
    assert np.array_equal(a.reward[:len(a)], b.reward[:len(b)])


def test_loaded_transitions_carry_offline_provenance(recorded):
    env, demo, path = recorded
    buf = ReplayBuffer(capacity=512, num_points=env.config.observation.num_points,
                       provenance=OFFLINE)
    load_demos_into_buffer([path], env, buf)
    batch = buf.gather(np.arange(len(buf)))
    assert np.all(batch["provenance"] == OFFLINE)


def test_corrupted_action_detected(recorded, tmp_path):
    env, demo, path = recorded
    lines = open(path).read().splitlines()
    record = json.loads(lines[2])
    record["action"][0] += 0.25  # tamper one stored action
    lines[2] = json.dumps(record, sort_keys=True)
    bad_path = tmp_path / "tampered.jsonl"
    bad_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DemoIntegrityError):
        replay_demo(env, DemoTrajectory.load_file(bad_path))


def test_config_hash_mismatch_refused(recorded):
    env, demo, path = recorded
    loaded = DemoTrajectory.load_file(path)
    loaded.header["config_hash"] = "0" * 16
    with pytest.raises(DemoIntegrityError, match="config hash"):
        replay_demo(env, loaded)


def test_failed_episode_rejected():
    env = GripperEnv(lite_pick())
    demo, reason = record_demo(env, lambda obs: np.zeros(7), seed=0)
    assert demo is None
    assert "discarded" in reason


def test_rlpd_batch_from_recorded_demo(recorded):
    env, demo, path = recorded
    p = env.config.observation.num_points
    offline = ReplayBuffer(capacity=512, num_points=p, provenance=OFFLINE)
    load_demos_into_buffer([path], env, offline)
    online = ReplayBuffer(capacity=512, num_points=p)
    rng = np.random.default_rng(0)
    for _ in range(40):
        obs = env.reset(seed=1, mode="rigid")
        online.add(obs, np.zeros(7, dtype=np.float32), 0.0, obs, False)
    batch = rlpd_batch(online, offline, min(2 * len(offline), 64), rng)
    assert batch is not None
