from softgrip.config import CurriculumConfig
from softgrip.curriculum import RIGID_PHASE, SOFT_PHASE, CurriculumState


def make(window=50, threshold=0.8, enabled=True):
    return CurriculumState(config=CurriculumConfig(window=window,
                                                   success_threshold=threshold),
                           enabled=enabled)


def test_switch_fires_after_window_of_successes():
    c = make()
    fired_at = None
    for i in range(60):
        if c.record_episode(True) and fired_at is None:
            fired_at = i + 1
    assert fired_at == 50
    assert c.phase == SOFT_PHASE
    assert c.switched_at == 50


def test_one_failure_in_window_still_switches():
    c = make()
    for _ in range(49):
        assert not c.record_episode(True)
    assert c.record_episode(False)  # rate 0.98 >= 0.8
    assert c.phase == SOFT_PHASE


def test_alternating_never_switches():
    c = make()
    for i in range(400):
        assert not c.record_episode(i % 2 == 0)
    assert c.phase == RIGID_PHASE
    assert c.switched_at is None


def test_switch_fires_at_most_once():
    c = make(window=10)
    fires = sum(c.record_episode(True) for _ in range(100))
    assert fires == 1
    # outcomes after the switch never flip the phase back
    for _ in range(50):
        assert not c.record_episode(False)
    assert c.phase == SOFT_PHASE


def test_disabled_curriculum_starts_soft():
    c = make(enabled=False)
    assert c.phase == SOFT_PHASE
    assert not c.record_episode(True)
