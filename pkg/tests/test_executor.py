"""Verification cadence, stall detection, and the recovery excursion."""

import json

import pytest

from groundling.executor import (
    EpisodeState, ExecutorConfig, apply_recovery, check_recovery, run_episode,
    stall_threshold,
)
from groundling.language import RECOVERY_PROMPT, FinalTaskList
from groundling.plan import Subtask
from groundling.simworld.tasks import load_suite


class RecordingVla:
    """Replays a fixed action while logging every prompt it was given."""

    def __init__(self, action=None):
        self.action = action or [0.0] * 7
        self.prompts = []

    def act(self, prompt, image):
        self.prompts.append(prompt)
        if callable(self.action):
            return self.action(len(self.prompts))
        return list(self.action)


class RecordingVerifier:
    def __init__(self, answers="No"):
        self.answers = answers
        self.calls = []

    def verify(self, prompt, before, after):
        self.calls.append(prompt)
        if isinstance(self.answers, str):
            return self.answers
        return self.answers[min(len(self.calls) - 1, len(self.answers) - 1)]


class FakeBackends:
    def __init__(self, vla, verifier):
        self.vla = vla
        self.verifier = verifier


def _final(n_subtasks=1):
    subs = [Subtask(1, "pick up", "pick up the black bowl", ["black bowl"])]
    if n_subtasks > 1:
        subs.append(Subtask(2, "place-on",
                            "place the black bowl on the plate",
                            ["black bowl", "plate"]))
    return FinalTaskList(goal="put the black bowl on the plate",
                         subtasks=subs[:n_subtasks])


def _scene():
    return load_suite("hard")[4].canonical_scene()


def _wiggle(step_no):
    # east on odd steps, west on even: always moving, never net progress > 1
    sign = 1.0 if step_no % 2 else -1.0
    return [sign, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]


class TestStallThreshold:
    def test_floor_when_no_history(self):
        assert stall_threshold([]) == 0.5

    def test_floor_dominates_slow_episodes(self):
        assert stall_threshold([0.0, 1.0, 1.0]) == 0.5

    def test_scales_with_fast_motion(self):
        assert stall_threshold([10.0] * 9) == pytest.approx(1.0)

    def test_check_requires_full_window(self):
        state = EpisodeState(effector_history=[(0.0, 0.0, 0.0)] * 10)
        assert not check_recovery(state, ExecutorConfig())

    def test_check_fires_on_flat_window(self):
        state = EpisodeState(effector_history=[(0.0, 0.0, 0.0)] * 16,
                             step_displacements=[0.0] * 16)
        assert check_recovery(state, ExecutorConfig())

    def test_apply_saves_subtask_and_clears_history(self):
        state = EpisodeState(subtask_index=1,
                             effector_history=[(0.0, 0.0, 0.0)] * 16)
        apply_recovery(state, ExecutorConfig())
        assert state.saved_subtask_index == 1
        assert state.recovery_left == 10
        assert state.effector_history == []


class TestVerifierCadence:
    def test_verify_every_twenty_productive_steps(self):
        vla = RecordingVla(_wiggle)
        verifier = RecordingVerifier("No")
        result = run_episode(_final(), _scene(), FakeBackends(vla, verifier),
                             config=ExecutorConfig(max_steps=100))
        assert result.steps == 100
        assert result.verifier_calls == 5  # exactly every 20 steps
        assert not result.completed

    def test_yes_advances_subtask(self):
        vla = RecordingVla(_wiggle)
        verifier = RecordingVerifier(["No", "Yes", "Yes"])
        result = run_episode(_final(2), _scene(), FakeBackends(vla, verifier),
                             config=ExecutorConfig(max_steps=100))
        assert result.completed
        assert result.subtasks_done == 2
        assert result.steps == 60  # 20 (No) + 20 (Yes) + 20 (Yes)

    def test_verifier_sees_current_subtask(self):
        vla = RecordingVla(_wiggle)
        verifier = RecordingVerifier(["Yes", "No"])
        run_episode(_final(2), _scene(), FakeBackends(vla, verifier),
                    config=ExecutorConfig(max_steps=60))
        assert "'pick up the black bowl'" in verifier.calls[0]
        assert "'place the black bowl on the plate'" in verifier.calls[1]


class TestRecovery:
    def test_exactly_ten_lift_steps_then_restore(self, tmp_path):
        vla = RecordingVla([0.0] * 7)  # frozen effector: guaranteed stall
        verifier = RecordingVerifier("No")
        trace = tmp_path / "trace.jsonl"
        result = run_episode(_final(), _scene(), FakeBackends(vla, verifier),
                             config=ExecutorConfig(max_steps=30),
                             trace_path=trace)
        # steps 1-16 build the flat window, recovery covers steps 17-26
        assert result.recoveries == 1
        recovery_prompts = [p for p in vla.prompts if p == RECOVERY_PROMPT]
        assert len(recovery_prompts) == 10
        assert vla.prompts[16:26] == [RECOVERY_PROMPT] * 10
        assert vla.prompts[26] != RECOVERY_PROMPT  # interrupted subtask resumes
        events = [json.loads(line) for line in trace.read_text().splitlines()]
        start = next(e for e in events if e.get("event") == "recovery_start")
        done = next(e for e in events if e.get("event") == "recovery_done")
        assert done["step"] - start["step"] == 10
        assert done["subtask"] == start["subtask"]

    def test_no_recovery_while_moving(self):
        vla = RecordingVla(_wiggle)
        result = run_episode(_final(), _scene(),
                             FakeBackends(vla, RecordingVerifier("No")),
                             config=ExecutorConfig(max_steps=100))
        assert result.recoveries == 0

    def test_recovery_steps_never_verified(self):
        vla = RecordingVla([0.0] * 7)
        verifier = RecordingVerifier("No")
        run_episode(_final(), _scene(), FakeBackends(vla, verifier),
                    config=ExecutorConfig(max_steps=26))
        # 16 productive steps + 10 recovery steps: cadence of 20 never reached
        assert verifier.calls == []


class TestTimings:
    def test_module_timings_reported(self):
        vla = RecordingVla(_wiggle)
        result = run_episode(_final(), _scene(),
                             FakeBackends(vla, RecordingVerifier("Yes")),
                             config=ExecutorConfig(max_steps=40))
        assert set(result.timings) == {"vos", "vla", "verifier", "total"}
        assert result.timings["total"] >= result.timings["vla"] >= 0.0
        assert result.timings["vos"] == 0.0  # no overlay layers given


class TestGoalCheck:
    def test_success_is_goal_not_completion(self):
        # verifier says Yes immediately but the world never changed
        task = load_suite("hard")[4]
        scene = task.canonical_scene()
        vla = RecordingVla(_wiggle)
        result = run_episode(_final(2), scene,
                             FakeBackends(vla, RecordingVerifier("Yes")),
                             config=ExecutorConfig(max_steps=60),
                             goal_check=task.goal_satisfied)
        assert result.completed and not result.success
