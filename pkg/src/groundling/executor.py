"""Closed-loop execution: act, verify on a fixed cadence, and recover.

The verifier is consulted every ``verify_every`` productive steps and is the
only thing that advances the subtask pointer.  A stalled effector (no net
motion over a trailing window, against a threshold scaled to the episode's
own motion statistics) triggers a fixed-length recovery excursion that lifts
the gripper, then restores the interrupted subtask exactly where it was.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from statistics import median

from .language import RECOVERY_PROMPT, FinalTaskList, build_execution_prompt, \
    build_verifier_prompt
from .simworld.core import Scene, render, step as world_step
from .vision import OverlayLayer, VosState, vos_stream


@dataclass(frozen=True)
class ExecutorConfig:
    max_steps: int = 400
    verify_every: int = 20
    recovery_steps: int = 10
    stall_window: int = 15
    stall_eps_min: float = 0.5
    stall_eps_scale: float = 0.1
    augment: bool = True
    overlay_alpha: float = 0.5


@dataclass
class EpisodeState:
    subtask_index: int = 0
    saved_subtask_index: int | None = None
    recovery_left: int = 0
    steps_since_verify: int = 0
    effector_history: list[tuple[float, float, float]] = field(default_factory=list)
    step_displacements: list[float] = field(default_factory=list)


@dataclass
class EpisodeResult:
    completed: bool
    success: bool
    steps: int
    recoveries: int
    verifier_calls: int
    subtasks_done: int
    subtask_count: int
    timings: dict[str, float]


def _pose(scene: Scene) -> tuple[float, float, float]:
    return (float(scene.gripper.cell[0]), float(scene.gripper.cell[1]),
            float(scene.gripper.height))


def _dist(a, b) -> float:
    return math.dist(a, b)


def stall_threshold(step_displacements: list[float],
                    eps_min: float = 0.5, scale: float = 0.1) -> float:
    """Dynamic threshold: a floor, widened when the episode moves fast."""
    if not step_displacements:
        return eps_min
    return max(eps_min, scale * median(step_displacements))


def check_recovery(state: EpisodeState, config: ExecutorConfig) -> bool:
    """True when net effector motion over the trailing window is under the
    dynamic threshold.  Only meaningful outside recovery."""
    window = config.stall_window
    if len(state.effector_history) < window + 1:
        return False
    net = _dist(state.effector_history[-1], state.effector_history[-(window + 1)])
    eps = stall_threshold(state.step_displacements,
                          config.stall_eps_min, config.stall_eps_scale)
    return net < eps


def apply_recovery(state: EpisodeState, config: ExecutorConfig):
    """Enter recovery: remember where we were and clear motion history."""
    state.saved_subtask_index = state.subtask_index
    state.recovery_left = config.recovery_steps
    state.effector_history.clear()


def run_episode(final: FinalTaskList, scene: Scene, backends,
                layers: list[OverlayLayer] | None = None,
                config: ExecutorConfig = ExecutorConfig(),
                goal_check=None, trace_path=None) -> EpisodeResult:
    """Execute ``final`` in ``scene`` until done, stalled out, or over budget."""
    t_start = time.perf_counter()
    timings = {"vos": 0.0, "vla": 0.0, "verifier": 0.0, "total": 0.0}
    state = EpisodeState()
    vos_state: VosState | None = None
    recoveries = 0
    verifier_calls = 0
    steps = 0
    n = len(final.subtasks)
    trace = open(trace_path, "w", encoding="utf-8") if trace_path else None

    def emit(event: dict):
        if trace is not None:
            trace.write(json.dumps(event, sort_keys=True) + "\n")

    def observe():
        nonlocal vos_state
        frame = render(scene)
        if not layers:
            return frame
        t0 = time.perf_counter()
        overlay, new_state = vos_stream(layers, frame, vos_state, backends,
                                        alpha=config.overlay_alpha)
        vos_state = new_state
        timings["vos"] += time.perf_counter() - t0
        return overlay

    segment_start = observe()
    try:
        while steps < config.max_steps and state.subtask_index < n:
            obs = observe()
            if state.recovery_left > 0:
                prompt = RECOVERY_PROMPT
            else:
                prompt = build_execution_prompt(final, state.subtask_index,
                                                augment=config.augment)
            t0 = time.perf_counter()
            action = backends.vla.act(prompt, obs)
            timings["vla"] += time.perf_counter() - t0
            before_pose = _pose(scene)
            world_step(scene, action)
            steps += 1
            pose = _pose(scene)
            state.step_displacements.append(_dist(before_pose, pose))
            state.effector_history.append(pose)
            emit({"step": steps, "prompt": prompt, "action": list(map(float, action)),
                  "subtask": state.subtask_index,
                  "recovery": state.recovery_left > 0})

            if state.recovery_left > 0:
                state.recovery_left -= 1
                if state.recovery_left == 0:
                    # restore the interrupted subtask and start motion fresh
                    state.subtask_index = state.saved_subtask_index
                    state.saved_subtask_index = None
                    state.effector_history.clear()
                    emit({"event": "recovery_done", "step": steps,
                          "subtask": state.subtask_index})
                continue

            state.steps_since_verify += 1
            if state.steps_since_verify >= config.verify_every:
                state.steps_since_verify = 0
                current = observe()
                prompt = build_verifier_prompt(final.subtasks[state.subtask_index])
                t0 = time.perf_counter()
                answer = backends.verifier.verify(prompt, segment_start, current)
                timings["verifier"] += time.perf_counter() - t0
                verifier_calls += 1
                done = str(answer).strip().lower().startswith("yes")
                emit({"event": "verify", "step": steps, "answer": str(answer),
                      "subtask": state.subtask_index, "done": done})
                segment_start = current
                if done:
                    state.subtask_index += 1
                    state.effector_history.clear()
                    state.step_displacements.clear()
                    continue
            if check_recovery(state, config):
                recoveries += 1
                apply_recovery(state, config)
                emit({"event": "recovery_start", "step": steps,
                      "subtask": state.subtask_index})
    finally:
        if trace is not None:
            trace.close()

    completed = state.subtask_index >= n
    success = bool(goal_check(scene)) if goal_check is not None else completed
    timings["total"] = time.perf_counter() - t_start
    return EpisodeResult(
        completed=completed, success=success, steps=steps,
        recoveries=recoveries, verifier_calls=verifier_calls,
        subtasks_done=state.subtask_index, subtask_count=n, timings=timings,
    )
