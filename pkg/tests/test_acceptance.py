"""Top-level acceptance: one test (or class) per shipped guarantee.

The success-rate math is checked against an independent brute-force oracle
that enumerates, per episode, which slot terms can possibly be delivered
(known / replaced / color-masked) straight from the fixture tables — no
pipeline code involved — and is then asserted equal to the measured pipeline
outcome with zero tolerance.
"""

import json
import re
import time

import pytest
from hypothesis import settings

from groundling.backends import CallCounter
from groundling.backends.stubs import stub_suite, training_vocab
from groundling.bench import (
    AblationConfig, episode_rng, plan_task, run_bench, run_task_episode,
)
from groundling.memory import MemoryStore, reset_ood
from groundling.plan import Instruction, ParseStatus, build_planner_prompt, \
    parse_plan
from groundling.simworld import fixtures
from groundling.simworld.tasks import load_suite

SEED = 0
EPISODES = 50


# --- the independent episode oracle -----------------------------------------

_SLOT_GROUPS = re.compile(r"/\((.*?)\)/")


def slot_terms(task) -> set[str]:
    """Slot terms read straight from the fixture's ideal plan text."""
    terms = set()
    for group in _SLOT_GROUPS.findall(task.plan_text):
        terms.update(t.strip() for t in group.split(","))
    return {t for t in terms if t}


def oracle_term_delivery(task, scene, term, ablation):
    """(known, replaced, masked) for one term, from fixture tables only."""
    known = term not in task.novel_terms
    entry = fixtures.TEXT_REPLACEMENTS.get(term)
    replaced = (
        not known and ablation.replace and entry is not None
        and entry["replacement"] is not None
        and (ablation.web or not entry["needs_snippets"])
    )
    if known:
        masked = ablation.mask  # name-route detection always succeeds
    else:
        overlap = set(fixtures.VISION_KEYWORDS.get(term, ())) & \
            scene.entities[term].visible_tags
        masked = ablation.mask and ablation.web and len(overlap) >= 2
    return known, replaced, masked


def oracle_success(task, scene, ablation) -> bool:
    if task.goal_satisfied(scene):
        return True  # seeded layout already satisfies the goal
    return all(any(oracle_term_delivery(task, scene, term, ablation))
               for term in slot_terms(task))


def oracle_sr(task, ablation, episodes=EPISODES, seed=SEED) -> float:
    wins = sum(
        oracle_success(task, task.random_scene(episode_rng(seed, task.id, ep)),
                       ablation)
        for ep in range(episodes))
    return round(100.0 * wins / episodes, 4)


# --- measured reports (computed once; compared everywhere) ------------------

CONFIGS = {
    "full": AblationConfig(),
    "no_mask": AblationConfig(mask=False),
    "no_web": AblationConfig(web=False),
    "no_replace": AblationConfig(replace=False),
    "all_removed": AblationConfig(mask=False, replace=False, web=False),
}


@pytest.fixture(scope="module")
def measured():
    out = {}
    t0 = time.perf_counter()
    for name, ablation in CONFIGS.items():
        report, _, details = run_bench("hard", EPISODES, ablation, SEED,
                                       stub_suite(), collect_details=True)
        out[name] = (report, details)
    out["_elapsed"] = time.perf_counter() - t0
    return out


class TestAblationMechanism:
    def test_strict_ordering_of_average_srs(self, measured):
        sr = {name: measured[name][0]["average_sr"] for name in CONFIGS}
        assert sr["full"] > sr["no_mask"]
        assert sr["full"] > sr["no_web"]
        assert sr["no_mask"] > sr["no_replace"]
        assert sr["no_web"] > sr["no_replace"]
        assert sr["no_replace"] > sr["all_removed"]
        assert sr["no_mask"] - sr["no_replace"] >= 10.0
        assert sr["no_web"] - sr["no_replace"] >= 10.0

    @pytest.mark.parametrize("name", list(CONFIGS))
    def test_measured_srs_equal_oracle_exactly(self, measured, name):
        report = measured[name][0]
        ablation = CONFIGS[name]
        for task in load_suite("hard"):
            row = next(r for r in report["tasks"] if r["task"] == task.id)
            assert row["sr"] == oracle_sr(task, ablation), \
                f"{name}/{task.id}"

    def test_suite_runs_inside_time_budget(self, measured):
        assert measured["_elapsed"] < 300.0  # all five 50-episode sweeps


class TestHardTaskCausality:
    def test_every_episode_cross_checked_against_oracle(self, measured):
        tasks = {t.id: t for t in load_suite("hard")}
        for name, ablation in CONFIGS.items():
            for record in measured[name][1]:
                task = tasks[record.task_id]
                scene = task.random_scene(
                    episode_rng(SEED, task.id, record.episode))
                expected = oracle_success(task, scene, ablation)
                assert record.success == expected, \
                    f"{name}/{task.id}#{record.episode}"

    def test_failures_are_exactly_undelivered_episodes(self, measured):
        tasks = {t.id: t for t in load_suite("hard")}
        for record in measured["full"][1]:
            task = tasks[record.task_id]
            scene = task.random_scene(
                episode_rng(SEED, task.id, record.episode))
            if task.goal_satisfied(scene):
                continue  # degenerate seeded layout, success regardless
            undelivered = [t for t, d in record.deliveries.items()
                           if not d.covered]
            assert record.success == (not undelivered), \
                f"{task.id}#{record.episode}: {undelivered}"

    def test_in_vocabulary_task_unaffected_by_every_ablation(self, measured):
        for name in CONFIGS:
            row = next(r for r in measured[name][0]["tasks"]
                       if r["task"] == "stove")
            assert row["sr"] == 100.0, name


class TestMemoryReuse:
    def _episode(self, counter, memory):
        task = next(t for t in load_suite("hard") if t.id == "bowl-stove")
        plan = plan_task(task.instruction, counter.suite)
        return run_task_episode(task, plan, task.canonical_scene(),
                                counter.suite, AblationConfig(), memory=memory)

    def test_second_run_hits_memory_then_reset_restores(self):
        counter = CallCounter(stub_suite())
        memory = MemoryStore(known_list=training_vocab())
        learned = ("image_search", "understanding_vision",
                   "understanding_text", "text_snippets")

        cold = self._episode(counter, memory)
        cold_calls = counter.snapshot()
        assert all(cold_calls[cap] > 0 for cap in learned)

        counter.reset()
        warm = self._episode(counter, memory)
        warm_calls = counter.snapshot()
        assert all(warm_calls[cap] == 0 for cap in learned)
        assert warm.final_texts == cold.final_texts
        assert warm.success and cold.success

        reset_ood(memory, memory.known_list)
        counter.reset()
        relearn = self._episode(counter, memory)
        assert counter.snapshot() == cold_calls
        assert relearn.final_texts == cold.final_texts


class TestPromptFidelity:
    def test_all_prompt_families_within_budget(self, vocab):
        from groundling.language import (
            build_text_messages, build_verifier_prompt,
        )
        from groundling.plan import Subtask
        from groundling.vision import build_vision_messages

        t0 = time.perf_counter()
        planner = build_planner_prompt(
            Instruction("put the saucer on the stove"), ParseStatus.SUCCESS,
            None)
        assert "You are a planning assistant for a fixed robotic arm." in planner
        assert "Goal: Put the apple in the red bowl" in planner
        assert planner.endswith("Task: put the saucer on the stove\nOutput:\n")

        pick = build_verifier_prompt(
            Subtask(1, "pick up", "pick up the plate", ["plate"]))
        assert pick == (
            "Observe the inputs (two videos or two image-flow videos). The "
            "subtask robot arm is currently working on: 'pick up the plate'. "
            " Based *Only* on the provided media, has 'plate' or anything else "
            "been grasped and lifted off any surface by the end? Answer 'Yes' "
            "or 'No'.")
        place = build_verifier_prompt(
            Subtask(2, "place-on", "place the plate on the stove",
                    ["plate", "stove"]))
        assert "been placed 'stove' and is the gripper away?" in place
        on = build_verifier_prompt(Subtask(1, "turn on", "turn on the stove",
                                           ["stove"]))
        assert "been turned on (powered up) by the end?" in on
        off = build_verifier_prompt(Subtask(1, "close", "close the drawer",
                                            ["drawer"]))
        assert "been fully closed by the end?" in off

        vision = build_vision_messages("saucer", None, None)
        sys_text = vision[0]["content"][0]["text"]
        assert "generate five of the most relevant keywords" in sys_text
        assert 'There is something suitable for the query"saucer"' in sys_text
        assert vision[1]["content"][0]["text"] == \
            "Here is the combined image from the web."

        text = build_text_messages("saucer", list(vocab), None, None,
                                   snippets=["a snippet"])
        flat = json.dumps([p["text"] for m in text for p in m["content"]
                           if p["type"] == "text"])
        assert "Allowed vocabulary:" in flat
        assert "New object mention: saucer" in flat
        assert "External brief (web/Wikipedia):" in flat
        assert "<answer>LABEL_OR_NONE</answer>" in flat
        assert time.perf_counter() - t0 < 1.0


class TestParserGoldens:
    def test_planner_examples_and_appendix_pipeline_strings(self, suite,
                                                            vocab):
        from groundling.bench import run_cognition
        from groundling.simworld.core import render

        t0 = time.perf_counter()
        eight = (
            "1. pick up the apple /(apple)/\n"
            "2. place the apple in the red bowl /(apple, red bowl)/")
        plan = parse_plan(eight, Instruction("golden"))
        assert [(s.verb, s.slots) for s in plan.subtasks] == [
            ("pick up", ["apple"]), ("place-in", ["apple", "red bowl"])]

        task = next(t for t in load_suite("hard") if t.id == "bowl-stove")
        plan = plan_task(task.instruction, suite)
        assert [s.text for s in plan.subtasks] == [
            "pick up the blue white porcelain bowl",
            "place the blue white porcelain bowl on the stove"]
        cog = run_cognition(plan, render(task.canonical_scene()),
                            MemoryStore(known_list=list(vocab)), suite,
                            AblationConfig())
        assert cog.final.texts == [
            "pick up the red-mask black bowl",
            "place the red-mask black bowl on the blue-mask stove"]
        assert time.perf_counter() - t0 < 1.0


class TestExecutorContract:
    def test_cadence_and_recovery_shape(self):
        from groundling.executor import ExecutorConfig, run_episode
        from groundling.language import RECOVERY_PROMPT, FinalTaskList
        from groundling.plan import Subtask

        class StallVla:
            prompts = []

            def act(self, prompt, image):
                self.prompts.append(prompt)
                return [0.0] * 7

        class NoVerifier:
            calls = 0

            def verify(self, prompt, before, after):
                NoVerifier.calls += 1
                return "No"

        class B:
            vla = StallVla()
            verifier = NoVerifier()

        final = FinalTaskList(goal="g", subtasks=[
            Subtask(1, "pick up", "pick up the black bowl", ["black bowl"])])
        scene = load_suite("hard")[0].canonical_scene()
        result = run_episode(final, scene, B(),
                             config=ExecutorConfig(max_steps=60))
        # frozen effector: the 15-step window fills at step 16, recovery spans
        # steps 17-26, and the pattern repeats (second stall at step 42)
        assert result.recoveries == 2
        assert B.vla.prompts[16:26] == [RECOVERY_PROMPT] * 10
        assert B.vla.prompts[26] != RECOVERY_PROMPT
        assert B.vla.prompts[42:52] == [RECOVERY_PROMPT] * 10
        # the cadence counts productive (non-recovery) steps only: the 20th
        # productive step lands on world step 30 and the 40th on step 60
        assert NoVerifier.calls == 2

    def test_timing_rows_sum_to_total(self):
        task = next(t for t in load_suite("hard") if t.id == "bowl-stove")
        suite = stub_suite()
        plan = plan_task(task.instruction, suite)
        record = run_task_episode(task, plan, task.canonical_scene(), suite,
                                  AblationConfig())
        keys = set(record.timings)
        assert keys == {"planner", "vision", "language", "vos", "vla",
                        "verifier", "total"}
        assert record.timings["total"] == pytest.approx(
            sum(v for k, v in record.timings.items() if k != "total"))


def test_property_suites_run_at_bulk_volume():
    profile = settings.get_profile("bulk")
    assert profile.max_examples >= 1000
