"""End-to-end pipeline assembly and benchmarking.

One episode = cognition (plan, ground, normalize, colorize) followed by
verified execution.  The bench runner repeats that over seeded scene
randomizations, aggregates per-task success rates, and writes deterministic
reports; ablation flags cut individual cognition stages out wholesale.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import language, vision
from .backends import BackendSuite, CallCounter
from .executor import EpisodeResult, ExecutorConfig, run_episode
from .memory import MemoryStore
from .plan import Instruction, ParseStatus, TaskPlan, build_planner_prompt, \
    fallback_parse, parse_plan
from .simworld.core import render
from .simworld.tasks import TaskDef, load_suite

REPORT_SCHEMA = 1
PLANNER_RETRIES = 2  # regenerations after the first attempt

ABLATION_TOKENS = ("mask", "replace", "web", "subtask-augmentation")


class InvalidAblation(ValueError):
    pass


class InvalidReport(ValueError):
    pass


@dataclass(frozen=True)
class AblationConfig:
    mask: bool = True
    replace: bool = True
    web: bool = True
    subtask_augmentation: bool = True

    @classmethod
    def from_tokens(cls, tokens) -> "AblationConfig":
        """Build from ``--ablate`` tokens naming the stages to REMOVE."""
        flags = {"mask": True, "replace": True, "web": True,
                 "subtask-augmentation": True}
        for token in tokens:
            token = token.strip()
            if not token:
                continue
            if token not in flags:
                raise InvalidAblation(
                    f"unknown ablation {token!r}; expected one of {ABLATION_TOKENS}")
            flags[token] = False
        return cls(mask=flags["mask"], replace=flags["replace"],
                   web=flags["web"],
                   subtask_augmentation=flags["subtask-augmentation"])

    def to_dict(self) -> dict:
        return {"mask": self.mask, "replace": self.replace, "web": self.web,
                "subtask_augmentation": self.subtask_augmentation}


# --- cognition --------------------------------------------------------------

def plan_task(instruction: str, backends, inlist=None) -> TaskPlan:
    """Plan with sign-steered regenerations, then the hard-coded fallback."""
    task = Instruction(instruction)
    sign = ParseStatus.SUCCESS
    for _ in range(1 + PLANNER_RETRIES):
        prompt = build_planner_prompt(task, sign, inlist)
        out = backends.planner_llm.generate(prompt)
        parsed = parse_plan(out, task)
        if isinstance(parsed, TaskPlan):
            return parsed
        sign = parsed
    return fallback_parse(task)


@dataclass
class TermDelivery:
    term: str
    known: bool
    replaced: bool
    masked: bool

    @property
    def covered(self) -> bool:
        return self.known or self.replaced or self.masked


@dataclass
class CognitionResult:
    plan: TaskPlan
    final: language.FinalTaskList
    layers: list
    deliveries: dict[str, TermDelivery] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


def run_cognition(plan: TaskPlan, first_image, memory: MemoryStore, backends,
                  ablation: AblationConfig) -> CognitionResult:
    timings = {"planner": 0.0, "vision": 0.0, "language": 0.0}
    terms = [*plan.objects, *plan.locations]

    t0 = time.perf_counter()
    records: dict[str, vision.GroundingRecord] = {}
    for term in terms:
        records[term] = vision.ground_term(term, first_image, memory, backends,
                                           web_enabled=ablation.web)
    if ablation.mask:
        vision.make_masks(list(records.values()), first_image, backends)
        colors = vision.assign_colors(plan.objects, plan.locations)
        vision.apply_colors(list(records.values()), colors)
        layers = vision.initial_layers(list(records.values()))
    else:
        for rec in records.values():
            rec.mask, rec.color = None, None
        colors = vision.ColorAssignment({})
        layers = []
    timings["vision"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    decisions = {}
    for term in terms:
        decisions[term] = language.resolve_replacement(
            term, records[term], first_image, memory, backends,
            web_enabled=ablation.web, replace_enabled=ablation.replace)
    final = language.finalize_task_list(plan, decisions, colors, records,
                                        mask_enabled=ablation.mask)
    timings["language"] = time.perf_counter() - t0

    deliveries = {
        term: TermDelivery(
            term=term,
            known=decisions[term].kind == "identity",
            replaced=decisions[term].replacement is not None,
            masked=records[term].mask is not None,
        )
        for term in terms
    }
    return CognitionResult(plan=plan, final=final, layers=layers,
                           deliveries=deliveries, timings=timings)


# --- episodes ---------------------------------------------------------------

def episode_rng(seed: int, task_id: str, episode: int) -> random.Random:
    return random.Random(f"{seed}:{task_id}:{episode}")


@dataclass
class EpisodeRecord:
    task_id: str
    episode: int
    success: bool
    deliveries: dict[str, TermDelivery]
    result: EpisodeResult
    timings: dict[str, float]
    final_texts: list[str] = field(default_factory=list)


def run_task_episode(task: TaskDef, plan: TaskPlan, scene, backends,
                     ablation: AblationConfig,
                     memory: MemoryStore | None = None,
                     trace_path=None) -> EpisodeRecord:
    if memory is None:
        memory = MemoryStore(known_list=_default_vocab(backends))
    first = render(scene)
    cog = run_cognition(plan, first, memory, backends, ablation)
    config = ExecutorConfig(augment=ablation.subtask_augmentation)
    result = run_episode(cog.final, scene, backends, cog.layers, config,
                         goal_check=task.goal_satisfied, trace_path=trace_path)
    timings = dict(cog.timings)
    for key, value in result.timings.items():
        if key != "total":
            timings[key] = timings.get(key, 0.0) + value
    _retotal(timings)
    return EpisodeRecord(task_id=task.id, episode=-1, success=result.success,
                         deliveries=cog.deliveries, result=result,
                         timings=timings, final_texts=list(cog.final.texts))


def _retotal(timings: dict[str, float]) -> dict[str, float]:
    """Keep ``total`` the exact sum of the module rows."""
    timings["total"] = sum(v for k, v in timings.items() if k != "total")
    return timings


def _default_vocab(backends) -> list[str]:
    vla = getattr(backends, "vla", None)
    vocab = getattr(vla, "vocab", None)
    if vocab:
        return list(vocab)
    from .backends.stubs import training_vocab
    return training_vocab()


# --- bench ------------------------------------------------------------------

def run_bench(suite_name: str, episodes: int, ablation: AblationConfig,
              seed: int, suite: BackendSuite, collect_details: bool = False):
    """Run the full suite; returns (report dict, timing sidecar dict, details).

    The report is byte-deterministic for a fixed seed; wall-clock numbers are
    confined to the sidecar.
    """
    tasks = load_suite(suite_name)
    counter = CallCounter(suite)
    backends = counter.suite
    plan_timings: list[float] = []
    plans: dict[str, TaskPlan] = {}
    for task in tasks:
        t0 = time.perf_counter()
        plans[task.id] = plan_task(task.instruction, backends)
        plan_timings.append(time.perf_counter() - t0)

    rows = []
    details: list[EpisodeRecord] = []
    module_sums: dict[str, float] = {}
    module_counts = 0
    for task in tasks:
        successes = 0
        for episode in range(episodes):
            rng = episode_rng(seed, task.id, episode)
            scene = task.random_scene(rng)
            record = run_task_episode(task, plans[task.id], scene, backends,
                                      ablation)
            record.episode = episode
            record.timings["planner"] = plan_timings[tasks.index(task)] / max(episodes, 1)
            _retotal(record.timings)
            successes += int(record.success)
            for key, value in record.timings.items():
                module_sums[key] = module_sums.get(key, 0.0) + value
            module_counts += 1
            if collect_details:
                details.append(record)
        rows.append({
            "task": task.id,
            "episodes": episodes,
            "successes": successes,
            "sr": round(100.0 * successes / episodes, 4) if episodes else 0.0,
        })
    rows.sort(key=lambda r: r["task"])
    average = round(sum(r["sr"] for r in rows) / len(rows), 4) if rows else 0.0
    report = {
        "schema": REPORT_SCHEMA,
        "suite": suite_name,
        "seed": seed,
        "episodes": episodes,
        "ablation": ablation.to_dict(),
        "tasks": rows,
        "average_sr": average,
        "backend_calls": counter.snapshot(),
    }
    sidecar = {
        "episodes_timed": module_counts,
        "mean_seconds": {k: v / module_counts for k, v in sorted(module_sums.items())}
        if module_counts else {},
    }
    return report, sidecar, details


def write_report(report: dict, sidecar: dict, out_path: str | Path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    side_path = out_path.with_suffix(out_path.suffix + ".timings.json")
    side_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")


def load_report(path: str | Path) -> dict:
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InvalidReport(f"cannot read report {path}: {exc}")
    if report.get("schema") != REPORT_SCHEMA:
        raise InvalidReport(f"unsupported report schema {report.get('schema')!r}")
    rows = report.get("tasks", [])
    if not rows:
        raise InvalidReport("report has no task rows")
    recomputed = round(sum(r["sr"] for r in rows) / len(rows), 4)
    if abs(recomputed - report.get("average_sr", -1)) > 1e-9:
        raise InvalidReport(
            f"average_sr {report.get('average_sr')} != recomputed {recomputed}")
    return report


def compare_reports(report_a: dict, report_b: dict) -> dict:
    """Per-task and average SR deltas, B minus A."""
    if report_a["suite"] != report_b["suite"]:
        raise InvalidReport(
            f"cannot compare suites {report_a['suite']!r} and {report_b['suite']!r}")
    a_rows = {r["task"]: r for r in report_a["tasks"]}
    b_rows = {r["task"]: r for r in report_b["tasks"]}
    if set(a_rows) != set(b_rows):
        raise InvalidReport("reports cover different task sets")
    deltas = [{"task": t, "a_sr": a_rows[t]["sr"], "b_sr": b_rows[t]["sr"],
               "delta": round(b_rows[t]["sr"] - a_rows[t]["sr"], 4)}
              for t in sorted(a_rows)]
    return {
        "suite": report_a["suite"],
        "tasks": deltas,
        "average_delta": round(report_b["average_sr"] - report_a["average_sr"], 4),
    }


def render_report(report: dict) -> str:
    lines = [f"suite={report['suite']} seed={report['seed']} "
             f"episodes/task={report['episodes']}"]
    ab = report["ablation"]
    removed = [k for k, v in ab.items() if not v]
    lines.append("ablated: " + (", ".join(removed) if removed else "none"))
    lines.append(f"{'task':<16} {'SR':>7}")
    for row in report["tasks"]:
        lines.append(f"{row['task']:<16} {row['sr']:>6.1f}%")
    lines.append(f"{'average':<16} {report['average_sr']:>6.1f}%")
    return "\n".join(lines)


def render_comparison(diff: dict) -> str:
    lines = [f"suite={diff['suite']}",
             f"{'task':<16} {'A':>7} {'B':>7} {'delta':>7}"]
    for row in diff["tasks"]:
        lines.append(f"{row['task']:<16} {row['a_sr']:>6.1f}% {row['b_sr']:>6.1f}% "
                     f"{row['delta']:>+6.1f}")
    lines.append(f"{'average delta':<16} {diff['average_delta']:>+6.1f}")
    return "\n".join(lines)
