"""Command-line entry points: run one task, bench a suite, compare reports,
inspect or reset the persistent memory, and host the stub backends over HTTP.

Exit codes: 0 success, 1 task failure (run), 2 configuration/backend error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import BackendFailure, CallCounter, ProtocolError
from .backends.remote import remote_suite
from .backends.stubs import stub_suite, training_vocab
from .bench import (
    AblationConfig, InvalidAblation, InvalidReport, compare_reports,
    episode_rng, load_report, plan_task, render_comparison, render_report,
    run_bench, run_task_episode, write_report,
)
from .memory import MemoryStore, load_store, reset_ood, save_store
from .simworld.tasks import InvalidSuite, load_suite


def _load_backends(config_path: str | None):
    if config_path is None:
        return stub_suite()
    try:
        config = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read backend config: {exc}")
    mode = config.get("mode", "stub")
    if mode == "stub":
        return stub_suite()
    if mode == "remote":
        base_url = config.get("base_url")
        if not base_url:
            raise click.ClickException("remote backend config needs base_url")
        return remote_suite(base_url)
    raise click.ClickException(f"unknown backend mode {mode!r}")


def _parse_ablation(spec: str) -> AblationConfig:
    try:
        return AblationConfig.from_tokens(spec.split(",") if spec else [])
    except InvalidAblation as exc:
        raise click.ClickException(str(exc))


def _find_task(suite_name: str, task_id: str):
    try:
        tasks = load_suite(suite_name)
    except InvalidSuite as exc:
        raise click.ClickException(str(exc))
    for task in tasks:
        if task.id == task_id:
            return task
    raise click.ClickException(
        f"no task {task_id!r} in suite {suite_name!r}; "
        f"available: {', '.join(t.id for t in tasks)}")


@click.group()
def main():
    """Embodied-agent pipeline: plan, ground, normalize, execute, verify."""


@main.command()
@click.argument("task_id")
@click.option("--suite", default="hard", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--episode", default=0, show_default=True, type=int,
              help="Episode index for the seeded scene randomization.")
@click.option("--canonical", is_flag=True,
              help="Use the task's canonical layout instead of a seeded one.")
@click.option("--ablate", default="", help="Comma list of stages to remove.")
@click.option("--backends", "backends_path", default=None, type=click.Path())
@click.option("--memory", "memory_root", default=None, type=click.Path(),
              help="Persistent memory root; loaded before and saved after.")
@click.option("--trace", "trace_path", default=None, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def run(task_id, suite, seed, episode, canonical, ablate, backends_path,
        memory_root, trace_path, out_path):
    """Run one task episode end to end; exit 1 if the episode fails."""
    ablation = _parse_ablation(ablate)
    task = _find_task(suite, task_id)
    try:
        counter = CallCounter(_load_backends(backends_path))
        backends = counter.suite
        if memory_root:
            memory = load_store(memory_root)
            if not memory.known_list:
                memory.known_list = training_vocab()
        else:
            memory = MemoryStore(known_list=training_vocab())
        scene = task.canonical_scene() if canonical else \
            task.random_scene(episode_rng(seed, task.id, episode))
        plan = plan_task(task.instruction, backends)
        record = run_task_episode(task, plan, scene, backends, ablation,
                                  memory=memory, trace_path=trace_path)
        if memory_root:
            save_store(memory, memory_root)
    except (BackendFailure, ProtocolError) as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(2)
    payload = {
        "task": task.id,
        "suite": suite,
        "success": record.success,
        "steps": record.result.steps,
        "recoveries": record.result.recoveries,
        "subtasks_done": record.result.subtasks_done,
        "subtask_count": record.result.subtask_count,
        "final_task_list": record.final_texts,
        "ablation": ablation.to_dict(),
        "backend_calls": counter.snapshot(),
        "deliveries": {t: {"known": d.known, "replaced": d.replaced,
                           "masked": d.masked}
                       for t, d in record.deliveries.items()},
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text)
    sys.exit(0 if record.success else 1)


@main.command()
@click.option("--suite", default="hard", show_default=True)
@click.option("--episodes", default=50, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--ablate", default="", help="Comma list of stages to remove.")
@click.option("--backends", "backends_path", default=None, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def bench(suite, episodes, seed, ablate, backends_path, out_path):
    """Benchmark a suite and write a deterministic report."""
    ablation = _parse_ablation(ablate)
    try:
        backend_suite = _load_backends(backends_path)
        report, sidecar, _ = run_bench(suite, episodes, ablation, seed,
                                       backend_suite)
    except InvalidSuite as exc:
        raise click.ClickException(str(exc))
    except (BackendFailure, ProtocolError) as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(2)
    if out_path:
        write_report(report, sidecar, out_path)
    click.echo(render_report(report))


@main.command()
@click.argument("report_a", type=click.Path(exists=True))
@click.argument("report_b", type=click.Path(exists=True))
def compare(report_a, report_b):
    """Per-task SR deltas between two reports of the same suite."""
    try:
        diff = compare_reports(load_report(report_a), load_report(report_b))
    except InvalidReport as exc:
        click.echo(f"invalid comparison: {exc}", err=True)
        sys.exit(2)
    click.echo(render_comparison(diff))


@main.group()
def memory():
    """Inspect or reset the persistent memory store."""


@memory.command()
@click.argument("root", type=click.Path())
def inspect(root):
    """Summarize a memory store."""
    store = load_store(root)
    click.echo(json.dumps({
        "vision_terms": {t: e.keywords for t, e in sorted(store.vision.items())},
        "replace_map": dict(sorted(store.replace_map.items())),
        "known_list_size": len(store.known_list),
    }, indent=2, sort_keys=True))


@memory.command("reset-ood")
@click.argument("root", type=click.Path())
def reset_ood_cmd(root):
    """Drop every memory entry for out-of-vocabulary terms."""
    store = load_store(root)
    before = len(store.vision) + len(store.replace_map)
    reset_ood(store, store.known_list or training_vocab())
    save_store(store, root)
    after = len(store.vision) + len(store.replace_map)
    click.echo(f"removed {before - after} out-of-vocabulary entries")


@main.command("serve-stubs")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8641, show_default=True, type=int)
def serve_stubs(host, port):
    """Host the stub backends over the wire protocol (Ctrl-C to stop)."""
    from .backends.server import serve
    server = serve(stub_suite(), host, port)
    bound = server.server_address
    click.echo(f"serving stub backends on http://{bound[0]}:{bound[1]}")
    try:
        server._serving_thread.join()
    except KeyboardInterrupt:
        server.shutdown()


if __name__ == "__main__":
    main()
