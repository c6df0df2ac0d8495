"""Walk one task through the whole pipeline, printing every stage.

Usage: python3 demos/run_single_task.py [task-id]
"""

import sys

from groundling.backends.stubs import stub_suite, training_vocab
from groundling.bench import AblationConfig, plan_task, run_cognition
from groundling.executor import ExecutorConfig, run_episode
from groundling.memory import MemoryStore
from groundling.simworld.core import render
from groundling.simworld.tasks import load_suite

task_id = sys.argv[1] if len(sys.argv) > 1 else "bowl-stove"
task = next(t for t in load_suite("hard") if t.id == task_id)
suite = stub_suite()
memory = MemoryStore(known_list=training_vocab())

print(f"instruction : {task.instruction}")

plan = plan_task(task.instruction, suite)
print("\nplanned subtasks:")
for sub in plan.subtasks:
    print(f"  {sub.index}. {sub.text}  /({', '.join(sub.slots)})/")

scene = task.canonical_scene()
cog = run_cognition(plan, render(scene), memory, suite, AblationConfig())

print("\nterm deliveries:")
for term, d in cog.deliveries.items():
    status = "known" if d.known else \
        ("replaced+masked" if d.replaced and d.masked else
         "replaced" if d.replaced else "masked" if d.masked else "undelivered")
    print(f"  {term:<28} {status}")

print("\nfinal task list handed to the action model:")
for text in cog.final.texts:
    print(f"  - {text}")

result = run_episode(cog.final, scene, suite, cog.layers,
                     ExecutorConfig(), goal_check=task.goal_satisfied)
print(f"\nexecuted {result.steps} steps, "
      f"{result.verifier_calls} verifier checks, "
      f"{result.recoveries} recoveries")
print(f"goal satisfied: {result.success}")
