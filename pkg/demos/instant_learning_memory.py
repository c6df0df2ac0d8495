"""Show the instant-learning memory: web calls on the first encounter with a
novel term, zero on the second, and back again after an OOD reset.

Usage: python3 demos/instant_learning_memory.py
"""

from groundling.backends import CallCounter
from groundling.backends.stubs import stub_suite, training_vocab
from groundling.bench import AblationConfig, plan_task, run_task_episode
from groundling.memory import MemoryStore, reset_ood
from groundling.simworld.tasks import load_suite

LEARNED = ("image_search", "understanding_vision", "understanding_text",
           "text_snippets")

task = next(t for t in load_suite("hard") if t.id == "bowl-stove")
counter = CallCounter(stub_suite())
memory = MemoryStore(known_list=training_vocab())
plan = plan_task(task.instruction, counter.suite)


def run(label):
    counter.reset()
    record = run_task_episode(task, plan, task.canonical_scene(),
                              counter.suite, AblationConfig(), memory=memory)
    calls = counter.snapshot()
    print(f"{label}:")
    for cap in LEARNED:
        print(f"  {cap:<22} {calls[cap]}")
    print(f"  success: {record.success}")
    print(f"  task list: {record.final_texts}\n")


run("cold run (nothing cached)")
print(f"memory now holds keywords for: {sorted(memory.vision)}")
print(f"and replacements: {dict(memory.replace_map)}\n")

run("warm run (memory hit, no web traffic)")

reset_ood(memory, memory.known_list)
print("after reset_ood the out-of-vocabulary entries are gone\n")
run("post-reset run (relearns from scratch)")
