"""groundling: an embodied-agent orchestration pipeline with open-vocabulary
grounding, instant web learning, lexical normalization to a closed training
vocabulary, color-mask routing, and verified execution with recovery — plus a
deterministic symbolic world and stub backends that make the whole loop
runnable and benchmarkable offline.
"""

__version__ = "1.0.0"

from .bench import AblationConfig, run_bench  # noqa: F401
from .executor import ExecutorConfig, run_episode  # noqa: F401
from .memory import MemoryStore, build_known_list  # noqa: F401
from .plan import Instruction, TaskPlan, fallback_parse, parse_plan  # noqa: F401
