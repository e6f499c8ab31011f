"""Rollout kernel selection: compiled extension when present, Python twin
otherwise. Both implement the same function with the same semantics and the
same bit-exact output; ``benchmarks/bench_engine.py`` measures the gap.
"""

from . import rollout_py

try:
    from . import rollout_cy

    HAVE_COMPILED = True
except ImportError:  # extension not built; pure-Python fallback
    rollout_cy = None
    HAVE_COMPILED = False

ACTIVE_BACKEND = "compiled" if HAVE_COMPILED else "python"
run_rollouts = rollout_cy.run_rollouts if HAVE_COMPILED else rollout_py.run_rollouts

UNIFORM, GREEDY, SOFTMAX = 0, 1, 2


def get_backend(name: str):
    """Explicit backend lookup for tests and benchmarks."""
    if name == "python":
        return rollout_py.run_rollouts
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled rollout kernel is not available")
        return rollout_cy.run_rollouts
    raise ValueError(f"unknown backend {name!r}")
