"""Pushdown control-flow analysis with stack summaries and abstract GC.

Analyses for a unary ANF lambda language:

- a concrete CESK interpreter (ground truth),
- a classical finite-state CFA with continuations in the store (baseline),
- a pushdown analysis whose configurations carry client-pluggable finite
  stack summaries, optionally collected by an abstract garbage collector
  before every transition.
"""

from .syntax import anf_of_source, desugar, free_vars, parse, pretty

__all__ = ["anf_of_source", "desugar", "free_vars", "parse", "pretty"]
