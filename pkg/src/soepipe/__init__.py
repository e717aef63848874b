"""Weak-supervision pipeline for labeling clinical-protocol tables.

Dual-view LLM verdicts, consensus filtering, human review of disagreements,
policy-based dataset assembly, a deterministic proxy classifier, and a
bootstrap evaluation harness.
"""

from ._core import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
