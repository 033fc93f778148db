"""Hallucination verification: claim extraction, knowledge-graph reasoning,
counterfactual probing and score fusion."""

__version__ = "0.1.0"
