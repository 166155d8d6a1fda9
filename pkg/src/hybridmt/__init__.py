"""Hybrid knowledge-based/statistical Japanese-English translation pipeline.

The package is organized around a transformer / ranker-pruner pipeline:
source tokens are chunked, chart-parsed under a unification grammar, and
then translated either through a direct glossing path (parse forest ->
word lattice -> trigram best path) or an interlingua path (compositional
semantic analysis -> conceptual-triple ranking -> template realization ->
lattice extraction), finished by a decision-tree article posteditor.
"""

__version__ = "0.1.0"
