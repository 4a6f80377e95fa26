"""AND-inverter graph synthesis from truth tables via guided tree search."""

from .aig import Aig, aag_read, aag_write, aig_eval, make_aig, node_tables, output_table
from .env import Action, SynthState, legal_actions, new_state, step
from .evaluator import Evaluation, HeuristicEvaluator, RemoteEvaluator, UniformEvaluator
from .oracle import exact_minimal, minimal_size_table
from .search import SearchConfig, SynthResult, synthesize
from .truthtable import TruthTable, input_projection, tt_and, tt_not

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Aig",
    "Evaluation",
    "HeuristicEvaluator",
    "RemoteEvaluator",
    "SearchConfig",
    "SynthResult",
    "SynthState",
    "TruthTable",
    "UniformEvaluator",
    "aag_read",
    "aag_write",
    "aig_eval",
    "exact_minimal",
    "input_projection",
    "legal_actions",
    "make_aig",
    "minimal_size_table",
    "new_state",
    "node_tables",
    "output_table",
    "step",
    "synthesize",
    "tt_and",
    "tt_not",
]
