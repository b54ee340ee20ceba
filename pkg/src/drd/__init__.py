"""Decision region determination with the hyperedge cutting greedy policy."""

from .core import (Evidence, ProblemInstance, ValidationReport, apply_test, consistent_hypotheses,
                   is_solved, make_instance, posterior, validate_instance)
from .errors import (ContradictoryEvidence, DRDError, DuplicateTest, InfeasiblePolicy,
                     InstanceFormatError, InternalInconsistency, LimitExceeded, ValidationError)
from .hypergraph import build_index, cardinality_k, compute_subregions, solved_iff_edges_cut
from .chp import chp, hyperedge_weight, objective_f
from .policies import (PolicyKind, expected_cost, make_baseline, make_policy, marginal_gain,
                       run_policy, select_test_greedy)
from .instances import load_instance, save_instance, write_results

__all__ = [
    "Evidence", "ProblemInstance", "ValidationReport", "apply_test", "consistent_hypotheses",
    "is_solved", "make_instance", "posterior", "validate_instance",
    "ContradictoryEvidence", "DRDError", "DuplicateTest", "InfeasiblePolicy", "InstanceFormatError",
    "InternalInconsistency", "LimitExceeded", "ValidationError",
    "build_index", "cardinality_k", "compute_subregions", "solved_iff_edges_cut",
    "chp", "hyperedge_weight", "objective_f",
    "PolicyKind", "expected_cost", "make_baseline", "make_policy", "marginal_gain", "run_policy",
    "select_test_greedy", "load_instance", "save_instance", "write_results",
]
