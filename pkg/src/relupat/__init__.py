"""Decision patterns of ReLU networks: verification, mining and their uses."""

from .model import (Network, NetworkFormatError, NeuronId, activation_signature, evaluate,
                    figure1_network, load_network, random_network, save_network)
from .pattern import DecisionPattern, is_closed, satisfies, satisfies_batch, support
from .postcondition import Postcondition, parse_post
from .data import Dataset, read_csv, write_csv
from .affine import Polytope, polytope_of, propagate
from .lp import Box, EmptyBox, LinearProgram, LpStatus, max_box, solve
from .verify import Budget, Query, Region, Status, Verdict, dp, dp_implies_pattern, dp_layer
from .relax import InputProperty, infer_input_property
from .mine import MinedPattern, PatternStatus, mine_and_prove, mine_layer_patterns, validate_empirically
from .explain import MinimalAssignment, format_box, minimal_assignment, under_approx_box
from .distill import DistillReport, RuleTable, benchmark, build_rule_table, hybrid_evaluate
from .decompose import (PlanStatus, ProofPlan, prove_contract, prove_via_interpolant,
                        prove_via_prefix_cover, select_interpolant)

__version__ = "0.1.0"
