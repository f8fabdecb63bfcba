"""Exact K-functionals, interpolation relations and contraction certificates
on finite atomic measure spaces."""
from .certify import (Budget, certify_intermediate, equivalence_report, theorem_suite,
                      trichotomy_check)
from .evolve import GraphDirichletForm, dirichlet_form_check, energy_eval, prox_step, run_and_audit
from .exceptions import (DimensionError, DomainError, InconsistencyError, InputError,
                         KInterpError, PrecisionError, SpecError, UnsupportedError,
                         VerificationError)
from .kfunctional import (KCurve, k_curve, k_inf_value, k_l1linf_curve, k_value,
                          lift_decomposition, optimal_decomposition, refine_decomposition)
from .lattice import (Couple, LatticeVector, MeasureSpace, NormSpec, double_star,
                      lattice_eval, norm_eval, rearrange)
from .lp import LinearProgram, lp_solve
from .operators import (DomainDescriptor, OperatorSpec, builtin_operator, certify_gp,
                        gp_constant_bridge, operator_couple_norm, renormalize, structure_checks)
from .relations import RelationReport, check_relation, relation_constant
from .synthesis import (SearchBudget, band_projection, cm_witness_search, diagonal_compose,
                        synthesize_contraction, synthesize_ll)

__version__ = "0.1.0"
