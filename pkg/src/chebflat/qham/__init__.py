"""Pauli algebra, Gibbs states and the coupling-recovery constraint system."""

from .pauli import (DENSE_CAP, InteractionGraph, LocalHamiltonian, PauliString,
                    interaction_graph, pauli_mul, pauli_set_klG, to_dense)
from .gibbs import TraceEstimator, gibbs_state, trace_est
from .comm import comm_poly2_apply, comm_poly_apply, flat_comm_apply, nested_comm
from .pop import (PopInstance, ResidualOnlyError, add_ball_constraint, assemble_pop,
                  export_pop, import_pop, learn, residual_report, residuals)
from .presets import PRESETS, build_preset

__all__ = [
    "DENSE_CAP", "InteractionGraph", "LocalHamiltonian", "PauliString",
    "interaction_graph", "pauli_mul", "pauli_set_klG", "to_dense",
    "TraceEstimator", "gibbs_state", "trace_est",
    "comm_poly2_apply", "comm_poly_apply", "flat_comm_apply", "nested_comm",
    "PopInstance", "ResidualOnlyError", "add_ball_constraint", "assemble_pop",
    "export_pop", "import_pop", "learn", "residual_report", "residuals",
    "PRESETS", "build_preset",
]
