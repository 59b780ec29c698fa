"""Construct, certify, and iterate quantum channels with a prescribed fixed point."""
from .channel import (ChoiMatrix, KrausSet, apply_choi, apply_kraus, choi_to_kraus,
                      fixed_point, identity_choi, is_completely_positive,
                      is_trace_preserving, kraus_to_choi, replacement_choi, transfer_matrix)
from .qmat import eigh_desc, gibbs, kron, partial_trace, trace_distance, vec
from .scattering import (CollisionSpec, collision_choi, collision_kraus, partial_swap,
                         thermal_membership)
from .sdpcert import brute_force_min_trace, certify_optimality, dual_feasible, primal_feasible
from .stabilizer import (FamilyChannel, StabilizerTarget, ancilla_dilation, apply_family,
                         extract_completion, is_in_family, is_lossless, iterate,
                         make_lossless_state, min_choi, min_kraus, tp_family_choi)

__version__ = "0.1.0"
