"""Generalized Weyl quantization of classical dynamical operators.

Maps classical generators L(q, p, d/dq, d/dp), Hamiltonian or dissipative, to
superoperators on a truncated Fock space and evolves both sides.
"""
__version__ = "0.1.0"

from .hilbert import (ContextMismatchError, MatrixOperator, QuantizationContext, TruncationError,
                      WeylBasisParams, build_p, build_q, build_weyl_operator, coherent_state,
                      commutator, expectation, hs_inner, jordan, weyl_quantize)
from .lindblad import (DerivedParams, FokkerPlanckCoeffs, InfeasibleDiffusionError, LindbladModel,
                       build_explicit_superop, build_lindblad_superop, calibrate_h, derive_params,
                       fokker_planck_dynop, solve_lindblad_ops)
from .superop import (SuperOperator, SuperOpWord, apply, build_P1, build_P2, build_Q1, build_Q2,
                      build_weyl_superop_basis, hamiltonian_superop, left_mult, quantize_dynop,
                      right_mult, superop_adjoint)
from .symbol import (ClassicalState, DivergenceError, DynOpSymbol, FrictionCoefficients,
                     MultiIndex, NotADerivationError, PolySymbol, dynop_apply,
                     dynop_friction_oscillator, dynop_from_hamiltonian, integrate_classical,
                     leipnik_newton_coefficients, lorenz_coefficients, lorenz_type_dynop,
                     poisson_bracket, pvar, qvar, rossler_coefficients, vector_field)
from .evolve import EvolutionSpec, TrajectoryRecord, ehrenfest_compare, evolve_observable, evolve_state
