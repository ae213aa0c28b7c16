"""Line spectral estimation with atomic-norm regularization.

Estimates frequencies and complex amplitudes of a sparse mixture of
sinusoids from 2n+1 noisy equispaced samples, certifies global optimality of
the regularized solution through its dual polynomial, and benchmarks against
MUSIC, truth-initialized MLE, and the Cramer-Rao bound.
"""

from .baselines import CrbResult, crb, estimate_model_order, mle_refine, music
from .dual_certificate import (CertificateReport, DualPolynomial,
                               NoiseDualBound, construct_noiseless_certificate,
                               dual_from_primal, noise_bound, noise_bound_check,
                               noise_dual_norm, verify_bip)
from .experiments import (ExperimentConfig, TrialRecord, run_crb_comparison,
                          run_phase_transition, run_scaling_check)
from .kernel import (KernelBoundSet, KernelContext, WeightDiagonal, bound_B,
                     bound_F, bound_W, kernel_derivative, kernel_matrix,
                     kernel_tables, region_extrema, weight_diagonal)
from .signal_model import (LineSpectrum, NoiseSpec, SampleVector, add_noise,
                           atoms, match_supports, synthesize, wrap_distance)
from .solver import (DegeneratePathError, JointParameter, SolveResult,
                     SolverConfig, WeightedNorm, fixed_point_map, gradient,
                     hessian, objective, solve_blind, solve_witness)

__version__ = "0.1.0"
