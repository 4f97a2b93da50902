"""Diffusion networks with thermal and quantum annealing on the cube ``(-1, 1)^n``.

The state follows ``du = -grad W dt + sqrt(2T/f(x)) dB`` with ``x = tanh(u/w)``
and ``W = V - Gamma * Vaux``; its stationary law is ``exp(-W/T)`` on the cube.
"""
from .auxiliary import (AUX_KINDS, Contraction, HessianQuadratic, Homotopy, Kinetic1D, KineticND,
                        NoAux, aux_grad, aux_range, aux_value, make_aux, make_effective)
from .dynamics import (Ball, BallUnion, EnsembleReport, LinkFunctions, NetworkState, SimConfig,
                       Superlevel, Trajectory, em_step, ground_ball, histogram, run_ensemble,
                       simulate, simulate_batch)
from .errors import (ConfigurationError, DomainError, EvaluationError, NumericError, QdiffError,
                     StepError, UnsupportedDimensionError)
from .fpgrid import (FokkerPlanck, Grid1D, build_generator, evolve_density, gap_bound_sweep,
                     poincare_c, spectral_gap, stationary_vector, z_trace)
from .gibbs import GibbsSpec, density_grid, gibbs_mass, m_star, tv_distance
from .potentials import (CATALOG, Potential, catalog_make, check_derivatives, constant, double_well,
                         multi_well_cos, potential_range, quadratic_bowl, separable_nd,
                         tilted_double_well)
from .schedules import (ConstantGamma, ConstantT, LinearToZero, Logarithmic, PowerDecay,
                        ZeroGamma, validate_joint)

__version__ = "0.1.0"
