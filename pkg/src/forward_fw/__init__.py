"""Projection-free optimization with forward-mode gradient estimates.

Frank-Wolfe with exact gradients, with projected forward gradients
``<grad f(x), u> u`` (FGFW), and with a running average of them (AFGFW),
plus the dual-number engine, oracles, test problems and experiment
harness they rely on.
"""

from .algorithms import ConfigError, RunConfig, run, run_afgfw, run_fgfw, run_fw
from .autodiff import Dual, DomainError, jvp, value_and_jvp
from .core import (FW_DEFAULT_ALPHA, DEFAULT_ALPHA, DEFAULT_GAMMA, NonFiniteStateError,
                   RandomSource, Schedule, Trace, convex_step, fw_gap, schedule_eval)
from .estimators import (EstimatorState, ForwardGradientSample, forward_gradient_stats,
                         sample_forward_gradient, second_moment_ratio, update_average)
from .harness import ExperimentSpec, parse_config, run_experiment
from .lmo import (L1Ball, L2Ball, Box, ProductSet, Simplex, l1_ball_product, lmo_box,
                  lmo_l1, lmo_l2, lmo_simplex)
from .problems import (LeastSquares, MultinomialLogistic, Quadratic, generate_synthetic,
                       load_idx, load_mnist, make_least_squares, make_quadratic,
                       reference_optimum)

__version__ = "0.1.0"
