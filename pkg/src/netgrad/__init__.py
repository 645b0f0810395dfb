"""netgrad: distributed first-order optimization over communication graphs.

Library layers: graphs and weight schedules, objective functions, seeded
noise streams, the network dynamics engine (discrete recursions and RK4
flows), run diagnostics, and a CLI for seeded experiments with CSV/JSON
outputs and rendered figures.
"""

from .analysis import (BasinLabel, MonteCarloSummary, aggregate, classify_basin,
                       classify_trajectory, consensus_error, gibbs_measure_1d,
                       mass_within, stable_subspace)
from .engine import (ConfigurationError, FlowTrajectory, NetworkState, SimConfig,
                     Trajectory, dgf_integrate, dsgd_step, gf_integrate, run,
                     sgd_run)
from .graph import (Graph, is_connected, laplacian, make_cycle, make_from_edges,
                    make_petersen, parse_edge_list)
from .noise import (STREAM_VERSION, GradientNoiseModel, RegressionData, RngStream,
                    bounded_uniform, derive_run_seed, draw_annealing_noise,
                    draw_gradient_noise, gaussian, no_noise, sample_regression,
                    stochastic_regression_gradient, verify_min_excitation)
from .objective import (AgentObjectives, CriticalPointClass, Objective,
                        check_gradient, classify, cubic_saddle, double_well_1d,
                        double_well_2d, from_spec, quadratic_saddle, replicate,
                        robust_loss, robust_regression, split_uniform)
from .schedule import (Schedule, ValidationReport, WeightTriple, annealing,
                       constant, exp_sqrt, exponential, power, validate_annealing,
                       validate_dsgd)

__version__ = "0.1.0"
