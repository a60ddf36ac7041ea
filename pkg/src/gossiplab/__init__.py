"""Randomized gossip lab.

Average-consensus protocols viewed as randomized Kaczmarz-type solvers on
graph linear systems, with spectral rate predictions and an experiment
harness.  The hot loops run in a compiled extension when it is available
and fall back to pure Python otherwise (see ``gossiplab.backend``).
"""

from . import _backend as backend
from .accel import (AccSchedule, AccState, compute_nu, pencil_max, schedule_option1,
                    schedule_option2, step_accgossip)
from .dual import DualState, dual_objective, dual_optimum, primal_from_dual, step_rnm
from .graph import (Graph, GraphConnectivityError, Partition, UnionFind, connected_components,
                    degree_matrix, incidence_matrix, laplacian, make_complete, make_cycle,
                    make_grid2d, make_path, make_rgg, read_edgelist, write_edgelist)
from .harness import (DivergenceError, ExactnessError, ExperimentConfig, MassAuditError, RateFit,
                      SweepTable, Trajectory, compare_protocols, empirical_averaging_time,
                      export_csv, fit_linear_rate, iterations_to_tolerance, load_config,
                      median_trajectory, read_sweep_csv, read_trajectory_csv, run_experiment,
                      run_seeds, sweep_block_size)
from .linalg import (InconsistentSystemError, NodeWeights, lambda_max, lambda_min_plus,
                     project_solution_set, pseudo_inverse, sym_eigen)
from .protocols import (PROTOCOLS, SAMPLING_MODES, GossipState, ProtocolConfig, sample,
                        sample_batch, step_block, step_gge, step_kaczmarz_motzkin,
                        step_laplacian_block, step_laplacian_rk, step_mrk, step_pairwise_weighted,
                        step_shift_register)
from .rates import (ExpectedZ, SpectralReport, acc_complexity, algebraic_connectivity,
                    check_exactness, expected_Z, momentum_rate_check, rate_rho, spectral_report,
                    t_ave_bound, w_matrix)

__version__ = "0.1.0"
