"""Near-optimal decentralized control of leader-follower LQ networks.

The library synthesizes linear feedback strategies from two low-dimensional
backward Riccati recursions, simulates the network under the decentralized
(z-process) strategy and the mean-field-sharing oracle strategy, and
evaluates the optimality gap both in closed form (trace/Lyapunov formula,
exactly proportional to 1/n) and by paired Monte Carlo.
"""

from .analysis import (
    ErrorSystem,
    GapReport,
    build_error_system,
    centralized_oracle,
    convergence_sweep,
    delta_j_closed_form,
    delta_j_monte_carlo,
    fit_loglog_slope,
    gap_closed_form,
    oracle_cost_monte_carlo,
    paired_costs,
    write_gap_csv,
    write_sweep_csv,
)
from .errors import (
    AssumptionError,
    ScenarioError,
    ScenarioParseError,
    ScenarioShapeError,
    SimulationBlowupError,
    SynthesisError,
)
from .model import (
    AugmentedSystem,
    Dimensions,
    MatrixSchedule,
    ScenarioConfig,
    build_augmented,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .riccati import (
    GainSchedule,
    RiccatiSolution,
    compute_gains,
    riccati_residuals,
    solve_riccati,
    solve_riccati_bar,
    solve_riccati_breve,
    synthesize,
)
from .simulate import (
    NoiseRealization,
    SimulationRecord,
    draw_noise,
    evaluate_cost,
    run_oracle,
    run_proposed,
    sample_follower_indices,
    write_trajectory_csv,
)

__version__ = "0.1.0"
