from .ekf import NoiseModel, arrival_cost_update, ekf_predict, ekf_update
from .inclination import gamma_or_nan, inclination_from_force
from .mhe import (
    EstimationWindow,
    EstimatorOutput,
    MheConfig,
    MheDiagnostics,
    MheResult,
    MovingHorizonEstimator,
    initial_guess,
    mhe_solve,
    stacked_problem,
)
from .models import (
    NX,
    NY,
    AugmentedState,
    EstimatorInput,
    fold_force_into_input,
    input_term,
    measurement_jacobian,
    measurement_model,
    process_jacobian,
    process_model,
    transition_matrix,
)
from .replay import read_estimator_log, replay, write_estimates
