"""Symbol-level precoding for MIMO dual-functional radar-communication.

Constant-modulus transmit vectors are designed per symbol slot to match a
desired radar beampattern while every user's received symbol stays inside
its PSK decision sector with a prescribed margin.  Two solvers are provided:
``solve_pdd`` (penalty dual decomposition with MM linearization) and
``solve_alm`` (augmented Lagrangian with Riemannian BFGS).
"""

from .alm import AlmConfig, al_euclid_grad, al_value, init_radar_only, solve_alm
from .ci import (
    CiInstance,
    EnumerationCapError,
    build_ci,
    ci_margin,
    enumerate_symbol_vectors,
    psk_constellation,
    psk_decide,
    qos_threshold,
)
from .evaluation import (
    beampattern_mse,
    conditional_glr,
    glr,
    iglrt_estimate,
    rmse_angles,
    roc_curve,
    ser_monte_carlo,
    simulate_capture,
)
from .manifold import RbfgsConfig, project_tangent, rbfgs_minimize, retract, transport
from .pdd import (
    PddConfig,
    dual_objective,
    hooke_jeeves,
    mm_surrogate_at,
    recover_x,
    solve_pdd,
    update_v,
    x_block_primal,
)
from .report import InfeasibleCIError, SolverReport
from .scenario import (
    ArrayModel,
    BeampatternGrid,
    CouplingSet,
    DegenerateGridError,
    DfrcScenario,
    angle_grid,
    build_coupling,
    ideal_beampattern,
    instantaneous_beampattern,
    optimal_scale,
    steering_vector,
)

__version__ = "0.1.0"
