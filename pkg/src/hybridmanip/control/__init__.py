from .aerial import (
    AttitudeController,
    AttitudeSetpoint,
    PositionCascade,
    ReferenceState,
    aerial_position_control,
    attitude_determination,
    attitude_rate_loop,
)
from .controllers import AerialController, ArmCompensator, ControlConfig, TerrestrialController
from .pid import Pid, PidGains
from .terrestrial import (
    LosGuidance,
    TiltSolution,
    balance_residual,
    los_gain,
    los_yaw_rate,
    terrestrial_position_control,
    thrust_pitch_determination,
    thrust_schedule,
)
