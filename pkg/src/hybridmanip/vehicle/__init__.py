from .dynamics import (
    aerial_derivatives,
    com_gravity_torque,
    friction_forces,
    gravity_rolling,
    rotor_power_terrestrial,
    terrestrial_derivatives,
    terrestrial_energy,
)
from .frames import (
    contact_attitude,
    from_surface_coords,
    rigid_to_terrestrial,
    rolling_rotations,
    rotor_wrench_rolling,
    slope_angle,
    surface_heading,
    surface_normal,
    surface_rotation,
    terrestrial_body_rotation,
    terrestrial_to_rigid,
    to_surface_coords,
    wheel_clearance,
    world_to_rolling,
)
from .types import (
    RigidBodyState,
    RotorCommand,
    StateDerivative,
    SurfaceModel,
    TerrestrialState,
    VehicleParams,
)
