from __future__ import annotations

import math

import numpy as np

from ..errors import NoReliableContact


def inclination_from_force(force, noise_floor: float = 0.5) -> float:
    """Angle between the contact force and the world vertical, in rad.

    For a force along the surface normal this is the surface inclination.
    """
    f = np.asarray(force, dtype=float).reshape(3)
    mag = float(np.linalg.norm(f))
    if not math.isfinite(mag) or mag < noise_floor:
        raise NoReliableContact(f"force magnitude {mag:.3f} N below floor {noise_floor} N")
    return math.atan2(math.hypot(f[0], f[1]), f[2])


def gamma_or_nan(force, noise_floor: float = 0.5) -> float:
    try:
        return inclination_from_force(force, noise_floor)
    except NoReliableContact:
        return math.nan
