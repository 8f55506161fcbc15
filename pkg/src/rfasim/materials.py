"""Temperature-dependent material laws for blood and tissue.

Temperatures are in degrees Celsius throughout; every other quantity is a
nondimensional number. The blood electrical conductivity grows
exponentially up to 99 C, plateaus, then drops linearly by two orders of
magnitude across 100..105 C (vapourization shutoff) and stays at the
residual value above. Thermal diffusivities grow linearly; the blood one
freezes at its 100 C value, the tissue one is clamped away from zero so
the heat operator stays elliptic. Tissue electrical conductivity is
linear and clamped at 1e-6 below roughly 7 C for the same reason.
"""

from dataclasses import dataclass

import numpy as np

_FLOOR = 1.0e-6


@dataclass(frozen=True)
class MaterialModel:
    """Coefficient constants shared by both subdomains.

    sigma0/eta0 are the reference electrical conductivity and thermal
    diffusivity at the resting temperature theta_bar. nu0 is the
    kinematic viscosity of blood (0.0021 Pa s / 1000 kg m^-3); k_nu is an
    optional linear temperature slope for it, off by default. The
    capacity factors scale the time-derivative term per subdomain.
    """

    sigma0: float = 0.6
    eta0: float = 0.54
    theta_bar: float = 37.0
    nu0: float = 2.1e-6
    k_nu: float = 0.0
    capacity_blood: float = 1.0
    capacity_tissue: float = 1.0

    def __post_init__(self):
        if self.sigma0 <= 0.0 or self.eta0 <= 0.0:
            raise ValueError("sigma0 and eta0 must be positive")
        if self.nu0 <= 0.0:
            raise ValueError("nu0 must be positive")
        if self.capacity_blood <= 0.0 or self.capacity_tissue <= 0.0:
            raise ValueError("capacity factors must be positive")


def _wrap(theta, out):
    if np.ndim(theta) == 0:
        return float(out)
    return out


def sigma_blood(model, theta):
    """Electrical conductivity of blood at temperature theta."""
    t = np.asarray(theta, dtype=float)
    s0 = model.sigma0
    plateau = 2.5345 * s0
    out = np.where(
        t <= 99.0,
        s0 * np.exp(0.015 * (np.minimum(t, 99.0) - model.theta_bar)),
        np.where(
            t <= 100.0,
            plateau,
            np.where(t <= 105.0, plateau * (1.0 - 0.198 * (t - 100.0)), 0.025345 * s0),
        ),
    )
    return _wrap(theta, out)


def eta_blood(model, theta):
    """Thermal diffusivity of blood; frozen at its 100 C value above."""
    t = np.asarray(theta, dtype=float)
    out = model.eta0 + 0.0012 * (np.minimum(t, 100.0) - model.theta_bar)
    return _wrap(theta, out)


def sigma_tissue(model, theta):
    """Electrical conductivity of tissue, clamped at 1e-6 from below."""
    t = np.asarray(theta, dtype=float)
    out = np.maximum(model.sigma0 + 0.02 * (t - model.theta_bar), _FLOOR)
    return _wrap(theta, out)


def eta_tissue(model, theta):
    """Thermal diffusivity of tissue, clamped at 1e-6 from below."""
    t = np.asarray(theta, dtype=float)
    out = np.maximum(model.eta0 + 0.0012 * (t - model.theta_bar), _FLOOR)
    return _wrap(theta, out)


def kinematic_viscosity(model, theta):
    """Kinematic viscosity of blood; constant unless k_nu is set."""
    t = np.asarray(theta, dtype=float)
    out = np.maximum(model.nu0 * (1.0 + model.k_nu * (t - model.theta_bar)), _FLOOR * model.nu0)
    return _wrap(theta, out)
