"""Model parameters, regularization kernel and constitutive relations.

Every coefficient the discrete scheme needs is read through this module.
Saturation ``u`` is the normalized water content, nominally in ``[0, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILON = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional parameters of the regularized extended PME.

    Parameters
    ----------
    m : float
        Permeability exponent, ``m > 0``.
    p_exp : float
        Capillary exponent, ``p_exp < m``.
    q : float
        Evaporation exponent, ``q > 0``.
    E_s : float
        Evaporation coefficient, ``E_s >= 0``.
    alpha : float or array_like
        Inclination angle in radians, ``|alpha| <= pi/2``. A scalar applies
        to the whole domain, an array gives one angle per primal cell.
    epsilon : float
        Regularization parameter of ``h_eps``.
    """

    m: float
    p_exp: float = 0.0
    q: float = 1.0
    E_s: float = 0.0
    alpha: float | np.ndarray = 0.0
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        for name in ("m", "p_exp", "q", "E_s", "epsilon"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.p_exp < self.m:
            raise ValueError(f"p_exp must be smaller than m, got p_exp={self.p_exp}, m={self.m}")
        if self.q <= 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.E_s < 0:
            raise ValueError(f"E_s must be nonnegative, got {self.E_s}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim > 1:
            raise ValueError("alpha must be a scalar or a 1-D per-cell array")
        if not np.all(np.isfinite(alpha)) or np.any(np.abs(alpha) > 0.5 * np.pi + 1e-12):
            raise ValueError("alpha must lie in [-pi/2, pi/2]")
        if alpha.ndim == 0:
            object.__setattr__(self, "alpha", float(alpha))
        else:
            alpha = alpha.copy()
            alpha.setflags(write=False)
            object.__setattr__(self, "alpha", alpha)

    @property
    def mp(self) -> float:
        """The recurring combination ``m - p_exp``."""
        return self.m - self.p_exp

    def cell_alpha(self, n_cells: int) -> np.ndarray:
        """Broadcast ``alpha`` to one value per primal cell."""
        if np.ndim(self.alpha) == 0:
            return np.full(n_cells, self.alpha)
        if len(self.alpha) != n_cells:
            raise ValueError(f"alpha has {len(self.alpha)} entries but the mesh has {n_cells} cells")
        return np.asarray(self.alpha)

    def replace(self, **changes) -> "ModelParams":
        kwargs = {name: getattr(self, name) for name in ("m", "p_exp", "q", "E_s", "alpha", "epsilon")}
        kwargs.update(changes)
        return ModelParams(**kwargs)


@dataclass(frozen=True)
class PhysicalScales:
    """Dimensional material constants used by the scaling map and the diagnostics."""

    D_s: float = 1.0
    K_s: float = 1.0
    theta_s: float = 0.9
    theta_r: float = 0.0
    E_s_dim: float = 0.0

    def __post_init__(self):
        if self.D_s <= 0:
            raise ValueError(f"D_s must be positive, got {self.D_s}")
        if self.K_s <= 0:
            raise ValueError(f"K_s must be positive, got {self.K_s}")
        if not self.theta_s > self.theta_r:
            raise ValueError("theta_s must exceed theta_r")
        if self.E_s_dim < 0:
            raise ValueError(f"E_s_dim must be nonnegative, got {self.E_s_dim}")


def regularize(u, epsilon=DEFAULT_EPSILON):
    """Regularization kernel ``h_eps(u) = sqrt(u**2 + eps**2)``, always ``>= eps``."""
    return np.hypot(u, epsilon)


def diffusion_coefficient(u_bar, params: ModelParams):
    """Frozen diffusion coefficient ``(m - p) h_eps(u_bar)**(m - p - 1)``."""
    return params.mp * regularize(u_bar, params.epsilon) ** (params.mp - 1.0)


def advection_coefficient(u_bar, params: ModelParams, cell_alpha):
    """Frozen advection coefficient ``-sin(alpha) h_eps(u_bar)**(m - 1)``.

    The physical flux along the local axis is ``b u - a du/dx``.
    """
    return -np.sin(cell_alpha) * regularize(u_bar, params.epsilon) ** (params.m - 1.0)


def nondimensionalize(scales: PhysicalScales, params: ModelParams, t=0.0, x=0.0):
    """Map dimensional ``(t, x, E_s)`` to the scaled variables of the model.

    Returns
    -------
    tuple
        ``(t_tilde, x_tilde, E_s_tilde)``.
    """
    mp = params.mp
    if mp == 0:
        raise ValueError("m == p_exp makes the scale factors singular")
    D, K, th = scales.D_s, scales.K_s, scales.theta_s
    t_tilde = K**2 * mp / (D * th**2) * np.asarray(t, dtype=float)
    x_tilde = K * mp / (D * th) * np.asarray(x, dtype=float)
    E_tilde = D * th**2 / (K**2 * mp) * scales.E_s_dim
    return t_tilde, x_tilde, E_tilde


def pressure_head(u, scales: PhysicalScales, params: ModelParams):
    """Capillary pressure head ``theta_s D_s / (p K_s) * (1 - u**-p)``; diagnostic only."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("pressure head is singular for u <= 0")
    p = params.p_exp
    if p == 0:
        raise ValueError("pressure head formula degenerates for p_exp == 0")
    return scales.theta_s * scales.D_s / (p * scales.K_s) * (1.0 - u ** (-p))


def permeability(u, scales: PhysicalScales, params: ModelParams):
    """Permeability ``K_s u**m``; diagnostic only."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("permeability requires u >= 0")
    return scales.K_s * u**params.m
