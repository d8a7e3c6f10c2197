"""Exact nodewise integration of the evaporation sink ``du/dt = -E_s u**q``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvapStep:
    tau: float
    q: float
    E_s: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.q <= 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.E_s < 0:
            raise ValueError(f"E_s must be nonnegative, got {self.E_s}")

    def __call__(self, u):
        return evap_exact(u, self.tau, self.q, self.E_s)


def phi(u, tau, q, E_s):
    """Separable invariant ``u**(1-q) - (1-q) E_s tau`` of the sink ODE (``q != 1``)."""
    if q == 1:
        raise ValueError("phi is undefined for q == 1; use the exponential branch")
    u = np.asarray(u, dtype=float)
    return u ** (1.0 - q) - (1.0 - q) * E_s * tau


def evap_exact(u, tau, q, E_s):
    """Advance ``du/dt = -E_s u**q`` by ``tau`` in closed form.

    For ``q < 1`` the solution reaches zero in finite time and stays there;
    for ``q > 1`` it decays algebraically as ``(u**(1-q) + (q-1) E_s t)**(1/(1-q))``.
    Works elementwise on arrays; the result lies in ``[0, u]``.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("evaporation requires nonnegative saturation")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if E_s == 0 or tau == 0:
        return u.copy()
    if q == 1:
        out = u * np.exp(-E_s * tau)
    elif q < 1:
        out = np.maximum(0.0, phi(u, tau, q, E_s)) ** (1.0 / (1.0 - q))
    else:
        out = np.zeros_like(u)
        pos = u > 0
        with np.errstate(over="ignore", divide="ignore"):
            # u**(1-q) overflows for subnormal u; inf**(1/(1-q)) is the right limit 0
            out[pos] = phi(u[pos], tau, q, E_s) ** (1.0 / (1.0 - q))
    # the powers can round one ulp above u when E_s tau is tiny
    out = np.minimum(out, u)
    return out if out.ndim else out[()]
