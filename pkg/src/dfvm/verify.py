"""Executable checks of flux isotonicity plus independent oracles.

The isotonicity scan treats the flux seen from node ``i`` as a function
``F(lam, mu)`` of the two nodal values and checks by finite differences
that ``sigma dF/dlam >= 0`` and ``-sigma dF/dmu >= 0`` on a grid.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .flux import SchemeKind, fitted_flux_1d, peclet_1d, selector_branch
from .model import ModelParams

SCAN_START = 1e-6


@dataclass
class IsotonicityReport:
    scheme: str
    m: float
    p_exp: float
    alpha: float
    sigma: int
    l: float
    pe: float | None
    grid: dict
    violations: list = field(default_factory=list)
    n_points: int = 0

    @property
    def verdict(self) -> str:
        return "violated" if self.violations else "isotone-on-grid"

    @property
    def isotone(self) -> bool:
        return not self.violations

    def to_dict(self, max_violations: int | None = None) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        out["n_violations"] = len(self.violations)
        if max_violations is not None:
            out["violations"] = out["violations"][:max_violations]
        out["violations"] = [
            {"lambda": v[0], "mu": v[1], "condition": v[2], "fd_value": v[3]} for v in out["violations"]
        ]
        return out

    def summary(self) -> str:
        pe = "solution-dependent" if self.pe is None else f"{self.pe:+.4f}"
        head = (
            f"{self.scheme.upper()} m={self.m:g} p_exp={self.p_exp:g} alpha={self.alpha:+.4f} "
            f"sigma={self.sigma:+d} l={self.l:g} pe={pe}: "
        )
        if self.isotone:
            return head + f"isotone on {self.n_points} grid points"
        worst = min(self.violations, key=lambda v: v[3])
        return head + (
            f"{len(self.violations)} violations on {self.n_points} points; worst {worst[2]} = "
            f"{worst[3]:.3e} at lambda={worst[0]:.4g}, mu={worst[1]:.4g}"
        )


def scan_grid(lo=0.0, hi=1.0, step=0.01, start=SCAN_START):
    n = int(round((hi - lo) / step)) + 1
    values = lo + step * np.arange(n)
    return np.maximum(values, start)


def check_isotonicity(scheme, params: ModelParams, sigma=1, l=1.0, alpha=None, grid=(0.0, 1.0, 0.01),
                      fd_step=1e-6, rel_tol=1e-10) -> IsotonicityReport:
    """Scan the sign conditions of isotonicity over ``[lo, hi]**2``.

    Central differences are used except where the interface selector
    switches branch inside the stencil; there both one-sided differences
    are checked. A difference counts as a violation when it is below
    ``-rel_tol * |F| / fd_step``, the size of rounding noise in a quotient
    of flux values.
    """
    scheme = SchemeKind.parse(scheme)
    alpha = float(params.alpha if alpha is None else alpha)
    if np.ndim(alpha) != 0:
        raise ValueError("the scan takes a single inclination angle")
    lo, hi, step = grid
    values = scan_grid(lo, hi, step)
    lam, mu = np.meshgrid(values, values, indexing="ij")
    h = fd_step

    def G(x, y):
        return sigma * fitted_flux_1d(x, y, sigma, l, alpha, params, scheme).value

    def branch(x, y):
        pe_c = peclet_1d(np.maximum(x, y), params, sigma, l, alpha)
        return selector_branch(x, y, pe_c, scheme)

    g0 = G(lam, mu)
    lam_m, mu_m = np.maximum(lam - h, 0.0), np.maximum(mu - h, 0.0)
    stencils = (
        ("d_lambda", (lam + h, mu), (lam_m, mu), lam - lam_m, 1.0),
        ("d_mu", (lam, mu + h), (lam, mu_m), mu - mu_m, -1.0),
    )
    violations = []
    for name, plus, minus, h_back, sign in stencils:
        gp, gm = G(*plus), G(*minus)
        central = sign * (gp - gm) / (h + h_back)
        forward = sign * (gp - g0) / h
        backward = np.full_like(g0, np.inf)
        np.divide(sign * (g0 - gm), h_back, out=backward, where=h_back > 0)
        kink = branch(*plus) != branch(*minus)
        fd = np.where(kink, np.minimum(forward, backward), central)
        tol = rel_tol * np.maximum.reduce([np.abs(gp), np.abs(gm), np.abs(g0)]) / h
        for idx in zip(*np.nonzero(fd < -tol)):
            violations.append((float(lam[idx]), float(mu[idx]), name, float(fd[idx])))

    pe = None if params.p_exp != 0 else float(peclet_1d(1.0, params, sigma, l, alpha)) + 0.0
    return IsotonicityReport(
        scheme=scheme.value, m=params.m, p_exp=params.p_exp, alpha=alpha, sigma=int(sigma), l=float(l),
        pe=pe, grid={"lo": lo, "hi": hi, "step": step, "start": SCAN_START, "fd_step": fd_step, "rel_tol": rel_tol},
        violations=violations, n_points=int(lam.size),
    )


def geometry_for_peclet(pe: float, params: ModelParams):
    """A ``(sigma, l, alpha)`` triple realizing the Peclet number ``pe`` when ``p_exp = 0``."""
    if params.p_exp != 0:
        raise ValueError("the Peclet number depends on the solution when p_exp != 0")
    if pe == 0:
        return 1, 1.0, 0.0
    alpha = -0.5 * math.pi if pe > 0 else 0.5 * math.pi
    return 1, abs(pe) * params.mp, alpha


def fu_bound(m: float, pe: float) -> bool:
    """Whether the fully upwind flux is isotone: ``(m-1)/m <= exp(pe) <= m/(m-1)``.

    For ``m <= 1`` both sign conditions hold for every ``pe``.
    """
    if m <= 1:
        return True
    bound = math.log(m / (m - 1.0))
    return -bound <= pe <= bound


def rk4_evap_oracle(u0, q, E_s, tau, step=1e-5):
    """Classical RK4 for ``du/dt = -E_s max(u, 0)**q``, clamped at zero.

    Broadcasts over array arguments; the step is shrunk so that an integer
    number of steps spans ``tau``.
    """
    n = max(1, math.ceil(tau / step - 1e-9)) if tau > 0 else 0
    h = tau / n if n else 0.0
    if all(np.ndim(x) == 0 for x in (u0, q, E_s)):
        return _rk4_scalar(float(u0), float(q), float(E_s), h, n)
    u = np.array(u0, dtype=float)
    q = np.asarray(q, dtype=float)
    E_s = np.asarray(E_s, dtype=float)
    u, q, E_s = np.broadcast_arrays(u, q, E_s)
    u = u.copy()

    def f(v):
        return -E_s * np.maximum(v, 0.0) ** q

    for _ in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = np.maximum(u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
    return u


def _rk4_scalar(u, q, E_s, h, n):
    def f(v):
        return -E_s * max(v, 0.0) ** q

    for _ in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = max(u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
    return u


def _bvp_flux(u_i, u_mu, a, b, l, n):
    dx = l / n
    # J_{j+1/2} = (b/2 + a/dx) u_j + (b/2 - a/dx) u_{j+1}; interior rows enforce J_{j+1/2} = J_{j-1/2}
    lower = -(0.5 * b + a / dx)
    diag = 2.0 * a / dx
    upper = 0.5 * b - a / dx
    ab = np.zeros((3, n - 1))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    rhs = np.zeros(n - 1)
    rhs[0] -= lower * u_i
    rhs[-1] -= upper * u_mu
    u = np.concatenate([[u_i], solve_banded((1, 1), ab, rhs), [u_mu]])
    j = n // 2
    return (0.5 * b + a / dx) * u[j] + (0.5 * b - a / dx) * u[j + 1]


def local_bvp_oracle(u_i, u_mu, a, b, l, grid_n=10_000, extrapolate=True):
    """Flux ``b u - a u'`` of ``(b u - a u')' = 0`` on ``[0, l]`` by finite differences.

    Second-order central differences on ``grid_n`` intervals; with
    ``extrapolate`` the results on ``grid_n`` and ``2 grid_n`` intervals are
    Richardson-combined. ``b`` points from the ``u_i`` end to the ``u_mu`` end.
    """
    if grid_n < 1000:
        raise ValueError("grid_n must be at least 1000")
    if a <= 0 or l <= 0:
        raise ValueError("a and l must be positive")
    if abs(b) * l / grid_n / (2 * a) >= 1:
        raise np.linalg.LinAlgError("cell Peclet number >= 1; refine the grid")
    coarse = _bvp_flux(u_i, u_mu, a, b, l, grid_n)
    if not extrapolate:
        return coarse
    fine = _bvp_flux(u_i, u_mu, a, b, l, 2 * grid_n)
    return (4.0 * fine - coarse) / 3.0
