"""Dual-cell assembly, theta-method advection-diffusion step and Strang splitting.

Coefficients are frozen at the start of every advection-diffusion substep,
so each step costs one sparse linear solve. Every interface is evaluated
once, from its first node, and the same flux is added to both dual cells;
this makes the scheme conservative to rounding.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .evaporation import evap_exact
from .flux import SchemeKind, fitted_flux_1d, fitted_flux_2d, fitted_flux_coefficients
from .graph_mesh import GraphMesh
from .model import ModelParams
from .tri_mesh import TriMesh

RESIDUAL_TOL = 1e-12


class DominanceWarning(UserWarning):
    """The step matrix lost the structure that guarantees a monotone update."""


class SimulationError(RuntimeError):
    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass
class State:
    u: np.ndarray
    t: float = 0.0
    step_count: int = 0


@dataclass(frozen=True)
class TimeConfig:
    dt: float
    t_end: float = 0.0
    theta: float = 1.0
    output_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.5 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0.5, 1], got {self.theta}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")

    @property
    def n_steps(self) -> int:
        return math.ceil(self.t_end / self.dt - 1e-9) if self.t_end > 0 else 0


@dataclass
class AssembledSystem:
    """Semidiscrete system ``du/dt = Xi u + d``.

    Rows of Dirichlet nodes are zero in ``Xi`` and carry the prescribed value
    in ``d``; :func:`advance_ad` turns them into identity rows.
    """

    Xi: sp.csr_matrix
    d: np.ndarray
    dual_measures: np.ndarray
    dirichlet_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.Xi.shape[0]


@dataclass
class AuditRow:
    step: int
    time: float
    mass: float
    min_u: float
    max_u: float
    dominance_ok: bool


@dataclass
class RunResult:
    snapshots: list[State]
    audit: list[AuditRow]
    warnings: list[str] = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.snapshots[-1]


Dirichlet = Mapping[int, "float | Callable[[float], float]"]


def total_mass(state, mesh) -> float:
    """Discrete mass ``sum_i |S_i| u_i``."""
    u = state.u if isinstance(state, State) else np.asarray(state, dtype=float)
    _check_size(u, mesh)
    return float(np.dot(mesh.dual_measures, u))


def dirichlet_values(dirichlet: Dirichlet | None, t: float):
    """Split a Dirichlet mapping into sorted node and value arrays at time ``t``."""
    if not dirichlet:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    nodes = np.array(sorted(dirichlet), dtype=np.int64)
    values = np.array([_bc_value(dirichlet[int(i)], t) for i in nodes], dtype=float)
    return nodes, values


def _bc_value(v, t):
    return float(v(t)) if callable(v) else float(v)


def cell_alpha_for(mesh: GraphMesh, params: ModelParams) -> np.ndarray:
    """Per-cell inclination: an array in ``params`` wins over angles stored on the mesh."""
    if np.ndim(params.alpha) == 0 and mesh.cell_alpha is not None:
        return np.asarray(mesh.cell_alpha)
    return params.cell_alpha(mesh.n_cells)


def interface_coefficients(mesh, u, params: ModelParams, scheme):
    """Per-interface ``(near, far, c_near, c_far)`` for the frozen fluxes.

    The directed flux leaving ``near`` towards ``far`` through one interface
    is ``c_near u[near] - c_far u[far]``, already multiplied by the facet
    length on triangulations.
    """
    scheme = SchemeKind.parse(scheme)
    u = np.asarray(u, dtype=float)
    _check_size(u, mesh)
    if isinstance(mesh, GraphMesh):
        near, far = mesh.cells[:, 0], mesh.cells[:, 1]
        length = mesh.cell_lengths
        ev = fitted_flux_1d(u[near], u[far], 1.0, length, cell_alpha_for(mesh, params), params, scheme)
        weight = 1.0
        b_dir = ev.b
    elif isinstance(mesh, TriMesh):
        near, far = mesh.edges[:, 0], mesh.edges[:, 1]
        length = mesh.edge_lengths
        n1 = mesh.edge_normals[:, 0]
        if np.ndim(params.alpha) != 0:
            raise ValueError("triangulations take a single inclination angle")
        ev = fitted_flux_2d(u[near], u[far], length, n1, params.alpha, params, scheme)
        weight = mesh.facet_lengths
        b_dir = ev.b
    else:
        raise TypeError(f"unsupported mesh type {type(mesh).__name__}")
    c_near, c_far = fitted_flux_coefficients(ev.a, b_dir, length)
    return near, far, weight * c_near, weight * c_far


def assemble(mesh, u, params: ModelParams, scheme="is", dirichlet: Dirichlet | None = None, t: float = 0.0) -> AssembledSystem:
    """Assemble ``Xi`` and ``d`` from dual-cell balances at the frozen state ``u``."""
    u = u.u if isinstance(u, State) else np.asarray(u, dtype=float)
    near, far, c_near, c_far = interface_coefficients(mesh, u, params, scheme)
    n = mesh.n_nodes
    S = np.asarray(mesh.dual_measures)
    rows = np.concatenate([near, near, far, far])
    cols = np.concatenate([near, far, near, far])
    vals = np.concatenate([-c_near / S[near], c_far / S[near], c_near / S[far], -c_far / S[far]])

    d = np.zeros(n)
    nodes, values = dirichlet_values(dirichlet, t)
    if len(nodes):
        if nodes.min() < 0 or nodes.max() >= n:
            raise ValueError("Dirichlet node index out of range")
        keep = ~np.isin(rows, nodes)
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        d[nodes] = values
    Xi = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    Xi.sum_duplicates()
    return AssembledSystem(Xi=Xi, d=d, dual_measures=S, dirichlet_nodes=nodes)


def step_matrices(system: AssembledSystem, dt: float, theta: float):
    """Implicit and explicit operators ``I - theta dt Xi`` and ``I + (1-theta) dt Xi``."""
    eye = sp.identity(system.n, format="csr")
    A = (eye - (theta * dt) * system.Xi).tocsr()
    E = (eye + ((1.0 - theta) * dt) * system.Xi).tocsr()
    return A, E


def check_dominance(A: sp.csr_matrix, E: sp.csr_matrix, weights: np.ndarray, fixed=()) -> bool:
    """Certificate that the step maps nonnegative data to nonnegative data.

    ``A`` must be a Z-matrix with positive diagonal whose columns, weighted
    by the dual measures, are strictly diagonally dominant (hence a
    nonsingular M-matrix with nonnegative inverse), and the explicit part
    ``E`` must be entrywise nonnegative. Columns of ``fixed`` (Dirichlet)
    nodes are skipped: their values are known and enter the free rows with
    nonnegative weights.
    """
    A = A.tocoo()
    off = A.row != A.col
    if np.any(A.data[off] > 0):
        return False
    diag = A.diagonal()
    if np.any(diag <= 0):
        return False
    w_off = np.bincount(A.col[off], weights=weights[A.row[off]] * np.abs(A.data[off]), minlength=A.shape[0])
    free = np.ones(A.shape[0], dtype=bool)
    free[np.asarray(fixed, dtype=np.int64)] = False
    if np.any(weights[free] * diag[free] <= w_off[free] * (1.0 + 1e-12)):
        return False
    return bool(np.all(E.data >= 0))


def _solve(A: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    # symmetric ordering with diagonal pivots keeps M-matrix updates sign-definite
    lu = splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    x = lu.solve(rhs)
    scale = abs(A).sum(axis=1).max() * np.abs(x).max() + np.abs(rhs).max()
    r = rhs - A @ x
    if np.abs(r).max() > RESIDUAL_TOL * scale:
        x = x + lu.solve(r)
        r = rhs - A @ x
        if np.abs(r).max() > RESIDUAL_TOL * scale:
            raise np.linalg.LinAlgError(f"linear solve residual {np.abs(r).max():.3e} exceeds tolerance")
    return x


def theta_update(system: AssembledSystem, u, dt: float, theta: float = 1.0):
    """One theta-method step of ``du/dt = Xi u + d``; returns ``(u_new, dominance_ok)``."""
    if not 0.5 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0.5, 1], got {theta}")
    u = np.asarray(u, dtype=float)
    A, E = step_matrices(system, dt, theta)
    ok = check_dominance(A, E, system.dual_measures, system.dirichlet_nodes)
    if not ok:
        warnings.warn("step matrix is not a monotone M-matrix pair; positivity is not guaranteed", DominanceWarning, stacklevel=3)
    rhs = E @ u + dt * system.d
    D = system.dirichlet_nodes
    if len(D):
        rhs[D] = system.d[D]
    try:
        u_new = _solve(A, rhs)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"singular step matrix: {exc}") from exc
    return u_new, ok


def advance_ad(state: State, system: AssembledSystem, tc: TimeConfig) -> State:
    """Advection-diffusion substep over ``tc.dt`` with the theta-method."""
    u_new, _ = theta_update(system, state.u, tc.dt, tc.theta)
    return State(u_new, state.t + tc.dt, state.step_count)


def _evaporate(u, tau, params: ModelParams):
    if params.E_s == 0 or tau == 0:
        return u.copy()
    out = u.copy()
    pos = u > 0
    # negative transients (non-isotone schemes) are left to the transport step
    out[pos] = evap_exact(u[pos], tau, params.q, params.E_s)
    return out


def _impose(u, dirichlet, t):
    nodes, values = dirichlet_values(dirichlet, t)
    if len(nodes):
        u[nodes] = values
    return u


def _strang(state, mesh, params, scheme, tc, dirichlet, dt):
    half = 0.5 * dt
    t0 = state.t
    u_star = _impose(_evaporate(state.u, half, params), dirichlet, t0)
    system = assemble(mesh, u_star, params, scheme, dirichlet, t0 + dt)
    u_ad, ok = theta_update(system, u_star, dt, tc.theta)
    u_new = _impose(_evaporate(u_ad, half, params), dirichlet, t0 + dt)
    return State(u_new, t0 + dt, state.step_count + 1), ok


def strang_step(state: State, mesh, params: ModelParams, scheme, tc: TimeConfig, dirichlet: Dirichlet | None = None) -> State:
    """Half evaporation, full advection-diffusion, half evaporation."""
    return _strang(state, mesh, params, scheme, tc, dirichlet, tc.dt)[0]


def run(mesh, params: ModelParams, u0, tc: TimeConfig, scheme="is", dirichlet: Dirichlet | None = None,
        callback: Callable[[State, AuditRow], None] | None = None) -> RunResult:
    """Integrate from ``t = 0`` to ``tc.t_end`` with fixed steps.

    Snapshots are kept every ``tc.output_every`` steps plus the final state;
    the audit has one row per step (row 0 is the initial state). The last
    step is shortened if ``t_end`` is not a multiple of ``dt``.
    """
    scheme = SchemeKind.parse(scheme)
    u0 = np.array(u0, dtype=float)
    if u0.ndim == 0:
        u0 = np.full(mesh.n_nodes, float(u0))
    _check_size(u0, mesh)
    state = State(_impose(u0, dirichlet, 0.0), 0.0, 0)

    def audit_row(s, ok):
        return AuditRow(s.step_count, s.t, total_mass(s, mesh), float(s.u.min()), float(s.u.max()), ok)

    snapshots = [State(state.u.copy(), state.t, 0)]
    audit = [audit_row(state, True)]
    notes = []
    n_steps = tc.n_steps
    for k in range(n_steps):
        dt = min(tc.dt, tc.t_end - state.t) if k == n_steps - 1 else tc.dt
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DominanceWarning)
                state, ok = _strang(state, mesh, params, scheme, tc, dirichlet, dt)
        except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise SimulationError(k + 1, str(exc)) from exc
        if caught:
            notes.append(f"step {state.step_count}: {caught[0].message}")
        if not np.all(np.isfinite(state.u)):
            raise SimulationError(state.step_count, "non-finite saturation")
        row = audit_row(state, ok)
        audit.append(row)
        if callback is not None:
            callback(state, row)
        if state.step_count % tc.output_every == 0 or k == n_steps - 1:
            snapshots.append(State(state.u.copy(), state.t, state.step_count))
    return RunResult(snapshots, audit, notes)


def _check_size(u, mesh):
    if u.shape != (mesh.n_nodes,):
        raise ValueError(f"state has shape {u.shape}, mesh has {mesh.n_nodes} nodes")
