"""Dual finite volume method for the extended porous medium equation.

Degenerate nonlinear diffusion with gravity-driven advection and a power-law
evaporation sink, discretized on node-centred dual cells of 1-D graphs and
2-D Delaunay triangulations with exponentially fitted interface fluxes.
"""
from .evaporation import EvapStep, evap_exact, phi
from .flux import (
    FluxEval,
    SchemeKind,
    bernoulli,
    fitted_flux_1d,
    fitted_flux_2d,
    interface_value,
    peclet_1d,
    peclet_2d,
)
from .graph_mesh import GraphMesh, MeshError, build_graph_mesh, load_graph_mesh, star_graph, uniform_chain
from .model import (
    ModelParams,
    PhysicalScales,
    advection_coefficient,
    diffusion_coefficient,
    nondimensionalize,
    permeability,
    pressure_head,
    regularize,
)
from .solver import (
    AssembledSystem,
    DominanceWarning,
    RunResult,
    SimulationError,
    State,
    TimeConfig,
    advance_ad,
    assemble,
    run,
    strang_step,
    theta_update,
    total_mass,
)
from .tri_mesh import DelaunayWarning, TriMesh, build_tri_mesh, load_tri_mesh, rect_tri_mesh
from .verify import (
    IsotonicityReport,
    check_isotonicity,
    fu_bound,
    local_bvp_oracle,
    rk4_evap_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "DelaunayWarning", "DominanceWarning", "EvapStep", "FluxEval", "GraphMesh",
    "IsotonicityReport", "MeshError", "ModelParams", "PhysicalScales", "RunResult", "SchemeKind",
    "SimulationError", "State", "TimeConfig", "TriMesh", "advance_ad", "advection_coefficient", "assemble",
    "bernoulli", "build_graph_mesh", "build_tri_mesh", "check_isotonicity", "diffusion_coefficient",
    "evap_exact", "fitted_flux_1d", "fitted_flux_2d", "fu_bound", "interface_value", "load_graph_mesh",
    "load_tri_mesh", "local_bvp_oracle", "nondimensionalize", "peclet_1d", "peclet_2d", "permeability",
    "phi", "pressure_head", "rect_tri_mesh", "regularize", "rk4_evap_oracle", "run", "star_graph",
    "strang_step", "theta_update", "total_mass", "uniform_chain",
]
