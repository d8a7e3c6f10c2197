"""Connected-graph primal mesh and its node-centred dual cells.

A cell ``k`` is declared as ``(node_a, node_b, length)`` and its local axis
runs from ``node_a`` to ``node_b``. Seen from a node ``i`` of the cell, the
orientation ``sigma`` is ``+1`` when that axis points away from ``i`` towards
the neighbour and ``-1`` otherwise, so ``sigma * F`` is the outflow from the
dual cell of ``i``. A positive inclination angle on a cell means its local
axis points uphill.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra


class MeshError(ValueError):
    """Raised for inconsistent or unsupported mesh input."""


@dataclass(frozen=True)
class Incidence:
    cell: int
    neighbor: int
    sigma: int


@dataclass(frozen=True, eq=False)
class GraphMesh:
    """Immutable 1-D graph mesh.

    Attributes
    ----------
    node_coords : ndarray, shape (n_nodes,)
        Arc-length coordinate of each node (metadata; the scheme only uses
        cell lengths and orientations).
    cells : ndarray, shape (n_cells, 2)
        ``(node_a, node_b)`` per cell; the local axis points from a to b.
    cell_lengths : ndarray, shape (n_cells,)
    cell_alpha : ndarray or None
        Optional per-cell inclination read from a mesh file.
    dual_measures : ndarray, shape (n_nodes,)
        Half the summed lengths of the cells meeting at each node.
    """

    node_coords: np.ndarray
    cells: np.ndarray
    cell_lengths: np.ndarray
    dual_measures: np.ndarray
    cell_alpha: np.ndarray | None
    _incidence: tuple

    dim = 1

    @property
    def n_nodes(self) -> int:
        return len(self.dual_measures)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def total_length(self) -> float:
        return float(self.cell_lengths.sum())

    def dual_measure(self, i: int) -> float:
        self._check_node(i)
        return float(self.dual_measures[i])

    def incidence(self, i: int) -> list[Incidence]:
        self._check_node(i)
        return list(self._incidence[i])

    def degree(self, i: int) -> int:
        return len(self.incidence(i))

    def _check_node(self, i):
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"node index {i} out of range for {self.n_nodes} nodes")

    def summary(self) -> dict:
        degrees = np.array([len(inc) for inc in self._incidence])
        return {
            "kind": "1d-graph",
            "n_nodes": self.n_nodes,
            "n_cells": self.n_cells,
            "total_length": self.total_length,
            "dual_measure_sum": float(self.dual_measures.sum()),
            "min_cell_length": float(self.cell_lengths.min()),
            "max_cell_length": float(self.cell_lengths.max()),
            "n_junctions": int(np.sum(degrees >= 3)),
            "n_endpoints": int(np.sum(degrees == 1)),
        }


def build_graph_mesh(n_nodes_or_coords, cells, lengths=None, cell_alpha=None) -> GraphMesh:
    """Build a graph mesh from nodes and ``(node_a, node_b[, length])`` cells.

    Parameters
    ----------
    n_nodes_or_coords : int or array_like
        Either the node count or a per-node coordinate array. When
        coordinates are given and ``lengths`` is omitted, cell lengths are
        taken as ``|x_b - x_a|``.
    cells : array_like, shape (n_cells, 2) or (n_cells, 3)
        Node pairs, optionally with the cell length as third column.
    lengths : array_like, optional
        Cell lengths, overriding a third column of ``cells``.
    cell_alpha : array_like, optional
        Per-cell inclination angle stored on the mesh.
    """
    cells_arr = np.asarray(cells, dtype=float)
    if cells_arr.ndim != 2 or cells_arr.shape[0] < 1 or cells_arr.shape[1] not in (2, 3):
        raise MeshError("cells must be a non-empty (n, 2) or (n, 3) array")
    pairs = cells_arr[:, :2]
    if np.any(pairs != np.round(pairs)):
        raise MeshError("cell node indices must be integers")
    pairs = pairs.astype(np.int64)

    if np.ndim(n_nodes_or_coords) == 0:
        n_nodes = int(n_nodes_or_coords)
        coords = None
    else:
        coords = np.asarray(n_nodes_or_coords, dtype=float)
        n_nodes = len(coords)
    if n_nodes < 2:
        raise MeshError("a graph mesh needs at least two nodes")
    if pairs.min() < 0 or pairs.max() >= n_nodes:
        raise MeshError("cell references a node that does not exist")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        bad = int(np.flatnonzero(pairs[:, 0] == pairs[:, 1])[0])
        raise MeshError(f"cell {bad} repeats node {pairs[bad, 0]}")

    if lengths is not None:
        lengths = np.asarray(lengths, dtype=float)
    elif cells_arr.shape[1] == 3:
        lengths = cells_arr[:, 2].copy()
    elif coords is not None:
        lengths = np.abs(coords[pairs[:, 1]] - coords[pairs[:, 0]])
    else:
        raise MeshError("cell lengths are required when no node coordinates are given")
    if lengths.shape != (len(pairs),):
        raise MeshError("one length per cell is required")
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
        bad = int(np.flatnonzero(~(lengths > 0))[0])
        raise MeshError(f"cell {bad} has nonpositive length {lengths[bad]}")

    counts = np.bincount(pairs.ravel(), minlength=n_nodes)
    if np.any(counts == 0):
        raise MeshError(f"node {int(np.flatnonzero(counts == 0)[0])} is not attached to any cell")

    adjacency = coo_matrix(
        (lengths, (pairs[:, 0], pairs[:, 1])), shape=(n_nodes, n_nodes)
    ).tocsr()
    n_components, _ = connected_components(adjacency, directed=False)
    if n_components != 1:
        raise MeshError(f"graph is disconnected ({n_components} components)")

    incidence = [[] for _ in range(n_nodes)]
    for k, (a, b) in enumerate(pairs):
        incidence[a].append(Incidence(k, int(b), +1))
        incidence[b].append(Incidence(k, int(a), -1))

    dual = 0.5 * np.bincount(pairs.ravel(), weights=np.repeat(lengths, 2), minlength=n_nodes)

    if coords is None:
        coords = dijkstra(adjacency, directed=False, indices=0)

    if cell_alpha is not None:
        cell_alpha = np.asarray(cell_alpha, dtype=float)
        if cell_alpha.shape != (len(pairs),):
            raise MeshError("cell_alpha needs one entry per cell")
        cell_alpha = _frozen(cell_alpha)

    return GraphMesh(
        node_coords=_frozen(coords),
        cells=_frozen(pairs),
        cell_lengths=_frozen(lengths),
        dual_measures=_frozen(dual),
        cell_alpha=cell_alpha,
        _incidence=tuple(tuple(inc) for inc in incidence),
    )


def uniform_chain(n_cells: int, length: float = 1.0, x0: float = 0.0) -> GraphMesh:
    """Straight chain of ``n_cells`` equal cells, oriented left to right."""
    x = x0 + np.linspace(0.0, length, n_cells + 1)
    cells = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    return build_graph_mesh(x, cells, np.full(n_cells, length / n_cells))


def star_graph(n_reaches: int = 3, cells_per_reach: int = 10, reach_length: float = 1.0) -> GraphMesh:
    """Reaches of equal length joined at node 0, each oriented away from it."""
    h = reach_length / cells_per_reach
    cells = []
    coords = [0.0]
    for _ in range(n_reaches):
        prev = 0
        for c in range(cells_per_reach):
            node = len(coords)
            coords.append((c + 1) * h)
            cells.append((prev, node))
            prev = node
    return build_graph_mesh(np.array(coords), np.array(cells), np.full(len(cells), h))


def load_graph_mesh(path) -> GraphMesh:
    """Read a graph mesh from JSON.

    Schema::

        {"nodes": [{"id": 0, "x": 0.0}, ...],
         "cells": [{"node_a": 0, "node_b": 1, "length": 0.1, "alpha": 0.0}, ...]}

    Node ids must be ``0 .. n-1`` in any order; ``x`` and ``alpha`` are
    optional, ``alpha`` must be given on all cells or none.
    """
    data = json.loads(Path(path).read_text())
    return graph_mesh_from_dict(data)


def graph_mesh_from_dict(data: dict) -> GraphMesh:
    try:
        nodes = data["nodes"]
        cells = data["cells"]
    except KeyError as exc:
        raise MeshError(f"graph mesh is missing key {exc.args[0]!r}") from None
    ids = [int(n["id"]) for n in nodes]
    if sorted(ids) != list(range(len(ids))):
        raise MeshError("node ids must be 0 .. n-1 without gaps or repeats")
    has_x = [("x" in n) for n in nodes]
    coords = None
    if all(has_x):
        coords = np.empty(len(ids))
        for n in nodes:
            coords[int(n["id"])] = float(n["x"])
    try:
        pairs = [(int(c["node_a"]), int(c["node_b"])) for c in cells]
        lengths = [float(c["length"]) for c in cells]
    except KeyError as exc:
        raise MeshError(f"cell entry is missing key {exc.args[0]!r}") from None
    alphas = [c.get("alpha") for c in cells]
    if all(a is None for a in alphas):
        cell_alpha = None
    elif any(a is None for a in alphas):
        raise MeshError("alpha must be given on every cell or on none")
    else:
        cell_alpha = np.array(alphas, dtype=float)
    return build_graph_mesh(
        coords if coords is not None else len(ids), np.array(pairs).reshape(-1, 2), lengths, cell_alpha
    )


def graph_mesh_to_dict(mesh: GraphMesh) -> dict:
    cells = []
    for k, (a, b) in enumerate(mesh.cells):
        entry = {"node_a": int(a), "node_b": int(b), "length": float(mesh.cell_lengths[k])}
        if mesh.cell_alpha is not None:
            entry["alpha"] = float(mesh.cell_alpha[k])
        cells.append(entry)
    nodes = [{"id": i, "x": float(x)} for i, x in enumerate(mesh.node_coords)]
    return {"nodes": nodes, "cells": cells}


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr
