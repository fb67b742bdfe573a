"""Structured triangulations of the unit square.

The mesh at refinement level ``L`` covers ``[0, 1]^2`` with a regular grid
of ``2^L x 2^L`` squares, each split into two triangles along the
bottom-left-to-top-right diagonal.  Entity numbering is lexicographic
(by y, then x), so repeated runs produce bit-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Hard cap on refinement depth; L=12 already means ~33.6M triangles.
MAX_LEVEL = 12


@dataclass(frozen=True)
class Mesh:
    """Triangulation of the unit square with full entity connectivity.

    Attributes
    ----------
    level : int
        Refinement level ``L``; the mesh size is ``h = 2**-L``.
    h : float
        Edge length of the underlying grid squares.
    vertices : (nv, 2) float array
        Vertex coordinates, ordered lexicographically by (y, x).
    cells : (nt, 3) int array
        Vertex triples, counterclockwise.
    edges : (ne, 2) int array
        Vertex pairs (low index first), sorted lexicographically.
    cell_edges : (nt, 3) int array
        Edge indices per cell; local edge ``k`` is opposite local vertex ``k``.
    edge_cells : (ne, 2) int array
        Cells adjacent to each edge; ``-1`` marks a missing second cell.
    boundary_vertex_flags, boundary_edge_flags : bool arrays
        True for entities lying on the domain boundary.

    All arrays are frozen (read-only) after construction, so a mesh can be
    shared freely between threads.
    """

    level: int
    h: float
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    edge_cells: np.ndarray
    boundary_vertex_flags: np.ndarray
    boundary_edge_flags: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def cell_areas(self) -> np.ndarray:
        """Signed area of every cell (positive for counterclockwise cells)."""
        p0 = self.vertices[self.cells[:, 0]]
        p1 = self.vertices[self.cells[:, 1]]
        p2 = self.vertices[self.cells[:, 2]]
        d1 = p1 - p0
        d2 = p2 - p0
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_midpoints(self) -> np.ndarray:
        """Midpoint coordinates of every edge (the quadratic node positions)."""
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])


def build_uniform_mesh(level: int) -> Mesh:
    """Build the level-``L`` uniform triangulation of the unit square.

    Parameters
    ----------
    level : int
        Refinement level; must satisfy ``0 <= level <= MAX_LEVEL``.

    Returns
    -------
    Mesh
        Mesh with ``(2^L+1)^2`` vertices, ``2*4^L`` cells and
        ``vertices + cells - 1`` edges.
    """
    if level < 0:
        raise ValueError(f"refinement level must be nonnegative, got {level}")
    if level > MAX_LEVEL:
        raise ValueError(
            f"refinement level {level} exceeds the supported maximum {MAX_LEVEL}; "
            f"a level-{level} mesh would hold {2 * 4 ** level} cells"
        )

    n = 2**level
    h = 1.0 / n

    # Vertices on the (n+1) x (n+1) grid, y-major so index = iy*(n+1) + ix.
    coords = np.arange(n + 1) * h
    xg, yg = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xg.ravel(), yg.ravel()])

    # Two counterclockwise triangles per square, split along the
    # bottom-left-to-top-right diagonal.
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    bl = (iy * (n + 1) + ix).ravel()
    br = bl + 1
    tl = bl + (n + 1)
    tr = tl + 1
    lower = np.column_stack([bl, br, tr])
    upper = np.column_stack([bl, tr, tl])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    edges, cell_edges, edge_cells = _build_edges(cells)

    mesh = Mesh(
        level=level,
        h=h,
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_edges=cell_edges,
        edge_cells=edge_cells,
        boundary_vertex_flags=_boundary_vertices(vertices),
        boundary_edge_flags=edge_cells[:, 1] < 0,
    )
    for arr in (mesh.vertices, mesh.cells, mesh.edges, mesh.cell_edges,
                mesh.edge_cells, mesh.boundary_vertex_flags, mesh.boundary_edge_flags):
        arr.setflags(write=False)
    return mesh


def _build_edges(cells: np.ndarray):
    nt = cells.shape[0]
    # Local edge k is opposite local vertex k.
    pairs = np.concatenate([cells[:, [1, 2]], cells[:, [0, 2]], cells[:, [0, 1]]])
    pairs = np.sort(pairs, axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(3, nt)
    cell_edges = inverse.T.copy()

    ne = edges.shape[0]
    edge_cells = np.full((ne, 2), -1, dtype=np.int64)
    owner = np.tile(np.arange(nt, dtype=np.int64), 3)
    flat = inverse.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_edges = flat[order]
    sorted_owner = owner[order]
    first = np.searchsorted(sorted_edges, np.arange(ne), side="left")
    last = np.searchsorted(sorted_edges, np.arange(ne), side="right")
    counts = last - first
    edge_cells[:, 0] = sorted_owner[first]
    two = counts == 2
    edge_cells[two, 1] = sorted_owner[first[two] + 1]
    if np.any(counts > 2):
        raise RuntimeError("edge shared by more than two cells; mesh is broken")
    return edges, cell_edges, edge_cells


def _boundary_vertices(vertices: np.ndarray) -> np.ndarray:
    x, y = vertices[:, 0], vertices[:, 1]
    return (x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0)


def classify_boundary(mesh: Mesh):
    """Recompute boundary flags from scratch.

    Returns
    -------
    (vertex_flags, edge_flags)
        Boolean arrays matching ``mesh.boundary_vertex_flags`` and
        ``mesh.boundary_edge_flags``.  A vertex is flagged iff it lies on
        the square's boundary; an edge iff it has a single adjacent cell.
    """
    return _boundary_vertices(mesh.vertices), mesh.edge_cells[:, 1] < 0


def dump_mesh(mesh: Mesh, stream) -> None:
    """Write the mesh as plain text, one entity per line (debug aid)."""
    stream.write(f"mesh level={mesh.level} vertices={mesh.num_vertices} "
                 f"cells={mesh.num_cells} edges={mesh.num_edges}\n")
    for i, (x, y) in enumerate(mesh.vertices):
        stream.write(f"vertex {i} {x!r} {y!r}\n")
    for i, (a, b, c) in enumerate(mesh.cells):
        stream.write(f"cell {i} {a} {b} {c}\n")
    for i, (a, b) in enumerate(mesh.edges):
        tag = "boundary" if mesh.boundary_edge_flags[i] else "interior"
        stream.write(f"edge {i} {a} {b} {tag}\n")
