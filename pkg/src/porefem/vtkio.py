"""Legacy-ASCII VTK output of solution snapshots.

Writes version 2.0 unstructured-grid files with the triangle mesh and point
data at the vertices: the displacement as a 3-vector field (z = 0) and the
scalar fields p, q, xi, eta. Quadratic displacement dofs at edge midpoints
are not exported; vertex values fully describe the plot-level field.
"""

from __future__ import annotations

import numpy as np

from .meshing import Mesh

__all__ = ["write_vtk", "state_point_data"]


def state_point_data(mesh: Mesh, state) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Extract vertex-valued fields from a State: (displacement, scalars)."""
    nv = mesh.num_vertices
    disp = np.stack([state.u[0 : 2 * nv : 2], state.u[1 : 2 * nv : 2]], axis=-1)
    scalars = {"p": state.p[:nv], "q": state.q[:nv], "xi": state.xi[:nv], "eta": state.eta[:nv]}
    return disp, scalars


def write_vtk(path, mesh: Mesh, vectors: dict[str, np.ndarray] | None = None,
              scalars: dict[str, np.ndarray] | None = None, title: str = "porefem snapshot") -> None:
    """Write a legacy VTK 2.0 ASCII file with per-vertex point data.

    vectors maps names to (nv, 2) arrays (padded with z = 0); scalars maps
    names to (nv,) arrays.
    """
    vectors = vectors or {}
    scalars = scalars or {}
    nv, nc = mesh.num_vertices, mesh.num_cells
    for name, arr in vectors.items():
        if arr.shape != (nv, 2):
            raise ValueError(f"vector field {name!r} has shape {arr.shape}, expected ({nv}, 2)")
    for name, arr in scalars.items():
        if arr.shape != (nv,):
            raise ValueError(f"scalar field {name!r} has shape {arr.shape}, expected ({nv},)")
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write(title.replace("\n", " ")[:255] + "\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g} 0\n")
        f.write(f"CELLS {nc} {4 * nc}\n")
        for a, b, c in mesh.cells:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {nc}\n")
        f.write("5\n" * nc)
        if vectors or scalars:
            f.write(f"POINT_DATA {nv}\n")
        for name, arr in vectors.items():
            f.write(f"VECTORS {name} double\n")
            for vx, vy in arr:
                f.write(f"{vx:.17g} {vy:.17g} 0\n")
        for name, arr in scalars.items():
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in arr:
                f.write(f"{v:.17g}\n")
