"""2D simplicial meshes of rectangles, boundary tagging and text-file I/O.

Squares are triangulated with the crossed (center-vertex) pattern: each grid
cell is split into four triangles around its centroid. This keeps the mesh
symmetric under the symmetries of the square, which the rigid-motion
compatibility tests rely on.

Mesh file format (plain text, '#' starts a comment):

    VERTICES <n>
    x y
    ...
    CELLS <m>
    i j k
    ...
    BOUNDARY <b>
    i j tag
    ...

Coordinates are written with 17 significant digits so a write/read round
trip is bitwise lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh",
    "MeshFormatError",
    "MeshValidationError",
    "unit_square_mesh",
    "centered_square_mesh",
    "rectangle_mesh",
    "refine_uniform",
    "read_mesh",
    "write_mesh",
]


class MeshFormatError(ValueError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MeshValidationError(ValueError):
    """Topologically or geometrically invalid mesh."""


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation with tagged boundary edges.

    vertices        (nv, 2) coordinates
    cells           (nc, 3) vertex indices, counterclockwise
    boundary_edges  list of ((v0, v1), tag), traversing the boundary CCW
    level           refinement level (0 for generated meshes)
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_edges: list[tuple[tuple[int, int], str]] = field(default_factory=list)
    level: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=np.int64))
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    def cell_areas(self) -> np.ndarray:
        """Signed triangle areas (positive for CCW cells)."""
        p = self.vertices[self.cells]  # (nc, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def validate(self) -> None:
        """Raise MeshValidationError on negative areas, nonconformity or a
        boundary-edge list that does not exactly cover the topological boundary."""
        if np.any(self.cells < 0) or np.any(self.cells >= self.num_vertices):
            raise MeshValidationError("cell references a nonexistent vertex")
        areas = self.cell_areas()
        if np.any(areas <= 0):
            bad = int(np.argmin(areas))
            raise MeshValidationError(
                f"cell {bad} has nonpositive signed area {areas[bad]:.3e} "
                "(vertices must be listed counterclockwise)"
            )
        counts: dict[tuple[int, int], int] = {}
        for tri in self.cells:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        if any(c > 2 for c in counts.values()):
            raise MeshValidationError("nonconforming mesh: an edge is shared by more than two cells")
        topo_boundary = {k for k, c in counts.items() if c == 1}
        tagged = [((min(a, b), max(a, b))) for (a, b), _ in self.boundary_edges]
        if len(tagged) != len(set(tagged)):
            raise MeshValidationError("duplicate boundary edge")
        tagged_set = set(tagged)
        dangling = tagged_set - topo_boundary
        if dangling:
            raise MeshValidationError(f"dangling boundary edge(s) not on the topological boundary: {sorted(dangling)[:3]}")
        missing = topo_boundary - tagged_set
        if missing:
            raise MeshValidationError(f"untagged boundary edge(s): {sorted(missing)[:3]}")


def rectangle_mesh(n: int, x0: float = 0.0, y0: float = 0.0, width: float = 1.0, height: float = 1.0) -> Mesh:
    """Crossed triangulation of [x0, x0+width] x [y0, y0+height] with n x n grid cells."""
    if n < 1:
        raise ValueError(f"need at least one subdivision, got n={n}")
    xs = x0 + width * np.arange(n + 1) / n
    ys = y0 + height * np.arange(n + 1) / n
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])  # index = j*(n+1)+i
    cx = x0 + width * (np.arange(n) + 0.5) / n
    cy = y0 + height * (np.arange(n) + 0.5) / n
    gcx, gcy = np.meshgrid(cx, cy, indexing="xy")
    centers = np.column_stack([gcx.ravel(), gcy.ravel()])
    vertices = np.vstack([grid, centers])
    nv0 = (n + 1) ** 2

    def gid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            a, b = gid(i, j), gid(i + 1, j)
            c, d = gid(i + 1, j + 1), gid(i, j + 1)
            e = nv0 + j * n + i
            cells += [(a, b, e), (b, c, e), (c, d, e), (d, a, e)]

    boundary = []
    for i in range(n):
        boundary.append(((gid(i, 0), gid(i + 1, 0)), "bottom"))
    for j in range(n):
        boundary.append(((gid(n, j), gid(n, j + 1)), "right"))
    for i in range(n, 0, -1):
        boundary.append(((gid(i, n), gid(i - 1, n)), "top"))
    for j in range(n, 0, -1):
        boundary.append(((gid(0, j), gid(0, j - 1)), "left"))

    return Mesh(vertices=vertices, cells=np.array(cells), boundary_edges=boundary)


def unit_square_mesh(n: int) -> Mesh:
    """Crossed triangulation of the unit square [0,1]^2: (n+1)^2 + n^2 vertices, 4n^2 cells."""
    return rectangle_mesh(n)


def centered_square_mesh(n: int) -> Mesh:
    """Same topology translated to [-1/2, 1/2]^2 so first moments of the domain vanish."""
    return rectangle_mesh(n, x0=-0.5, y0=-0.5)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four via edge midpoints; tags are inherited."""
    verts = [mesh.vertices]
    midpoint: dict[tuple[int, int], int] = {}
    next_id = mesh.num_vertices
    new_coords = []

    def mid(a, b):
        nonlocal next_id
        key = (min(a, b), max(a, b))
        if key not in midpoint:
            midpoint[key] = next_id
            new_coords.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            next_id += 1
        return midpoint[key]

    cells = []
    for v0, v1, v2 in mesh.cells:
        m01, m12, m20 = mid(v0, v1), mid(v1, v2), mid(v2, v0)
        cells += [(v0, m01, m20), (v1, m12, m01), (v2, m20, m12), (m01, m12, m20)]

    boundary = []
    for (a, b), tag in mesh.boundary_edges:
        m = mid(a, b)
        boundary += [((a, m), tag), ((m, b), tag)]

    if new_coords:
        verts.append(np.array(new_coords))
    return Mesh(
        vertices=np.vstack(verts),
        cells=np.array(cells),
        boundary_edges=boundary,
        level=mesh.level + 1,
    )


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text mesh format (lossless 17-digit coordinates)."""
    with open(path, "w") as f:
        f.write("# porefem mesh\n")
        f.write(f"VERTICES {mesh.num_vertices}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        f.write(f"CELLS {mesh.num_cells}\n")
        for a, b, c in mesh.cells:
            f.write(f"{a} {b} {c}\n")
        f.write(f"BOUNDARY {len(mesh.boundary_edges)}\n")
        for (a, b), tag in mesh.boundary_edges:
            f.write(f"{a} {b} {tag}\n")


def read_mesh(path) -> Mesh:
    """Parse and validate a mesh file; raises MeshFormatError with the line number."""
    with open(path) as f:
        raw = f.readlines()
    lines = []  # (lineno, content)
    for no, line in enumerate(raw, start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            lines.append((no, stripped))

    pos = 0

    def expect_section(name):
        nonlocal pos
        if pos >= len(lines):
            raise MeshFormatError(f"expected section {name}, found end of file", len(raw))
        no, content = lines[pos]
        parts = content.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected section header '{name} <count>', got '{content}'", no)
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"invalid count '{parts[1]}' in section {name}", no) from None
        pos += 1
        return count

    def take(count, nfields, conv, what):
        nonlocal pos
        rows = []
        for _ in range(count):
            if pos >= len(lines):
                raise MeshFormatError(f"unexpected end of file while reading {what}", len(raw))
            no, content = lines[pos]
            parts = content.split()
            if len(parts) != nfields:
                raise MeshFormatError(f"expected {nfields} fields for {what}, got '{content}'", no)
            try:
                rows.append(conv(parts))
            except ValueError:
                raise MeshFormatError(f"could not parse {what} entry '{content}'", no) from None
            pos += 1
        return rows

    nv = expect_section("VERTICES")
    vertices = take(nv, 2, lambda p: (float(p[0]), float(p[1])), "vertex")
    nc = expect_section("CELLS")
    cells = take(nc, 3, lambda p: (int(p[0]), int(p[1]), int(p[2])), "cell")
    nb = expect_section("BOUNDARY")
    boundary = take(nb, 3, lambda p: ((int(p[0]), int(p[1])), str(p[2])), "boundary edge")
    if pos != len(lines):
        raise MeshFormatError("trailing content after BOUNDARY section", lines[pos][0])

    mesh = Mesh(
        vertices=np.array(vertices, dtype=float).reshape(nv, 2),
        cells=np.array(cells, dtype=np.int64).reshape(nc, 3),
        boundary_edges=boundary,
    )
    mesh.validate()
    return mesh
