"""Finite-element spaces, quadrature and assembly on triangle meshes.

Displacements use continuous piecewise quadratics (vector P2, dofs at
vertices and edge midpoints); the scalar fields use continuous piecewise
linears (P1). A vector P1 space exists only as a diagnostic mode for the
inf-sup sweep. Volume quadrature is a degree-4 six-point rule; boundary
integrals use three-point Gauss on each tagged edge.

Conventions for user-supplied fields:
  volume vector load   f(x, y) -> (fx, fy), numpy-broadcasting over arrays
  volume scalar load   phi(x, y) -> values
  boundary traction    f1(x, y, nx, ny) -> (tx, ty)
  boundary flux        phi1(x, y, nx, ny) -> values

Vector dofs are interleaved: global dof of (node j, component a) is 2*j + a.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .meshing import Mesh

__all__ = [
    "QuadRule",
    "QUAD_TRI",
    "EDGE_QUAD",
    "Space",
    "FieldVec",
    "cell_geometry",
    "tabulate",
    "assemble_mass",
    "assemble_vector_stiffness",
    "assemble_gradient_stiffness",
    "assemble_divergence",
    "assemble_diffusion",
    "assemble_gravity_load",
    "assemble_body_load",
    "assemble_traction",
    "assemble_source",
    "assemble_flux",
    "assemble_tensor_load",
    "values_at_quad",
    "gradients_at_quad",
    "interpolate",
    "rm_basis",
    "boundary_normal_flux",
    "error_norms",
    "infsup_estimate",
    "infsup_sweep",
    "korn_quotient",
    "rm_quotient_constant",
]


@dataclass(frozen=True)
class QuadRule:
    """Quadrature on the reference triangle: barycentric points, weights
    summing to the reference area 1/2 (scaled by |det J| at assembly)."""

    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sum 1
    degree: int


# Six-point rule, exact through degree 4.
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
QUAD_TRI = QuadRule(
    points=np.array(
        [
            [1 - 2 * _A1, _A1, _A1],
            [_A1, 1 - 2 * _A1, _A1],
            [_A1, _A1, 1 - 2 * _A1],
            [1 - 2 * _A2, _A2, _A2],
            [_A2, 1 - 2 * _A2, _A2],
            [_A2, _A2, 1 - 2 * _A2],
        ]
    ),
    weights=0.5 * np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
    degree=4,
)

# Three-point Gauss on [0, 1] (degree 5) for edge integrals.
_G = np.sqrt(3.0 / 5.0) / 2.0
EDGE_QUAD = (np.array([0.5 - _G, 0.5, 0.5 + _G]), np.array([5.0, 8.0, 5.0]) / 18.0)


def _ref_basis(order: int, bary: np.ndarray):
    """Values and reference-coordinate gradients of P1/P2 basis at barycentric points.

    Reference coordinates are (xi, eta) with lam = (1-xi-eta, xi, eta).
    Returns vals (nloc, nq) and grads (nloc, nq, 2).
    """
    lam = bary.T  # (3, nq)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # (3, 2)
    nq = bary.shape[0]
    if order == 1:
        vals = lam.copy()
        grads = np.broadcast_to(dlam[:, None, :], (3, nq, 2)).copy()
        return vals, grads
    if order == 2:
        vals = np.empty((6, nq))
        grads = np.empty((6, nq, 2))
        for i in range(3):
            vals[i] = lam[i] * (2.0 * lam[i] - 1.0)
            grads[i] = (4.0 * lam[i] - 1.0)[:, None] * dlam[i]
        edges = [(0, 1), (1, 2), (2, 0)]
        for k, (i, j) in enumerate(edges):
            vals[3 + k] = 4.0 * lam[i] * lam[j]
            grads[3 + k] = 4.0 * (lam[i][:, None] * dlam[j] + lam[j][:, None] * dlam[i])
        return vals, grads
    raise ValueError(f"unsupported basis order {order}")


def _edge_trace(order: int, s: np.ndarray):
    """Trace basis on an oriented edge, parametrized by s in [0, 1]."""
    if order == 1:
        return np.stack([1.0 - s, s])
    if order == 2:
        return np.stack([(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)])
    raise ValueError(f"unsupported basis order {order}")


@dataclass(frozen=True)
class CellGeometry:
    """Per-cell affine map data: |det J| and inverse-transpose Jacobians."""

    det: np.ndarray  # (nc,) |det J| = 2 * area
    invJT: np.ndarray  # (nc, 2, 2)
    quad_xy: np.ndarray  # (nc, nq, 2) physical quadrature points


def cell_geometry(mesh: Mesh, quad: QuadRule = QUAD_TRI) -> CellGeometry:
    p = mesh.vertices[mesh.cells]  # (nc, 3, 2)
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # (nc, 2, 2)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0], inv[:, 0, 1] = J[:, 1, 1], -J[:, 0, 1]
    inv[:, 1, 0], inv[:, 1, 1] = -J[:, 1, 0], J[:, 0, 0]
    inv /= det[:, None, None]
    invJT = np.swapaxes(inv, 1, 2)
    quad_xy = np.einsum("qk,ckd->cqd", quad.points, p)
    return CellGeometry(det=np.abs(det), invJT=invJT, quad_xy=quad_xy)


class Space:
    """Finite-element space on a mesh.

    kind is one of 'scalar-linear', 'vector-quadratic', 'vector-linear'.
    node_coords holds the coordinates of the scalar nodes (vertices, plus
    edge midpoints for quadratic spaces); ndof = ncomp * nnodes.
    """

    def __init__(self, mesh: Mesh, order: int, ncomp: int):
        self.mesh = mesh
        self.order = order
        self.ncomp = ncomp
        if order == 1:
            self.cell_nodes = mesh.cells.copy()
            self.node_coords = mesh.vertices.copy()
            self.edge_nodes: dict[tuple[int, int], int] = {}
        elif order == 2:
            edge_ids: dict[tuple[int, int], int] = {}
            cell_edges = np.empty((mesh.num_cells, 3), dtype=np.int64)
            for c, (v0, v1, v2) in enumerate(mesh.cells):
                for k, (a, b) in enumerate(((v0, v1), (v1, v2), (v2, v0))):
                    key = (min(a, b), max(a, b))
                    if key not in edge_ids:
                        edge_ids[key] = len(edge_ids)
                    cell_edges[c, k] = edge_ids[key]
            nv = mesh.num_vertices
            self.cell_nodes = np.hstack([mesh.cells, nv + cell_edges])
            mids = np.empty((len(edge_ids), 2))
            for (a, b), e in edge_ids.items():
                mids[e] = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            self.node_coords = np.vstack([mesh.vertices, mids])
            self.edge_nodes = {k: nv + e for k, e in edge_ids.items()}
        else:
            raise ValueError(f"unsupported order {order}")
        self.nnodes = self.node_coords.shape[0]
        self.ndof = self.ncomp * self.nnodes
        self._tab = None

    @classmethod
    def scalar_p1(cls, mesh: Mesh) -> "Space":
        return cls(mesh, order=1, ncomp=1)

    @classmethod
    def vector_p2(cls, mesh: Mesh) -> "Space":
        return cls(mesh, order=2, ncomp=2)

    @classmethod
    def vector_p1(cls, mesh: Mesh) -> "Space":
        return cls(mesh, order=1, ncomp=2)

    @property
    def kind(self) -> str:
        names = {(1, 1): "scalar-linear", (2, 2): "vector-quadratic", (1, 2): "vector-linear"}
        return names[(self.order, self.ncomp)]

    @property
    def nloc(self) -> int:
        return self.cell_nodes.shape[1]

    def cell_dofs(self) -> np.ndarray:
        """(nc, ncomp*nloc) global dofs, local index ncomp*j + a for (node j, comp a)."""
        if self.ncomp == 1:
            return self.cell_nodes
        dofs = np.empty((self.mesh.num_cells, 2 * self.nloc), dtype=np.int64)
        dofs[:, 0::2] = 2 * self.cell_nodes
        dofs[:, 1::2] = 2 * self.cell_nodes + 1
        return dofs


@dataclass
class FieldVec:
    """Coefficient vector tied to its owning space."""

    coeffs: np.ndarray
    space: Space

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndof,):
            raise ValueError(
                f"coefficient length {self.coeffs.shape} does not match space ndof {self.space.ndof}"
            )


@dataclass(frozen=True)
class Tabulation:
    vals: np.ndarray  # (nloc, nq)
    grads: np.ndarray  # (nc, nloc, nq, 2) physical gradients
    w: np.ndarray  # (nc, nq) weights * |det J|
    geo: CellGeometry


def tabulate(space: Space, geo: CellGeometry | None = None, quad: QuadRule = QUAD_TRI) -> Tabulation:
    cacheable = geo is None and quad is QUAD_TRI
    if cacheable and space._tab is not None:
        return space._tab
    if geo is None:
        geo = cell_geometry(space.mesh, quad)
    vals, gref = _ref_basis(space.order, quad.points)
    grads = np.einsum("cde,jqe->cjqd", geo.invJT, gref)
    w = geo.det[:, None] * quad.weights[None, :]
    tab = Tabulation(vals=vals, grads=grads, w=w, geo=geo)
    if cacheable:
        space._tab = tab
    return tab


def _scatter(space: Space, local: np.ndarray) -> sp.csr_matrix:
    """Accumulate per-cell local matrices (nc, n, n) into a global CSR matrix."""
    dofs = space.cell_dofs()
    n = dofs.shape[1]
    rows = np.repeat(dofs, n, axis=1).ravel()
    cols = np.tile(dofs, (1, n)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(space.ndof, space.ndof))
    out = mat.tocsr()
    out.sum_duplicates()
    return out


def _scatter_rect(space_row: Space, space_col: Space, local: np.ndarray) -> sp.csr_matrix:
    rd, cd = space_row.cell_dofs(), space_col.cell_dofs()
    nr, ncl = rd.shape[1], cd.shape[1]
    rows = np.repeat(rd, ncl, axis=1).ravel()
    cols = np.tile(cd, (1, nr)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(space_row.ndof, space_col.ndof))
    out = mat.tocsr()
    out.sum_duplicates()
    return out


def _scatter_vec(space: Space, local: np.ndarray) -> np.ndarray:
    out = np.zeros(space.ndof)
    np.add.at(out, space.cell_dofs().ravel(), local.ravel())
    return out


def assemble_mass(space: Space) -> sp.csr_matrix:
    """L2 mass matrix; block diagonal over components for vector spaces."""
    tab = tabulate(space)
    m = np.einsum("jq,kq,cq->cjk", tab.vals, tab.vals, tab.w)
    if space.ncomp == 1:
        return _scatter(space, m)
    nc, nloc = m.shape[0], m.shape[1]
    big = np.zeros((nc, 2 * nloc, 2 * nloc))
    big[:, 0::2, 0::2] = m
    big[:, 1::2, 1::2] = m
    return _scatter(space, big)


def assemble_vector_stiffness(space_u: Space, mu: float) -> sp.csr_matrix:
    """mu * (eps(u), eps(v)) for a vector space; kernel = rigid motions."""
    if space_u.ncomp != 2:
        raise ValueError("strain stiffness needs a vector space")
    tab = tabulate(space_u)
    gg = np.einsum("cjqd,ckqd,cq->cjk", tab.grads, tab.grads, tab.w)
    gba = np.einsum("cjqb,ckqa,cq->cjkba", tab.grads, tab.grads, tab.w)
    nc, nloc = gg.shape[0], gg.shape[1]
    big = np.zeros((nc, 2 * nloc, 2 * nloc))
    for a in range(2):
        for b in range(2):
            block = 0.5 * mu * gba[:, :, :, b, a]
            if a == b:
                block = block + 0.5 * mu * gg
            big[:, a::2, b::2] = block
    return _scatter(space_u, big)


def assemble_gradient_stiffness(space_u: Space) -> sp.csr_matrix:
    """(grad u, grad v) full-gradient stiffness (used for H1 norms)."""
    tab = tabulate(space_u)
    gg = np.einsum("cjqd,ckqd,cq->cjk", tab.grads, tab.grads, tab.w)
    if space_u.ncomp == 1:
        return _scatter(space_u, gg)
    nc, nloc = gg.shape[0], gg.shape[1]
    big = np.zeros((nc, 2 * nloc, 2 * nloc))
    big[:, 0::2, 0::2] = gg
    big[:, 1::2, 1::2] = gg
    return _scatter(space_u, big)


def assemble_divergence(space_u: Space, space_s: Space) -> sp.csr_matrix:
    """Rectangular B with (B u)_k = integral psi_k * div(u)."""
    tab_u = tabulate(space_u)
    tab_s = tabulate(space_s)
    loc = np.einsum("kq,cjqa,cq->ckja", tab_s.vals, tab_u.grads, tab_u.w)
    nc = loc.shape[0]
    loc = loc.reshape(nc, space_s.nloc, 2 * space_u.nloc)
    return _scatter_rect(space_s, space_u, loc)


def assemble_diffusion(space_s: Space, K: np.ndarray, mu_f: float) -> sp.csr_matrix:
    """(1/mu_f) * (K grad p, grad psi); requires K SPD."""
    K = np.asarray(K, dtype=float)
    if not np.allclose(K, K.T) or np.linalg.eigvalsh(K)[0] <= 0:
        raise ValueError("permeability tensor must be symmetric positive definite")
    tab = tabulate(space_s)
    Kg = np.einsum("de,ckqe->ckqd", K, tab.grads)
    loc = np.einsum("cjqd,ckqd,cq->cjk", tab.grads, Kg, tab.w) / mu_f
    return _scatter(space_s, loc)


def assemble_gravity_load(space_s: Space, K: np.ndarray, mu_f: float, rho_f: float, g_vec) -> np.ndarray:
    """(1/mu_f) * integral (K rho_f g) . grad psi."""
    tab = tabulate(space_s)
    v = np.asarray(K, dtype=float) @ (rho_f * np.asarray(g_vec, dtype=float)) / mu_f
    loc = np.einsum("d,cjqd,cq->cj", v, tab.grads, tab.w)
    return _scatter_vec(space_s, loc)


def assemble_body_load(space_u: Space, f) -> np.ndarray:
    """Volume load (f, v) for a vector space; f(x, y) -> (fx, fy)."""
    tab = tabulate(space_u)
    x, y = tab.geo.quad_xy[..., 0], tab.geo.quad_xy[..., 1]
    fx, fy = f(x, y)
    fx = np.broadcast_to(fx, x.shape)
    fy = np.broadcast_to(fy, x.shape)
    nc = x.shape[0]
    loc = np.empty((nc, 2 * space_u.nloc))
    loc[:, 0::2] = np.einsum("cq,jq,cq->cj", fx, tab.vals, tab.w)
    loc[:, 1::2] = np.einsum("cq,jq,cq->cj", fy, tab.vals, tab.w)
    return _scatter_vec(space_u, loc)


def assemble_source(space_s: Space, phi_src) -> np.ndarray:
    """Volume source (phi, psi) for a scalar space; phi(x, y) -> values."""
    tab = tabulate(space_s)
    x, y = tab.geo.quad_xy[..., 0], tab.geo.quad_xy[..., 1]
    vals = np.broadcast_to(phi_src(x, y), x.shape)
    loc = np.einsum("cq,jq,cq->cj", vals, tab.vals, tab.w)
    return _scatter_vec(space_s, loc)


def _boundary_edges(space: Space, tags=None):
    """Iterate boundary edges as (node_indices, phys points, weights*len, normal)."""
    mesh = space.mesh
    s, wq = EDGE_QUAD
    trace = _edge_trace(space.order, s)  # (ntr, nq)
    for (a, b), tag in mesh.boundary_edges:
        if tags is not None and tag not in tags:
            continue
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        d = pb - pa
        length = float(np.hypot(d[0], d[1]))
        t = d / length
        normal = np.array([t[1], -t[0]])  # outward for CCW traversal
        pts = pa[None, :] + s[:, None] * d[None, :]
        if space.order == 2:
            mid = space.edge_nodes[(min(a, b), max(a, b))]
            nodes = np.array([a, b, mid])
        else:
            nodes = np.array([a, b])
        yield nodes, trace, pts, wq * length, normal


def assemble_traction(space_u: Space, f1, tags=None) -> np.ndarray:
    """Boundary load <f1, v> over tagged edges; f1(x, y, nx, ny) -> (tx, ty)."""
    out = np.zeros(space_u.ndof)
    for nodes, trace, pts, w, n in _boundary_edges(space_u, tags):
        tx, ty = f1(pts[:, 0], pts[:, 1], n[0], n[1])
        tx = np.broadcast_to(tx, pts[:, 0].shape)
        ty = np.broadcast_to(ty, pts[:, 0].shape)
        out[2 * nodes] += trace @ (w * tx)
        out[2 * nodes + 1] += trace @ (w * ty)
    return out


def assemble_flux(space_s: Space, phi1, tags=None) -> np.ndarray:
    """Boundary load <phi1, psi> over tagged edges; phi1(x, y, nx, ny) -> values."""
    out = np.zeros(space_s.ndof)
    for nodes, trace, pts, w, n in _boundary_edges(space_s, tags):
        vals = np.broadcast_to(phi1(pts[:, 0], pts[:, 1], n[0], n[1]), pts[:, 0].shape)
        out[nodes] += trace @ (w * vals)
    return out


def assemble_tensor_load(space_u: Space, T: np.ndarray, mode: str = "sym") -> np.ndarray:
    """Load vector of (T, eps(v)) or (T, grad v) for T given at quadrature points.

    T has shape (nc, nq, 2, 2). mode='sym' pairs sym(T) against grad v
    (equivalently T against eps(v)); mode='grad' pairs T against grad v.
    """
    tab = tabulate(space_u)
    if mode == "sym":
        T = 0.5 * (T + np.swapaxes(T, -1, -2))
    elif mode != "grad":
        raise ValueError(f"unknown pairing mode {mode!r}")
    # raveling the (node, component) axes gives the interleaved local index 2k+b
    loc = np.einsum("cq,cqbn,ckqn->ckb", tab.w, T, tab.grads)
    return _scatter_vec(space_u, loc.reshape(loc.shape[0], 2 * space_u.nloc))


def values_at_quad(space: Space, tab: Tabulation, coeffs: np.ndarray) -> np.ndarray:
    """Field values at quadrature points: (nc, nq) scalar or (nc, nq, 2) vector."""
    nodes = space.cell_nodes
    if space.ncomp == 1:
        return np.einsum("cj,jq->cq", coeffs[nodes], tab.vals)
    U = np.stack([coeffs[2 * nodes], coeffs[2 * nodes + 1]], axis=-1)  # (nc, nloc, 2)
    return np.einsum("cja,jq->cqa", U, tab.vals)


def gradients_at_quad(space: Space, tab: Tabulation, coeffs: np.ndarray) -> np.ndarray:
    """Gradients at quadrature points: (nc, nq, 2) scalar or (nc, nq, 2, 2) vector
    with entry [a, n] = d u_a / d x_n."""
    nodes = space.cell_nodes
    if space.ncomp == 1:
        return np.einsum("cj,cjqn->cqn", coeffs[nodes], tab.grads)
    U = np.stack([coeffs[2 * nodes], coeffs[2 * nodes + 1]], axis=-1)
    return np.einsum("cja,cjqn->cqan", U, tab.grads)


def interpolate(space: Space, func) -> np.ndarray:
    """Nodal interpolant; func(x, y) -> values (scalar) or (fx, fy) (vector)."""
    x, y = space.node_coords[:, 0], space.node_coords[:, 1]
    if space.ncomp == 1:
        return np.asarray(np.broadcast_to(func(x, y), x.shape), dtype=float).copy()
    fx, fy = func(x, y)
    out = np.empty(space.ndof)
    out[0::2] = np.broadcast_to(fx, x.shape)
    out[1::2] = np.broadcast_to(fy, x.shape)
    return out


def rm_basis(mesh: Mesh, space_u: Space) -> list[np.ndarray]:
    """Interpolants of the rigid motions (1,0), (0,1), (-y,x)."""
    one = lambda x, y: (np.ones_like(x), np.zeros_like(x))
    two = lambda x, y: (np.zeros_like(x), np.ones_like(x))
    rot = lambda x, y: (-y, x)
    return [interpolate(space_u, f) for f in (one, two, rot)]


def boundary_normal_flux(space_u: Space, coeffs: np.ndarray) -> float:
    """<u . n, 1> over the tagged boundary via edge quadrature."""
    total = 0.0
    for nodes, trace, _pts, w, n in _boundary_edges(space_u):
        ux = coeffs[2 * nodes] @ trace
        uy = coeffs[2 * nodes + 1] @ trace
        total += float(np.sum(w * (n[0] * ux + n[1] * uy)))
    return total


def error_norms(space: Space, coeffs: np.ndarray, exact, exact_grad=None):
    """L2 error and H1 seminorm error against a smooth exact field.

    exact follows the load conventions; exact_grad(x, y) returns the gradient
    (scalar: (gx, gy); vector: rows du_a/dx_n as ((g00,g01),(g10,g11))).
    Returns (l2, h1_semi); h1_semi is None when exact_grad is omitted.
    """
    tab = tabulate(space)
    x, y = tab.geo.quad_xy[..., 0], tab.geo.quad_xy[..., 1]
    if space.ncomp == 1:
        diff = values_at_quad(space, tab, coeffs) - np.broadcast_to(exact(x, y), x.shape)
        l2 = float(np.sqrt(np.sum(tab.w * diff**2)))
        if exact_grad is None:
            return l2, None
        gx, gy = exact_grad(x, y)
        gdiff = gradients_at_quad(space, tab, coeffs) - np.stack(
            [np.broadcast_to(gx, x.shape), np.broadcast_to(gy, x.shape)], axis=-1
        )
        h1 = float(np.sqrt(np.sum(tab.w[..., None] * gdiff**2)))
        return l2, h1
    fx, fy = exact(x, y)
    vdiff = values_at_quad(space, tab, coeffs) - np.stack(
        [np.broadcast_to(fx, x.shape), np.broadcast_to(fy, x.shape)], axis=-1
    )
    l2 = float(np.sqrt(np.sum(tab.w[..., None] * vdiff**2)))
    if exact_grad is None:
        return l2, None
    G = exact_grad(x, y)
    Gex = np.empty(x.shape + (2, 2))
    for a in range(2):
        for n in range(2):
            Gex[..., a, n] = np.broadcast_to(G[a][n], x.shape)
    gdiff = gradients_at_quad(space, tab, coeffs) - Gex
    h1 = float(np.sqrt(np.sum(tab.w[..., None, None] * gdiff**2)))
    return l2, h1


def _null_basis(C: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of a short fat constraint matrix."""
    return scipy.linalg.null_space(C)


def infsup_estimate(space_u: Space, space_s: Space, rm: list[np.ndarray] | None = None) -> float:
    """Discrete inf-sup constant of the divergence coupling.

    Smallest generalized singular value of B restricted to rigid-motion-
    orthogonal displacements (H1 norm) and mean-zero scalars (L2 norm),
    computed densely; intended for desk-scale meshes.
    """
    B = assemble_divergence(space_u, space_s).toarray()
    X = (assemble_gradient_stiffness(space_u) + assemble_mass(space_u)).toarray()
    M_u = assemble_mass(space_u)
    M_s = assemble_mass(space_s).toarray()
    if rm is None:
        rm = rm_basis(space_u.mesh, space_u)
    C = np.stack(rm) @ M_u.toarray()
    Z = _null_basis(C)
    Bz = B @ Z
    Xz = Z.T @ X @ Z
    S = Bz @ np.linalg.solve(Xz, Bz.T)
    ones = np.ones(space_s.ndof)
    W = _null_basis((ones @ M_s)[None, :])
    evals = scipy.linalg.eigh(W.T @ S @ W, W.T @ M_s @ W, eigvals_only=True)
    smallest = max(float(evals[0]), 0.0)
    return float(np.sqrt(smallest))


def infsup_sweep(levels, element: str = "p2") -> list[float]:
    """Inf-sup constants over unit-square meshes; element 'p2' (stable pair)
    or 'p1' (equal-order diagnostic mode, expected to degrade)."""
    from .meshing import unit_square_mesh

    betas = []
    for n in levels:
        mesh = unit_square_mesh(n)
        space_u = Space.vector_p2(mesh) if element == "p2" else Space.vector_p1(mesh)
        space_s = Space.scalar_p1(mesh)
        betas.append(infsup_estimate(space_u, space_s))
    return betas


def korn_quotient(space_u: Space, rm: list[np.ndarray] | None = None) -> float:
    """min ||eps(u)|| / ||u||_H1 over rigid-motion-orthogonal displacements."""
    E = assemble_vector_stiffness(space_u, mu=1.0).toarray()
    X = (assemble_gradient_stiffness(space_u) + assemble_mass(space_u)).toarray()
    M_u = assemble_mass(space_u)
    if rm is None:
        rm = rm_basis(space_u.mesh, space_u)
    C = np.stack(rm) @ M_u.toarray()
    Z = _null_basis(C)
    evals = scipy.linalg.eigh(Z.T @ E @ Z, Z.T @ X @ Z, eigvals_only=True)
    return float(np.sqrt(max(float(evals[0]), 0.0)))


def rm_quotient_constant(mesh: Mesh, space_u: Space, rm: list[np.ndarray] | None = None) -> float:
    """max ||v||_L2 / ||eps(v)|| over rigid-motion-orthogonal displacements."""
    E = assemble_vector_stiffness(space_u, mu=1.0).toarray()
    M = assemble_mass(space_u).toarray()
    if rm is None:
        rm = rm_basis(mesh, space_u)
    C = np.stack(rm) @ M
    Z = _null_basis(C)
    evals = scipy.linalg.eigh(Z.T @ E @ Z, Z.T @ M @ Z, eigvals_only=True)
    lam_min = max(float(evals[0]), 1e-300)
    return float(1.0 / np.sqrt(lam_min))
