"""Constitutive tensor kernel and sampling-based estimation of its constants.

The stress law couples a linear strain with quadratic gradient terms:

    sym_grad(G)     = (G + G^T) / 2
    green_strain(G) = (G + G^T + 2 G^T G) / 2
    stress_full(G)  = mu * green_strain(G) + lam * tr(green_strain(G)) * I
    stress_N(G)     = mu * sym_grad(G) + mu * G^T G + lam * ||G||_F^2 * I
                    = stress_full(G) - lam * tr(G) * I

All maps are dimension-generic: G may have shape (..., d, d) and the
operation is applied over the leading axes.

estimate_constants samples random smooth displacement fields on a mesh and
reports empirical growth / coercivity / Lipschitz / monotonicity constants
of the map G -> stress_N(G) in a configured gradient-amplitude regime.
Positivity of the coercivity and monotonicity constants is regime-dependent
and is reported, never assumed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "sym_grad",
    "green_strain",
    "stress_full",
    "stress_N",
    "nonlinear_part",
    "RegimeBounds",
    "EmpiricalConstants",
    "default_delta",
    "estimate_constants",
]


def sym_grad(G: np.ndarray) -> np.ndarray:
    """Symmetric part (G + G^T)/2 over the trailing two axes."""
    G = np.asarray(G, dtype=float)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def green_strain(G: np.ndarray) -> np.ndarray:
    """Deformed Green strain (G + G^T + 2 G^T G)/2; symmetric for all G."""
    G = np.asarray(G, dtype=float)
    GT = np.swapaxes(G, -1, -2)
    return 0.5 * (G + GT + 2.0 * GT @ G)


def stress_full(G: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Full stress mu*green_strain + lam*tr(green_strain)*I."""
    E = green_strain(G)
    d = E.shape[-1]
    tr = np.trace(E, axis1=-2, axis2=-1)
    return mu * E + lam * tr[..., None, None] * np.eye(d)


def stress_N(G: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Reformulated stress mu*sym_grad(G) + mu*G^T G + lam*||G||_F^2*I.

    Equals stress_full(G) - lam*tr(G)*I exactly.
    """
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    GT = np.swapaxes(G, -1, -2)
    frob2 = np.sum(G * G, axis=(-2, -1))
    return mu * sym_grad(G) + mu * (GT @ G) + lam * frob2[..., None, None] * np.eye(d)


def nonlinear_part(G: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Quadratic remainder mu*G^T G + lam*||G||_F^2*I = stress_N - mu*sym_grad."""
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    GT = np.swapaxes(G, -1, -2)
    frob2 = np.sum(G * G, axis=(-2, -1))
    return mu * (GT @ G) + lam * frob2[..., None, None] * np.eye(d)


@dataclass(frozen=True)
class RegimeBounds:
    """Gradient-amplitude regime for the constant estimators.

    grad_lower/grad_upper bound the L2 norm of the gradient over the domain;
    frob_lower/frob_upper bound the pointwise Frobenius norm; delta is the
    pointwise Frobenius amplitude cap used when drawing sample fields.
    """

    grad_lower: float
    grad_upper: float
    frob_lower: float
    frob_upper: float
    delta: float

    def __post_init__(self):
        if not (0 < self.grad_lower <= self.grad_upper):
            raise ValueError("require 0 < grad_lower <= grad_upper")
        if not (0 < self.frob_lower <= self.frob_upper):
            raise ValueError("require 0 < frob_lower <= frob_upper")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass
class EmpiricalConstants:
    """Sampled constants of the stress map in a given regime.

    C1_growth and C3_lipschitz are always positive; C2_coercivity and
    C4_monotonicity carry their sign (nonpositive values flag the
    non-monotone large-strain regime).
    """

    C1_growth: float
    C2_coercivity: float
    C3_lipschitz: float
    C4_monotonicity: float
    korn_c1: float
    korn_c2: float
    delta: float
    n_samples: int
    seed: int
    outside_monotone_regime: bool

    def to_json(self, regime: RegimeBounds | None = None) -> str:
        report = asdict(self)
        if regime is not None:
            report["regime"] = asdict(regime)
        return json.dumps(report, indent=2, sort_keys=True)


def default_delta(mu: float, lam: float, d: int = 2) -> float:
    """Safety-margin amplitude cap mu / (8*(mu + lam*sqrt(d))).

    Below this pointwise gradient amplitude the linear term dominates the
    quadratic remainder in sampled pairings.
    """
    return mu / (8.0 * (mu + lam * np.sqrt(d)))


def _sample_gradient_fields(mesh, space, delta, n_samples, seed, n_modes=3):
    """Draw random smooth displacement fields, RM-orthogonalized and scaled.

    Yields (per-quad-point gradients, quad weights) for each sample, where the
    gradients have pointwise Frobenius norm scaled to at most delta.
    """
    from . import fem

    rng = np.random.default_rng(seed)
    geo = fem.cell_geometry(mesh)
    tab = fem.tabulate(space, geo)
    w = geo.det[:, None] * fem.QUAD_TRI.weights[None, :]  # (ncell, nq)

    M_u = fem.assemble_mass(space)
    R = np.stack(fem.rm_basis(mesh, space))  # (3, ndof)
    gram = R @ (M_u @ R.T)

    X, Y = space.node_coords[:, 0], space.node_coords[:, 1]
    for _ in range(n_samples):
        coeffs = np.zeros(space.ndof)
        vals = np.zeros((space.nnodes, 2))
        for _ in range(n_modes):
            kx, ky = rng.integers(1, 4, size=2)
            a = rng.normal(size=(2, 4))
            cx, sx = np.cos(np.pi * kx * X), np.sin(np.pi * kx * X)
            cy, sy = np.cos(np.pi * ky * Y), np.sin(np.pi * ky * Y)
            for comp in range(2):
                vals[:, comp] += (
                    a[comp, 0] * sx * sy
                    + a[comp, 1] * sx * cy
                    + a[comp, 2] * cx * sy
                    + a[comp, 3] * cx * cy
                )
        coeffs[0::2], coeffs[1::2] = vals[:, 0], vals[:, 1]
        # project out rigid motions in L2
        c = np.linalg.solve(gram, R @ (M_u @ coeffs))
        coeffs -= R.T @ c
        G = fem.gradients_at_quad(space, tab, coeffs)  # (ncell, nq, 2, 2)
        fmax = np.sqrt(np.sum(G * G, axis=(-2, -1))).max()
        if fmax == 0.0:
            continue
        scale = delta * rng.uniform(0.5, 1.0) / fmax
        yield scale * G, w


def estimate_constants(
    regime: RegimeBounds,
    mu: float,
    lam: float,
    n_samples: int = 1000,
    seed: int = 0,
    mesh=None,
    linear_only: bool = False,
) -> EmpiricalConstants:
    """Estimate the stress-map constants by random sampling on a mesh.

    C1 = max ||N(G)|| / ||eps||, C2 = min (N(G), eps) / ||eps||^2 over
    single fields; C3, C4 are the analogous Lipschitz and monotonicity
    quotients over consecutive sample pairs. Norms and pairings are L2 over
    the mesh. With linear_only=True the quadratic remainder is dropped and
    all four constants collapse to mu exactly.
    """
    from . import fem, meshing

    if n_samples < 100:
        raise ValueError("need at least 100 samples for a meaningful estimate")
    if mesh is None:
        mesh = meshing.unit_square_mesh(4)
    space = fem.Space.vector_p2(mesh)
    rm = fem.rm_basis(mesh, space)

    def pointwise(G):
        N = stress_N(G, mu, lam)
        if linear_only:
            N = mu * sym_grad(G)
        return N, sym_grad(G), G

    c1 = c3 = -np.inf
    c2 = c4 = np.inf
    korn_c1 = korn_c2 = 0.0
    prev = None
    n_kept = 0
    for G, w in _sample_gradient_fields(mesh, space, regime.delta, n_samples, seed):
        N, eps, grad = pointwise(G)

        def dot(A, B):
            return float(np.einsum("cq,cqij,cqij->", w, A, B))

        eps2 = dot(eps, eps)
        if eps2 <= 0:
            continue
        n_kept += 1
        norm_eps = np.sqrt(eps2)
        norm_N = np.sqrt(dot(N, N))
        norm_grad = np.sqrt(dot(grad, grad))
        c1 = max(c1, norm_N / norm_eps)
        c2 = min(c2, dot(N, eps) / eps2)
        korn_c2 = max(korn_c2, norm_grad / norm_eps)
        if prev is not None:
            Np, epsp, _ = prev
            dN, deps = N - Np, eps - epsp
            deps2 = dot(deps, deps)
            if deps2 > 0:
                c3 = max(c3, np.sqrt(dot(dN, dN)) / np.sqrt(deps2))
                c4 = min(c4, dot(dN, deps) / deps2)
        prev = (N, eps, grad)
    if n_kept == 0:
        raise RuntimeError("all samples degenerate: every drawn field had zero strain")

    # L2-quotient constant of the rigid-motion bound, via a small eigensolve
    korn_c1 = fem.rm_quotient_constant(mesh, space, rm)

    return EmpiricalConstants(
        C1_growth=float(c1),
        C2_coercivity=float(c2),
        C3_lipschitz=float(c3),
        C4_monotonicity=float(c4),
        korn_c1=float(korn_c1),
        korn_c2=float(korn_c2),
        delta=regime.delta,
        n_samples=n_samples,
        seed=seed,
        outside_monotone_regime=bool(c4 <= 0 or c2 <= 0),
    )
