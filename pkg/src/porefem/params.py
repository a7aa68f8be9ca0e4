"""Physical parameters, Lame conversions and the (p, q) <-> (xi, eta) change of variables.

The solver works in the transformed variables

    q = div u,      eta = c0*p + alpha*q,      xi = alpha*p - lambda*q,

with the inverse map given by the kappa coefficients

    kappa1 = alpha / (alpha^2 + lambda*c0),
    kappa2 = lambda / (alpha^2 + lambda*c0),
    kappa3 = c0 / (alpha^2 + lambda*c0),

so that p = kappa1*xi + kappa2*eta and q = kappa1*eta - kappa3*xi.
All functions here are pure and dimension-agnostic; fields may be scalars
or numpy arrays (applied nodewise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MaterialParams",
    "KappaSet",
    "ElasticModuli",
    "kappa_from",
    "kappa_limit",
    "lame_from_young",
    "to_xi_eta",
    "from_xi_eta",
]


@dataclass(frozen=True)
class KappaSet:
    """Derived coefficients of the inverse variable change."""

    k1: float
    k2: float
    k3: float


@dataclass(frozen=True)
class MaterialParams:
    """Physical coefficients of the poroelastic medium.

    mu, lam        Lame constants (shear modulus and first Lame constant)
    alpha          Biot-Willis coupling constant
    c0             constrained specific storage coefficient, strictly positive
    K              2x2 symmetric positive definite permeability tensor
    mu_f           solvent viscosity
    rho_f          fluid density
    g_vec          gravity vector
    """

    mu: float
    lam: float
    alpha: float
    c0: float
    K: np.ndarray = field(default_factory=lambda: np.eye(2))
    mu_f: float = 1.0
    rho_f: float = 1.0
    g_vec: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"shear modulus must be positive, got mu={self.mu}")
        if self.lam < 0:
            raise ValueError(f"Lame constant lambda must be nonnegative, got {self.lam}")
        if self.alpha <= 0:
            raise ValueError(f"Biot-Willis constant must be positive, got {self.alpha}")
        if self.c0 <= 0:
            raise ValueError(
                "strictly positive storage required: c0 must be > 0 "
                f"(got c0={self.c0}); the c0=0 limit is probed only via kappa_limit"
            )
        if self.mu_f <= 0:
            raise ValueError(f"solvent viscosity must be positive, got {self.mu_f}")
        K = np.asarray(self.K, dtype=float)
        if K.shape != (2, 2) or not np.allclose(K, K.T, rtol=0.0, atol=1e-14 * max(1.0, abs(K).max())):
            raise ValueError("permeability tensor K must be a symmetric 2x2 matrix")
        evals = np.linalg.eigvalsh(K)
        if evals[0] <= 0:
            raise ValueError(f"permeability tensor K must be positive definite, eigenvalues {evals}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "g_vec", np.asarray(self.g_vec, dtype=float))

    @property
    def K1(self) -> float:
        """Lower spectral bound of K."""
        return float(np.linalg.eigvalsh(self.K)[0])

    @property
    def K2(self) -> float:
        """Upper spectral bound of K."""
        return float(np.linalg.eigvalsh(self.K)[1])

    def kappas(self) -> KappaSet:
        return kappa_from(self)


@dataclass(frozen=True)
class ElasticModuli:
    """Engineering moduli: Young's modulus E, Poisson ratio nu, bulk modulus B."""

    E: float
    nu: float
    B: float


def kappa_from(params: MaterialParams) -> KappaSet:
    """Compute the kappa coefficient triple from the material parameters.

    Requires c0 > 0; the c0 = 0 limit is available only through kappa_limit.
    """
    alpha, lam, c0 = params.alpha, params.lam, params.c0
    if c0 <= 0:
        raise ValueError("strictly positive storage required: c0 must be > 0")
    den = alpha**2 + lam * c0
    if den <= 0:
        raise ValueError(f"degenerate parameter combination: alpha^2 + lambda*c0 = {den}")
    return KappaSet(k1=alpha / den, k2=lam / den, k3=c0 / den)


def kappa_limit(alpha: float, lam: float) -> KappaSet:
    """The c0 -> 0 limit of the kappa triple: (1/alpha, lambda/alpha^2, 0)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return KappaSet(k1=1.0 / alpha, k2=lam / alpha**2, k3=0.0)


def lame_from_young(E: float, nu: float) -> tuple[float, float, float]:
    """Convert Young's modulus and Poisson ratio to (lambda, mu, B).

    Rejects nu = 0.5 (incompressible limit, singular denominator).
    """
    if E <= 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not (-1.0 < nu < 0.5):
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    B = E / (3.0 * (1.0 - 2.0 * nu))
    return lam, mu, B


def to_xi_eta(p, q, params: MaterialParams):
    """Forward variable change: (p, q) -> (xi, eta), nodewise."""
    eta = params.c0 * p + params.alpha * q
    xi = params.alpha * p - params.lam * q
    return xi, eta


def from_xi_eta(xi, eta, kappas: KappaSet):
    """Inverse variable change: (xi, eta) -> (p, q), nodewise."""
    p = kappas.k1 * xi + kappas.k2 * eta
    q = kappas.k1 * eta - kappas.k3 * xi
    return p, q
