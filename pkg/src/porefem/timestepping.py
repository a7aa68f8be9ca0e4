"""Backward-Euler time integration with a per-step fixed-point loop.

Each time step solves a monolithic linear system in (u, xi, eta) plus three
rigid-motion multipliers, with the quadratic part of the stress lagged to
the previous fixed-point iterate:

  row u:   mu(eps(w), eps(v)) - (xi, div v) + sum_i m_i (r_i, v)
               = (f, v) + <f1, v> - (N_nl(grad u_lag), eps(v))
  row xi:  kappa3 (xi, phi) + (div w, phi) - kappa1 (eta, phi) = 0
  row eta: (eta, psi)/dt + (1/mu_f)(K grad(kappa1 xi + kappa2 eta), grad psi)
               = (eta_prev, psi)/dt + (phi_src, psi) + <phi1, psi>
                 + (1/mu_f)(K rho_f g, grad psi)
  rows r:  (w, r_i) = 0 for the three rigid motions r_i.

The pure-Neumann problem is only solvable when the loads do work against no
rigid motion; that compatibility is enforced at setup. The cross blocks
(-kappa1 mass vs +kappa1 diffusion) make the monolithic matrix structurally
unsymmetric, so steps use a cached sparse LU (one factorization per dt).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import fem, tensors
from .linsolve import BlockSystem, Factorization
from .params import MaterialParams, KappaSet

__all__ = [
    "PicardConfig",
    "Loads",
    "State",
    "StepReport",
    "RunResult",
    "Stepper",
    "CompatibilityError",
    "PicardDivergenceError",
    "compatibility_check",
    "RM_MODE_NAMES",
]

RM_MODE_NAMES = ("translation-x", "translation-y", "rotation")


class CompatibilityError(ValueError):
    """Loads do nonzero work against a rigid motion; names the mode."""

    def __init__(self, mode: str, residual: float):
        super().__init__(
            f"incompatible loads: (f, r) + <f1, r> = {residual:.3e} for the "
            f"rigid-motion mode '{mode}' (must vanish for the pure-Neumann problem)"
        )
        self.mode = mode
        self.residual = residual


class PicardDivergenceError(RuntimeError):
    """Fixed-point loop failed; carries the increment-norm history."""

    def __init__(self, message: str, increments: list[float]):
        super().__init__(f"{message}; increment history {increments}")
        self.increments = increments


@dataclass(frozen=True)
class PicardConfig:
    """Fixed-point loop controls. tol is relative in the H1 norm; damping 1.0
    iterates the plain map and falls back to 0.5 once if divergence is seen."""

    tol: float = 1e-10
    maxit: int = 50
    damping: float = 1.0
    auto_damping: bool = True

    def __post_init__(self):
        if self.tol <= 0 or self.maxit < 1 or not (0.0 < self.damping <= 1.0):
            raise ValueError("require tol > 0, maxit >= 1, damping in (0, 1]")


@dataclass
class Loads:
    """Time-independent load bundle; None means zero.

    f(x, y) -> (fx, fy); f1(x, y, nx, ny) -> (tx, ty);
    phi_src(x, y) -> values; phi1(x, y, nx, ny) -> values.
    """

    f: object = None
    f1: object = None
    phi_src: object = None
    phi1: object = None


@dataclass(frozen=True)
class State:
    """Solution snapshot at one time level; p, q are materialized from
    (xi, eta) via the inverse variable change and stay consistent to 1e-14."""

    t: float
    u: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    rm_multipliers: np.ndarray

    @classmethod
    def from_primals(cls, t, u, xi, eta, rm_multipliers, kappas: KappaSet) -> "State":
        p = kappas.k1 * xi + kappas.k2 * eta
        q = kappas.k1 * eta - kappas.k3 * xi
        return cls(t=t, u=np.asarray(u, dtype=float), xi=np.asarray(xi, dtype=float),
                   eta=np.asarray(eta, dtype=float), p=p, q=q,
                   rm_multipliers=np.asarray(rm_multipliers, dtype=float))


@dataclass
class StepReport:
    """Observability record for one time step's fixed-point loop."""

    iterations: int
    increments: list[float]
    final_residual: float
    wall_time: float
    damping: float
    converged: bool


@dataclass
class RunResult:
    """Full trajectory: states at every time level (index 0 = initial)."""

    states: list[State]
    reports: list[StepReport]
    dt: float
    complete: bool = True
    failure: str | None = None
    diagnostics: object = None


def _zero_vec(x, y):
    return np.zeros_like(x), np.zeros_like(x)


def compatibility_check(mesh, loads: Loads) -> np.ndarray:
    """Work of (f, f1) against each rigid motion; must vanish for solvability."""
    space_u = fem.Space.vector_p2(mesh)
    L = np.zeros(space_u.ndof)
    if loads.f is not None:
        L += fem.assemble_body_load(space_u, loads.f)
    if loads.f1 is not None:
        L += fem.assemble_traction(space_u, loads.f1)
    rm = fem.rm_basis(mesh, space_u)
    return np.array([float(r @ L) for r in rm])


class Stepper:
    """Owns the spaces, assembled operators and cached factorizations for one
    mesh/parameter/load configuration.

    nonlinear=False drops the lagged stress term (pure linear model);
    rm_constraints=False omits the multiplier rows, leaving the pure-Neumann
    system singular (used to demonstrate the guardrail error).
    """

    def __init__(
        self,
        mesh,
        params: MaterialParams,
        loads: Loads | None = None,
        picard: PicardConfig | None = None,
        nonlinear: bool = True,
        rm_constraints: bool = True,
        check_compatibility: bool = True,
        compat_tol: float = 1e-10,
    ):
        self.mesh = mesh
        self.params = params
        self.kappas = params.kappas()
        self.loads = loads if loads is not None else Loads()
        self.picard = picard if picard is not None else PicardConfig()
        self.nonlinear = nonlinear
        self.rm_constraints = rm_constraints

        self.space_u = fem.Space.vector_p2(mesh)
        self.space_s = fem.Space.scalar_p1(mesh)
        self.rm = fem.rm_basis(mesh, self.space_u)

        self.M_u = fem.assemble_mass(self.space_u)
        self.M_s = fem.assemble_mass(self.space_s)
        self.E = fem.assemble_vector_stiffness(self.space_u, params.mu)
        self.B = fem.assemble_divergence(self.space_u, self.space_s)
        self.D = fem.assemble_diffusion(self.space_s, params.K, params.mu_f)
        self.X_u = fem.assemble_gradient_stiffness(self.space_u) + fem.assemble_mass(self.space_u)
        # multiplier coupling rows: (w, r_i) = r_i^T M_u w
        self.C = np.stack([self.M_u @ r for r in self.rm])  # (3, ndof_u)

        ld = self.loads
        self.load_body = fem.assemble_body_load(self.space_u, ld.f) if ld.f else np.zeros(self.space_u.ndof)
        self.load_traction = fem.assemble_traction(self.space_u, ld.f1) if ld.f1 else np.zeros(self.space_u.ndof)
        self.load_source = fem.assemble_source(self.space_s, ld.phi_src) if ld.phi_src else np.zeros(self.space_s.ndof)
        self.load_flux = fem.assemble_flux(self.space_s, ld.phi1) if ld.phi1 else np.zeros(self.space_s.ndof)
        self.load_gravity = fem.assemble_gravity_load(
            self.space_s, params.K, params.mu_f, params.rho_f, params.g_vec
        )

        self.compat_residuals = np.array([float(r @ (self.load_body + self.load_traction)) for r in self.rm])
        if check_compatibility:
            worst = int(np.argmax(np.abs(self.compat_residuals)))
            if abs(self.compat_residuals[worst]) > compat_tol:
                raise CompatibilityError(RM_MODE_NAMES[worst], self.compat_residuals[worst])

        self._factor_cache: dict[float, Factorization] = {}
        self.last_removed_rm: np.ndarray | None = None

    # -- system construction -------------------------------------------------

    def _system(self, dt: float) -> BlockSystem:
        k = self.kappas
        names = ["u", "xi", "eta"] + (["rm"] if self.rm_constraints else [])
        sizes = {"u": self.space_u.ndof, "xi": self.space_s.ndof, "eta": self.space_s.ndof, "rm": 3}
        sys = BlockSystem(
            block_names=names,
            sizes=sizes,
            constraint_hint="rigid-motion multiplier rows absent" if not self.rm_constraints else None,
        )
        sys.set_block("u", "u", self.E)
        sys.set_block("u", "xi", -self.B.T)
        sys.set_block("xi", "u", self.B)
        sys.set_block("xi", "xi", k.k3 * self.M_s)
        sys.set_block("xi", "eta", -k.k1 * self.M_s)
        sys.set_block("eta", "xi", k.k1 * self.D)
        sys.set_block("eta", "eta", self.M_s / dt + k.k2 * self.D)
        if self.rm_constraints:
            sys.set_block("u", "rm", self.C.T)
            sys.set_block("rm", "u", self.C)
        return sys

    def _factorization(self, dt: float) -> Factorization:
        if dt not in self._factor_cache:
            self._factor_cache[dt] = Factorization(self._system(dt))
        return self._factor_cache[dt]

    def nonlinear_load(self, u_coeffs: np.ndarray) -> np.ndarray:
        """Load vector of (N_nl(grad u), eps(v)); zero when nonlinearity is off."""
        if not self.nonlinear:
            return np.zeros(self.space_u.ndof)
        tab = fem.tabulate(self.space_u)
        G = fem.gradients_at_quad(self.space_u, tab, u_coeffs)
        N = tensors.nonlinear_part(G, self.params.mu, self.params.lam)
        return fem.assemble_tensor_load(self.space_u, N, mode="sym")

    def h1_norm(self, u_coeffs: np.ndarray) -> float:
        return float(np.sqrt(max(u_coeffs @ (self.X_u @ u_coeffs), 0.0)))

    # -- stepping -------------------------------------------------------------

    def linear_step(self, state_prev: State, lag_u: np.ndarray, dt: float):
        """One monolithic solve with the quadratic stress frozen at lag_u.

        Returns (State at t + dt, relative linear residual).
        """
        fact = self._factorization(dt)
        sys = fact.system
        sys.set_rhs("u", self.load_body + self.load_traction - self.nonlinear_load(lag_u))
        sys.set_rhs("xi", np.zeros(self.space_s.ndof))
        sys.set_rhs("eta", self.M_s @ state_prev.eta / dt + self.load_source + self.load_flux + self.load_gravity)
        if self.rm_constraints:
            sys.set_rhs("rm", np.zeros(3))
        parts = fact.solve()
        mults = parts.get("rm", np.zeros(3))
        state = State.from_primals(
            state_prev.t + dt, parts["u"], parts["xi"], parts["eta"], mults, self.kappas
        )
        return state, fact.last_residual

    def picard_solve(self, state_prev: State, dt: float):
        """Advance one step by iterating the lagged-stress map to a fixed point.

        With the nonlinearity disabled the map is affine and independent of
        the lag, so the first solve is the fixed point and the loop reports
        exactly one iteration (its recorded increment is the change from the
        previous time level). Raises PicardDivergenceError with the increment
        history when the loop grows or hits maxit.
        """
        t0 = time.perf_counter()
        cfg = self.picard
        state, res = self._picard_loop(state_prev, dt, cfg.damping)
        if state is None and cfg.auto_damping and cfg.damping == 1.0:
            state, res = self._picard_loop(state_prev, dt, 0.5)
        if state is None:
            raise PicardDivergenceError(
                f"fixed-point loop diverged at t = {state_prev.t + dt:g} "
                f"(amplitude outside the contractive small-strain regime)",
                self._last_increments,
            )
        new_state, report_iters, increments, lin_res, damping = state
        return new_state, StepReport(
            iterations=report_iters,
            increments=increments,
            final_residual=lin_res,
            wall_time=time.perf_counter() - t0,
            damping=damping,
            converged=True,
        )

    def _picard_loop(self, state_prev: State, dt: float, damping: float):
        cfg = self.picard
        u_lag = state_prev.u.copy()
        increments: list[float] = []
        self._last_increments = increments
        growth = 0
        for k in range(1, cfg.maxit + 1):
            cand, lin_res = self.linear_step(state_prev, u_lag, dt)
            u_new = cand.u if damping == 1.0 else (1.0 - damping) * u_lag + damping * cand.u
            inc = self.h1_norm(u_new - u_lag)
            increments.append(inc)
            if not self.nonlinear:
                return (cand, 1, increments, lin_res, damping), lin_res
            if inc <= cfg.tol * max(1.0, self.h1_norm(u_new)):
                if damping != 1.0:
                    # one undamped closing solve so (xi, eta) match the final u
                    cand, lin_res = self.linear_step(state_prev, u_new, dt)
                return (cand, k, increments, lin_res, damping), lin_res
            if len(increments) >= 2 and inc > increments[-2]:
                growth += 1
                if growth >= 3 or not np.isfinite(inc) or inc > 1e8:
                    return None, None
            else:
                growth = 0
            u_lag = u_new
        if increments and increments[-1] > increments[0]:
            return None, None  # grew overall: divergence, candidate for damping retry
        raise PicardDivergenceError(
            f"fixed-point loop exceeded maxit = {cfg.maxit} at t = {state_prev.t + dt:g}",
            increments,
        )

    # -- initialization and runs ----------------------------------------------

    def initialize(self, u0=None, p0=None) -> State:
        """Project (u0, p0) into the discrete spaces and derive the start state.

        u0 is L2-projected onto the displacement space and its rigid-motion
        component removed (recorded in last_removed_rm); q0 is the scalar
        projection of div u0; then eta0 = c0 p0 + alpha q0, xi0 = alpha p0 - lam q0.
        """
        if u0 is None and p0 is None:
            z = np.zeros(self.space_s.ndof)
            self.last_removed_rm = np.zeros(3)
            return State.from_primals(0.0, np.zeros(self.space_u.ndof), z, z, np.zeros(3), self.kappas)
        mass_u = spla.splu(self.M_u.tocsc())
        mass_s = spla.splu(self.M_s.tocsc())
        if u0 is not None:
            U = mass_u.solve(fem.assemble_body_load(self.space_u, u0))
        else:
            U = np.zeros(self.space_u.ndof)
        gram = self.C @ np.stack(self.rm).T  # (r_i, r_j) in L2
        coef = np.linalg.solve(gram, self.C @ U)
        U = U - np.stack(self.rm).T @ coef
        self.last_removed_rm = coef
        q0 = mass_s.solve(self.B @ U)
        if p0 is not None:
            p0v = mass_s.solve(fem.assemble_source(self.space_s, p0))
        else:
            p0v = np.zeros(self.space_s.ndof)
        prm = self.params
        eta0 = prm.c0 * p0v + prm.alpha * q0
        xi0 = prm.alpha * p0v - prm.lam * q0
        return State.from_primals(0.0, U, xi0, eta0, np.zeros(3), self.kappas)

    def run(self, initial: State, dt: float, n_steps: int, with_diagnostics: bool = False) -> RunResult:
        """Advance n_steps uniform backward-Euler steps from the initial state.

        A failure on the very first step aborts; a later failure returns the
        partial trajectory flagged incomplete.
        """
        if n_steps < 1:
            raise ValueError("need at least one step")
        states = [initial]
        reports: list[StepReport] = []
        result = RunResult(states=states, reports=reports, dt=dt)
        for n in range(1, n_steps + 1):
            try:
                state, report = self.picard_solve(states[-1], dt)
            except PicardDivergenceError as exc:
                if n == 1:
                    raise
                result.complete = False
                result.failure = f"step {n}: {exc}"
                break
            states.append(state)
            reports.append(report)
        if with_diagnostics:
            from . import diagnostics

            result.diagnostics = diagnostics.compute_series(self, result)
        return result
