"""Post-run audits: energy law, conserved quantities, a-priori monitors.

Everything here is pure post-processing over the immutable states produced
by a Stepper run. The three audits are:

  energy_audit     discrete counterpart of the transformed energy identity
                   J(t) + time integrals of nonlinear work and Darcy
                   dissipation = J(0); residual reported per step. Time
                   integrals use the implicit (new-level) integrand matched
                   to backward Euler, so the defect isolates genuine scheme
                   dissipation. E(t) (the primal-variable energy) is reported
                   alongside, not asserted.
  invariant_audit  exact discrete conservation of C_eta = (eta, 1) and the
                   algebraic links between the C_* functionals, plus the
                   momentum-row reconstruction of C_xi (denominator d - k3;
                   valid because the position field x and the constant 1 are
                   exactly representable test functions).
  estimate_monitor scaled-norm bundle from the a-priori estimates, with a
                   dual-norm proxy for the (H^1)' time-derivative bound
                   (Riesz norm of the mass + diffusion operator) and a
                   blow-up flag.

biot_limit_residual measures how far a state is from the vanishing-storage
(Biot consolidation) constraint div u = eta / alpha.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import fem, tensors

__all__ = [
    "EnergyReport",
    "InvariantReport",
    "EstimateMonitor",
    "BiotLimitResidual",
    "DiagnosticsSeries",
    "CSV_COLUMNS",
    "energy_audit",
    "invariant_audit",
    "estimate_monitor",
    "biot_limit_residual",
    "compute_series",
]


@dataclass
class EnergyReport:
    """Energy-law bookkeeping at one time level (arrays over levels in series)."""

    t: float
    J: float
    E: float
    residual: float
    nonlinear_work_acc: float
    darcy_acc: float


@dataclass
class InvariantReport:
    """Conserved functionals at one time level and their defects."""

    t: float
    C_eta: float
    C_xi: float
    C_q: float
    C_p: float
    C_u: float
    C_eta_predicted: float
    C_eta_defect: float
    C_q_link_defect: float
    C_p_link_defect: float
    C_u_minus_C_q: float
    C_xi_recon_defect: float


@dataclass
class EstimateMonitor:
    """Scaled norms from the a-priori estimates at one time level."""

    t: float
    eps_u_scaled: float
    eta_scaled: float
    xi_scaled: float
    grad_p_accumulated: float
    deta_dual_proxy: float


@dataclass
class BiotLimitResidual:
    """Distance from the vanishing-storage limit system.

    constraint: L2 Riesz norm of the residual of (div u, phi) = (eta, phi)/alpha.
    algebraic: L2 norm of p - (xi + lam*q)/alpha (identically zero by the
    kappa algebra; reported as a cross-check).
    """

    constraint: float
    algebraic: float


@dataclass
class DiagnosticsSeries:
    """Per-level audit bundle plus the fixed-point iteration counts."""

    energy: list[EnergyReport]
    invariants: list[InvariantReport]
    monitors: list[EstimateMonitor]
    picard_iters: list[int]
    blow_up: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for k, (e, iv, m) in enumerate(zip(self.energy, self.invariants, self.monitors)):
            iters = self.picard_iters[k - 1] if k >= 1 else 0
            row = [
                e.t, e.J, e.E, e.residual,
                iv.C_eta_defect, iv.C_xi_recon_defect, iv.C_u_minus_C_q,
                m.eps_u_scaled, m.eta_scaled, m.xi_scaled,
                m.grad_p_accumulated, m.deta_dual_proxy,
            ]
            buf.write(",".join(f"{v:.17g}" for v in row) + f",{iters}\n")
        return buf.getvalue()


CSV_COLUMNS = [
    "t", "J", "E", "energy_residual",
    "C_eta_defect", "C_xi_recon_defect", "C_u_minus_C_q",
    "mon_eps_u", "mon_eta", "mon_xi", "mon_grad_p_acc", "mon_deta_dual",
    "picard_iters",
]


def _check_cadence(states, dt):
    ts = np.array([s.t for s in states])
    if len(ts) < 2:
        raise ValueError("need at least two time levels (an initial state and one step)")
    steps = np.diff(ts)
    if np.any(np.abs(steps - dt) > 1e-12 * max(1.0, abs(dt))):
        raise ValueError(f"snapshot cadence mismatch: time steps {steps} vs declared dt {dt}")


def _stress_load(stepper, u):
    """Load vector of (N(grad u), eps(v)) with the full reformulated stress."""
    tab = fem.tabulate(stepper.space_u)
    G = fem.gradients_at_quad(stepper.space_u, tab, u)
    mu, lam = stepper.params.mu, stepper.params.lam
    if stepper.nonlinear:
        N = tensors.stress_N(G, mu, lam)
    else:
        N = mu * tensors.sym_grad(G)
    return fem.assemble_tensor_load(stepper.space_u, N, mode="sym"), G, N


def energy_audit(stepper, states, dt) -> list[EnergyReport]:
    """Evaluate the discrete energy identity along a uniform-dt trajectory."""
    _check_cadence(states, dt)
    Ms = stepper.M_s
    k = stepper.kappas
    c0 = stepper.params.c0
    lam = stepper.params.lam
    load_u = stepper.load_body + stepper.load_traction
    load_s = stepper.load_source + stepper.load_flux
    tab = fem.tabulate(stepper.space_u)

    def J_of(s):
        return 0.5 * (k.k2 * (s.eta @ (Ms @ s.eta)) + k.k3 * (s.xi @ (Ms @ s.xi))) - load_u @ s.u

    def E_of(s, G):
        div2 = float(np.sum(tab.w * np.trace(G, axis1=-2, axis2=-1) ** 2))
        return 0.5 * (lam * div2 + c0 * (s.p @ (Ms @ s.p))) - load_u @ s.u

    out = []
    J0 = J_of(states[0])
    G0 = fem.gradients_at_quad(stepper.space_u, tab, states[0].u)
    out.append(EnergyReport(t=states[0].t, J=J0, E=E_of(states[0], G0),
                            residual=0.0, nonlinear_work_acc=0.0, darcy_acc=0.0))
    work = 0.0
    darcy = 0.0
    source_work = 0.0
    for prev, s in zip(states, states[1:]):
        Nload, G, _ = _stress_load(stepper, s.u)
        work += float(Nload @ (s.u - prev.u))
        darcy += dt * float(s.p @ (stepper.D @ s.p) - stepper.load_gravity @ s.p)
        source_work += dt * float(load_s @ s.p)
        Jn = J_of(s)
        residual = Jn + work + darcy - source_work - J0
        out.append(EnergyReport(t=s.t, J=Jn, E=E_of(s, G), residual=residual,
                                nonlinear_work_acc=work, darcy_acc=darcy))
    return out


def invariant_audit(stepper, states, dt) -> list[InvariantReport]:
    """Evaluate the conserved functionals and their defects per time level."""
    _check_cadence(states, dt)
    Ms = stepper.M_s
    k = stepper.kappas
    one = np.ones(stepper.space_s.ndof)
    d = 2
    position = fem.interpolate(stepper.space_u, lambda x, y: (x, y))
    load_x = float((stepper.load_body + stepper.load_traction) @ position)
    source_rate = float((stepper.load_source + stepper.load_flux) @ one)
    tab = fem.tabulate(stepper.space_u)
    mu, lam = stepper.params.mu, stepper.params.lam

    C_eta0 = float(states[0].eta @ (Ms @ one))
    out = []
    for s in states:
        C_eta = float(s.eta @ (Ms @ one))
        C_xi = float(s.xi @ (Ms @ one))
        C_q = float(s.q @ (Ms @ one))
        C_p = float(s.p @ (Ms @ one))
        C_u = fem.boundary_normal_flux(stepper.space_u, s.u)
        predicted = C_eta0 + s.t * source_rate
        G = fem.gradients_at_quad(stepper.space_u, tab, s.u)
        if stepper.nonlinear:
            N = tensors.stress_N(G, mu, lam)
        else:
            N = mu * tensors.sym_grad(G)
        trace_N = float(np.einsum("cq,cqii->", tab.w, N))
        div_u = float(one @ (stepper.B @ s.u))
        recon = (trace_N + div_u - k.k1 * C_eta - load_x) / (d - k.k3)
        out.append(
            InvariantReport(
                t=s.t, C_eta=C_eta, C_xi=C_xi, C_q=C_q, C_p=C_p, C_u=C_u,
                C_eta_predicted=predicted,
                C_eta_defect=C_eta - predicted,
                C_q_link_defect=C_q - (k.k1 * C_eta - k.k3 * C_xi),
                C_p_link_defect=C_p - (k.k1 * C_xi + k.k2 * C_eta),
                C_u_minus_C_q=C_u - C_q,
                C_xi_recon_defect=recon - C_xi,
            )
        )
    return out


def estimate_monitor(stepper, states, dt, coercivity: float | None = None,
                     blow_up_factor: float = 50.0):
    """Scaled-norm bundle per level plus a blow-up flag.

    coercivity scales ||eps(u)|| (defaults to mu, the linear coercivity
    constant; pass EmpiricalConstants.C2_coercivity for the sampled value).
    The (H^1)'-type bound on the eta difference quotient is replaced by the
    dual norm of the (mass + diffusion) operator, labeled a proxy.
    Returns (list of EstimateMonitor, blow_up flag).
    """
    _check_cadence(states, dt)
    Ms = stepper.M_s
    k = stepper.kappas
    prm = stepper.params
    C2 = prm.mu if coercivity is None else coercivity
    tab = fem.tabulate(stepper.space_u)
    A = (Ms + stepper.D).tocsc()
    riesz = spla.splu(A)
    grad_s = fem.assemble_diffusion(stepper.space_s, np.eye(2), 1.0)  # plain (grad p, grad psi)

    out = []
    grad_p_acc = 0.0
    prev = None
    for s in states:
        G = fem.gradients_at_quad(stepper.space_u, tab, s.u)
        eps = tensors.sym_grad(G)
        eps_norm = float(np.sqrt(np.einsum("cq,cqij,cqij->", tab.w, eps, eps)))
        eta_norm = float(np.sqrt(s.eta @ (Ms @ s.eta)))
        xi_norm = float(np.sqrt(s.xi @ (Ms @ s.xi)))
        if prev is not None:
            grad_p_acc += dt * float(s.p @ (grad_s @ s.p))  # time integral of |grad p|^2
            dq = (s.eta - prev.eta) / dt
            z = riesz.solve(Ms @ dq)
            dual = float(np.sqrt(max(z @ (A @ z), 0.0)))
        else:
            dual = 0.0
        out.append(
            EstimateMonitor(
                t=s.t,
                eps_u_scaled=float(np.sqrt(max(C2, 0.0)) * eps_norm),
                eta_scaled=float(np.sqrt(k.k2) * eta_norm),
                xi_scaled=float(np.sqrt(k.k3) * xi_norm),
                grad_p_accumulated=float(np.sqrt(max(prm.K1 / prm.mu_f, 0.0) * grad_p_acc)),
                deta_dual_proxy=dual,
            )
        )
        prev = s

    bundles = [m.eps_u_scaled + m.eta_scaled + m.xi_scaled for m in out]
    baseline = max(bundles[0], bundles[1] if len(bundles) > 1 else 0.0, 1e-300)
    blow_up = any(b > blow_up_factor * baseline for b in bundles[2:])
    return out, blow_up


def biot_limit_residual(stepper, state) -> BiotLimitResidual:
    """Residuals of the vanishing-storage limit relations for one state."""
    prm = stepper.params
    Ms = stepper.M_s
    lu = spla.splu(Ms.tocsc())
    r = lu.solve(stepper.B @ state.u - (Ms @ state.eta) / prm.alpha)
    constraint = float(np.sqrt(max(r @ (Ms @ r), 0.0)))
    alg = state.p - (state.xi + prm.lam * state.q) / prm.alpha
    algebraic = float(np.sqrt(max(alg @ (Ms @ alg), 0.0)))
    return BiotLimitResidual(constraint=constraint, algebraic=algebraic)


def compute_series(stepper, result, coercivity: float | None = None) -> DiagnosticsSeries:
    """Bundle all audits for a RunResult into one CSV-emittable series."""
    states, dt = result.states, result.dt
    energy = energy_audit(stepper, states, dt)
    invariants = invariant_audit(stepper, states, dt)
    monitors, blow_up = estimate_monitor(stepper, states, dt, coercivity=coercivity)
    return DiagnosticsSeries(
        energy=energy,
        invariants=invariants,
        monitors=monitors,
        picard_iters=[r.iterations for r in result.reports],
        blow_up=blow_up,
    )
