"""Post-run audit layer: energy law, invariants, monitors, limit residuals."""

import numpy as np
import pytest

from porefem import diagnostics, meshing, scenarios
from porefem.params import MaterialParams
from porefem.timestepping import Stepper


@pytest.fixture(scope="module")
def rest_run():
    """No loads, no gravity: the trajectory stays identically zero."""
    prm = MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1)
    stepper = Stepper(meshing.centered_square_mesh(3), prm)
    result = stepper.run(stepper.initialize(), dt=0.1, n_steps=4)
    return stepper, result


@pytest.fixture(scope="module")
def decay_run():
    """Unforced linear relaxation of a pressure bump: pure dissipation."""
    prm = MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1)
    stepper = Stepper(meshing.centered_square_mesh(6), prm, nonlinear=False)
    initial = stepper.initialize(p0=lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y))
    result = stepper.run(initial, dt=1e-2, n_steps=30)
    assert result.complete
    return stepper, result


def test_rest_run_all_audits_vanish(rest_run):
    stepper, result = rest_run
    series = diagnostics.compute_series(stepper, result)
    for e in series.energy:
        assert e.J == 0.0 and e.E == 0.0 and abs(e.residual) <= 1e-15
    for iv in series.invariants:
        assert abs(iv.C_eta_defect) <= 1e-15
        assert abs(iv.C_u_minus_C_q) <= 1e-15
        assert abs(iv.C_xi_recon_defect) <= 1e-15
    for m in series.monitors:
        assert m.eps_u_scaled == 0.0 and m.eta_scaled == 0.0
    assert not series.blow_up


def test_cadence_mismatch_rejected(rest_run):
    stepper, result = rest_run
    with pytest.raises(ValueError, match="cadence"):
        diagnostics.energy_audit(stepper, result.states, dt=0.05)
    with pytest.raises(ValueError, match="two time levels"):
        diagnostics.energy_audit(stepper, result.states[:1], dt=0.1)


def test_unforced_decay_is_dissipative(decay_run):
    stepper, result = decay_run
    series = diagnostics.compute_series(stepper, result)
    J = [e.J for e in series.energy]
    assert J[0] > 0
    assert all(b <= a + 1e-14 for a, b in zip(J, J[1:]))  # J never increases
    darcy = [e.darcy_acc for e in series.energy]
    assert all(b >= a - 1e-14 for a, b in zip(darcy, darcy[1:]))  # dissipation accumulates
    assert darcy[-1] > 0
    # the residual is exactly minus the scheme's increment dissipation
    # (backward Euler damps each jump by half the squared increment norms)
    k = stepper.kappas
    Ms = stepper.M_s
    acc = 0.0
    for prev, s, e in zip(result.states, result.states[1:], series.energy[1:]):
        de, dx = s.eta - prev.eta, s.xi - prev.xi
        acc += 0.5 * (k.k2 * (de @ (Ms @ de)) + k.k3 * (dx @ (Ms @ dx)))
        assert e.residual <= 1e-15
        assert abs(e.residual + acc) <= 1e-13 * max(1.0, acc)


def test_invariant_defects_on_reference_run(standard_run):
    stepper, result = standard_run
    reports = diagnostics.invariant_audit(stepper, result.states, result.dt)
    for iv in reports:
        assert abs(iv.C_eta_defect) <= 1e-12
        assert abs(iv.C_q_link_defect) <= 1e-14
        assert abs(iv.C_p_link_defect) <= 1e-14
        assert abs(iv.C_u_minus_C_q) <= 1e-12
        assert abs(iv.C_xi_recon_defect) <= 1e-10
    # the source feeds mass in: C_eta actually moves, the defect is not
    # trivially zero because nothing happens
    assert abs(reports[-1].C_eta - reports[0].C_eta) > 1e-3


def test_energy_residual_small_on_reference_run(standard_run):
    stepper, result = standard_run
    reports = diagnostics.energy_audit(stepper, result.states, result.dt)
    assert reports[0].residual == 0.0
    assert max(abs(e.residual) for e in reports) <= 1e-3


def test_monitors_finite_and_no_blow_up(standard_run):
    stepper, result = standard_run
    monitors, blow_up = diagnostics.estimate_monitor(stepper, result.states, result.dt)
    assert not blow_up
    for m in monitors:
        for v in (m.eps_u_scaled, m.eta_scaled, m.xi_scaled,
                  m.grad_p_accumulated, m.deta_dual_proxy):
            assert np.isfinite(v) and v >= 0.0
    acc = [m.grad_p_accumulated for m in monitors]
    assert all(b >= a - 1e-14 for a, b in zip(acc, acc[1:]))


def test_biot_limit_residual_split(standard_run):
    stepper, result = standard_run
    r = diagnostics.biot_limit_residual(stepper, result.states[-1])
    # algebraic relation holds identically; the constraint residual is the
    # genuine O(c0) distance from the vanishing-storage system
    assert r.algebraic <= 1e-14
    assert 1e-6 < r.constraint < 1.0


def test_csv_shape_and_determinism(standard_run):
    stepper, result = standard_run
    series = diagnostics.compute_series(stepper, result)
    text = series.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(diagnostics.CSV_COLUMNS)
    assert len(lines) == 1 + len(result.states)
    first = lines[1].split(",")
    assert len(first) == len(diagnostics.CSV_COLUMNS)
    assert first[-1] == "0"  # no fixed-point iterations at the initial level
    assert series.to_csv() == text


def test_coercivity_override_scales_monitor(standard_run):
    stepper, result = standard_run
    base, _ = diagnostics.estimate_monitor(stepper, result.states, result.dt)
    quad, _ = diagnostics.estimate_monitor(stepper, result.states, result.dt, coercivity=4.0)
    assert quad[-1].eps_u_scaled == pytest.approx(2.0 * base[-1].eps_u_scaled)
