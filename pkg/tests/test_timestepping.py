"""Backward-Euler stepping, the fixed-point loop, and its failure modes."""

import dataclasses

import numpy as np
import pytest

from porefem import fem, meshing, scenarios
from porefem.linsolve import SingularSystemError
from porefem.params import MaterialParams
from porefem.timestepping import (
    CompatibilityError,
    Loads,
    PicardConfig,
    PicardDivergenceError,
    State,
    Stepper,
    compatibility_check,
)


PRM = MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1)


@pytest.fixture(scope="module")
def mesh4():
    return meshing.centered_square_mesh(4)


def test_picard_config_validation():
    with pytest.raises(ValueError):
        PicardConfig(tol=0.0)
    with pytest.raises(ValueError):
        PicardConfig(maxit=0)
    with pytest.raises(ValueError):
        PicardConfig(damping=1.5)


def test_state_from_primals_consistency():
    k = PRM.kappas()
    rng = np.random.default_rng(0)
    xi, eta = rng.normal(size=8), rng.normal(size=8)
    s = State.from_primals(0.3, np.zeros(4), xi, eta, np.zeros(3), k)
    # invert: eta = c0 p + alpha q, xi = alpha p - lam q
    assert np.abs(PRM.c0 * s.p + PRM.alpha * s.q - eta).max() <= 1e-14
    assert np.abs(PRM.alpha * s.p - PRM.lam * s.q - xi).max() <= 1e-14


def test_initialize_zero(mesh4):
    stepper = Stepper(mesh4, PRM)
    s = stepper.initialize()
    for arr in (s.u, s.xi, s.eta, s.p, s.q):
        assert np.abs(arr).max() == 0.0
    assert s.t == 0.0


def test_initialize_dilation_field(mesh4):
    stepper = Stepper(mesh4, PRM)
    s = stepper.initialize(u0=lambda x, y: (x, y), p0=None)
    # div(x, y) = 2 everywhere, p0 = 0
    assert np.abs(s.q - 2.0).max() <= 1e-10
    assert np.abs(s.eta - 2.0 * PRM.alpha).max() <= 1e-10
    assert np.abs(s.xi + 2.0 * PRM.lam).max() <= 1e-10
    assert np.abs(s.p).max() <= 1e-10


def test_initialize_strips_rigid_motion(mesh4):
    stepper = Stepper(mesh4, PRM)
    s = stepper.initialize(u0=lambda x, y: (1.0 - y, x + 2.0), p0=None)
    assert np.abs(s.u).max() <= 1e-10
    assert np.abs(stepper.last_removed_rm).max() > 0.1


def test_compatibility_check_flags_net_force(mesh4):
    res = compatibility_check(mesh4, Loads(f=lambda x, y: (np.zeros_like(x), -np.ones_like(x))))
    # net downward force of magnitude |domain| against translation-y only
    assert abs(res[1] + 1.0) <= 1e-12
    assert abs(res[0]) <= 1e-12 and abs(res[2]) <= 1e-12


def test_stepper_rejects_uncompensated_loads(mesh4):
    with pytest.raises(CompatibilityError, match="translation-y") as err:
        Stepper(mesh4, PRM, Loads(f=lambda x, y: (np.zeros_like(x), -np.ones_like(x))))
    assert err.value.mode == "translation-y"


def test_settling_loads_are_compensated(mesh4):
    cfg = scenarios.standard_scenario(load_amplitude=0.02)
    stepper = Stepper(mesh4, cfg.material(), cfg.loads())
    assert np.abs(stepper.compat_residuals).max() <= 1e-12


def test_zero_loads_stay_at_rest(mesh4):
    stepper = Stepper(mesh4, PRM)
    result = stepper.run(stepper.initialize(), dt=0.1, n_steps=3)
    assert result.complete
    for s in result.states:
        assert np.abs(s.u).max() <= 1e-12
        assert np.abs(s.eta).max() <= 1e-12
        assert np.abs(s.xi).max() <= 1e-12


def test_linear_mode_reports_single_iteration(mesh4):
    cfg = scenarios.standard_scenario(load_amplitude=0.02, nonlinear=False)
    stepper = Stepper(mesh4, cfg.material(), cfg.loads(), nonlinear=False)
    state, report = stepper.picard_solve(stepper.initialize(), dt=1e-2)
    assert report.iterations == 1
    assert report.converged
    assert report.final_residual <= 1e-11


def test_small_amplitude_contraction(mesh4):
    cfg = scenarios.standard_scenario(load_amplitude=0.02)
    stepper = Stepper(mesh4, cfg.material(), cfg.loads())
    state, report = stepper.picard_solve(stepper.initialize(), dt=1e-2)
    assert report.converged
    assert report.damping == 1.0
    assert 2 <= report.iterations <= 15
    # strict contraction after the first update
    incs = report.increments
    assert all(b < a for a, b in zip(incs[1:-1], incs[2:]))


def test_full_amplitude_diverges_with_history():
    cfg = scenarios.standard_scenario()  # amplitude 1.0: documented divergence
    stepper, initial = scenarios.build_stepper(cfg)
    with pytest.raises(PicardDivergenceError) as err:
        stepper.run(initial, cfg.dt, 1)
    incs = err.value.increments
    assert len(incs) >= 3
    # the history records growth, not contraction
    assert any(b > a for a, b in zip(incs, incs[1:]))
    assert "small-strain regime" in str(err.value)


def test_missing_constraint_rows_trigger_guardrail(mesh4):
    cfg = scenarios.standard_scenario(load_amplitude=0.02)
    stepper = Stepper(mesh4, cfg.material(), cfg.loads(), rm_constraints=False)
    with pytest.raises(SingularSystemError, match="rigid-motion multiplier rows absent"):
        stepper.picard_solve(stepper.initialize(), dt=1e-2)


def test_steady_manufactured_state_is_a_fixed_point():
    case = scenarios.mms_case("linear", amplitude=1e-3)
    assert case.in_space
    mesh = meshing.centered_square_mesh(4)
    stepper = Stepper(mesh, case.params, case.loads)
    initial = stepper.initialize(u0=case.exact_u, p0=case.exact_p)
    result = stepper.run(initial, dt=0.05, n_steps=3)
    assert result.complete
    for s in result.states[1:]:
        assert stepper.h1_norm(s.u - initial.u) <= 1e-10
        assert np.abs(s.p - initial.p).max() <= 1e-10


def test_mid_run_failure_returns_partial_trajectory(mesh4, monkeypatch):
    cfg = scenarios.standard_scenario(load_amplitude=0.02)
    stepper = Stepper(mesh4, cfg.material(), cfg.loads())
    real = Stepper.picard_solve
    calls = {"n": 0}

    def flaky(self, state_prev, dt):
        calls["n"] += 1
        if calls["n"] == 3:
            raise PicardDivergenceError("synthetic failure", [1.0, 2.0])
        return real(self, state_prev, dt)

    monkeypatch.setattr(Stepper, "picard_solve", flaky)
    result = stepper.run(stepper.initialize(), dt=1e-2, n_steps=5)
    assert not result.complete
    assert "synthetic failure" in result.failure
    assert len(result.states) == 3  # initial + two good steps


def test_run_rejects_zero_steps(mesh4):
    stepper = Stepper(mesh4, PRM)
    with pytest.raises(ValueError):
        stepper.run(stepper.initialize(), dt=0.1, n_steps=0)


def test_per_step_invariants_on_reference_run(standard_run):
    stepper, result = standard_run
    k = stepper.kappas
    rm = stepper.rm
    for s in result.states[1:]:
        # row xi holds: kappa3 (xi, .) + (div u, .) - kappa1 (eta, .) = 0
        row = k.k3 * (stepper.M_s @ s.xi) + stepper.B @ s.u - k.k1 * (stepper.M_s @ s.eta)
        assert np.abs(row).max() <= 1e-10
        # displacement orthogonal to every rigid motion
        for r in rm:
            assert abs(r @ (stepper.M_u @ s.u)) <= 1e-10
        # multipliers are Lagrange bookkeeping only: essentially zero
        assert np.abs(s.rm_multipliers).max() <= 1e-8
        # materialized (p, q) agree with the inverse variable change
        assert np.abs(k.k1 * s.xi + k.k2 * s.eta - s.p).max() <= 1e-14
        assert np.abs(k.k1 * s.eta - k.k3 * s.xi - s.q).max() <= 1e-14


def test_reference_run_reports(standard_run):
    _, result = standard_run
    assert result.complete
    assert len(result.states) == len(result.reports) + 1
    for rep in result.reports:
        assert rep.converged
        assert rep.iterations <= 15
        assert rep.wall_time >= 0.0


def test_factorization_cached_per_dt(mesh4):
    stepper = Stepper(mesh4, PRM)
    f1 = stepper._factorization(0.1)
    assert stepper._factorization(0.1) is f1
    assert stepper._factorization(0.05) is not f1
