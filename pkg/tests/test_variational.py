import dataclasses

import numpy as np
import pytest

from helpers import clamped_bc, small_scenario
from mptherm.dynamics import run_simulation
from mptherm.errors import ConstraintViolation, RangeError, SizeMismatch
from mptherm.material import isotropic_preset, random_admissible_material
from mptherm.sources import SourceSet
from mptherm.variational import (action_mechanical, action_thermal,
                                 biot_delta_H, cattaneo_bracket_residual,
                                 euler_lagrange_residual_mech,
                                 euler_lagrange_residual_thermal,
                                 evaluate_biot_functionals, random_variation,
                                 variational_report)

TAU = 0.05


@pytest.fixture(scope="module")
def small_hist():
    mc = random_admissible_material(seed=6, coupling_scale=0.1, tau=TAU)
    return run_simulation(small_scenario(mc=mc, n=21, t_end=0.2, dt=5e-4))


def test_random_variation_is_admissible(small_hist):
    var = random_variation(small_hist, seed=3)
    m, n = small_hist.n_samples, small_hist.grid.n_nodes
    assert var.du.shape == (m, n, 3)
    assert var.dtheta.shape == (m, n)
    # vanishes at the time-window ends (sin(k pi) rounds to ~1e-16, not 0)
    assert np.abs(var.du[0]).max() == 0.0
    assert np.abs(var.du[-1]).max() <= 1e-15
    assert np.abs(var.dtheta[:, 0]).max() == 0.0
    assert np.abs(var.dtheta[:, -1]).max() == 0.0
    again = random_variation(small_hist, seed=3)
    assert np.array_equal(var.du, again.du)
    assert not np.array_equal(var.du, random_variation(small_hist, seed=4).du)


def test_inadmissible_variation_rejected(small_hist):
    var = random_variation(small_hist, seed=0)
    bad = var.scaled(1.0)
    bad.du[:, 0, :] = 1.0  # clamped end
    with pytest.raises(ConstraintViolation):
        euler_lagrange_residual_mech(small_hist, variation=bad)
    short = dataclasses.replace(var, dtheta=var.dtheta[:, :-1])
    with pytest.raises(SizeMismatch):
        euler_lagrange_residual_thermal(small_hist, variation=short)


def test_zero_variation_gives_zero_residual(small_hist):
    zero = random_variation(small_hist, seed=1).scaled(0.0)
    assert euler_lagrange_residual_mech(small_hist, variation=zero) == 0.0
    assert euler_lagrange_residual_thermal(small_hist, variation=zero) == 0.0
    assert biot_delta_H(small_hist, variation=zero) == 0.0


def test_raw_residual_is_linear_in_the_variation(small_hist):
    var = random_variation(small_hist, seed=2)
    for fn in (euler_lagrange_residual_mech, euler_lagrange_residual_thermal):
        raw1 = fn(small_hist, variation=var, normalized=False)
        raw3 = fn(small_hist, variation=var.scaled(3.0), normalized=False)
        assert raw3 == pytest.approx(3.0 * raw1, rel=1e-12, abs=1e-15)
    vol1 = biot_delta_H(small_hist, variation=var, normalized=False)
    vol3 = biot_delta_H(small_hist, variation=var.scaled(3.0),
                        normalized=False)
    assert np.abs(vol3 - 3.0 * vol1).max() <= 1e-12 * max(
        1.0, np.abs(vol1).max())


def test_normalized_defect_is_scale_invariant(small_hist):
    var = random_variation(small_hist, seed=5)
    d1 = euler_lagrange_residual_mech(small_hist, variation=var)
    d2 = euler_lagrange_residual_mech(small_hist, variation=var.scaled(100.0))
    assert d2 == pytest.approx(d1, rel=1e-10)


def test_residuals_shrink_under_refinement(small_hist):
    fine = run_simulation(small_hist.scenario.refined(2))
    for fn in (euler_lagrange_residual_mech, euler_lagrange_residual_thermal,
               biot_delta_H):
        coarse_d = fn(small_hist, variation=random_variation(small_hist, 9))
        fine_d = fn(fine, variation=random_variation(fine, 9))
        assert fine_d < coarse_d


def test_variational_report_smoke(small_hist):
    rep = variational_report(small_hist, seed=7)
    assert rep.seed == 7
    assert rep.resolution_h == pytest.approx(small_hist.grid.h)
    assert rep.resolution_dt == pytest.approx(small_hist.scenario.dt)
    assert 0.0 < rep.EL_mech < 1.0
    assert 0.0 < rep.EL_thermal < 1.0
    assert 0.0 < rep.biot_deltaH < 1.0
    assert rep.norm_variation > 0.0 and rep.norm_history > 0.0


def test_cattaneo_bracket_small_on_converged_run(small_hist):
    res = cattaneo_bracket_residual(small_hist)
    fine = cattaneo_bracket_residual(
        run_simulation(small_hist.scenario.refined(2)))
    assert res < 0.05
    assert fine < res


def test_actions_vanish_on_null_data():
    scn = small_scenario(mc=isotropic_preset(tau=TAU), sources=SourceSet(),
                         t_end=0.1)
    hist = run_simulation(scn)
    assert action_mechanical(hist) == 0.0
    assert action_thermal(hist) == 0.0
    V, G, F, D = evaluate_biot_functionals(hist)
    assert (V, G, F, D) == (0.0, 0.0, 0.0, 0.0)


def test_action_window_validation(small_hist):
    with pytest.raises(RangeError):
        action_mechanical(small_hist, t1=0.15, t2=0.05)
    with pytest.raises(RangeError):
        action_thermal(small_hist, t1=0.0, t2=9.0)


def test_thermal_action_linear_in_relaxation_time(small_hist):
    # (1 + tau p) enters affinely: evaluating the same history under
    # materials differing only in tau must shift the value linearly, and
    # tau = 0 is the unrelaxed functional
    scn = small_hist.scenario
    vals = []
    for tau in (0.0, 0.1, 0.2):
        mc = dataclasses.replace(scn.material, tau=tau)
        vals.append(action_thermal(small_hist,
                                   scenario=dataclasses.replace(scn, material=mc)))
    assert vals[2] - vals[1] == pytest.approx(vals[1] - vals[0], rel=1e-9)
    assert vals[1] != pytest.approx(vals[0], rel=1e-3)


def test_biot_functionals_on_mechanics_only_run():
    # no thermal or porosity-thermal coupling and no heat supply: theta and
    # q stay zero, so the dissipation functional and the entropy-flow
    # surface term must vanish identically
    from helpers import onoff_pulse
    mc = isotropic_preset(tau=TAU)
    srcs = SourceSet(f=onoff_pulse(1.0, 0.5, 0.15, 0.02, 0.08, 0.12, 0.2,
                                   component=0))
    hist = run_simulation(small_scenario(mc=mc, n=21, sources=srcs,
                                         t_end=0.2, dt=5e-4))
    assert np.abs(hist.field("theta")).max() == 0.0
    t = float(hist.times[-1])
    V, G, F, D = evaluate_biot_functionals(hist, t=t)
    assert D == 0.0
    assert G == 0.0  # all-Dirichlet ends with zero data
    from mptherm.energetics import free_energy_density
    arr = hist.states[hist.index_at(t)]
    ref = float(np.trapezoid(free_energy_density(arr, mc, hist.grid.h),
                             dx=hist.grid.h))
    assert V == pytest.approx(ref, rel=1e-12, abs=1e-15)
    assert np.isfinite(F)


def test_biot_delta_H_matches_report(small_hist):
    var = random_variation(small_hist, seed=7)
    rep = variational_report(small_hist, seed=7)
    assert biot_delta_H(small_hist, variation=var) == pytest.approx(
        rep.biot_deltaH, rel=1e-12)
