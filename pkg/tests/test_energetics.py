import numpy as np
import pytest

import oracles
from helpers import small_scenario
from mptherm.dynamics import run_simulation
from mptherm.energetics import (energy_report, entropy_balance_residual,
                                entropy_flow_accumulate, free_energy,
                                free_energy_density, kinetic_energy,
                                mechanical_energy_drift,
                                temperature_equation_residual)
from mptherm.errors import DegenerateCase
from mptherm.field import FieldState, Grid1D, ddx
from mptherm.material import isotropic_preset, random_admissible_material
from mptherm.sources import SourceSet


def test_kinetic_energy_hand_value():
    mc = isotropic_preset(rho=2.0, j0=0.5, chi=3.0)
    grid = Grid1D(9, 2.0)
    st = FieldState(grid)
    st.data[:, 3] = 1.0    # v_1
    st.data[:, 10] = 2.0   # omega_2
    st.data[:, 13] = 0.5   # varphidot
    dens = 0.5 * 2.0 * (1.0 + 0.5 * 4.0 + 3.0 * 0.25)
    assert kinetic_energy(st, mc, grid) == pytest.approx(dens * 2.0)


def test_free_energy_matches_half_pairing_identity():
    rng = np.random.default_rng(3)
    mc = random_admissible_material(seed=7, coupling_scale=0.25, tau=0.08)
    grid = Grid1D(21, 1.0)
    arr = 0.5 * rng.standard_normal((21, 18))
    dens = free_energy_density(arr, mc, grid.h)
    du = ddx(arr[:, 0:3], grid.h)
    dphi = ddx(arr[:, 6:9], grid.h)
    dvp = ddx(arr[:, 12], grid.h)
    worst = 0.0
    for node in range(21):
        E = oracles.strain_reference(du[node], arr[node, 6:9])
        Psi = oracles.wryness_reference(dphi[node])
        gv = np.array([dvp[node], 0.0, 0.0])
        ref = oracles.free_energy_reference(mc, E, Psi, arr[node, 12], gv,
                                            arr[node, 14], arr[node, 15:18])
        worst = max(worst, abs(dens[node] - ref) / max(1.0, abs(ref)))
    assert worst <= 1e-12


def test_mechanical_only_drops_thermal_terms():
    rng = np.random.default_rng(11)
    mc = random_admissible_material(seed=5, coupling_scale=0.2, tau=0.1)
    arr = rng.standard_normal((9, 18))
    h = 0.125
    full = free_energy_density(arr, mc, h)
    mech = free_energy_density(arr, mc, h, mechanical_only=True)
    theta, q = arr[:, 14], arr[:, 15:18]
    dropped = (-0.5 * mc.c * theta ** 2
               + 0.5 * np.einsum("ij,ni,nj->n", mc.B, q, q))
    assert full - mech == pytest.approx(dropped)


def test_free_energy_zero_state():
    mc = isotropic_preset()
    grid = Grid1D(9, 1.0)
    assert free_energy(FieldState(grid), mc, grid) == 0.0


def test_entropy_flow_matches_stepwise_accumulation():
    hist = run_simulation(small_scenario(t_end=0.2))
    s = entropy_flow_accumulate(hist)
    # record_every = 1: the recorded samples are exactly the step points
    scale = max(1.0, np.abs(hist.s).max())
    assert np.abs(s - hist.s).max() <= 1e-13 * scale


def test_energy_report_on_decoupled_run(energy_hist):
    rep = energy_report(energy_hist)
    scn = energy_hist.scenario
    assert rep.t_on >= scn.quiet_after() - 1e-12
    assert rep.reference > 0.0
    k = int(np.argmax(energy_hist.times >= rep.t_on))
    drift = np.abs(rep.mechanical_total[k:] - rep.reference).max() / rep.reference
    assert rep.drift == pytest.approx(drift)
    assert mechanical_energy_drift(energy_hist) == rep.drift


def test_energy_report_needs_a_signal():
    quiet = run_simulation(small_scenario(sources=SourceSet(), t_end=0.1))
    with pytest.raises(DegenerateCase):
        energy_report(quiet)


def test_balance_residuals_shrink_second_order():
    scn = small_scenario(t_end=0.2)
    coarse = run_simulation(scn)
    fine = run_simulation(scn.refined(2))
    r_temp = (temperature_equation_residual(coarse),
              temperature_equation_residual(fine))
    r_ent = (entropy_balance_residual(coarse),
             entropy_balance_residual(fine))
    assert r_temp[0] / r_temp[1] > 3.0
    assert r_ent[0] / r_ent[1] > 3.0
    assert r_temp[1] < r_temp[0] < 1.0
    assert r_ent[1] < r_ent[0] < 1e-2
