"""Energies, entropy flow and conservation diagnostics.

The kinetic density is rho K = (1/2) rho (v.v + J_ij w_i w_j + chi vdot^2)
and the free energy rho psi is the full constitutive quadratic form

    rho psi = 1/2 C E E + 1/2 Gam_ijkl Psi_ji Psi_lk + 1/2 a varphi^2
            + 1/2 D dvarphi dvarphi - 1/2 c theta^2 + 1/2 B q q
            + Gc E Psi + H2 E varphi + H3 E dvarphi + A E theta
            + P2 Psi varphi + P3 Psi dvarphi + Gth Psi theta
            + a_i varphi dvarphi_i + b varphi theta + gamma_i dvarphi_i theta

evaluated term by term as displayed (the tests cross-check it against the
half-pairing 2 rho psi = T:E + M_ij Psi_ji - g varphi + h.dvarphi
- rho eta theta + B q q through the constitutive route).  All quadrature is
trapezoidal, matching the second-order scheme.
"""

from dataclasses import dataclass
import numpy as np

from .constitutive import strain_from_gradients, wryness_from_gradients
from .errors import DegenerateCase
from .field import ddx, d2dx

DRIFT_FLOOR = 1e-14


def _kinematics(arr, h):
    """E, Psi, dvarphi at every node from a packed (n, 18) state slab."""
    du = ddx(arr[:, 0:3], h)
    dphi = ddx(arr[:, 6:9], h)
    dvarphi = ddx(arr[:, 12], h)
    E = strain_from_gradients(du, arr[:, 6:9])
    Psi = wryness_from_gradients(dphi)
    return E, Psi, dvarphi


def kinetic_energy(state, mc, grid):
    arr = state.data
    dens = 0.5 * mc.rho * (
        np.einsum("ni,ni->n", arr[:, 3:6], arr[:, 3:6])
        + np.einsum("ij,ni,nj->n", mc.J, arr[:, 9:12], arr[:, 9:12])
        + mc.chi * arr[:, 13] ** 2)
    return float(np.trapezoid(dens, dx=grid.h))


def free_energy_density(arr, mc, h, mechanical_only=False):
    E, Psi, dvarphi = _kinematics(arr, h)
    varphi, theta, q = arr[:, 12], arr[:, 14], arr[:, 15:18]
    gv = np.zeros((arr.shape[0], 3))
    gv[:, 0] = dvarphi
    dens = (0.5 * np.einsum("ijkl,nij,nkl->n", mc.C, E, E)
            + 0.5 * np.einsum("ijkl,nji,nlk->n", mc.Gam, Psi, Psi)
            + 0.5 * mc.a_scalar * varphi ** 2
            + 0.5 * np.einsum("ij,ni,nj->n", mc.D, gv, gv)
            + np.einsum("ijkl,nij,nlk->n", mc.Gc, E, Psi)
            + np.einsum("ij,nij->n", mc.H2, E) * varphi
            + np.einsum("ijk,nij,nk->n", mc.H3, E, gv)
            + np.einsum("ij,nji->n", mc.P2, Psi) * varphi
            + np.einsum("ijk,nji,nk->n", mc.P3, Psi, gv)
            + varphi * (gv @ mc.a_vec))
    dens += theta * (np.einsum("ij,nij->n", mc.A, E)
                     + np.einsum("ij,nji->n", mc.Gth, Psi)
                     + mc.b * varphi + gv @ mc.gamma)
    if not mechanical_only:
        dens += (-0.5 * mc.c * theta ** 2
                 + 0.5 * np.einsum("ij,ni,nj->n", mc.B, q, q))
    return dens


def free_energy(state, mc, grid):
    return float(np.trapezoid(free_energy_density(state.data, mc, grid.h),
                              dx=grid.h))


def entropy_flow_accumulate(history):
    """s_i(t_m) as the trapezoidal time integral of q_i/theta0 over the
    recorded samples (History.s carries the finer per-step accumulation)."""
    q = history.states[:, :, 15:18]
    theta0 = history.scenario.material.theta0
    s = np.zeros_like(q)
    dts = np.diff(history.times)
    np.cumsum(dts[:, None, None] * (q[1:] + q[:-1]) / (2.0 * theta0),
              axis=0, out=s[1:])
    return s


@dataclass
class EnergyReport:
    times: np.ndarray
    kinetic: np.ndarray
    free: np.ndarray
    mechanical_total: np.ndarray
    t_on: float
    reference: float
    drift: float


def energy_report(history):
    from .field import FieldState
    scn = history.scenario
    mc, grid, h = scn.material, scn.grid, scn.grid.h
    m = history.n_samples
    kin = np.empty(m)
    free = np.empty(m)
    mech = np.empty(m)
    for i in range(m):
        arr = history.states[i]
        kin[i] = kinetic_energy(FieldState(grid.n_nodes, history.times[i], arr),
                                mc, grid)
        free[i] = float(np.trapezoid(free_energy_density(arr, mc, h), dx=h))
        mech[i] = kin[i] + float(np.trapezoid(
            free_energy_density(arr, mc, h, mechanical_only=True), dx=h))
    t_on = scn.quiet_after()
    after = history.times >= t_on - 1e-12
    if not after.any():
        raise DegenerateCase("no samples after the source window", t_on=t_on)
    ref_idx = int(np.argmax(after))
    ref = mech[ref_idx]
    if abs(ref) < DRIFT_FLOOR:
        raise DegenerateCase(
            f"post-source mechanical energy {ref:.3e} is below {DRIFT_FLOOR}; "
            "nothing to conserve", reference=ref)
    drift = float(np.abs(mech[ref_idx:] - ref).max() / ref)
    return EnergyReport(times=history.times.copy(), kinetic=kin, free=free,
                        mechanical_total=mech, t_on=history.times[ref_idx],
                        reference=ref, drift=drift)


def mechanical_energy_drift(history, mc=None):
    """max_m |E(t_m) - E(t_on)| / E(t_on) over t_m >= t_on, where E is the
    kinetic plus mechanical free energy (no -c theta^2 / 2, no B q q / 2).
    Meaningful for decoupled adiabatic scenarios (A = Gth = 0, b = 0,
    gamma = 0, r = 0, zero boundary data)."""
    return energy_report(history).drift


def _dot_series(series, times):
    """Second-order central time differences; first and last samples carry
    one-sided values that callers should exclude from quadrature windows."""
    out = np.empty_like(series)
    dt = times[1] - times[0]
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    out[0] = (series[1] - series[0]) / dt
    out[-1] = (series[-1] - series[-2]) / dt
    return out


def entropy_balance_residual(history):
    """Normalized L2 residual of the entropy-flow balance

        sdot_{i,i} + A_ij Edot_ij + Gth_ij Psidot_ji + b varphidot
        + gamma_i varphidot_,i - c thetadot + (rho/theta0) r = 0

    with sdot from time-differencing the accumulated s, rates of E and Psi
    taken directly from the recorded velocity fields, and thetadot from
    time-differencing theta.  Interior samples and nodes only."""
    scn = history.scenario
    mc, h = scn.material, scn.grid.h
    from .sources import SourceEvaluator
    src = SourceEvaluator(scn.sources, scn.grid.x)

    sdot = _dot_series(history.s, history.times)
    thetadot = _dot_series(history.states[:, :, 14], history.times)
    m = history.n_samples
    res, scale = [], []
    for i in range(1, m - 1):
        arr = history.states[i]
        div_s = ddx(sdot[i, :, 0], h)
        dv = ddx(arr[:, 3:6], h)
        domega = ddx(arr[:, 9:12], h)
        Edot = strain_from_gradients(dv, arr[:, 9:12])
        terms = np.stack([
            div_s,
            np.einsum("ij,nij->n", mc.A, Edot),
            domega @ mc.Gth[0, :],
            mc.b * arr[:, 13],
            mc.gamma[0] * ddx(arr[:, 13], h),
            -mc.c * thetadot[i],
            (mc.rho / mc.theta0) * src.scalar("r", history.times[i]),
        ])
        res.append(terms.sum(axis=0)[1:-1])
        scale.append(np.abs(terms[:, 1:-1]).max(axis=0))
    res = np.concatenate(res)
    scale = np.concatenate(scale)
    denom = float(np.sqrt(np.mean(scale ** 2))) + 1e-30
    return float(np.sqrt(np.mean(res ** 2))) / denom


def temperature_equation_residual(history):
    """Normalized L2 residual of the hyperbolic temperature equation

        K_ij theta_,ji + (1 + tau d/dt)(rho r - theta0 rho etadot) = 0

    at interior nodes and samples, with rho eta reconstructed through the
    constitutive law and differenced in time."""
    scn = history.scenario
    mc, h = scn.material, scn.grid.h
    from .constitutive import evaluate_constitutive
    from .sources import SourceEvaluator
    src = SourceEvaluator(scn.sources, scn.grid.x)

    m, n = history.n_samples, scn.grid.n_nodes
    rho_eta = np.empty((m, n))
    for i in range(m):
        arr = history.states[i]
        E, Psi, dvarphi = _kinematics(arr, h)
        gv = np.zeros((n, 3))
        gv[:, 0] = dvarphi
        _, _, _, _, rho_eta[i] = evaluate_constitutive(
            mc, E, Psi, arr[:, 12], gv, arr[:, 14])
    r_series = src.scalar_series("r", history.times)
    base = mc.rho * r_series - mc.theta0 * _dot_series(rho_eta, history.times)
    full = base + mc.tau * _dot_series(base, history.times)
    res, scale = [], []
    for i in range(2, m - 2):
        # only the 11 entry of theta_,ji survives in the 1-D reduction
        conduction = mc.K[0, 0] * d2dx(history.states[i, :, 14], h)
        resid = conduction + full[i]
        res.append(resid[2:-2])
        scale.append(np.maximum(np.abs(conduction[2:-2]),
                                np.abs(full[i, 2:-2])))
    res = np.concatenate(res)
    scale = np.concatenate(scale)
    denom = float(np.sqrt(np.mean(scale ** 2))) + 1e-30
    return float(np.sqrt(np.mean(res ** 2))) / denom
