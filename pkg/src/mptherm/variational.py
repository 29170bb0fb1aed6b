"""Stationarity checks for the two variational principles.

The first principle is of Hamilton type.  Over a time window [t1, t2] the
mechanical action

    S_mech = int dt [ int_V ( rho K - rho psi - (rho eta) T + B q q / 2
                              + rho (f.u + l.phi + ell varphi) ) dV
                      + sum_{traction ends} t* . u
                      + sum_{couple ends}   m* . phi
                      + sum_{flux ends}     h* varphi ]        (T = theta + theta0)

is stationary at a solution for variations (du, dphi, dvarphi) that vanish at
t1, t2 and on the Dirichlet ends, with the entropy held fixed.  Its companion
thermal statement uses

    S_th = int dt [ int_V K11 (T,x)^2 / 2 dV
                    - (1 + tau p) ( int_V ((rho eta) Tdot - rho r) T dV
                                    + sum_{heat-flux ends} q* T ) ]

with p = d/dt applied literally to the time series.  The testable content of
both is the reduced form of the first variation: a volume integral of
(balance residual) x (variation), evaluated here directly,

    R_mech = int dt int_V [ (T_j i,j + rho f_i - rho udd_i) du_i
                          + (M_ji,j + eps_irs T_rs + rho l_i - rho J_ij phidd_j) dphi_i
                          + (h_i,i + g + rho ell - rho chi varphidd) dvarphi ] dV,
    R_th   = int dt int_V [ K11 theta,xx
                          + (1 + tau d/dt)(rho r - theta0 d(rho eta)/dt) ] dtheta dV,

so at a converged numerical solution both shrink at the order of the scheme.

The second principle is of Biot type and trades the temperature rate for the
entropy flow s (theta0 sdot = q).  Its first variation is the single volume
integral

    dH = int_V [ (rho udd - rho f - T_ji,j) du
               + (rho J phidd - rho l - M_ji,j - eps:T) dphi
               + (rho chi varphidd - rho ell - g - h_i,i) dvarphi
               + (theta0 (1 + tau d/dt) Ktil_ij sdot_i - theta,j) ds_j ] dV

whose last bracket is the relaxing flux law in disguise.  The four underlying
functionals V, G, F, D are also evaluated for inspection.

Stationarity is never checked by numerically differentiating the functionals:
the operational convention that p is held constant during the variation makes
that route inequivalent, so the displayed variations above are the ground
truth.  Normalization of every defect by (|variation| |history| + eps) keeps
tolerances scale free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import (NX, pack_inputs, strain_from_gradients,
                           wryness_from_gradients)
from .dynamics import History, SimContext
from .energetics import _dot_series, free_energy_density
from .errors import ConstraintViolation, RangeError, SizeMismatch
from .field import Grid1D
from .material import invert_conductivity

EPS_NORM = 1e-30
CONSTRAINT_TOL = 1e-12

# which boundary kind pins each variation component to zero at an end
_CLAMP = {"du": ("u", "dirichlet"), "dphi": ("phi", "dirichlet"),
          "dvarphi": ("varphi", "dirichlet"), "dtheta": ("theta", "dirichlet"),
          "ds": ("theta", "heatflux")}


@dataclass
class VariationField:
    """Admissible variation sampled on a history's nodes and sample times.

    du, dphi, ds are (m, n, 3); dvarphi, dtheta are (m, n).  Every component
    vanishes at the first and last sample; du vanishes at displacement
    Dirichlet ends, dphi at rotation Dirichlet ends, dvarphi at fraction
    Dirichlet ends, dtheta at temperature Dirichlet ends, and ds at ends
    where the heat flux is the prescribed datum.
    """

    du: np.ndarray
    dphi: np.ndarray
    dvarphi: np.ndarray
    dtheta: np.ndarray
    ds: np.ndarray

    def scaled(self, a):
        a = float(a)
        return VariationField(a * self.du, a * self.dphi, a * self.dvarphi,
                              a * self.dtheta, a * self.ds)

    def norm(self):
        num = (np.sum(self.du ** 2) + np.sum(self.dphi ** 2)
               + np.sum(self.dvarphi ** 2) + np.sum(self.dtheta ** 2)
               + np.sum(self.ds ** 2))
        cnt = (self.du.size + self.dphi.size + self.dvarphi.size
               + self.dtheta.size + self.ds.size)
        return float(np.sqrt(num / cnt))


@dataclass
class VariationalReport:
    EL_mech: float
    EL_thermal: float
    biot_deltaH: float
    norm_variation: float
    norm_history: float
    resolution_h: float
    resolution_dt: float
    seed: int


def _space_profile(rng, xi, clamp_left, clamp_right):
    c = rng.uniform(-1.0, 1.0, size=4)
    prof = c[0] + c[1] * xi + c[2] * xi ** 2 + c[3] * xi ** 3
    if clamp_left:
        prof = prof * xi
    if clamp_right:
        prof = prof * (1.0 - xi)
    return prof


def _time_bump(rng, sigma):
    c = rng.uniform(-1.0, 1.0, size=3)
    out = np.zeros_like(sigma)
    for k in range(3):
        out += c[k] * np.sin((k + 1) * np.pi * sigma)
    return out


def random_variation(history, seed=0):
    """Seeded admissible variation: per component a cubic in x, clamped at
    its constrained ends, times a sine bump in t that vanishes at both
    window ends."""
    scn = history.scenario
    rng = np.random.default_rng(seed)
    xi = scn.grid.x / scn.grid.length
    t = history.times
    sigma = (t - t[0]) / (t[-1] - t[0])

    def component(name):
        pair, kind = _CLAMP[name]
        left = getattr(scn.bspec.left, pair) == kind
        right = getattr(scn.bspec.right, pair) == kind
        return (_time_bump(rng, sigma)[:, None]
                * _space_profile(rng, xi, left, right)[None, :])

    du = np.stack([component("du") for _ in range(3)], axis=-1)
    dphi = np.stack([component("dphi") for _ in range(3)], axis=-1)
    dvarphi = component("dvarphi")
    dtheta = component("dtheta")
    ds = np.stack([component("ds") for _ in range(3)], axis=-1)
    return VariationField(du, dphi, dvarphi, dtheta, ds)


def _require_admissible(history, variation):
    m, n = history.n_samples, history.grid.n_nodes
    fields = {"du": (variation.du, (m, n, 3)), "dphi": (variation.dphi, (m, n, 3)),
              "dvarphi": (variation.dvarphi, (m, n)),
              "dtheta": (variation.dtheta, (m, n)), "ds": (variation.ds, (m, n, 3))}
    tol = CONSTRAINT_TOL * max(1.0, variation.norm())
    bspec = history.scenario.bspec
    for name, (arr, shape) in fields.items():
        if arr.shape != shape:
            raise SizeMismatch(
                f"variation {name} has shape {arr.shape}, expected {shape}")
        if max(np.max(np.abs(arr[0])), np.max(np.abs(arr[-1]))) > tol:
            raise ConstraintViolation(
                f"variation {name} does not vanish at the window ends")
        pair, kind = _CLAMP[name]
        for which, node in (("left", 0), ("right", -1)):
            if getattr(bspec.side(which), pair) == kind:
                if np.max(np.abs(arr[:, node])) > tol:
                    raise ConstraintViolation(
                        f"variation {name} does not vanish at the {which} end")


def history_norm(history):
    """RMS over every recorded channel; the history factor in defect
    normalization."""
    return float(np.sqrt(np.mean(history.states ** 2)))


def _ddx1(a, h):
    # ddx along axis 1 of an (m, n, ...) stack
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * h)
    out[:, 0] = (-3.0 * a[:, 0] + 4.0 * a[:, 1] - a[:, 2]) / (2.0 * h)
    out[:, -1] = (3.0 * a[:, -1] - 4.0 * a[:, -2] + a[:, -3]) / (2.0 * h)
    return out


def _d2dx1(a, h):
    out = np.empty_like(a)
    out[:, 1:-1] = (a[:, 2:] - 2.0 * a[:, 1:-1] + a[:, :-2]) / h ** 2
    out[:, 0] = (2.0 * a[:, 0] - 5.0 * a[:, 1] + 4.0 * a[:, 2] - a[:, 3]) / h ** 2
    out[:, -1] = (2.0 * a[:, -1] - 5.0 * a[:, -2] + 4.0 * a[:, -3] - a[:, -4]) / h ** 2
    return out


def _stress_series(ctx, states, times):
    """Constitutive fields on every sample: ghost-closed gradients per sample,
    one batched constitutive apply."""
    m, n = states.shape[0], states.shape[1]
    X = np.empty((m, n, NX))
    dth = np.empty((m, n))
    for k in range(m):
        arr, t = states[k], float(times[k])
        du, dphi, dvarphi, dtheta = ctx.gradients(arr, t)
        E = strain_from_gradients(du, arr[:, 6:9])
        Psi = wryness_from_gradients(dphi)
        gv = np.zeros((n, 3))
        gv[:, 0] = dvarphi
        X[k] = pack_inputs(E, Psi, arr[:, 12], gv, arr[:, 14])
        dth[k] = dtheta
    T, M, g, hvec, rho_eta = ctx.cop.apply(X.reshape(m * n, NX))
    return (T.reshape(m, n, 3, 3), M.reshape(m, n, 3, 3), g.reshape(m, n),
            hvec.reshape(m, n, 3), rho_eta.reshape(m, n), dth)


def _mech_brackets(history, scn):
    """The three momentum-balance residual fields on every sample, (m, n, 3),
    (m, n, 3), (m, n).  First/last samples carry one-sided accelerations."""
    ctx = SimContext(scn)
    mc, h = scn.material, scn.grid.h
    states, times = history.states, history.times
    T, M, g, hvec, rho_eta, dth = _stress_series(ctx, states, times)
    dT = _ddx1(T[:, :, 0, :], h)
    dM = _ddx1(M[:, :, 0, :], h)
    dhv = _ddx1(hvec[:, :, 0], h)
    epsT = np.stack([T[:, :, 1, 2] - T[:, :, 2, 1],
                     T[:, :, 2, 0] - T[:, :, 0, 2],
                     T[:, :, 0, 1] - T[:, :, 1, 0]], axis=-1)
    udd = _dot_series(states[:, :, 3:6], times)
    phidd = _dot_series(states[:, :, 9:12], times)
    varphidd = _dot_series(states[:, :, 13], times)
    f = ctx.src.vector_series("f", times)
    lcp = ctx.src.vector_series("l", times)
    ell = ctx.src.scalar_series("ell", times)
    B1 = dT + mc.rho * (f - udd)
    B2 = (dM + epsT + mc.rho * lcp
          - mc.rho * np.einsum("ij,mnj->mni", mc.J, phidd))
    B3 = dhv + g + mc.rho * (ell - mc.chi * varphidd)
    return B1, B2, B3


def euler_lagrange_residual_mech(history, scenario=None, variation=None,
                                 normalized=True):
    """Space-time integral of the momentum balance residuals against
    (du, dphi, dvarphi); near zero at a converged solution."""
    scn = scenario if scenario is not None else history.scenario
    _require_admissible(history, variation)
    if history.n_samples < 4:
        raise RangeError("history too short for acceleration reconstruction")
    B1, B2, B3 = _mech_brackets(history, scn)
    dens = (np.einsum("mni,mni->mn", B1, variation.du)
            + np.einsum("mni,mni->mn", B2, variation.dphi)
            + B3 * variation.dvarphi)
    vol = np.trapezoid(dens, dx=scn.grid.h, axis=1)
    raw = float(np.trapezoid(vol[1:-1], dx=history.sample_dt))
    if not normalized:
        return raw
    return abs(raw) / (variation.norm() * history_norm(history) + EPS_NORM)


def _thermal_bracket(history, scn):
    """K11 theta,xx + (1 + tau d/dt)(rho r - theta0 d(rho eta)/dt) on every
    sample; the outer two samples at each end carry one-sided rates."""
    ctx = SimContext(scn)
    mc, h = scn.material, scn.grid.h
    states, times = history.states, history.times
    _, _, _, _, rho_eta, _ = _stress_series(ctx, states, times)
    rr = ctx.src.scalar_series("r", times)
    base = mc.rho * rr - mc.theta0 * _dot_series(rho_eta, times)
    full = base + mc.tau * _dot_series(base, times)
    return mc.K[0, 0] * _d2dx1(states[:, :, 14], h) + full


def euler_lagrange_residual_thermal(history, scenario=None, variation=None,
                                    normalized=True):
    scn = scenario if scenario is not None else history.scenario
    _require_admissible(history, variation)
    if history.n_samples < 6:
        raise RangeError("history too short for the relaxed entropy rate")
    bracket = _thermal_bracket(history, scn)
    vol = np.trapezoid(bracket * variation.dtheta, dx=scn.grid.h, axis=1)
    raw = float(np.trapezoid(vol[2:-2], dx=history.sample_dt))
    if not normalized:
        return raw
    return abs(raw) / (variation.norm() * history_norm(history) + EPS_NORM)


def _flux_bracket(history, scn):
    """theta0 (1 + tau d/dt) Ktil_ij sdot_i - theta,j per sample and node,
    with theta0 sdot = q taken from the recorded flux."""
    mc, h = scn.material, scn.grid.h
    states, times = history.states, history.times
    Ktil = invert_conductivity(mc.K)
    sdot = states[:, :, 15:18] / mc.theta0
    sddot = _dot_series(states[:, :, 15:18], times) / mc.theta0
    lhs = mc.theta0 * np.einsum("ij,mni->mnj", Ktil, sdot + mc.tau * sddot)
    gradth = np.zeros_like(lhs)
    gradth[:, :, 0] = _ddx1(states[:, :, 14], h)
    return lhs - gradth


def biot_delta_H(history, scenario=None, variation=None, normalized=True):
    """Volume integral of the four-bracket first variation at each sample,
    reduced to a max-over-time defect."""
    scn = scenario if scenario is not None else history.scenario
    _require_admissible(history, variation)
    if history.n_samples < 4:
        raise RangeError("history too short for acceleration reconstruction")
    B1, B2, B3 = _mech_brackets(history, scn)
    B4 = _flux_bracket(history, scn)
    dens = (-np.einsum("mni,mni->mn", B1, variation.du)
            - np.einsum("mni,mni->mn", B2, variation.dphi)
            - B3 * variation.dvarphi
            + np.einsum("mni,mni->mn", B4, variation.ds))
    vol = np.trapezoid(dens, dx=scn.grid.h, axis=1)
    if not normalized:
        return vol[1:-1]
    scale = variation.norm() * history_norm(history) + EPS_NORM
    return float(np.max(np.abs(vol[1:-1])) / scale)


def cattaneo_bracket_residual(history, scenario=None):
    """Standalone check of the last bracket: RMS over interior samples of
    theta0 (1 + tau d/dt) Ktil sdot - grad theta, normalized by the field
    scale.  Zero to differencing error when the recorded (q, theta) satisfy
    the relaxing flux law."""
    scn = scenario if scenario is not None else history.scenario
    if history.n_samples < 4:
        raise RangeError("history too short for flux rate reconstruction")
    B4 = _flux_bracket(history, scn)[1:-1]
    mc, h = scn.material, scn.grid.h
    gradth = _ddx1(history.states[1:-1, :, 14], h)
    Ktil = invert_conductivity(mc.K)
    lhs = np.einsum("ij,mni->mnj", Ktil, history.states[1:-1, :, 15:18])
    scale = max(np.sqrt(np.mean(gradth ** 2)), np.sqrt(np.mean(lhs ** 2)))
    return float(np.sqrt(np.mean(B4 ** 2)) / (scale + EPS_NORM))


def variational_report(history, scenario=None, seed=0):
    scn = scenario if scenario is not None else history.scenario
    variation = random_variation(history, seed=seed)
    return VariationalReport(
        EL_mech=euler_lagrange_residual_mech(history, scn, variation),
        EL_thermal=euler_lagrange_residual_thermal(history, scn, variation),
        biot_deltaH=biot_delta_H(history, scn, variation),
        norm_variation=variation.norm(),
        norm_history=history_norm(history),
        resolution_h=scn.grid.h,
        resolution_dt=scn.dt,
        seed=seed)


def _surface_sum(bspec, arrs, t, terms):
    """Sum of datum x field over the ends named by (pair, kind) terms."""
    out = 0.0
    for which, node in (("left", 0), ("right", -1)):
        side = bspec.side(which)
        for pair, kind, value in terms:
            if getattr(side, pair) != kind:
                continue
            out += value(side, node, which)
    return out


def action_mechanical(history, scenario=None, t1=None, t2=None):
    """Time integral of the mechanical Lagrangian plus the traction, couple
    and fraction-flux boundary work over [t1, t2]."""
    scn = scenario if scenario is not None else history.scenario
    mc, grid = scn.material, scn.grid
    t1 = float(history.times[0]) if t1 is None else float(t1)
    t2 = float(history.times[-1]) if t2 is None else float(t2)
    i1, i2 = history.index_at(t1), history.index_at(t2)
    if i2 <= i1:
        raise RangeError(f"empty action window [{t1}, {t2}]")
    states = history.states[i1:i2 + 1]
    times = history.times[i1:i2 + 1]
    ctx = SimContext(scn)
    _, _, _, _, rho_eta, _ = _stress_series(ctx, states, times)
    f = ctx.src.vector_series("f", times)
    lcp = ctx.src.vector_series("l", times)
    ell = ctx.src.scalar_series("ell", times)

    m = states.shape[0]
    series = np.empty(m)
    for k in range(m):
        arr, t = states[k], float(times[k])
        v, om, vp = arr[:, 3:6], arr[:, 9:12], arr[:, 13]
        rho_kin = 0.5 * mc.rho * (np.einsum("ni,ni->n", v, v)
                                  + np.einsum("ij,ni,nj->n", mc.J, om, om)
                                  + mc.chi * vp ** 2)
        rho_psi = free_energy_density(arr, mc, grid.h)
        q = arr[:, 15:18]
        Bqq = np.einsum("ij,ni,nj->n", mc.B, q, q)
        T_tot = arr[:, 14] + mc.theta0
        load = (np.einsum("ni,ni->n", f[k], arr[:, 0:3])
                + np.einsum("ni,ni->n", lcp[k], arr[:, 6:9])
                + ell[k] * arr[:, 12])
        dens = rho_kin - rho_psi - rho_eta[k] * T_tot + 0.5 * Bqq + mc.rho * load
        series[k] = np.trapezoid(dens, dx=grid.h)

        side_terms = [
            ("u", "traction", lambda side, node, w:
                sum(float(sig.value(t)) * arr[node, 0 + j]
                    for j, sig in enumerate(side.u_data))),
            ("phi", "couple", lambda side, node, w:
                sum(float(sig.value(t)) * arr[node, 6 + j]
                    for j, sig in enumerate(side.phi_data))),
            ("varphi", "flux", lambda side, node, w:
                float(side.varphi_data.value(t)) * arr[node, 12]),
        ]
        series[k] += _surface_sum(scn.bspec, arr, t, side_terms)
    return float(np.trapezoid(series, dx=history.sample_dt))


def action_thermal(history, scenario=None, t1=None, t2=None):
    """Time integral of the gradient functional minus (1 + tau d/dt) of the
    entropy-power term, with the heat-flux boundary work included."""
    scn = scenario if scenario is not None else history.scenario
    mc, grid = scn.material, scn.grid
    t1 = float(history.times[0]) if t1 is None else float(t1)
    t2 = float(history.times[-1]) if t2 is None else float(t2)
    i1, i2 = history.index_at(t1), history.index_at(t2)
    if i2 <= i1:
        raise RangeError(f"empty action window [{t1}, {t2}]")
    states = history.states[i1:i2 + 1]
    times = history.times[i1:i2 + 1]
    ctx = SimContext(scn)
    _, _, _, _, rho_eta, _ = _stress_series(ctx, states, times)
    rr = ctx.src.scalar_series("r", times)
    theta = states[:, :, 14]
    T_tot = theta + mc.theta0
    thdot = _dot_series(theta, times)

    grad_term = np.trapezoid(0.5 * mc.K[0, 0] * _ddx1(theta, grid.h) ** 2,
                             dx=grid.h, axis=1)
    power = np.trapezoid((rho_eta * thdot - mc.rho * rr) * T_tot,
                         dx=grid.h, axis=1)
    for k in range(states.shape[0]):
        t = float(times[k])
        for which, node in (("left", 0), ("right", -1)):
            side = scn.bspec.side(which)
            if side.theta == "heatflux":
                power[k] += float(side.theta_data.value(t)) * T_tot[k, node]
    relaxed = power + mc.tau * _dot_series(power, times)
    return float(np.trapezoid(grad_term - relaxed, dx=history.sample_dt))


def evaluate_biot_functionals(history, scenario=None, t=None):
    """(V, G, F, D) at a recorded sample time; the rate-bearing integrands
    use differenced series, one-sided at the window edges."""
    scn = scenario if scenario is not None else history.scenario
    mc, grid = scn.material, scn.grid
    t = float(history.times[-1]) if t is None else float(t)
    k = history.index_at(t)
    arr = history.states[k]
    times = history.times
    ctx = SimContext(scn)

    du, dphi, dvarphi, dtheta = ctx.gradients(arr, t)
    E = strain_from_gradients(du, arr[:, 6:9])
    Psi = wryness_from_gradients(dphi)
    gv = np.zeros((grid.n_nodes, 3))
    gv[:, 0] = dvarphi
    X = pack_inputs(E, Psi, arr[:, 12], gv, arr[:, 14])
    _, _, _, _, rho_eta = ctx.cop.apply(X)

    theta, q = arr[:, 14], arr[:, 15:18]
    rho_psi = free_energy_density(arr, mc, grid.h)
    Bqq = np.einsum("ij,ni,nj->n", mc.B, q, q)
    V = float(np.trapezoid(rho_psi + rho_eta * theta - 0.5 * Bqq, dx=grid.h))

    G = 0.0
    for which, node in (("left", 0), ("right", -1)):
        side = scn.bspec.side(which)
        n1 = Grid1D.NORMALS[which]
        if side.u == "traction":
            G -= sum(float(sig.value(t)) * arr[node, 0 + j]
                     for j, sig in enumerate(side.u_data))
        if side.phi == "couple":
            G -= sum(float(sig.value(t)) * arr[node, 6 + j]
                     for j, sig in enumerate(side.phi_data))
        if side.varphi == "flux":
            G -= float(side.varphi_data.value(t)) * arr[node, 12]
        if side.theta == "dirichlet":
            G -= float(side.theta_data.value(t)) * n1 * history.s[k, node, 0]

    udd = _dot_series(history.states[:, :, 3:6], times)[k]
    phidd = _dot_series(history.states[:, :, 9:12], times)[k]
    varphidd = _dot_series(history.states[:, :, 13], times)[k]
    f = ctx.src.vector("f", t)
    lcp = ctx.src.vector("l", t)
    ell = ctx.src.scalar("ell", t)
    dens = (np.einsum("ni,ni->n", 0.5 * udd - f, arr[:, 0:3])
            + np.einsum("ni,ni->n", 0.5 * phidd @ mc.J.T - lcp, arr[:, 6:9])
            + (0.5 * mc.chi * varphidd - ell) * arr[:, 12])
    F = float(np.trapezoid(mc.rho * dens, dx=grid.h))

    Ktil = invert_conductivity(mc.K)
    sdot = q / mc.theta0
    sddot = _dot_series(history.states[:, :, 15:18], times)[k] / mc.theta0
    D = float(np.trapezoid(
        0.5 * mc.theta0 * np.einsum("ij,ni,nj->n", Ktil,
                                    sdot + mc.tau * sddot, history.s[k]),
        dx=grid.h))
    return V, G, F, D
