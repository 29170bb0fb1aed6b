"""Time marching: scenario container, semi-discrete RHS, RK4, front finder.

Semi-discretization: second-order stencils in x on a uniform grid, classical
RK4 in t.  The balance laws reduce along x1 to

    rho v'_i        = T_1i,1 + rho f_i
    rho J_ij omega'_j = M_1i,1 + eps_irs T_rs + rho l_i
    rho chi varphi'' = h_1,1 + g + rho ell
    c theta'        = (q_1,1 + rho r)/theta0 + A_ij E'_ij + Gth_1j omega_j,1
                      + b varphi' + gamma_1 varphi'_,1        (entropy eliminated)
    tau q'_i        = K_i1 theta,1 - q_i          (tau = 0: q algebraic)

Dirichlet data are written into the state at every stage time and their
analytic time derivatives into the rates, so prescribed endpoints integrate
exactly.  Flux-type data (traction, couple, equilibrated flux, heat flux) are
imposed through one ghost node per endpoint: its 8 values (u_g, phi_g,
varphi_g, theta_g) solve a linear system making the discrete boundary values
of T_1i n_1, M_1i n_1, h_1 n_1 and the Cattaneo-consistent K_11 theta,1 match
the data; Dirichlet-assigned slots fall back to quadratic extrapolation,
which reproduces the one-sided ddx stencil identically.
"""

from dataclasses import dataclass, replace
import numpy as np

from .boundary import BoundarySpec, apply_dirichlet, pin_heatflux
from .constitutive import (ConstitutiveOperator, algebraic_flux, pack_inputs,
                           strain_from_gradients, wryness_from_gradients)
from .errors import (DegenerateCase, GhostSolveSingular, NoFront,
                     NonfiniteField, RangeError)
from .field import NCOLS, FieldState, Grid1D, ddx
from .material import require_valid
from .sources import SourceEvaluator, SourceSet

BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class Scenario:
    """Complete run description.  ``initial_state`` (an (n, 18) array or a
    callable grid -> array) is a non-quiescent kick used only by internal
    convergence and relaxation tests; theorem checks always start from
    zero."""

    grid: Grid1D
    material: object
    sources: SourceSet
    bspec: BoundarySpec
    t_end: float
    dt: float
    record_every: int = 1
    name: str = ""
    initial_state: object = None

    def __post_init__(self):
        require_valid(self.material)
        self.bspec.validate_compatibility()
        if not self.dt > 0.0:
            raise RangeError(f"dt = {self.dt} must be positive")
        n_steps = self.t_end / self.dt
        if abs(n_steps - round(n_steps)) > 1e-9 * max(1.0, n_steps) or round(n_steps) < 1:
            raise RangeError(
                f"t_end = {self.t_end} is not a positive integer multiple of dt = {self.dt}")
        if self.record_every < 1 or round(n_steps) % self.record_every != 0:
            raise RangeError(
                f"record_every = {self.record_every} must be >= 1 and divide "
                f"the {round(n_steps)} steps")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def refined(self, factor=2):
        """Halve (h, dt) jointly: the sample spacing halves with them."""
        grid = Grid1D((self.grid.n_nodes - 1) * factor + 1, self.grid.length)
        return replace(self, grid=grid, dt=self.dt / factor)

    def extended(self, factor=2):
        """Halve dt and stretch t_end (transform-check refinement)."""
        return replace(self, dt=self.dt / factor, t_end=self.t_end * factor)

    def source_bound(self):
        return max(self.sources.amp_bound(), self.bspec.amp_bound())

    def quiet_after(self):
        return max(self.sources.latest_onoff(), self.bspec.latest_onoff())


_PAIR_ROWS = {"u": slice(0, 3), "phi": slice(3, 6), "varphi": slice(6, 7),
              "theta": slice(7, 8)}


class _GhostSide:
    """Per-endpoint ghost closure: constant 8x8 system, state-dependent RHS."""

    def __init__(self, ctx, which):
        self.which = which
        self.n1 = Grid1D.NORMALS[which]
        self.side = ctx.scenario.bspec.side(which)
        h = ctx.grid.h
        self.d = (-1.0 if which == "left" else 1.0) / (2.0 * h)
        self.bnode = 0 if which == "left" else ctx.grid.n_nodes - 1
        self.inward = 1 if which == "left" else -1
        # probe d(response)/d(ghost): responses [T_11..T_13, M_11..M_13, h_1, K11 th,1]
        Araw = np.empty((8, 8))
        for col in range(8):
            z = np.zeros(8)
            z[col] = 1.0
            Araw[:, col] = self._responses(
                ctx, du=self.d * z[0:3], dphi=self.d * z[3:6],
                dvarphi=self.d * z[6], dtheta=self.d * z[7],
                phi_b=np.zeros(3), varphi_b=0.0, theta_b=0.0)
        A = np.empty((8, 8))
        for pair, rows in _PAIR_ROWS.items():
            if getattr(self.side, pair) == "dirichlet":
                A[rows] = np.eye(8)[rows]
            else:
                A[rows] = self.n1 * Araw[rows]
        if np.linalg.cond(A) > 1e12:
            raise GhostSolveSingular(
                f"ghost system at {which} end is singular or near-singular "
                f"(cond = {np.linalg.cond(A):.3e})", end=which)
        self.Ainv = np.linalg.inv(A)

    @staticmethod
    def _responses(ctx, du, dphi, dvarphi, dtheta, phi_b, varphi_b, theta_b):
        E = strain_from_gradients(du[None, :], phi_b[None, :])
        Psi = wryness_from_gradients(dphi[None, :])
        gv = np.array([[dvarphi, 0.0, 0.0]])
        X = pack_inputs(E, Psi, np.array([varphi_b]), gv, np.array([theta_b]))
        T, M, _, hvec, _ = ctx.cop.apply(X)
        out = np.empty(8)
        out[0:3] = T[0, 0, :]
        out[3:6] = M[0, 0, :]
        out[6] = hvec[0, 0]
        out[7] = ctx.K00 * dtheta
        return out

    def solve(self, ctx, arr, t):
        """Ghost values (u_g(3), phi_g(3), varphi_g, theta_g) at time t."""
        b, step = self.bnode, self.inward
        grad0 = self.d * (-arr[b + step, :])  # (s[neighbor] - z)/(2h) at z = 0
        # d*( -neighbor ) reproduces both orientations: left -1/(2h)*(-s1) = s1/2h
        base = self._responses(
            ctx, du=grad0[0:3], dphi=grad0[6:9], dvarphi=grad0[12],
            dtheta=grad0[14], phi_b=arr[b, 6:9], varphi_b=arr[b, 12],
            theta_b=arr[b, 14])
        rhs = np.empty(8)
        extrap = 3.0 * arr[b] - 3.0 * arr[b + step] + arr[b + 2 * step]
        side = self.side
        if side.u == "dirichlet":
            rhs[0:3] = extrap[0:3]
        else:
            rhs[0:3] = [float(sig.value(t)) for sig in side.u_data]
            rhs[0:3] -= self.n1 * base[0:3]
        if side.phi == "dirichlet":
            rhs[3:6] = extrap[6:9]
        else:
            rhs[3:6] = [float(sig.value(t)) for sig in side.phi_data]
            rhs[3:6] -= self.n1 * base[3:6]
        if side.varphi == "dirichlet":
            rhs[6] = extrap[12]
        else:
            rhs[6] = float(side.varphi_data.value(t)) - self.n1 * base[6]
        if side.theta == "dirichlet":
            rhs[7] = extrap[14]
        else:
            qstar = float(side.theta_data.value(t))
            if ctx.mc.tau > 0.0:
                qstar += ctx.mc.tau * float(side.theta_data.d1(t))
            rhs[7] = qstar - self.n1 * base[7]
        return self.Ainv @ rhs


class SimContext:
    """Scenario plus everything precomputable for the hot loop."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.grid = scenario.grid
        self.mc = scenario.material
        self.cop = ConstitutiveOperator(self.mc)
        self.Jinv = np.linalg.inv(self.mc.J)
        self.K00 = float(self.mc.K[0, 0])
        self.Kcol = self.mc.K[:, 0].copy()
        self.src = SourceEvaluator(scenario.sources, self.grid.x)
        self.ghosts = {w: _GhostSide(self, w) for w in ("left", "right")}
        self.blowup = BLOWUP_FACTOR * (1.0 + scenario.source_bound())

    def bc(self, arr, t):
        state = FieldState(self.grid.n_nodes, t, arr)
        apply_dirichlet(state, self.grid, self.scenario.bspec, t)
        if self.mc.tau > 0.0:
            pin_heatflux(state, self.grid, self.scenario.bspec, t)
        return arr

    def gradients(self, arr, t):
        """Ghost-closed d/dx of (u, phi, varphi, theta); plain one-sided for
        the velocity-level fields."""
        n, h = self.grid.n_nodes, self.grid.h
        zl = self.ghosts["left"].solve(self, arr, t)
        zr = self.ghosts["right"].solve(self, arr, t)
        ext = np.empty((n + 2, 8))
        cols = [0, 1, 2, 6, 7, 8, 12, 14]  # u, phi, varphi, theta
        ext[1:-1] = arr[:, cols]
        ext[0] = zl
        ext[-1] = zr
        grad = (ext[2:] - ext[:-2]) / (2.0 * h)
        return grad[:, 0:3], grad[:, 3:6], grad[:, 6], grad[:, 7]

    def stress_fields(self, arr, t):
        """(T, M, g, hvec, rho_eta, q_used, dtheta) on every node."""
        du, dphi, dvarphi, dtheta = self.gradients(arr, t)
        E = strain_from_gradients(du, arr[:, 6:9])
        Psi = wryness_from_gradients(dphi)
        gv = np.zeros((self.grid.n_nodes, 3))
        gv[:, 0] = dvarphi
        X = pack_inputs(E, Psi, arr[:, 12], gv, arr[:, 14])
        T, M, g, hvec, rho_eta = self.cop.apply(X)
        if self.mc.tau > 0.0:
            q_used = arr[:, 15:18]
        else:
            q_used = dtheta[:, None] * self.Kcol[None, :]
        return T, M, g, hvec, rho_eta, q_used, dtheta

    def rhs(self, arr, t):
        mc, h = self.mc, self.grid.h
        T, M, g, hvec, rho_eta, q_used, dtheta = self.stress_fields(arr, t)
        dT = ddx(T[:, 0, :], h)
        dM = ddx(M[:, 0, :], h)
        dh = ddx(hvec[:, 0], h)
        dq = ddx(q_used[:, 0], h)
        epsT = np.empty_like(dT)
        epsT[:, 0] = T[:, 1, 2] - T[:, 2, 1]
        epsT[:, 1] = T[:, 2, 0] - T[:, 0, 2]
        epsT[:, 2] = T[:, 0, 1] - T[:, 1, 0]

        f = self.src.vector("f", t)
        lcp = self.src.vector("l", t)
        ell = self.src.scalar("ell", t)
        r = self.src.scalar("r", t)

        dv = ddx(arr[:, 3:6], h)
        domega = ddx(arr[:, 9:12], h)
        dvarphidot = ddx(arr[:, 13], h)
        Edot = strain_from_gradients(dv, arr[:, 9:12])

        out = np.empty_like(arr)
        out[:, 0:3] = arr[:, 3:6]
        out[:, 3:6] = dT / mc.rho + f
        out[:, 6:9] = arr[:, 9:12]
        out[:, 9:12] = (dM + epsT + mc.rho * lcp) @ self.Jinv.T / mc.rho
        out[:, 12] = arr[:, 13]
        out[:, 13] = (dh + g + mc.rho * ell) / (mc.rho * mc.chi)
        out[:, 14] = ((dq + mc.rho * r) / mc.theta0
                      + np.einsum("ij,nij->n", mc.A, Edot)
                      + domega @ mc.Gth[0, :]
                      + mc.b * arr[:, 13]
                      + mc.gamma[0] * dvarphidot) / mc.c
        if mc.tau > 0.0:
            out[:, 15:18] = (dtheta[:, None] * self.Kcol[None, :]
                             - arr[:, 15:18]) / mc.tau
        else:
            out[:, 15:18] = 0.0
        self._overwrite_constrained_rates(out, t)
        return out

    def _overwrite_constrained_rates(self, out, t):
        for which, k in (("left", 0), ("right", self.grid.n_nodes - 1)):
            side = self.scenario.bspec.side(which)
            if side.u == "dirichlet":
                out[k, 0:3] = [float(sig.d1(t)) for sig in side.u_data]
                out[k, 3:6] = [float(sig.d2(t)) for sig in side.u_data]
            if side.phi == "dirichlet":
                out[k, 6:9] = [float(sig.d1(t)) for sig in side.phi_data]
                out[k, 9:12] = [float(sig.d2(t)) for sig in side.phi_data]
            if side.varphi == "dirichlet":
                out[k, 12] = float(side.varphi_data.d1(t))
                out[k, 13] = float(side.varphi_data.d2(t))
            if side.theta == "dirichlet":
                out[k, 14] = float(side.theta_data.d1(t))
            elif self.mc.tau > 0.0:
                out[k, 15] = Grid1D.NORMALS[which] * float(side.theta_data.d1(t))

    def refresh_flux(self, arr, t):
        if self.mc.tau == 0.0:
            _, _, _, dtheta = self.gradients(arr, t)
            arr[:, 15:18] = dtheta[:, None] * self.Kcol[None, :]
        return arr

    def boundary_traces(self, arr, t):
        """[T_11 n, T_12 n, T_13 n, M_11 n.., h_1 n, q_1 n] per endpoint."""
        T, M, _, hvec, _, q_used, _ = self.stress_fields(arr, t)
        out = np.empty((2, 8))
        for row, (which, k) in enumerate(
                (("left", 0), ("right", self.grid.n_nodes - 1))):
            n1 = Grid1D.NORMALS[which]
            out[row, 0:3] = n1 * T[k, 0, :]
            out[row, 3:6] = n1 * M[k, 0, :]
            out[row, 6] = n1 * hvec[k, 0]
            out[row, 7] = n1 * q_used[k, 0]
        return out


def compute_rhs(state, scenario, t, ctx=None):
    """Time derivative of the packed state (convenience wrapper; the run
    loop talks to SimContext directly to amortize the precomputation)."""
    ctx = ctx if ctx is not None else SimContext(scenario)
    out = ctx.rhs(np.array(state.data, copy=True), t)
    return FieldState(state.n_nodes, t, out)


def rk4_step(state, scenario, t, dt, ctx=None):
    """Advance a FieldState by one RK4 step (wrapper around _step)."""
    ctx = ctx if ctx is not None else SimContext(scenario)
    arr = _step(ctx, np.array(state.data, copy=True), t, dt)
    out = FieldState(state.n_nodes, t + dt, arr)
    out.check_finite()
    return out


def _step(ctx, arr, t, dt):
    """One classical RK4 step with per-stage boundary enforcement."""
    k1 = ctx.rhs(ctx.bc(arr, t), t)
    y = ctx.bc(arr + (0.5 * dt) * k1, t + 0.5 * dt)
    k2 = ctx.rhs(y, t + 0.5 * dt)
    y = ctx.bc(arr + (0.5 * dt) * k2, t + 0.5 * dt)
    k3 = ctx.rhs(y, t + 0.5 * dt)
    y = ctx.bc(arr + dt * k3, t + dt)
    k4 = ctx.rhs(y, t + dt)
    out = arr + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    ctx.bc(out, t + dt)
    ctx.refresh_flux(out, t + dt)
    return out


@dataclass
class History:
    """Recorded run: full state at sample times, boundary traces, entropy
    flow s_i accumulated stepwise from q/theta0 by the trapezoid rule."""

    scenario: Scenario
    times: np.ndarray    # (m,)
    states: np.ndarray   # (m, n, 18)
    traces: np.ndarray   # (m, 2, 8)
    s: np.ndarray        # (m, n, 3)

    @property
    def grid(self):
        return self.scenario.grid

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def sample_dt(self):
        return self.scenario.dt * self.scenario.record_every

    def field(self, name):
        from .field import _COLS
        return self.states[:, :, _COLS[name]]

    def index_at(self, t):
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise RangeError(f"t = {t} is not a recorded sample time", t=t)
        return idx


def run_simulation(scenario):
    ctx = SimContext(scenario)
    n, n_steps = scenario.grid.n_nodes, scenario.n_steps
    if scenario.initial_state is None:
        arr = np.zeros((n, NCOLS))
    else:
        init = scenario.initial_state
        arr = np.array(init(scenario.grid) if callable(init) else init, dtype=float)
        if arr.shape != (n, NCOLS):
            raise RangeError(f"initial state has shape {arr.shape}, "
                             f"expected {(n, NCOLS)}")
    ctx.bc(arr, 0.0)
    ctx.refresh_flux(arr, 0.0)

    m = n_steps // scenario.record_every + 1
    times = np.empty(m)
    states = np.empty((m, n, NCOLS))
    traces = np.empty((m, 2, 8))
    s_hist = np.empty((m, n, 3))
    s_accum = np.zeros((n, 3))
    times[0], states[0] = 0.0, arr
    traces[0] = ctx.boundary_traces(arr, 0.0)
    s_hist[0] = s_accum

    theta0 = scenario.material.theta0
    sample = 1
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * scenario.dt
        q_prev = arr[:, 15:18].copy()
        arr = _step(ctx, arr, t_prev, scenario.dt)
        t_new = step * scenario.dt
        s_accum += (scenario.dt / (2.0 * theta0)) * (q_prev + arr[:, 15:18])
        if not np.isfinite(arr).all():
            FieldState(n, t_new, arr).check_finite()
        if np.abs(arr).max() > ctx.blowup:
            raise NonfiniteField(
                f"state norm {np.abs(arr).max():.3e} exceeded the blow-up "
                f"bound {ctx.blowup:.3e} at t = {t_new}", t=t_new)
        if step % scenario.record_every == 0:
            times[sample] = t_new
            states[sample] = arr
            traces[sample] = ctx.boundary_traces(arr, t_new)
            s_hist[sample] = s_accum
            sample += 1
    return History(scenario=scenario, times=times, states=states,
                   traces=traces, s=s_hist)


def theoretical_front_speed(mc):
    """Second-sound speed sqrt(K_11 / (theta0 c tau)) of the rigid conductor."""
    if mc.tau <= 0.0:
        raise DegenerateCase("tau = 0 propagates with unbounded speed")
    return float(np.sqrt(mc.K[0, 0] / (mc.theta0 * mc.c * mc.tau)))


@dataclass
class FrontReport:
    speed: float
    times: np.ndarray
    positions: np.ndarray
    threshold: float


def detect_front(history, threshold=0.02, x_ref=None, margin=0.05):
    """Track the farthest node with |theta| above threshold * max|theta|.

    The fit window starts once every heat-supply term has switched off and
    stops before the front reaches within ``margin`` * length of an endpoint
    (reflections corrupt the slope).  Least-squares slope of position vs
    time estimates the propagation speed.
    """
    scn = history.scenario
    x = scn.grid.x
    if x_ref is None:
        terms = scn.sources.r
        if terms:
            x_ref = sum(t.x0 for t in terms) / len(terms)
        else:
            x_ref = 0.5 * scn.grid.length
    t_on = max((t.t1 for t in scn.sources.r), default=0.0)
    theta = history.field("theta")
    dist_cap = (1.0 - margin) * max(x_ref, scn.grid.length - x_ref)

    ts, ps = [], []
    for mdx in range(history.n_samples):
        if history.times[mdx] <= t_on:
            continue
        mag = np.abs(theta[mdx])
        peak = mag.max()
        if peak == 0.0:
            continue
        hot = mag > threshold * peak
        if not hot.any():
            continue
        pos = np.abs(x[hot] - x_ref).max()
        if pos >= dist_cap:
            break
        ts.append(history.times[mdx])
        ps.append(pos)
    if len(ts) < 3:
        raise NoFront("fewer than 3 usable samples above threshold; no "
                      "propagating disturbance found", samples=len(ts))
    ts, ps = np.asarray(ts), np.asarray(ps)
    slope = np.polyfit(ts, ps, 1)[0]
    if slope <= 0.0:
        raise NoFront(f"front position does not advance (slope {slope:.3e})")
    return FrontReport(speed=float(slope), times=ts, positions=ps,
                       threshold=threshold)
