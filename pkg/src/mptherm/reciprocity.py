"""Convolution reciprocity and its Laplace-domain counterpart.

Two histories of the same body under different data satisfy, at every time,

    I_ab = int_Om rho[f^a*vdot... (f^a * udot^b + l^a * phidot^b
           + ell^a * varphidot^b - (1/theta0) r^a * theta^b)] dV
           - int_S1 udot*^a * T^b n + int_S2 t*^a * udot^b
           - int_S3 phidot*^a * M^b n + int_S4 m*^a * phidot^b
           - int_S5 varphidot*^a * h^b n + int_S6 h*^a * varphidot^b
           + (1/theta0) int_S7 theta*^a * q^b n
           - (1/theta0) int_S8 q*^a * theta^b
         = I_ba                                 (* = time convolution)

and the transform-domain identity obtained from the same cancellation,

    int_Om { rho s [ft^a ut^b + lt^a phit^b + ellt^a varphit^b - (a<->b)]
             - (rho/theta0)[rt^a thetat^b - rt^b thetat^a] } dV
    + s(Tt^a n ut*^b - Tt^b n ut*^a)|S1 + s(tt*^a ut^b - tt*^b ut^a)|S2
    + s(Mt^a n phit*^b - Mt^b n phit*^a)|S3 + s(mt*^a phit^b - mt*^b phit^a)|S4
    + s(ht^a n varphit*^b - ht^b n varphit*^a)|S5
    + s(ht*^a varphit^b - ht*^b varphit^a)|S6
    + (1/theta0)(thetat*^a qt^b n - thetat*^b qt^a n)|S7
    - (1/theta0)(thetat^a qt*^b - thetat^b qt*^a)|S8  =  0,

where t-hats are Laplace transforms, starred quantities prescribed data, and
the surface terms go with whichever pair member is active at each endpoint.
Discrete transforms are truncated at t_end; the truncation of a series a is
bounded by |a(t_end)| e^{-s t_end} / s and the per-piece propagation of that
bound is reported alongside the defect.
"""

from dataclasses import dataclass, field
import numpy as np

from .errors import RangeError, ScenarioMismatch, SizeMismatch

EPS_DEFECT = 1e-30

# surface-term catalog: pair -> (dirichlet sign, dirichlet trace columns,
# flux sign); scalar factors 1/theta0 handled separately for the heat pair
_TRACE_COLS = {"u": slice(0, 3), "phi": slice(3, 6), "varphi": 6, "theta": 7}
_STATE_RATE = {"u": slice(3, 6), "phi": slice(9, 12), "varphi": 13,
               "theta": 14}


def convolve(a, b, dt):
    """Trapezoidal time convolution (a*b)(t_k); output[0] = 0.

    Works on (m,) or (m, ...) series; meant for modest m (the reciprocity
    functional evaluates single-time convolutions directly)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise SizeMismatch(f"series shapes differ: {a.shape} vs {b.shape}")
    m = a.shape[0]
    out = np.zeros_like(a)
    for k in range(1, m):
        out[k] = _conv_at(a, b, dt, k)
    return out


def _conv_at(a, b, dt, k):
    """(a*b)(t_k) by the trapezoid rule, summing over the time axis."""
    w = np.ones(k + 1)
    w[0] = w[-1] = 0.5
    w = w.reshape((k + 1,) + (1,) * (a.ndim - 1))
    return dt * (w * a[:k + 1] * b[k::-1]).sum(axis=0)


def _require_compatible(hist_a, hist_b):
    sa, sb = hist_a.scenario, hist_b.scenario
    if (sa.grid.n_nodes != sb.grid.n_nodes
            or abs(sa.grid.length - sb.grid.length) > 1e-14):
        raise ScenarioMismatch("histories use different grids")
    if abs(sa.dt - sb.dt) > 1e-15 or sa.record_every != sb.record_every:
        raise ScenarioMismatch("histories use different time sampling")
    if hist_a.n_samples != hist_b.n_samples:
        raise ScenarioMismatch("histories have different sample counts")
    from .material import _SHAPES
    ma, mb = sa.material, sb.material
    for name in list(_SHAPES) + ["rho", "theta0", "tau", "chi", "a_scalar",
                                 "b", "c"]:
        if not np.array_equal(getattr(ma, name), getattr(mb, name)):
            raise ScenarioMismatch(f"materials differ in {name}")
    for which in ("left", "right"):
        da, db = sa.bspec.side(which), sb.bspec.side(which)
        for pair in ("u", "phi", "varphi", "theta"):
            if getattr(da, pair) != getattr(db, pair):
                raise ScenarioMismatch(
                    f"boundary partition differs at {which}:{pair}")


def _data_series(side, pair, times, rate=False):
    """Sampled starred datum of one pair at one endpoint; rate=True takes the
    analytic time derivative (the overdot on starred data in the display)."""
    sigs = getattr(side, pair + "_data")
    if pair in ("u", "phi"):
        cols = [sig.d1(times) if rate else sig.value(times) for sig in sigs]
        return np.stack([np.broadcast_to(c, times.shape) for c in cols],
                        axis=-1)
    sig = sigs
    out = sig.d1(times) if rate else sig.value(times)
    return np.broadcast_to(out, times.shape)


def reciprocity_functional(hist_a, hist_b, scen_a=None, scen_b=None, t=None):
    """I_ab(t) per the convolution display; scenarios default to the ones
    carried by the histories."""
    from .sources import SourceEvaluator
    _require_compatible(hist_a, hist_b)
    scen_a = scen_a if scen_a is not None else hist_a.scenario
    scen_b = scen_b if scen_b is not None else hist_b.scenario
    if t is None:
        raise RangeError("a check time is required")
    idx = hist_a.index_at(t)
    times = hist_a.times
    dt = times[1] - times[0]
    grid = scen_a.grid
    mc = scen_a.material
    src_a = SourceEvaluator(scen_a.sources, grid.x)

    # volume block: rho * conv(source^a, rate^b) summed over components
    f_a = src_a.vector_series("f", times)          # (m, n, 3)
    l_a = src_a.vector_series("l", times)
    ell_a = src_a.scalar_series("ell", times)      # (m, n)
    r_a = src_a.scalar_series("r", times)
    dens = (_conv_at(f_a, hist_b.states[:, :, 3:6], dt, idx).sum(axis=-1)
            + _conv_at(l_a, hist_b.states[:, :, 9:12], dt, idx).sum(axis=-1)
            + _conv_at(ell_a, hist_b.states[:, :, 13], dt, idx)
            - _conv_at(r_a, hist_b.states[:, :, 14], dt, idx) / mc.theta0)
    total = mc.rho * float(np.trapezoid(dens, dx=grid.h))

    # endpoint block, one term per pair per end
    for row, which in enumerate(("left", "right")):
        side = scen_a.bspec.side(which)
        node = 0 if which == "left" else grid.n_nodes - 1
        for pair in ("u", "phi", "varphi", "theta"):
            kind = getattr(side, pair)
            if pair == "theta":
                if kind == "dirichlet":   # S7: + (1/theta0) theta*^a * q^b n
                    datum = _data_series(side, pair, times)
                    trace = hist_b.traces[:, row, 7]
                    total += float(_conv_at(datum, trace, dt, idx)) / mc.theta0
                else:                     # S8: - (1/theta0) q*^a * theta^b
                    datum = _data_series(side, pair, times)
                    series = hist_b.states[:, node, 14]
                    total -= float(_conv_at(datum, series, dt, idx)) / mc.theta0
                continue
            if kind == "dirichlet":       # S1/S3/S5: - datumdot^a * trace^b
                datum = _data_series(side, pair, times, rate=True)
                trace = hist_b.traces[:, row, _TRACE_COLS[pair]]
                val = _conv_at(datum, trace, dt, idx)
                total -= float(np.sum(val))
            else:                         # S2/S4/S6: + datum^a * rate^b
                datum = _data_series(side, pair, times)
                series = hist_b.states[:, node, _STATE_RATE[pair]]
                val = _conv_at(datum, series, dt, idx)
                total += float(np.sum(val))
    return total


@dataclass
class ReciprocityReport:
    check_times: np.ndarray
    I_12: np.ndarray
    I_21: np.ndarray
    defects: np.ndarray
    h: float
    dt: float
    s_values: np.ndarray = field(default=None)
    transform_defects: np.ndarray = field(default=None)
    truncation_bounds: np.ndarray = field(default=None)

    @property
    def max_defect(self):
        return float(self.defects.max())


def reciprocity_defect(hist_a, hist_b, scen_a=None, scen_b=None,
                       check_times=None):
    scen_a = scen_a if scen_a is not None else hist_a.scenario
    scen_b = scen_b if scen_b is not None else hist_b.scenario
    if check_times is None:
        check_times = (0.5 * scen_a.t_end, scen_a.t_end)
    check_times = np.asarray(check_times, dtype=float)
    I12 = np.array([reciprocity_functional(hist_a, hist_b, scen_a, scen_b, t)
                    for t in check_times])
    I21 = np.array([reciprocity_functional(hist_b, hist_a, scen_b, scen_a, t)
                    for t in check_times])
    defects = np.abs(I12 - I21) / np.maximum(
        np.maximum(np.abs(I12), np.abs(I21)), EPS_DEFECT)
    return ReciprocityReport(check_times=check_times, I_12=I12, I_21=I21,
                             defects=defects, h=scen_a.grid.h, dt=scen_a.dt)


def laplace_transform(series, s, dt):
    """Truncated transform int_0^{t_end} e^{-st} a(t) dt by trapezoid, over
    the leading axis."""
    series = np.asarray(series, dtype=float)
    m = series.shape[0]
    t = dt * np.arange(m)
    w = np.exp(-s * t)
    w[0] *= 0.5
    w[-1] *= 0.5
    w = w.reshape((m,) + (1,) * (series.ndim - 1))
    return dt * (w * series).sum(axis=0)


def truncation_bound(series, s, dt):
    """|a(t_end)| e^{-s t_end} / s, elementwise over trailing axes."""
    series = np.asarray(series, dtype=float)
    t_end = dt * (series.shape[0] - 1)
    return np.abs(series[-1]) * np.exp(-s * t_end) / s


class _Transformed:
    """All Laplace-transformed series of one history at a fixed s, with the
    matching truncation bounds."""

    def __init__(self, hist, scen, s, dt):
        from .sources import SourceEvaluator
        times = hist.times
        src = SourceEvaluator(scen.sources, scen.grid.x)
        self.val = {}
        self.bnd = {}
        for name, series in (
                ("f", src.vector_series("f", times)),
                ("l", src.vector_series("l", times)),
                ("ell", src.scalar_series("ell", times)),
                ("r", src.scalar_series("r", times)),
                ("u", hist.states[:, :, 0:3]),
                ("phi", hist.states[:, :, 6:9]),
                ("varphi", hist.states[:, :, 12]),
                ("theta", hist.states[:, :, 14]),
                ("traces", hist.traces),
                ("u_end", hist.states[:, (0, -1), 0:3]),
                ("phi_end", hist.states[:, (0, -1), 6:9]),
                ("varphi_end", hist.states[:, (0, -1), 12]),
                ("theta_end", hist.states[:, (0, -1), 14])):
            self.val[name] = laplace_transform(series, s, dt)
            self.bnd[name] = truncation_bound(series, s, dt)
        self.data = {}
        self.data_bnd = {}
        for row, which in enumerate(("left", "right")):
            side = scen.bspec.side(which)
            for pair in ("u", "phi", "varphi", "theta"):
                series = _data_series(side, pair, times)
                self.data[(row, pair)] = laplace_transform(series, s, dt)
                self.data_bnd[(row, pair)] = truncation_bound(series, s, dt)


def _volume_pieces(ta, tb, mc, grid, s):
    """The six s-weighted source pairings and two r pairings, with bounds."""
    h, rho, theta0 = grid.h, mc.rho, mc.theta0

    def pair(name_src, name_state, coef):
        a, b = ta.val[name_src], tb.val[name_state]
        ba, bb = ta.bnd[name_src], tb.bnd[name_state]
        dens = a * b
        err = ba * np.abs(b) + np.abs(a) * bb + ba * bb
        if dens.ndim == 2:
            dens, err = dens.sum(axis=-1), err.sum(axis=-1)
        return (coef * float(np.trapezoid(dens, dx=h)),
                abs(coef) * float(np.trapezoid(err, dx=h)))

    out = []
    for src_name, state_name in (("f", "u"), ("l", "phi"),
                                 ("ell", "varphi")):
        out.append(pair(src_name, state_name, rho * s))
    out.append(pair("r", "theta", -rho / theta0))
    return out


def _surface_pieces(ta, tb, scen, s):
    """One (value, bound) per active endpoint term, alpha-beta ordering."""
    mc = scen.material
    out = []
    for row, which in enumerate(("left", "right")):
        side = scen.bspec.side(which)
        for pair in ("u", "phi", "varphi", "theta"):
            kind = getattr(side, pair)
            if pair == "theta":
                if kind == "dirichlet":   # S7: +(1/theta0) theta*^a qt^b n
                    a, ba = ta.data[(row, pair)], ta.data_bnd[(row, pair)]
                    b = tb.val["traces"][row, 7]
                    bb = tb.bnd["traces"][row, 7]
                    coef = 1.0 / mc.theta0
                else:                     # S8: -(1/theta0) thetat^a q*^b
                    a, ba = ta.val["theta_end"][row], ta.bnd["theta_end"][row]
                    b = tb.data[(row, pair)]
                    bb = tb.data_bnd[(row, pair)]
                    coef = -1.0 / mc.theta0
            elif kind == "dirichlet":     # S1/S3/S5: +s tracet^a datum*^b
                a = ta.val["traces"][row, _TRACE_COLS[pair]]
                ba = ta.bnd["traces"][row, _TRACE_COLS[pair]]
                b, bb = tb.data[(row, pair)], tb.data_bnd[(row, pair)]
                coef = s
            else:                         # S2/S4/S6: +s datum*^a statet^b
                a, ba = ta.data[(row, pair)], ta.data_bnd[(row, pair)]
                b = tb.val[pair + "_end"][row]
                bb = tb.bnd[pair + "_end"][row]
                coef = s
            val = coef * float(np.sum(a * b))
            bound = abs(coef) * float(np.sum(ba * np.abs(b)
                                             + np.abs(a) * bb + ba * bb))
            out.append((val, bound))
    return out


def transform_identity_defect(hist_a, hist_b, scen_a=None, scen_b=None,
                              s_values=(1.0, 2.0, 5.0)):
    """Per s: |sum of all displayed pieces| / max piece magnitude, plus the
    propagated truncation bound normalized the same way."""
    _require_compatible(hist_a, hist_b)
    scen_a = scen_a if scen_a is not None else hist_a.scenario
    scen_b = scen_b if scen_b is not None else hist_b.scenario
    dt = hist_a.times[1] - hist_a.times[0]
    mc, grid = scen_a.material, scen_a.grid
    s_values = np.asarray(s_values, dtype=float)
    if (s_values <= 0).any():
        raise RangeError("transform abscissae must be positive")
    defects = np.empty(s_values.shape)
    bounds = np.empty(s_values.shape)
    fwd = np.empty(s_values.shape)
    rev = np.empty(s_values.shape)
    for k, s in enumerate(s_values):
        ta = _Transformed(hist_a, scen_a, s, dt)
        tb = _Transformed(hist_b, scen_b, s, dt)
        pieces = []
        for (v, b), (v2, b2) in zip(_volume_pieces(ta, tb, mc, grid, s),
                                    _volume_pieces(tb, ta, mc, grid, s)):
            pieces.append((v, b))
            pieces.append((-v2, b2))
        for (v, b), (v2, b2) in zip(_surface_pieces(ta, tb, scen_a, s),
                                    _surface_pieces(tb, ta, scen_b, s)):
            pieces.append((v, b))
            pieces.append((-v2, b2))
        vals = np.array([p[0] for p in pieces])
        errs = np.array([p[1] for p in pieces])
        scale = np.abs(vals).max() + EPS_DEFECT
        # even slots hold the (a, b) orientation, odd ones minus (b, a)
        fwd[k] = vals[0::2].sum()
        rev[k] = -vals[1::2].sum()
        defects[k] = abs(vals.sum()) / scale
        bounds[k] = errs.sum() / scale
    return ReciprocityReport(
        check_times=np.empty(0), I_12=fwd, I_21=rev,
        defects=np.empty(0), h=grid.h, dt=scen_a.dt, s_values=s_values,
        transform_defects=defects, truncation_bounds=bounds)
