"""Analytic load and boundary-data families.

Time dependence comes in two kinds, both C2 and vanishing together with
their first derivative at t = 0 (compatibility with the quiescent start):

    ramp(t; t0, t1)  : quintic smoothstep rising 0 -> 1 over [t0, t1], flat
                       outside; switch-off pulses are sums ramp_on - ramp_off.
    sine(t; t0, t1, omega) : sin(omega (t - t0)) gated by the same smoothstep.

Volume sources multiply a time factor by amp * gauss(x; x0, w); boundary data
use the bare time factor.  All evaluators are vectorized over t and expose
first and second analytic time derivatives (Dirichlet endpoints integrate the
data exactly through the RK stages).
"""

from dataclasses import dataclass, field
import numpy as np

from .errors import RangeError, ValidationError

TIME_KINDS = ("ramp", "sine")


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_d1(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (s - 1.0) * (s - 1.0), 0.0)


def _smoothstep_d2(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 60.0 * s * (2.0 * s - 1.0) * (s - 1.0), 0.0)


def gauss(x, x0, w):
    return np.exp(-((np.asarray(x, dtype=float) - x0) / w) ** 2)


@dataclass(frozen=True)
class TimeTerm:
    """One additive time-profile term."""

    kind: str
    amp: float
    t0: float
    t1: float
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in TIME_KINDS:
            raise ValidationError(f"unknown time family {self.kind!r}", kind=self.kind)
        if not self.t1 > self.t0:
            raise ValidationError(
                f"time window needs t1 > t0, got [{self.t0}, {self.t1}]")
        if self.t0 < 0.0:
            raise ValidationError(
                f"t0 = {self.t0} < 0 breaks the quiescent start", t0=self.t0)
        if self.kind == "sine" and self.omega == 0.0:
            raise ValidationError("sine term needs a nonzero omega")

    def _sigma(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0)

    def value(self, t):
        sg = self._sigma(t)
        step = _smoothstep(sg)
        if self.kind == "ramp":
            return self.amp * step
        t = np.asarray(t, dtype=float)
        return self.amp * np.sin(self.omega * (t - self.t0)) * step

    def d1(self, t):
        dt_win = self.t1 - self.t0
        sg = self._sigma(t)
        step, dstep = _smoothstep(sg), _smoothstep_d1(sg) / dt_win
        if self.kind == "ramp":
            return self.amp * dstep
        t = np.asarray(t, dtype=float)
        ph = self.omega * (t - self.t0)
        return self.amp * (self.omega * np.cos(ph) * step + np.sin(ph) * dstep)

    def d2(self, t):
        dt_win = self.t1 - self.t0
        sg = self._sigma(t)
        step = _smoothstep(sg)
        dstep = _smoothstep_d1(sg) / dt_win
        d2step = _smoothstep_d2(sg) / dt_win**2
        if self.kind == "ramp":
            return self.amp * d2step
        t = np.asarray(t, dtype=float)
        ph = self.omega * (t - self.t0)
        sin, cos = np.sin(ph), np.cos(ph)
        return self.amp * (-self.omega**2 * sin * step
                           + 2.0 * self.omega * cos * dstep + sin * d2step)


@dataclass(frozen=True)
class TimeSignal:
    """Sum of time terms; the zero signal is TimeSignal(())."""

    terms: tuple = ()

    def value(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for term in self.terms:
            out = out + term.value(t)
        return out

    def d1(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for term in self.terms:
            out = out + term.d1(t)
        return out

    def d2(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for term in self.terms:
            out = out + term.d2(t)
        return out

    @property
    def amp_bound(self):
        return float(sum(abs(term.amp) for term in self.terms))

    @property
    def latest_onoff(self):
        return max((term.t1 for term in self.terms), default=0.0)

    def is_zero(self):
        return not self.terms


@dataclass(frozen=True)
class SourceTerm:
    """amp * gauss(x; x0, w) * time-family; `component` indexes vector loads."""

    kind: str
    amp: float
    x0: float
    w: float
    t0: float
    t1: float
    omega: float = 0.0
    component: int = 0

    def __post_init__(self):
        if self.w <= 0.0:
            raise ValidationError(f"gaussian width w = {self.w} must be positive")
        if self.component not in (0, 1, 2):
            raise RangeError(f"component {self.component} outside 0..2")
        object.__setattr__(self, "time", TimeTerm(
            kind=self.kind, amp=self.amp, t0=self.t0, t1=self.t1, omega=self.omega))

    def profile(self, x):
        return gauss(x, self.x0, self.w)  # amp lives in the time factor


@dataclass(frozen=True)
class SourceSet:
    """Volume loads: body force f_i, body couple l_i, extrinsic equilibrated
    body force ell, heat supply r."""

    f: tuple = ()
    l: tuple = ()
    ell: tuple = ()
    r: tuple = ()

    def amp_bound(self):
        amps = [abs(term.amp) for group in (self.f, self.l, self.ell, self.r)
                for term in group]
        return float(sum(amps)) if amps else 0.0

    def latest_onoff(self):
        ts = [term.t1 for group in (self.f, self.l, self.ell, self.r)
              for term in group]
        return max(ts) if ts else 0.0


class SourceEvaluator:
    """Precomputes spatial profiles on a grid; evaluates loads at time t."""

    def __init__(self, sources, x):
        self.x = np.asarray(x, dtype=float)
        n = self.x.shape[0]
        self._vec = {}
        for name in ("f", "l"):
            self._vec[name] = [(term, term.profile(self.x))
                               for term in getattr(sources, name)]
        self._sca = {}
        for name in ("ell", "r"):
            self._sca[name] = [(term, term.profile(self.x))
                               for term in getattr(sources, name)]
        self.n = n

    def vector(self, name, t):
        out = np.zeros((self.n, 3))
        for term, prof in self._vec[name]:
            out[:, term.component] += prof * float(term.time.value(t))
        return out

    def scalar(self, name, t):
        out = np.zeros(self.n)
        for term, prof in self._sca[name]:
            out += prof * float(term.time.value(t))
        return out

    def vector_series(self, name, times):
        """(m, n, 3) sample of a vector load; used by the theorem checks."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.shape[0], self.n, 3))
        for term, prof in self._vec[name]:
            out[:, :, term.component] += term.time.value(times)[:, None] * prof[None, :]
        return out

    def scalar_series(self, name, times):
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.shape[0], self.n))
        for term, prof in self._sca[name]:
            out += term.time.value(times)[:, None] * prof[None, :]
        return out
