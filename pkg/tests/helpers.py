"""Small scenario builders shared across the test modules."""

import numpy as np

from mptherm.boundary import BoundarySpec, SideSpec
from mptherm.dynamics import Scenario
from mptherm.field import Grid1D
from mptherm.material import isotropic_preset
from mptherm.sources import SourceSet, SourceTerm, TimeSignal, TimeTerm


def onoff_pulse(amp, x0, w, t_on, t_full, t_down, t_off, component=0):
    """Gaussian space profile switched on over [t_on, t_full] and back off
    over [t_down, t_off].  The ramp family latches at its plateau, so the
    off phase is a second ramp with opposite amplitude."""
    common = dict(x0=x0, w=w, component=component)
    return (SourceTerm(kind="ramp", amp=amp, t0=t_on, t1=t_full, **common),
            SourceTerm(kind="ramp", amp=-amp, t0=t_down, t1=t_off, **common))


def ramp_signal(amp, t0, t1):
    return TimeSignal((TimeTerm(kind="ramp", amp=amp, t0=t0, t1=t1),))


def sine_signal(amp, t0, t1, omega):
    return TimeSignal((TimeTerm(kind="sine", amp=amp, t0=t0, t1=t1,
                                omega=omega),))


def clamped_bc():
    return BoundarySpec(left=SideSpec(), right=SideSpec())


def small_scenario(mc=None, n=17, length=1.0, t_end=0.3, dt=1e-3,
                   sources=None, bspec=None, record_every=1, **kw):
    """Cheap isotropic run for unit tests; defaults to a single heat pulse."""
    if mc is None:
        mc = isotropic_preset(tau=0.05)
    if sources is None:
        sources = SourceSet(r=onoff_pulse(1.0, 0.5 * length, 0.1 * length,
                                          0.02, 0.08, 0.12, 0.2))
    if bspec is None:
        bspec = clamped_bc()
    return Scenario(grid=Grid1D(n, length), material=mc, sources=sources,
                    bspec=bspec, t_end=t_end, dt=dt,
                    record_every=record_every, **kw)
