import numpy as np
import pytest

from helpers import ramp_signal, sine_signal
from mptherm.boundary import BoundarySpec, SideSpec, apply_dirichlet
from mptherm.errors import InvalidPartition, ValidationError
from mptherm.field import FieldState, Grid1D
from mptherm.sources import TimeSignal


def test_side_kinds_validated():
    SideSpec(u="traction", phi="couple", varphi="flux", theta="heatflux")
    with pytest.raises(InvalidPartition):
        SideSpec(u="couple")
    with pytest.raises(InvalidPartition):
        SideSpec(theta="flux")
    with pytest.raises(InvalidPartition):
        SideSpec(u_data=(TimeSignal(()), TimeSignal(())))


def test_boundary_side_lookup():
    bspec = BoundarySpec()
    assert bspec.side("left") is bspec.left
    with pytest.raises(InvalidPartition):
        bspec.side("top")


def test_amp_bound_and_latest_onoff():
    bspec = BoundarySpec(
        left=SideSpec(theta="heatflux", theta_data=ramp_signal(0.5, 0.1, 0.4)),
        right=SideSpec(u_data=(ramp_signal(1.5, 0.0, 0.2), TimeSignal(()),
                               TimeSignal(()))))
    assert bspec.amp_bound() == pytest.approx(2.0)
    assert bspec.latest_onoff() == pytest.approx(0.4)
    assert BoundarySpec().latest_onoff() == 0.0


def test_compatibility_accepts_built_in_families():
    bspec = BoundarySpec(
        left=SideSpec(varphi_data=sine_signal(0.3, 0.0, 0.2, omega=8.0)),
        right=SideSpec(theta_data=ramp_signal(-0.2, 0.0, 0.1)))
    assert bspec.validate_compatibility() is bspec


def test_compatibility_rejects_nonquiescent_datum():
    class Jump:
        amp_bound = 1.0

        def value(self, t):
            return 1.0

        def d1(self, t):
            return 0.0

        def is_zero(self):
            return False

    bspec = BoundarySpec(left=SideSpec(varphi_data=Jump()))
    with pytest.raises(ValidationError):
        bspec.validate_compatibility()


def test_apply_dirichlet_writes_values_and_rates():
    grid = Grid1D(7)
    sig = ramp_signal(2.0, 0.0, 0.5)
    bspec = BoundarySpec(left=SideSpec(u_data=(sig, TimeSignal(()),
                                               TimeSignal(()))),
                         right=SideSpec())
    st = FieldState(grid, t=0.25)
    st.data[:] = 9.0
    apply_dirichlet(st, grid, bspec, 0.25)
    assert st.data[0, 0] == pytest.approx(float(sig.value(0.25)))
    assert st.data[0, 3] == pytest.approx(float(sig.d1(0.25)))
    assert st.data[-1, 0] == 0.0   # zero datum on the right
    assert st.data[3, 0] == 9.0    # interior untouched
