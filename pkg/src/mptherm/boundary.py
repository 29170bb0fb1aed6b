"""Boundary partition and the Dirichlet side of its enforcement.

Each endpoint assigns exactly one member of each of the four pairs

    u:      "dirichlet" (u_i given)       | "traction"  (T_1i n_1 given)
    phi:    "dirichlet" (phi_i given)     | "couple"    (M_1i n_1 given)
    varphi: "dirichlet" (varphi given)    | "flux"      (h_1 n_1 given)
    theta:  "dirichlet" (theta given)     | "heatflux"  (q_1 n_1 given)

Dirichlet data are written straight into the state (values and the matching
time-derivative slots); the flux-type members are imposed by the ghost-node
closure in dynamics.  All data vanish at t = 0 together with their first
derivative, matching the quiescent initial state.
"""

from dataclasses import dataclass, field
import numpy as np

from .errors import InvalidPartition, ValidationError
from .sources import TimeSignal

PAIR_KINDS = {
    "u": ("dirichlet", "traction"),
    "phi": ("dirichlet", "couple"),
    "varphi": ("dirichlet", "flux"),
    "theta": ("dirichlet", "heatflux"),
}

_ZERO = TimeSignal(())
_ZERO3 = (_ZERO, _ZERO, _ZERO)


@dataclass(frozen=True)
class SideSpec:
    """Active member and datum for each pair at one endpoint.

    Vector pairs carry one TimeSignal per component (u_data, phi_data);
    scalar pairs a single TimeSignal.  The datum always belongs to the
    *active* member: with u = "traction", u_data is the traction t*_i.
    """

    u: str = "dirichlet"
    phi: str = "dirichlet"
    varphi: str = "dirichlet"
    theta: str = "dirichlet"
    u_data: tuple = _ZERO3
    phi_data: tuple = _ZERO3
    varphi_data: TimeSignal = _ZERO
    theta_data: TimeSignal = _ZERO

    def __post_init__(self):
        for pair, kinds in PAIR_KINDS.items():
            val = getattr(self, pair)
            if val not in kinds:
                raise InvalidPartition(
                    f"pair {pair!r} must be one of {kinds}, got {val!r}",
                    pair=pair, value=val)
        for name in ("u_data", "phi_data"):
            data = tuple(getattr(self, name))
            if len(data) != 3:
                raise InvalidPartition(f"{name} needs 3 component signals")
            object.__setattr__(self, name, data)

    def signals(self):
        yield from self.u_data
        yield from self.phi_data
        yield self.varphi_data
        yield self.theta_data


@dataclass(frozen=True)
class BoundarySpec:
    left: SideSpec = field(default_factory=SideSpec)
    right: SideSpec = field(default_factory=SideSpec)

    def side(self, which):
        if which not in ("left", "right"):
            raise InvalidPartition(f"no endpoint named {which!r}")
        return getattr(self, which)

    def amp_bound(self):
        return float(sum(sig.amp_bound
                         for side in (self.left, self.right)
                         for sig in side.signals()))

    def latest_onoff(self):
        ts = [sig.latest_onoff for side in (self.left, self.right)
              for sig in side.signals() if not sig.is_zero()]
        return max(ts) if ts else 0.0

    def validate_compatibility(self, tol=1e-12):
        """Starred data must vanish with their first derivative at t = 0."""
        for which in ("left", "right"):
            side = self.side(which)
            for sig in side.signals():
                v0, d0 = float(sig.value(0.0)), float(sig.d1(0.0))
                scale = max(1.0, sig.amp_bound)
                if abs(v0) > tol * scale or abs(d0) > tol * scale:
                    raise ValidationError(
                        f"boundary datum on {which} end is incompatible with "
                        f"the quiescent start: value(0) = {v0}, d/dt(0) = {d0}",
                        end=which)
        return self


def apply_dirichlet(state, grid, bspec, t):
    """Overwrite Dirichlet-assigned endpoint values (and derivative slots).

    Idempotent at fixed t.  Flux-type pairs are untouched except the relaxing
    heat flux: where q_1 n_1 is prescribed and tau > 0 the normal flux is a
    dynamical unknown pinned directly to its datum.
    """
    nodes = {"left": 0, "right": state.n_nodes - 1}
    for which in ("left", "right"):
        side = bspec.side(which)
        k = nodes[which]
        if side.u == "dirichlet":
            state.u[k] = [float(sig.value(t)) for sig in side.u_data]
            state.v[k] = [float(sig.d1(t)) for sig in side.u_data]
        if side.phi == "dirichlet":
            state.phi[k] = [float(sig.value(t)) for sig in side.phi_data]
            state.omega[k] = [float(sig.d1(t)) for sig in side.phi_data]
        if side.varphi == "dirichlet":
            state.varphi[k] = float(side.varphi_data.value(t))
            state.varphidot[k] = float(side.varphi_data.d1(t))
        if side.theta == "dirichlet":
            state.theta[k] = float(side.theta_data.value(t))
    return state


def pin_heatflux(state, grid, bspec, t):
    """Pin q_1 = n_1 q*(t) at heatflux endpoints (relaxing branch only)."""
    nodes = {"left": 0, "right": state.n_nodes - 1}
    for which in ("left", "right"):
        side = bspec.side(which)
        if side.theta == "heatflux":
            n1 = grid.NORMALS[which]
            state.q[nodes[which], 0] = n1 * float(side.theta_data.value(t))
    return state
