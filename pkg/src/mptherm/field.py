"""Grid, nodal state and finite-difference stencils.

Fields vary along x1 only; every vector keeps all three components.  The
nodal state is one (n, 18) array with named column views so the integrator
can treat it as flat data:

    u 0:3 | v 3:6 | phi 6:9 | omega 9:12 | varphi 12 | varphidot 13
    | theta 14 | q 15:18
"""

from dataclasses import dataclass, field
import numpy as np

from .errors import NonfiniteField, RangeError, SizeMismatch

NCOLS = 18
_COLS = {
    "u": slice(0, 3),
    "v": slice(3, 6),
    "phi": slice(6, 9),
    "omega": slice(9, 12),
    "varphi": 12,
    "varphidot": 13,
    "theta": 14,
    "q": slice(15, 18),
}

FIELD_NAMES = tuple(_COLS)


@dataclass(frozen=True)
class Grid1D:
    """Uniform nodes on [0, length]; outward normals are -e1 and +e1."""

    n_nodes: int
    length: float = 1.0

    def __post_init__(self):
        if self.n_nodes < 5:
            raise RangeError(f"n_nodes = {self.n_nodes} but at least 5 are required",
                             n_nodes=self.n_nodes)
        if not self.length > 0.0:
            raise RangeError(f"length = {self.length} must be positive",
                             length=self.length)

    @property
    def h(self):
        return self.length / (self.n_nodes - 1)

    @property
    def x(self):
        return np.linspace(0.0, self.length, self.n_nodes)

    # normal component n_1 at each end, keyed like boundary specs
    NORMALS = {"left": -1.0, "right": 1.0}


class FieldState:
    """Nodal unknowns at one time level, backed by a single (n, 18) array."""

    __slots__ = ("t", "data")

    def __init__(self, grid_or_n, t=0.0, data=None):
        n = grid_or_n.n_nodes if isinstance(grid_or_n, Grid1D) else int(grid_or_n)
        self.t = float(t)
        if data is None:
            self.data = np.zeros((n, NCOLS))
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != (n, NCOLS):
                raise SizeMismatch(
                    f"state array has shape {data.shape}, expected {(n, NCOLS)}")
            self.data = data

    def __getattr__(self, name):
        try:
            return self.data[:, _COLS[name]]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def n_nodes(self):
        return self.data.shape[0]

    def copy(self):
        return FieldState(self.n_nodes, t=self.t, data=self.data.copy())

    def check_finite(self):
        if not np.isfinite(self.data).all():
            bad = ~np.isfinite(self.data)
            node, col = np.argwhere(bad)[0]
            for name, sl in _COLS.items():
                cols = range(sl.start, sl.stop) if isinstance(sl, slice) else (sl,)
                if col in cols:
                    raise NonfiniteField(
                        f"field {name} is non-finite at node {node}, t = {self.t}",
                        field=name, node=int(node), t=self.t)
        return self


def ddx(values, h):
    """First x-derivative, second order: central inside, one-sided at ends."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 3:
        raise SizeMismatch("ddx needs at least 3 nodes")
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return out


def d2dx(values, h):
    """Second x-derivative, second order (one-sided 4-point at the ends)."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 4:
        raise SizeMismatch("d2dx needs at least 4 nodes")
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return out
