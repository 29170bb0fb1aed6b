"""Scenario files.

TOML with the sections [grid], [material], [sources], [boundary.left],
[boundary.right] and [run].  Every key has a documented default (see
DEFAULT_SCENARIO); unknown keys and sections are hard errors so a typo
cannot silently fall back to a default.  Loads and boundary data are
arrays of inline term tables, one per additive term:

    [sources]
    f = [ { kind = "ramp", amp = 1.0, x0 = 0.5, w = 0.1,
            t0 = 0.05, t1 = 0.2, component = 0 } ]

    [boundary.left]
    theta = "heatflux"
    theta_data = [ { kind = "sine", amp = 0.1, t0 = 0.0, t1 = 0.3,
                     omega = 12.0 } ]

Vector-valued data (u_data, phi_data) take a `component` per term; scalar
data do not.  All amplitudes and times are in the nondimensional units of
the model; time families vanish with their first derivative at t = 0 so
every scenario starts quiescent.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import re

import numpy as np

from .boundary import BoundarySpec, SideSpec
from .dynamics import Scenario
from .errors import ParseError, UnknownKey, ValidationError
from .field import Grid1D
from .material import isotropic_preset, random_admissible_material
from .sources import SourceSet, SourceTerm, TimeSignal, TimeTerm

_ISO_DEFAULTS = {
    "lam": 1.0, "mu": 1.0, "kappa": 0.5,
    "alpha_m": 0.5, "beta_m": 0.2, "gamma_m": 0.7,
    "j0": 1.0, "d0": 1.0, "k0": 1.0,
    "a_scalar": 1.0, "h0": 0.0, "a0": 0.0, "b0": 0.0, "c0": 1.0,
    "rho": 1.0, "theta0": 1.0, "tau": 0.0, "chi": 1.0,
}
_RANDOM_DEFAULTS = {"seed": 0, "coupling_scale": 0.1,
                    "eigen_floor": 1.0, "tau": 0.05}
_GRID_DEFAULTS = {"n_nodes": 33, "length": 1.0}
_RUN_DEFAULTS = {"t_end": 1.0, "dt": 2e-4, "record_every": 1}
_KIND_DEFAULTS = {"u": "dirichlet", "phi": "dirichlet",
                  "varphi": "dirichlet", "theta": "dirichlet"}

_SOURCE_KEYS = ("kind", "amp", "x0", "w", "t0", "t1", "omega", "component")
_SIGNAL_KEYS = ("kind", "amp", "t0", "t1", "omega", "component")
_SECTIONS = ("grid", "material", "sources", "boundary", "run")
_REQUIRED = ("grid", "material", "boundary", "run")
_INTS = {"n_nodes", "record_every", "seed", "component"}

DEFAULT_SCENARIO = """\
# mptherm scenario (all quantities nondimensional)

[grid]
n_nodes = 33          # uniform nodes on [0, length]
length = 1.0

[material]
preset = "isotropic"  # "isotropic" or "random"
# isotropic keys (defaults shown): lam, mu, kappa = Lame + micropolar shear;
# alpha_m, beta_m, gamma_m = couple-stress moduli; j0 = microinertia;
# d0 = fraction-gradient modulus; k0 = conductivity; a_scalar = fraction
# stiffness; h0, a0, b0 = fraction/thermal coupling; c0 = heat capacity;
# rho, theta0, chi as usual; tau = flux relaxation time (0 = unrelaxed).
# random keys: seed, coupling_scale, eigen_floor, tau.
tau = 0.05

[sources]
# additive terms per load channel: body force f, body couple l, equilibrated
# force ell, heat supply r.  Each term is amp * gauss(x; x0, w) * family(t),
# family "ramp" (smooth 0 -> amp over [t0, t1], then constant) or "sine"
# (amp * sin(omega (t - t0)) faded in over [t0, t1]).  Vector channels take
# component 0..2.
f = [ { kind = "ramp", amp = 1.0, x0 = 0.5, w = 0.1, t0 = 0.05, t1 = 0.2, component = 0 } ]

[boundary.left]
# per pair: which member is prescribed at this end.
# u: "dirichlet" | "traction"; phi: "dirichlet" | "couple";
# varphi: "dirichlet" | "flux"; theta: "dirichlet" | "heatflux".
# Data default to zero signals; nonzero data are term lists as in [sources]
# minus the spatial keys (u_data/phi_data take a component per term).
u = "dirichlet"
phi = "dirichlet"
varphi = "dirichlet"
theta = "dirichlet"

[boundary.right]
u = "dirichlet"
phi = "dirichlet"
varphi = "dirichlet"
theta = "dirichlet"

[run]
t_end = 1.0
dt = 2e-4
record_every = 1      # sample stride for the recorded history
"""


def _load(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"line (\d+)", msg)
        line = int(m.group(1)) if m else None
        raise ParseError(f"{path}: {msg}", path=str(path), line=line) from exc
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}", path=str(path)) from exc


def _reject_unknown(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise UnknownKey(f"unknown key {where}.{key}", key=f"{where}.{key}")


def _number(value, path, want_int=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path} must be a number", key=path)
    if want_int:
        if not isinstance(value, int):
            raise ValidationError(f"{path} must be an integer", key=path)
        return int(value)
    return float(value)


def _string(value, path):
    if not isinstance(value, str):
        raise ValidationError(f"{path} must be a string", key=path)
    return value


def _fill(table, defaults, where):
    _reject_unknown(table, defaults, where)
    out = {}
    for key, dflt in defaults.items():
        value = table.get(key, dflt)
        path = f"{where}.{key}"
        if isinstance(dflt, str):
            out[key] = _string(value, path)
        else:
            out[key] = _number(value, path, want_int=key in _INTS)
    return out


def _terms(raw, where, keys, with_component):
    if not isinstance(raw, list):
        raise ValidationError(f"{where} must be an array of term tables",
                              key=where)
    out = []
    for i, entry in enumerate(raw):
        path = f"{where}[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError(f"{path} must be a table", key=path)
        allowed = keys if with_component else tuple(
            k for k in keys if k != "component")
        _reject_unknown(entry, allowed, path)
        term = {}
        for key in ("kind",):
            if key not in entry:
                raise ValidationError(f"{path} misses {key}", key=f"{path}.{key}")
            term[key] = _string(entry[key], f"{path}.{key}")
        for key in allowed:
            if key in ("kind", "omega", "component"):
                continue
            if key not in entry:
                raise ValidationError(f"{path} misses {key}", key=f"{path}.{key}")
            term[key] = _number(entry[key], f"{path}.{key}")
        term["omega"] = _number(entry.get("omega", 0.0), f"{path}.omega")
        if with_component:
            term["component"] = _number(entry.get("component", 0),
                                        f"{path}.component", want_int=True)
        out.append(term)
    return out


def normalize(raw, origin="scenario"):
    """Raw TOML dict -> fully defaulted, type-checked plain dict."""
    if not isinstance(raw, dict):
        raise ValidationError(f"{origin} must be a table of sections")
    _reject_unknown(raw, _SECTIONS, origin)
    for section in _REQUIRED:
        if section not in raw:
            raise ValidationError(f"missing section {section}", key=section)
    for name in ("boundary.left", "boundary.right"):
        outer, inner = name.split(".")
        if inner not in raw[outer]:
            raise ValidationError(f"missing section {name}", key=name)
    _reject_unknown(raw["boundary"], ("left", "right"), "boundary")

    out = {"grid": _fill(raw["grid"], _GRID_DEFAULTS, "grid")}

    mat = dict(raw["material"])
    preset = _string(mat.pop("preset", "isotropic"), "material.preset")
    if preset == "isotropic":
        out["material"] = {"preset": preset,
                           **_fill(mat, _ISO_DEFAULTS, "material")}
    elif preset == "random":
        out["material"] = {"preset": preset,
                           **_fill(mat, _RANDOM_DEFAULTS, "material")}
    else:
        raise ValidationError(
            f"material.preset must be 'isotropic' or 'random', got {preset!r}",
            key="material.preset")

    src = raw.get("sources", {})
    _reject_unknown(src, ("f", "l", "ell", "r"), "sources")
    out["sources"] = {
        name: _terms(src.get(name, []), f"sources.{name}", _SOURCE_KEYS,
                     with_component=name in ("f", "l"))
        for name in ("f", "l", "ell", "r")}

    out["boundary"] = {}
    for which in ("left", "right"):
        side = raw["boundary"][which]
        where = f"boundary.{which}"
        allowed = tuple(_KIND_DEFAULTS) + tuple(f"{p}_data" for p in _KIND_DEFAULTS)
        _reject_unknown(side, allowed, where)
        norm = {}
        for pair, dflt in _KIND_DEFAULTS.items():
            norm[pair] = _string(side.get(pair, dflt), f"{where}.{pair}")
        for pair in _KIND_DEFAULTS:
            key = f"{pair}_data"
            norm[key] = _terms(side.get(key, []), f"{where}.{key}",
                               _SIGNAL_KEYS, with_component=pair in ("u", "phi"))
        out["boundary"][which] = norm

    out["run"] = _fill(raw.get("run", {}), _RUN_DEFAULTS, "run")
    if out["run"]["dt"] <= 0.0:
        raise ValidationError(f"run.dt must be positive, got {out['run']['dt']}",
                              key="run.dt")
    if out["run"]["t_end"] <= 0.0:
        raise ValidationError(
            f"run.t_end must be positive, got {out['run']['t_end']}",
            key="run.t_end")
    if out["run"]["record_every"] < 1:
        raise ValidationError("run.record_every must be >= 1",
                              key="run.record_every")
    if out["grid"]["n_nodes"] < 5:
        raise ValidationError("grid.n_nodes must be at least 5",
                              key="grid.n_nodes")
    return out


def _signal(terms):
    return TimeSignal(tuple(
        TimeTerm(kind=t["kind"], amp=t["amp"], t0=t["t0"], t1=t["t1"],
                 omega=t["omega"]) for t in terms))


def _vector_data(terms, where):
    comps = ([], [], [])
    for t in terms:
        comps[t["component"]].append(t)
    return tuple(_signal(c) for c in comps)


def build_scenario(norm):
    grid = Grid1D(norm["grid"]["n_nodes"], norm["grid"]["length"])
    mat = dict(norm["material"])
    preset = mat.pop("preset")
    if preset == "isotropic":
        material = isotropic_preset(**mat)
    else:
        material = random_admissible_material(**mat)

    sources = SourceSet(**{
        name: tuple(SourceTerm(**t) for t in norm["sources"][name])
        for name in ("f", "l", "ell", "r")})

    sides = {}
    for which in ("left", "right"):
        nd = norm["boundary"][which]
        sides[which] = SideSpec(
            u=nd["u"], phi=nd["phi"], varphi=nd["varphi"], theta=nd["theta"],
            u_data=_vector_data(nd["u_data"], f"boundary.{which}.u_data"),
            phi_data=_vector_data(nd["phi_data"], f"boundary.{which}.phi_data"),
            varphi_data=_signal(nd["varphi_data"]),
            theta_data=_signal(nd["theta_data"]))

    return Scenario(grid=grid, material=material, sources=sources,
                    bspec=BoundarySpec(left=sides["left"], right=sides["right"]),
                    t_end=norm["run"]["t_end"], dt=norm["run"]["dt"],
                    record_every=norm["run"]["record_every"])


def load_scenario(path):
    return normalize(_load(path), origin=str(path))


def parse_scenario(path):
    """Path -> validated Scenario; the CLI entry point for fixtures."""
    return build_scenario(load_scenario(path))


def _fmt(value):
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, bool):
        raise ValidationError("booleans do not occur in scenarios")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _fmt_terms(terms):
    if not terms:
        return "[]"
    rows = [", ".join(f"{k} = {_fmt(v)}" for k, v in t.items()) for t in terms]
    inner = ",\n  ".join("{ " + r + " }" for r in rows)
    return "[\n  " + inner + ",\n]"


def emit(norm):
    """Normalized dict -> canonical TOML text; normalize(parse(emit(d))) == d."""
    lines = ["[grid]"]
    for k, v in norm["grid"].items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    lines.append("[material]")
    for k, v in norm["material"].items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    lines.append("[sources]")
    for name in ("f", "l", "ell", "r"):
        lines.append(f"{name} = {_fmt_terms(norm['sources'][name])}")
    for which in ("left", "right"):
        lines.append("")
        lines.append(f"[boundary.{which}]")
        nd = norm["boundary"][which]
        for pair in _KIND_DEFAULTS:
            lines.append(f"{pair} = {_fmt(nd[pair])}")
        for pair in _KIND_DEFAULTS:
            lines.append(f"{pair}_data = {_fmt_terms(nd[f'{pair}_data'])}")
    lines.append("")
    lines.append("[run]")
    for k, v in norm["run"].items():
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    return "\n".join(lines)
