"""Text mesh format, VTK and CSV export, and the flat run-configuration format."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import InterfaceCurve, Marker, Mesh, MeshError, Region, check_mesh

PathLike = str | os.PathLike


class ParseError(MeshError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# mesh text format
#
#   NV NT NG
#   x y MARKER            (NV lines)
#   v0 v1 v2 REGION       (NT lines)
#   id ... id open|closed (only when NG > 0)
#   fixed id ...          (optional: pinned interface vertices)


def format_mesh(mesh: Mesh, interface: InterfaceCurve | None = None) -> str:
    ng = 0 if interface is None else len(interface)
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {ng}"]
    for (x, y), m in zip(mesh.vertices.tolist(), mesh.markers.tolist()):
        lines.append(f"{x!r} {y!r} {Marker(m).name}")
    for (a, b, c), r in zip(mesh.triangles.tolist(), mesh.regions.tolist()):
        lines.append(f"{a} {b} {c} {Region(r).name}")
    if interface is not None:
        kind = "closed" if interface.closed else "open"
        lines.append(" ".join(map(str, interface.vertex_ids.tolist())) + f" {kind}")
        if interface.fixed.any():
            lines.append("fixed " + " ".join(map(str, interface.vertex_ids[interface.fixed].tolist())))
    return "\n".join(lines) + "\n"


def write_mesh(path: PathLike, mesh: Mesh, interface: InterfaceCurve | None = None) -> None:
    Path(path).write_text(format_mesh(mesh, interface))


def _records(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _int(tok, no):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", no) from None


def _float(tok, no):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", no) from None


def _enum(enum, tok, no):
    try:
        return enum[tok]
    except KeyError:
        raise ParseError(f"unknown {enum.__name__.lower()} {tok!r}", no) from None


def parse_mesh(text: str) -> tuple[Mesh, InterfaceCurve | None]:
    recs = list(_records(text))
    if not recs:
        raise ParseError("empty mesh file")
    no, head = recs[0]
    if len(head) != 3:
        raise ParseError("header must be 'NV NT NG'", no)
    nv, nt, ng = (_int(t, no) for t in head)
    if min(nv, nt, ng) < 0:
        raise ParseError("negative count in header", no)
    body = recs[1:]
    need = nv + nt + (1 if ng else 0)
    if len(body) < need:
        raise ParseError(f"expected at least {need} records after the header, found {len(body)}")
    verts = np.empty((nv, 2))
    markers = np.empty(nv, np.int8)
    for k in range(nv):
        no, tok = body[k]
        if len(tok) != 3:
            raise ParseError("vertex line must be 'x y MARKER'", no)
        verts[k] = _float(tok[0], no), _float(tok[1], no)
        markers[k] = _enum(Marker, tok[2], no)
    tris = np.empty((nt, 3), np.int64)
    regions = np.empty(nt, np.int8)
    for k in range(nt):
        no, tok = body[nv + k]
        if len(tok) != 4:
            raise ParseError("triangle line must be 'v0 v1 v2 REGION'", no)
        ids = [_int(t, no) for t in tok[:3]]
        for i in ids:
            if not 0 <= i < nv:
                raise ParseError(f"vertex index {i} out of range [0, {nv})", no)
        tris[k] = ids
        regions[k] = _enum(Region, tok[3], no)
    rest = body[nv + nt:]
    interface = None
    if ng:
        no, tok = rest[0]
        if len(tok) != ng + 1 or tok[-1] not in ("open", "closed"):
            raise ParseError(f"interface line must list {ng} vertex ids then 'open' or 'closed'", no)
        ids = np.array([_int(t, no) for t in tok[:-1]])
        if ids.min() < 0 or ids.max() >= nv:
            raise ParseError("interface vertex index out of range", no)
        fixed = np.zeros(ng, bool)
        for no, tok in rest[1:]:
            if tok[0] != "fixed":
                raise ParseError(f"unexpected record {tok[0]!r}", no)
            pinned = {_int(t, no) for t in tok[1:]}
            if not pinned <= set(ids.tolist()):
                raise ParseError("fixed vertex is not on the interface", no)
            fixed |= np.isin(ids, list(pinned))
        interface = InterfaceCurve(ids, rest[0][1][-1] == "closed", fixed)
    elif rest:
        raise ParseError("trailing records after the triangle table", rest[0][0])
    mesh = Mesh(verts, tris, markers, regions)
    try:
        check_mesh(mesh)
    except MeshError as exc:
        raise ParseError(str(exc)) from None
    return mesh, interface


def read_mesh(path: PathLike) -> tuple[Mesh, InterfaceCurve | None]:
    return parse_mesh(Path(path).read_text())


# ---------------------------------------------------------------------------
# VTK legacy


def vertex_regions(mesh: Mesh, interface: InterfaceCurve | None = None) -> np.ndarray:
    """Region code per vertex; interface vertices (shared by both sides) get 0."""
    out = np.zeros(mesh.n_vertices, np.int64)
    for r in (Region.OMEGA_PLUS, Region.OMEGA_MINUS):
        out[mesh.triangles[mesh.regions == r].ravel()] = int(r)
    if interface is not None:
        out[interface.vertex_ids] = 0
    return out


def format_vtk(mesh: Mesh, fields: dict[str, np.ndarray], title: str = "freebound") -> str:
    nv, nt = mesh.n_vertices, mesh.n_triangles
    for name, vals in fields.items():
        if len(vals) != nv:
            raise ValueError(f"field {name!r} has {len(vals)} values for {nv} vertices")
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {nv} double")
    out.extend(f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist())
    out.append(f"CELLS {nt} {4 * nt}")
    out.extend(f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist())
    out.append(f"CELL_TYPES {nt}")
    out.extend(["5"] * nt)
    if fields:
        out.append(f"POINT_DATA {nv}")
        for name, vals in fields.items():
            vals = np.asarray(vals)
            kind = "int" if np.issubdtype(vals.dtype, np.integer) else "double"
            out.append(f"SCALARS {name} {kind} 1")
            out.append("LOOKUP_TABLE default")
            out.extend(repr(v) for v in vals.tolist())
    return "\n".join(out) + "\n"


def state_fields(mesh: Mesh, interface: InterfaceCurve | None, u=None, sigma=None) -> dict[str, np.ndarray]:
    """Standard point fields: ``u``, ``sigma`` (0 off the interface) and ``region``."""
    fields = {}
    if u is not None:
        fields["u"] = np.asarray(u, float)
    if sigma is not None:
        full = np.zeros(mesh.n_vertices)
        full[interface.vertex_ids] = sigma
        fields["sigma"] = full
    fields["region"] = vertex_regions(mesh, interface)
    return fields


def write_vtk(path: PathLike, mesh: Mesh, fields: dict[str, np.ndarray] | None = None, title: str = "freebound") -> None:
    Path(path).write_text(format_vtk(mesh, fields or {}, title))


# ---------------------------------------------------------------------------
# iteration history

HISTORY_HEADER = "iter,sigma_inf,tau,min_angle,beta"


def _g17(x) -> str:
    return "" if x is None else f"{float(x):.17g}"


def format_history(records) -> str:
    rows = [HISTORY_HEADER]
    for r in records:
        rows.append(f"{r.iteration},{_g17(r.sigma_inf)},{_g17(r.tau)},{_g17(r.min_angle)},{_g17(r.beta)}")
    return "\n".join(rows) + "\n"


def write_history(path: PathLike, records) -> None:
    Path(path).write_text(format_history(records))


def read_history(path: PathLike) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != HISTORY_HEADER:
        raise ParseError("missing history header", 1)
    out = []
    for no, line in enumerate(lines[1:], start=2):
        it, s, tau, ang, beta = line.split(",")
        out.append(dict(iter=int(it), sigma_inf=float(s), tau=float(tau), min_angle=float(ang),
                        beta=float(beta) if beta else None))
    return out


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class ProblemSection:
    kind: str = "bench"  # bench | jet | plasma
    benchmark: str = "known_line"
    jet_example: str = "one"  # one | two | symmetric
    b_lo: float = -0.5
    b_hi: float = 0.5
    b_tol: float = 1e-2
    r_minus: float = -1.0
    r_plus: float = 2.0
    plasma_domain: str = "disk"  # disk | cut


@dataclass
class NumericsSection:
    h: float = 0.05
    epsilon_tol: float = 1e-6
    tau_policy: str = "capped"  # capped | fixed
    tau: float = 1e-4
    cap_fraction: float = 0.2
    tau_max: float = 1.0
    stability_fraction: float = 0.1
    flux_epsilon: float = 0.0
    sigma_form: str = "lambda"
    max_iterations: int = 5000
    retry_limit: int = 10


@dataclass
class OutputSection:
    directory: str = "out"
    snapshot_stride: int = 0


@dataclass
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    output: OutputSection = field(default_factory=OutputSection)

    def validate(self) -> "RunConfig":
        p, n, o = self.problem, self.numerics, self.output
        _choice("problem.kind", p.kind, ("bench", "jet", "plasma"))
        _choice("problem.benchmark", p.benchmark, ("known_line", "heterogeneous_circle"))
        _choice("problem.jet_example", p.jet_example, ("one", "two", "symmetric"))
        _choice("problem.plasma_domain", p.plasma_domain, ("disk", "cut"))
        _choice("numerics.tau_policy", n.tau_policy, ("capped", "fixed"))
        _choice("numerics.sigma_form", n.sigma_form, ("lambda", "lambda2"))
        for key in ("h", "epsilon_tol", "tau", "cap_fraction", "tau_max", "max_iterations"):
            if not getattr(n, key) > 0:
                raise ConfigError(f"numerics.{key} must be positive")
        for key in ("stability_fraction", "flux_epsilon", "retry_limit"):
            if getattr(n, key) < 0:
                raise ConfigError(f"numerics.{key} must be non-negative")
        if not p.b_tol > 0:
            raise ConfigError("problem.b_tol must be positive")
        if not -1.0 < p.b_lo < p.b_hi < 1.0:
            raise ConfigError("problem.b_lo < problem.b_hi must lie in (-1, 1)")
        if not p.r_minus < 0.0 < p.r_plus:
            raise ConfigError("need problem.r_minus < 0 < problem.r_plus")
        if o.snapshot_stride < 0:
            raise ConfigError("output.snapshot_stride must be non-negative")
        return self

    def solver_config(self):
        from .driver import SolverConfig
        from .tracking import TauPolicy

        n = self.numerics
        if n.tau_policy == "fixed":
            policy = TauPolicy.fixed(n.tau)
        else:
            policy = TauPolicy.capped(n.cap_fraction, n.tau_max, n.stability_fraction or None)
        return SolverConfig(
            epsilon_tol=n.epsilon_tol,
            tau_policy=policy,
            max_iterations=n.max_iterations,
            flux_epsilon=n.flux_epsilon,
            sigma_form=n.sigma_form,
            retry_limit=n.retry_limit,
        )


def _choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key} must be one of {', '.join(allowed)}; got {value!r}")


_SECTIONS = ("problem", "numerics", "output")


def _coerce(key, f, raw: str):
    kind = f.type if isinstance(f.type, type) else {"str": str, "float": float, "int": int}[f.type]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in _SECTIONS or not name:
            raise ConfigError(f"line {no}: unknown key {key!r}")
        obj = getattr(cfg, section)
        fields = {f.name: f for f in dataclasses.fields(obj)}
        if name not in fields:
            raise ConfigError(f"line {no}: unknown key {key!r}")
        setattr(obj, name, _coerce(key, fields[name], value))
    return cfg.validate()


def format_config(cfg: RunConfig) -> str:
    lines = []
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            lines.append(f"{section}.{f.name} = {v!r}" if isinstance(v, float) else f"{section}.{f.name} = {v}")
    return "\n".join(lines) + "\n"


def read_config(path: PathLike) -> RunConfig:
    return parse_config(Path(path).read_text())


def write_config(path: PathLike, cfg: RunConfig) -> None:
    Path(path).write_text(format_config(cfg))
