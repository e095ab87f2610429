"""JSON run configuration with field-path diagnostics.

Every block except ``system`` and ``grid`` has defaults; see README for the
full schema.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .grid import Grid, GridError, build_grid
from .model import ModelError, SamplingPolicy, SystemSpec
from .solver import DIFFUSION_SCHEMES, SolveControls

_REQUIRED = object()


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


def _get(block: dict, key: str, path: str, default=_REQUIRED, kind=float, positive=False, nonneg=False):
    full = f"{path}.{key}" if path else key
    if key not in block or block[key] is None:
        if default is _REQUIRED:
            raise ConfigError(full, "missing required field")
        return default
    val = block[key]
    if kind in (float, int):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(full, f"expected a number, got {val!r}")
        if kind is int and int(val) != val:
            raise ConfigError(full, f"expected an integer, got {val!r}")
        val = kind(val)
        if positive and not val > 0:
            raise ConfigError(full, f"must be > 0, got {val}")
        if nonneg and val < 0:
            raise ConfigError(full, f"must be >= 0, got {val}")
    elif kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(full, f"expected true/false, got {val!r}")
    elif kind is str:
        if not isinstance(val, str):
            raise ConfigError(full, f"expected a string, got {val!r}")
    elif kind is list:
        if not isinstance(val, list):
            raise ConfigError(full, f"expected a list, got {val!r}")
    elif kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(full, f"expected an object, got {val!r}")
    return val


def _block(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigError(key, "expected an object")
    return val


@dataclass
class AveragesConfig:
    horizon: float = 200.0
    min_window: float = 50.0
    dt: float = 1e-2
    method: str = "auto"


@dataclass
class CertificateConfig:
    epsilon: float | None = None
    epsilon_start: float = 0.1
    epsilon_min: float = 1e-6
    delta_override: tuple[float, float] | None = None
    sampling: SamplingPolicy = field(default_factory=SamplingPolicy)


@dataclass
class VerifyConfig:
    tol_rel: float = 1e-2
    tol_entry: float = 1e-6
    tol_model: float | None = None
    window: float = 8.0
    min_fraction: float = 0.99
    init_kind: str = "random_box"
    v_scale: float = 1.2
    clip: bool = True
    levels: list | None = None
    fields_every: int = 100
    checks: tuple[str, ...] = ("envelope", "supnorm", "inequality", "sandwich", "measured_rate")


VERIFY_CHECKS = ("envelope", "supnorm", "inequality", "chain", "sandwich", "measured_rate")
INIT_KINDS = ("random_box", "constant", "equal")


@dataclass
class ProbeConfig:
    t2: tuple[float, ...] = (2.0, 4.0)
    r: float = 1e-3
    eps_target: float = 1e-2
    horizon: float = 10.0
    record_every: int = 10


@dataclass
class SweepAxis:
    paths: tuple[str, ...]
    values: tuple


@dataclass
class RunConfig:
    raw: dict
    spec: SystemSpec
    grid: Grid
    solver: SolveControls
    averages: AveragesConfig
    certificate: CertificateConfig
    verify: VerifyConfig
    probe: ProbeConfig
    sweep_axes: list[SweepAxis]
    sweep_verify: bool
    output: str
    seed: int

    def sha256(self) -> str:
        return canonical_hash(self.raw)

    def spec_sha256(self) -> str:
        return canonical_hash(self.spec.to_dict())


def canonical_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    raw = copy.deepcopy(raw)

    sysd = _block(raw, "system")
    for key in ("a0", "b0"):
        _get(sysd, key, "system", kind=list)
    try:
        spec = SystemSpec.from_dict(sysd)
    except (ModelError, TypeError, ValueError) as exc:
        head = str(exc).split(" ", 1)[0]
        raise ConfigError(f"system.{head}" if head in sysd else "system", str(exc)) from exc

    g = _block(raw, "grid")
    dim = _get(g, "dim", "grid", 1, int)
    extents = _get(g, "extents", "grid", kind=list)
    nodes = _get(g, "nodes", "grid", kind=list)
    try:
        grid = build_grid(dim, extents, nodes)
    except (GridError, TypeError, ValueError) as exc:
        raise ConfigError("grid", str(exc)) from exc

    s = _block(raw, "solver")
    diffusion = _get(s, "diffusion", "solver", "backward_euler", str)
    if diffusion not in DIFFUSION_SCHEMES:
        raise ConfigError("solver.diffusion", f"must be one of {DIFFUSION_SCHEMES}")
    splitting = _get(s, "splitting", "solver", "strang", str)
    if splitting != "strang":
        raise ConfigError("solver.splitting", "only 'strang' is supported")
    solver = SolveControls(
        dt=_get(s, "dt", "solver", 1e-3, positive=True),
        t_end=_get(s, "t_end", "solver", 10.0, positive=True),
        record_every=_get(s, "record_every", "solver", 10, int, positive=True),
        positivity_floor=_get(s, "positivity_floor", "solver", 1e-300, nonneg=True),
        splitting=splitting,
        diffusion=diffusion,
    )

    a = _block(raw, "averages")
    averages = AveragesConfig(
        horizon=_get(a, "horizon", "averages", 200.0, positive=True),
        min_window=_get(a, "min_window", "averages", 50.0, positive=True),
        dt=_get(a, "dt", "averages", 1e-2, positive=True),
        method=_get(a, "method", "averages", "auto", str),
    )
    if averages.method not in ("auto", "exact_periodic", "finite_horizon"):
        raise ConfigError("averages.method", "must be auto, exact_periodic or finite_horizon")
    if averages.min_window >= averages.horizon:
        raise ConfigError("averages.min_window", "must be smaller than averages.horizon")

    c = _block(raw, "certificate")
    override = c.get("delta_override")
    if override is not None:
        if (not isinstance(override, list) or len(override) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in override)):
            raise ConfigError("certificate.delta_override", "expected [delta_lower, delta_upper]")
        if not 0 < override[0] <= override[1]:
            raise ConfigError("certificate.delta_override", "need 0 < delta_lower <= delta_upper")
        override = (float(override[0]), float(override[1]))
    samp = _get(c, "sampling", "certificate", {}, dict)
    sp = "certificate.sampling"
    certificate = CertificateConfig(
        epsilon=_get(c, "epsilon", "certificate", None, positive=True),
        epsilon_start=_get(c, "epsilon_start", "certificate", 0.1, positive=True),
        epsilon_min=_get(c, "epsilon_min", "certificate", 1e-6, positive=True),
        delta_override=override,
        sampling=SamplingPolicy(
            grid=grid,
            horizon=_get(samp, "horizon", sp, 20.0, positive=True),
            dt=_get(samp, "dt", sp, 0.05, positive=True),
            u_points=_get(samp, "u_points", sp, 17, int, positive=True),
            u_max=_get(samp, "u_max", sp, 10.0, positive=True),
        ),
    )

    v = _block(raw, "verify")
    init = _get(v, "init", "verify", {}, dict)
    checks = _get(v, "checks", "verify", list(VerifyConfig.checks), list)
    for i, name in enumerate(checks):
        if name not in VERIFY_CHECKS:
            raise ConfigError(f"verify.checks[{i}]", f"unknown check {name!r}; known: {VERIFY_CHECKS}")
    init_kind = _get(init, "kind", "verify.init", "random_box", str)
    if init_kind not in INIT_KINDS:
        raise ConfigError("verify.init.kind", f"must be one of {INIT_KINDS}")
    verify = VerifyConfig(
        tol_rel=_get(v, "tol_rel", "verify", 1e-2, nonneg=True),
        tol_entry=_get(v, "tol_entry", "verify", 1e-6, nonneg=True),
        tol_model=_get(v, "tol_model", "verify", None, nonneg=True),
        window=_get(v, "window", "verify", 8.0, positive=True),
        min_fraction=_get(v, "min_fraction", "verify", 0.99, nonneg=True),
        init_kind=init_kind,
        v_scale=_get(init, "v_scale", "verify.init", 1.2, positive=True),
        clip=_get(init, "clip", "verify.init", True, bool),
        levels=_get(init, "levels", "verify.init", None, list),
        fields_every=_get(v, "fields_every", "verify", 100, int, positive=True),
        checks=tuple(checks),
    )
    if verify.init_kind == "constant" and verify.levels is None:
        raise ConfigError("verify.init.levels", "required when init.kind is 'constant'")

    p = _block(raw, "probe")
    t2 = _get(p, "t2", "probe", [2.0, 4.0], list)
    for i, val in enumerate(t2):
        if isinstance(val, bool) or not isinstance(val, (int, float)) or val < 0:
            raise ConfigError(f"probe.t2[{i}]", f"expected a time >= 0, got {val!r}")
    probe = ProbeConfig(
        t2=tuple(float(x) for x in t2),
        r=_get(p, "r", "probe", 1e-3, nonneg=True),
        eps_target=_get(p, "eps_target", "probe", 1e-2, positive=True),
        horizon=_get(p, "horizon", "probe", 10.0, positive=True),
        record_every=_get(p, "record_every", "probe", 10, int, positive=True),
    )

    sw = _block(raw, "sweep")
    axes = []
    for i, ax in enumerate(_get(sw, "axes", "sweep", [], list)):
        where = f"sweep.axes[{i}]"
        if not isinstance(ax, dict):
            raise ConfigError(where, "expected an object with paths/values")
        paths = ax.get("paths", [ax["path"]] if "path" in ax else None)
        if not paths or not all(isinstance(q, str) for q in paths):
            raise ConfigError(where + ".paths", "expected a non-empty list of dotted paths")
        values = _get(ax, "values", where, kind=list)
        for q in paths:
            try:
                get_path(raw, q)
            except (KeyError, IndexError, TypeError):
                raise ConfigError(where + ".paths", f"path {q!r} does not exist in the config") from None
        axes.append(SweepAxis(tuple(paths), tuple(values)))

    return RunConfig(
        raw=raw,
        spec=spec,
        grid=grid,
        solver=solver,
        averages=averages,
        certificate=certificate,
        verify=verify,
        probe=probe,
        sweep_axes=axes,
        sweep_verify=_get(sw, "verify", "sweep", False, bool),
        output=_get(raw, "output", "", "out", str),
        seed=_get(raw, "seed", "", 0, int, nonneg=True),
    )


def _split(path: str):
    parts = []
    for tok in path.split("."):
        parts.append(int(tok) if tok.lstrip("-").isdigit() else tok)
    return parts


def get_path(obj, path: str):
    for tok in _split(path):
        obj = obj[tok]
    return obj


def set_path(obj, path: str, value) -> None:
    *head, last = _split(path)
    for tok in head:
        obj = obj[tok]
    obj[last] = value
