"""Plain-text run configuration: parsing, validation, template emission."""

from __future__ import annotations

import configparser
import io as _io
import math
from dataclasses import dataclass

from .model import Discretization, DomainSpec, ModelParams
from .pic import AssignmentOrder
from .exprs import compile_expression
from .simulator import InitialData, RunConfig, benchmark_2d, benchmark_3d


class ConfigError(ValueError):
    """Invalid or incomplete configuration file."""


_MODEL_KEYS = ("chi", "d_u", "d_m", "d_w", "alpha", "beta", "gamma")

# (required, parser, default) per section/key
_SCHEMA = {
    "model": {k: (True, float, None) for k in _MODEL_KEYS},
    "domain": {
        "dim": (True, int, None),
        "length": (True, float, None),
        "origin": (False, str, None),
    },
    "discretization": {
        "h_modes": (True, int, None),
        "h0_cutoff": (False, int, None),  # defaults to h_modes
        "dt": (True, float, None),
        "t_final": (True, float, None),
        "n_particles": (True, int, None),
    },
    "run": {
        "seed": (False, int, 0),
        "deposit_order": (False, str, "quartic4"),
        "interp_order": (False, str, "linear2"),
        "kernel_flavor": (False, str, "aliased"),
        "filter": (False, str, "sharp"),
        "v_update": (False, str, "implicit"),
        "strict_positive": (False, bool, False),
        "resample_mode": (False, str, "off"),
        "resample_every": (False, int, 100),
        "resample_threshold": (False, float, math.exp(4.0)),
        "snapshot_every": (False, int, 0),
        "plot_grid": (False, int, 0),
        "output_dir": (False, str, None),
        "threads": (False, int, 1),
    },
    "initial": {
        "kind": (True, str, None),
        "u0": (False, str, None),
        "v0": (False, str, None),
        "m0": (False, str, None),
        "w0": (False, str, None),
        "u0_bound": (False, float, None),
    },
}

_INITIAL_KINDS = ("benchmark2d", "benchmark3d", "custom")


@dataclass(frozen=True)
class InitialSpec:
    """Serializable initial-condition selector."""

    kind: str
    expressions: dict = None
    u0_bound: float = None

    def make(self, dim: int) -> InitialData:
        if self.kind == "benchmark2d":
            if dim != 2:
                raise ConfigError("initial.kind benchmark2d requires domain.dim = 2")
            return benchmark_2d()
        if self.kind == "benchmark3d":
            if dim != 3:
                raise ConfigError("initial.kind benchmark3d requires domain.dim = 3")
            return benchmark_3d()
        funcs = {name: compile_expression(self.expressions[name]) for name in ("u0", "v0", "m0", "w0")}
        return InitialData(u0=funcs["u0"], v0=funcs["v0"], m0=funcs["m0"], w0=funcs["w0"], u0_bound=self.u0_bound)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(section: str, key: str, text: str, caster):
    try:
        if caster is bool:
            return _parse_bool(text)
        return caster(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}") from None


def parse_config_text(text: str):
    """Parse configuration text into (RunConfig, InitialSpec)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key, (required, caster, default) in keys.items():
            if parser.has_option(section, key):
                values[section][key] = _convert(section, key, parser.get(section, key), caster)
            elif required:
                raise ConfigError(f"missing required key {section}.{key}")
            else:
                values[section][key] = default

    try:
        params = ModelParams(**values["model"])
    except ValueError as exc:
        raise ConfigError(f"[model]: {exc}") from None

    origin_text = values["domain"]["origin"]
    origin = None
    if origin_text is not None:
        try:
            origin = tuple(float(part) for part in origin_text.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"bad value for domain.origin: {origin_text!r}") from None
    try:
        domain = DomainSpec(dim=values["domain"]["dim"], length=values["domain"]["length"], origin=origin)
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from None

    d = dict(values["discretization"])
    if d["h0_cutoff"] is None:
        d["h0_cutoff"] = d["h_modes"]
    try:
        disc = Discretization(**d)
    except ValueError as exc:
        raise ConfigError(f"[discretization]: {exc}") from None

    r = values["run"]
    try:
        deposit_order = AssignmentOrder.parse(r["deposit_order"])
        interp_order = AssignmentOrder.parse(r["interp_order"])
    except ValueError as exc:
        raise ConfigError(f"[run]: {exc}") from None
    if r["kernel_flavor"] not in ("aliased", "theoretical"):
        raise ConfigError(f"bad value for run.kernel_flavor: {r['kernel_flavor']!r}")
    if r["filter"] not in ("sharp", "gaussian", "off"):
        raise ConfigError(f"bad value for run.filter: {r['filter']!r}")
    if r["v_update"] not in ("implicit", "explicit_kernel"):
        raise ConfigError(f"bad value for run.v_update: {r['v_update']!r}")
    if r["resample_mode"] not in ("off", "every", "ratio"):
        raise ConfigError(f"bad value for run.resample_mode: {r['resample_mode']!r}")

    init = values["initial"]
    kind = init["kind"].strip().lower()
    if kind not in _INITIAL_KINDS:
        raise ConfigError(f"bad value for initial.kind: {init['kind']!r} (use {'|'.join(_INITIAL_KINDS)})")
    if kind == "custom":
        missing = [k for k in ("u0", "v0", "m0", "w0", "u0_bound") if init[k] is None]
        if missing:
            raise ConfigError(f"missing required key initial.{missing[0]} (custom initial data)")
        spec = InitialSpec(kind=kind, expressions={k: init[k] for k in ("u0", "v0", "m0", "w0")},
                           u0_bound=init["u0_bound"])
    else:
        spec = InitialSpec(kind=kind)
    # fail fast on malformed expressions / dim mismatches
    spec.make(domain.dim)

    config = RunConfig(
        params=params,
        domain=domain,
        disc=disc,
        seed=r["seed"],
        deposit_order=deposit_order,
        interp_order=interp_order,
        kernel_flavor=r["kernel_flavor"],
        filter_kind=r["filter"],
        v_update=r["v_update"],
        strict_positive=r["strict_positive"],
        resample_mode=r["resample_mode"],
        resample_every=r["resample_every"],
        resample_threshold=r["resample_threshold"],
        snapshot_every=r["snapshot_every"],
        plot_grid=r["plot_grid"],
        output_dir=r["output_dir"],
        threads=r["threads"],
    )
    return config, spec


def parse_config(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def render_config(config: RunConfig, spec: InitialSpec) -> str:
    """Emit a config file that parses back to exactly these settings."""
    parser = configparser.ConfigParser()
    parser["model"] = {k: repr(getattr(config.params, k)) for k in _MODEL_KEYS}
    parser["domain"] = {
        "dim": str(config.domain.dim),
        "length": repr(config.domain.length),
        "origin": " ".join(repr(x) for x in config.domain.origin),
    }
    parser["discretization"] = {
        "h_modes": str(config.disc.h_modes),
        "h0_cutoff": str(config.disc.h0_cutoff),
        "dt": repr(config.disc.dt),
        "t_final": repr(config.disc.t_final),
        "n_particles": str(config.disc.n_particles),
    }
    parser["run"] = {
        "seed": str(config.seed),
        "deposit_order": config.deposit_order.value,
        "interp_order": config.interp_order.value,
        "kernel_flavor": config.kernel_flavor,
        "filter": config.filter_kind,
        "v_update": config.v_update,
        "strict_positive": str(config.strict_positive).lower(),
        "resample_mode": config.resample_mode,
        "resample_every": str(config.resample_every),
        "resample_threshold": repr(config.resample_threshold),
        "snapshot_every": str(config.snapshot_every),
        "plot_grid": str(config.plot_grid),
        "threads": str(config.threads),
    }
    if config.output_dir:
        parser["run"]["output_dir"] = config.output_dir
    parser["initial"] = {"kind": spec.kind}
    if spec.kind == "custom":
        for key, expr in spec.expressions.items():
            parser["initial"][key] = expr
        parser["initial"]["u0_bound"] = repr(spec.u0_bound)
    buffer = _io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


_TEMPLATE_HEADER = """\
# sipfw run configuration
#
# Units: lengths in box units, times in simulation time units, rates in
# 1/time, diffusivities in length^2/time. The box is [origin, origin+length]
# per axis with periodic boundaries. dt must not exceed 0.5. h0_cutoff
# defaults to h_modes; filter is one of sharp|gaussian|off; orders are
# linear2|quartic4; kernel_flavor is aliased|theoretical; v_update is
# implicit|explicit_kernel; resample_mode is off|every|ratio.
# initial.kind is benchmark2d|benchmark3d|custom; custom requires the
# expressions u0, v0, m0, w0 (variables x1..x3, functions cos, sin, exp,
# abs, max, constant pi) and u0_bound, an upper bound for u0 used by the
# rejection sampler.
"""


def template(kind: str = "benchmark2d") -> str:
    """Configuration template for `sipfw init-config`."""
    if kind not in _INITIAL_KINDS:
        raise ConfigError(f"unknown template kind {kind!r}")
    dim = 3 if kind == "benchmark3d" else 2
    lines = [
        _TEMPLATE_HEADER,
        "[model]",
        "chi = 0.4",
        "d_u = 0.01",
        "d_m = 0.01",
        "d_w = 0.01",
        "alpha = 5.0",
        "beta = 0.01",
        "gamma = 5.0",
        "",
        "[domain]",
        f"dim = {dim}",
        "length = 6.0",
        f"origin = {' '.join(['0.0'] * dim)}",
        "",
        "[discretization]",
        "h_modes = 64",
        "h0_cutoff = 64",
        "dt = 0.001",
        "t_final = 1.0",
        "n_particles = 65536",
        "",
        "[run]",
        "seed = 1",
        "deposit_order = quartic4",
        "interp_order = linear2",
        "kernel_flavor = aliased",
        "filter = sharp",
        "v_update = implicit",
        "resample_mode = off",
        "snapshot_every = 0",
        "output_dir = out",
        "threads = 1",
        "",
        "[initial]",
        f"kind = {kind}",
    ]
    if kind == "custom":
        lines += [
            "u0 = max(0.3 - (x1 - 3.0)*(x1 - 3.0) - (x2 - 3.0)*(x2 - 3.0), 0.0)",
            "v0 = 0.3",
            "m0 = 0.0",
            "w0 = 1.2",
            "u0_bound = 0.3",
        ]
    return "\n".join(lines) + "\n"
