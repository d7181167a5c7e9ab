"""Model specification files (YAML, or JSON) and result records.

Example::

    process:
      drift: 1.5
      sigma: 0.0
      jump_rate: 1.0
      jumps:
        - {weight: 1.0, rate: 1.0}
    refraction:
      alpha: 0.25
      b: 1.0
    defaults:
      quadrature: {epsabs: 1.0e-10, epsrel: 1.0e-9}
      simulation: {n_paths: 100000, horizon: 1000, dt: 0.001, seed: 12345}
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml

from . import __version__
from .errors import ModelError
from .levy_model import JumpSpec, LevyModel, RefractedModel
from .mc_oracle import SimConfig
from .refracted import QuadTol

_NUM = {"type": "number"}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["process"],
    "properties": {
        "process": {
            "type": "object",
            "additionalProperties": False,
            "required": ["drift"],
            "properties": {
                "drift": _NUM,
                "sigma": _NUM,
                "jump_rate": _NUM,
                "jumps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["weight", "rate"],
                        "properties": {"weight": _NUM, "rate": _NUM},
                    },
                },
            },
        },
        "refraction": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha", "b"],
            "properties": {"alpha": _NUM, "b": _NUM},
        },
        "defaults": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quadrature": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"epsabs": _NUM, "epsrel": _NUM, "limit": {"type": "integer"}},
                },
                "simulation": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "n_paths": {"type": "integer"},
                        "horizon": _NUM,
                        "dt": _NUM,
                        "seed": {"type": "integer"},
                        "antithetic": {"type": "boolean"},
                    },
                },
            },
        },
    },
}


class SpecError(Exception):
    """Invalid model specification; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str = "<spec>", line: int | None = None):
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")
        self.line = line


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e-10" as a string; accept exponent floats without a dot
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _line_map(text: str) -> dict[tuple, int]:
    """Map key paths to 1-based source lines."""
    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return {}
    lines: dict[tuple, int] = {}

    def walk(node, path):
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                lines[path + (k.value,)] = k.start_mark.line + 1
                walk(v, path + (k.value,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))

    if root is not None:
        walk(root, ())
    return lines


@dataclass(frozen=True)
class ModelSpec:
    process: LevyModel
    refraction: RefractedModel | None = None
    quad: QuadTol = QuadTol()
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def rm(self) -> RefractedModel:
        if self.refraction is None:
            raise ModelError("this operation needs a refraction block (alpha, b)", "refraction")
        return self.refraction


def spec_from_dict(data: dict, source: str = "<spec>", lines: dict | None = None) -> ModelSpec:
    lines = lines or {}

    def line_of(path):
        path = tuple(path)
        while path and path not in lines:
            path = path[:-1]
        return lines.get(path)

    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = list(exc.absolute_path)
        if exc.validator == "additionalProperties" and isinstance(exc.instance, dict):
            # point at the first unexpected key rather than its parent block
            extra = [k for k in exc.instance if k not in exc.schema.get("properties", {})]
            path += extra[:1]
        raise SpecError(exc.message, source, line_of(path)) from None

    proc = data["process"]
    try:
        jumps = JumpSpec(
            proc.get("jump_rate", 0.0),
            tuple((t["weight"], t["rate"]) for t in proc.get("jumps", [])),
        )
        x_model = LevyModel(proc["drift"], proc.get("sigma", 0.0), jumps)
        rm = None
        if "refraction" in data:
            r = data["refraction"]
            rm = RefractedModel(x_model, r["alpha"], r["b"])
        d = data.get("defaults", {})
        quad = QuadTol(**d.get("quadrature", {}))
        sim = SimConfig(**d.get("simulation", {}))
    except ModelError as exc:
        raise SpecError(str(exc), source, line_of(exc.field.split(".") if exc.field else ())) from None
    except ValueError as exc:
        raise SpecError(str(exc), source, line_of(("defaults",))) from None
    return ModelSpec(x_model, rm, quad, sim)


def parse_spec(text: str, source: str = "<spec>") -> ModelSpec:
    try:
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            data = yaml.load(text, Loader=_Loader)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot parse: {exc}", source) from None
    if not isinstance(data, dict):
        raise SpecError("top level must be a mapping", source, 1)
    return spec_from_dict(data, source, _line_map(text))


def load_spec(path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read: {exc.strerror}", str(path)) from None
    return parse_spec(text, str(path))


def spec_to_dict(spec: ModelSpec) -> dict:
    m = spec.process
    out = {
        "process": {
            "drift": m.c,
            "sigma": m.sigma,
            "jump_rate": m.jumps.eta,
            "jumps": [{"weight": w, "rate": r} for w, r in m.jumps.terms],
        }
    }
    if spec.refraction is not None:
        out["refraction"] = {"alpha": spec.refraction.alpha, "b": spec.refraction.b}
    s = spec.sim
    out["defaults"] = {
        "quadrature": {"epsabs": spec.quad.epsabs, "epsrel": spec.quad.epsrel, "limit": spec.quad.limit},
        "simulation": {
            "n_paths": s.n_paths,
            "horizon": s.horizon,
            "dt": s.dt,
            "seed": s.seed,
            "antithetic": s.antithetic,
        },
    }
    return out


def dump_spec(spec: ModelSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False)


def model_hash(spec: ModelSpec) -> str:
    """Digest of the process and refraction blocks (defaults excluded)."""
    d = spec_to_dict(spec)
    d.pop("defaults")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


REFERENCE_SPEC = """\
process:
  drift: 1.5
  sigma: 0.0
  jump_rate: 1.0
  jumps:
    - {weight: 1.0, rate: 1.0}
refraction:
  alpha: 0.25
  b: 1.0
"""


def reference_spec() -> ModelSpec:
    return parse_spec(REFERENCE_SPEC, "<reference>")


def record(operation: str, params: dict, value, spec: ModelSpec, **extra) -> dict:
    """One result row; every row carries the model hash and library version."""
    row = {"operation": operation, **params, "value": value}
    row.update(extra)
    row["model_hash"] = model_hash(spec)
    row["version"] = __version__
    return row
