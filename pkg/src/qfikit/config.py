"""JSON model configuration.

Schema::

    {
      "kind": "generic" | "xstate",
      "rho0": [[[re, im], ...], ...],          # generic only
      "generators": [matrix, ...] | ["alpha", "beta"],
      "xstate": {"a": .., "b": .., "c": .., "d": .., "w": [re, im]},
      "theta": [..],
      "numerics": {"rank_tol": .., "degeneracy_tol": .., "fd_step_first": ..,
                   "fd_step_second": .., "fs_delta": ..}
    }

Matrix entries may be plain numbers (real) or ``[re, im]`` pairs.
"""

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .derivs import DEGENERACY_TOL, FD_STEP_FIRST, FD_STEP_SECOND
from .errors import ValidationError
from .fidelity import FS_DELTA
from .hermlin import as_hermitian
from .states import RANK_TOL, UnitaryFamily, density_matrix
from .xstate import GENERATORS, XStateParams, xstate_density

KINDS = ("generic", "xstate")
TOP_LEVEL_KEYS = {"kind", "rho0", "generators", "xstate", "theta", "numerics"}


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class Numerics:
    rank_tol: float = RANK_TOL
    degeneracy_tol: float = DEGENERACY_TOL
    fd_step_first: float = FD_STEP_FIRST
    fd_step_second: float = FD_STEP_SECOND
    fs_delta: float = FS_DELTA

    def derivative_kwargs(self):
        return {
            "rank_tol": self.rank_tol,
            "degeneracy_tol": self.degeneracy_tol,
            "fd_step_first": self.fd_step_first,
        }


@dataclass(frozen=True, eq=False)
class ModelConfig:
    kind: str
    rho0: np.ndarray
    generators: tuple
    generator_labels: tuple
    theta: np.ndarray
    numerics: Numerics = field(default_factory=Numerics)
    xstate: XStateParams = None

    @property
    def dim(self):
        return self.rho0.shape[0]

    @property
    def n_params(self):
        return len(self.generators)

    def family(self):
        return UnitaryFamily(self.rho0, self.generators)

    def with_numerics(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, numerics=replace(self.numerics, **overrides))

    def echo(self):
        out = {"kind": self.kind}
        if self.xstate is not None:
            p = self.xstate
            out["xstate"] = {"a": p.a, "b": p.b, "c": p.c, "d": p.d, "w": p.w}
        else:
            out["rho0"] = self.rho0
        out["generators"] = [
            label if isinstance(label, str) else g
            for label, g in zip(self.generator_labels, self.generators)
        ]
        out["theta"] = self.theta
        out["numerics"] = {f.name: getattr(self.numerics, f.name) for f in fields(self.numerics)}
        return out


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _entry(value, where):
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(f"{where}: complex entries must be [re, im] pairs")
        return complex(_number(value[0], where + "[0]"), _number(value[1], where + "[1]"))
    return complex(_number(value, where))


def _matrix(value, where):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    n = len(value)
    for i, row in enumerate(value):
        if len(row) != n:
            raise ConfigError(f"{where}: row {i} has {len(row)} entries, expected {n} (matrix must be square)")
    return np.array(
        [[_entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(value)],
        dtype=complex,
    )


def _numerics(raw):
    if raw is None:
        return Numerics()
    if not isinstance(raw, dict):
        raise ConfigError("numerics: expected an object")
    known = {f.name for f in fields(Numerics)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"numerics: unknown keys {sorted(unknown)}")
    values = {k: _number(v, f"numerics.{k}") for k, v in raw.items()}
    for k, v in values.items():
        if not v > 0:
            raise ConfigError(f"numerics.{k}: must be positive, got {v}")
    return Numerics(**values)


def config_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a JSON object")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {KINDS}, got {kind!r}")

    params = None
    if kind == "xstate":
        xs = raw.get("xstate")
        if not isinstance(xs, dict):
            raise ConfigError("xstate: required object with keys a, b, c, d, w")
        missing = {"a", "b", "c", "d"} - set(xs)
        if missing:
            raise ConfigError(f"xstate: missing keys {sorted(missing)}")
        w = _entry(xs.get("w", 0.0), "xstate.w")
        params = XStateParams(*(_number(xs[k], f"xstate.{k}") for k in "abcd"), w)
        rho0 = xstate_density(params)
        gens_raw = raw.get("generators", ["alpha"])
    else:
        if "rho0" not in raw:
            raise ConfigError("rho0: required for kind 'generic'")
        rho0 = _matrix(raw["rho0"], "rho0")
        if "generators" not in raw:
            raise ConfigError("generators: required for kind 'generic'")
        gens_raw = raw["generators"]
    rho0 = density_matrix(rho0, name="rho0")

    if not isinstance(gens_raw, list) or not gens_raw:
        raise ConfigError("generators: expected a non-empty list")
    generators, labels = [], []
    for k, g in enumerate(gens_raw):
        where = f"generators[{k}]"
        if isinstance(g, str):
            if g not in GENERATORS or kind != "xstate":
                raise ConfigError(f"{where}: named generator {g!r} is only valid for xstate ('alpha' or 'beta')")
            generators.append(GENERATORS[g])
            labels.append(g)
        else:
            generators.append(as_hermitian(_matrix(g, where), name=where))
            labels.append(None)
        if generators[-1].shape != rho0.shape:
            raise ConfigError(f"{where}: shape {generators[-1].shape} does not match rho0 {rho0.shape}")

    theta_raw = raw.get("theta", [0.0] * len(generators))
    if not isinstance(theta_raw, list):
        raise ConfigError("theta: expected a list of numbers")
    theta = np.array([_number(t, f"theta[{k}]") for k, t in enumerate(theta_raw)])
    if len(theta) != len(generators):
        raise ConfigError(f"theta: length {len(theta)} does not match {len(generators)} generators")

    return ModelConfig(kind, rho0, tuple(generators), tuple(labels), theta, _numerics(raw.get("numerics")), params)


def parse_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)
