"""Experiment configuration: documented key=value schema with validation.

One config file per experiment.  Physical parameters (flow.rho, flow.mu)
have no implicit defaults: they parse as unset and are demanded by the
subcommands that use them.  Unknown keys are rejected with a suggestion.
"""

import difflib
import math
import os
from dataclasses import dataclass, field as dc_field

from .errors import ConfigError


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default); None default means "unset until provided"
SCHEMA = {
    "experiment.name": (str, "run"),
    "grid.n_modes": (int, 32),
    "grid.box_length": (float, 1.0),
    "flow.rho": (float, None),
    "flow.mu": (float, None),
    "flow.delta": (float, 1.0),
    "flow.eta": (float, 1.0),
    "solver.dt": (float, 1e-3),
    "solver.t_end": (float, 1.0),
    "solver.sample_interval": (float, 0.05),
    "solver.cfl_limit": (float, 0.5),
    "solver.vorticity_ceiling": (float, math.inf),
    "solver.initial": (str, "taylor-green"),
    "verify.time": (float, 0.3),
    "blowup.coeff": (float, 1.0),
    "blowup.t_star": (float, 1.0),
    "blowup.sign": (int, 1),
    "blowup.j_min": (int, 2),
    "blowup.j_max": (int, 8),
    "blowup.t_max": (float, 2.0),
    "blowup.samples": (int, 201),
    "logistic.a": (float, -1.0),
    "logistic.a2": (float, 1.0),
    "logistic.c1": (float, 1.0),
    "logistic.epsilon": (float, 0.1),
    "lattice.cell_scale": (float, 2.0),
    "lattice.eta": (float, 1.0),
    "wave.c": (float, 1.0),
    "wave.samples": (int, 25),
    "hardy.p": (float, 2.0),
    "hardy.n": (int, 3),
    "fields.spatial_factor": (str, "sin(x)*sin(y)*sin(z)"),
    "dump.family": (str, "taylor-green"),
    "dump.time": (float, 0.0),
    "dump.interval": (float, 0.0),
    "output.dir": (str, "out"),
    "plots.enabled": (_bool, True),
    "seed": (int, 0),
    "jobs": (int, 1),
    "tol.residual": (float, 1e-10),
    "tol.energy": (float, 1e-6),
    "tol.identity": (float, 1e-6),
    "tol.wave": (float, 1e-10),
    "tol.reduction": (float, 1e-8),
    "tol.exponent": (float, 0.02),
}


@dataclass
class RunConfig:
    """Validated experiment configuration."""

    values: dict = dc_field(default_factory=dict)

    def get(self, key):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key=key)
        return self.values.get(key, SCHEMA[key][1])

    def require(self, key):
        val = self.get(key)
        if val is None:
            raise ConfigError(
                f"{key} must be set explicitly for this subcommand", key=key
            )
        return val

    def set(self, key, raw):
        if key not in SCHEMA:
            suggestion = _suggest(key)
            hint = f"; did you mean {suggestion!r}?" if suggestion else ""
            raise ConfigError(f"unknown config key {key!r}{hint}", key=key)
        parser = SCHEMA[key][0]
        try:
            self.values[key] = parser(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid value for {key}: {raw!r} ({err})", key=key)

    def snapshot(self):
        """Full effective configuration (defaults included), key-sorted."""
        out = {}
        for key in sorted(SCHEMA):
            val = self.get(key)
            out[key] = val if val is None or isinstance(val, (int, float, bool)) else str(val)
        return out


def _suggest(key):
    def ratio(a, b):
        return difflib.SequenceMatcher(None, a.lower(), b.lower()).ratio()

    sec, _, rest = key.partition(".")

    def score(candidate):
        csec, _, crest = candidate.partition(".")
        sectioned = 0.8 * ratio(sec, csec) + 0.2 * ratio(rest or sec, crest or csec)
        return max(ratio(key, candidate), sectioned)

    best = max(SCHEMA, key=score)
    return best if score(best) >= 0.4 else None


def parse_config(path):
    """Read and validate a key=value config file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cfg = RunConfig()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{path}:{lineno}: expected key=value, got {stripped!r}"
                )
            key, _, raw = stripped.partition("=")
            cfg.set(key.strip(), raw.strip())
    validate(cfg)
    return cfg


def validate(cfg):
    """Check every numeric entry against the module preconditions."""

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg} (got {cfg.get(key)!r})", key=key)

    n = cfg.get("grid.n_modes")
    if n % 2 != 0 or n < 4:
        fail("grid.n_modes", "must be even and >= 4")
    if cfg.get("grid.box_length") <= 0:
        fail("grid.box_length", "must be positive")
    for key in ("flow.rho", "flow.mu"):
        val = cfg.get(key)
        if val is not None and val <= 0:
            fail(key, "must be positive")
    for key in ("flow.delta", "flow.eta", "lattice.cell_scale", "lattice.eta",
                "wave.c", "blowup.coeff", "blowup.t_star", "logistic.c1"):
        if cfg.get(key) <= 0:
            fail(key, "must be positive")
    if cfg.get("blowup.sign") not in (1, -1):
        fail("blowup.sign", "must be +1 or -1")
    if cfg.get("logistic.a2") == 0:
        fail("logistic.a2", "must be nonzero")
    if cfg.get("logistic.epsilon") <= 0:
        fail("logistic.epsilon", "must be positive")
    if cfg.get("solver.dt") <= 0:
        fail("solver.dt", "must be positive")
    if cfg.get("solver.t_end") < 0:
        fail("solver.t_end", "must be nonnegative")
    if cfg.get("solver.sample_interval") <= 0:
        fail("solver.sample_interval", "must be positive")
    if cfg.get("solver.initial") not in ("taylor-green", "random"):
        fail("solver.initial", "must be 'taylor-green' or 'random'")
    j_min, j_max = cfg.get("blowup.j_min"), cfg.get("blowup.j_max")
    if not (2 <= j_min < j_max <= 12):
        fail("blowup.j_min", "need 2 <= j_min < j_max <= 12")
    p, dim = cfg.get("hardy.p"), cfg.get("hardy.n")
    if not (2 <= dim and 1 <= p < dim):
        fail("hardy.p", "need 1 <= p < n and n >= 2")
    if cfg.get("dump.family") not in ("taylor-green", "lattice", "separable"):
        fail("dump.family", "must be taylor-green, lattice or separable")
    if cfg.get("jobs") < 1:
        fail("jobs", "must be >= 1")
    if cfg.get("blowup.samples") < 2:
        fail("blowup.samples", "must be >= 2")
    return cfg
