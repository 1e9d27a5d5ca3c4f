"""Experiment configuration, source specs and seed derivation.

Configs are JSON objects. Recognised keys (all optional unless a
subcommand needs them):

``experiment``  free-form name
``master_seed`` integer; required by every randomised subcommand
``source`` / ``confidential`` / ``public``  pmf specs, see :func:`parse_pmf`
``channel``     ``"bsc p1 p2"``, ``"bec e1 e2"`` or a kernel-file path
``n``, ``N``, ``k``  blocklengths (``n`` may be a list for sweeps)
``rate``, ``rate_excess``, ``d``, ``eps``, ``eps0``, ``eps1``, ``beta``
``trials``, ``samples``, ``binning_seeds``  counts
``architecture`` ``"A"`` or ``"B"`` (the seed policy follows from it)

Command-line flags override config values.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..prob import Pmf, example_distribution


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if self.values.get(key) is None:
            raise ConfigError(f"missing required setting {key!r}")
        return self.values[key]

    @property
    def master_seed(self) -> int:
        seed = self.require("master_seed")
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("master_seed must be a nonnegative integer")
        return seed

    def canonical(self) -> str:
        return json.dumps({"experiment": self.experiment, **self.values}, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def component_seed(master_seed: int, label: str) -> int:
    """Stream seed for one component, derived from the master seed and a label."""
    tag = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    state = np.random.SeedSequence([master_seed, tag]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


_KV = re.compile(r"^(\w+)=(.+)$")


def parse_pmf(spec: str) -> tuple[Pmf, dict]:
    """Parse a pmf spec; returns the pmf and any parameters it carried.

    Forms: ``bern p``, ``uniform K``, ``point K [symbol]``,
    ``probs p0,p1,...`` and ``example-dist n=.. alpha=.. rp=..``.
    """
    parts = spec.replace(",", " ").split() if spec.startswith("probs") else spec.split()
    if not parts:
        raise ConfigError("empty pmf spec")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind in ("bern", "bernoulli"):
            (p,) = args
            return Pmf.bernoulli(float(p)), {}
        if kind == "uniform":
            (k,) = args
            return Pmf.uniform(int(k)), {}
        if kind == "point":
            k, *sym = args
            return Pmf.point_mass(int(k), int(sym[0]) if sym else 0), {}
        if kind == "probs":
            return Pmf([float(a) for a in args]), {}
        if kind == "example-dist":
            kv = {}
            for a in args:
                m = _KV.match(a)
                if not m:
                    raise ConfigError(f"expected key=value in {spec!r}")
                kv[m.group(1)] = float(m.group(2))
            n, alpha, rp = int(kv["n"]), kv["alpha"], kv["rp"]
            return example_distribution(n, alpha, rp), {"n": n, "alpha": alpha, "rp": rp}
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"malformed pmf spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown pmf kind {kind!r}")


def ceil_seed_length(c: float, n: int, e: float) -> int:
    """``ceil(c n^e)`` with a guard against float noise at integers."""
    return int(math.ceil(c * n**e - 1e-9))
