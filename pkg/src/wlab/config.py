"""Run configuration: a YAML document with fixed blocks and documented defaults."""
import copy
import hashlib
import json

import yaml

from .errors import WlabError


class ConfigError(WlabError):
    pass


DEFAULTS = {
    "potential": {
        "theta": 0.0,            # exponent in 1 - |x1|^(1+theta)
        "variant": "line",       # line | point | smooth | free
        "cutoff": "bump-integral",
    },
    "schedule": {
        "eps": 0.0125,           # ignored when log_eps is set
        "log_eps": None,
        "T": None,               # None: transit time of the launch configuration
        "C_margin": None,        # None: T + 1
    },
    "data": {
        "kind": "symmetric",     # symmetric | one-sided | two-lobe | skewed
        "space_dims": 2,
        "X": 2.0,
        "K": 1.0,
        "offset": 0.0,
        "k1": 0.0,
        "delta_x": None,         # None: schedule value
        "delta_k": None,
    },
    "quantum": {
        "dt": None,              # None: min(sqrt(eps)/10, T/2000)
        "nodes": [2, 2, 1, 1],   # tensor quadrature nodes per phase-space axis
        "sampling": "quadrature",  # quadrature | random | sobol
        "n_atoms": 64,           # used by random and sobol sampling
        "batch": 1,
    },
    "classical": {
        "dt": None,              # None: min(1e-3, T/1000)
        "nodes": 16,
    },
    "experiment": {
        "eps_list": [1e-2, 3.1622776601683794e-3, 1e-3, 3.1622776601683794e-4],
        "log_eps_list": [-40.0, -80.0, -120.0, -160.0, -200.0, -240.0, -280.0, -320.0, -360.0, -400.0],
        "K_list": [0.1, 0.3, 0.5, 1.0, 1.5],
        "eta_list": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        "C": 2.0,                # amplitude of the alternating offset
        "m_list": [77, 78, 79, 80],
        "quantum": False,
        "zeta": None,            # None: (log eps)^2
        "samples": 200,
    },
    "output": {
        "out_dir": None,         # None: $WLAB_OUT_DIR, then ./wlab-out
        "svg": True,
    },
}


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            valid = ", ".join(sorted(base))
            raise ConfigError(f"unknown key {where!r}; valid keys here: {valid}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping (default: {base[key]!r})")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


class RunConfig:
    def __init__(self, data=None):
        self.data = copy.deepcopy(DEFAULTS)
        if data:
            if not isinstance(data, dict):
                raise ConfigError("configuration must be a mapping of blocks")
            _merge(self.data, data)

    @classmethod
    def from_yaml(cls, text):
        try:
            return cls(yaml.safe_load(text) or {})
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from None

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_yaml(fh.read())

    def to_yaml(self):
        return yaml.safe_dump(self.data, sort_keys=True)

    def set(self, dotted, value):
        """Override ``block.key`` with a YAML-parsed value."""
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override {dotted!r} must look like block.key")
        block, key = parts
        if block not in self.data:
            raise ConfigError(f"unknown block {block!r}; valid blocks: {', '.join(sorted(self.data))}")
        if key not in self.data[block]:
            raise ConfigError(f"unknown key {dotted!r}; valid keys here: {', '.join(sorted(self.data[block]))}")
        parsed = yaml.safe_load(value) if isinstance(value, str) else value
        if isinstance(parsed, str):
            # YAML 1.1 reads "1e-3" as a string
            try:
                parsed = float(parsed)
            except ValueError:
                pass
        self.data[block][key] = parsed

    def __getitem__(self, block):
        return self.data[block]

    def hash(self):
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data


def default_of(dotted):
    block, key = dotted.split(".")
    return DEFAULTS[block][key]
