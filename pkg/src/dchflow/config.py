"""Line-based ``key = value`` configuration for runs and studies."""

from .integrator import INITIAL_CONDITIONS, RunConfig
from .io import FORMATS
from .system import DchParams

__all__ = [
    "ConfigError",
    "RUN_KEYS",
    "REQUIRED_KEYS",
    "parse_pairs",
    "parse_config",
    "serialize_config",
    "STUDY_DEFAULTS",
    "study_settings",
]


class ConfigError(ValueError):
    pass


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


def _choice(options):
    def conv(v):
        if v not in options:
            raise ValueError(f"{v!r} is not one of {', '.join(options)}")
        return v
    return conv


def _grids(v):
    out = [int(s) for s in v.replace(",", " ").split()]
    if not out:
        raise ValueError("empty grid list")
    return out


# config key -> (converter, DchParams field or RunConfig field)
RUN_KEYS = {
    "epsilon": (float, "eps"),
    "gamma": (float, "gamma"),
    "tau": (float, "tau"),
    "T": (float, "T"),
    "L": (_int, "L"),
    "n0": (_int, "n0"),
    "lambda": (_int, "sweeps"),
    "tol": (float, "tol"),
    "seed": (_int, "seed"),
    "max_cycles": (_int, "max_cycles"),
    "coarse_sweeps": (_int, "coarse_sweeps"),
    "initial": (_choice(INITIAL_CONDITIONS), "initial"),
    "init_file": (str, "init_file"),
    "snapshot_every": (_int, "snapshot_every"),
    "mms": (_bool, "mms"),
    "format": (_choice(FORMATS), "format"),
    "out_dir": (str, "out_dir"),
}
REQUIRED_KEYS = ("L", "tau", "T", "epsilon", "gamma")
_PARAM_FIELDS = set(DchParams.field_names())


def parse_pairs(text, source="<config>"):
    """``key = value`` lines to a dict; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        out[key] = value
    return out


def _convert(pairs, table):
    unknown = sorted(set(pairs) - set(table))
    if unknown:
        raise ConfigError(
            f"unknown key(s) {', '.join(unknown)}; valid keys: {', '.join(table)}"
        )
    out = {}
    for key, value in pairs.items():
        conv = table[key][0] if isinstance(table[key], tuple) else table[key]
        try:
            out[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return out


def parse_config(text, overrides=None, source="<config>"):
    """Build a :class:`RunConfig`; ``overrides`` (a dict of strings) win over the text."""
    pairs = parse_pairs(text, source)
    pairs.update(overrides or {})
    values = _convert(pairs, RUN_KEYS)
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(
            f"missing required key(s) {', '.join(missing)}; required: {', '.join(REQUIRED_KEYS)}"
        )
    pkw, rkw = {}, {}
    for key, value in values.items():
        name = RUN_KEYS[key][1]
        (pkw if name in _PARAM_FIELDS else rkw)[name] = value
    try:
        params = DchParams(**pkw)
        params.num_steps
        return RunConfig(params, **rkw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(config):
    """Text that :func:`parse_config` maps back to an equal config."""
    lines = []
    for key, (_, name) in RUN_KEYS.items():
        obj = config.params if name in _PARAM_FIELDS else config
        value = getattr(obj, name)
        if value is None:
            continue
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# refinement-study settings; defaults reproduce the reference table setups
STUDY_KEYS = {
    "norm": _choice(("L2", "H1")),
    "path": _choice(("quadratic", "linear")),
    "constant": float,
    "grids": _grids,
    "T": float,
    "epsilon": float,
    "gamma": float,
    "lambda": _int,
    "tol": float,
    "n0": _int,
    "max_cycles": _int,
    "coarse_sweeps": _int,
    "p_gauge": _choice(("mean", "corner")),
}
STUDY_DEFAULTS = {
    "mms-convergence": {
        "norm": "L2", "grids": [16, 32, 64, 128], "T": 1.0, "epsilon": 1.0, "gamma": 1.0,
    },
    "cauchy-convergence": {
        "norm": "L2", "grids": [16, 32, 64, 128], "T": 0.04, "epsilon": 0.0625, "gamma": 0.125,
    },
}
_PATH_FOR_NORM = {"L2": "quadratic", "H1": "linear"}
_CONSTANTS = {
    ("mms-convergence", "quadratic"): 25.6,
    ("mms-convergence", "linear"): 1.6,
    ("cauchy-convergence", "quadratic"): 1.024,
    ("cauchy-convergence", "linear"): 2.0e-3,
}


def study_settings(kind, text="", overrides=None, source="<config>"):
    """Resolved study settings as ``(dict, DchParams)``."""
    pairs = parse_pairs(text, source)
    pairs.update(overrides or {})
    values = dict(STUDY_DEFAULTS[kind])
    values.update(_convert(pairs, STUDY_KEYS))
    values.setdefault("path", _PATH_FOR_NORM[values["norm"]])
    values.setdefault("constant", _CONSTANTS[(kind, values["path"])])
    values.setdefault("p_gauge", "mean")
    try:
        params = DchParams(
            eps=values["epsilon"], gamma=values["gamma"], tau=1.0, T=values["T"],
            sweeps=values.get("lambda", 2), tol=values.get("tol", 1e-12),
            n0=values.get("n0", 1), max_cycles=values.get("max_cycles", 200),
            coarse_sweeps=values.get("coarse_sweeps", 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return values, params
