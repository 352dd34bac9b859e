"""Flat key=value config files with dotted sections.

The format is deliberately tiny: one `key = value` per line, `#` comments,
dotted keys for grouping (process.a = 0.5).  Files hash cleanly, diff
cleanly, and round-trip through the run manifest digest.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError, InvalidSpec
from .montecarlo import ExperimentConfig, make_config
from .processes import (ProcessSpec, ar1_pairs, ar1_regression, censored,
                        iid_pairs, iid_regression, ma_pairs)


def parse_config_text(text) -> dict:
    """Parse config text into an ordered {key: (value, lineno)} mapping."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    return out


def load_config(path) -> tuple[dict, str]:
    """Read a config file; returns (mapping, sha256 hex digest of the bytes)."""
    with open(path, "rb") as fh:
        data = fh.read()
    digest = hashlib.sha256(data).hexdigest()
    return parse_config_text(data.decode("utf-8")), digest


class ConfigView:
    """Typed access with line-aware error messages."""

    def __init__(self, mapping):
        self._map = mapping
        self._used = set()

    def has(self, key):
        return key in self._map

    def raw(self, key, default=None):
        if key in self._map:
            self._used.add(key)
            return self._map[key][0]
        return default

    def _typed(self, key, caster, default, required):
        if key not in self._map:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default
        value, lineno = self._map[key]
        self._used.add(key)
        try:
            return caster(value)
        except (ValueError, TypeError):
            raise ConfigError(
                f"line {lineno}: cannot parse {key} = {value!r}") from None

    def get_float(self, key, default=None, required=False):
        return self._typed(key, float, default, required)

    def get_int(self, key, default=None, required=False):
        return self._typed(key, lambda v: int(v, 0), default, required)

    def get_str(self, key, default=None, required=False):
        return self._typed(key, str, default, required)

    def get_int_list(self, key, default=None, required=False):
        return self._typed(
            key, lambda v: tuple(int(x.strip()) for x in v.split(",")),
            default, required)

    def get_float_list(self, key, default=None, required=False):
        return self._typed(
            key, lambda v: tuple(float(x.strip()) for x in v.split(",")),
            default, required)

    def unknown_keys(self, known_prefixes=()):
        extra = []
        for key in self._map:
            if key in self._used:
                continue
            if any(key.startswith(pref) for pref in known_prefixes):
                continue
            extra.append(key)
        return extra


def build_process(view: ConfigView) -> ProcessSpec:
    kind = view.get_str("process.kind", required=True)
    try:
        if kind == "iid_pairs":
            return iid_pairs(u=view.get_str("process.u", "uniform:0.5,1.5"),
                             v=view.get_str("process.v", "normal:0,1"))
        if kind == "ar1_pairs":
            return ar1_pairs(a=view.get_float("process.a", 0.5),
                             v_mean=view.get_float("process.v_mean", 0.0))
        if kind == "ma_pairs":
            return ma_pairs(theta=view.get_float("process.theta", 8.0),
                            v_mean=view.get_float("process.v_mean", 0.0))
        if kind == "iid_regression":
            return iid_regression(model=view.get_str("process.model", "sin_uniform"),
                                  noise_sd=view.get_float("process.noise_sd", 0.3))
        if kind == "ar1_regression":
            return ar1_regression(model=view.get_str("process.model", "sin_uniform"),
                                  a=view.get_float("process.a", 0.5),
                                  noise_sd=view.get_float("process.noise_sd", 0.3))
        if kind == "censored":
            return censored(a=view.get_float("process.a", 0.5),
                            sigma=view.get_float("process.sigma", 1.0),
                            pi=view.get_float("process.pi", 0.6))
    except InvalidSpec as exc:
        raise ConfigError(f"process.*: {exc}") from exc
    raise ConfigError(f"unknown process.kind {kind!r}")


def build_experiment(mapping) -> ExperimentConfig:
    """Assemble an ExperimentConfig from a parsed mapping."""
    view = ConfigView(mapping)
    process = build_process(view)
    estimator = view.get_str("estimator", required=True)
    kwargs = {}
    if view.has("grid.x"):
        kwargs["x"] = view.get_float("grid.x")
    if view.has("grid.B"):
        box = view.get_float_list("grid.B")
        if len(box) != 2:
            raise ConfigError("grid.B must be 'lo,hi'")
        kwargs["B"] = (box[0], box[1])
    if view.has("slope_tol"):
        kwargs["slope_tol"] = view.get_float("slope_tol")
    if view.has("extra_p"):
        kwargs["extra_p"] = view.get_float_list("extra_p")
    if view.has("rho"):
        kwargs["rho"] = view.get_float("rho")
    try:
        return make_config(
            process=process,
            estimator=estimator,
            p=view.get_float("p", required=True),
            q=view.get_float("q", required=True),
            r=view.get_float("r"),
            s=view.get_float("s"),
            n_grid=view.get_int_list("n_grid", required=True),
            M=view.get_int("M", required=True),
            master_seed=view.get_int("seed", required=True),
            bandwidth_rule=view.get_str("bandwidth.rule", "pointwise"),
            bandwidth_C=view.get_float("bandwidth.C", 1.0),
            bandwidth_h=view.get_float("bandwidth.h"),
            target=view.get_str("target", "centering"),
            kernel_name=view.get_str("kernel", "epanechnikov"),
            dim=view.get_int("dim", 1),
            **kwargs)
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc
