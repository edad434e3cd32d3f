"""Run configuration: one JSON document drives every command.

Schema (all sections optional unless noted):

    {
      "preset": "example-5.1" | "example-5.2",
      "params": {"sigma": .., "rho": .., "eta": .., "mu": .., "delta": ..,
                 "alpha": .., "beta": .., "sigma1": .., "sigma2": ..},
      "dimensional_params": {"a": .., "b": .., "s": .., "d": .., "g": ..,
                             "q": .., "r1": .., "r2": .., "E0": .., "T0": ..},
      "initial": {"x": .., "y": ..},
      "policy": {"scheme": "milstein"|"euler-maruyama", "dt": ..,
                 "eps_pos": .., "max_halvings": ..},
      "ensemble": {"n_paths": .., "horizon": .., "burn_in": ..|null,
                   "master_seed": .., "record_stride": ..},
      "outputs": "directory",
      "coupled": ["psi", "phi", "z"],
      "z_start_time": 0.0,
      "verify": {"n_paths": .., "horizon": .., "burn_in": ..}
    }

Sources of the model rates, in precedence order: the preset (if named),
then ``dimensional_params`` (nondimensionalized on ingestion; the derived
rates are echoed in every output for provenance), then individual entries
of ``params`` as overrides.  Without a preset or dimensional block,
``params`` must be complete.  Parsing and serialization round-trip exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, DomainError
from .integrate import AUX_PROCESSES, StepPolicy, StepScheme
from .ensemble import EnsembleSpec
from .model import DimensionalParams, ModelParams, State, nondimensionalize
from .presets import PRESET_NAMES, load_preset

__all__ = ["RunConfig", "parse_config", "config_to_dict", "load_config", "dump_config"]

PARAM_FIELDS = ("sigma", "rho", "eta", "mu", "delta", "alpha", "beta", "sigma1", "sigma2")
DIMENSIONAL_FIELDS = ("a", "b", "s", "d", "g", "q", "r1", "r2", "E0", "T0")
SCHEME_NAMES = {s.value: s for s in StepScheme}
VERIFY_OVERRIDE_KEYS = ("n_paths", "horizon", "burn_in")

_DEFAULT_POLICY = StepPolicy()
_DEFAULT_ENSEMBLE = dict(n_paths=1, horizon=200.0, burn_in=None, master_seed=0, record_stride=100)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: State
    policy: StepPolicy
    ensemble: EnsembleSpec
    outputs: str = "out"
    preset: Optional[str] = None
    dimensional: Optional[DimensionalParams] = None
    coupled: tuple = ()
    z_start_time: float = 0.0
    verify_overrides: Optional[tuple] = None  # sorted (key, value) pairs

    def verify_kwargs(self) -> dict:
        return dict(self.verify_overrides) if self.verify_overrides else {}


def _expect_mapping(doc, key_path):
    if not isinstance(doc, dict):
        raise ConfigError(key_path, f"expected an object, got {type(doc).__name__}")
    return doc


def _number(section, key, key_path, required=False, default=None, integer=False, allow_none=False):
    if key not in section or section[key] is None:
        if key in section and section[key] is None and allow_none:
            return None
        if required:
            raise ConfigError(f"{key_path}.{key}", "missing required value")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key_path}.{key}", f"expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{key_path}.{key}", f"expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _unknown_keys(section, allowed, key_path):
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"{key_path}.{sorted(extra)[0]}", "unknown key")


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document; errors carry the offending key path."""
    _expect_mapping(doc, "<root>")
    _unknown_keys(
        doc,
        ("preset", "params", "dimensional_params", "initial", "policy",
         "ensemble", "outputs", "coupled", "z_start_time", "verify"),
        "<config>",
    )

    preset_name = doc.get("preset")
    if preset_name is not None and preset_name not in PRESET_NAMES:
        raise ConfigError("preset", f"unknown preset {preset_name!r}; expected one of {PRESET_NAMES}")
    if preset_name is not None and "dimensional_params" in doc:
        raise ConfigError("dimensional_params", "mutually exclusive with a preset")

    dimensional = None
    base: dict = {}
    if preset_name is not None:
        base = dataclasses.asdict(load_preset(preset_name).params)
    elif "dimensional_params" in doc:
        sec = _expect_mapping(doc["dimensional_params"], "dimensional_params")
        _unknown_keys(sec, DIMENSIONAL_FIELDS, "dimensional_params")
        values = {
            k: _number(sec, k, "dimensional_params", required=True) for k in DIMENSIONAL_FIELDS
        }
        try:
            dimensional = DimensionalParams(**values)
        except DomainError as exc:
            raise ConfigError("dimensional_params", str(exc)) from None
        base = dataclasses.asdict(nondimensionalize(dimensional))

    overrides = {}
    if "params" in doc:
        sec = _expect_mapping(doc["params"], "params")
        _unknown_keys(sec, PARAM_FIELDS, "params")
        overrides = {k: _number(sec, k, "params", required=True) for k in sec}
    if not base:
        missing = [k for k in PARAM_FIELDS if k not in overrides]
        if missing:
            raise ConfigError(f"params.{missing[0]}", "required without a preset or dimensional_params")
    try:
        params = ModelParams(**{**base, **overrides})
    except DomainError as exc:
        raise ConfigError("params", str(exc)) from None

    if "initial" in doc:
        sec = _expect_mapping(doc["initial"], "initial")
        _unknown_keys(sec, ("x", "y"), "initial")
        try:
            initial = State(
                x=_number(sec, "x", "initial", required=True),
                y=_number(sec, "y", "initial", required=True),
            )
        except DomainError as exc:
            raise ConfigError("initial", str(exc)) from None
    elif preset_name is not None:
        initial = load_preset(preset_name).initial
    else:
        raise ConfigError("initial", "required without a preset")

    sec = _expect_mapping(doc.get("policy", {}), "policy")
    _unknown_keys(sec, ("scheme", "dt", "eps_pos", "max_halvings"), "policy")
    scheme_name = sec.get("scheme", _DEFAULT_POLICY.scheme.value)
    if scheme_name not in SCHEME_NAMES:
        raise ConfigError("policy.scheme", f"expected one of {sorted(SCHEME_NAMES)}, got {scheme_name!r}")
    try:
        policy = StepPolicy(
            scheme=SCHEME_NAMES[scheme_name],
            dt=_number(sec, "dt", "policy", default=_DEFAULT_POLICY.dt),
            eps_pos=_number(sec, "eps_pos", "policy", default=_DEFAULT_POLICY.eps_pos),
            max_halvings=_number(
                sec, "max_halvings", "policy", default=_DEFAULT_POLICY.max_halvings, integer=True
            ),
        )
    except DomainError as exc:
        raise ConfigError("policy", str(exc)) from None

    sec = _expect_mapping(doc.get("ensemble", {}), "ensemble")
    _unknown_keys(sec, tuple(_DEFAULT_ENSEMBLE), "ensemble")
    try:
        ensemble = EnsembleSpec(
            n_paths=_number(sec, "n_paths", "ensemble", default=_DEFAULT_ENSEMBLE["n_paths"], integer=True),
            horizon=_number(sec, "horizon", "ensemble", default=_DEFAULT_ENSEMBLE["horizon"]),
            policy=policy,
            master_seed=_number(
                sec, "master_seed", "ensemble", default=_DEFAULT_ENSEMBLE["master_seed"], integer=True
            ),
            burn_in=_number(sec, "burn_in", "ensemble", default=None, allow_none=True),
            record_stride=_number(
                sec, "record_stride", "ensemble", default=_DEFAULT_ENSEMBLE["record_stride"], integer=True
            ),
        )
    except DomainError as exc:
        raise ConfigError("ensemble", str(exc)) from None

    outputs = doc.get("outputs", "out")
    if not isinstance(outputs, str) or not outputs:
        raise ConfigError("outputs", "expected a nonempty directory path string")

    coupled = doc.get("coupled", [])
    if not isinstance(coupled, (list, tuple)):
        raise ConfigError("coupled", "expected a list of process names")
    for name in coupled:
        if name not in AUX_PROCESSES:
            raise ConfigError("coupled", f"unknown process {name!r}; expected subset of {AUX_PROCESSES}")

    z_start = _number(doc, "z_start_time", "<config>", default=0.0)
    if z_start < 0:
        raise ConfigError("z_start_time", "must be >= 0")

    verify_overrides = None
    if "verify" in doc:
        sec = _expect_mapping(doc["verify"], "verify")
        _unknown_keys(sec, VERIFY_OVERRIDE_KEYS, "verify")
        pairs = []
        for key in VERIFY_OVERRIDE_KEYS:
            if key in sec:
                pairs.append((key, _number(sec, key, "verify", integer=(key == "n_paths"))))
        verify_overrides = tuple(pairs)

    return RunConfig(
        params=params,
        initial=initial,
        policy=policy,
        ensemble=ensemble,
        outputs=outputs,
        preset=preset_name,
        dimensional=dimensional,
        coupled=tuple(coupled),
        z_start_time=z_start,
        verify_overrides=verify_overrides,
    )


def config_to_dict(cfg: RunConfig) -> dict:
    """Serialize; parse(config_to_dict(cfg)) == cfg."""
    doc: dict = {
        "params": {k: getattr(cfg.params, k) for k in PARAM_FIELDS},
        "initial": {"x": cfg.initial.x, "y": cfg.initial.y},
        "policy": {
            "scheme": cfg.policy.scheme.value,
            "dt": cfg.policy.dt,
            "eps_pos": cfg.policy.eps_pos,
            "max_halvings": cfg.policy.max_halvings,
        },
        "ensemble": {
            "n_paths": cfg.ensemble.n_paths,
            "horizon": cfg.ensemble.horizon,
            "burn_in": cfg.ensemble.burn_in,
            "master_seed": cfg.ensemble.master_seed,
            "record_stride": cfg.ensemble.record_stride,
        },
        "outputs": cfg.outputs,
        "coupled": list(cfg.coupled),
        "z_start_time": cfg.z_start_time,
    }
    if cfg.preset is not None:
        doc["preset"] = cfg.preset
    if cfg.dimensional is not None:
        doc["dimensional_params"] = {k: getattr(cfg.dimensional, k) for k in DIMENSIONAL_FIELDS}
    if cfg.verify_overrides is not None:
        doc["verify"] = dict(cfg.verify_overrides)
    return doc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(doc)


def dump_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
