"""Canonical parameter presets for the two reference experiments.

Both presets share the nondimensional base rates of the classical
effector/tumor system (sigma=0.1181, rho=1.131, eta=20.19, mu=0.00311,
delta=0.3743, alpha=1.636, beta=3.272e-3) and the initial densities
x0 = 5, y0 = 50; they differ in noise:

    example-5.1  strong tumor noise (sigma1=0.2, sigma2=2.0): extinction
                 regime; the tumor density decays exponentially while the
                 effector marginal settles on the boundary inverse-Gamma law.
    example-5.2  weak tumor noise (sigma2=0.25) with reduced immune
                 response (rho=0.613): permanence regime with a unique
                 ergodic invariant measure on the open quadrant.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .model import ModelParams, State

__all__ = ["Preset", "PRESETS", "PRESET_NAMES", "load_preset"]


@dataclass(frozen=True)
class Preset:
    params: ModelParams
    initial: State


_BASE = dict(
    sigma=0.1181,
    rho=1.131,
    eta=20.19,
    mu=0.00311,
    delta=0.3743,
    alpha=1.636,
    beta=3.272e-3,
)

_INITIAL = State(x=5.0, y=50.0)

PRESETS = {
    "example-5.1": Preset(
        params=ModelParams(**_BASE, sigma1=0.2, sigma2=2.0),
        initial=_INITIAL,
    ),
    "example-5.2": Preset(
        params=ModelParams(**{**_BASE, "rho": 0.613}, sigma1=0.2, sigma2=0.25),
        initial=_INITIAL,
    ),
}

PRESET_NAMES = tuple(PRESETS)


def load_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}") from None
