"""Named numerical tolerances and the presets that bundle them.

Every threshold the library uses has a name here so the command line can
override it (``--tol name=value``) and so tests can tighten it in one place.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

PROFILE_ENV = "LJET_TOL_PROFILE"


@dataclass(frozen=True)
class Tolerances:
    # storage / validation
    symmetry: float = 1e-12
    inverse: float = 1e-12
    trace_condition: float = 1e-10
    # spectral work
    residual: float = 1e-10
    cluster: float = 1e-8
    # degeneracy thresholds (relative determinants)
    det_threshold: float = 1e-10
    umbilical: float = 1e-8
    reduced_frame: float = 1e-9
    # connection
    back_substitution: float = 1e-9
    integrability: float = 1e-9
    identity: float = 1e-9
    # gauge flow
    gauge_law: float = 1e-8
    composition: float = 1e-9
    weight: float = 1e-6
    # Cartan test
    pivot: float = 1e-9

    def with_overrides(self, overrides: dict[str, float]) -> "Tolerances":
        known = {f.name for f in fields(self)}
        for name, value in overrides.items():
            if name not in known:
                raise KeyError(f"unknown tolerance {name!r}")
            if not value > 0:
                raise ValueError(f"tolerance {name!r} must be positive, got {value}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT = Tolerances()

# strict tightens every threshold by a decade; the pipeline still has
# headroom because residuals of well-conditioned inputs sit near 1e-14.
STRICT = Tolerances(**{k: v / 10 for k, v in DEFAULT.as_dict().items()})

PROFILES = {"default": DEFAULT, "strict": STRICT}


def profile(name: str | None = None) -> Tolerances:
    """Return a preset by name, falling back to the environment variable."""
    if name is None:
        name = os.environ.get(PROFILE_ENV, "default")
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(
            f"unknown tolerance profile {name!r}; expected one of {sorted(PROFILES)}"
        ) from None


def parse_override(text: str) -> tuple[str, float]:
    """Parse ``name=value`` as given on the command line."""
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise ValueError(f"tolerance override must look like name=value, got {text!r}")
    return name.strip(), float(value)
