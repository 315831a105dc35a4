"""Element radiation responses shared by the channel generator and beamformer.

Responses are field amplitudes versus the angle from the element boresight.
The parabolic standard-cellular element follows the published 65-degree
half-power width with a 30 dB floor and 8 dBi peak gain. The cosine element
is the hemispherical projected-aperture response of a reflector-backed
radiator (power falls as cos^q(theta), no back radiation).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


class ElementKind(str, enum.Enum):
    ISOTROPIC = "isotropic"
    COSINE = "cosine"
    STD3GPP = "std3gpp"
    IMPORTED = "imported"


_STD3GPP_HPBW_DEG = 65.0
_STD3GPP_FLOOR_DB = 30.0
_STD3GPP_GAIN_DBI = 8.0


@dataclass(frozen=True)
class ElementResponse:
    """Scalar element gain versus boresight angle, plus optional per-element weights.

    `efficiency_weights` holds per-element embedded efficiencies in [0, 1];
    consumers apply sqrt(e_u) to each element's amplitude.
    """

    kind: ElementKind
    cosine_exponent: float = 1.0
    pattern: object | None = None  # EmbeddedPattern for IMPORTED
    efficiency_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is ElementKind.IMPORTED and self.pattern is None:
            raise InvalidArgumentError("imported element response requires a pattern")
        if self.efficiency_weights is not None:
            w = np.asarray(self.efficiency_weights, dtype=float)
            if np.any(w < 0) or np.any(w > 1):
                raise InvalidArgumentError("efficiency weights must lie in [0, 1]")
            w.setflags(write=False)
            object.__setattr__(self, "efficiency_weights", w)

    @classmethod
    def isotropic(cls, efficiency_weights=None) -> "ElementResponse":
        return cls(ElementKind.ISOTROPIC, efficiency_weights=efficiency_weights)

    @classmethod
    def cosine(cls, exponent: float = 1.0, efficiency_weights=None) -> "ElementResponse":
        return cls(ElementKind.COSINE, cosine_exponent=exponent,
                   efficiency_weights=efficiency_weights)

    @classmethod
    def std3gpp(cls, efficiency_weights=None) -> "ElementResponse":
        return cls(ElementKind.STD3GPP, efficiency_weights=efficiency_weights)

    @classmethod
    def imported(cls, pattern, efficiency_weights=None) -> "ElementResponse":
        return cls(ElementKind.IMPORTED, pattern=pattern,
                   efficiency_weights=efficiency_weights)

    def field_amplitude(self, boresight_angle_rad) -> np.ndarray:
        """Field amplitude (sqrt of power gain) at the given boresight angles."""
        theta = np.asarray(boresight_angle_rad, dtype=float)
        if self.kind is ElementKind.ISOTROPIC:
            return np.ones_like(theta)
        if self.kind is ElementKind.COSINE:
            c = np.maximum(np.cos(theta), 0.0)
            return np.sqrt(c**self.cosine_exponent)
        if self.kind is ElementKind.STD3GPP:
            deg = np.degrees(np.abs(theta))
            att_db = np.minimum(12.0 * (deg / _STD3GPP_HPBW_DEG) ** 2, _STD3GPP_FLOOR_DB)
            return 10.0 ** ((_STD3GPP_GAIN_DBI - att_db) / 20.0)
        # imported: interpolate total field magnitude over theta (phi-averaged)
        pat = self.pattern
        mag = np.sqrt(np.abs(pat.e_theta) ** 2 + np.abs(pat.e_phi) ** 2).mean(axis=1)
        return np.interp(np.degrees(np.abs(theta)), pat.theta_deg, mag)
