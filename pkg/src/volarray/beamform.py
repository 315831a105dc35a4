"""Far-field pattern synthesis, beamwidth and sidelobe extraction.

Patterns are evaluated on a great-circle cut through the steer target:
cut angle t in [-90, 90] degrees maps to (theta, phi) = (|t|, phi0) for
t >= 0 and (|t|, phi0 + 180) for t < 0. Gains are normalized to a 0 dB peak.

`reflector_image=True` enables the reflector-backed surrogate used for
beamwidth tables: raised elements (z > 0) radiate direct-plus-image fields,
and every element's response is normalized to equal radiated hemisphere
power so the two layers are excited equally.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import ElementKind, ElementResponse
from .errors import InvalidArgumentError, MeasurementError
from .geometry import ArrayGeometry

_DB_FLOOR = 1e-30


@dataclass(frozen=True)
class CutPlane:
    """Great-circle cut specification."""

    phi_deg: float = 0.0
    theta_min_deg: float = -90.0
    theta_max_deg: float = 90.0
    step_deg: float = 0.25


@dataclass(frozen=True)
class FarFieldPattern:
    """Sampled gain along one cut, normalized to 0 dB peak."""

    cut_angle_deg: np.ndarray
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    gain_db: np.ndarray
    steer_target: tuple[float, float]


def _khat(theta_deg, phi_deg):
    t = np.radians(np.asarray(theta_deg, dtype=float))
    p = np.radians(np.asarray(phi_deg, dtype=float))
    return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)


def steering_weights(g: ArrayGeometry, theta0_deg: float, phi0_deg: float) -> np.ndarray:
    """Conjugate-phase weights toward (theta0, phi0), unit total norm."""
    k0 = _khat(theta0_deg, phi0_deg)
    return np.exp(-2j * np.pi * (g.elements @ k0)) / np.sqrt(g.n_elements)


def array_pattern(
    g: ArrayGeometry,
    weights: np.ndarray,
    elem: ElementResponse | None = None,
    cut: CutPlane = CutPlane(),
    steer_target: tuple[float, float] = (0.0, 0.0),
    reflector_image: bool = False,
) -> FarFieldPattern:
    """Power pattern of the weighted array along the cut, peak-normalized."""
    weights = np.asarray(weights, dtype=complex)
    if weights.shape != (g.n_elements,):
        raise InvalidArgumentError("weights length must equal the element count")
    if elem is None:
        elem = ElementResponse.isotropic()
    t = np.arange(cut.theta_min_deg, cut.theta_max_deg + 0.5 * cut.step_deg, cut.step_deg)
    theta = np.abs(t)
    phi = np.where(t >= 0, cut.phi_deg, cut.phi_deg + 180.0)
    k = _khat(theta, phi)
    ct = np.cos(np.radians(theta))

    resp = np.exp(2j * np.pi * (g.elements @ k.T))  # (N, T)
    if reflector_image:
        z = g.elements[:, 2:3]
        fac = np.where(z > 0, 1.0 + np.exp(-4j * np.pi * z * ct[None, :]), 1.0)
        resp = resp * fac / np.sqrt(_hemisphere_power(g.elements[:, 2], elem))[:, None]
    if elem.kind is not ElementKind.ISOTROPIC:
        resp = resp * elem.field_amplitude(np.radians(theta))[None, :]
    if elem.efficiency_weights is not None:
        resp = resp * np.sqrt(elem.efficiency_weights)[:, None]

    af = (resp * weights[:, None]).sum(axis=0)
    power = np.abs(af) ** 2
    gain_db = 10.0 * np.log10(np.maximum(power, _DB_FLOOR))
    gain_db = gain_db - gain_db.max()
    return FarFieldPattern(t, theta, phi, gain_db, steer_target)


def _hemisphere_power(z_coords: np.ndarray, elem: ElementResponse) -> np.ndarray:
    """Per-element radiated power over the upper hemisphere (image term included)."""
    theta = np.radians(np.arange(0.0, 90.0001, 0.25))
    st, ct = np.sin(theta), np.cos(theta)
    gain2 = elem.field_amplitude(theta) ** 2
    z = np.asarray(z_coords, dtype=float)[:, None]
    fac2 = np.where(z > 0, np.abs(1.0 + np.exp(-4j * np.pi * z * ct[None, :])) ** 2, 1.0)
    power = np.trapezoid(fac2 * (gain2 * st)[None, :], theta, axis=1)
    return power / power.min()


def steered_cut_pattern(
    g: ArrayGeometry,
    theta0_deg: float,
    phi0_deg: float = 0.0,
    elem: ElementResponse | None = None,
    step_deg: float = 0.25,
    reflector_image: bool = False,
) -> FarFieldPattern:
    """Steer toward the target and evaluate the through-target great-circle cut."""
    w = steering_weights(g, theta0_deg, phi0_deg)
    cut = CutPlane(phi_deg=phi0_deg, step_deg=step_deg)
    return array_pattern(g, w, elem, cut, steer_target=(theta0_deg, phi0_deg),
                         reflector_image=reflector_image)


def _crossing(t: np.ndarray, gain: np.ndarray, start: int, step: int, level: float):
    """Linearly interpolated cut angle where gain first falls below `level`."""
    j = start
    while 0 <= j + step < len(t):
        if gain[j + step] < level:
            frac = (level - gain[j]) / (gain[j + step] - gain[j])
            return float(t[j] + frac * (t[j + step] - t[j]))
        j += step
    return None


def hpbw(p: FarFieldPattern) -> float:
    """Half-power beamwidth: width between the -3 dB crossings around the peak."""
    gain = p.gain_db
    peak_candidates = np.flatnonzero(gain >= gain.max() - 1e-12)
    if peak_candidates.size > 2:
        raise MeasurementError("pattern has no unique global peak in the cut")
    i = int(peak_candidates[0])
    lo = _crossing(p.cut_angle_deg, gain, i, -1, -3.0)
    hi = _crossing(p.cut_angle_deg, gain, i, +1, -3.0)
    if lo is None or hi is None:
        raise MeasurementError("no -3 dB crossing within the cut")
    return hi - lo


def sidelobe_level(p: FarFieldPattern) -> float:
    """Highest local maximum outside the main lobe, in dB relative to the peak."""
    gain = p.gain_db
    peak_candidates = np.flatnonzero(gain >= gain.max() - 1e-12)
    if peak_candidates.size > 2:
        raise MeasurementError("pattern has no unique global peak in the cut")
    i = int(peak_candidates[0])
    hi = i
    while hi + 1 < len(gain) and gain[hi + 1] <= gain[hi]:
        hi += 1
    lo = i
    while lo - 1 >= 0 and gain[lo - 1] <= gain[lo]:
        lo -= 1
    outside = np.concatenate([gain[:lo], gain[hi + 1 :]])
    if outside.size == 0 or lo == 0 and hi == len(gain) - 1:
        raise MeasurementError("pattern has no sidelobe outside the main lobe")
    return float(outside.max())
