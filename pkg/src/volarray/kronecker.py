"""Coupling-aware receive covariances from embedded patterns and S-parameters.

The covariance is the Hadamard product of a pattern-overlap correlation
matrix and a rank-one embedded-efficiency matrix. When no measured coupling
data is available, an analytic surrogate models every element as a thin
half-wave dipole: mutual impedances from the induced-EMF method (side-by-side
and parallel-in-echelon closed forms), the Z-to-S conversion at a reference
impedance, and embedded efficiencies from the column power of S. Elements
raised above the z = 0 reflector baseline carry a ground-image pattern term.
"""
from __future__ import annotations

from dataclasses import dataclass
import hashlib
import json
import warnings
from typing import Sequence

import numpy as np
from scipy.special import sici

from .errors import InvalidArgumentError, PassivityWarning, VolarrayWarning
from .geometry import ArrayGeometry
from .clarke import DensifyAxis, planar_family_geometry, _fingerprint
from .metrics import CapacityReport, CorrelationMatrix, edof, kronecker_capacity

_EULER = 0.5772156649015329
_ETA0 = 119.9169832 * np.pi  # free-space impedance, ohms
_DIPOLE_HALF = 0.25  # half-length of a half-wave dipole, in wavelengths


# --- domain types -------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddedPattern:
    """Complex far-field samples for both polarizations on a (theta, phi) grid."""

    theta_deg: np.ndarray  # (n_theta,), uniform, covering [0, 180]
    phi_deg: np.ndarray  # (n_phi,), uniform, covering [0, 360)
    e_theta: np.ndarray  # (n_theta, n_phi) complex
    e_phi: np.ndarray  # (n_theta, n_phi) complex

    def __post_init__(self):
        th = np.asarray(self.theta_deg, dtype=float)
        ph = np.asarray(self.phi_deg, dtype=float)
        et = np.asarray(self.e_theta, dtype=complex)
        ep = np.asarray(self.e_phi, dtype=complex)
        if th.ndim != 1 or ph.ndim != 1:
            raise InvalidArgumentError("grids must be 1-D")
        for grid, lo, hi in ((th, 0.0, 180.0), (ph, 0.0, 360.0)):
            steps = np.diff(grid)
            if grid.size < 2 or np.any(steps <= 0) or not np.allclose(steps, steps[0]):
                raise InvalidArgumentError("grids must be uniform and increasing")
        if not (abs(th[0]) < 1e-9 and abs(th[-1] - 180.0) < 1e-9):
            raise InvalidArgumentError("theta grid must cover [0, 180]")
        if not (abs(ph[0]) < 1e-9 and ph[-1] < 360.0 - 1e-9):
            raise InvalidArgumentError("phi grid must cover [0, 360)")
        if et.shape != (th.size, ph.size) or ep.shape != (th.size, ph.size):
            raise InvalidArgumentError("field sample shapes must match the grids")
        for arr in (th, ph, et, ep):
            arr.setflags(write=False)
        object.__setattr__(self, "theta_deg", th)
        object.__setattr__(self, "phi_deg", ph)
        object.__setattr__(self, "e_theta", et)
        object.__setattr__(self, "e_phi", ep)

    def grids_match(self, other: "EmbeddedPattern") -> bool:
        return (
            self.theta_deg.shape == other.theta_deg.shape
            and self.phi_deg.shape == other.phi_deg.shape
            and np.array_equal(self.theta_deg, other.theta_deg)
            and np.array_equal(self.phi_deg, other.phi_deg)
        )


@dataclass(frozen=True)
class ScatteringMatrix:
    """N-port S-parameters at a single frequency."""

    ports: int
    frequency_hz: float
    s: np.ndarray
    reference_impedance: float = 50.0

    def __post_init__(self):
        m = np.asarray(self.s, dtype=complex)
        if m.shape != (self.ports, self.ports):
            raise InvalidArgumentError("S matrix shape must be (ports, ports)")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("S entries must be finite")
        if np.abs(m).max() > 1.0 + 1e-6:
            warnings.warn(
                f"|S| up to {np.abs(m).max():.4f} exceeds 1; data may not be passive",
                PassivityWarning,
                stacklevel=2,
            )
        m.setflags(write=False)
        object.__setattr__(self, "s", m)


@dataclass(frozen=True)
class AngularPowerSpectrum:
    """Per-polarization angular power densities and cross-polarization ratio."""

    p_theta: np.ndarray  # (n_theta, n_phi) >= 0
    p_phi: np.ndarray
    kappa: float = 1.0

    def __post_init__(self):
        pt = np.asarray(self.p_theta, dtype=float)
        pp = np.asarray(self.p_phi, dtype=float)
        if self.kappa <= 0:
            raise InvalidArgumentError("kappa must be > 0")
        if np.any(pt < 0) or np.any(pp < 0):
            raise InvalidArgumentError("power spectra must be non-negative")
        if not (pt.any() or pp.any()):
            raise InvalidArgumentError("power spectrum must not be identically zero")
        pt.setflags(write=False)
        pp.setflags(write=False)
        object.__setattr__(self, "p_theta", pt)
        object.__setattr__(self, "p_phi", pp)

    @classmethod
    def uniform(cls, theta_deg, phi_deg, kappa: float = 1.0) -> "AngularPowerSpectrum":
        shape = (np.asarray(theta_deg).size, np.asarray(phi_deg).size)
        return cls(np.ones(shape), np.ones(shape), kappa)


@dataclass(frozen=True)
class CouplingData:
    """Embedded patterns, S-matrix, and embedded efficiencies for one array."""

    patterns: tuple
    smatrix: ScatteringMatrix
    efficiencies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.efficiencies, dtype=float)
        if len(self.patterns) != self.smatrix.ports or e.size != self.smatrix.ports:
            raise InvalidArgumentError("patterns/efficiencies must match port count")
        e.setflags(write=False)
        object.__setattr__(self, "patterns", tuple(self.patterns))
        object.__setattr__(self, "efficiencies", e)


# --- efficiencies -------------------------------------------------------------


def embedded_efficiency(s: ScatteringMatrix, port: int) -> float:
    """1 - sum_i |S_in|^2 for the given 1-based port, clamped to [0, 1]."""
    if not 1 <= port <= s.ports:
        raise InvalidArgumentError(f"port {port} out of range 1..{s.ports}")
    val = 1.0 - float(np.sum(np.abs(s.s[:, port - 1]) ** 2))
    if val < 0.0 or val > 1.0:
        warnings.warn(
            f"embedded efficiency {val:.4f} clamped to [0, 1] (port {port})",
            VolarrayWarning,
            stacklevel=2,
        )
    return float(np.clip(val, 0.0, 1.0))


def efficiency_vector(s: ScatteringMatrix) -> np.ndarray:
    return np.array([embedded_efficiency(s, p) for p in range(1, s.ports + 1)])


def efficiency_matrix(e) -> np.ndarray:
    """Rank-one matrix sqrt(e) sqrt(e)^T; diagonal equals e."""
    e = np.asarray(e, dtype=float)
    if np.any(e < 0) or np.any(e > 1):
        raise InvalidArgumentError("efficiencies must lie in [0, 1]")
    root = np.sqrt(e)
    return np.outer(root, root)


# --- pattern-overlap correlation ----------------------------------------------


def _quadrature_weights(theta_deg: np.ndarray, phi_deg: np.ndarray) -> np.ndarray:
    """Trapezoid-in-theta (sin(theta) Jacobian) x periodic-uniform-in-phi weights."""
    th = np.radians(theta_deg)
    w_t = np.full(th.size, np.diff(th)[0])
    w_t[0] *= 0.5
    w_t[-1] *= 0.5
    w_p = np.full(phi_deg.size, np.radians(np.diff(phi_deg)[0]))
    return np.sin(th)[:, None] * w_t[:, None] * w_p[None, :]


def pattern_correlation(
    p_m: EmbeddedPattern, p_n: EmbeddedPattern, aps: AngularPowerSpectrum
) -> complex:
    """Normalized weighted overlap of two embedded patterns under the APS.

    The cross-polarization ratio kappa multiplies the theta-polarized term
    only. Identical inputs return exactly 1.
    """
    if not p_m.grids_match(p_n):
        raise InvalidArgumentError("pattern grids do not match")
    if aps.p_theta.shape != p_m.e_theta.shape:
        raise InvalidArgumentError("APS grid does not match the pattern grids")
    if p_m is p_n:
        return 1.0 + 0.0j
    w = _quadrature_weights(p_m.theta_deg, p_m.phi_deg)

    def overlap(a: EmbeddedPattern, b: EmbeddedPattern) -> complex:
        g = aps.kappa * a.e_theta * b.e_theta.conj() * aps.p_theta
        g = g + a.e_phi * b.e_phi.conj() * aps.p_phi
        return complex(np.sum(g * w))

    num = overlap(p_m, p_n)
    den = np.sqrt(overlap(p_m, p_m).real * overlap(p_n, p_n).real)
    if den == 0.0:
        raise InvalidArgumentError("pattern has zero radiated power under the APS")
    return num / den


def correlation_from_patterns(
    patterns: Sequence[EmbeddedPattern], aps: AngularPowerSpectrum
) -> CorrelationMatrix:
    """Full correlation matrix of a pattern bank (vectorized over pairs)."""
    if not patterns:
        raise InvalidArgumentError("need at least one pattern")
    ref = patterns[0]
    for p in patterns[1:]:
        if not ref.grids_match(p):
            raise InvalidArgumentError("pattern grids do not match")
    w = _quadrature_weights(ref.theta_deg, ref.phi_deg).ravel()
    n = len(patterns)
    gram = np.zeros((n, n), dtype=complex)
    for pol, kappa in (("e_theta", aps.kappa), ("e_phi", 1.0)):
        fields = np.stack([getattr(p, pol).ravel() for p in patterns])
        if not fields.any():
            continue
        dens = aps.p_theta if pol == "e_theta" else aps.p_phi
        weighted = fields * (np.sqrt(dens.ravel() * w) * np.sqrt(kappa))[None, :]
        gram += weighted @ weighted.conj().T
    diag = np.real(np.diag(gram))
    if np.any(diag <= 0):
        raise InvalidArgumentError("pattern bank contains a zero-power pattern")
    psi = gram / np.sqrt(np.outer(diag, diag))
    np.fill_diagonal(psi, 1.0)
    return CorrelationMatrix(psi)


def covariance(psi: CorrelationMatrix, xi: np.ndarray) -> CorrelationMatrix:
    """Hadamard product R = Psi o Xi (PSD by the Schur product theorem)."""
    xi = np.asarray(xi)
    if xi.shape != psi.entries.shape:
        raise InvalidArgumentError("Xi shape must match Psi")
    return CorrelationMatrix(psi.entries * xi)


# --- analytic half-wave dipole surrogate ----------------------------------------


def half_wave_self_impedance() -> complex:
    """Induced-EMF self impedance of a thin half-wave dipole (ohms)."""
    si, ci = sici(2.0 * np.pi)
    return complex(
        _ETA0 / (4 * np.pi) * (_EULER + np.log(2.0 * np.pi) - ci),
        _ETA0 / (4 * np.pi) * si,
    )


def half_wave_mutual_impedance(d: float, axial_offset: float = 0.0) -> complex:
    """Induced-EMF mutual impedance of parallel thin half-wave dipoles (ohms).

    `d` is the perpendicular separation and `axial_offset` the displacement
    along the dipole axis, both in wavelengths. Covers side-by-side
    (offset 0), parallel-in-echelon, and collinear (d = 0) placements.
    """
    k = 2.0 * np.pi
    length = 2.0 * _DIPOLE_HALF
    h = abs(axial_offset)
    if d < 1e-9:
        if h < length + 1e-9:
            raise InvalidArgumentError(
                "coincident or overlapping collinear dipoles have singular impedance"
            )
        v0 = k * h
        s2v0, c2v0 = sici(2.0 * v0)
        s1, c1 = sici(2.0 * k * (h + length))
        s2, c2 = sici(2.0 * k * (h - length))
        lnv3 = np.log((h * h - length * length) / (h * h))
        coef = _ETA0 / (8.0 * np.pi)
        r = -coef * np.cos(v0) * (-2 * c2v0 + c2 + c1 - lnv3) + coef * np.sin(v0) * (
            2 * s2v0 - s2 - s1
        )
        x = -coef * np.cos(v0) * (2 * s2v0 - s2 - s1) + coef * np.sin(v0) * (
            2 * c2v0 - c2 - c1 - lnv3
        )
        return complex(r, x)
    v0 = k * h
    r0 = np.hypot(d, h)
    r1 = np.hypot(d, h - length)
    r2 = np.hypot(d, h + length)
    args = (
        k * (r0 + h),
        k * (r0 - h),
        k * (r1 + (h - length)),
        k * (r1 - (h - length)),
        k * (r2 + (h + length)),
        k * (r2 - (h + length)),
    )
    s = np.empty(6)
    c = np.empty(6)
    for i, u in enumerate(args):
        s[i], c[i] = sici(u)
    coef = _ETA0 / (8.0 * np.pi)
    cos0, sin0 = np.cos(v0), np.sin(v0)
    r = -coef * cos0 * (-2 * c[0] - 2 * c[1] + c[2] + c[3] + c[4] + c[5]) + coef * sin0 * (
        2 * s[0] - 2 * s[1] - s[2] + s[3] - s[4] + s[5]
    )
    x = -coef * cos0 * (2 * s[0] + 2 * s[1] - s[2] - s[3] - s[4] - s[5]) + coef * sin0 * (
        2 * c[0] - 2 * c[1] - c[2] + c[3] - c[4] + c[5]
    )
    return complex(r, x)


def impedance_matrix(g: ArrayGeometry) -> np.ndarray:
    """Pairwise induced-EMF impedance matrix for z-oriented half-wave dipoles."""
    pts = g.elements
    n = len(pts)
    z = np.empty((n, n), dtype=complex)
    z_self = half_wave_self_impedance()
    for i in range(n):
        z[i, i] = z_self
        for j in range(i + 1, n):
            d_perp = np.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
            z[i, j] = z[j, i] = half_wave_mutual_impedance(d_perp, pts[i, 2] - pts[j, 2])
    return z


def scattering_from_impedance(z: np.ndarray, z0: float = 50.0) -> np.ndarray:
    """S = (Z - z0 I)(Z + z0 I)^(-1); symmetric for reciprocal (symmetric) Z."""
    n = z.shape[0]
    eye = np.eye(n)
    return np.linalg.solve((z + z0 * eye).T, (z - z0 * eye).T).T


def half_wave_pattern(theta_deg: np.ndarray) -> np.ndarray:
    """cos(pi/2 cos(theta)) / sin(theta) field pattern, zero at the poles."""
    th = np.radians(np.asarray(theta_deg, dtype=float))
    st = np.sin(th)
    out = np.zeros_like(th)
    ok = st > 1e-12
    out[ok] = np.cos(0.5 * np.pi * np.cos(th[ok])) / st[ok]
    return out


def dipole_embedded_pattern(
    position, theta_deg: np.ndarray, phi_deg: np.ndarray
) -> EmbeddedPattern:
    """Isolated-dipole pattern with position phase; image term when z > 0.

    The element is z-oriented so only the theta polarization radiates. The
    reflector at the z = 0 baseline contributes 1 + exp(-2jk z cos(theta))
    for raised elements (direct plus in-phase image).
    """
    x, y, z = (float(v) for v in position)
    th = np.radians(theta_deg)[:, None]
    ph = np.radians(phi_deg)[None, :]
    st, ct = np.sin(th), np.cos(th)
    phase = np.exp(
        2j * np.pi * (x * st * np.cos(ph) + y * st * np.sin(ph) + z * ct)
    )
    e_theta = half_wave_pattern(theta_deg)[:, None] * phase
    if z > 0:
        e_theta = e_theta * (1.0 + np.exp(-4j * np.pi * z * ct))
    e_phi = np.zeros_like(e_theta)
    return EmbeddedPattern(theta_deg, phi_deg, e_theta, e_phi)


def analytic_dipole_bank(
    g: ArrayGeometry,
    reference_impedance: float = 50.0,
    grid_step_deg: float = 1.0,
    frequency_hz: float = 3.5e9,
) -> CouplingData:
    """Surrogate coupling data for an array of z-oriented half-wave dipoles."""
    if g.n_elements < 1:
        raise InvalidArgumentError("empty geometry")
    z = impedance_matrix(g)
    s = scattering_from_impedance(z, reference_impedance)
    smat = ScatteringMatrix(g.n_elements, frequency_hz, s, reference_impedance)
    eff = efficiency_vector(smat)
    theta = np.arange(0.0, 180.0 + 0.5 * grid_step_deg, grid_step_deg)
    phi = np.arange(0.0, 360.0 - 0.5 * grid_step_deg, grid_step_deg)
    patterns = tuple(dipole_embedded_pattern(p, theta, phi) for p in g.elements)
    return CouplingData(patterns, smat, eff)


# --- sweep ---------------------------------------------------------------------


def kronecker_sweep(
    layout,
    densify: DensifyAxis = DensifyAxis.X_ONLY,
    aperture: tuple[float, float] = (3.0, 3.0),
    offset: float = 1.0,
    n_values: Sequence[int] = tuple(range(2, 12)),
    snr_db: float = 20.0,
    n_trials: int = 500,
    seed: int = 0,
    n_t: int | None = None,
    d_y: float = 0.5,
    coupling: CouplingData | None = None,
    aps_kappa: float = 1.0,
    grid_step_deg: float = 2.0,
) -> list[CapacityReport]:
    """Capacity sweep with covariance R = Psi o Xi from coupling data.

    Without supplied `coupling`, the analytic dipole surrogate is rebuilt per
    sweep point. Supplied coupling data must match the element count of every
    requested point.
    """
    if not n_values:
        raise InvalidArgumentError("n_values must be nonempty")
    lx, ly = aperture
    ny_fixed = int(round(ly / d_y)) + 1
    if n_t is not None:
        n_t_eff = int(n_t)
    elif densify is DensifyAxis.X_ONLY:
        n_t_eff = int(max(n_values)) * ny_fixed
    else:
        n_t_eff = int(max(n_values)) ** 2
    fp = _fingerprint(
        dict(kind="kronecker", layout=str(layout), densify=densify.value,
             aperture=list(aperture), offset=offset, n_values=list(n_values),
             snr_db=snr_db, n_trials=n_trials, seed=seed, n_t=n_t_eff,
             d_y=d_y, kappa=aps_kappa, analytic=coupling is None)
    )
    reports = []
    for idx, n in enumerate(n_values):
        ny = ny_fixed if densify is DensifyAxis.X_ONLY else n
        g = planar_family_geometry(layout, lx, ly, n, ny, offset)
        data = coupling if coupling is not None else analytic_dipole_bank(
            g, grid_step_deg=grid_step_deg
        )
        if len(data.patterns) != g.n_elements:
            raise InvalidArgumentError(
                f"coupling data has {len(data.patterns)} ports, geometry has {g.n_elements}"
            )
        ref = data.patterns[0]
        aps = AngularPowerSpectrum.uniform(ref.theta_deg, ref.phi_deg, aps_kappa)
        psi = correlation_from_patterns(data.patterns, aps)
        r = covariance(psi, efficiency_matrix(data.efficiencies))
        rep = kronecker_capacity(r, n_t_eff, snr_db, n_trials, seed + idx)
        reports.append(
            rep.with_(sweep_n=n, n_elements=g.n_elements, edof=edof(r), seed=seed,
                      scenario_fingerprint=fp,
                      avg_efficiency=float(np.mean(data.efficiencies)))
        )
    return reports
