"""Spatial correlation under isotropic rich scattering and correlated Rayleigh sweeps.

With plane waves arriving uniformly from all solid angles, the correlation
between two points separated by d wavelengths is sin(2 pi d) / (2 pi d).
The Monte-Carlo estimator averages steering outer products over random wave
directions and is the independent oracle for that closed form.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import ArrayGeometry, Layout, make_case1, make_case2, make_linear_staggered, make_planar
from .metrics import (
    MIN_REPORT_TRIALS,
    CapacityReport,
    ChannelEnsemble,
    CorrelationMatrix,
    ModelTag,
    edof,
    ergodic_capacity,
)
from .seeding import derive_rng

MIN_RECOMMENDED_WAVES = 1000


class DensifyAxis(str, enum.Enum):
    X_ONLY = "x_only"
    XY = "xy"


def clarke_correlation_closed_form(g: ArrayGeometry) -> CorrelationMatrix:
    """Correlation matrix with entries sin(2 pi d_mn) / (2 pi d_mn)."""
    d = g.pairwise_distances()
    return CorrelationMatrix(np.sinc(2.0 * d))


def uniform_sphere_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def clarke_correlation_monte_carlo(
    g: ArrayGeometry, n_waves: int = 100_000, seed: int = 0
) -> CorrelationMatrix:
    """Estimate the correlation matrix from `n_waves` random plane-wave directions.

    The estimate is Hermitian PSD by construction with an exactly unit
    diagonal. Below ``MIN_RECOMMENDED_WAVES`` waves the result carries a
    warning flag instead of failing.
    """
    if n_waves < 1:
        raise InvalidArgumentError("n_waves must be >= 1")
    rng = derive_rng(seed)
    dirs = uniform_sphere_directions(n_waves, rng)
    # steering matrix: rows elements, columns waves
    a = np.exp(2j * np.pi * (g.elements @ dirs.T))
    psi = (a @ a.conj().T) / n_waves
    psi = 0.5 * (psi + psi.conj().T)
    np.fill_diagonal(psi, 1.0)
    warning = None
    if n_waves < MIN_RECOMMENDED_WAVES:
        warning = f"n_waves={n_waves} below recommended minimum {MIN_RECOMMENDED_WAVES}"
    return CorrelationMatrix(psi, warning=warning)


def synthesize_correlated_channels(
    psi: CorrelationMatrix,
    n_t: int,
    n_trials: int,
    seed: int,
    point_index: int = 0,
) -> ChannelEnsemble:
    """Draw H = Psi^(1/2) H_w with i.i.d. unit-variance complex Gaussian H_w.

    Each trial uses the substream (seed, point_index, trial), so ensembles
    are reproducible regardless of evaluation order.
    """
    if n_t < 1 or n_trials < 1:
        raise InvalidArgumentError("n_t and n_trials must be >= 1")
    s = psi.sqrt()
    n_r = psi.n
    draws = np.empty((n_trials, n_r, n_t), dtype=complex)
    for t in range(n_trials):
        rng = derive_rng(seed, point_index, t)
        hw = (
            rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
        ) / np.sqrt(2.0)
        draws[t] = s @ hw
    return ChannelEnsemble(draws, seed, n_t, n_r, ModelTag.CLARKE_CORRELATED, psi=psi)


def _fingerprint(params: dict) -> str:
    canon = json.dumps(params, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _check_sweep_args(n_values, n_trials):
    if not n_values:
        raise InvalidArgumentError("n_values must be nonempty")
    if n_trials < MIN_REPORT_TRIALS:
        raise InvalidArgumentError(f"sweep reports require n_trials >= {MIN_REPORT_TRIALS}")


def sweep_linear(
    length: float = 3.0,
    offset: float = 0.0,
    n_values: Sequence[int] = tuple(range(2, 14)),
    snr_db: float = 20.0,
    n_trials: int = 500,
    seed: int = 0,
    n_t: int | None = None,
) -> list[CapacityReport]:
    """EDOF and ergodic capacity of a staggered line versus element count.

    The far-end antenna count n_t is held constant across sweep points
    (default: the largest n in the sweep) so capacities are comparable.
    """
    _check_sweep_args(n_values, n_trials)
    n_t_eff = int(n_t) if n_t is not None else int(max(n_values))
    fp = _fingerprint(
        dict(kind="clarke_linear", length=length, offset=offset, n_values=list(n_values),
             snr_db=snr_db, n_trials=n_trials, seed=seed, n_t=n_t_eff)
    )
    reports = []
    for idx, n in enumerate(n_values):
        g = make_linear_staggered(length, n, offset)
        psi = clarke_correlation_closed_form(g)
        ens = synthesize_correlated_channels(psi, n_t_eff, n_trials, seed, point_index=idx)
        rep = ergodic_capacity(ens, snr_db)
        reports.append(
            rep.with_(sweep_n=n, n_elements=g.n_elements, edof=edof(psi),
                      seed=seed, scenario_fingerprint=fp)
        )
    return reports


_PLANAR_BUILDERS = {
    Layout.PLANAR: lambda lx, ly, nx, ny, h: make_planar(lx, ly, nx, ny),
    Layout.CASE1: make_case1,
    Layout.CASE2: make_case2,
}


def planar_family_geometry(
    layout: Layout, lx: float, ly: float, nx: int, ny: int, offset: float
) -> ArrayGeometry:
    """Build a planar / case-1 / case-2 grid with a common signature."""
    try:
        builder = _PLANAR_BUILDERS[layout]
    except KeyError:
        raise InvalidArgumentError(f"layout {layout} is not a planar-family layout") from None
    return builder(lx, ly, nx, ny, offset)


def sweep_planar(
    layout: Layout,
    densify: DensifyAxis = DensifyAxis.X_ONLY,
    aperture: tuple[float, float] = (3.0, 3.0),
    offset: float = 1.0,
    n_values: Sequence[int] = tuple(range(2, 12)),
    snr_db: float = 20.0,
    n_trials: int = 500,
    seed: int = 0,
    n_t: int | None = None,
    d_y: float = 0.5,
) -> list[CapacityReport]:
    """Planar-family sweep densifying along x (n_y fixed by d_y) or both axes."""
    _check_sweep_args(n_values, n_trials)
    lx, ly = aperture
    ny_fixed = int(round(ly / d_y)) + 1
    if n_t is not None:
        n_t_eff = int(n_t)
    elif densify is DensifyAxis.X_ONLY:
        n_t_eff = int(max(n_values)) * ny_fixed
    else:
        n_t_eff = int(max(n_values)) ** 2
    fp = _fingerprint(
        dict(kind="clarke_planar", layout=layout.value, densify=densify.value,
             aperture=list(aperture), offset=offset, n_values=list(n_values),
             snr_db=snr_db, n_trials=n_trials, seed=seed, n_t=n_t_eff, d_y=d_y)
    )
    reports = []
    for idx, n in enumerate(n_values):
        ny = ny_fixed if densify is DensifyAxis.X_ONLY else n
        g = planar_family_geometry(layout, lx, ly, n, ny, offset)
        psi = clarke_correlation_closed_form(g)
        ens = synthesize_correlated_channels(psi, n_t_eff, n_trials, seed, point_index=idx)
        rep = ergodic_capacity(ens, snr_db)
        reports.append(
            rep.with_(sweep_n=n, n_elements=g.n_elements, edof=edof(psi),
                      seed=seed, scenario_fingerprint=fp)
        )
    return reports
