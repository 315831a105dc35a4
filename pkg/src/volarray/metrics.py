"""Effective degrees of freedom and capacity evaluators.

Capacity is reported in bits/s/Hz (unit bandwidth, log base 2) with equal
power allocation across transmit antennas: per channel draw,
log2 det(I + gamma/N_t * H H^H).
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError, TrialCountWarning
from .seeding import derive_rng

_HERMITIAN_TOL = 1e-12
MIN_REPORT_TRIALS = 100


class ModelTag(str, enum.Enum):
    CLARKE_IID = "clarke_iid"
    CLARKE_CORRELATED = "clarke_correlated"
    KRONECKER = "kronecker"
    UMA_3GPP = "uma_3gpp"


class CorrelationMatrix:
    """Hermitian PSD correlation/covariance container with cached eigenvalues.

    Eigenvalues are sorted non-increasing and clamped at zero. Construction
    rejects matrices that are not Hermitian within 1e-12 (relative to the
    largest entry magnitude).
    """

    def __init__(self, entries, warning: str | None = None):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InvalidArgumentError("entries must be a nonempty square matrix")
        scale = max(1.0, float(np.abs(m).max()))
        if not np.allclose(m, m.conj().T, atol=_HERMITIAN_TOL * scale, rtol=0.0):
            raise InvalidArgumentError("matrix is not Hermitian within tolerance")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.entries = m
        self.warning = warning
        self._eigenvalues: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Real eigenvalues, non-increasing, clamped at 0."""
        if self._eigenvalues is None:
            w = np.linalg.eigvalsh(self.entries)[::-1]
            self._eigenvalues = np.clip(w, 0.0, None)
            self._eigenvalues.setflags(write=False)
        return self._eigenvalues

    def sqrt(self) -> np.ndarray:
        """Hermitian matrix square root (negative eigenvalues clipped to 0)."""
        w, v = np.linalg.eigh(self.entries)
        w = np.clip(w, 0.0, None)
        return (v * np.sqrt(w)) @ v.conj().T

    def min_eigenvalue_raw(self) -> float:
        """Smallest eigenvalue before clamping (PSD diagnostics)."""
        return float(np.linalg.eigvalsh(self.entries)[0])


@dataclass(frozen=True)
class ChannelEnsemble:
    """Monte-Carlo channel draws plus the parameters that generated them."""

    matrices: np.ndarray  # (n_trials, n_r, n_t)
    seed: int
    n_t: int
    n_r: int
    model_tag: ModelTag
    psi: CorrelationMatrix | None = None

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[0] == 0:
            raise InvalidArgumentError("matrices must be a nonempty (T, N_r, N_t) stack")
        if m.shape[1] != self.n_r or m.shape[2] != self.n_t:
            raise InvalidArgumentError("matrix dimensions disagree with n_r/n_t")
        object.__setattr__(self, "matrices", m)

    @property
    def n_trials(self) -> int:
        return self.matrices.shape[0]


@dataclass(frozen=True)
class CapacityReport:
    """One sweep point: EDOF, mean capacity, confidence interval, provenance."""

    sweep_n: int
    n_elements: int
    edof: float
    capacity: float
    ci95: float
    seed: int
    scenario_fingerprint: str
    avg_efficiency: float | None = None

    def with_(self, **kw) -> "CapacityReport":
        return replace(self, **kw)


def edof(psi: CorrelationMatrix) -> float:
    """(tr Psi)^2 / ||Psi||_F^2, the equivalent number of independent SISO channels."""
    tr = float(np.real(np.trace(psi.entries)))
    fro2 = float(np.sum(np.abs(psi.entries) ** 2))
    if fro2 == 0.0:
        raise InvalidArgumentError("zero matrix has no EDOF")
    return tr * tr / fro2


def dof_rank(psi: CorrelationMatrix, rel_threshold: float = 0.01) -> int:
    """Number of eigenvalues >= rel_threshold * largest eigenvalue."""
    if not 0.0 < rel_threshold < 1.0:
        raise InvalidArgumentError("rel_threshold must be in (0, 1)")
    w = psi.eigenvalues
    if w[0] == 0.0:
        raise InvalidArgumentError("zero matrix has no DOF")
    return int(np.sum(w >= rel_threshold * w[0]))


def edof_capacity_approx(edof_value: float, snr_db: float) -> float:
    """Capacity estimate Psi_e * log2(1 + gamma / Psi_e) at unit bandwidth."""
    if edof_value < 1.0:
        raise InvalidArgumentError("edof must be >= 1")
    gamma = 10.0 ** (snr_db / 10.0)
    return edof_value * np.log2(1.0 + gamma / edof_value)


def _logdet_capacities(matrices: np.ndarray, gamma: float, n_t: int) -> np.ndarray:
    """Per-trial log2 det(I + gamma/n_t H H^H), chunked batched Cholesky."""
    n_trials, n_r, _ = matrices.shape
    caps = np.empty(n_trials)
    eye = np.eye(n_r)
    chunk = max(1, min(n_trials, int(64e6 / (16 * n_r * n_r)) or 1))
    for lo in range(0, n_trials, chunk):
        h = matrices[lo : lo + chunk]
        gram = h @ h.conj().transpose(0, 2, 1)
        m = eye + (gamma / n_t) * gram
        ell = np.linalg.cholesky(m)
        diag = np.real(np.einsum("tii->ti", ell))
        caps[lo : lo + chunk] = 2.0 * np.sum(np.log2(diag), axis=1)
    return caps


def _sample_receive_correlation(ensemble: ChannelEnsemble) -> CorrelationMatrix:
    h = ensemble.matrices
    acc = np.einsum("tij,tkj->ik", h, h.conj()) / (ensemble.n_trials * ensemble.n_t)
    return CorrelationMatrix(acc)


def iid_ensemble(n_r: int, n_t: int, n_trials: int, seed: int) -> ChannelEnsemble:
    """Spatially white ensemble with unit-variance complex Gaussian entries."""
    if n_r < 1 or n_t < 1 or n_trials < 1:
        raise InvalidArgumentError("n_r, n_t, n_trials must be >= 1")
    draws = np.empty((n_trials, n_r, n_t), dtype=complex)
    for t in range(n_trials):
        rng = derive_rng(seed, 0, t)
        draws[t] = (
            rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
        ) / np.sqrt(2.0)
    return ChannelEnsemble(draws, seed, n_t, n_r, ModelTag.CLARKE_IID)


def ergodic_capacity(ensemble: ChannelEnsemble, snr_db: float) -> CapacityReport:
    """Mean log-det capacity over the ensemble with a 95% confidence interval.

    EDOF is taken from the ensemble's generating correlation matrix when it
    is attached, otherwise from the sample receive correlation.
    """
    if ensemble.n_trials == 0:
        raise InvalidArgumentError("empty ensemble")
    if ensemble.n_trials < MIN_REPORT_TRIALS:
        warnings.warn(
            f"capacity report from {ensemble.n_trials} trials "
            f"(recommended >= {MIN_REPORT_TRIALS})",
            TrialCountWarning,
            stacklevel=2,
        )
    gamma = 10.0 ** (snr_db / 10.0)
    caps = _logdet_capacities(ensemble.matrices, gamma, ensemble.n_t)
    mean = float(caps.mean())
    ci = 0.0 if caps.size == 1 else float(1.96 * caps.std(ddof=1) / np.sqrt(caps.size))
    psi = ensemble.psi if ensemble.psi is not None else _sample_receive_correlation(ensemble)
    return CapacityReport(
        sweep_n=ensemble.n_r,
        n_elements=ensemble.n_r,
        edof=edof(psi),
        capacity=mean,
        ci95=ci,
        seed=ensemble.seed,
        scenario_fingerprint="",
    )


def kronecker_capacity(
    r: CorrelationMatrix, n_t: int, snr_db: float, n_trials: int, seed: int
) -> CapacityReport:
    """Monte-Carlo capacity of a receive-covariance channel R^(1/2) H_w.

    Reduces to :func:`ergodic_capacity` of an i.i.d. ensemble when R = I.
    """
    if n_t < 1 or n_trials < 1:
        raise InvalidArgumentError("n_t and n_trials must be >= 1")
    s = r.sqrt()
    n_r = r.n
    draws = np.empty((n_trials, n_r, n_t), dtype=complex)
    for t in range(n_trials):
        rng = derive_rng(seed, 0, t)
        hw = (
            rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))
        ) / np.sqrt(2.0)
        draws[t] = s @ hw
    ens = ChannelEnsemble(draws, seed, n_t, n_r, ModelTag.KRONECKER, psi=r)
    return ergodic_capacity(ens, snr_db)
