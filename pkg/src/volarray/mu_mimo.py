"""Multiuser downlink: user drops, ZF/MMSE precoding, SINR, sum capacity."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularMatrixError
from .seeding import derive_rng


class DropDistribution(str, enum.Enum):
    DISC_2D = "disc_2d"
    VOLUME_3D = "volume_3d"


class PowerSplit(str, enum.Enum):
    EQUAL = "equal"


@dataclass(frozen=True)
class UserDrop:
    """User positions in meters around the base-station ground point."""

    positions: np.ndarray  # (K, 3)
    distribution: DropDistribution
    seed: int
    radius_m: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] == 0:
            raise InvalidArgumentError("positions must be a nonempty (K, 3) array")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def n_users(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class MultiuserChannel:
    """Row-per-user downlink channel with normalized noise power."""

    h_rows: np.ndarray  # (K, U)
    noise_power: float
    k_users: int
    n_bs_antennas: int

    def __post_init__(self):
        h = np.asarray(self.h_rows, dtype=complex)
        if h.shape != (self.k_users, self.n_bs_antennas):
            raise InvalidArgumentError("h_rows shape must be (K, U)")
        if not np.all(np.isfinite(h.view(float))):
            raise InvalidArgumentError("channel entries must be finite")
        if self.noise_power <= 0:
            raise InvalidArgumentError("noise_power must be > 0")
        h.setflags(write=False)
        object.__setattr__(self, "h_rows", h)


class PrecoderKind(str, enum.Enum):
    ZF = "zf"
    MMSE = "mmse"


@dataclass(frozen=True)
class Precoder:
    """Unit-norm precoding columns, one per user."""

    w_cols: np.ndarray  # (U, K)
    kind: PrecoderKind
    alpha: float

    def __post_init__(self):
        w = np.asarray(self.w_cols, dtype=complex)
        w.setflags(write=False)
        object.__setattr__(self, "w_cols", w)


def drop_users(
    k: int,
    radius_m: float,
    mode: DropDistribution = DropDistribution.DISC_2D,
    height_spec=1.5,
    seed: int = 0,
) -> UserDrop:
    """Uniform drop over a disc (fixed height) or a cylinder (height range)."""
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if radius_m <= 0:
        raise InvalidArgumentError("radius must be positive")
    rng = derive_rng(seed, 101)
    r = radius_m * np.sqrt(rng.random(k))  # sqrt law: uniform over area
    ang = rng.uniform(0.0, 2.0 * np.pi, k)
    if mode is DropDistribution.DISC_2D:
        z = np.full(k, float(height_spec))
    else:
        lo, hi = height_spec
        if hi < lo:
            raise InvalidArgumentError("height range must satisfy lo <= hi")
        z = rng.uniform(lo, hi, k)
    pts = np.column_stack([r * np.cos(ang), r * np.sin(ang), z])
    return UserDrop(pts, mode, seed, radius_m)


def mmse_precoder(h: MultiuserChannel, alpha: float = 0.0) -> Precoder:
    """W = H^H (H H^H + alpha I)^(-1) with unit-normalized columns.

    alpha = 0 yields the zero-forcing (pseudo-inverse) directions; a
    rank-deficient system at alpha = 0 raises ``SingularMatrixError``.
    """
    if alpha < 0:
        raise InvalidArgumentError("alpha must be >= 0")
    hh = h.h_rows @ h.h_rows.conj().T
    k = h.k_users
    m = hh + alpha * np.eye(k)
    if alpha == 0.0:
        rank = np.linalg.matrix_rank(h.h_rows)
        if rank < k:
            raise SingularMatrixError(
                f"H has rank {rank} < {k}; zero-forcing needs full row rank "
                "(use alpha > 0)"
            )
    try:
        w = h.h_rows.conj().T @ np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"precoder system is singular: {exc} (use alpha > 0)") from None
    norms = np.linalg.norm(w, axis=0)
    if np.any(norms == 0):
        raise SingularMatrixError("precoder produced a zero column")
    kind = PrecoderKind.ZF if alpha == 0.0 else PrecoderKind.MMSE
    return Precoder(w / norms, kind, alpha)


def sinr_per_user(
    h: MultiuserChannel,
    w: Precoder,
    power_split: PowerSplit = PowerSplit.EQUAL,
    total_power: float | None = None,
) -> np.ndarray:
    """Per-user SINR |h_k w_k|^2 / (sum_j |h_k w_j|^2 + noise) under equal split.

    Each unit-norm column is scaled by sqrt(P/K); the default total power P
    equals K, i.e. unit power per user.
    """
    if w.w_cols.shape != (h.n_bs_antennas, h.k_users):
        raise InvalidArgumentError("precoder shape disagrees with the channel")
    if power_split is not PowerSplit.EQUAL:
        raise InvalidArgumentError(f"unsupported power split {power_split}")
    p_tot = float(total_power) if total_power is not None else float(h.k_users)
    per_user = p_tot / h.k_users
    gains = np.abs(h.h_rows @ w.w_cols) ** 2 * per_user  # (K, K): user k x stream j
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + h.noise_power)


def sum_capacity(sinrs) -> float:
    """Sum over users of log2(1 + SINR)."""
    s = np.asarray(sinrs, dtype=float)
    if np.any(s < 0):
        raise InvalidArgumentError("SINRs must be non-negative")
    return float(np.sum(np.log2(1.0 + s)))
