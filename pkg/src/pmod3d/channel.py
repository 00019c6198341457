"""Dual-polarization channel: XPD/PDL matrix and complex AWGN.

Impairments are given in positive dB as attenuations. A cross-polar
discrimination of ``xpd_db`` leaks ``sqrt(10**(-xpd_db/10))`` of each
polarization into the other; a polarization-dependent loss of ``pdl_db``
scales the vertical branch by ``sqrt(10**(-pdl_db/10))``. ``xpd_db = inf``
and ``pdl_db = 0`` give the identity channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NO_XPD = math.inf


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelMatrix:
    h: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    zeta_db: float = NO_XPD
    psi_db: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.shape != (2, 2):
            raise ValueError(f"channel matrix must be 2x2, got {h.shape}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @classmethod
    def identity(cls) -> "ChannelMatrix":
        return cls()

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.h, np.eye(2)))

    def apply(self, x: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
        """``y = H x + w`` for a single ``(2,)`` vector or a ``(B, 2)`` batch."""
        y = np.asarray(x) @ self.h.T
        return y if w is None else y + w

    def __eq__(self, other):
        if not isinstance(other, ChannelMatrix):
            return NotImplemented
        return np.array_equal(self.h, other.h)

    def __hash__(self):
        return hash(self.h.tobytes())


def xpd_pdl_matrix(xpd_db: float, pdl_db: float) -> ChannelMatrix:
    """``H = H_xpd @ H_pdl = [[1, sqrt(1/(zeta psi))], [sqrt(1/zeta), sqrt(1/psi)]]``."""
    if xpd_db < 0 or pdl_db < 0:
        raise ValueError("XPD and PDL are attenuations in dB and must be >= 0")
    leak = 0.0 if math.isinf(xpd_db) else math.sqrt(1.0 / db_to_linear(xpd_db))
    gain = math.sqrt(1.0 / db_to_linear(pdl_db))
    h = np.array([[1.0, leak * gain], [leak, gain]], dtype=complex)
    return ChannelMatrix(h, xpd_db, pdl_db)


def as_matrix(h) -> np.ndarray:
    if h is None:
        return np.eye(2, dtype=complex)
    if isinstance(h, ChannelMatrix):
        return h.h
    return np.asarray(h, dtype=complex)


def snr_to_n0(snr_db: float, energy: float = 1.0) -> float:
    """Noise power per complex dimension for symbol SNR ``energy / n0``."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return energy / db_to_linear(snr_db)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for the substream ``stream`` of a master ``seed``.

    Streams are keyed by position rather than spawn order, so (seed, point,
    chunk) always maps to the same numbers however the work is scheduled.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def awgn(n0: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``(size, 2)`` circularly-symmetric complex Gaussian noise, variance ``n0`` each."""
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    w = rng.standard_normal((size, 4)).view(np.complex128)
    w *= math.sqrt(n0 / 2.0)
    return w


def awgn_sample(n0: float, rng: np.random.Generator) -> np.ndarray:
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    return awgn(n0, rng, 1)[0]
