"""Geometric channel construction, ULA steering, codebook and beam sweep.

The base station uses a uniform linear array in the horizontal plane; the
UE side is modeled single-antenna, so beam selection happens only at the
BS. Angles are azimuth-only: the codebook covers the array half-space
[0, 180) degrees measured from the array axis, split into Q equal bins
(pi/Q radians apart), each beam steered at its bin midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .raytrace import PathComponent

#: SNR reported for a zero (outage) channel.
OUTAGE_SNR_DB = float("-inf")


def array_response(n_elements: int, spacing_wavelengths: float,
                   az_deg: float) -> np.ndarray:
    """ULA steering vector: element k has phase 2*pi*d*k*cos(az)."""
    phase = (2.0 * math.pi * spacing_wavelengths
             * math.cos(math.radians(az_deg)))
    return np.exp(1j * phase * np.arange(n_elements))


def world_to_array_deg(az_world_deg: float, boresight_deg: float) -> float:
    """World azimuth -> angle from the array axis, in [0, 360).

    The array line is perpendicular to the boresight; a source exactly at
    boresight maps to 90 degrees (broadside). Values in [0, 180) are the
    front half-space covered by the codebook.
    """
    return (az_world_deg - boresight_deg + 90.0) % 360.0


def array_to_world_deg(az_array_deg: float, boresight_deg: float) -> float:
    return (az_array_deg + boresight_deg - 90.0) % 360.0


@dataclass(frozen=True, eq=False)
class BeamVector:
    """Unit-norm beamforming vector with its angular bin [lo, hi)."""

    w: np.ndarray
    center_az_deg: float
    bin_lo_deg: float
    bin_hi_deg: float


@dataclass(frozen=True, eq=False)
class Codebook:
    beams: tuple[BeamVector, ...]
    matrix: np.ndarray = field(repr=False)  # (Q, N), rows are beam vectors

    @property
    def q(self) -> int:
        return len(self.beams)

    def bin_index(self, az_array_deg: float) -> int | None:
        """Codebook bin containing an array-relative azimuth, else None."""
        if not 0.0 <= az_array_deg < 180.0:
            return None
        return min(int(az_array_deg * self.q / 180.0), self.q - 1)


def generate_codebook(n_elements: int, spacing_wavelengths: float,
                      q: int) -> Codebook:
    """Q beams of identical pi/Q angular separation tiling [0, 180)."""
    if q < 1:
        raise ValueError("codebook size must be >= 1")
    width = 180.0 / q
    beams = []
    rows = np.empty((q, n_elements), dtype=complex)
    for i in range(q):
        center = (i + 0.5) * width
        w = array_response(n_elements, spacing_wavelengths, center)
        w = w / math.sqrt(n_elements)
        rows[i] = w
        beams.append(BeamVector(
            w=w,
            center_az_deg=center,
            bin_lo_deg=i * width,
            bin_hi_deg=(i + 1) * width,
        ))
    return Codebook(beams=tuple(beams), matrix=rows)


def build_channel(paths: list[PathComponent], n_elements: int,
                  spacing_wavelengths: float,
                  boresight_deg: float) -> np.ndarray:
    """Sum of complex path gains times steering vectors at their AoDs."""
    h = np.zeros(n_elements, dtype=complex)
    for path in paths:
        az = world_to_array_deg(path.aod_az_deg, boresight_deg)
        h += path.gain * array_response(n_elements, spacing_wavelengths, az)
    return h


def beam_snr(h: np.ndarray, w: np.ndarray, tx_power_dbm: float,
             noise_power_dbm: float) -> float:
    """SNR in dB of beam w over channel h; -inf for a zero channel."""
    if h.shape != w.shape:
        raise ValueError(f"dimension mismatch: {h.shape} vs {w.shape}")
    g = abs(np.vdot(w, h))
    if g == 0.0:
        return OUTAGE_SNR_DB
    return tx_power_dbm + 20.0 * math.log10(g) - noise_power_dbm


def sweep_snrs(h: np.ndarray, codebook: Codebook, tx_power_dbm: float,
               noise_power_dbm: float) -> list[float]:
    """Per-beam SNR table, order matching codebook.beams."""
    g = np.abs(codebook.matrix.conj() @ h)
    out = np.full(codebook.q, OUTAGE_SNR_DB)
    nz = g > 0.0
    out[nz] = tx_power_dbm + 20.0 * np.log10(g[nz]) - noise_power_dbm
    return [float(x) for x in out]


def optimal_beam(h: np.ndarray, codebook: Codebook, tx_power_dbm: float,
                 noise_power_dbm: float
                 ) -> tuple[int | None, float | None, list[float]]:
    """Beam-sweep oracle: argmax of per-beam SNR, ties to the lowest index.

    Returns (index, snr_db, per-beam snrs); index is None on outage.
    """
    snrs = sweep_snrs(h, codebook, tx_power_dbm, noise_power_dbm)
    if all(s == OUTAGE_SNR_DB for s in snrs):
        return None, None, snrs
    best = 0
    for i, s in enumerate(snrs):
        if s > snrs[best]:
            best = i
    return best, snrs[best], snrs
