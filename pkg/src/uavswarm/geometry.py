"""URA geometry and line-of-sight air-to-ground channel.

The ground station carries an ``nx`` x ``ny`` uniform rectangular array on
the z = 0 plane; every UAV carries a single antenna.  Only the LoS
component is modelled.  In *normalized* mode each channel entry is the
pure phase term ``exp(-j 2 pi d / lambda)``; *physical* mode additionally
applies the free-space amplitude ``lambda / (4 pi d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, ConfigError, GeometryError

NORMALIZED = "normalized"
PHYSICAL = "physical"
_MODES = (NORMALIZED, PHYSICAL)


@dataclass(frozen=True)
class AntennaArray:
    """Uniform rectangular array on the ground plane.

    Antenna ``n`` (0-based here) with ``n = iy * nx + ix`` sits at
    ``(ix * spacing, iy * spacing, 0)``.
    """

    nx: int
    ny: int
    spacing: float
    positions: np.ndarray = field(repr=False, compare=False)

    @property
    def n_antennas(self) -> int:
        return self.nx * self.ny

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.nx - 1) * self.spacing, (self.ny - 1) * self.spacing)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.extent[0] / 2, self.extent[1] / 2, 0.0])


def build_ura(nx: int, ny: int, spacing: float) -> AntennaArray:
    """Build a URA with ``nx * ny`` antennas spaced ``spacing`` meters apart."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ConfigError(f"URA needs positive integer counts, got nx={nx}, ny={ny}")
    if not spacing > 0:
        raise ConfigError(f"URA spacing must be positive, got {spacing}")
    nx, ny = int(nx), int(ny)
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    pos = np.column_stack([ix * float(spacing), iy * float(spacing), np.zeros(nx * ny)])
    pos.setflags(write=False)
    return AntennaArray(nx, ny, float(spacing), pos)


def distance(p, q) -> float:
    """Euclidean distance between a UAV position and an antenna coordinate."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.sqrt(np.sum((p - q) ** 2)))


def _check_mode(mode):
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}, got {mode!r}")


def phase_fraction(d, wavelength):
    """Return ``(d mod lambda) / lambda`` in [0, 1).

    Reducing modulo the wavelength before scaling by 2 pi keeps the
    argument of the complex exponential small at d >> lambda.
    """
    return np.mod(d, wavelength) / wavelength


def channel_entry(p, antenna, wavelength: float, mode: str = NORMALIZED) -> complex:
    """LoS gain between one UAV and one antenna."""
    _check_mode(mode)
    if not wavelength > 0:
        raise ConfigError(f"wavelength must be positive, got {wavelength}")
    d = distance(p, antenna)
    if d == 0.0:
        raise GeometryError("UAV coincides with an antenna (zero distance)")
    g = complex(np.exp(-2j * np.pi * phase_fraction(d, wavelength)))
    if mode == PHYSICAL:
        g *= wavelength / (4 * np.pi * d)
    return g


def distances(positions, array: AntennaArray) -> np.ndarray:
    """Distance table of shape ``(len(positions), N)``."""
    P = np.atleast_2d(np.asarray(positions, dtype=float))
    diff = P[:, None, :] - array.positions[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def channel_matrix(positions, array: AntennaArray, wavelength: float,
                   mode: str = NORMALIZED) -> np.ndarray:
    """N x M channel matrix; column ``m`` is the channel vector of UAV ``m``."""
    _check_mode(mode)
    if not wavelength > 0:
        raise ConfigError(f"wavelength must be positive, got {wavelength}")
    P = np.atleast_2d(np.asarray(positions, dtype=float))
    if P.shape[0] == 0:
        raise ConfigError("at least one UAV position is required")
    if len(np.unique(P, axis=0)) != len(P):
        raise CollisionError("duplicate UAV positions")
    D = distances(P, array)
    if np.any(D == 0.0):
        raise GeometryError("UAV coincides with an antenna (zero distance)")
    H = np.exp(-2j * np.pi * phase_fraction(D, wavelength)).T
    if mode == PHYSICAL:
        H = H * (wavelength / (4 * np.pi * D.T))
    return H


def local_channel_matrix(m: int, state, array: AntennaArray, wavelength: float,
                         mode: str = NORMALIZED) -> np.ndarray:
    """Channel matrix ``[h_i for i in neighbors(m)] + [h_m]`` of UAV ``m``."""
    ids = list(state.graph.neighbors[m]) + [m]
    return channel_matrix(state.positions[ids], array, wavelength, mode)


class LosChannel:
    """Cached normalized-phase lookup for lattice positions.

    Positions on the lattice recur constantly during a run, so the phase
    fractions ``(d mod lambda)/lambda`` of each visited point are memoized.
    Results are identical to :func:`channel_matrix`.
    """

    def __init__(self, array: AntennaArray, wavelength: float):
        if not wavelength > 0:
            raise ConfigError(f"wavelength must be positive, got {wavelength}")
        self.array = array
        self.wavelength = float(wavelength)
        self._cache: dict[tuple, np.ndarray] = {}

    @property
    def n_antennas(self) -> int:
        return self.array.n_antennas

    def phases(self, positions) -> np.ndarray:
        """Phase fractions, shape ``(k, N)``, for ``k`` positions."""
        P = np.atleast_2d(np.asarray(positions, dtype=float))
        rows = []
        for p in P:
            key = (p[0], p[1], p[2])
            row = self._cache.get(key)
            if row is None:
                d = distances(p, self.array)[0]
                if np.any(d == 0.0):
                    raise GeometryError("UAV coincides with an antenna (zero distance)")
                row = phase_fraction(d, self.wavelength)
                row.setflags(write=False)
                self._cache[key] = row
            rows.append(row)
        return np.array(rows)

    def matrix(self, positions) -> np.ndarray:
        return np.exp(-2j * np.pi * self.phases(positions)).T
