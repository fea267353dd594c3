"""Swarm state: lattice positions, neighbor graph and action semantics.

Positions live on a regular lattice.  Internally each UAV occupies an
integer cell ``(i, j, k)``; its coordinate in meters is
``origin + step * (i, j, k)``.  A :class:`SwarmState` is an immutable
value, :func:`apply_action` returns a new one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import CollisionError, ConfigError, InitError, RestrictedActionError


class Action(Enum):
    """The seven lattice moves; the value is the unit displacement."""

    STAY = (0, 0, 0)
    UP = (0, 0, 1)
    DOWN = (0, 0, -1)
    LEFT = (0, -1, 0)
    RIGHT = (0, 1, 0)
    FORWARD = (1, 0, 0)
    BACKWARD = (-1, 0, 0)

    @property
    def delta(self) -> tuple[int, int, int]:
        return self.value

    @property
    def inverse(self) -> "Action":
        return Action(tuple(-c for c in self.value))


ACTIONS = tuple(Action)


@dataclass(frozen=True)
class Lattice:
    """Finite box of lattice points ``origin + step * (i, j, k)``."""

    shape: tuple[int, int, int]
    step: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(s) != s or s < 1 for s in self.shape):
            raise ConfigError(f"lattice shape must be three positive ints, got {self.shape}")
        if not self.step > 0:
            raise ConfigError(f"lattice step must be positive, got {self.step}")
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def from_volume(cls, volume, step) -> "Lattice":
        """Lattice filling ``[0, Lx] x [0, Ly] x (0, Lz]``; z = 0 is excluded."""
        lx, ly, lz = (float(v) for v in volume)
        nx = int(math.floor(lx / step + 1e-9)) + 1
        ny = int(math.floor(ly / step + 1e-9)) + 1
        nz = int(math.floor(lz / step + 1e-9))
        return cls((nx, ny, nz), float(step), (0.0, 0.0, float(step)))

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1] * self.shape[2]

    def contains(self, cell) -> bool:
        return all(0 <= c < s for c, s in zip(cell, self.shape))

    def to_meters(self, cells) -> np.ndarray:
        return np.asarray(self.origin) + self.step * np.asarray(cells, dtype=float)

    def unravel(self, flat) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(flat), self.shape), axis=-1)

    def ravel(self, cells) -> np.ndarray:
        cells = np.asarray(cells)
        return np.ravel_multi_index(tuple(cells.T), self.shape)


def _within(positions, radius) -> np.ndarray:
    """Boolean ``|p_i - p_j| <= radius`` matrix with an empty diagonal."""
    P = np.asarray(positions, dtype=float)
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
    A = D <= radius
    np.fill_diagonal(A, False)
    return A


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected, irreflexive communication graph."""

    adjacency: np.ndarray = field(repr=False)
    neighbors: tuple = field(default=None, repr=False)

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("adjacency must be square")
        if np.any(np.diag(A)) or np.any(A != A.T):
            raise ConfigError("adjacency must be symmetric and irreflexive")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "neighbors",
                           tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in A))

    @classmethod
    def from_positions(cls, positions, radius) -> "NeighborGraph":
        return cls(_within(positions, radius))

    @classmethod
    def complete(cls, n) -> "NeighborGraph":
        return cls(~np.eye(n, dtype=bool))

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(int(a), int(b)) for a, b in zip(i, j)]

    def is_connected(self) -> bool:
        n, _ = connected_components(self.adjacency, directed=False)
        return n == 1


@dataclass(frozen=True, eq=False)
class SwarmState:
    """Positions of all UAVs plus the neighbor graph (one Markov-chain state)."""

    cells: np.ndarray = field(repr=False)
    lattice: Lattice
    graph: NeighborGraph = field(repr=False)
    iteration: int = 0
    seed: object = None
    radius: float = math.inf

    def __post_init__(self):
        c = np.array(self.cells, dtype=np.int64).reshape(-1, 3)
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)
        if self.graph.n_vertices != len(c):
            raise ConfigError("graph size does not match the number of UAVs")

    @property
    def n_uavs(self) -> int:
        return len(self.cells)

    @property
    def positions(self) -> np.ndarray:
        """UAV coordinates in meters, shape ``(M, 3)``."""
        return self.lattice.to_meters(self.cells)

    def position(self, m) -> np.ndarray:
        return self.lattice.to_meters(self.cells[m])

    def occupied(self) -> set:
        return {tuple(c) for c in self.cells.tolist()}

    def with_cells(self, cells, **changes) -> "SwarmState":
        return replace(self, cells=cells, **changes)

    def same_positions(self, other) -> bool:
        return np.array_equal(self.cells, other.cells)

    def to_json(self) -> str:
        return json.dumps(state_to_dict(self))


def state_to_dict(state: SwarmState) -> dict:
    return {
        "iteration": state.iteration,
        "seed": state.seed,
        "lattice": {"shape": list(state.lattice.shape), "step": state.lattice.step,
                    "origin": list(state.lattice.origin)},
        "cells": state.cells.tolist(),
        "positions": state.positions.tolist(),
        "edges": [list(e) for e in state.graph.edges],
        "radius": state.radius if math.isfinite(state.radius) else None,
    }


def state_from_dict(d: dict) -> SwarmState:
    lat = Lattice(tuple(d["lattice"]["shape"]), d["lattice"]["step"], tuple(d["lattice"]["origin"]))
    cells = np.asarray(d["cells"], dtype=np.int64)
    A = np.zeros((len(cells), len(cells)), dtype=bool)
    for i, j in d["edges"]:
        A[i, j] = A[j, i] = True
    radius = d.get("radius")
    return SwarmState(cells, lat, NeighborGraph(A), d.get("iteration", 0), d.get("seed"),
                      math.inf if radius is None else radius)


def state_from_json(text: str) -> SwarmState:
    return state_from_dict(json.loads(text))


def make_state(cells, lattice: Lattice, graph: NeighborGraph | None = None,
               radius: float = math.inf, **kw) -> SwarmState:
    """Convenience constructor; builds the graph from ``radius`` if not given."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
    if len({tuple(c) for c in cells.tolist()}) != len(cells):
        raise CollisionError("duplicate UAV positions")
    if not all(lattice.contains(c) for c in cells.tolist()):
        raise ConfigError("cell outside the lattice")
    if graph is None:
        graph = NeighborGraph.from_positions(lattice.to_meters(cells), radius)
    return SwarmState(cells, lattice, graph, radius=radius, **kw)


def init_state(config, seed) -> SwarmState:
    """Uniform random distinct placement with a connected neighbor graph.

    Placements are redrawn (up to ``config.init_retries`` times) until the
    graph induced by ``config.comm_radius`` is connected.
    """
    lattice = Lattice.from_volume(config.volume, config.lattice_step)
    m = config.n_uavs
    if lattice.size < m:
        raise InitError(f"lattice has {lattice.size} points, fewer than {m} UAVs")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
    for _ in range(config.init_retries):
        flat = rng.choice(lattice.size, size=m, replace=False)
        cells = lattice.unravel(flat)
        A = _within(lattice.to_meters(cells), config.comm_radius)
        if m > 1 and not A.any(axis=1).all():
            continue  # an isolated UAV already rules the draw out
        graph = NeighborGraph(A)
        if graph.is_connected():
            return SwarmState(cells, lattice, graph, 0, seed, config.comm_radius)
    raise InitError(f"no connected placement after {config.init_retries} attempts")


def restricted_actions(m: int, state: SwarmState) -> tuple[Action, ...]:
    """Legal actions of UAV ``m``: no collision, no leaving the volume.

    ``STAY`` is always legal.  Order follows :data:`ACTIONS`.
    """
    here = state.cells[m]
    occupied = state.occupied()
    out = []
    for a in ACTIONS:
        if a is Action.STAY:
            out.append(a)
            continue
        target = (int(here[0] + a.value[0]), int(here[1] + a.value[1]), int(here[2] + a.value[2]))
        if state.lattice.contains(target) and target not in occupied:
            out.append(a)
    return tuple(out)


def apply_action(state: SwarmState, m: int, action: Action, *, check=True,
                 dynamic_graph=False) -> SwarmState:
    """Move UAV ``m`` by one lattice step in direction ``action``."""
    if check and action not in restricted_actions(m, state):
        raise RestrictedActionError(f"action {action.name} is not legal for UAV {m}")
    if action is Action.STAY:
        return state
    cells = state.cells.copy()
    cells[m] += action.value
    if dynamic_graph:
        graph = NeighborGraph.from_positions(state.lattice.to_meters(cells), state.radius)
        return state.with_cells(cells, graph=graph)
    return state.with_cells(cells)


@dataclass(frozen=True)
class LocalView:
    """What UAV ``uav`` knows: its own and its neighbors' coordinates."""

    uav: int
    position: tuple
    neighbor_ids: tuple
    neighbor_positions: tuple

    def ids(self) -> tuple:
        """Neighbor ids followed by the owner (the column order of H_m)."""
        return self.neighbor_ids + (self.uav,)

    def coordinates(self) -> np.ndarray:
        return np.array(self.neighbor_positions + (self.position,), dtype=float).reshape(-1, 3)

    def moved(self, uav: int, position) -> "LocalView":
        """Copy of the view with ``uav`` (self or a neighbor) relocated."""
        position = tuple(float(c) for c in position)
        if uav == self.uav:
            return replace(self, position=position)
        idx = self.neighbor_ids.index(uav)
        nb = list(self.neighbor_positions)
        nb[idx] = position
        return replace(self, neighbor_positions=tuple(nb))


def local_view(m: int, state: SwarmState) -> LocalView:
    nbrs = state.graph.neighbors[m]
    P = state.positions
    return LocalView(
        uav=int(m),
        position=tuple(P[m].tolist()),
        neighbor_ids=tuple(nbrs),
        neighbor_positions=tuple(tuple(P[i].tolist()) for i in nbrs),
    )
