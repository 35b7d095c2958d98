"""Congestion games, flows, loads, the potential function and social costs.

A game is (n players, edges with polynomial costs, per-player path sets).
Every player routes a total load of 1/n, split across her allowed paths; the
joint strategy is a flat vector over all (player, path) pairs.  The potential
is Phi(x) = sum_e F_e(load_e(x)) with F_e the antiderivative of the edge
cost, so its gradient entries are exactly the path costs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .costs import PolynomialCost

FEASIBILITY_TOL = 1e-12
SUPPORT_TOL = 1e-9  # entries above this count as used paths


class GameStructureError(ValueError):
    """Raised on malformed games or dimension mismatches."""


@dataclass(frozen=True)
class SmoothnessParams:
    """Certified bounds: Phi <= alpha, |grad Phi|_inf <= beta, hessian <= lam * I."""

    alpha: float
    beta: float
    lam: float


@dataclass(frozen=True)
class CongestionGame:
    n: int
    edges: tuple[PolynomialCost, ...]
    paths: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self, "paths", tuple(tuple(frozenset(p) for p in pl) for pl in self.paths)
        )
        if self.n < 1:
            raise GameStructureError("need at least one player")
        if len(self.edges) < 1:
            raise GameStructureError("need at least one edge")
        if len(self.paths) != self.n:
            raise GameStructureError(f"expected {self.n} path lists, got {len(self.paths)}")
        m = len(self.edges)
        for i, player_paths in enumerate(self.paths):
            if len(player_paths) < 1:
                raise GameStructureError(f"player {i} has no paths")
            for s in player_paths:
                if len(s) == 0:
                    raise GameStructureError(f"player {i} has an empty path")
                if any(e < 0 or e >= m for e in s):
                    raise GameStructureError(f"player {i} references an unknown edge")

    # -- structural parameters ------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(pl) for pl in self.paths)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Start index of each player's block in the flat strategy vector."""
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    @property
    def d(self) -> int:
        return max(self.sizes)

    @cached_property
    def m_path(self) -> int:
        """Maximum path length (number of edges on one path)."""
        return max(len(s) for pl in self.paths for s in pl)

    @cached_property
    def k(self) -> int:
        """Max number of one player's paths meeting a single path of hers (incl. itself)."""
        worst = 0
        for pl in self.paths:
            for s in pl:
                worst = max(worst, sum(1 for r in pl if s & r))
        return worst

    @cached_property
    def a(self) -> float:
        return min(e.envelope_lower for e in self.edges)

    @cached_property
    def b(self) -> float:
        return max(e.envelope_upper for e in self.edges)

    @cached_property
    def second_derivative_upper(self) -> float:
        return max(e.second_derivative_upper for e in self.edges)

    @cached_property
    def symmetric(self) -> bool:
        first = set(self.paths[0])
        return all(set(pl) == first for pl in self.paths)

    def smoothness_params(self) -> SmoothnessParams:
        b, m, k = self.b, self.m, self.k
        return SmoothnessParams(alpha=b * m / 2.0, beta=b * m, lam=b * m * k)

    # -- vectorized evaluation tables -----------------------------------------

    @cached_property
    def incidence(self) -> np.ndarray:
        """0/1 matrix (dim x m): row (i,s) marks the edges on path s of player i."""
        inc = np.zeros((self.dim, self.m))
        row = 0
        for pl in self.paths:
            for s in pl:
                inc[row, sorted(s)] = 1.0
                row += 1
        return inc

    @cached_property
    def _coef_table(self) -> np.ndarray:
        deg = max(e.degree for e in self.edges)
        table = np.zeros((self.m, deg))
        for e, cost in enumerate(self.edges):
            table[e, : cost.degree] = cost.coefficients
        return table

    def edge_costs(self, loads: np.ndarray) -> np.ndarray:
        """c_e(load_e) for every edge; loads may be batched (..., m)."""
        table = self._coef_table
        acc = np.zeros_like(loads)
        for j in range(table.shape[1] - 1, -1, -1):
            acc = acc * loads + table[:, j]
        return acc * loads

    def edge_primitives(self, loads: np.ndarray) -> np.ndarray:
        """F_e(load_e), the per-edge potential contributions."""
        table = self._coef_table
        acc = np.zeros_like(loads)
        for j in range(table.shape[1] - 1, -1, -1):
            acc = acc * loads + table[:, j] / (j + 2)
        return acc * loads * loads

    def edge_slopes(self, loads: np.ndarray) -> np.ndarray:
        """c'_e(load_e)."""
        table = self._coef_table
        acc = np.zeros_like(loads)
        for j in range(table.shape[1] - 1, -1, -1):
            acc = acc * loads + (j + 1) * table[:, j]
        return acc

    # -- flows and costs -------------------------------------------------------

    def uniform_profile(self) -> FlowProfile:
        flat = np.concatenate(
            [np.full(sz, 1.0 / (self.n * sz)) for sz in self.sizes]
        )
        return FlowProfile(self, flat)

    def check_vector(self, flat: np.ndarray) -> np.ndarray:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.dim,):
            raise GameStructureError(
                f"strategy vector has shape {flat.shape}, expected ({self.dim},)"
            )
        return flat

    def edge_loads(self, flat: np.ndarray) -> np.ndarray:
        """Aggregated load per edge: load_e = sum over paths through e of x_{i,s}."""
        return self.check_vector(flat) @ self.incidence

    def path_costs(self, flat: np.ndarray) -> np.ndarray:
        """Cost of every (player, path) pair; equals the potential gradient."""
        ecosts = self.edge_costs(self.edge_loads(flat))
        return self.incidence @ ecosts

    def path_cost(self, flat: np.ndarray, player: int, path: int) -> float:
        if not (0 <= player < self.n) or not (0 <= path < self.sizes[player]):
            raise GameStructureError(f"no path {path} for player {player}")
        return float(self.path_costs(flat)[self.offsets[player] + path])

    def potential(self, flat: np.ndarray) -> float:
        return float(self.edge_primitives(self.edge_loads(flat)).sum())

    def potential_gradient(self, flat: np.ndarray) -> np.ndarray:
        return self.path_costs(flat)

    def average_cost(self, flat: np.ndarray) -> float:
        """C_A(x) = sum_e load_e * c_e(load_e)."""
        loads = self.edge_loads(flat)
        return float(loads @ self.edge_costs(loads))

    def max_cost(self, flat: np.ndarray) -> float:
        """C_M(x) = max over all allowed paths of the path cost."""
        return float(self.path_costs(flat).max())

    def player_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))


@dataclass(frozen=True)
class FlowProfile:
    """Joint strategy x in K: per player a nonnegative vector summing to 1/n."""

    game: CongestionGame
    flat: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "flat", self.game.check_vector(self.flat))

    def player(self, i: int) -> np.ndarray:
        return self.flat[self.game.player_slice(i)]

    def validate(self, tol: float = FEASIBILITY_TOL) -> None:
        if np.any(self.flat < -tol):
            raise GameStructureError("flow has a negative entry")
        for i in range(self.game.n):
            mass = self.player(i).sum()
            if abs(mass - 1.0 / self.game.n) > tol:
                raise GameStructureError(
                    f"player {i} mass {mass} deviates from 1/n by more than {tol}"
                )

    def renormalized(self) -> FlowProfile:
        """Clip negatives from arithmetic drift and rescale each block to mass 1/n."""
        flat = np.maximum(self.flat, 0.0).copy()
        for i in range(self.game.n):
            sl = self.game.player_slice(i)
            block = flat[sl]
            total = block.sum()
            if total <= 0.0:
                raise GameStructureError(f"player {i} has no mass to renormalize")
            flat[sl] = block * (1.0 / self.game.n / total)
        return FlowProfile(self.game, flat)

    @property
    def potential(self) -> float:
        return self.game.potential(self.flat)


def parallel_links_game(n: int, coefficient_lists) -> CongestionGame:
    """Every player may use every single-edge path; classic load balancing."""
    edges = tuple(PolynomialCost(tuple(np.atleast_1d(c))) for c in coefficient_lists)
    single = tuple(frozenset([e]) for e in range(len(edges)))
    return CongestionGame(n=n, edges=edges, paths=tuple(single for _ in range(n)))
