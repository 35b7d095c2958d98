"""Certified minimizers over the joint strategy polytope.

Both the potential and the average individual cost are sums of convex
polynomials of the edge loads, so they share one solver: Frank-Wolfe with
away steps and exact line search (the objective restricted to a segment is a
low-degree polynomial, minimized by root finding).  Away steps matter here:
they give linear convergence for these load-composite objectives, which the
vanilla method cannot certify at 1e-10 in any reasonable iteration count.

The returned certificate is the Frank-Wolfe duality gap
    <grad(x), x - v>  maximized over vertices v,
an upper bound on the true suboptimality by convexity, valid regardless of
how the point was found.

The maximum individual cost is piecewise smooth, not edge-separable; its
minimizer uses an epigraph formulation solved by SLSQP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sciopt

from .game import CongestionGame


@dataclass(frozen=True)
class CertifiedMinimum:
    """Minimizer candidate with a duality-gap certificate (value - min <= certificate)."""

    flat: np.ndarray
    value: float
    certificate: float
    iterations: int
    converged: bool


def _binomial(p: int, q: int) -> float:
    out = 1.0
    for i in range(q):
        out = out * (p - i) / (i + 1)
    return out


class _EdgeSeparableObjective:
    """G(x) = sum_e F_e(load_e(x)) for per-edge polynomials F_e with powers >= 1."""

    def __init__(self, game: CongestionGame, table: np.ndarray):
        self.game = game
        self.table = table  # (m, P): F_e(y) = sum_p table[e, p-1] * y**p
        powers = np.arange(1, table.shape[1] + 1)
        self.dtable = table * powers  # derivative coefficients over powers 0..P-1

    def value_from_loads(self, loads: np.ndarray) -> float:
        acc = np.zeros_like(loads)
        for p in range(self.table.shape[1] - 1, -1, -1):
            acc = acc * loads + self.table[:, p]
        return float((acc * loads).sum())

    def edge_gradient(self, loads: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(loads)
        for p in range(self.dtable.shape[1] - 1, -1, -1):
            acc = acc * loads + self.dtable[:, p]
        return acc

    def line_derivative_poly(self, loads: np.ndarray, dloads: np.ndarray) -> np.ndarray:
        """Coefficients (ascending in t) of d/dt G(x + t*d) along load direction dloads."""
        P = self.dtable.shape[1]
        coeffs = np.zeros(P)
        dpow = dloads.copy()  # dloads**(q+1), includes the outer chain factor
        for q in range(P):
            inner = np.zeros_like(loads)
            lpow = np.ones_like(loads)  # loads**(p-q)
            for p in range(q, P):
                inner += self.dtable[:, p] * _binomial(p, q) * lpow
                lpow = lpow * loads
            coeffs[q] = float((dpow * inner).sum())
            dpow = dpow * dloads
        return coeffs


def potential_objective(game: CongestionGame) -> _EdgeSeparableObjective:
    coef = game._coef_table  # (m, J), powers 1..J of the costs
    m, J = coef.shape
    table = np.zeros((m, J + 1))
    for j in range(J):
        table[:, j + 1] = coef[:, j] / (j + 2)  # integral of c_j y^(j+1)
    return _EdgeSeparableObjective(game, table)


def average_cost_objective(game: CongestionGame) -> _EdgeSeparableObjective:
    coef = game._coef_table
    m, J = coef.shape
    table = np.zeros((m, J + 1))
    for j in range(J):
        table[:, j + 1] = coef[:, j]  # y * c_e(y) term by term
    return _EdgeSeparableObjective(game, table)


def _poly_root_in(coeffs: np.ndarray, t_max: float) -> float:
    """Unique sign change of a nondecreasing polynomial on [0, t_max]."""

    def ev(t: float) -> float:
        return float(np.polyval(coeffs[::-1], t))

    if ev(t_max) <= 0.0:
        return t_max
    if ev(0.0) >= 0.0:
        return 0.0
    trimmed = np.trim_zeros(coeffs[::-1], "f")
    if trimmed.size >= 2:
        roots = np.roots(trimmed)
        real = roots[np.abs(roots.imag) < 1e-9].real
        inside = real[(real >= -1e-12) & (real <= t_max * (1 + 1e-12))]
        if inside.size:
            return float(np.clip(inside.min(), 0.0, t_max))
    lo, hi = 0.0, t_max  # bisection fallback; derivative is monotone
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ev(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _vertex_vector(game: CongestionGame, vertex: tuple[int, ...]) -> np.ndarray:
    v = np.zeros(game.dim)
    v[game.offsets[:-1] + np.asarray(vertex)] = 1.0 / game.n
    return v


def _vertex_score(game: CongestionGame, g: np.ndarray, vertex: tuple[int, ...]) -> float:
    return float(g[game.offsets[:-1] + np.asarray(vertex)].sum() / game.n)


def minimize_edge_separable(
    game: CongestionGame,
    objective: _EdgeSeparableObjective,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> CertifiedMinimum:
    inc = game.incidence
    offsets = game.offsets

    # Seed the active set with the best-response vertex at the uniform profile;
    # the iterate must be an exact convex combination of active vertices.
    g0 = inc @ objective.edge_gradient(game.uniform_profile().flat @ inc)
    seed = tuple(
        int(np.argmin(g0[offsets[i] : offsets[i + 1]])) for i in range(game.n)
    )
    weights: dict[tuple[int, ...], float] = {seed: 1.0}
    x = _vertex_vector(game, seed)

    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        loads = x @ inc
        g = inc @ objective.edge_gradient(loads)
        fw = tuple(
            int(np.argmin(g[offsets[i] : offsets[i + 1]])) for i in range(game.n)
        )
        gx = float(g @ x)
        gap = gx - _vertex_score(game, g, fw)
        if gap <= tol:
            break

        away, away_score = None, -np.inf
        for v in sorted(weights):
            s = _vertex_score(game, g, v)
            if s > away_score:
                away, away_score = v, s

        if gap >= away_score - gx or len(weights) == 1:
            direction = _vertex_vector(game, fw) - x
            t_max, mode = 1.0, "fw"
        else:
            direction = x - _vertex_vector(game, away)
            w_away = weights[away]
            t_max, mode = w_away / (1.0 - w_away) if w_away < 1.0 else 1.0, "away"

        dloads = direction @ inc
        t = _poly_root_in(objective.line_derivative_poly(loads, dloads), t_max)
        if t <= 0.0:
            break  # numerically stalled; certificate below still stands

        if mode == "fw":
            for v in list(weights):
                weights[v] *= 1.0 - t
            weights[fw] = weights.get(fw, 0.0) + t
        else:
            for v in list(weights):
                weights[v] *= 1.0 + t
            weights[away] -= t
        for v in [v for v, w in weights.items() if w <= 1e-15]:
            del weights[v]
        total = sum(weights.values())
        for v in weights:
            weights[v] /= total

        x = x + t * direction
        if it % 64 == 0:  # resync from the convex combination to kill drift
            x = sum(w * _vertex_vector(game, v) for v, w in weights.items())

    x = sum(w * _vertex_vector(game, v) for v, w in weights.items())
    loads = x @ inc
    g = inc @ objective.edge_gradient(loads)
    fw = tuple(int(np.argmin(g[offsets[i] : offsets[i + 1]])) for i in range(game.n))
    gap = float(g @ x) - _vertex_score(game, g, fw)
    return CertifiedMinimum(
        flat=x,
        value=objective.value_from_loads(loads),
        certificate=max(float(gap), 0.0),
        iterations=it,
        converged=gap <= tol,
    )


def reference_minimizer(
    game: CongestionGame, tol: float = 1e-10, max_iter: int = 200_000
) -> CertifiedMinimum:
    """q = argmin Phi over the joint polytope, with a duality-gap certificate."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return minimize_edge_separable(game, potential_objective(game), tol, max_iter)


def min_average_cost(
    game: CongestionGame, tol: float = 1e-10, max_iter: int = 200_000
) -> CertifiedMinimum:
    """x* = argmin C_A; C_A is convex since y*c_e(y) has nonnegative coefficients."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return minimize_edge_separable(game, average_cost_objective(game), tol, max_iter)


@dataclass(frozen=True)
class MaxCostMinimum:
    flat: np.ndarray
    value: float


def min_max_cost(game: CongestionGame, tol: float = 1e-12) -> MaxCostMinimum:
    """x_hat = argmin C_M via the epigraph form  min t  s.t.  c_s(x) <= t."""
    inc = game.incidence
    rows = {tuple(r) for r in inc.astype(int)}
    rows = np.array(sorted(rows), dtype=float)  # distinct paths only

    def split(y):
        return y[:-1], y[-1]

    def objective(y):
        return y[-1]

    def objective_grad(y):
        g = np.zeros_like(y)
        g[-1] = 1.0
        return g

    def path_slack(y):
        x, t = split(y)
        ecosts = game.edge_costs(x @ inc)
        return t - rows @ ecosts

    def path_slack_jac(y):
        x, t = split(y)
        slopes = game.edge_slopes(x @ inc)
        jac = np.zeros((rows.shape[0], y.size))
        jac[:, :-1] = -(rows * slopes) @ inc.T
        jac[:, -1] = 1.0
        return jac

    mass_rows = np.zeros((game.n, game.dim + 1))
    for i in range(game.n):
        mass_rows[i, game.offsets[i] : game.offsets[i + 1]] = 1.0
    mass_target = np.full(game.n, 1.0 / game.n)

    constraints = [
        {"type": "ineq", "fun": path_slack, "jac": path_slack_jac},
        {
            "type": "eq",
            "fun": lambda y: mass_rows @ y - mass_target,
            "jac": lambda y: mass_rows,
        },
    ]
    bounds = [(0.0, 1.0 / game.n)] * game.dim + [(0.0, None)]

    best = None
    starts = [game.uniform_profile().flat]
    starts.append(reference_minimizer(game, tol=1e-9).flat)
    for x0 in starts:
        y0 = np.concatenate([x0, [game.max_cost(x0)]])
        res = _sciopt.minimize(
            objective,
            y0,
            jac=objective_grad,
            bounds=bounds,
            constraints=constraints,
            method="SLSQP",
            options={"maxiter": 500, "ftol": tol},
        )
        x = np.maximum(res.x[:-1], 0.0)
        for i in range(game.n):
            sl = game.player_slice(i)
            x[sl] *= 1.0 / game.n / x[sl].sum()
        value = game.max_cost(x)
        if best is None or value < best.value:
            best = MaxCostMinimum(flat=x, value=value)
    return best
