"""Mirror-descent dynamics under bulletin-board feedback.

Each step every player sees the realized cost of each of her allowed paths
(which is exactly her block of the potential gradient) and applies one
constrained mirror step with her own learning rate.  The run monitors the
potential against a certified minimizer, the equilibrium gap, and both
social costs, so the convergence and price-of-anarchy guarantees can be
checked step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import ConfigurationError, make_geometry, project_simplex_rows
from .game import SUPPORT_TOL, CongestionGame, FlowProfile
from .minimize import CertifiedMinimum, MaxCostMinimum, reference_minimizer


@dataclass
class BulletinConfig:
    """Run parameters; eta defaults to 1/lambda for every player."""

    geometry: str = "euclidean"
    eta: float | np.ndarray | None = None
    max_steps: int = 100_000
    target_gap: float | None = None
    x0: np.ndarray | None = None
    record_profiles: bool = False

    def resolve_etas(self, game: CongestionGame) -> np.ndarray:
        lam = game.smoothness_params().lam
        if self.eta is None:
            etas = np.full(game.n, 1.0 / lam)
        else:
            etas = np.broadcast_to(np.asarray(self.eta, dtype=float), (game.n,)).copy()
        if np.any(etas <= 0.0):
            raise ConfigurationError("learning rate must be positive")
        if np.any(etas > 1.0 / lam + 1e-12):
            raise ConfigurationError(
                f"learning rate exceeds 1/lambda = {1.0 / lam:.6g}"
            )
        if self.target_gap is not None and self.target_gap <= 0.0:
            raise ConfigurationError("target gap must be positive")
        return etas


@dataclass
class BulletinReport:
    """Per-step trajectory of the run plus the data the theorem checks need.

    delta_gaps uses the plain used-path rule (mass above the support
    tolerance); theorem_delta_gaps additionally ignores paths too light to
    move the mass the equilibrium-gap argument shifts, which is the premise
    under which the sqrt(8*b*m*eps) ceiling is actually provable.
    """

    game: CongestionGame
    reference: CertifiedMinimum
    etas: np.ndarray
    phi: np.ndarray
    delta_gaps: np.ndarray
    theorem_delta_gaps: np.ndarray
    avg_costs: np.ndarray
    max_costs: np.ndarray
    x_final: np.ndarray
    gamma_measured: float
    target_gap: float | None
    stopped_at_target: bool
    cum_unit_costs: np.ndarray
    cum_path_costs: np.ndarray
    profiles: np.ndarray | None = None

    @property
    def steps(self) -> int:
        """Number of mirror-descent updates performed."""
        return len(self.phi) - 1

    @property
    def gaps(self) -> np.ndarray:
        return self.phi - self.reference.value

    @property
    def certified_gaps(self) -> np.ndarray:
        """Upper bounds on Phi(x^t) - min Phi, valid by the oracle's certificate."""
        return self.gaps + self.reference.certificate

    @property
    def max_ascent(self) -> float:
        """Largest one-step increase of Phi; monotone descent means <= 0."""
        if len(self.phi) < 2:
            return 0.0
        return float(np.diff(self.phi).max())

    @property
    def first_certified_hit(self) -> int | None:
        if self.target_gap is None:
            return None
        hits = np.nonzero(self.certified_gaps <= self.target_gap)[0]
        return int(hits[0]) if hits.size else None

    def theorem_budget(self, epsilon: float | None = None) -> int:
        """Step budget n*gamma/(eta*eps) with the measured initial divergence."""
        eps = self.target_gap if epsilon is None else epsilon
        if eps is None:
            raise ValueError("no target gap to budget against")
        eta = float(self.etas.min())
        return math.ceil(self.game.n * self.gamma_measured / (eta * eps))


def _pad_state(game: CongestionGame, flat: np.ndarray):
    mask = np.zeros((game.n, game.d), dtype=bool)
    for i, sz in enumerate(game.sizes):
        mask[i, :sz] = True
    X = np.zeros((game.n, game.d))
    X[mask] = flat
    return X, mask


def run_bulletin(
    game: CongestionGame,
    config: BulletinConfig,
    reference: CertifiedMinimum | None = None,
) -> BulletinReport:
    """Iterate the update x_i <- mirror_step(x_i, grad_i Phi, eta_i)."""
    etas = config.resolve_etas(game)
    geometry = make_geometry(config.geometry)
    entropy = geometry.kind == "negative-entropy"

    if config.x0 is None:
        x0 = game.uniform_profile().flat
    else:
        x0 = game.check_vector(config.x0)
        FlowProfile(game, x0).validate(tol=1e-9)
    if entropy and np.any(x0 <= 0.0):
        raise ConfigurationError(
            "entropy dynamics need a strictly positive start (use the uniform profile)"
        )

    if reference is None:
        reference = reference_minimizer(game)
    gamma = max(
        geometry.divergence(
            reference.flat[game.player_slice(i)], x0[game.player_slice(i)]
        )
        for i in range(game.n)
    )

    inc = game.incidence
    mass = 1.0 / game.n
    X, mask = _pad_state(game, x0)
    etas_col = etas[:, None]
    neg_inf = np.where(mask, 0.0, -np.inf)

    phis: list[float] = []
    deltas: list[float] = []
    theorem_deltas: list[float] = []
    avgs: list[float] = []
    maxs: list[float] = []
    profiles: list[np.ndarray] = []
    cum_unit = np.zeros(game.n)
    cum_paths = np.zeros(game.dim)
    PC = np.zeros_like(X)
    heavy_tol = 2.0 * game.b * game.m  # movable-mass threshold is sqrt(gap / this)

    stopped = False
    for _ in range(config.max_steps + 1):
        flat = X[mask]
        loads = flat @ inc
        ecosts = game.edge_costs(loads)
        pc = inc @ ecosts
        phi = float(game.edge_primitives(loads).sum())

        PC[mask] = pc
        best = np.where(mask, PC, np.inf).min(axis=1)
        used = mask & (X > SUPPORT_TOL)
        worst_used = np.where(used, PC, -np.inf).max(axis=1)
        delta = max(float((worst_used - best).max()), 0.0)

        cert_gap = phi - reference.value + reference.certificate
        heavy_floor = max(SUPPORT_TOL, math.sqrt(max(cert_gap, 0.0) / heavy_tol))
        heavy = mask & (X > heavy_floor)
        worst_heavy = np.where(heavy, PC, -np.inf).max(axis=1)
        theorem_delta = max(float((worst_heavy - best).max()), 0.0)

        phis.append(phi)
        deltas.append(delta)
        theorem_deltas.append(theorem_delta)
        avgs.append(float(loads @ ecosts))
        maxs.append(float(pc.max()))
        cum_unit += game.n * np.where(mask, PC * X, 0.0).sum(axis=1)
        cum_paths += pc
        if config.record_profiles:
            profiles.append(flat.copy())

        if config.target_gap is not None and cert_gap <= config.target_gap:
            stopped = True
            break
        if len(phis) > config.max_steps:
            break

        if entropy:
            Z = etas_col * PC
            Z -= Z.min(axis=1, keepdims=True)
            X = X * np.exp(-Z)
            X *= mass / X.sum(axis=1, keepdims=True)
        else:
            Y = X - etas_col * PC + neg_inf  # padding drops out of the projection
            X = project_simplex_rows(Y, mass)
            X *= mass / X.sum(axis=1, keepdims=True)  # kill thresholding round-off

    return BulletinReport(
        game=game,
        reference=reference,
        etas=etas,
        phi=np.asarray(phis),
        delta_gaps=np.asarray(deltas),
        theorem_delta_gaps=np.asarray(theorem_deltas),
        avg_costs=np.asarray(avgs),
        max_costs=np.asarray(maxs),
        x_final=X[mask].copy(),
        gamma_measured=float(gamma),
        target_gap=config.target_gap,
        stopped_at_target=stopped,
        cum_unit_costs=cum_unit,
        cum_path_costs=cum_paths,
        profiles=np.asarray(profiles) if config.record_profiles else None,
    )


def delta_equilibrium_gap(
    game: CongestionGame, flat: np.ndarray, support_tol: float = SUPPORT_TOL
) -> float:
    """Worst over players of (priciest used path) - (cheapest allowed path), floored at 0."""
    flat = game.check_vector(flat)
    pc = game.path_costs(flat)
    worst = 0.0
    for i in range(game.n):
        sl = game.player_slice(i)
        block, costs = flat[sl], pc[sl]
        used = block > support_tol
        if used.any():
            worst = max(worst, float(costs[used].max() - costs.min()))
    return max(worst, 0.0)


def equilibrium_gap_bound(game: CongestionGame, epsilon: float) -> float:
    """delta <= sqrt(8*b*m*eps) for any x with Phi(x) <= Phi(q) + eps."""
    return math.sqrt(max(8.0 * game.b * game.m * epsilon, 0.0))


def theorem_delta_gap(
    game: CongestionGame,
    flat: np.ndarray,
    epsilon: float,
    support_tol: float = SUPPORT_TOL,
) -> float:
    """Equilibrium gap over paths heavy enough for the potential argument.

    The sqrt(8*b*m*eps) ceiling is proved by shifting delta/(4*b*m) of load
    off the priciest used path, so it binds only paths that actually carry
    that much: mass at least sqrt(eps/(2*b*m)).  Paths lighter than this can
    sit arbitrarily far above the cheapest one at vanishing potential cost,
    which is why the plain gap is reported separately and checked against
    nothing.
    """
    heavy = max(support_tol, math.sqrt(max(epsilon, 0.0) / (2.0 * game.b * game.m)))
    return delta_equilibrium_gap(game, flat, support_tol=heavy)


@dataclass(frozen=True)
class OracleMinima:
    potential: CertifiedMinimum
    average: CertifiedMinimum
    maximum: MaxCostMinimum | None = None


@dataclass(frozen=True)
class SocialRatioReport:
    epsilon: float
    ratio_avg: float
    bound_avg: float
    avg_within_bound: bool
    ratio_max: float | None = None
    bound_max: float | None = None
    max_within_bound: bool | None = None


def social_ratio_report(
    game: CongestionGame,
    flat: np.ndarray,
    minima: OracleMinima,
    epsilon: float | None = None,
    check_max: bool | None = None,
) -> SocialRatioReport:
    """Price-of-anarchy style ratios of x against the oracle optima.

    epsilon defaults to the certified potential gap of x.  The maximum-cost
    ratio is only defined for symmetric games; asking for it elsewhere is
    refused because the guarantee does not apply.
    """
    flat = game.check_vector(flat)
    if epsilon is None:
        epsilon = max(
            game.potential(flat) - minima.potential.value + minima.potential.certificate,
            0.0,
        )
    a, b, m = game.a, game.b, game.m

    avg_lower = minima.average.value - minima.average.certificate
    ratio_avg = game.average_cost(flat) / avg_lower
    bound_avg = (b / a) * (1.0 + 2.0 * m * epsilon / a)
    report = {
        "epsilon": epsilon,
        "ratio_avg": ratio_avg,
        "bound_avg": bound_avg,
        "avg_within_bound": ratio_avg <= bound_avg + 1e-9,
    }

    if check_max is None:
        check_max = minima.maximum is not None
    if check_max:
        if not game.symmetric:
            raise ConfigurationError(
                "maximum-cost ratio guarantee only covers symmetric games"
            )
        if minima.maximum is None:
            raise ConfigurationError("no maximum-cost oracle minimum supplied")
        delta = equilibrium_gap_bound(game, epsilon)
        # min C_M >= min C_A, so the certified average lower bound also
        # guards the denominator against oracle slack.
        denom = max(minima.maximum.value, avg_lower)
        ratio_max = game.max_cost(flat) / denom
        bound_max = (b / a) * (1.0 + 2.0 * m * epsilon / a + delta * m / b)
        report.update(
            ratio_max=ratio_max,
            bound_max=bound_max,
            max_within_bound=ratio_max <= bound_max + 1e-9,
        )
    return SocialRatioReport(**report)


def regret(report: BulletinReport, player: int) -> float:
    """Average per-unit-flow cost paid minus the best fixed path in hindsight."""
    game = report.game
    if not (0 <= player < game.n):
        raise ValueError(f"no player {player}")
    sl = game.player_slice(player)
    T = len(report.phi)
    best_fixed = report.cum_path_costs[sl].min()
    return float((report.cum_unit_costs[player] - best_fixed) / T)
