"""Episode-based bandit dynamics for atomic congestion games.

Players only ever see the realized cost of the single path they played.  Time
is cut into episodes; within episode tau every player freezes her mixed
strategy, samples a path each step, and averages the observed costs per path
into a gradient estimate.  Strategies live on a floored simplex (every path
keeps probability at least Lambda) so every estimate rests on enough visits.
At the episode boundary each player applies one mirror step with her own
learning rate, using the estimate in place of the exact gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import ConfigurationError, FeasibleSet, make_geometry
from .game import SUPPORT_TOL, CongestionGame
from .minimize import CertifiedMinimum, reference_minimizer

ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class ChoiceVector:
    """Realized atomic selections: one path per player, carrying flow 1/n."""

    game: CongestionGame
    choices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.choices) != self.game.n:
            raise ValueError("one choice per player required")
        for i, c in enumerate(self.choices):
            if not (0 <= c < self.game.sizes[i]):
                raise ValueError(f"player {i} has no path {c}")

    @property
    def flat(self) -> np.ndarray:
        v = np.zeros(self.game.dim)
        v[self.game.offsets[:-1] + np.asarray(self.choices)] = 1.0 / self.game.n
        return v


def sample_choices(rng: np.random.Generator, game: CongestionGame, flat: np.ndarray) -> ChoiceVector:
    """Draw one path per player, path s with probability n * x_{i,s}."""
    flat = game.check_vector(flat)
    picks = []
    for i in range(game.n):
        probs = game.n * flat[game.player_slice(i)]
        total = probs.sum()
        if abs(total - 1.0) > 1e-9 or np.any(probs < -1e-12):
            raise ValueError(f"player {i} choice probabilities sum to {total}")
        cdf = np.cumsum(np.maximum(probs, 0.0) / total)
        picks.append(int(min(np.searchsorted(cdf, rng.random(), side="right"), probs.size - 1)))
    return ChoiceVector(game, tuple(picks))


def restrict_profile(game: CongestionGame, flat: np.ndarray, lam: float) -> np.ndarray:
    """Mix toward uniform so every entry reaches the floor Lambda/n.

    x_bar_{i,s} = (1 - |S_i| * Lambda) * x_{i,s} + Lambda/n.  Unlike plain
    (1 - Lambda) mixing this preserves each player's mass exactly, attains the
    same floor, and moves the profile by at most 2 * |S_i| * Lambda / n in l1.
    """
    flat = game.check_vector(flat).copy()
    if lam <= 0.0:
        raise ConfigurationError("Lambda must be positive")
    for i in range(game.n):
        size = game.sizes[i]
        if size * lam >= 1.0:
            raise ConfigurationError(
                f"floor infeasible: player {i} has {size} paths but Lambda = {lam}"
            )
        sl = game.player_slice(i)
        flat[sl] = (1.0 - size * lam) * flat[sl] + lam / game.n
    return flat


def episode_length(nu: float, n: int, d: int, lam_eff: float, m_path: int, tau: int) -> int:
    """Steps in episode tau: ceil(nu * n^2 * ln(n*d*max(tau,2)) / (lam_eff * m_path^2))."""
    if tau < 1:
        raise ValueError("episodes are numbered from 1")
    return math.ceil(nu * n * n * math.log(n * d * max(tau, 2)) / (lam_eff * m_path**2))


def estimate_gradient(
    visits: np.ndarray, cost_sums: np.ndarray, previous: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-path average observed cost; unvisited paths fall back to the previous
    episode's entry (zero before the first).  Returns (estimate, fallback mask)."""
    visits = np.asarray(visits)
    cost_sums = np.asarray(cost_sums, dtype=float)
    fallback = visits == 0
    if previous is None:
        previous = np.zeros_like(cost_sums)
    est = np.where(fallback, previous, cost_sums / np.maximum(visits, 1))
    return est, fallback


@dataclass
class BanditConfig:
    """Episode dynamics parameters.

    epsilon, theta, delta, the gap threshold and tau0 are computed from the
    game, never configured: epsilon = 4*b*m_path/n is the estimator accuracy
    target, theta = sqrt(eta*Gamma*epsilon*n) must not exceed 1, and the
    per-episode slack is delta = 6*epsilon + 2*theta*beta*d*Lambda (the factor
    2 reflects the mass-preserving floor construction above).
    """

    lam: float
    episodes: int = 8
    seed: int = 0
    geometry: str = "euclidean"
    eta: float | np.ndarray | None = None
    kappa: float = 0.05
    nu: float = 8.0
    exact_gradient: bool = False
    record_choices: bool = False
    batch: int = 16384

    def resolve_etas(self, game: CongestionGame) -> np.ndarray:
        lam_smooth = game.smoothness_params().lam
        if self.eta is None:
            etas = np.full(game.n, 1.0 / lam_smooth)
        else:
            etas = np.broadcast_to(np.asarray(self.eta, dtype=float), (game.n,)).copy()
        if np.any(etas <= 0.0):
            raise ConfigurationError("learning rate must be positive")
        if np.any(etas > 1.0 / lam_smooth + 1e-12):
            raise ConfigurationError(
                f"learning rate exceeds 1/lambda = {1.0 / lam_smooth:.6g}"
            )
        return etas

    def derive(self, game: CongestionGame) -> BanditParams:
        if not (0.0 < self.kappa < 1.0):
            raise ConfigurationError("kappa must lie in (0, 1)")
        if self.nu < 1.0:
            raise ConfigurationError("nu must be at least 1")
        if not (0.0 < self.lam < 1.0 / game.d):
            raise ConfigurationError(
                f"Lambda must lie in (0, 1/d) = (0, {1.0 / game.d:.6g})"
            )
        smooth = game.smoothness_params()
        etas = self.resolve_etas(game)
        eta_min = float(etas.min())
        geometry = make_geometry(self.geometry)
        floor = self.lam / game.n
        gamma = geometry.gamma(FeasibleSet(size=max(game.sizes), mass=1.0 / game.n, floor=floor))
        epsilon = 4.0 * game.b * game.m_path / game.n
        theta = math.sqrt(eta_min * gamma * epsilon * game.n)
        if theta > 1.0 + 1e-12:
            raise ConfigurationError(
                f"theta = sqrt(eta*Gamma*epsilon*n) = {theta:.4g} exceeds 1; "
                "lower the learning rate or Lambda"
            )
        delta = 6.0 * epsilon + 2.0 * theta * smooth.beta * game.d * self.lam
        return BanditParams(
            epsilon=epsilon,
            gamma=gamma,
            theta=theta,
            delta=delta,
            threshold=3.0 * delta / theta,
            tau0=math.ceil(smooth.alpha / delta),
            eta_min=eta_min,
        )

    def episode_steps(self, game: CongestionGame, tau: int) -> int:
        # The floor construction guarantees per-path probability >= Lambda,
        # so the effective exploration floor equals Lambda itself.
        return episode_length(self.nu, game.n, game.d, self.lam, game.m_path, tau)


@dataclass(frozen=True)
class BanditParams:
    epsilon: float
    gamma: float
    theta: float
    delta: float
    threshold: float  # 3*delta/theta, the post-convergence gap ceiling
    tau0: int
    eta_min: float


def euclidean_preset(
    game: CongestionGame,
    eta: float | None = None,
    lambda_cap: float = 0.9,
    **kwargs,
) -> BanditConfig:
    """Gradient-descent instantiation: Gamma = 2, Lambda = sqrt(eps/(2 eta n))/(beta d)."""
    smooth = game.smoothness_params()
    epsilon = 4.0 * game.b * game.m_path / game.n
    if eta is None:
        eta = min(1.0 / smooth.lam, (1.0 - 1e-9) / (2.0 * epsilon * game.n))
    lam = min(
        math.sqrt(epsilon / (2.0 * eta * game.n)) / (smooth.beta * game.d),
        lambda_cap / game.d,
    )
    return BanditConfig(lam=lam, geometry="euclidean", eta=eta, **kwargs)


def entropy_preset(
    game: CongestionGame,
    eta: float | None = None,
    lambda_cap: float = 0.9,
    **kwargs,
) -> BanditConfig:
    """Multiplicative-updates instantiation: Gamma = Lambda/n."""
    smooth = game.smoothness_params()
    epsilon = 4.0 * game.b * game.m_path / game.n
    if eta is None:
        eta = 1.0 / smooth.lam
    for _ in range(8):  # Lambda and the theta <= 1 cap depend on each other
        lam = min(
            (epsilon / (eta * smooth.beta**2 * game.d**2)) ** (1.0 / 3.0),
            lambda_cap / game.d,
        )
        theta_sq = eta * lam * epsilon
        if theta_sq <= 1.0:
            break
        eta = eta / theta_sq * (1.0 - 1e-9)
    return BanditConfig(lam=lam, geometry="negative-entropy", eta=eta, **kwargs)


@dataclass
class EpisodeRecord:
    tau: int
    steps: int
    profile: np.ndarray  # the frozen strategy x^tau played all episode
    visits: np.ndarray
    cost_sums: np.ndarray
    estimate: np.ndarray
    fallback: np.ndarray
    grad_error: float  # max over players of ||estimate_i - grad_i Phi(x^tau)||_inf
    phi: float


@dataclass
class BanditReport:
    game: CongestionGame
    config: BanditConfig
    params: BanditParams
    reference: CertifiedMinimum
    records: list[EpisodeRecord]
    x_final: np.ndarray
    choices: list[np.ndarray] | None = None

    @property
    def phis(self) -> np.ndarray:
        return np.asarray([r.phi for r in self.records])

    @property
    def gaps(self) -> np.ndarray:
        return self.phis - self.reference.value

    @property
    def certified_gaps(self) -> np.ndarray:
        return self.gaps + self.reference.certificate

    @property
    def grad_errors(self) -> np.ndarray:
        return np.asarray([r.grad_error for r in self.records])

    def save_replay(self, path) -> None:
        """Persist the per-episode choice log for deterministic re-analysis."""
        if self.choices is None:
            raise ValueError("run was not configured with record_choices=True")
        np.savez_compressed(
            path, **{f"episode_{r.tau}": c for r, c in zip(self.records, self.choices)}
        )


def _player_tables(game: CongestionGame):
    return [game.incidence[game.player_slice(i)] for i in range(game.n)]


def _simulate_episode(game, flat, streams, steps, batch, inc_rows, record):
    n = game.n
    cdfs = []
    for i in range(n):
        probs = n * flat[game.player_slice(i)]
        total = probs.sum()
        if abs(total - 1.0) > 1e-9 or np.any(probs < -1e-12):
            raise ValueError(f"player {i} choice probabilities sum to {total}")
        cdf = np.cumsum(np.maximum(probs, 0.0) / total)
        cdf[-1] = 1.0
        cdfs.append(cdf)

    visits = np.zeros(game.dim, dtype=np.int64)
    sums = np.zeros(game.dim)
    log = np.empty((steps, n), dtype=np.int16) if record else None

    done = 0
    while done < steps:
        size = min(batch, steps - done)
        picks = [
            np.minimum(
                np.searchsorted(cdfs[i], streams[i].random(size), side="right"),
                cdfs[i].size - 1,
            )
            for i in range(n)
        ]
        gathered = [inc_rows[i][picks[i]] for i in range(n)]
        loads = gathered[0].copy()
        for arr in gathered[1:]:
            loads += arr
        loads *= 1.0 / n
        ecosts = game.edge_costs(loads)
        for i in range(n):
            own_costs = (gathered[i] * ecosts).sum(axis=1)
            sl = game.player_slice(i)
            visits[sl] += np.bincount(picks[i], minlength=game.sizes[i])
            sums[sl] += np.bincount(picks[i], weights=own_costs, minlength=game.sizes[i])
        if record:
            for i in range(n):
                log[done : done + size, i] = picks[i]
        done += size
    return visits, sums, log


def run_bandit(
    game: CongestionGame,
    config: BanditConfig,
    reference: CertifiedMinimum | None = None,
) -> BanditReport:
    """Play the episode scheme and report per-episode potentials and estimator errors."""
    params = config.derive(game)
    etas = config.resolve_etas(game)
    geometry = make_geometry(config.geometry)
    if reference is None:
        reference = reference_minimizer(game)

    floor = config.lam / game.n
    sets = [
        FeasibleSet(size=game.sizes[i], mass=1.0 / game.n, floor=floor)
        for i in range(game.n)
    ]
    x = restrict_profile(game, game.uniform_profile().flat, config.lam)
    streams = [
        np.random.Generator(np.random.PCG64(ss))
        for ss in np.random.SeedSequence(config.seed).spawn(game.n)
    ]
    inc_rows = _player_tables(game)

    records: list[EpisodeRecord] = []
    choice_logs: list[np.ndarray] | None = [] if config.record_choices else None
    previous = np.zeros(game.dim)

    for tau in range(1, config.episodes + 1):
        exact = game.path_costs(x)
        if config.exact_gradient:
            steps = 0
            visits = np.zeros(game.dim, dtype=np.int64)
            sums = np.zeros(game.dim)
            estimate, fallback = exact.copy(), np.zeros(game.dim, dtype=bool)
        else:
            steps = config.episode_steps(game, tau)
            visits, sums, log = _simulate_episode(
                game, x, streams, steps, config.batch, inc_rows, config.record_choices
            )
            estimate, fallback = estimate_gradient(visits, sums, previous)
            if choice_logs is not None:
                choice_logs.append(log)
        records.append(
            EpisodeRecord(
                tau=tau,
                steps=steps,
                profile=x.copy(),
                visits=visits,
                cost_sums=sums,
                estimate=estimate,
                fallback=fallback,
                grad_error=float(np.abs(estimate - exact).max()),
                phi=game.potential(x),
            )
        )
        previous = estimate

        nxt = np.empty_like(x)
        for i in range(game.n):
            sl = game.player_slice(i)
            nxt[sl] = geometry.mirror_step(sets[i], x[sl], estimate[sl], float(etas[i]))
        x = nxt

    return BanditReport(
        game=game,
        config=config,
        params=params,
        reference=reference,
        records=records,
        x_final=x,
        choices=choice_logs,
    )


def descent_step_check(
    phi_prev: float,
    phi_next: float,
    phi_min: float,
    theta: float,
    delta: float,
    tol: float = 1e-9,
) -> bool:
    """One-episode progress test: Phi_next <= Phi_prev - theta*(Phi_prev - Phi_min) + delta."""
    return phi_next <= phi_prev - theta * (phi_prev - phi_min) + delta + tol


@dataclass(frozen=True)
class MixedDeltaResult:
    delta: float
    expected_costs: np.ndarray  # E[c_s(X)] for every (player, path) row
    mode: str
    samples: int = 0


def expected_path_costs(game: CongestionGame, flat: np.ndarray, batch: int = 8192) -> np.ndarray:
    """Exact E[c_s(X)] for all paths by enumerating the joint choice distribution."""
    flat = game.check_vector(flat)
    total = 1
    for sz in game.sizes:
        total *= sz
        if total > ENUMERATION_CAP:
            raise ValueError(
                f"enumeration would exceed {ENUMERATION_CAP} outcomes; use monte-carlo mode"
            )
    probs = [np.maximum(game.n * flat[game.player_slice(i)], 0.0) for i in range(game.n)]
    probs = [p / p.sum() for p in probs]
    inc_rows = _player_tables(game)

    expected = np.zeros(game.dim)
    sizes = np.asarray(game.sizes)
    for start in range(0, total, batch):
        idx = np.arange(start, min(start + batch, total))
        rest = idx.copy()
        weight = np.ones(idx.size)
        loads = np.zeros((idx.size, game.m))
        for i in range(game.n - 1, -1, -1):
            pick = rest % sizes[i]
            rest //= sizes[i]
            weight *= probs[i][pick]
            loads += inc_rows[i][pick]
        loads *= 1.0 / game.n
        pathcosts = game.edge_costs(loads) @ game.incidence.T
        expected += weight @ pathcosts
    return expected


def _delta_from_expected(game, flat, expected, support_tol):
    worst = 0.0
    for i in range(game.n):
        sl = game.player_slice(i)
        block, costs = flat[sl], expected[sl]
        used = block > support_tol
        if used.any():
            worst = max(worst, float(costs[used].max() - costs.min()))
    return max(worst, 0.0)


def mixed_delta_gap(
    game: CongestionGame,
    flat: np.ndarray,
    mode: str = "enumerate",
    samples: int = 100_000,
    seed: int = 0,
    support_tol: float = SUPPORT_TOL,
) -> MixedDeltaResult:
    """Equilibrium gap in mixed strategies: spreads of E[c_s(X)] over used paths."""
    flat = game.check_vector(flat)
    if mode == "enumerate":
        expected = expected_path_costs(game, flat)
        return MixedDeltaResult(
            delta=_delta_from_expected(game, flat, expected, support_tol),
            expected_costs=expected,
            mode=mode,
        )
    if mode != "monte-carlo":
        raise ValueError("mode must be 'enumerate' or 'monte-carlo'")
    rng = np.random.default_rng(seed)
    inc_rows = _player_tables(game)
    acc = np.zeros(game.dim)
    done = 0
    while done < samples:
        size = min(16384, samples - done)
        loads = np.zeros((size, game.m))
        for i in range(game.n):
            probs = np.maximum(game.n * flat[game.player_slice(i)], 0.0)
            cdf = np.cumsum(probs / probs.sum())
            cdf[-1] = 1.0
            picks = np.minimum(
                np.searchsorted(cdf, rng.random(size), side="right"), cdf.size - 1
            )
            loads += inc_rows[i][picks]
        loads *= 1.0 / game.n
        acc += (game.edge_costs(loads) @ game.incidence.T).sum(axis=0)
        done += size
    expected = acc / samples
    return MixedDeltaResult(
        delta=_delta_from_expected(game, flat, expected, support_tol),
        expected_costs=expected,
        mode=mode,
        samples=samples,
    )


def mixed_delta_bound(game: CongestionGame, gap: float) -> float:
    """Theory ceiling sqrt(8*b*m*gap) + B*m_path/n for the mixed equilibrium gap."""
    return math.sqrt(max(8.0 * game.b * game.m * gap, 0.0)) + (
        game.second_derivative_upper * game.m_path / game.n
    )
