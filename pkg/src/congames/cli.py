"""Command-line experiment harness.

Loads or generates a game, runs one of the four dynamics, writes the
trajectory CSV, prints a one-line summary per assertion, and exits nonzero
iff an enabled theorem assertion failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandit import entropy_preset, euclidean_preset, mixed_delta_gap, run_bandit
from .bregman import ConfigurationError
from .bulletin import BulletinConfig, OracleMinima, run_bulletin, social_ratio_report
from .game import CongestionGame
from .gamefile import GameFileError, parse_game
from .generator import generate_random_game
from .minimize import min_average_cost, min_max_cost, reference_minimizer

log = logging.getLogger("congames")

_ENUM_CSV_CAP = 10_000
_MC_SAMPLES = 20_000


def _setup_logging() -> None:
    level = os.environ.get("CONGESTION_LOG_LEVEL", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise ConfigurationError(
            f"CONGESTION_LOG_LEVEL must be one of {sorted(levels)}, got {level!r}"
        )
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


@dataclass
class ExperimentSpec:
    algo: str
    game_path: str | None = None
    gen: dict | None = None
    eps: float | None = None
    sigma: float | None = None
    eta: float | None = None
    lambda_cap: float = 0.9
    kappa: float = 0.05
    nu: float = 8.0
    steps: int | None = None
    episodes: int | None = None
    seed: int = 0
    out: str | None = None
    enforce: bool = True

    def validate(self) -> None:
        if (self.game_path is None) == (self.gen is None):
            raise ConfigurationError("exactly one game source (--game or --gen) required")
        if self.eps is not None and self.sigma is not None:
            raise ConfigurationError("--eps and --sigma are mutually exclusive")
        if self.algo not in {"bulletin-gd", "bulletin-mu", "bandit-gd", "bandit-mu"}:
            raise ConfigurationError(f"unknown algorithm {self.algo!r}")


@dataclass
class ExperimentResult:
    exit_code: int
    summary: dict
    assertions: list[tuple[str, bool, str]] = field(default_factory=list)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _write_csv(path: str, header: list[str], rows) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    out.write_text("\n".join(lines) + "\n")


def _load_game(spec: ExperimentSpec) -> CongestionGame:
    if spec.game_path is not None:
        return parse_game(spec.game_path)
    g = dict(spec.gen)
    return generate_random_game(
        seed=int(g.pop("seed", spec.seed)),
        n=int(g.pop("n")),
        m=int(g.pop("m")),
        d=int(g.pop("d")),
        degree=int(g.pop("deg", 3)),
        symmetric=bool(int(g.pop("sym", 0))),
        max_path_len=int(g["len"]) if g.pop("len", None) is not None else None,
    )


def parse_gen_string(text: str) -> dict:
    gen: dict = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigurationError(f"--gen entries look like key=value, got {part!r}")
        key, value = part.split("=", 1)
        if key not in {"n", "m", "d", "deg", "sym", "seed", "len"}:
            raise ConfigurationError(f"unknown --gen key {key!r}")
        gen[key] = value
    for key in ("n", "m", "d"):
        if key not in gen:
            raise ConfigurationError(f"--gen needs {key}=")
    return gen


def _run_bulletin_experiment(spec: ExperimentSpec, game: CongestionGame) -> ExperimentResult:
    geometry = "euclidean" if spec.algo.endswith("gd") else "negative-entropy"
    a, b, m = game.a, game.b, game.m

    target = spec.eps
    eps_avg = eps_max = None
    if spec.sigma is not None:
        eps_avg = a * spec.sigma / (2.0 * m)
        target = eps_avg
        if game.symmetric:
            eps_max = a * spec.sigma**2 / (32.0 * m)
            target = min(eps_avg, eps_max)

    config = BulletinConfig(
        geometry=geometry,
        eta=spec.eta,
        max_steps=spec.steps if spec.steps is not None else 200_000,
        target_gap=target,
    )
    reference = reference_minimizer(game)
    report = run_bulletin(game, config, reference=reference)
    avg_min = min_average_cost(game)
    max_min = min_max_cost(game) if (game.symmetric and eps_max is not None) else None
    minima = OracleMinima(potential=reference, average=avg_min, maximum=max_min)

    avg_lower = max(avg_min.value - avg_min.certificate, 1e-300)
    cert_gaps = report.certified_gaps
    rows = []
    for t in range(len(report.phi)):
        gap = max(cert_gaps[t], 0.0)
        rows.append(
            (
                t,
                report.phi[t],
                cert_gaps[t],
                report.delta_gaps[t],
                report.avg_costs[t],
                report.max_costs[t],
                report.avg_costs[t] / avg_lower,
                (b / a) * (1.0 + 2.0 * m * gap / a),
            )
        )
    if spec.out:
        _write_csv(
            spec.out,
            ["step", "phi", "phi_gap", "delta_gap", "c_avg", "c_max", "ratio_avg", "bound_avg"],
            rows,
        )

    assertions: list[tuple[str, bool, str]] = []

    ascent = report.max_ascent
    assertions.append(
        ("monotone-descent", ascent <= 1e-10, f"max one-step increase {ascent:.3e}")
    )

    delta_bounds = np.sqrt(np.maximum(8.0 * b * m * cert_gaps, 0.0)) + 1e-6
    delta_ok = bool(np.all(report.theorem_delta_gaps <= delta_bounds))
    worst = float((report.theorem_delta_gaps - delta_bounds).max())
    assertions.append(
        ("equilibrium-gap-bound", delta_ok, f"worst margin {worst:.3e}")
    )

    if target is not None:
        hit = report.first_certified_hit
        budget = report.theorem_budget(target)
        ok = hit is not None and hit <= budget
        assertions.append(
            (
                "convergence-budget",
                ok,
                f"first certified gap<= {target:g} at step {hit}, budget {budget}",
            )
        )

    ratios = None
    if spec.sigma is not None and report.stopped_at_target:
        ratios = social_ratio_report(
            game, report.x_final, minima, epsilon=eps_avg, check_max=False
        )
        bound = (b / a) * (1.0 + spec.sigma)
        assertions.append(
            (
                "average-cost-ratio",
                ratios.ratio_avg <= bound + 1e-9,
                f"ratio {ratios.ratio_avg:.6g} vs (b/a)(1+sigma) = {bound:.6g}",
            )
        )
        if eps_max is not None:
            ratios_max = social_ratio_report(
                game, report.x_final, minima, epsilon=eps_max, check_max=True
            )
            assertions.append(
                (
                    "maximum-cost-ratio",
                    bool(ratios_max.max_within_bound),
                    f"ratio {ratios_max.ratio_max:.6g} vs bound {ratios_max.bound_max:.6g}",
                )
            )

    summary = {
        "algo": spec.algo,
        "steps": report.steps,
        "final_phi": float(report.phi[-1]),
        "final_gap": float(cert_gaps[-1]),
        "final_delta_gap": float(report.delta_gaps[-1]),
        "gamma_measured": report.gamma_measured,
        "eta_min": float(report.etas.min()),
    }
    if target is not None:
        summary["target_gap"] = target
        summary["budget"] = report.theorem_budget(target)
    if ratios is not None:
        summary["ratio_avg"] = ratios.ratio_avg
    return _finish(spec, summary, assertions)


def _run_bandit_experiment(spec: ExperimentSpec, game: CongestionGame) -> ExperimentResult:
    preset = euclidean_preset if spec.algo.endswith("gd") else entropy_preset
    config = preset(
        game,
        eta=spec.eta,
        lambda_cap=spec.lambda_cap,
        kappa=spec.kappa,
        nu=spec.nu,
        episodes=spec.episodes if spec.episodes is not None else 8,
        seed=spec.seed,
    )
    reference = reference_minimizer(game)
    report = run_bandit(game, config, reference=reference)
    params = report.params

    enum_size = math.prod(game.sizes)
    rows = []
    for idx, rec in enumerate(report.records):
        if enum_size <= _ENUM_CSV_CAP:
            mixed = mixed_delta_gap(game, rec.profile, mode="enumerate")
        else:
            mixed = mixed_delta_gap(
                game,
                rec.profile,
                mode="monte-carlo",
                samples=_MC_SAMPLES,
                seed=spec.seed * 100_003 + rec.tau,
            )
        rows.append(
            (
                rec.tau,
                rec.steps,
                rec.phi,
                report.certified_gaps[idx],
                rec.grad_error,
                mixed.delta,
                params.threshold,
            )
        )
    if spec.out:
        _write_csv(
            spec.out,
            ["episode", "steps", "phi", "phi_gap", "max_est_error", "delta_mixed", "theorem_threshold"],
            rows,
        )

    gaps = report.certified_gaps
    assertions: list[tuple[str, bool, str]] = []

    after = gaps[params.tau0 - 1 :] if params.tau0 <= len(gaps) else gaps[:0]
    conv_ok = bool(np.all(after <= params.threshold + 1e-9)) if after.size else True
    assertions.append(
        (
            "bandit-gap-threshold",
            conv_ok,
            f"gaps after tau0={params.tau0} vs threshold {params.threshold:.6g}",
        )
    )

    below = np.nonzero(gaps < 2.0 * params.delta / params.theta)[0]
    if below.size:
        tail = gaps[below[0] :]
        perm_ok = bool(np.all(tail <= params.threshold + 1e-9))
    else:
        perm_ok = True
    assertions.append(("bandit-permanence", perm_ok, "post-threshold gaps stay bounded"))

    floor = config.lam / game.n
    floor_ok = all(bool(np.all(r.profile >= floor - 1e-12)) for r in report.records)
    assertions.append(("exploration-floor", floor_ok, f"floor {floor:.6g}"))

    summary = {
        "algo": spec.algo,
        "episodes": len(report.records),
        "final_phi": float(report.phis[-1]),
        "final_gap": float(gaps[-1]),
        "max_est_error": float(report.grad_errors.max()),
        "epsilon": params.epsilon,
        "theta": params.theta,
        "delta": params.delta,
        "threshold": params.threshold,
        "tau0": params.tau0,
        "lambda": config.lam,
    }
    return _finish(spec, summary, assertions)


def _finish(spec: ExperimentSpec, summary: dict, assertions) -> ExperimentResult:
    failed = [name for name, ok, _ in assertions if not ok]
    for name, ok, detail in assertions:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
    pairs = " ".join(f"{k}={_fmt(v)}" for k, v in summary.items() if not isinstance(v, str))
    print(f"summary: algo={summary['algo']} {pairs}")
    exit_code = 1 if (failed and spec.enforce) else 0
    if failed:
        log.info("failed assertions: %s", ", ".join(failed))
    return ExperimentResult(exit_code=exit_code, summary=summary, assertions=list(assertions))


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    game = _load_game(spec)
    log.info(
        "game: n=%d m=%d d=%d k=%d a=%g b=%g symmetric=%s",
        game.n, game.m, game.d, game.k, game.a, game.b, game.symmetric,
    )
    if spec.algo.startswith("bulletin"):
        return _run_bulletin_experiment(spec, game)
    return _run_bandit_experiment(spec, game)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="congames",
        description="Mirror-descent dynamics in congestion games: run, record, verify.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--game", metavar="PATH", help="game file to load")
    src.add_argument("--gen", metavar="SPEC", help='generate a game, e.g. "n=4,m=6,d=3,deg=2,sym=1"')
    p.add_argument(
        "--algo",
        required=True,
        choices=["bulletin-gd", "bulletin-mu", "bandit-gd", "bandit-mu"],
    )
    tgt = p.add_mutually_exclusive_group()
    tgt.add_argument("--eps", type=float, help="potential-gap target")
    tgt.add_argument("--sigma", type=float, help="social-cost slack; converted to a gap target")
    p.add_argument("--eta", type=float, help="learning rate (default 1/lambda)")
    p.add_argument("--lambda-cap", dest="lambda_cap", type=float, default=0.9)
    p.add_argument("--kappa", type=float, default=0.05)
    p.add_argument("--nu", type=float, default=8.0)
    lim = p.add_mutually_exclusive_group()
    lim.add_argument("--steps", type=int, help="bulletin step cap")
    lim.add_argument("--episodes", type=int, help="bandit episode count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", help="trajectory CSV path")
    p.add_argument("--assert", dest="enforce", action="store_true", default=True,
                   help="enable theorem assertions (default)")
    p.add_argument("--no-assert", dest="enforce", action="store_false",
                   help="report only; always exit 0")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging()
        spec = ExperimentSpec(
            algo=args.algo,
            game_path=args.game,
            gen=parse_gen_string(args.gen) if args.gen else None,
            eps=args.eps,
            sigma=args.sigma,
            eta=args.eta,
            lambda_cap=args.lambda_cap,
            kappa=args.kappa,
            nu=args.nu,
            steps=args.steps,
            episodes=args.episodes,
            seed=args.seed,
            out=args.out,
            enforce=args.enforce,
        )
        result = run_experiment(spec)
    except (ConfigurationError, GameFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
