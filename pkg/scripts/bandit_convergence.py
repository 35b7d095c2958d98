#!/usr/bin/env python3
"""Run the episode-based bandit dynamics on a parallel-links game.

Prints per-episode potential gaps against the computed convergence threshold
3*delta/theta, the realized gradient-estimate errors against the accuracy
target, and how the threshold shrinks with the player count.

Usage: python scripts/bandit_convergence.py [--players 10] [--links 10] [--episodes 8]
"""

import argparse

from congames import euclidean_preset, parallel_links_game, reference_minimizer, run_bandit


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--players", type=int, default=10)
    ap.add_argument("--links", type=int, default=10)
    ap.add_argument("--episodes", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    game = parallel_links_game(args.players, [[1.0]] * args.links)
    ref = reference_minimizer(game)
    cfg = euclidean_preset(game, episodes=args.episodes, seed=args.seed)
    params = cfg.derive(game)
    print(
        f"n={game.n} links={game.m}: Lambda={cfg.lam:.5f} eta={cfg.eta:.4f} "
        f"eps={params.epsilon:.3f} theta={params.theta:.3f} "
        f"threshold={params.threshold:.3f} tau0={params.tau0}"
    )

    report = run_bandit(game, cfg, reference=ref)
    print(f"{'episode':>8} {'steps':>9} {'phi gap':>12} {'est error':>10}")
    for idx, rec in enumerate(report.records):
        print(
            f"{rec.tau:>8} {rec.steps:>9} {report.certified_gaps[idx]:>12.3e} "
            f"{rec.grad_error:>10.4f}"
        )

    print("\nthreshold scaling on this link count:")
    for n in (5, 10, 20):
        g = parallel_links_game(n, [[1.0]] * args.links)
        p = euclidean_preset(g).derive(g)
        print(f"  n={n:>3}: 3*delta/theta = {p.threshold:.4f}")


if __name__ == "__main__":
    main()
