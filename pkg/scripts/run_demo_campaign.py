#!/usr/bin/env python3
"""End-to-end demo: generate a synthetic corpus, train the Q-network
against the six simulated verifier profiles, then compare greedy fuzzing
with the random-action baseline.

Everything is driven by one rng seed and the fixed reference clock, so a
given invocation always reproduces the same numbers.

    python scripts/run_demo_campaign.py --seeds 300 --episodes 3 --out demo-run
"""

import argparse
import sys
from pathlib import Path

from diffcert import campaign, corpus as corpus_mod, qnet
from diffcert.campaign import CampaignConfig, EpsilonSchedule
from diffcert.corpus import report
from diffcert.qnet import TrainConfig
from diffcert.verdicts import default_backends


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=300, help="synthetic corpus size")
    parser.add_argument("--episodes", type=int, default=3)
    parser.add_argument("--seed", type=int, default=11, help="campaign rng seed")
    parser.add_argument("--out", default="demo-run")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print(f"generating {args.seeds} synthetic seeds ...")
    corpus = corpus_mod.generate_corpus(args.seeds, rng_seed=1)
    corpus_mod.write_corpus(corpus, out / "corpus")
    backends = tuple(default_backends(corpus.trust))
    print(f"backends: {', '.join(b.id for b in backends)}")

    train_config = CampaignConfig(
        backends=backends,
        max_episode=args.episodes,
        rng_seed=args.seed,
        epsilon=EpsilonSchedule.annealed(),
        train=TrainConfig(use_target_network=True),
        db_path=str(out / "discrepancies.db"),
    )
    print(f"training for {args.episodes} episodes ...")
    params, records, stats = campaign.run_training(corpus, train_config)
    for line in stats.summary_lines():
        print("  " + line)
    qnet.save(params, train_config.registry, out / "qnet.ckpt")

    flat = CampaignConfig(backends=backends, max_episode=1, rng_seed=args.seed)
    _, greedy = campaign.run_inference(corpus, params, flat)
    baseline = campaign.run_baseline(corpus, flat)
    ratio = greedy.yield_ratio / baseline.yield_ratio if baseline.yield_ratio else float("inf")
    print(f"greedy yield    {greedy.yield_ratio:.1%}")
    print(f"baseline yield  {baseline.yield_ratio:.1%}")
    print(f"ratio           {ratio:.2f}x")

    print()
    print(report(records, corpus_size=stats.seeds_processed).to_text())
    print(f"artifacts in {out}/ (corpus/, qnet.ckpt, discrepancies.db)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
