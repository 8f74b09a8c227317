"""Operator entry point.

Subcommands: ingest, gen, train, fuzz, baseline, verify, catalog, report.
Configuration precedence is flags > config file > built-in defaults, and
the effective configuration is echoed at startup so every run is
reproducible from its printed header.  All randomness flows from the
campaign seed; no ambient entropy is consulted.

Exit codes: 0 success; 10 is the verify subcommand's discrepancy-found
sentinel; any other nonzero value is an error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import sys
from pathlib import Path

from . import campaign as campaign_mod
from . import corpus as corpus_mod
from . import qnet
from .actions import catalog
from .certs import REFERENCE_TIME, MalformedDer, MalformedPem, UnsupportedStructure, pem_decode
from .corpus import DiscrepancyDb, EmptyCorpus, SeedCorpus
from .qnet import TrainConfig
from .verdicts import (
    VERDICT_NAMES,
    InsufficientBackends,
    TrustStore,
    bind_backends,
    default_backend_specs,
    is_discrepancy,
    load_backend_specs,
    verify_all,
)

EXIT_OK = 0
EXIT_DISCREPANCY = 10
EXIT_ERROR = 1
EXIT_USAGE = 2


class CliError(Exception):
    """A user-facing failure with a one-line, machine-parseable message."""


def _build_parser() -> argparse.ArgumentParser:
    # Global flags live in a parent parser with SUPPRESS defaults so they
    # can be given before or after the subcommand without clobbering.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="campaign rng seed (default 0)")
    common.add_argument("--backends", default=argparse.SUPPRESS, help="backend configuration file (default: six simulated profiles)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default .)")
    common.add_argument("--episodes", type=int, default=argparse.SUPPRESS, help="training episodes (default 1)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress the config echo")

    parser = argparse.ArgumentParser(
        prog="diffcert", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter, parents=[common]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load a directory of .pem/.der seeds into a corpus directory")
    p.add_argument("directory")

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic seed corpus plus its trust store")
    p.add_argument("count", type=int)

    p = sub.add_parser("train", parents=[common], help="run a training campaign over a corpus")
    p.add_argument("corpus")
    p.add_argument("--trust", help="trust store JSON (default: <corpus>/trust.json)")
    p.add_argument("--reward", choices=("primary", "delta"), default="primary")

    p = sub.add_parser("fuzz", parents=[common], help="greedy inference campaign from a checkpoint")
    p.add_argument("corpus")
    p.add_argument("checkpoint")
    p.add_argument("--trust")

    p = sub.add_parser("baseline", parents=[common], help="random-action campaign for comparison")
    p.add_argument("corpus")
    p.add_argument("--trust")

    p = sub.add_parser("verify", parents=[common], help="differential-test one certificate file")
    p.add_argument("certificate")
    p.add_argument("--trust")
    p.add_argument("--now", help="verification clock, ISO 8601 (default: fixed reference time)")

    sub.add_parser("catalog", parents=[common], help="print the 86-action catalog")

    p = sub.add_parser("report", parents=[common], help="summarize a discrepancy database")
    p.add_argument("database")
    p.add_argument("--corpus-size", type=int)
    p.add_argument("--json", dest="json_out", help="also write the machine-readable report here")

    return parser


def _effective_config(args: argparse.Namespace) -> dict:
    settings = {"seed": 0, "episodes": 1, "out": ".", "backends": None}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"config: {exc}") from exc
        unknown = set(loaded) - set(settings)
        if unknown:
            raise CliError(f"config: unknown keys {sorted(unknown)}")
        settings.update(loaded)
    for key in ("seed", "episodes", "out", "backends"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _load_backends(settings: dict, trust: TrustStore):
    specs = load_backend_specs(settings["backends"]) if settings["backends"] else default_backend_specs()
    bound = bind_backends(specs, trust)
    if len(bound) < 2:
        raise CliError(f"backends: only {len(bound)} available, need at least 2")
    return tuple(bound)


def _load_corpus(path: str, trust_flag: str | None) -> SeedCorpus:
    try:
        corpus = corpus_mod.load_corpus_dir(path)
    except (EmptyCorpus, OSError, ValueError) as exc:
        raise CliError(f"corpus: {exc}") from exc
    if trust_flag:
        try:
            corpus = dataclasses.replace(corpus, trust=TrustStore.from_json(Path(trust_flag).read_text()))
        except (OSError, ValueError) as exc:
            raise CliError(f"trust: {exc}") from exc
    return corpus


def _campaign_config(
    settings: dict,
    corpus: SeedCorpus,
    out: Path,
    reward: str = "primary",
    db_name: str = "discrepancies.db",
    training: bool = False,
):
    trust = corpus.trust if corpus.trust is not None else TrustStore()
    backends = _load_backends(settings, trust)
    # Training runs get the stabilized recipe (annealed exploration plus a
    # target network); inference and baseline runs have nothing to learn.
    if training:
        epsilon = campaign_mod.EpsilonSchedule.annealed()
        train = TrainConfig(use_target_network=True)
    else:
        epsilon = campaign_mod.EpsilonSchedule()
        train = TrainConfig()
    return campaign_mod.CampaignConfig(
        backends=backends,
        max_episode=settings["episodes"],
        reward_scheme=reward,
        rng_seed=settings["seed"],
        epsilon=epsilon,
        train=train,
        db_path=str(out / db_name),
    )


def _print_stats(stats) -> None:
    for line in stats.summary_lines():
        print(line)


def cmd_ingest(args, settings) -> int:
    corpus = _load_corpus(args.directory, None)
    out = Path(settings["out"])
    corpus_mod.write_corpus(corpus, out)
    print(f"ingested {len(corpus)} seeds ({corpus.rejected} rejected) -> {out}")
    return EXIT_OK


def cmd_gen(args, settings) -> int:
    try:
        corpus = corpus_mod.generate_corpus(args.count, settings["seed"])
    except EmptyCorpus as exc:
        raise CliError(f"gen: {exc}") from exc
    out = Path(settings["out"])
    corpus_mod.write_corpus(corpus, out)
    print(f"generated {len(corpus)} seeds with {len(corpus.trust)} trust anchors -> {out}")
    return EXIT_OK


def cmd_train(args, settings) -> int:
    corpus = _load_corpus(args.corpus, args.trust)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    config = _campaign_config(settings, corpus, out, reward=args.reward, training=True)
    params, records, stats = campaign_mod.run_training(corpus, config)
    checkpoint = out / "qnet.ckpt"
    qnet.save(params, config.registry, checkpoint)
    (out / "stats.json").write_text(_stats_json(stats))
    _print_stats(stats)
    print(f"checkpoint -> {checkpoint}")
    print(f"discrepancy db -> {config.db_path} ({len(records)} records)")
    return EXIT_OK


def cmd_fuzz(args, settings) -> int:
    corpus = _load_corpus(args.corpus, args.trust)
    try:
        params, registry = qnet.load(args.checkpoint)
    except (OSError, qnet.CorruptCheckpoint) as exc:
        raise CliError(f"checkpoint: {exc}") from exc
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    config = dataclasses.replace(
        _campaign_config(settings, corpus, out, db_name="fuzz.db"), registry=registry
    )
    records, stats = campaign_mod.run_inference(corpus, params, config)
    (out / "fuzz-stats.json").write_text(_stats_json(stats))
    _print_stats(stats)
    print(f"discrepancy db -> {config.db_path} ({len(records)} records)")
    return EXIT_OK


def cmd_baseline(args, settings) -> int:
    corpus = _load_corpus(args.corpus, args.trust)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    config = _campaign_config(settings, corpus, out, db_name="baseline.db")
    stats = campaign_mod.run_baseline(corpus, config)
    (out / "baseline-stats.json").write_text(_stats_json(stats))
    _print_stats(stats)
    return EXIT_OK


def cmd_verify(args, settings) -> int:
    path = Path(args.certificate)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CliError(f"verify: {exc}") from exc
    try:
        der = pem_decode(blob.decode("ascii", errors="replace")) if path.suffix.lower() == ".pem" else blob
    except MalformedPem as exc:
        raise CliError(f"verify: {exc}") from exc
    trust = TrustStore()
    if args.trust:
        try:
            trust = TrustStore.from_json(Path(args.trust).read_text())
        except (OSError, ValueError) as exc:
            raise CliError(f"trust: {exc}") from exc
    backends = _load_backends(settings, trust)
    now = dt.datetime.fromisoformat(args.now) if args.now else REFERENCE_TIME
    if now.tzinfo is None:
        now = now.replace(tzinfo=dt.timezone.utc)
    verdicts = verify_all(der, backends, now)
    for backend_id, code in zip(verdicts.backend_ids, verdicts.codes):
        print(f"{backend_id:>16}  {code:>4}  {VERDICT_NAMES[code]}")
    return EXIT_DISCREPANCY if is_discrepancy(verdicts) else EXIT_OK


def cmd_catalog(_args, _settings) -> int:
    for spec in catalog():
        print(f"{spec.id:>3}  {spec.family.value:<10}  {spec.description}")
    return EXIT_OK


def cmd_report(args, _settings) -> int:
    db = DiscrepancyDb(args.database)
    try:
        records = db.load_all()
    except (OSError, corpus_mod.CorruptDatabase) as exc:
        raise CliError(f"report: {exc}") from exc
    rep = corpus_mod.report(records, corpus_size=args.corpus_size)
    print(rep.to_text(), end="")
    if args.json_out:
        Path(args.json_out).write_text(rep.to_json_lines())
    return EXIT_OK


def _stats_json(stats) -> str:
    return json.dumps(
        {
            "seeds_processed": stats.seeds_processed,
            "skipped_seeds": stats.skipped_seeds,
            "discrepancies": stats.discrepancies,
            "yield": stats.yield_ratio,
            "episodes": [
                {"corpus_size": ep.corpus_size, "discrepancies": ep.discrepancies, "proportion": ep.proportion}
                for ep in stats.episodes
            ],
            "modification_histogram": {str(k): v for k, v in sorted(stats.modification_histogram.items())},
        },
        indent=2,
    )


_COMMANDS = {
    "ingest": cmd_ingest,
    "gen": cmd_gen,
    "train": cmd_train,
    "fuzz": cmd_fuzz,
    "baseline": cmd_baseline,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _effective_config(args)
        if not getattr(args, "quiet", False):
            echo = {k: v for k, v in settings.items() if v is not None}
            print(f"# config: {json.dumps(echo, sort_keys=True)} command={args.command}")
        return _COMMANDS[args.command](args, settings)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (InsufficientBackends, EmptyCorpus, MalformedDer, UnsupportedStructure) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
