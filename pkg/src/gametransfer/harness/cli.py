"""Command-line driver: train, transfer, finetune, eval, report.

Exit codes: 0 success, 2 configuration error, 3 data error (unreadable or
mismatched checkpoints, malformed result files).
"""
from __future__ import annotations

import argparse
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from gametransfer import codec
from gametransfer.games import GameConfig
from gametransfer.harness.config import ConfigError, load_config
from gametransfer.harness.evaluate import AgentSpec, play_match, write_results
from gametransfer.harness.report import ResultFileError, write_report
from gametransfer.nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gametransfer.nn.network import Network
from gametransfer.selfplay import train_loop
from gametransfer.transfer.mapping import (
    mapping_report, match_action_channels, match_state_channels,
)
from gametransfer.transfer.transplant import MODES, TransferMode, reinit_final_layers, transplant

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("gametransfer")


class DataError(Exception):
    pass


def _specs(game: GameConfig):
    return codec.build_state_spec(game), codec.build_action_spec(game)


def _load(path):
    try:
        return load_checkpoint(path)
    except FileNotFoundError:
        raise DataError(f"{path}: checkpoint not found") from None
    except CheckpointError as exc:
        raise DataError(f"{path}: {exc}") from None


def _checkpoint_game(meta, path) -> GameConfig:
    if "game" not in meta:
        raise DataError(f"{path}: checkpoint metadata has no game description")
    try:
        return GameConfig.from_dict(meta["game"])
    except ValueError as exc:
        raise DataError(f"{path}: bad game in metadata ({exc})") from None


def _config(args):
    if not args.config:
        raise ConfigError("--config", "required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def cmd_train(args) -> int:
    cfg = _config(args)
    state_spec, action_spec = _specs(cfg.game)
    net_cfg = cfg.network.network_config(len(state_spec), len(action_spec))
    _, history = train_loop(cfg.game, net_cfg, cfg.train, cfg.seed, out_dir=cfg.out,
                            metadata={"source_label": cfg.game.label})
    if history:
        print(f"trained {cfg.game.label} for {len(history)} epochs; "
              f"final loss {history[-1]['loss']:.4f}")
    print(f"checkpoints in {cfg.out}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = _config(args)
    src_net, src_meta = _load(args.checkpoint)
    src_game = _checkpoint_game(src_meta, args.checkpoint)
    src_specs, tgt_specs = _specs(src_game), _specs(cfg.game)
    if (src_net.config.c_state, src_net.config.c_action) != tuple(map(len, src_specs)):
        raise DataError(f"{args.checkpoint}: network channels do not match its own game "
                        f"{src_game.label}")
    mode = TransferMode(args.mode, args.reinit_final_layers)
    state_map = match_state_channels(src_specs[0], tgt_specs[0])
    action_map = match_action_channels(src_specs[1], tgt_specs[1])
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    net = transplant(src_net, src_specs, tgt_specs, mode, rng, state_map, action_map)

    report = mapping_report(state_map, action_map,
                            f"{src_game.label} -> {cfg.game.label} ({args.mode})")
    same_layout = all(a.channels == b.channels for a, b in zip(src_specs, tgt_specs))
    if same_layout:
        diffs = sorted(k for k in src_game.to_dict()
                       if src_game.to_dict()[k] != cfg.game.to_dict().get(k))
        if diffs:
            report += ("\nAll channels matched one to one. Differences in "
                       f"{', '.join(diffs)} are invisible at the channel level.\n")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"game": cfg.game.to_dict(), "source_label": src_meta.get("source_label",
                                                                     src_game.label),
            "source_game": src_game.to_dict(), "transfer_mode": args.mode,
            "reinit_final_layers": bool(args.reinit_final_layers), "seed": cfg.seed}
    save_checkpoint(net, out / "transferred.gmrf", meta)
    (out / "mapping.txt").write_text(report)
    print(report)
    print(f"wrote {out / 'transferred.gmrf'}")
    return EXIT_OK


def cmd_finetune(args) -> int:
    cfg = _config(args)
    net, meta = _load(args.checkpoint)
    state_spec, action_spec = _specs(cfg.game)
    if (net.config.c_state, net.config.c_action) != (len(state_spec), len(action_spec)):
        raise DataError(
            f"{args.checkpoint}: network has {net.config.c_state} state / {net.config.c_action} "
            f"action channels but {cfg.game.label} needs {len(state_spec)} / {len(action_spec)}; "
            "run `transfer` first")
    if args.reinit_final_layers:
        fresh = Network.initialize(net.config,
                                   np.random.default_rng(np.random.SeedSequence([cfg.seed, 2])))
        reinit_final_layers(net, fresh)
    extra = {"source_label": meta.get("source_label", cfg.game.label),
             "finetuned_from": str(args.checkpoint),
             "reinit_final_layers": bool(args.reinit_final_layers)}
    out = Path(cfg.out)
    if cfg.train.epochs == 0:
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(net, out / "final.gmrf", {**meta, **extra, "game": cfg.game.to_dict()})
    else:
        train_loop(cfg.game, None, cfg.train, cfg.seed, out_dir=out, net=net, metadata=extra)
    print(f"fine-tuned checkpoints in {out}")
    return EXIT_OK


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def cmd_eval(args) -> int:
    cfg = _config(args)
    iters = args.iters if args.iters is not None else cfg.eval_search.iterations
    iters_b = args.iters_opponent if args.iters_opponent is not None else iters
    try:
        spec_a = AgentSpec.parse(args.agent_a, iters)
        spec_b = AgentSpec.parse(args.agent_b, iters_b)
    except FileNotFoundError as exc:
        raise DataError(f"{exc.filename}: checkpoint not found") from None
    except CheckpointError as exc:
        raise DataError(str(exc)) from None
    n_state, n_action = map(len, _specs(cfg.game))
    for text, spec in ((args.agent_a, spec_a), (args.agent_b, spec_b)):
        if spec.kind == "checkpoint":
            net, _ = _load(spec.path)
            if (net.config.c_state, net.config.c_action) != (n_state, n_action):
                raise DataError(f"{text}: network channels do not fit {cfg.game.label}; "
                                "transfer it first")
    experiment = args.experiment or (cfg.game.family if spec_b.kind == "checkpoint"
                                     else f"{cfg.game.family}-vs-{spec_b.kind}")
    search = replace(cfg.eval_search, iterations=iters)
    result = play_match(cfg.game, spec_a, spec_b, args.games, search, cfg.seed, args.workers)
    context = {"family": experiment, "source": spec_a.label, "target": cfg.game.label,
               "agent_a": args.agent_a, "agent_b": args.agent_b, "seed": cfg.seed,
               "iters_a": iters, "iters_b": iters_b}
    name = _slug(f"{experiment}__{spec_a.label}__{cfg.game.label}__{spec_b.label}")
    jsonl, csv_path = write_results(cfg.out, name, result, context)
    print(f"{spec_a.label} vs {spec_b.label} on {cfg.game.label}: "
          f"A {result.wins_a} / B {result.wins_b} / draws {result.draws} over "
          f"{result.games_played} games -> A {result.win_pct_a:.2f}%")
    print(f"wrote {jsonl} and {csv_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    results = args.results_dir
    try:
        paths = write_report(results, args.out)
    except ResultFileError as exc:
        raise DataError(str(exc)) from None
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gametransfer",
                                     description="Train, transfer and evaluate game-playing nets.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment JSON file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")

    p = sub.add_parser("train", help="self-play training from scratch")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="transplant a checkpoint onto another game")
    p.add_argument("checkpoint")
    common(p)
    p.add_argument("--mode", choices=MODES, default="zero-shot")
    p.add_argument("--reinit-final-layers", action="store_true")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("finetune", help="continue training a (transferred) checkpoint")
    p.add_argument("checkpoint")
    common(p)
    p.add_argument("--reinit-final-layers", action="store_true")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="head-to-head match; agents are checkpoints or "
                                    "random / uct / untrained")
    p.add_argument("agent_a")
    p.add_argument("agent_b")
    common(p)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--iters", type=int, help="search iterations for agent A (and B by default)")
    p.add_argument("--iters-opponent", type=int, help="search iterations for agent B")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--experiment", help="report family for this result (default: game family)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="win-percentage matrices from result files")
    p.add_argument("results_dir")
    p.add_argument("--out", help="where to write report files (default: results_dir)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # e.g. invalid transfer mode combination
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
