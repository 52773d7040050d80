"""Train Hex 5x5 at desk scale, then evaluate on 5x5 and zero-shot on 7x7.

    python3 scripts/hex_desk.py --out runs/hex_desk [--games 100]
"""
import argparse
import json
import logging
import time
from pathlib import Path

from gametransfer import codec
from gametransfer.games import hex_game
from gametransfer.harness.config import default_eval_search
from gametransfer.harness.evaluate import AgentSpec, play_match
from gametransfer.harness.presets import DeskHex
from gametransfer.nn.checkpoint import load_checkpoint, save_checkpoint
from gametransfer.selfplay import train_loop
from gametransfer.transfer.transplant import transplant


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/hex_desk")
    ap.add_argument("--games", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-train", action="store_true", help="reuse out/final.gmrf")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    out = Path(args.out)
    preset = DeskHex(seed=args.seed)
    t0 = time.time()
    if not args.skip_train:
        train_loop(preset.game, preset.network, preset.train, preset.seed, out_dir=out,
                   metadata={"source_label": preset.game.label})
    print(f"training: {time.time() - t0:.0f}s")

    small, large = preset.game, hex_game(7)
    net_path = out / "final.gmrf"
    net, meta = load_checkpoint(net_path)
    big = transplant(net, (codec.build_state_spec(small), codec.build_action_spec(small)),
                     (codec.build_state_spec(large), codec.build_action_spec(large)))
    save_checkpoint(big, out / "hex7_zero_shot.gmrf", {**meta, "game": large.to_dict()})

    search = default_eval_search()
    summary = {}
    for name, game, path, opp in [("5x5 vs random", small, net_path, "random"),
                                  ("5x5 vs untrained", small, net_path, "untrained"),
                                  ("7x7 zero-shot vs untrained", large,
                                   out / "hex7_zero_shot.gmrf", "untrained")]:
        t = time.time()
        res = play_match(game, AgentSpec.parse(str(path), 100), AgentSpec.parse(opp, 100),
                         args.games, search, args.seed + 1000)
        summary[name] = {"wins": res.wins_a, "games": res.games_played, "pct": res.win_pct_a}
        print(f"{name}: {res.wins_a}/{res.games_played} ({time.time() - t:.0f}s)")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
