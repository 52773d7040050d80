"""Zero-shot transfer matrix over a handful of game variants, driven through the CLI.

    python3 scripts/transfer_sweep.py --out runs/sweep --epochs 10 --games 20

Each variant is trained from scratch, every trained net is transplanted onto
every variant, and the result plays an untrained-net opponent there. The
report lands in <out>/results/report.md.
"""
import argparse
import json
from pathlib import Path

from gametransfer.harness.cli import main as cli

VARIANTS = {
    "line-4x4-w3": {"family": "line", "shape": "square", "side": 4, "win_len": 3},
    "line-5x5-w4": {"family": "line", "shape": "square", "side": 5, "win_len": 4},
    "line-hex3-w3": {"family": "line", "shape": "hexhex", "side": 3, "win_len": 3},
    "breakthrough-5x5": {"family": "breakthrough", "side": 5},
}


def run(argv):
    code = cli(argv)
    if code:
        raise SystemExit(f"command failed ({code}): {' '.join(argv)}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--games", type=int, default=20)
    ap.add_argument("--iters", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    configs = {}
    for name, game in VARIANTS.items():
        cfg = {"game": game, "network": {"hidden_multiplier": 2, "blocks": 1},
               "train": {"epochs": args.epochs, "episodes_per_epoch": 8, "replay_warmup": 128,
                         "search": {"iterations": 32}},
               "eval_search": {"iterations": args.iters}, "seed": args.seed}
        path = out / f"{name}.json"
        path.write_text(json.dumps(cfg, indent=2))
        configs[name] = path
        run(["train", "--config", str(path), "--out", str(out / "train" / name)])

    for src in VARIANTS:
        for tgt in VARIANTS:
            dest = out / "transfer" / f"{src}__{tgt}"
            run(["transfer", str(out / "train" / src / "final.gmrf"), "--config",
                 str(configs[tgt]), "--out", str(dest)])
            run(["eval", str(dest / "transferred.gmrf"), "untrained", "--config",
                 str(configs[tgt]), "--games", str(args.games), "--experiment", "sweep",
                 "--workers", str(args.workers), "--out", str(out / "results")])
    run(["report", str(out / "results")])


if __name__ == "__main__":
    main()
