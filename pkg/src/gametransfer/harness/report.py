"""Aggregate per-game result files into source x target win-percentage matrices."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

from gametransfer.harness.evaluate import win_percentage


class ResultFileError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


REQUIRED = ("family", "source", "target", "winner")

HEADER = """# Transfer evaluation report

Cells give the win percentage of the row agent (trained in the source domain)
against the column domain's opponent, evaluated in the target domain.
Draws count as half a win. "-" marks pairs without results.
"""


def load_records(results_dir) -> list[dict]:
    records = []
    for path in sorted(Path(results_dir).glob("*.jsonl")):
        with path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ResultFileError(f"{path}:{lineno}", f"invalid JSON ({exc.msg})") from None
                missing = [k for k in REQUIRED if k not in rec]
                if missing or rec["winner"] not in ("A", "B", "draw"):
                    raise ResultFileError(f"{path}:{lineno}",
                                          f"malformed record (missing {missing or 'valid winner'})")
                rec["_file"] = path.stem
                records.append(rec)
    return records


def check_aggregates(results_dir, records):
    """Stored CSV aggregates must agree with the raw per-game records."""
    by_file = defaultdict(list)
    for r in records:
        by_file[r["_file"]].append(r)
    for path in sorted(Path(results_dir).glob("*.csv")):
        if path.stem not in by_file:
            continue
        games = by_file[path.stem]
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        if len(rows) != 1:
            raise ResultFileError(path, "expected exactly one aggregate row")
        row = rows[0]
        try:
            stored = (int(row["games"]), int(row["wins_a"]), int(row["wins_b"]), int(row["draws"]))
        except (KeyError, ValueError):
            raise ResultFileError(path, "malformed aggregate row") from None
        raw = (len(games), sum(g["winner"] == "A" for g in games),
               sum(g["winner"] == "B" for g in games), sum(g["winner"] == "draw" for g in games))
        if stored != raw:
            raise ResultFileError(path, f"aggregate {stored} disagrees with per-game records {raw}")


def build_matrices(records) -> dict:
    """family -> (rows, cols, {(row, col): win%})."""
    tallies = defaultdict(lambda: [0, 0, 0])  # (family, src, tgt) -> wins, draws, games
    for r in records:
        t = tallies[(r["family"], r["source"], r["target"])]
        t[0] += r["winner"] == "A"
        t[1] += r["winner"] == "draw"
        t[2] += 1
    out = {}
    for family in sorted({k[0] for k in tallies}):
        keys = [k for k in tallies if k[0] == family]
        # square over all labels so the table reads like a variant sweep
        labels = sorted({k[1] for k in keys} | {k[2] for k in keys})
        rows = cols = labels
        cells = {(k[1], k[2]): win_percentage(*tallies[k]) for k in keys}
        out[family] = (rows, cols, cells)
    return out


def render(matrices) -> tuple[str, dict]:
    md = [HEADER]
    csvs = {}
    for family, (rows, cols, cells) in matrices.items():
        md.append(f"## {family}\n")
        md.append("| Source \\ Target | " + " | ".join(cols) + " |")
        md.append("|---|" + "---|" * len(cols))
        lines = [["source"] + cols]
        for r in rows:
            vals = [f"{cells[(r, c)]:.2f}%" if (r, c) in cells else "-" for c in cols]
            md.append(f"| {r} | " + " | ".join(vals) + " |")
            lines.append([r] + [v.rstrip("%") for v in vals])
        md.append("")
        csvs[family] = lines
    return "\n".join(md), csvs


def write_report(results_dir, out_dir=None):
    results_dir = Path(results_dir)
    if not results_dir.is_dir():
        raise ResultFileError(results_dir, "results directory does not exist")
    out = Path(out_dir) if out_dir else results_dir
    out.mkdir(parents=True, exist_ok=True)
    records = load_records(results_dir)
    check_aggregates(results_dir, records)
    text, csvs = render(build_matrices(records))
    md_path = out / "report.md"
    md_path.write_text(text)
    paths = [md_path]
    for family, lines in csvs.items():
        p = out / f"matrix_{family}.csv"
        with p.open("w", newline="") as fh:
            csv.writer(fh).writerows(lines)
        paths.append(p)
    return paths
