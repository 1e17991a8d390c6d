"""The command-line workflow end to end: synthesize a dataset, run the cached
pipeline twice (the second run reuses every stage), evaluate against ground
truth, and render one kept pair as an SVG.

Run:  python3 demos/04_cli_workflow.py
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path

workdir = Path(tempfile.mkdtemp(prefix="cli_"))
dataset = workdir / "dataset"
out = workdir / "out"


def sh(*args: str) -> str:
    print("$", " ".join(args))
    proc = subprocess.run(args, capture_output=True, text=True, check=True)
    if proc.stdout.strip():
        print(proc.stdout.strip())
    return proc.stdout


sh("rotatematch", "synth", "--seed", "5", "--scenes", "2",
   "--views", "4", "--outliers", "2", "--out", str(dataset))
print()

manifest = dataset / "manifest.json"
sh("rotatematch", "run", str(manifest), "--out", str(out))
print()

print("second run hits the stage cache:")
sh("rotatematch", "run", str(manifest), "--out", str(out))
print()

run_dir = out / json.loads(manifest.read_text())["dataset_id"]
sh("rotatematch", "evaluate",
   "--gt", str(dataset / "gt.json"),
   "--pred", str(run_dir / "clusters.json"))
print()

# pick the strongest kept pair from the match log and draw it
with open(run_dir / "matches.jsonl") as f:
    results = [json.loads(line) for line in f]
best = max((r for r in results if r["kept"]), key=lambda r: r["total"])
svg = workdir / "pair.svg"
sh("rotatematch", "viz",
   "--matches", str(run_dir / "matches.jsonl"),
   "--manifest", str(manifest),
   "--pair", f"{best['a']},{best['b']}", "--out", str(svg))
print(f"\nwrote {svg} ({svg.stat().st_size} bytes) for pair "
      f"{best['a']} -- {best['b']} with total {best['total']}")
