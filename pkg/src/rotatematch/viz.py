"""Side-by-side SVG rendering of the correspondences of one matched pair."""

from __future__ import annotations

import base64
from pathlib import Path
from xml.sax.saxutils import escape

from .core import DatasetManifest, PairMatchResult
from .errors import PairNotFound


def _embed_png(path: str) -> str:
    with open(path, "rb") as f:
        data = base64.b64encode(f.read()).decode("ascii")
    return f"data:image/png;base64,{data}"


def find_result(results: list[PairMatchResult], a: str, b: str) -> PairMatchResult:
    a, b = min(a, b), max(a, b)
    for r in results:
        if r.pair.a == a and r.pair.b == b:
            return r
    raise PairNotFound(f"pair ({a}, {b}) not in matches file")


def render_pair_svg(result: PairMatchResult, manifest: DatasetManifest,
                    match_gate: int, out_path: str | Path) -> None:
    """Write an SVG with both images, one line per correspondence, and a
    caption carrying the per-orientation counts and the gate verdict."""
    im_a = manifest[result.pair.a]
    im_b = manifest[result.pair.b]
    im_a.load()
    im_b.load()
    gap = 16
    caption_h = 40
    width = im_a.width + gap + im_b.width
    height = max(im_a.height, im_b.height) + caption_h
    bx = im_a.width + gap

    stage1 = ", ".join(f"{o.degrees}:{n}" for o, n in result.stage1_counts.items())
    stage2 = ", ".join(f"{o.degrees}:{n}" for o, n in result.stage2_counts.items())
    verdict = "kept" if result.kept else f"dropped (< gate {match_gate})"
    caption = (f"{result.pair.a} / {result.pair.b}  stage1 [{stage1}]  "
               f"stage2 [{stage2}]  total {result.total}  {verdict}")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<image x="0" y="0" width="{im_a.width}" height="{im_a.height}" '
        f'href="{_embed_png(im_a.path)}"/>',
        f'<image x="{bx}" y="0" width="{im_b.width}" height="{im_b.height}" '
        f'href="{_embed_png(im_b.path)}"/>',
    ]
    for (xa, ya, xb, yb) in result.correspondences:
        parts.append(
            f'<line x1="{xa:.2f}" y1="{ya:.2f}" x2="{bx + xb:.2f}" y2="{yb:.2f}" '
            f'stroke="lime" stroke-width="0.8" opacity="0.6"/>')
    parts.append(
        f'<text x="4" y="{height - 14}" font-family="monospace" font-size="12">'
        f'{escape(caption)}</text>')
    parts.append("</svg>")
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")
