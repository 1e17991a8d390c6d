"""Command-line entry points: export-global and export-local.

Exit codes: 0 success, 1 operational error (bad manifest, unreadable image,
unavailable checkpoint), 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .backends import load_backend
from .formats import write_rmdf, write_rmkp
from .geometry import parse_rotations
from .manifest import read_manifest

log = logging.getLogger("adapter")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="dataset manifest JSON")
    parser.add_argument("--out", required=True, help="output file path")
    parser.add_argument("--checkpoint", default=None,
                        help="named model checkpoint (default: built-in backend)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adapter",
                                     description="Export RMDF/RMKP feature files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_global = sub.add_parser("export-global",
                              help="write per-image global descriptors (RMDF)")
    _add_common(p_global)

    p_local = sub.add_parser("export-local",
                             help="write keypoints and local descriptors (RMKP)")
    _add_common(p_local)
    p_local.add_argument("--rotations", default="0,90,180,270",
                         help="comma-separated subset of 0,90,180,270")
    return parser


def cmd_export_global(args: argparse.Namespace) -> None:
    manifest = read_manifest(args.manifest)
    backend, _ = load_backend("global", args.checkpoint)
    ids = []
    rows = []
    for image in manifest.images:
        rows.append(backend.embed(image.load()))
        ids.append(image.id)
    matrix = np.stack(rows) if rows else np.zeros((0, backend.dim))
    write_rmdf(ids, matrix, args.out)
    log.info("wrote %d descriptors (dim %d) to %s", len(ids), backend.dim, args.out)


def cmd_export_local(args: argparse.Namespace) -> None:
    rotations = parse_rotations(args.rotations)
    manifest = read_manifest(args.manifest)
    _, backend = load_backend("local", args.checkpoint)
    feature_sets = []
    for image in manifest.images:
        features = backend.extract(image.load(), rotations)
        features.image_id = image.id
        feature_sets.append(features)
    write_rmkp(feature_sets, backend.dim, args.out)
    total = sum(len(fs.keypoints) for fs in feature_sets)
    log.info("wrote %d keypoints over %d images to %s",
             total, len(feature_sets), args.out)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export-global":
            cmd_export_global(args)
        else:
            cmd_export_local(args)
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
