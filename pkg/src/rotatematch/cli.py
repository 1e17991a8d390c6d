"""Command-line orchestration of the pipeline stages."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import evaluation, global_desc, local_features, matching, pairing, scene_graph
from .core import (
    DatasetManifest,
    PipelineConfig,
    load_manifest,
    parse_rotations,
    validate_manifest,
)
from .errors import RotateMatchError
from .synthetic import SynthConfig, generate_dataset
from .viz import find_result, render_pair_svg

log = logging.getLogger("rotatematch")


def _setup_logging() -> None:
    level = os.environ.get("ROTATEMATCH_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(config_path: str | None, **overrides) -> PipelineConfig:
    if config_path is not None:
        if not os.path.isfile(config_path):
            raise click.ClickException(f"config file not found: {config_path}")
        config = PipelineConfig.from_file(config_path)
    else:
        config = PipelineConfig()
    if overrides.get("rotations") is not None:
        overrides["rotations"] = parse_rotations(overrides["rotations"])
    return config.override(**overrides)


def _image_sizes(manifest: DatasetManifest) -> dict[str, tuple[int, int]]:
    sizes = {}
    for im in manifest.images:
        im.load()
        sizes[im.id] = (im.width, im.height)
    return sizes


def _read_manifest(path: str) -> DatasetManifest:
    if not os.path.isfile(path):
        raise click.ClickException(f"manifest not found: {path}")
    manifest = load_manifest(path)
    violations = validate_manifest(manifest)
    if violations:
        raise click.ClickException(
            f"invalid manifest {path}: " + "; ".join(violations))
    return manifest


def _digest(parts: list[str | bytes]) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            h.update(part.encode("utf-8"))
        else:
            h.update(part)
        h.update(b"\x00")
    return h.hexdigest()


def _file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _stage_cached(out: Path, stage: str, digest: str, outputs: list[Path],
                  force: bool) -> bool:
    """True if the stage's outputs exist and were produced from these inputs."""
    sidecar = out / f"{stage}.digest"
    if force or not sidecar.is_file():
        return False
    if sidecar.read_text().strip() != digest:
        return False
    return all(p.is_file() for p in outputs)


def _mark_stage(out: Path, stage: str, digest: str) -> None:
    (out / f"{stage}.digest").write_text(digest + "\n")


def _config_digest(config: PipelineConfig) -> str:
    return _digest([repr(config)])


def _builtin_provider(jobs: int):
    def provider(manifest: DatasetManifest):
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(global_desc.builtin_global_descriptor, manifest.images))
    return provider


def _external_provider(rmdf_path: str):
    def provider(manifest: DatasetManifest):
        descriptors = {d.image_id: d
                       for d in global_desc.load_external_descriptors(rmdf_path)}
        missing = [i for i in manifest.ids() if i not in descriptors]
        if missing:
            raise RotateMatchError(
                f"descriptor file lacks ids: {', '.join(missing)}")
        return [descriptors[i] for i in manifest.ids()]
    return provider


def _extract_all(manifest: DatasetManifest, config: PipelineConfig, jobs: int,
                 rmkp_path: str | None):
    if config.backend == "external":
        if rmkp_path is None:
            raise click.ClickException("--rmkp is required with the external backend")
        return local_features.load_external_features(
            rmkp_path, image_sizes=_image_sizes(manifest))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda im: local_features.extract_features(im, config),
                             manifest.images))


def _match_results(manifest, pairs, feature_sets, config, jobs):
    features = {fs.image_id: fs for fs in feature_sets}
    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(
                lambda p: matching.match_pair_two_stage(
                    features[p.a], features[p.b], config, pair=p),
                pairs))
    return matching.match_all(pairs, features, config)


_config_opts = [
    click.option("--config", "config_path", type=str, default=None,
                 help="Flat key=value config file."),
    click.option("--backend", type=click.Choice(["builtin", "external"]), default=None),
    click.option("--rotations", type=str, default=None,
                 help="Comma-separated subset of 0,90,180,270."),
    click.option("--match-gate", type=int, default=None),
    click.option("--min-pairs", type=int, default=None),
    click.option("--exhaustive-threshold", type=int, default=None),
]


def _with_config_opts(fn):
    for opt in reversed(_config_opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Rotation-aware image matching pipeline."""
    _setup_logging()


@main.command("run")
@click.argument("manifests", nargs=-1, required=True, type=str)
@_with_config_opts
@click.option("--out", "out_dir", required=True, type=str, help="Output directory.")
@click.option("--rmdf", type=str, default=None, help="External global descriptors.")
@click.option("--rmkp", type=str, default=None, help="External local features.")
@click.option("--jobs", type=int, default=None, help="Worker pool size.")
@click.option("--force", is_flag=True, help="Ignore cached stage outputs.")
def cmd_run(manifests, config_path, backend, rotations, match_gate, min_pairs,
            exhaustive_threshold, out_dir, rmdf, rmkp, jobs, force):
    """Run pairing, extraction, matching, and clustering for each dataset."""
    config = _load_config(config_path, backend=backend, rotations=rotations,
                          match_gate=match_gate, min_pairs=min_pairs,
                          exhaustive_threshold=exhaustive_threshold)
    jobs = jobs or os.cpu_count() or 1
    summary = {"datasets": []}
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    cfg_digest = _config_digest(config)

    for manifest_path in manifests:
        manifest = _read_manifest(manifest_path)
        out = out_root / manifest.dataset_id
        out.mkdir(parents=True, exist_ok=True)
        log.info("dataset %s: %d images", manifest.dataset_id, len(manifest.images))

        input_digest = _digest([cfg_digest, _file_digest(manifest_path)]
                               + [_file_digest(im.path) for im in manifest.images])

        pairs_path = out / "pairs.jsonl"
        features_path = out / "features.rmkp"
        matches_path = out / "matches.jsonl"
        clusters_path = out / "clusters.json"

        try:
            if not _stage_cached(out, "pair", input_digest, [pairs_path], force):
                provider = (_external_provider(rmdf) if config.backend == "external"
                            else _builtin_provider(jobs))
                pairs = pairing.adaptive_pairs(manifest, provider, config)
                pairing.write_pairs(pairs, pairs_path)
                _mark_stage(out, "pair", input_digest)
            pairs = pairing.read_pairs(pairs_path)
            log.info("%d candidate pairs", len(pairs))

            if not _stage_cached(out, "extract", input_digest, [features_path], force):
                feature_sets = _extract_all(manifest, config, jobs, rmkp)
                local_features.write_features(feature_sets, features_path)
                _mark_stage(out, "extract", input_digest)
            feature_sets = local_features.load_external_features(
                features_path, image_sizes=_image_sizes(manifest))

            match_digest = _digest([input_digest, _file_digest(pairs_path),
                                    _file_digest(features_path)])
            if not _stage_cached(out, "match", match_digest, [matches_path], force):
                results = _match_results(manifest, pairs, feature_sets, config, jobs)
                matching.write_matches(results, matches_path)
                _mark_stage(out, "match", match_digest)
            results = matching.read_matches(matches_path)

            clustering = scene_graph.build_clusters(manifest.ids(), results)
            scene_graph.write_clustering(clustering, clusters_path)

            summary["datasets"].append({
                "dataset_id": manifest.dataset_id,
                "images": len(manifest.images),
                "pairs": len(pairs),
                "kept_pairs": sum(1 for r in results if r.kept),
                "clusters": [len(c) for c in clustering.clusters],
                "outliers": len(clustering.outliers),
            })
        except RotateMatchError as exc:
            raise click.ClickException(f"dataset {manifest.dataset_id}: {exc}")

    with open(out_root / "run_summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    click.echo(json.dumps(summary["datasets"]))


@main.command("pair")
@click.argument("manifest_path", type=str)
@_with_config_opts
@click.option("--out", "out_path", required=True, type=str)
@click.option("--rmdf", type=str, default=None)
@click.option("--jobs", type=int, default=None)
def cmd_pair(manifest_path, config_path, backend, rotations, match_gate,
             min_pairs, exhaustive_threshold, out_path, rmdf, jobs):
    """Generate the candidate pair list for one dataset."""
    config = _load_config(config_path, backend=backend, rotations=rotations,
                          match_gate=match_gate, min_pairs=min_pairs,
                          exhaustive_threshold=exhaustive_threshold)
    manifest = _read_manifest(manifest_path)
    provider = (_external_provider(rmdf) if config.backend == "external"
                else _builtin_provider(jobs or os.cpu_count() or 1))
    try:
        pairs = pairing.adaptive_pairs(manifest, provider, config)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    pairing.write_pairs(pairs, out_path)
    click.echo(f"{len(pairs)} pairs")


@main.command("extract")
@click.argument("manifest_path", type=str)
@_with_config_opts
@click.option("--out", "out_path", required=True, type=str)
@click.option("--rmkp", type=str, default=None)
@click.option("--jobs", type=int, default=None)
def cmd_extract(manifest_path, config_path, backend, rotations, match_gate,
                min_pairs, exhaustive_threshold, out_path, rmkp, jobs):
    """Extract rotation-augmented local features for one dataset."""
    config = _load_config(config_path, backend=backend, rotations=rotations,
                          match_gate=match_gate, min_pairs=min_pairs,
                          exhaustive_threshold=exhaustive_threshold)
    manifest = _read_manifest(manifest_path)
    try:
        feature_sets = _extract_all(manifest, config, jobs or os.cpu_count() or 1, rmkp)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    local_features.write_features(feature_sets, out_path)
    click.echo(f"{sum(len(fs) for fs in feature_sets)} keypoints")


@main.command("match")
@click.argument("manifest_path", type=str)
@_with_config_opts
@click.option("--pairs", "pairs_path", required=True, type=str)
@click.option("--features", "features_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str)
@click.option("--jobs", type=int, default=None)
def cmd_match(manifest_path, config_path, backend, rotations, match_gate,
              min_pairs, exhaustive_threshold, pairs_path, features_path,
              out_path, jobs):
    """Match the listed candidate pairs from a feature file."""
    config = _load_config(config_path, backend=backend, rotations=rotations,
                          match_gate=match_gate, min_pairs=min_pairs,
                          exhaustive_threshold=exhaustive_threshold)
    manifest = _read_manifest(manifest_path)
    try:
        pairs = pairing.read_pairs(pairs_path)
        feature_sets = local_features.load_external_features(
            features_path, image_sizes=_image_sizes(manifest))
        results = _match_results(manifest, pairs, feature_sets, config,
                                 jobs or os.cpu_count() or 1)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    matching.write_matches(results, out_path)
    click.echo(f"{sum(1 for r in results if r.kept)}/{len(results)} pairs kept")


@main.command("cluster")
@click.argument("manifest_path", type=str)
@click.option("--matches", "matches_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str)
def cmd_cluster(manifest_path, matches_path, out_path):
    """Cluster images by connected components over kept pairs."""
    manifest = _read_manifest(manifest_path)
    try:
        results = matching.read_matches(matches_path)
        clustering = scene_graph.build_clusters(manifest.ids(), results)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    scene_graph.write_clustering(clustering, out_path)
    click.echo(f"{len(clustering.clusters)} clusters, "
               f"{len(clustering.outliers)} outliers")


@main.command("evaluate")
@click.option("--gt", "gt_paths", multiple=True, required=True, type=str)
@click.option("--pred", "pred_paths", multiple=True, required=True, type=str)
@click.option("--out", "out_path", type=str, default=None,
              help="Where to write metrics.json.")
def cmd_evaluate(gt_paths, pred_paths, out_path):
    """Score predicted clusterings against ground truth."""
    if len(gt_paths) != len(pred_paths):
        raise click.UsageError("--gt and --pred must be given the same number of times")
    datasets = []
    ids = []
    for gt_path, pred_path in zip(gt_paths, pred_paths):
        try:
            gt = scene_graph.read_clustering(gt_path)
            pred = scene_graph.read_clustering(pred_path)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"cannot read clustering: {exc}")
        gt_only = sorted(gt.universe() - pred.universe())
        pred_only = sorted(pred.universe() - gt.universe())
        if gt_only or pred_only:
            raise click.ClickException(
                f"image universes differ for {gt_path} vs {pred_path}: "
                f"gt-only={gt_only} pred-only={pred_only}")
        datasets.append((gt, pred))
        ids.append(Path(gt_path).parent.name or Path(gt_path).stem)
    try:
        reports, aggregate = evaluation.evaluate_datasets(datasets)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    if out_path:
        evaluation.write_metrics(ids, reports, aggregate, out_path)
    click.echo(f"maa={aggregate.maa:.4f} cl={aggregate.cl:.4f} "
               f"score={aggregate.score:.4f}")


@main.command("synth")
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--seed", type=int, default=0)
@click.option("--scenes", type=int, default=3)
@click.option("--views", "views_per_scene", type=int, default=8)
@click.option("--outliers", type=int, default=4)
@click.option("--base-size", type=int, default=256)
@click.option("--crop-fraction", type=float, default=0.85)
@click.option("--brightness-jitter", type=int, default=10)
def cmd_synth(out_dir, seed, scenes, views_per_scene, outliers, base_size,
              crop_fraction, brightness_jitter):
    """Generate a deterministic synthetic dataset with ground truth."""
    config = SynthConfig(seed=seed, scenes=scenes, views_per_scene=views_per_scene,
                         outliers=outliers, base_size=base_size,
                         crop_fraction=crop_fraction,
                         brightness_jitter=brightness_jitter)
    manifest, gt = generate_dataset(config, out_dir)
    click.echo(f"{len(manifest.images)} images, {len(gt.clusters)} scenes, "
               f"{len(gt.outliers)} outliers")


@main.command("viz")
@click.option("--matches", "matches_path", required=True, type=str)
@click.option("--manifest", "manifest_path", required=True, type=str)
@click.option("--pair", "pair_spec", required=True, type=str,
              help="Two image ids as A,B.")
@click.option("--out", "out_path", required=True, type=str)
@click.option("--match-gate", type=int, default=25)
def cmd_viz(matches_path, manifest_path, pair_spec, out_path, match_gate):
    """Render one pair's correspondences as an SVG."""
    parts = [p.strip() for p in pair_spec.split(",")]
    if len(parts) != 2:
        raise click.UsageError("--pair expects two comma-separated image ids")
    manifest = _read_manifest(manifest_path)
    try:
        results = matching.read_matches(matches_path)
        result = find_result(results, parts[0], parts[1])
        render_pair_svg(result, manifest, match_gate, out_path)
    except RotateMatchError as exc:
        raise click.ClickException(str(exc))
    click.echo(out_path)


if __name__ == "__main__":
    sys.exit(main())
