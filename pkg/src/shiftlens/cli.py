"""Command line pipeline: augment a directory, analyze, cluster, report.

Subcommands:

- ``shiftlens augment``: apply the nine augmentations to every image under
  a directory and write lossless PNGs plus a run manifest.
- ``shiftlens analyze``: compute all defined metrics for every
  (image, augmentation) pair in a manifest and write a JSON report plus a
  per-record CSV.
- ``shiftlens cluster``: cut the report's augmentation dendrogram at a
  threshold and write its layout.
- ``shiftlens report``: emit CSV tables, radar JSON, and SVG plots.

Exit codes: 0 success, 1 usage error, 2 data error. All outputs are
byte-deterministic for a fixed configuration, regardless of worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np
from PIL import Image

from . import _svg
from .augment import (
    AUGMENTATION_NAMES,
    Augmentation,
    augment_image_set,
    rng_for,
)
from .errors import (
    DecodeError,
    NoImagesFound,
    ShiftLensError,
    TooFewObservations,
)
from .imagecore import extract_patch_grid, to_grayscale, u8_to_float
from .metrics import (
    Bundle,
    MetricRecord,
    compute_record,
    cosine_similarity,
    l2_distance,
)
from .stats import (
    aggregate_records,
    augmentation_feature_vectors,
    average_linkage,
    default_kde_grid,
    flat_clusters,
    kde_gaussian,
    pairwise_distances,
)
from .errors import DegenerateSamples, MissingAugmentationData
from .tensorio import (
    ImageEntry,
    RunManifest,
    TensorRefs,
    load_manifest,
    read_tensor,
    save_manifest,
)

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}
MIN_IMAGE_SIZE = 32
METRIC_FIELDS = MetricRecord.METRIC_FIELDS


# --- shared helpers ------------------------------------------------------------


def load_image_u8(path: str | Path) -> np.ndarray:
    """Decode an image file to an (h, w, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def save_png(path: str | Path, img: np.ndarray) -> None:
    Image.fromarray(img, mode="RGB").save(path, format="PNG")


def _image_key(rel: Path) -> str:
    text = rel.as_posix()
    if rel.suffix:
        text = text[: -len(rel.suffix)]
    return text.replace("/", "__")


def collect_images(input_dir: Path) -> list[tuple[Path, str]]:
    """Recursively collect .jpg/.jpeg/.png files, sorted, with unique keys."""
    paths = sorted(
        p
        for p in input_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not paths:
        raise NoImagesFound(f"no .jpg/.jpeg/.png files under {input_dir}")
    counts: dict[str, int] = {}
    out = []
    for p in paths:
        key = _image_key(p.relative_to(input_dir))
        counts[key] = counts.get(key, 0) + 1
        if counts[key] > 1:
            key = f"{key}_{counts[key]}"
        out.append((p, key))
    return out


def seeded_choice(items: list, count: int, seed: int, label: str) -> list:
    """Pick count items deterministically, preserving input order."""
    if count >= len(items):
        return list(items)
    gen = rng_for(seed, label)
    idx = gen.permutation(len(items))[:count]
    return [items[i] for i in sorted(idx)]


def ordered_augmentations(names) -> list[str]:
    """Canonical augmentation order first, unknown names after, sorted."""
    names = set(names)
    out = [n for n in AUGMENTATION_NAMES if n in names]
    out.extend(sorted(names - set(AUGMENTATION_NAMES)))
    return out


def synthetic_embedding(img: np.ndarray) -> np.ndarray:
    """Self-contained 64-dim embedding: 8x8 box-averaged grayscale, unit norm.

    A stand-in provider so the pipeline runs without any encoder; it is not
    a learned representation. Constant-black images map to the uniform unit
    vector instead of dividing by zero.
    """
    gray = to_grayscale(u8_to_float(img))
    cells = extract_patch_grid(gray, 8).patches.mean(axis=(1, 2))
    norm = float(np.sqrt(np.sum(cells * cells)))
    if norm == 0.0:
        return np.full(64, 1.0 / 8.0)
    return cells / norm


# --- augment -------------------------------------------------------------------


def _augment_task(task: tuple) -> dict:
    src, key, global_seed, size, out_dir, aug_names = task
    try:
        img = load_image_u8(src)
        results = augment_image_set(
            img,
            global_seed,
            key,
            (size, size),
            tuple(Augmentation(n) for n in aug_names),
        )
    except ShiftLensError as exc:
        return {"image_key": key, "error": str(exc)}
    files = {}
    for name, arr in results.items():
        rel = f"{name}/{key}.png"
        save_png(Path(out_dir) / rel, arr)
        files[name] = rel
    return {"image_key": key, "files": files}


def cmd_augment(
    input_dir: Path,
    output_dir: Path,
    seed: int,
    size: int = 224,
    workers: int = 1,
    aug_names: list[str] | None = None,
) -> Path:
    """Augment every image under input_dir; write PNGs and the manifest."""
    aug_names = list(aug_names or AUGMENTATION_NAMES)
    images = collect_images(input_dir)
    print(f"dataset size: {len(images)}")

    output_dir.mkdir(parents=True, exist_ok=True)
    for name in ["original", *aug_names]:
        (output_dir / name).mkdir(exist_ok=True)

    tasks = [(str(p), key, seed, size, str(output_dir), aug_names) for p, key in images]
    if workers <= 1:
        results = [_augment_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_augment_task, tasks))

    entries = []
    failures = 0
    for res in results:
        if "error" in res:
            failures += 1
            print(f"warning: skipping {res['image_key']}: {res['error']}", file=sys.stderr)
            continue
        files = res["files"]
        entries.append(
            ImageEntry(
                image_key=res["image_key"],
                original=TensorRefs(image_path=files["original"]),
                augmentations={n: TensorRefs(image_path=files[n]) for n in aug_names},
            )
        )
    if not entries:
        raise DecodeError("every input image failed to decode")

    manifest = RunManifest(
        schema_version=1, global_seed=seed, images=entries, base_dir=output_dir
    )
    manifest_path = output_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    print(f"wrote {len(entries)} image entries ({failures} skipped) to {manifest_path}")
    return manifest_path


# --- analyze -------------------------------------------------------------------


def _load_bundle(refs: dict, embedder: str) -> Bundle:
    img = load_image_u8(refs["image_path"])
    embedding = None
    attention = None
    if embedder == "synthetic":
        embedding = synthetic_embedding(img)
    elif refs.get("embedding_path"):
        embedding, _ = read_tensor(refs["embedding_path"])
    if refs.get("attention_path"):
        attention, _ = read_tensor(refs["attention_path"])
    return Bundle(image=img, embedding=embedding, attention=attention)


def _analyze_task(task: dict) -> tuple[list[dict], list[dict]]:
    key = task["image_key"]
    records: list[dict] = []
    failures: list[dict] = []
    try:
        original = _load_bundle(task["original"], task["embedder"])
    except ShiftLensError as exc:
        failures.append({"image_key": key, "augmentation": None, "error": str(exc)})
        for name in sorted(task["augmentations"]):
            records.append(asdict(MetricRecord(image_key=key, augmentation=name)))
        return records, failures

    for name in sorted(task["augmentations"]):
        try:
            bundle = _load_bundle(task["augmentations"][name], task["embedder"])
            if task["custom_metrics"]:
                record = compute_record(key, name, original, bundle, task["grid"])
            else:
                record = MetricRecord(image_key=key, augmentation=name)
                if original.embedding is not None and bundle.embedding is not None:
                    record.cosine_sim = cosine_similarity(original.embedding, bundle.embedding)
                    record.l2_dist = l2_distance(original.embedding, bundle.embedding)
        except ShiftLensError as exc:
            failures.append({"image_key": key, "augmentation": name, "error": str(exc)})
            record = MetricRecord(image_key=key, augmentation=name)
        records.append(asdict(record))
    return records, failures


def _refs_abs(manifest: RunManifest, refs: TensorRefs) -> dict:
    return {
        "image_path": str(manifest.resolve(refs.image_path)),
        "embedding_path": (
            str(manifest.resolve(refs.embedding_path)) if refs.embedding_path else None
        ),
        "attention_path": (
            str(manifest.resolve(refs.attention_path)) if refs.attention_path else None
        ),
    }


def _kde_entry(values: list[float]) -> dict | None:
    if not values:
        return None
    try:
        grid = default_kde_grid(np.array(values))
        est = kde_gaussian(np.array(values), grid)
    except DegenerateSamples:
        return {"degenerate_at": values[0], "count": len(values)}
    return {
        "bandwidth": est.bandwidth,
        "grid": [float(x) for x in est.grid],
        "density": [float(y) for y in est.density],
    }


def cmd_analyze(
    manifest_path: Path,
    out_path: Path,
    metrics_subsample: int | None = None,
    embedder: str = "manifest",
    workers: int = 1,
    grid: int = 4,
) -> Path:
    """Compute metric records and statistics for a manifest; write the report."""
    manifest = load_manifest(manifest_path, check_files=True)
    entries = sorted(manifest.images, key=lambda e: e.image_key)
    keys = [e.image_key for e in entries]

    custom_keys = set(keys)
    if metrics_subsample is not None and metrics_subsample < len(keys):
        custom_keys = set(
            seeded_choice(keys, metrics_subsample, manifest.global_seed, "metrics-subsample")
        )

    tasks = [
        {
            "image_key": e.image_key,
            "original": _refs_abs(manifest, e.original),
            "augmentations": {
                name: _refs_abs(manifest, refs) for name, refs in e.augmentations.items()
            },
            "embedder": embedder,
            "custom_metrics": e.image_key in custom_keys,
            "grid": grid,
        }
        for e in entries
    ]
    if workers <= 1:
        outputs = [_analyze_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_analyze_task, tasks))

    aug_order = ordered_augmentations(manifest.augmentation_names)
    order_index = {name: i for i, name in enumerate(aug_order)}
    records = [r for recs, _ in outputs for r in recs]
    records.sort(key=lambda r: (r["image_key"], order_index.get(r["augmentation"], 99)))
    failures = [f for _, fails in outputs for f in fails]

    record_objs = [MetricRecord(**r) for r in records]
    aggregates = aggregate_records(record_objs)

    def values_for(aug: str, field: str) -> list[float]:
        return [
            r[field]
            for r in records
            if r["augmentation"] == aug and r[field] is not None
        ]

    kde_l2 = {aug: _kde_entry(values_for(aug, "l2_dist")) for aug in aug_order}
    cosine_distributions = {aug: values_for(aug, "cosine_sim") for aug in aug_order}
    kde_cosine = {aug: _kde_entry(cosine_distributions[aug]) for aug in aug_order}

    clustering = None
    clustering_note = None
    try:
        augs, feat_keys, matrix = augmentation_feature_vectors(record_objs)
        if len(augs) < 2:
            raise TooFewObservations("need at least two augmentations to cluster")
        linkage = average_linkage(pairwise_distances(matrix, "euclidean"))
        clustering = {
            "augmentations": augs,
            "image_keys": feat_keys,
            "linkage": [
                [int(a), int(b), float(d), int(s)] for a, b, d, s in linkage
            ],
        }
    except (MissingAugmentationData, TooFewObservations) as exc:
        clustering_note = str(exc)

    heatmap_rows = [
        {
            "augmentation": aug,
            "values": {m: aggregates.normalized[aug][m] for m in METRIC_FIELDS},
            "average_performance": aggregates.average_performance[aug],
        }
        for aug in aggregates.ranking
    ]

    report = {
        "schema_version": 1,
        "global_seed": manifest.global_seed,
        "embedder": embedder,
        "metrics_subsample": metrics_subsample,
        "augmentations": aug_order,
        "image_keys": keys,
        "custom_metric_keys": sorted(custom_keys),
        "records": records,
        "failures": failures,
        "aggregates": {
            "metrics": list(METRIC_FIELDS),
            "means": aggregates.means,
            "normalized": aggregates.normalized,
            "average_performance": aggregates.average_performance,
            "ranking": aggregates.ranking,
        },
        "kde_l2": kde_l2,
        "kde_cosine": kde_cosine,
        "cosine_distributions": cosine_distributions,
        "clustering": clustering,
        "clustering_note": clustering_note,
        "heatmap": {"metrics": list(METRIC_FIELDS), "rows": heatmap_rows},
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    csv_path = out_path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_key", "augmentation", *METRIC_FIELDS])
        for r in records:
            writer.writerow(
                [r["image_key"], r["augmentation"]]
                + ["" if r[m] is None else repr(r[m]) for m in METRIC_FIELDS]
            )
    print(f"analyzed {len(keys)} images x {len(aug_order)} augmentations -> {out_path}")
    if failures:
        print(f"warning: {len(failures)} record(s) failed; see the report's failure log", file=sys.stderr)
    return out_path


# --- cluster -------------------------------------------------------------------


def dendrogram_layout(linkage: np.ndarray, labels: list[str]) -> dict:
    """Leaf order and merge coordinates, enough to draw the dendrogram."""
    n = len(labels)
    children = {n + i: (int(row[0]), int(row[1])) for i, row in enumerate(linkage)}
    heights = {i: 0.0 for i in range(n)}
    for i, row in enumerate(linkage):
        heights[n + i] = float(row[2])

    order: list[int] = []

    def walk(node: int) -> None:
        if node < n:
            order.append(node)
            return
        a, b = children[node]
        walk(a)
        walk(b)

    walk(2 * n - 2 if n > 1 else 0)
    x = {leaf: float(pos) for pos, leaf in enumerate(order)}
    merges = []
    for i, row in enumerate(linkage):
        a, b = int(row[0]), int(row[1])
        xm = (x[a] + x[b]) / 2.0
        merges.append(
            {
                "children": [a, b],
                "height": float(row[2]),
                "x_left": x[a],
                "x_right": x[b],
                "x": xm,
                "height_left": heights[a],
                "height_right": heights[b],
            }
        )
        x[n + i] = xm
    return {
        "leaf_order": order,
        "labels": [labels[i] for i in order],
        "merges": merges,
    }


def _load_report(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ShiftLensError(f"cannot read report {path}: {exc}") from exc


def _report_linkage(report: dict) -> tuple[np.ndarray, list[str]]:
    clustering = report.get("clustering")
    if not clustering:
        note = report.get("clustering_note") or "report carries no clustering section"
        raise TooFewObservations(note)
    return np.array(clustering["linkage"], dtype=np.float64), clustering["augmentations"]


def cmd_cluster(report_path: Path, threshold: float, out_path: Path | None = None) -> Path:
    """Cut the augmentation dendrogram at a threshold; write its layout."""
    report = _load_report(report_path)
    linkage, names = _report_linkage(report)
    labels = flat_clusters(linkage, threshold)

    groups: dict[int, list[str]] = {}
    for name, label in zip(names, labels):
        groups.setdefault(int(label), []).append(name)
    print(f"flat clusters at threshold {threshold}:")
    for label in sorted(groups):
        print(f"  cluster {label}: {', '.join(groups[label])}")

    layout = dendrogram_layout(linkage, names)
    layout["threshold"] = threshold
    layout["flat_labels"] = {name: int(label) for name, label in zip(names, labels)}
    out_path = out_path or report_path.with_suffix(".dendrogram.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(layout, fh, indent=2)
        fh.write("\n")
    print(f"wrote dendrogram layout to {out_path}")
    return out_path


# --- report --------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def cmd_report(
    report_path: Path,
    formats: list[str],
    out_dir: Path,
    sample_count: int = 50,
) -> list[Path]:
    """Emit CSV tables, radar JSON, and SVG plots from an analysis report."""
    report = _load_report(report_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    aggregates = report["aggregates"]
    ranking = aggregates["ranking"]
    metrics = aggregates["metrics"]

    def emit(name: str, content: str) -> None:
        path = out_dir / name
        path.write_text(content, encoding="utf-8")
        written.append(path)

    if "csv" in formats:
        path = out_dir / "aggregates.csv"
        _write_csv(
            path,
            ["augmentation", *[f"mean_{m}" for m in metrics], "average_performance"],
            [
                [aug]
                + [aggregates["means"][aug][m] for m in metrics]
                + [aggregates["average_performance"][aug]]
                for aug in ranking
            ],
        )
        written.append(path)

        path = out_dir / "ranking.csv"
        _write_csv(
            path,
            ["rank", "augmentation", "average_performance"],
            [
                [i + 1, aug, aggregates["average_performance"][aug]]
                for i, aug in enumerate(ranking)
            ],
        )
        written.append(path)

        path = out_dir / "heatmap.csv"
        _write_csv(
            path,
            ["augmentation", *metrics, "average_performance"],
            [
                [row["augmentation"]]
                + [row["values"][m] for m in metrics]
                + [row["average_performance"]]
                for row in report["heatmap"]["rows"]
            ],
        )
        written.append(path)

        path = out_dir / "kde_l2.csv"
        rows = []
        for aug in report["augmentations"]:
            entry = report["kde_l2"].get(aug)
            if entry and "grid" in entry:
                rows.extend([aug, x, y] for x, y in zip(entry["grid"], entry["density"]))
        _write_csv(path, ["augmentation", "x", "density"], rows)
        written.append(path)

        # per-sample cosine heatmap over a deterministic image sample
        cosines: dict[tuple[str, str], float] = {
            (r["image_key"], r["augmentation"]): r["cosine_sim"]
            for r in report["records"]
            if r["cosine_sim"] is not None
        }
        augs = report["augmentations"]
        eligible = [
            k for k in report["image_keys"] if all((k, a) in cosines for a in augs)
        ]
        chosen = seeded_choice(
            eligible, min(sample_count, len(eligible)), report["global_seed"], "sample-heatmap"
        )
        path = out_dir / "cosine_sample_heatmap.csv"
        _write_csv(
            path,
            ["image_key", *augs],
            [[k] + [cosines[(k, a)] for a in augs] for k in chosen],
        )
        written.append(path)

    if "json" in formats:
        radar = {
            "metrics": metrics,
            "axes": {
                aug: {m: aggregates["normalized"][aug][m] for m in metrics}
                for aug in ranking
            },
            "average_performance": aggregates["average_performance"],
        }
        emit("radar.json", json.dumps(radar, indent=2) + "\n")

    if "svg" in formats:
        emit(
            "heatmap.svg",
            _svg.render_heatmap(
                [row["augmentation"] for row in report["heatmap"]["rows"]],
                metrics + ["average_performance"],
                [
                    [row["values"][m] for m in metrics] + [row["average_performance"]]
                    for row in report["heatmap"]["rows"]
                ],
                "Augmentation performance (normalized, sorted)",
            ),
        )
        for name, key, x_label in (
            ("kde_l2.svg", "kde_l2", "L2 distance"),
            ("kde_cosine.svg", "kde_cosine", "cosine similarity"),
        ):
            curves = {
                aug: (entry["grid"], entry["density"])
                for aug in report["augmentations"]
                for entry in [report[key].get(aug)]
                if entry and "grid" in entry
            }
            emit(name, _svg.render_curves(curves, f"Density of {x_label} per augmentation", x_label))
        try:
            linkage, names = _report_linkage(report)
            layout = dendrogram_layout(linkage, names)
            emit(
                "dendrogram.svg",
                _svg.render_dendrogram(layout, "Augmentation clustering (average linkage)"),
            )
        except TooFewObservations:
            pass

    for path in written:
        print(f"wrote {path}")
    return written


# --- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; exit code 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shiftlens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("augment", help="augment a directory of images")
    p.add_argument("--input-dir", required=True, type=Path)
    p.add_argument("--output-dir", required=True, type=Path)
    p.add_argument("--seed", required=True, type=int, help="global seed (mandatory)")
    p.add_argument("--size", type=int, default=224, help="square resize target (min 32)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--augmentations",
        default=None,
        help="comma-separated subset of augmentation names (default: all nine)",
    )

    p = sub.add_parser("analyze", help="compute metrics and statistics for a manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="report JSON path")
    p.add_argument(
        "--metrics-subsample",
        type=int,
        default=None,
        help="compute pixel/attention metrics on a seeded subsample of this size",
    )
    p.add_argument("--embedder", choices=("manifest", "synthetic"), default="manifest")
    p.add_argument("--grid", type=int, default=4, help="patch grid size")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("cluster", help="flat clusters and dendrogram layout")
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--threshold", required=True, type=float)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("report", help="emit tables and plots from a report")
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--formats", default="csv,json,svg")
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--sample-count", type=int, default=50)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "augment":
            if args.size < MIN_IMAGE_SIZE:
                parser.error(f"--size must be at least {MIN_IMAGE_SIZE}")
            aug_names = None
            if args.augmentations:
                aug_names = [n.strip() for n in args.augmentations.split(",") if n.strip()]
                unknown = [n for n in aug_names if n not in AUGMENTATION_NAMES]
                if unknown:
                    parser.error(f"unknown augmentations: {', '.join(unknown)}")
            cmd_augment(
                args.input_dir, args.output_dir, args.seed, args.size, args.workers, aug_names
            )
        elif args.command == "analyze":
            if args.grid < 1:
                parser.error("--grid must be at least 1")
            if args.metrics_subsample is not None and args.metrics_subsample < 0:
                parser.error("--metrics-subsample must be nonnegative")
            cmd_analyze(
                args.manifest,
                args.out,
                args.metrics_subsample,
                args.embedder,
                args.workers,
                args.grid,
            )
        elif args.command == "cluster":
            cmd_cluster(args.report, args.threshold, args.out)
        elif args.command == "report":
            formats = [f.strip() for f in args.formats.split(",") if f.strip()]
            unknown = [f for f in formats if f not in ("csv", "json", "svg")]
            if unknown:
                parser.error(f"unknown formats: {', '.join(unknown)}")
            cmd_report(args.report, formats, args.out_dir, args.sample_count)
    except ShiftLensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
