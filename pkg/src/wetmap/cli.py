"""Batch pipeline driver: composite -> features -> segment -> train/classify
-> assess, plus compare/render/synth utilities. One JSON config document
parameterizes every stage; individual flags override single fields.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .geotiff import read_geotiff, write_geotiff
from .models import (ALGORITHMS, classify_segments, load_model, model_predict,
                     save_model, train_model)
from .preprocess import (FeatureImage, NDWI_CONVENTIONS, build_feature_image,
                         median_composite)
from .raster import (BoundsPolygon, DatedRaster, ImageStack, SENTINEL2_ROLES,
                     BandRole, clip_to_bounds, filter_by_date)
from .render import render_class_map
from .sampling import (ClassScheme, SampleTable, build_sample_table,
                       load_points, stratified_split)
from .scenegen import SceneSpec, generate_scene
from .snic import (SnicParams, compute_segment_stats, read_segment_map,
                   snic_segment, write_segment_map, write_segment_stats_csv)
from .dataset import Dataset


class ConfigError(Exception):
    """Bad or missing configuration; maps to exit code 2."""


@dataclass
class PipelineConfig:
    stack: list[tuple[Path, dt.date]]
    output_dir: Path
    classes: ClassScheme
    bounds_path: Path | None = None
    date_start: dt.date | None = None
    date_end: dt.date | None = None
    band_roles: dict = field(default_factory=lambda: dict(SENTINEL2_ROLES))
    ndwi_convention: str = "nir_minus_green"
    snic: SnicParams = field(default_factory=SnicParams)
    classifier: str = "rf"
    classifier_params: dict = field(default_factory=dict)
    points_path: Path | None = None
    train_points_path: Path | None = None
    validation_points_path: Path | None = None
    train_fraction: float = 0.7
    split_seed: int = 0


def _require(doc: dict, key: str):
    if key not in doc:
        raise ConfigError(f"config is missing required field {key!r}")
    return doc[key]


def _parse_date(text, where) -> dt.date:
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad date {text!r} ({exc})") from None


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    base = path.parent
    overrides = overrides or {}

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    stack_doc = doc.get("stack")
    if stack_doc is None and "stack_manifest" in doc:
        manifest_path = resolve(doc["stack_manifest"])
        try:
            stack_doc = json.loads(manifest_path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"stack manifest not found: {manifest_path}") from None
        base_for_stack = manifest_path.parent
    else:
        base_for_stack = base
    if not stack_doc:
        raise ConfigError("config needs a non-empty 'stack' (or 'stack_manifest')")
    stack = []
    for i, entry in enumerate(stack_doc):
        if not entry.get("path"):
            raise ConfigError(f"stack[{i}] is missing 'path'")
        p = Path(entry["path"])
        stack.append((p if p.is_absolute() else base_for_stack / p,
                      _parse_date(_require(entry, "date"), f"stack[{i}]")))

    classes = _require(doc, "classes")
    try:
        scheme = ClassScheme(classes)
    except ValueError as exc:
        raise ConfigError(f"bad class scheme: {exc}") from None

    window = doc.get("date_window") or {}
    start = _parse_date(window["start"], "date_window") if "start" in window else None
    end = _parse_date(window["end"], "date_window") if "end" in window else None

    roles = dict(SENTINEL2_ROLES)
    for role, band in (doc.get("band_roles") or {}).items():
        if role not in roles:
            raise ConfigError(f"unknown band role {role!r}")
        roles[role] = BandRole(role, str(band), roles[role].center_wavelength_nm)

    snic_doc = doc.get("snic") or {}
    split_doc = doc.get("split") or {}

    cfg = PipelineConfig(
        stack=stack,
        output_dir=resolve(_require(doc, "output_dir")),
        classes=scheme,
        bounds_path=resolve(doc["bounds"]) if doc.get("bounds") else None,
        date_start=start,
        date_end=end,
        band_roles=roles,
        ndwi_convention=doc.get("ndwi_convention", "nir_minus_green"),
        classifier=doc.get("classifier", "rf"),
        classifier_params=dict(doc.get("classifier_params") or {}),
        points_path=resolve(doc["points"]) if doc.get("points") else None,
        train_points_path=(resolve(doc["train_points"])
                           if doc.get("train_points") else None),
        validation_points_path=(resolve(doc["validation_points"])
                                if doc.get("validation_points") else None),
        train_fraction=float(split_doc.get("train_fraction", 0.7)),
        split_seed=int(split_doc.get("seed", 0)),
    )

    for key, value in overrides.items():
        if value is None:
            continue
        if key == "output_dir":
            cfg.output_dir = Path(value)
        elif key == "classifier":
            cfg.classifier = value
        elif key == "seed":
            cfg.split_seed = int(value)
        elif key == "train_fraction":
            cfg.train_fraction = float(value)
        elif key == "seed_spacing":
            snic_doc["seed_spacing"] = int(value)
        elif key == "compactness":
            snic_doc["compactness"] = float(value)
        elif key == "ndwi_convention":
            cfg.ndwi_convention = value
        elif key == "start":
            cfg.date_start = _parse_date(value, "--start")
        elif key == "end":
            cfg.date_end = _parse_date(value, "--end")

    try:
        cfg.snic = SnicParams(int(snic_doc.get("seed_spacing", 5)),
                              float(snic_doc.get("compactness", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"bad snic parameters: {exc}") from None
    if cfg.ndwi_convention not in NDWI_CONVENTIONS:
        raise ConfigError(f"ndwi_convention must be one of {NDWI_CONVENTIONS}")
    if cfg.classifier not in ALGORITHMS:
        raise ConfigError(f"classifier must be one of {ALGORITHMS}")
    if not 0.0 < cfg.train_fraction < 1.0:
        raise ConfigError("split.train_fraction must be in (0, 1)")
    return cfg


# ---------------------------------------------------------------------------
# stages

def _out(cfg: PipelineConfig, name: str) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir / name


def cmd_composite(cfg: PipelineConfig) -> Path:
    items = [DatedRaster(read_geotiff(p), d) for p, d in cfg.stack]
    stack = ImageStack(items)
    if cfg.date_start is not None or cfg.date_end is not None:
        start = cfg.date_start or dt.date.min
        end = cfg.date_end or dt.date.max
        stack = filter_by_date(stack, start, end)
    if len(stack) == 0:
        raise ValueError("no images remain inside the date window")
    if cfg.bounds_path is not None:
        bounds = _load_bounds(cfg.bounds_path)
        stack = ImageStack([DatedRaster(clip_to_bounds(it.raster, bounds), it.date)
                            for it in stack.items])
    composite = median_composite(stack)
    out = _out(cfg, "composite.tif")
    write_geotiff(composite, out)
    provenance = {
        "input_count": len(stack),
        "dates": [it.date.isoformat() for it in stack.items],
        "date_window": {
            "start": cfg.date_start.isoformat() if cfg.date_start else None,
            "end": cfg.date_end.isoformat() if cfg.date_end else None,
        },
    }
    with open(_out(cfg, "provenance.json"), "w") as fh:
        json.dump(provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _load_bounds(path: Path) -> BoundsPolygon:
    doc = json.loads(Path(path).read_text())
    if doc.get("type") == "Feature":
        doc = doc.get("geometry") or {}
    return BoundsPolygon.from_geojson(doc)


def cmd_features(cfg: PipelineConfig) -> Path:
    composite = read_geotiff(_out(cfg, "composite.tif"))
    feature = build_feature_image(composite, cfg.band_roles,
                                  cfg.ndwi_convention)
    out = _out(cfg, "features.tif")
    write_geotiff(feature.raster, out)
    return out


def cmd_segment(cfg: PipelineConfig) -> Path:
    feature = FeatureImage(read_geotiff(_out(cfg, "features.tif")))
    segmap = snic_segment(feature, cfg.snic)
    stats = compute_segment_stats(feature, segmap)
    out = _out(cfg, "segments.tif")
    write_segment_map(segmap, out)
    write_segment_stats_csv(stats, _out(cfg, "segment_stats.csv"))
    return out


def _segmentation(cfg: PipelineConfig):
    feature = FeatureImage(read_geotiff(_out(cfg, "features.tif")))
    segmap = read_segment_map(_out(cfg, "segments.tif"))
    stats = compute_segment_stats(feature, segmap)
    return feature, segmap, stats


def _build_tables(cfg: PipelineConfig, segmap, stats) -> SampleTable:
    if cfg.train_points_path and cfg.validation_points_path:
        train_pts = load_points(cfg.train_points_path, cfg.classes)
        val_pts = load_points(cfg.validation_points_path, cfg.classes)
    else:
        if cfg.points_path is None:
            raise ValueError("config provides neither 'points' nor pre-split "
                             "'train_points'/'validation_points'")
        points = load_points(cfg.points_path, cfg.classes)
        train_pts, val_pts = stratified_split(points, cfg.train_fraction,
                                              cfg.split_seed)
    table = build_sample_table(train_pts, segmap, stats, role="train")
    table.extend(build_sample_table(val_pts, segmap, stats,
                                    role="validation").rows)
    return table


def _train_dataset(table: SampleTable, scheme: ClassScheme) -> Dataset:
    return Dataset(table.feature_matrix("train"), table.labels("train"),
                   class_count=len(scheme))


def cmd_train_classify(cfg: PipelineConfig) -> Path:
    _, segmap, stats = _segmentation(cfg)
    table = _build_tables(cfg, segmap, stats)
    table.to_csv(_out(cfg, "samples.csv"))
    model = train_model(cfg.classifier, _train_dataset(table, cfg.classes),
                        cfg.classifier_params)
    save_model(model, _out(cfg, f"model_{cfg.classifier}.json"))
    class_raster = classify_segments(model, stats, segmap)
    out = _out(cfg, f"classes_{cfg.classifier}.tif")
    write_geotiff(class_raster, out)
    return out


def cmd_assess(cfg: PipelineConfig) -> Path:
    algo = cfg.classifier
    model = load_model(_out(cfg, f"model_{algo}.json"))
    feature, _, _ = _segmentation(cfg)
    table = SampleTable.from_csv(_out(cfg, "samples.csv"),
                                 feature.raster.band_names)
    val_rows = table.rows_for("validation")
    if not val_rows:
        raise ValueError("sample table has no validation rows")
    reference = np.array([r.class_id for r in val_rows])
    predicted = np.array([model_predict(model, r.features) for r in val_rows])
    cm = metrics.confusion_matrix(reference, predicted, len(cfg.classes))

    class_raster = read_geotiff(_out(cfg, f"classes_{algo}.tif"))
    areas = metrics.class_areas(class_raster,
                                class_ids=[cid for cid, _ in cfg.classes])
    separability = metrics.separability_report(table, cfg.classes)

    metrics.write_assessment_csv(cm, cfg.classes, _out(cfg, f"assessment_{algo}.csv"))
    separability.to_csv(_out(cfg, f"separability_{algo}.csv"))
    doc = metrics.assessment_doc(cm, cfg.classes, areas, separability)
    out = _out(cfg, f"assessment_{algo}.json")
    metrics.write_assessment_json(doc, out)
    return out


def cmd_compare(cfg: PipelineConfig) -> Path:
    _, segmap, stats = _segmentation(cfg)
    table = _build_tables(cfg, segmap, stats)
    data = _train_dataset(table, cfg.classes)
    val_rows = table.rows_for("validation")
    if not val_rows:
        raise ValueError("sample table has no validation rows")
    reference = np.array([r.class_id for r in val_rows])

    results = []
    for algo in ALGORITHMS:
        model = train_model(algo, data, cfg.classifier_params
                            if algo == cfg.classifier else None)
        predicted = np.array([model_predict(model, r.features)
                              for r in val_rows])
        cm = metrics.confusion_matrix(reference, predicted, len(cfg.classes))
        results.append((algo, cm))

    out = _out(cfg, "comparison.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["algorithm", "overall_accuracy"]
        for _, name in cfg.classes:
            header += [f"producers_{name}", f"users_{name}"]
        writer.writerow(header)
        for algo, cm in results:
            row = [algo, repr(metrics.overall_accuracy(cm))]
            for cid, _ in cfg.classes:
                pa = metrics.producers_accuracy(cm, cid)
                ua = metrics.users_accuracy(cm, cid)
                row += ["" if pa is None else repr(pa),
                        "" if ua is None else repr(ua)]
            writer.writerow(row)
    doc = {algo: metrics.assessment_doc(cm, cfg.classes)
           for algo, cm in results}
    with open(_out(cfg, "comparison.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def cmd_render(cfg: PipelineConfig, input_path=None, output_path=None) -> Path:
    algo = cfg.classifier
    src = Path(input_path) if input_path else _out(cfg, f"classes_{algo}.tif")
    dst = Path(output_path) if output_path else _out(cfg, f"map_{algo}.png")
    class_raster = read_geotiff(src)
    legend = dst.with_suffix(".legend.json")
    render_class_map(class_raster, cfg.classes, dst, legend)
    return dst


def cmd_synth(spec_path, out_dir) -> Path:
    """Generate a synthetic scene and write the files a pipeline run needs:
    dated band images, truth raster, points CSV, stack manifest, and a
    ready-to-edit pipeline config."""
    spec = SceneSpec.from_json(spec_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stack, truth, points = generate_scene(spec)

    manifest = []
    for item in stack.items:
        name = f"scene_{item.date.isoformat()}.tif"
        write_geotiff(item.raster, out_dir / name)
        manifest.append({"path": name, "date": item.date.isoformat()})
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_geotiff(truth, out_dir / "truth.tif")

    with open(out_dir / "points.csv", "w", newline="") as fh:
        fh.write("x,y,class_name\n")
        for p in points:
            fh.write(f"{p.x!r},{p.y!r},{p.class_name}\n")

    config = {
        "stack_manifest": "manifest.json",
        "classes": list(spec.class_names),
        "points": "points.csv",
        "split": {"train_fraction": 0.7, "seed": spec.seed},
        "snic": {"seed_spacing": 5, "compactness": 1.0},
        "classifier": "rf",
        "output_dir": "run",
    }
    config_path = out_dir / "pipeline_config.json"
    with open(config_path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config_path


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--output-dir", default=None)
    parser.add_argument("--classifier", default=None, choices=ALGORITHMS)
    parser.add_argument("--seed", default=None, type=int,
                        help="override split.seed")
    parser.add_argument("--train-fraction", default=None, type=float)
    parser.add_argument("--seed-spacing", default=None, type=int)
    parser.add_argument("--compactness", default=None, type=float)
    parser.add_argument("--ndwi-convention", default=None,
                        choices=NDWI_CONVENTIONS)
    parser.add_argument("--start", default=None, help="date window start")
    parser.add_argument("--end", default=None, help="date window end")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wetmap",
        description="Object-based wetland cover mapping pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("composite", "date-filter, clip, and median-composite the stack"),
            ("features", "build the 7-band feature image"),
            ("segment", "SNIC superpixels and per-segment statistics"),
            ("train-classify", "train the configured classifier and map classes"),
            ("assess", "accuracy, areas and separability for the trained model"),
            ("compare", "train all four classifiers on one split"),
            ("render", "colormapped PNG of a class raster")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "render":
            p.add_argument("--input", default=None, help="class GeoTIFF")
            p.add_argument("--output", default=None, help="PNG path")
    p = sub.add_parser("synth", help="generate a synthetic scene from a spec")
    p.add_argument("--spec", required=True, help="SceneSpec JSON")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            path = cmd_synth(args.spec, args.out)
            print(path)
            return 0
        overrides = {
            "output_dir": args.output_dir, "classifier": args.classifier,
            "seed": args.seed, "train_fraction": args.train_fraction,
            "seed_spacing": args.seed_spacing, "compactness": args.compactness,
            "ndwi_convention": args.ndwi_convention,
            "start": args.start, "end": args.end,
        }
        cfg = load_config(args.config, overrides)
        if args.command == "composite":
            print(cmd_composite(cfg))
        elif args.command == "features":
            print(cmd_features(cfg))
        elif args.command == "segment":
            print(cmd_segment(cfg))
        elif args.command == "train-classify":
            print(cmd_train_classify(cfg))
        elif args.command == "assess":
            print(cmd_assess(cfg))
        elif args.command == "compare":
            print(cmd_compare(cfg))
        elif args.command == "render":
            print(cmd_render(cfg, args.input, args.output))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # data / I/O problems
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
