"""Command-line interface: one executable exposing the whole pipeline.

Subcommands: synth, ingest, join, classify, align, visitors, daily,
export, serve, and pipeline (all stages from one config). Stage outputs
are plain files with fixed names inside ``--out`` so stages compose via
the filesystem and rerun byte-identically.

Exit codes: 0 success, 1 input error (message names the file/line),
2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from datetime import date
from typing import Dict, Iterable, List, Optional, Tuple

from . import epoch as epoch_mod
from . import exporter, fusion, lightclass, synthgen, trajflow
from .epoch import Direction, TrafficData
from .geo import BoundingBox, GeoPoint
from .ingest import (Antenna, FireEvent, ObservationWindow, ParseError,
                     parse_antennas, parse_fires, parse_raster,
                     parse_traffic, parse_trajectories)
from .jsonio import canonical_dump_path
from .lightclass import (ClusterModel, DegenerateFitError, LABELS_ASCENDING,
                         SiteClass, kmeans_1d, label_clusters,
                         site_luminosities)
from .synthgen import ConfigError, SynthConfig

WORLD_BBOX = BoundingBox(-90.0, 90.0, -180.0, 180.0)

PIPELINE_DEFAULTS = {
    "threshold_km": "1.0",
    "radius_km": "7.5",
    "direction": "BOTH",
    "point_budget": "200000",
    "kmeans_seed": "0",
}


def load_config_file(path: str) -> Dict[str, str]:
    """Plain ``key = value`` lines; '#' starts a comment; blank lines ok."""
    mapping: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = text.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def split_config(mapping: Dict[str, str]) -> Tuple[SynthConfig, Dict[str, str]]:
    pipeline = dict(PIPELINE_DEFAULTS)
    synth_map: Dict[str, str] = {}
    for key, value in mapping.items():
        if key in pipeline:
            pipeline[key] = value
        else:
            synth_map[key] = value
    return SynthConfig.from_mapping(synth_map), pipeline


def _open_lines(path: str):
    return open(path, "r", encoding="utf-8", newline="")


def _load_antennas(path: str) -> List[Antenna]:
    with _open_lines(path) as f:
        return parse_antennas(f)


def _load_fires(path: str, bbox: BoundingBox):
    with _open_lines(path) as f:
        return parse_fires(f, bbox)


def _load_traffic_data(path: str, antennas: List[Antenna],
                       window: ObservationWindow) -> TrafficData:
    with _open_lines(path) as f:
        stream = parse_traffic(f, window)
        return TrafficData.from_stream(stream, [a.id for a in antennas], window)


def _parse_bbox(raw: Optional[str]) -> BoundingBox:
    if not raw:
        return WORLD_BBOX
    parts = [float(tok) for tok in raw.split(",")]
    if len(parts) != 4:
        raise ConfigError("--bbox expects min_lat,max_lat,min_lon,max_lon")
    return BoundingBox(*parts)


def _write_pairs(pairs, out_dir: str) -> None:
    with open(os.path.join(out_dir, "pairs.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("antenna_id,fire_date,distance_km\n")
        for p in pairs:
            f.write(f"{p.antenna_id},{p.fire.day.isoformat()},"
                    f"{p.distance_km!r}\n")


def _read_pairs(path: str, antennas: List[Antenna]) -> List[fusion.FireSitePair]:
    positions = {a.id: a.position for a in antennas}
    pairs: List[fusion.FireSitePair] = []
    with _open_lines(path) as f:
        reader = csv.DictReader(f)
        for lineno, row in enumerate(reader, start=2):
            try:
                aid = int(row["antenna_id"])
                day = date.fromisoformat(row["fire_date"])
                dist = float(row["distance_km"])
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(str(e), lineno) from e
            if aid not in positions:
                raise ParseError(f"unknown antenna {aid}", lineno)
            fire = FireEvent(positions[aid], day)
            pairs.append(fusion.FireSitePair(aid, fire, dist))
    return pairs


def _write_classification(model: ClusterModel, sites, out_dir: str) -> None:
    lum = {s.antenna_id: s.luminosity for s in sites}
    with open(os.path.join(out_dir, "classification.csv"), "w",
              encoding="utf-8", newline="\n") as f:
        f.write("antenna_id,luminosity,label\n")
        for aid in sorted(model.assignment):
            f.write(f"{aid},{lum[aid]!r},{model.label_of(aid).value}\n")
    canonical_dump_path(
        {"k": model.k, "centroids": list(model.centroids),
         "labels": [l.value for l in LABELS_ASCENDING]},
        os.path.join(out_dir, "centroids.json"))


def _read_classification(path: str,
                         centroids_path: Optional[str] = None) -> ClusterModel:
    label_index = {l.value: i for i, l in enumerate(LABELS_ASCENDING)}
    assignment: Dict[int, int] = {}
    with _open_lines(path) as f:
        reader = csv.DictReader(f)
        for lineno, row in enumerate(reader, start=2):
            try:
                assignment[int(row["antenna_id"])] = label_index[row["label"]]
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(str(e), lineno) from e
    centroids = (0.0, 1.0, 2.0)
    if centroids_path and os.path.exists(centroids_path):
        import json
        with open(centroids_path, "r", encoding="utf-8") as f:
            centroids = tuple(json.load(f)["centroids"])
    return ClusterModel(centroids=centroids, assignment=assignment,
                        wcss_history=(), n_iter=0, labels=LABELS_ASCENDING)


def _write_profiles(result: epoch_mod.AlignmentResult, out_dir: str) -> None:
    for label, prof in sorted(result.profiles.items(), key=lambda kv: kv[0].value):
        path = os.path.join(out_dir, f"profile_{label.value}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("offset_hour,mean,n\n")
            for o, m, n in zip(prof.offsets, prof.mean, prof.n):
                mtxt = "" if n == 0 else repr(float(m))
                f.write(f"{int(o)},{mtxt},{int(n)}\n")
    ratios = {}
    for label, prof in result.profiles.items():
        pr = epoch_mod.peak_ratios(prof)
        ratios[label.value] = {
            "by_day": {str(d): {"morning": r.morning, "evening": r.evening,
                                "ratio": r.ratio}
                       for d, r in sorted(pr.by_day.items())},
            "inversion": pr.inversion,
        }
    canonical_dump_path(ratios, os.path.join(out_dir, "ratios.json"))


def _write_visitors(epochs, model: ClusterModel, out_dir: str) -> None:
    with open(os.path.join(out_dir, "visitors.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("antenna_id,fire_date,n_visitors\n")
        for e in epochs:
            f.write(f"{e.pair.antenna_id},{e.pair.fire.day.isoformat()},"
                    f"{len(e.visitors)}\n")
    stats = trajflow.visitors_by_cluster(epochs, model)
    canonical_dump_path({
        "zero_visitor_fraction": trajflow.zero_visitor_fraction(epochs),
        "zero_visitor_antenna_fraction":
            trajflow.zero_visitor_antenna_fraction(epochs),
        "mean_visitors_by_cluster": {
            label.value: {"mean": s.mean_visitors, "n_epochs": s.n_epochs}
            for label, s in stats.items()},
    }, os.path.join(out_dir, "visitors_summary.json"))


def _write_daily(daily, out_dir: str) -> None:
    with open(os.path.join(out_dir, "daily.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("date,calls,missing_hours\n")
        for t in daily:
            f.write(f"{t.day.isoformat()},{t.calls!r},{t.missing_hours}\n")
    canonical_dump_path({
        "monthly_decay": [
            {"month": m.month, "rate_per_day": m.rate_per_day,
             "n_days": m.n_days}
            for m in epoch_mod.fit_monthly_decay(daily)],
        "spike_days": [d.isoformat() for d in epoch_mod.detect_spikes(daily)],
    }, os.path.join(out_dir, "daily_summary.json"))


def _window_from_args(args) -> ObservationWindow:
    from datetime import datetime, timedelta
    start = datetime.fromisoformat(args.window_start)
    return ObservationWindow(start, start + timedelta(days=args.window_days))


def _add_window_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-start", default="2011-12-01T00:00",
                   help="observation window start (ISO hour)")
    p.add_argument("--window-days", type=int, default=150,
                   help="observation window length in days")


# ---- subcommands ------------------------------------------------------

def cmd_synth(args) -> int:
    mapping = load_config_file(args.config) if args.config else {}
    cfg, _ = split_config(mapping)
    if args.seed is not None:
        cfg.seed = args.seed
    synthgen.generate(cfg, args.out)
    print(f"synth: wrote 5 input files + manifest.json to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    window = _window_from_args(args)
    if args.antennas:
        ants = _load_antennas(args.antennas)
        print(f"{args.antennas}: rows={len(ants)} kept={len(ants)} "
              f"skipped=0 missing_hours=0")
    if args.traffic:
        with _open_lines(args.traffic) as f:
            stream = parse_traffic(f, window)
            for _ in stream:
                pass
        tl = stream.timeline
        print(f"{args.traffic}: rows={stream.rows} "
              f"kept={stream.rows - stream.skipped} skipped={stream.skipped} "
              f"missing_hours={tl.n_missing}")
    if args.trajectories:
        n = 0
        with _open_lines(args.trajectories) as f:
            for _ in parse_trajectories(f):
                n += 1
        print(f"{args.trajectories}: rows={n} kept={n} skipped=0 "
              f"missing_hours=0")
    if args.fires:
        res = _load_fires(args.fires, _parse_bbox(args.bbox))
        total = len(res.fires) + res.dropped
        print(f"{args.fires}: rows={total} kept={len(res.fires)} "
              f"skipped={res.dropped} missing_hours=0")
    if args.raster:
        with _open_lines(args.raster) as f:
            r = parse_raster(f)
        print(f"{args.raster}: rows={r.nrows} kept={r.nrows} skipped=0 "
              f"missing_hours=0")
    return 0


def cmd_join(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    antennas = _load_antennas(args.antennas)
    fires = _load_fires(args.fires, _parse_bbox(args.bbox)).fires
    result = fusion.join(fires, antennas, args.threshold_km)
    _write_pairs(result.pairs, args.out)
    canonical_dump_path({
        "n_antennas_with_fire": result.summary.n_antennas_with_fire,
        "histogram": {str(k): v for k, v in result.summary.histogram.items()},
        "n_pairs": result.summary.n_pairs,
        "threshold_km": args.threshold_km,
    }, os.path.join(args.out, "join_summary.json"))
    print(f"join: pairs={result.summary.n_pairs} "
          f"antennas={result.summary.n_antennas_with_fire}")
    return 0


def cmd_classify(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    antennas = _load_antennas(args.antennas)
    if args.pairs:
        pair_ids = {p.antenna_id for p in _read_pairs(args.pairs, antennas)}
        antennas = [a for a in antennas if a.id in pair_ids]
    with _open_lines(args.raster) as f:
        raster = parse_raster(f)
    lum = site_luminosities(antennas, raster, args.radius_km)
    model = label_clusters(kmeans_1d(lum.sites, k=3, seed=args.kmeans_seed))
    _write_classification(model, lum.sites, args.out)
    print(f"classify: sites={len(lum.sites)} sizes={model.cluster_sizes()} "
          f"outside_raster={lum.n_outside_extent}")
    return 0


def cmd_align(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    window = _window_from_args(args)
    antennas = _load_antennas(args.antennas)
    pairs = _read_pairs(args.pairs, antennas)
    model = _read_classification(args.classification, args.centroids)
    traffic = _load_traffic_data(args.traffic, antennas, window)
    result = epoch_mod.align_and_average(pairs, model, traffic,
                                         Direction[args.direction])
    _write_profiles(result, args.out)
    print(f"align: epochs={sum(result.n_epochs.values())} "
          f"excluded={sum(result.n_excluded.values())}")
    return 0


def cmd_visitors(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    window = _window_from_args(args)
    antennas = _load_antennas(args.antennas)
    pairs = _read_pairs(args.pairs, antennas)
    model = _read_classification(args.classification, args.centroids)
    with _open_lines(args.trajectories) as f:
        index = trajflow.TrajectoryIndex(parse_trajectories(f), window)
    epochs = trajflow.collect_epoch_visitors(index, pairs)
    _write_visitors(epochs, model, args.out)
    print(f"visitors: epochs={len(epochs)} "
          f"zero_fraction={trajflow.zero_visitor_fraction(epochs):.4f}")
    return 0


def cmd_daily(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    window = _window_from_args(args)
    antennas = _load_antennas(args.antennas)
    traffic = _load_traffic_data(args.traffic, antennas, window)
    daily = epoch_mod.daily_totals(traffic)
    _write_daily(daily, args.out)
    print(f"daily: days={len(daily)}")
    return 0


def cmd_export(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    window = _window_from_args(args)
    run_pipeline_stages(
        antennas_path=args.antennas, traffic_path=args.traffic,
        trajectories_path=args.trajectories, fires_path=args.fires,
        raster_path=args.raster, out_dir=args.out, window=window,
        threshold_km=args.threshold_km, radius_km=args.radius_km,
        direction=Direction[args.direction], kmeans_seed=args.kmeans_seed,
        point_budget=args.point_budget, scene_only=True)
    print(f"export: wrote scene.json to {args.out}")
    return 0


def cmd_serve(args) -> int:
    host, _, port = args.addr.partition(":")
    print(f"serving {args.scene} on http://{host}:{port}")
    exporter.serve(args.scene, host or "127.0.0.1", int(port or 8787))
    return 0


def run_pipeline_stages(antennas_path: str, traffic_path: str,
                        trajectories_path: str, fires_path: str,
                        raster_path: str, out_dir: str,
                        window: ObservationWindow,
                        threshold_km: float = 1.0, radius_km: float = 7.5,
                        direction: Direction = Direction.BOTH,
                        kmeans_seed: int = 0, point_budget: int = 200_000,
                        scene_only: bool = False,
                        echo=lambda msg: None) -> None:
    """Run join -> classify -> align -> visitors -> daily -> export over
    already-generated input files, writing every stage artifact."""
    antennas = _load_antennas(antennas_path)
    echo(f"ingest antennas: rows={len(antennas)}")
    fires = _load_fires(fires_path, WORLD_BBOX).fires
    echo(f"ingest fires: kept={len(fires)}")
    with _open_lines(raster_path) as f:
        raster = parse_raster(f)

    join_result = fusion.join(fires, antennas, threshold_km)
    echo(f"join: pairs={join_result.summary.n_pairs}")
    pair_ids = {p.antenna_id for p in join_result.pairs}
    fire_antennas = [a for a in antennas if a.id in pair_ids]
    lum = site_luminosities(fire_antennas, raster, radius_km)
    model = label_clusters(kmeans_1d(lum.sites, k=3, seed=kmeans_seed))
    echo(f"classify: sizes={model.cluster_sizes()}")

    traffic = _load_traffic_data(traffic_path, antennas, window)
    echo(f"ingest traffic: missing_hours={traffic.timeline.n_missing}")
    alignment = epoch_mod.align_and_average(join_result.pairs, model, traffic,
                                            direction)
    echo(f"align: epochs={sum(alignment.n_epochs.values())}")

    with _open_lines(trajectories_path) as f:
        index = trajflow.TrajectoryIndex(parse_trajectories(f), window)
    epochs = trajflow.collect_epoch_visitors(index, join_result.pairs)
    echo(f"visitors: epochs={len(epochs)}")
    daily = epoch_mod.daily_totals(traffic)

    if not scene_only:
        _write_pairs(join_result.pairs, out_dir)
        canonical_dump_path({
            "n_antennas_with_fire": join_result.summary.n_antennas_with_fire,
            "histogram": {str(k): v
                          for k, v in join_result.summary.histogram.items()},
            "n_pairs": join_result.summary.n_pairs,
            "threshold_km": threshold_km,
        }, os.path.join(out_dir, "join_summary.json"))
        _write_classification(model, lum.sites, out_dir)
        _write_profiles(alignment, out_dir)
        _write_visitors(epochs, model, out_dir)
        _write_daily(daily, out_dir)

    scene = exporter.build_scene(
        antennas=antennas, fires=fires, pairs=join_result.pairs, model=model,
        alignment=alignment, epoch_visitors=epochs,
        timeline=traffic.timeline, point_budget=point_budget)
    with open(os.path.join(out_dir, "scene.json"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write(exporter.scene_to_json(scene))
        f.write("\n")
    echo("export: scene.json written")


def cmd_pipeline(args) -> int:
    t0 = time.monotonic()
    mapping = load_config_file(args.config) if args.config else {}
    cfg, opts = split_config(mapping)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out
    os.makedirs(out, exist_ok=True)
    synthgen.generate(cfg, out)
    print(f"synth: done ({time.monotonic() - t0:.1f}s)")
    run_pipeline_stages(
        antennas_path=os.path.join(out, "antennas.csv"),
        traffic_path=os.path.join(out, "traffic.csv"),
        trajectories_path=os.path.join(out, "trajectories.csv"),
        fires_path=os.path.join(out, "fires.csv"),
        raster_path=os.path.join(out, "lights.asc"),
        out_dir=out, window=cfg.window,
        threshold_km=float(opts["threshold_km"]),
        radius_km=float(opts["radius_km"]),
        direction=Direction[opts["direction"]],
        kmeans_seed=int(opts["kmeans_seed"]),
        point_budget=int(opts["point_budget"]),
        echo=print)
    print(f"pipeline: complete in {time.monotonic() - t0:.1f}s -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firecell",
        description="Fuse fire detections and night lights with mobile-phone "
                    "activity; classify sites and measure event-aligned "
                    "behavioral change.")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on internal parallelism (stages are "
                             "currently single-threaded)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic input files")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse inputs and print summaries")
    p.add_argument("--antennas")
    p.add_argument("--traffic")
    p.add_argument("--trajectories")
    p.add_argument("--fires")
    p.add_argument("--raster")
    p.add_argument("--bbox", help="min_lat,max_lat,min_lon,max_lon")
    _add_window_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("join", help="fire/antenna spatial join")
    p.add_argument("--antennas", required=True)
    p.add_argument("--fires", required=True)
    p.add_argument("--bbox")
    p.add_argument("--threshold-km", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("classify", help="urban-rural luminosity classification")
    p.add_argument("--antennas", required=True)
    p.add_argument("--raster", required=True)
    p.add_argument("--pairs", help="restrict to antennas in this pair table")
    p.add_argument("--radius-km", type=float, default=7.5)
    p.add_argument("--kmeans-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("align", help="fire-aligned call profiles per cluster")
    p.add_argument("--antennas", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--classification", required=True)
    p.add_argument("--centroids")
    p.add_argument("--direction", default="BOTH",
                   choices=[d.name for d in Direction])
    _add_window_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("visitors", help="trajectories at fire sites")
    p.add_argument("--antennas", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--classification", required=True)
    p.add_argument("--centroids")
    _add_window_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_visitors)

    p = sub.add_parser("daily", help="daily totals and confound fits")
    p.add_argument("--antennas", required=True)
    p.add_argument("--traffic", required=True)
    _add_window_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_daily)

    p = sub.add_parser("export", help="build the UI scene document")
    p.add_argument("--antennas", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--fires", required=True)
    p.add_argument("--raster", required=True)
    p.add_argument("--threshold-km", type=float, default=1.0)
    p.add_argument("--radius-km", type=float, default=7.5)
    p.add_argument("--direction", default="BOTH",
                   choices=[d.name for d in Direction])
    p.add_argument("--kmeans-seed", type=int, default=0)
    p.add_argument("--point-budget", type=int, default=200_000)
    _add_window_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="serve a scene read-only over HTTP")
    p.add_argument("--scene", required=True)
    p.add_argument("--addr", default="127.0.0.1:8787")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pipeline", help="synth + all stages from one config")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ParseError, ConfigError, DegenerateFitError, exporter.SceneError,
            FileNotFoundError, IsADirectoryError, NotADirectoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (AssertionError, RuntimeError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
