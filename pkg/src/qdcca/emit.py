"""CSV and manifest emission for sweep results.

One directory per run.  Floats are written with shortest round-trip
formatting, booleans as 0/1, missing values as empty fields.  The JSON
manifest lists every file written plus the semantic config and its hash;
re-running with the same config, seed and data reproduces every byte.
"""

from __future__ import annotations

import csv
import json
import os

from .config import AnalysisConfig
from .network import cluster_track
from .pipeline import SweepResult, threshold_periods

MANIFEST_NAME = "run_manifest.json"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        # plain-float repr: shortest round-trip, no numpy scalar wrapper
        return repr(float(value))
    return str(value)


def _tag(q: float) -> str:
    return f"{q:g}"


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _spectra_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    for q in cfg.q:
        for s in cfg.s:
            name = f"spectra_{_tag(q)}_{s}.csv"
            header = [
                "window", "end_ts", "q", "s",
                "lambda1", "lambda2", "h1", "h2", "v1max", "v2max", "degenerate",
            ]
            if cfg.residual:
                header += ["res_lambda1", "res_h1", "res_v1max"]
            rows = []
            for w in result.windows:
                row = w.spectral.get((q, s))
                if row is None:
                    continue
                out = [w.index, w.end_ts, _tag(q), s,
                       row.lambda1, row.lambda2, row.h1, row.h2,
                       row.v1max, row.v2max, row.degenerate]
                if cfg.residual:
                    out += [row.res_lambda1, row.res_h1, row.res_v1max]
                rows.append(out)
            _write_csv(os.path.join(out_dir, name), header, rows)
            written.append(name)
    return written


def _topology_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    header = ["window", "end_ts", "k_max", "hub", "mean_path_length", "gamma", "gamma_se"]
    if cfg.verbose:
        header += ["mean_path_length_paper_norm", "mean_path_length_weighted"]
    for q in cfg.q:
        for s in cfg.s:
            name = f"topology_{_tag(q)}_{s}.csv"
            rows = []
            for w in result.windows:
                row = w.topology.get((q, s))
                if row is None:
                    continue
                out = [w.index, w.end_ts, row.k_max, row.hub,
                       row.mean_path, row.gamma, row.gamma_se]
                if cfg.verbose:
                    out += [row.mean_path_paper, row.mean_path_weighted]
                rows.append(out)
            _write_csv(os.path.join(out_dir, name), header, rows)
            written.append(name)
    return written


def _edge_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    header = ["i", "j", "d", "rho"]
    for q in cfg.q:
        for s in cfg.s:
            for w in result.windows:
                tree = w.trees.get((q, s))
                if tree is None:
                    continue
                name = f"edges_{_tag(q)}_{s}_{w.index:05d}.csv"
                rows = [
                    [tree.labels[e.i], tree.labels[e.j], e.distance, e.rho]
                    for e in tree.edges
                ]
                _write_csv(os.path.join(out_dir, name), header, rows)
                written.append(name)
    return written


def _cluster_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    anchors = [a for a in cfg.anchors if a in result.tickers]
    for s in cfg.s:
        windows = [w for w in result.windows if s in w.partitions]
        if not windows:
            continue
        partitions = [w.partitions[s] for w in windows]
        for anchor in anchors:
            labels, raster = cluster_track(partitions, anchor)
            name = f"clusters_{anchor}_{s}.csv"
            header = ["window", "end_ts", *labels]
            rows = [
                [w.index, w.end_ts, *raster[k].astype(int).tolist()]
                for k, w in enumerate(windows)
            ]
            _write_csv(os.path.join(out_dir, name), header, rows)
            written.append(name)
    return written


def _lagged_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    anchors = [a for a in cfg.anchors if a in result.tickers]
    for anchor in anchors:
        for q in cfg.q:
            for s in cfg.s:
                name = f"lagged_{anchor}_{_tag(q)}_{s}.csv"
                rows = []
                for w in result.windows:
                    taus = w.lagged.get((anchor, q, s))
                    if not taus:
                        continue
                    for tau in sorted(taus):
                        rows.append([w.index, w.end_ts, tau, taus[tau]])
                _write_csv(
                    os.path.join(out_dir, name),
                    ["window", "end_ts", "tau", "mean_rho"],
                    rows,
                )
                written.append(name)
    return written


def _period_files(result: SweepResult, cfg: AnalysisConfig, out_dir: str):
    written = []
    for q in cfg.q:
        for s in cfg.s:
            points = [
                (w.end_ts, w.mean_rho[(q, s)])
                for w in result.windows
                if (q, s) in w.mean_rho
            ]
            intervals = threshold_periods(points, cfg.threshold)
            name = f"periods_{_tag(q)}_{s}.csv"
            _write_csv(os.path.join(out_dir, name), ["start_ts", "end_ts"], intervals)
            written.append(name)
    return written


_WRITERS = {
    "spectra": _spectra_files,
    "topology": _topology_files,
    "edges": _edge_files,
    "clusters": _cluster_files,
    "lagged": _lagged_files,
    "periods": _period_files,
}


def write_outputs(
    result: SweepResult,
    cfg: AnalysisConfig,
    out_dir: str,
    families,
) -> dict:
    """Write the requested CSV families plus the run manifest; returns the
    manifest dictionary."""
    os.makedirs(out_dir, exist_ok=True)
    outputs: list[str] = []
    for family in families:
        outputs.extend(_WRITERS[family](result, cfg, out_dir))
    manifest = {
        "config": cfg.semantic_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "families": sorted(families),
        "tickers": list(result.tickers),
        "n_windows_planned": result.n_windows_planned,
        "n_windows_done": len(result.windows),
        "skipped": [[idx, reason] for idx, reason in result.skipped],
        "outputs": sorted(outputs),
        "conventions": {
            "window_label": "end timestamp of the window",
            "timestamps": "epoch minutes",
            "clusters_q": f"partitions are computed at q = {cfg.q[0]:g}",
        },
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
