"""Benchmark ingestion, lambda sweeps and refinement iteration curves.

Benchmark layout (file stems must match)::

    root/input/<name>.png
    root/trimap1/<name>.png
    root/trimap2/<name>.png
    root/gt/<name>.png        (optional)
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass

import numpy as np

from .dataterm import SamplingParams
from .errors import EmptyDataset, MissingGroundTruth
from .imageio import Label, load_alpha, load_image, load_trimap
from .metrics import Region, mse, pimp, region_mask
from .solver import CGParams
from .ssl import RefinementParams, laplacian_for, run_pipeline

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("image", "lambda", "iters", "region", "mse", "pimp")
DEFAULT_LAMBDAS = (1e-4, 1e-3, 1e-2, 5e-2, 0.1, 0.5, 1.0)


@dataclass
class EvalRecord:
    image_id: str
    lam: float
    iterations: int
    mse: float
    region: Region
    pimp: float | None = None

    def row(self):
        return [self.image_id, repr(float(self.lam)), self.iterations, self.region.value,
                repr(float(self.mse)), "" if self.pimp is None else repr(float(self.pimp))]


@dataclass
class BenchmarkEntry:
    name: str
    image: str
    trimaps: dict
    truth: str | None = None

    def load(self, coarse_level):
        image = load_image(self.image)
        trimap = load_trimap(self.trimaps[coarse_level])
        truth = load_alpha(self.truth) if self.truth else None
        return image, trimap, truth


def ingest_benchmark(root, levels=(1, 2)):
    input_dir = os.path.join(root, "input")
    names = sorted(f for f in os.listdir(input_dir) if f.lower().endswith(".png")) if os.path.isdir(input_dir) else []
    entries = []
    for fname in names:
        stem = os.path.splitext(fname)[0]
        trimaps = {}
        for level in levels:
            p = os.path.join(root, f"trimap{level}", fname)
            if os.path.exists(p):
                trimaps[level] = p
        missing = [lv for lv in levels if lv not in trimaps]
        if missing:
            log.warning("skipping %s: no trimap for coarse level(s) %s", stem, missing)
            continue
        gt = os.path.join(root, "gt", fname)
        entries.append(BenchmarkEntry(stem, os.path.join(input_dir, fname), trimaps,
                                      gt if os.path.exists(gt) else None))
    if not entries:
        raise EmptyDataset(f"no usable benchmark entries under {root}")
    return entries


def sweep_arrays(image, trimap, truth, lambdas, *, name="", region=Region.UNKNOWN_ONLY,
                 sampling=SamplingParams(), cg=CGParams(), lap_eps=1e-5):
    """MSE of a plain (no refinement) solve at each lambda, in input order."""
    if truth is None:
        raise MissingGroundTruth(f"{name or 'image'}: ground truth required for a sweep")
    lambdas = list(lambdas)
    if not lambdas:
        return []
    mask = region_mask(region, trimap)
    lap = laplacian_for(image, trimap, lap_eps)
    no_ssl = RefinementParams(n_iters=0)
    out = []
    for lam in lambdas:
        matte, _ = run_pipeline(image, trimap, lam, no_ssl, sampling=sampling, cg=cg, laplacian=lap)
        out.append(EvalRecord(name, lam, 0, mse(matte, truth, mask), Region(region)))
    return out


def lambda_sweep(entry, lambdas, coarse_level=2, **kwargs):
    image, trimap, truth = entry.load(coarse_level)
    if truth is None:
        raise MissingGroundTruth(f"{entry.name}: no ground truth")
    return sweep_arrays(image, trimap, truth, lambdas, name=entry.name, **kwargs)


def curve_arrays(image, trimap, truth, lam, max_iters, *, name="", region=Region.UNKNOWN_ONLY,
                 t_alpha=0.95, t_percent=0.10, sampling=SamplingParams(), cg=CGParams(), lap_eps=1e-5):
    """(iteration, mse, pimp) for k = 0..max_iters refinement rounds.

    Refinement is a deterministic prefix process, so one run to ``max_iters``
    gives every k; rounds after an early stop repeat the last matte.
    """
    if truth is None:
        raise MissingGroundTruth(f"{name or 'image'}: ground truth required")
    mask = region_mask(region, trimap)
    params = RefinementParams(t_alpha=t_alpha, t_percent=t_percent, n_iters=max_iters)
    _, trace = run_pipeline(image, trimap, lam, params, sampling=sampling, cg=cg, lap_eps=lap_eps,
                            truth=truth, mse_region=mask)
    by_iter = {rec.iteration: rec.mse for rec in trace}
    rows = []
    current = by_iter.get(0)
    if current is None:
        # nothing unknown: the trimap is the matte
        current = mse(np.where(trimap == Label.FOREGROUND, 1.0, 0.0), truth, mask)
    baseline = current
    for k in range(max_iters + 1):
        current = by_iter.get(k, current)
        p = pimp(current, baseline) if baseline > 0 else 0.0
        rows.append((k, current, p))
    return rows


def iteration_curve(entry, lam, max_iters, coarse_level=2, **kwargs):
    image, trimap, truth = entry.load(coarse_level)
    if truth is None:
        raise MissingGroundTruth(f"{entry.name}: no ground truth")
    return curve_arrays(image, trimap, truth, lam, max_iters, name=entry.name, **kwargs)


def curve_records(name, lam, rows, region=Region.UNKNOWN_ONLY):
    return [EvalRecord(name, lam, k, m, Region(region), p) for k, m, p in rows]


def write_results(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for rec in records:
            writer.writerow(rec.row())
