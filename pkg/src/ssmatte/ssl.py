"""Semi-supervised trimap refinement.

After each solve, unknown pixels that are (a) 4-adjacent to a known pixel,
(b) confidently near 0 or 1, and (c) among the top share of unknown pixels
ranked by distance of alpha from 0.5, are relabelled as background or
foreground. Matting then runs again on the grown trimap.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage

from .dataterm import SamplingParams, compute_data_term, data_weights
from .errors import NotConverged
from .imageio import Label, check_trimap
from .metrics import mse
from .smoothterm import matting_laplacian
from .solver import CGParams, assemble, check_lambda, compose_matte, partition, solve_cg

log = logging.getLogger(__name__)

_FOUR = ndimage.generate_binary_structure(2, 1)


class Promotion(Enum):
    NONE = 0
    FOREGROUND = 1
    BACKGROUND = 2


@dataclass(frozen=True)
class RefinementParams:
    t_alpha: float = 0.95
    t_percent: float = 0.10
    n_iters: int = 4

    def __post_init__(self):
        if not (0.5 < self.t_alpha < 1.0):
            raise ValueError(f"t_alpha must lie in (0.5, 1), got {self.t_alpha}")
        if not (0.0 < self.t_percent <= 1.0):
            raise ValueError(f"t_percent must lie in (0, 1], got {self.t_percent}")
        if self.n_iters < 0:
            raise ValueError("n_iters must be >= 0")


@dataclass
class IterationRecord:
    iteration: int
    unknown_before: int
    unknown_after: int
    promoted_fg: int
    promoted_bg: int
    cg_iterations: int
    cg_residual: float
    converged: bool
    mse: float | None = None


@dataclass
class RefinementTrace:
    records: list[IterationRecord] = field(default_factory=list)
    final_trimap: np.ndarray | None = None
    # (trimap_before, matte_before, trimap_after) per round, if requested
    history: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def write_csv(self, path):
        cols = list(IterationRecord.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for rec in self.records:
                row = asdict(rec)
                writer.writerow(["" if row[c] is None else _fmt(row[c]) for c in cols])


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def space_mask(trimap):
    """Unknown pixels with at least one known 4-neighbour."""
    unknown = trimap == Label.UNKNOWN
    near_known = ndimage.binary_dilation(~unknown, structure=_FOUR)
    return unknown & near_known


def space_constraint(trimap, x):
    y, xx = divmod(int(x), trimap.shape[1])
    return bool(space_mask(trimap)[y, xx])


def confidence_constraint(alpha, t_alpha):
    if alpha > t_alpha:
        return Promotion.FOREGROUND
    if alpha < 1.0 - t_alpha:
        return Promotion.BACKGROUND
    return Promotion.NONE


def proportion_select(trimap, matte, t_percent):
    """Top ceil(t_percent * |U|) unknown pixels by |0.5 - alpha|, ties to lower index."""
    if not (0.0 < t_percent <= 1.0):
        raise ValueError("t_percent must lie in (0, 1]")
    unknown = np.flatnonzero(np.asarray(trimap).ravel() == Label.UNKNOWN)
    if unknown.size == 0:
        return unknown
    count = math.ceil(t_percent * unknown.size)
    score = np.abs(0.5 - np.asarray(matte, dtype=np.float64).ravel()[unknown])
    order = np.lexsort((unknown, -score))
    return unknown[order[:count]]


def refine_trimap(trimap, matte, params):
    """Promote unknown pixels passing all three constraints.

    Returns ``(new_trimap, promoted_fg, promoted_bg)``.
    """
    trimap = np.asarray(trimap)
    alpha = np.asarray(matte, dtype=np.float64)
    if alpha.shape != trimap.shape:
        raise ValueError("matte and trimap dimensions differ")
    flat_alpha = alpha.ravel()
    ranked = np.zeros(trimap.size, dtype=bool)
    ranked[proportion_select(trimap, alpha, params.t_percent)] = True
    candidates = space_mask(trimap).ravel() & ranked

    to_fg = candidates & (flat_alpha > params.t_alpha)
    to_bg = candidates & (flat_alpha < 1.0 - params.t_alpha)
    out = trimap.copy().ravel()
    out[to_fg] = Label.FOREGROUND
    out[to_bg] = Label.BACKGROUND
    return out.reshape(trimap.shape), int(to_fg.sum()), int(to_bg.sum())


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True


def matte_once(image, trimap, lam, laplacian, sampling=SamplingParams(), cg=CGParams()):
    """One matting pass on a fixed trimap given a precomputed Laplacian.

    A non-converged CG solve is logged and its last iterate used.
    """
    if not np.any(trimap == Label.UNKNOWN):
        return compose_matte(np.zeros(0), trimap), SolveInfo()
    field_ = compute_data_term(image, trimap, sampling)
    w_f, w_b = data_weights(field_, trimap)
    part = partition(assemble(lam, w_f, w_b, laplacian), trimap)
    try:
        res = solve_cg(part, tol=cg.tol, max_iter=cg.max_iter)
        q_u, info = res.x, SolveInfo(res.iterations, res.residual, True)
    except NotConverged as exc:
        log.warning("%s", exc)
        q_u, info = exc.solution, SolveInfo(exc.iterations, exc.residual, False)
    return compose_matte(q_u, trimap, part.unknown), info


def laplacian_for(image, trimap, eps=1e-5):
    # unknown regions only shrink during refinement, so windows away from
    # the initial unknown set never reach the solved block
    return matting_laplacian(image, eps, active=trimap == Label.UNKNOWN)


def run_pipeline(image, trimap, lam=0.001, params=RefinementParams(), *, sampling=SamplingParams(),
                 cg=CGParams(), lap_eps=1e-5, truth=None, mse_region=None, laplacian=None,
                 keep_history=False):
    """Matte, then up to ``params.n_iters`` rounds of refine + re-matte.

    Returns ``(matte, trace)``. The trace holds a row for the initial solve
    (iteration 0) and one per refinement round that promoted something;
    ``mse`` is filled when ``truth`` is given, measured over ``mse_region``
    (default: unknown pixels of the input trimap).
    """
    check_lambda(lam)
    image = np.asarray(image, dtype=np.float64)
    trimap = np.asarray(trimap, dtype=np.uint8)
    check_trimap(trimap, image)
    trace = RefinementTrace()
    unknown0 = trimap == Label.UNKNOWN
    trace.final_trimap = trimap
    if not unknown0.any():
        return compose_matte(np.zeros(0), trimap), trace

    def score(m):
        if truth is None:
            return None
        region = unknown0 if mse_region is None else mse_region
        return mse(m, truth, region)

    if laplacian is None:
        laplacian = laplacian_for(image, trimap, lap_eps)
    matte, info = matte_once(image, trimap, lam, laplacian, sampling, cg)
    n_u = int(unknown0.sum())
    trace.records.append(IterationRecord(0, n_u, n_u, 0, 0, info.iterations, info.residual,
                                         info.converged, score(matte)))

    current = trimap
    for it in range(1, params.n_iters + 1):
        before = int(np.count_nonzero(current == Label.UNKNOWN))
        previous = current
        current, n_fg, n_bg = refine_trimap(current, matte, params)
        if keep_history:
            trace.history.append((previous, matte, current))
        after = before - n_fg - n_bg
        if n_fg + n_bg == 0:
            log.info("iteration %d promoted no pixels; stopping", it)
            break
        matte, info = matte_once(image, current, lam, laplacian, sampling, cg)
        trace.records.append(IterationRecord(it, before, after, n_fg, n_bg, info.iterations,
                                             info.residual, info.converged, score(matte)))
        if after == 0:
            break
    trace.final_trimap = current
    return matte, trace
