"""Complementary eCDFs, skew statistics and sim-vs-baseline overlays."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class DegenerateDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class EcdfCurve:
    """Distinct sizes (ascending) and the share of communities at least that large."""

    sizes: np.ndarray
    frac_at_least: np.ndarray

    def __len__(self):
        return len(self.sizes)

    @property
    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.sizes.tolist(), self.frac_at_least.tolist()))


@dataclass(frozen=True)
class SkewSummary:
    gini: float
    max_size: int
    median_size: float
    cv: float
    loglog_r2: float


def complementary_ecdf(sizes, drop_zeros: bool = True) -> EcdfCurve:
    """P(size >= s) at every distinct observed size s.

    With ``drop_zeros`` the empty communities are removed before the
    denominator is taken, since size 0 has no place on a log axis.
    """
    x = np.asarray(sizes)
    if x.size == 0:
        raise ValueError("cannot build an eCDF from an empty distribution")
    if drop_zeros:
        x = x[x > 0]
    if x.size == 0:
        return EcdfCurve(np.array([], dtype=np.int64), np.array([], dtype=float))
    values, counts = np.unique(x, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return EcdfCurve(values, at_least / x.size)


def gini(sizes) -> float:
    """Gini coefficient from the sorted-rank formula."""
    x = np.sort(np.asarray(sizes, dtype=float))
    n = x.size
    total = x.sum()
    if n == 0 or total == 0:
        raise DegenerateDistributionError("Gini undefined for an all-zero distribution")
    ranks = np.arange(1, n + 1)
    return float(2.0 * np.dot(ranks, x) / (n * total) - (n + 1) / n)


def loglog_r2(curve: EcdfCurve) -> float:
    """R^2 of a least-squares line through (ln size, ln frac) points.

    NaN when the curve has fewer than two points.
    """
    if len(curve) < 2:
        return math.nan
    lx = np.log(curve.sizes.astype(float))
    ly = np.log(curve.frac_at_least)
    r = np.corrcoef(lx, ly)[0, 1]
    return float(r * r)


def skew_summary(sizes) -> SkewSummary:
    x = np.asarray(sizes)
    if np.count_nonzero(x) < 2:
        raise DegenerateDistributionError(
            "skew summary needs at least two non-empty communities"
        )
    xf = x.astype(float)
    return SkewSummary(
        gini=gini(x),
        max_size=int(x.max()),
        median_size=float(np.median(x)),
        cv=float(xf.std() / xf.mean()),
        loglog_r2=loglog_r2(complementary_ecdf(x, drop_zeros=True)),
    )


def overlay(sim: EcdfCurve, baseline: EcdfCurve) -> list[tuple[str, int, float]]:
    """Long-format rows (series, size, frac_at_least) for both curves, untouched."""
    rows = [("sim", s, f) for s, f in sim.points]
    rows += [("baseline", s, f) for s, f in baseline.points]
    return rows


def write_ecdf_csv(path, series: dict[str, EcdfCurve], extra: dict[str, object] | None = None):
    """Write curves as (series, size, frac_at_least) rows.

    ``extra`` adds constant leading columns, e.g. a cell id.
    """
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*extra, "series", "size", "frac_at_least"])
        for name, curve in series.items():
            for s, f in curve.points:
                w.writerow([*extra.values(), name, s, repr(f)])


def summary_row(cell_id, sizes) -> dict[str, object]:
    try:
        s = skew_summary(sizes)
    except DegenerateDistributionError:
        nan = float("nan")
        x = np.asarray(sizes)
        return {"cell_id": cell_id, "gini": nan, "max": int(x.max()) if x.size else 0,
                "median": float(np.median(x)) if x.size else nan, "cv": nan, "loglog_r2": nan}
    return {"cell_id": cell_id, "gini": s.gini, "max": s.max_size, "median": s.median_size,
            "cv": s.cv, "loglog_r2": s.loglog_r2}


def write_summary_csv(path, rows: list[dict[str, object]]):
    fields = ["cell_id", "gini", "max", "median", "cv", "loglog_r2"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
