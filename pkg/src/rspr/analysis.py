"""Access-time statistics per tanglegram class and CSV/JSON report emission."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import stats

from .curvature import CurvatureRecord
from .walks import AccessHistogram

__all__ = [
    "ClassStats",
    "AllCapped",
    "NoDelta",
    "mean_access_time",
    "delta1",
    "class_stats",
    "spearman",
    "geometric_tail_test",
    "CURVATURE_COLUMNS",
    "STATS_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "CLASS_COLUMNS",
    "curvature_rows",
    "stats_rows",
    "histogram_rows",
    "emit_report",
]


class AllCapped(ValueError):
    """Every run exceeded the cap, so no access time was observed."""


class NoDelta(ValueError):
    """No consecutive bin pair with a nonzero successor lies below the cap."""


@dataclass(frozen=True)
class ClassStats:
    class_key: str
    distance: int
    deg1: int
    deg2: int
    kappa: Fraction
    mat: Fraction
    delta1: int | None
    replicates: int
    capped_fraction: Fraction


def mean_access_time(h: AccessHistogram) -> Fraction:
    """Mean first-passage step over the runs that hit before the cap."""
    obs = h.observations()
    if obs == 0:
        raise AllCapped(f"all {h.replicates} runs reached the cap")
    return Fraction(sum(step * c for step, c in h.counts.items()), obs)


def delta1(h: AccessHistogram) -> int:
    """count(t) - count(t+1) at the first t >= 1 with count(t+1) > 0.

    The successor bin must lie strictly below the histogram's cap, when one
    is recorded; a bin at the cap cannot be told apart from truncation.
    """
    for step in sorted(h.counts):
        if step < 2 or h.counts[step] == 0:
            continue
        if h.cap is not None and step >= h.cap:
            break
        return h.count(step - 1) - h.count(step)
    raise NoDelta("no nonzero successor bin below the cap")


def class_stats(h: AccessHistogram, record: CurvatureRecord, kappa: Fraction | None = None) -> ClassStats:
    try:
        d1 = delta1(h)
    except NoDelta:
        d1 = None
    return ClassStats(
        class_key=record.class_key,
        distance=record.distance,
        deg1=record.deg1,
        deg2=record.deg2,
        kappa=record.kappa if kappa is None else kappa,
        mat=mean_access_time(h),
        delta1=d1,
        replicates=h.replicates,
        capped_fraction=Fraction(h.capped, h.replicates),
    )


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rank correlation and its two-sided p-value."""
    res = stats.spearmanr(x, y)
    return float(res.statistic), float(res.pvalue)


def geometric_tail_test(h: AccessHistogram, t0: int, bins: int = 20) -> dict:
    """Chi-square goodness of fit of (access time - t0 | access time > t0) to a geometric law.

    The success probability is the maximum-likelihood estimate, treating runs
    past the cap as censored there; bins have roughly equal expected mass, and
    capped runs join the open last bin.
    """
    steps = np.array([s for s in h.counts if s > t0], dtype=np.int64)
    counts = np.array([h.counts[s] for s in steps], dtype=np.int64)
    x = steps - t0
    n_obs = int(counts.sum())
    if n_obs == 0:
        raise AllCapped("no observations beyond the threshold")
    if h.capped and h.cap is None:
        raise ValueError("capped runs need the histogram's cap")
    horizon = None if not h.capped else h.cap - t0
    exposure = int((x * counts).sum()) + (h.capped * horizon if h.capped else 0)
    p_hat = n_obs / float(exposure)
    q = 1.0 - p_hat
    edges = []
    for i in range(1, bins):
        e = math.ceil(math.log(1.0 - i / bins) / math.log(q))
        if horizon is not None and e >= horizon:
            break
        if e >= 1 and (not edges or e > edges[-1]):
            edges.append(e)
    observed, expected = [], []
    lo = 1
    total = n_obs + h.capped
    for hi in edges:
        observed.append(int(counts[(x >= lo) & (x <= hi)].sum()))
        expected.append(total * (q ** (lo - 1) - q**hi))
        lo = hi + 1
    observed.append(int(counts[x >= lo].sum()) + h.capped)
    expected.append(total * q ** (lo - 1))
    res = stats.chisquare(observed, expected, ddof=1)
    return {
        "statistic": float(res.statistic),
        "pvalue": float(res.pvalue),
        "p_hat": p_hat,
        "observations": n_obs,
        "bins": len(observed),
    }


# -- reports ----------------------------------------------------------------------

CURVATURE_COLUMNS = (
    "class_key",
    "representative_newick_1",
    "representative_newick_2",
    "distance",
    "deg1",
    "deg2",
    "kappa_num",
    "kappa_den",
    "kappa_mh_num",
    "kappa_mh_den",
    "ric_num",
    "ric_den",
    "class_size",
)
STATS_COLUMNS = (
    "class_key",
    "distance",
    "deg1",
    "deg2",
    "kappa_num",
    "kappa_den",
    "mat",
    "delta1",
    "replicates",
    "capped_fraction",
)
HISTOGRAM_COLUMNS = ("class_key", "distance", "deg1", "deg2", "step", "count", "replicates", "capped")
CLASS_COLUMNS = ("canonical_key", "rep_newick_1", "rep_newick_2", "distance", "class_size")


def curvature_rows(records: Iterable[CurvatureRecord]) -> list[dict]:
    return [
        {
            "class_key": r.class_key,
            "representative_newick_1": r.key1,
            "representative_newick_2": r.key2,
            "distance": r.distance,
            "deg1": r.deg1,
            "deg2": r.deg2,
            "kappa_num": r.kappa.numerator,
            "kappa_den": r.kappa.denominator,
            "kappa_mh_num": r.kappa_mh.numerator,
            "kappa_mh_den": r.kappa_mh.denominator,
            "ric_num": r.ric.numerator,
            "ric_den": r.ric.denominator,
            "class_size": r.class_size,
        }
        for r in records
    ]


def stats_rows(items: Iterable[ClassStats]) -> list[dict]:
    return [
        {
            "class_key": s.class_key,
            "distance": s.distance,
            "deg1": s.deg1,
            "deg2": s.deg2,
            "kappa_num": s.kappa.numerator,
            "kappa_den": s.kappa.denominator,
            "mat": str(s.mat),
            "delta1": "" if s.delta1 is None else s.delta1,
            "replicates": s.replicates,
            "capped_fraction": str(s.capped_fraction),
        }
        for s in items
    ]


def histogram_rows(hists: Iterable[tuple[AccessHistogram, CurvatureRecord | ClassStats]]) -> list[dict]:
    rows = []
    for h, info in hists:
        for step, count in sorted(h.counts.items()):
            rows.append(
                {
                    "class_key": h.class_key,
                    "distance": info.distance,
                    "deg1": info.deg1,
                    "deg2": info.deg2,
                    "step": step,
                    "count": count,
                    "replicates": h.replicates,
                    "capped": h.capped,
                }
            )
    return rows


def _sort_key(row: dict):
    first = row.get("class_key", row.get("canonical_key", ""))
    return (first, row.get("step", 0))


def emit_report(
    rows: Iterable[dict],
    columns: Sequence[str],
    out: TextIO,
    fmt: str = "csv",
    header: Sequence[str] = (),
) -> None:
    """Write rows sorted by class key; byte-identical for identical inputs.

    CSV output starts with ``# `` comment lines from ``header``; JSON output
    carries them under ``"header"``.
    """
    rows = sorted(rows, key=_sort_key)
    for row in rows:
        if set(row) != set(columns):
            raise ValueError(f"row columns {sorted(row)} differ from the schema")
    if fmt == "csv":
        for line in header:
            out.write(f"# {line}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([row[c] for c in columns])
    elif fmt == "json":
        json.dump({"header": list(header), "columns": list(columns), "rows": [{c: r[c] for c in columns} for r in rows]}, out, indent=1)
        out.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
