"""Surveillance quality metrics of a camera placement.

UCR and VCR are coverage ratios over all vehicles with at least one kept
visit; VIT, VCH and VUH are per-vehicle in-camera time, camera hits and
unique-camera hits.
"""

from dataclasses import dataclass, field

import numpy as np

import pandas as pd

from .errors import CoverageError

SUMMARY_VECTORS = ("vit", "vch", "vuh")
CURVE_COLUMNS = ["strategy", "n", "ucr", "vcr", "mean_vit", "mean_vch", "mean_vuh"]


def ucr(model, blocks):
    if model.n_vehicles == 0:
        raise CoverageError("UCR of an empty coverage model")
    indicator, _, _, _ = model.vehicle_totals(blocks)
    return float(indicator.sum() / model.n_vehicles)


def vcr(model, blocks):
    total = float(model.dwell.sum())
    if total <= 0:
        raise CoverageError("VCR undefined without any traffic")
    _, dwell, _, _ = model.vehicle_totals(blocks)
    return float(dwell.sum() / total)


@dataclass
class VehicleMetrics:
    vehicle_ids: list
    vit: np.ndarray
    vch: np.ndarray
    vuh: np.ndarray

    def to_frame(self):
        return pd.DataFrame(
            {"vehicle_id": self.vehicle_ids, "vit_s": self.vit, "vch": self.vch, "vuh": self.vuh}
        )


def per_vehicle(model, blocks):
    _, dwell, hits, unique = model.vehicle_totals(blocks)
    return VehicleMetrics(list(model.vehicle_ids), dwell, hits, unique)


def gini(values):
    """Gini coefficient sum_ij |x_i - x_j| / (2 n^2 mean), by the sorted formula."""
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if x.size == 0:
        return 0.0
    if np.any(x < 0):
        raise ValueError("Gini coefficient of negative values")
    total = x.sum()
    if total == 0:
        return 0.0
    n = x.size
    ranks = np.arange(1, n + 1)
    return float(np.sum((2 * ranks - n - 1) * x) / (n * total))


def summarize(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return {"mean": 0.0, "median": 0.0, "std": 0.0, "gini": 0.0}
    return {
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
        "std": float(np.std(values)),
        "gini": gini(values),
    }


@dataclass
class MetricReport:
    n_cameras: int
    ucr: float
    vcr: float
    vehicles: VehicleMetrics
    summary: dict = field(default_factory=dict)

    @property
    def gini_vch(self):
        return self.summary["vch"]["gini"]

    def to_dict(self):
        return {
            "n_cameras": self.n_cameras,
            "ucr": self.ucr,
            "vcr": self.vcr,
            "gini_vch": self.gini_vch,
            "summary": self.summary,
        }


def metric_report(model, blocks):
    blocks = list(blocks)
    vehicles = per_vehicle(model, blocks)
    summary = {name: summarize(getattr(vehicles, name)) for name in SUMMARY_VECTORS}
    return MetricReport(
        n_cameras=len(blocks),
        ucr=ucr(model, blocks),
        vcr=vcr(model, blocks),
        vehicles=vehicles,
        summary=summary,
    )


def metric_curve(model, placement, budgets=None):
    """UCR, VCR and mean VIT/VCH/VUH for prefixes of a placement.

    `budgets` defaults to every prefix size 1..len(placement.steps). Per-vehicle
    totals are accumulated one camera at a time.
    """
    blocks = placement.blocks
    if budgets is None:
        budgets = range(1, len(blocks) + 1)
    budgets = list(budgets)
    if model.n_vehicles == 0:
        raise CoverageError("metric curve of an empty coverage model")
    total = float(model.dwell.sum())
    if total <= 0:
        raise CoverageError("VCR undefined without any traffic")
    cols = [model.column(block) for block in blocks]
    if any(col is None for col in cols):
        raise CoverageError("placement contains a block outside the coverage model")

    dwell = np.zeros(model.n_vehicles)
    hits = np.zeros(model.n_vehicles)
    unique = np.zeros(model.n_vehicles)
    at_size = {}
    wanted = {min(n, len(cols)) for n in budgets}
    for size in range(len(cols) + 1):
        if size:
            rows, block_dwell, block_hits = model.vehicles_of(cols[size - 1])
            dwell[rows] += block_dwell
            hits[rows] += block_hits
            unique[rows] += 1
        if size in wanted:
            at_size[size] = (
                float(np.count_nonzero(unique) / model.n_vehicles),
                float(dwell.sum() / total),
                float(dwell.mean()),
                float(hits.mean()),
                float(unique.mean()),
            )
    rows = [
        [placement.strategy.value, n, *at_size[min(n, len(cols))]] for n in budgets
    ]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)
