"""Monte-Carlo sweeps over the initial infection rate and regime diagnostics."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .formats import fmt_float, read_weights
from .graph import sample_graph
from .percolation import InfectionParams, run_bootstrap, sample_initial
from .weights import (
    InvalidParam,
    WeightSequence,
    candidate_threshold_sparse,
    gen_example_sequence,
    gen_power_law,
    gen_uniform,
    heavy_bound,
    threshold_report,
)


class NotSubcritical(ValueError):
    pass


class NoHeavyVertices(ValueError):
    pass


def build_sequence(spec: dict) -> WeightSequence:
    """Weight sequence from a generator spec such as ``{"model": "powerlaw", "n": 1000, "a": 0.6}``."""
    model = spec.get("model")
    if model == "powerlaw":
        return gen_power_law(int(spec["n"]), float(spec["a"]), float(spec.get("c", 1.0)))
    if model in ("example-a", "example-b"):
        return gen_example_sequence(model[-1].upper(), float(spec["W"]))
    if model == "uniform":
        return gen_uniform(int(spec["n"]), float(spec.get("w", 1.0)))
    if model == "file":
        return read_weights(spec["path"])
    raise InvalidParam(f"unknown generator model {model!r}")


# pilot-calibrated grid: one decade either side of a_c_scale
DEFAULT_MULTIPLIERS = (0.1, 10.0)


@dataclass(frozen=True)
class SweepConfig:
    generator: dict
    r: int
    multipliers: list[float]
    replicates: int = 20
    base_seed: int = 0
    gamma_out: float = 0.05
    init_weight_cap: Optional[float] = None
    init_weight_floor_all: Optional[float] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidParam("replicates must be >= 1")
        if not self.multipliers:
            raise InvalidParam("multiplier grid is empty")
        if any(m < 0 for m in self.multipliers):
            raise InvalidParam("multipliers must be non-negative")
        if len(set(self.multipliers)) != len(self.multipliers):
            raise InvalidParam("duplicate multipliers in grid")
        if self.r < 2:
            raise InvalidParam("r must be >= 2")
        if not 0 < self.gamma_out <= 1:
            raise InvalidParam("gamma_out must lie in (0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InvalidParam(f"unknown config keys: {sorted(extra)}")
        data = dict(data)
        data["multipliers"] = [float(m) for m in data.get("multipliers", DEFAULT_MULTIPLIERS)]
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


ROW_FIELDS = (
    "n",
    "p0",
    "multiplier",
    "replicate",
    "a0_size",
    "af_size",
    "af_fraction",
    "infected_weight",
    "rounds",
    "outbreak",
)


@dataclass(frozen=True)
class SweepRow:
    n: int
    p0: float
    multiplier: float
    replicate: int
    a0_size: int
    af_size: int
    af_fraction: float
    infected_weight: float
    rounds: int
    outbreak: bool


@dataclass(frozen=True)
class CellSummary:
    cell: int
    multiplier: float
    p0: float
    replicates: int
    median_af_fraction: float
    q1_af_fraction: float
    q3_af_fraction: float
    median_a0_size: float
    outbreak_frequency: float


@dataclass
class SweepResult:
    config: SweepConfig
    a_c_scale: float
    rows: list[SweepRow]
    cells: list[CellSummary] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(ROW_FIELDS)
        for row in self.rows:
            vals = []
            for name in ROW_FIELDS:
                v = getattr(row, name)
                if isinstance(v, bool):
                    vals.append(int(v))
                elif isinstance(v, float):
                    vals.append(fmt_float(v))
                else:
                    vals.append(v)
            out.writerow(vals)
        return buf.getvalue()

    def plot_data(self) -> str:
        lines = ["# p0 outbreak_frequency"]
        lines += [f"{fmt_float(c.p0)} {fmt_float(c.outbreak_frequency)}" for c in self.cells]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "a_c_scale": self.a_c_scale,
            "cells": [asdict(c) for c in self.cells],
            "transition_estimate": estimate_transition(self),
        }


# per-process cache so workers rebuild the weight sequence once
_WORKER_WS: dict = {}


def _init_worker(weights: np.ndarray) -> None:
    from .weights import make_sequence

    _WORKER_WS["ws"] = make_sequence(weights)


def _replicate(ws: WeightSequence, cfg: SweepConfig, cell: int, rep: int, p0: float) -> SweepRow:
    g = sample_graph(ws, rng.stream(cfg.base_seed, cell, rep, rng.GRAPH))
    params = InfectionParams(cfg.r, p0, cfg.init_weight_cap, cfg.init_weight_floor_all)
    a0 = sample_initial(ws, params, rng.stream(cfg.base_seed, cell, rep, rng.SEEDS))
    tr = run_bootstrap(g, a0, cfg.r)
    frac = tr.final_size / ws.n
    return SweepRow(
        n=ws.n,
        p0=p0,
        multiplier=cfg.multipliers[cell],
        replicate=rep,
        a0_size=int(a0.size),
        af_size=tr.final_size,
        af_fraction=frac,
        infected_weight=tr.final_weight,
        rounds=tr.steps_taken,
        outbreak=frac >= cfg.gamma_out,
    )


def _worker_task(args) -> SweepRow:
    cfg, cell, rep, p0 = args
    return _replicate(_WORKER_WS["ws"], cfg, cell, rep, p0)


def summarize(cfg: SweepConfig, rows: list[SweepRow]) -> list[CellSummary]:
    cells = []
    for cell, mult in enumerate(cfg.multipliers):
        mine = [row for row in rows if row.multiplier == mult]
        frac = np.array([row.af_fraction for row in mine])
        q1, med, q3 = np.quantile(frac, [0.25, 0.5, 0.75])
        cells.append(
            CellSummary(
                cell=cell,
                multiplier=mult,
                p0=mine[0].p0,
                replicates=len(mine),
                median_af_fraction=float(med),
                q1_af_fraction=float(q1),
                q3_af_fraction=float(q3),
                median_a0_size=float(np.median([row.a0_size for row in mine])),
                outbreak_frequency=float(np.mean([row.outbreak for row in mine])),
            )
        )
    return cells


def run_sweep(cfg: SweepConfig, workers: int = 1, ws: Optional[WeightSequence] = None) -> SweepResult:
    """Every (cell, replicate) samples a fresh graph and seed set from its own stream.

    Results depend only on the config: rows come back ordered by
    ``(cell, replicate)`` whatever the number of workers.
    """
    ws = build_sequence(cfg.generator) if ws is None else ws
    scale = threshold_report(ws, cfg.r).a_c_scale
    tasks = []
    for cell, mult in enumerate(cfg.multipliers):
        p0 = min(1.0, mult * scale)
        for rep in range(cfg.replicates):
            tasks.append((cfg, cell, rep, p0))
    if workers <= 1:
        rows = [_replicate(ws, *t) for t in tasks]
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(np.asarray(ws.weights),)
        ) as pool:
            rows = list(pool.map(_worker_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    for row in rows:
        assert row.a0_size <= row.af_size <= row.n, row
    res = SweepResult(config=cfg, a_c_scale=scale, rows=rows)
    res.cells = summarize(cfg, rows)
    return res


def estimate_transition(res: SweepResult) -> Optional[float]:
    """First grid crossing of outbreak frequency 1/2, interpolated linearly in ``log p0``."""
    cells = sorted((c for c in res.cells if c.p0 > 0), key=lambda c: c.p0)
    return transition_from(
        [c.p0 for c in cells], [c.outbreak_frequency for c in cells]
    )


def transition_from(p0s, freqs) -> Optional[float]:
    for (pa, fa), (pb, fb) in zip(zip(p0s, freqs), zip(p0s[1:], freqs[1:])):
        if fa < 0.5 <= fb:
            t = (0.5 - fa) / (fb - fa)
            return math.exp(math.log(pa) + t * (math.log(pb) - math.log(pa)))
    return None


def subcritical_weight_check(
    ws: WeightSequence, r: int, p0: float, mu: float, replicates: int, seed: int
) -> float:
    """Fraction of replicates whose light-vertex process stays within ``sqrt(mu) W p0``.

    The process runs on the subgraph spanned by vertices below the heavy
    bound, seeded with the light part of a Bernoulli(p0) draw.
    """
    ps = candidate_threshold_sparse(ws, r)
    if mu <= 0 or p0 > ps / mu * (1 + 1e-12):
        raise NotSubcritical(f"p0={p0!r} exceeds p_s/mu = {ps / mu!r}")
    light = np.arange(ws.index_at_least(heavy_bound(ws, r)))
    bound = math.sqrt(mu) * ws.total_weight * p0
    params = InfectionParams(r, p0)
    passed = 0
    for rep in range(replicates):
        g = sample_graph(ws, rng.stream(seed, rep, rng.GRAPH), vertices=light)
        a0 = sample_initial(ws, params, rng.stream(seed, rep, rng.SEEDS))
        a0 = a0[a0 < light.size]
        tr = run_bootstrap(g, a0, r)
        passed += tr.final_weight <= bound
    return passed / replicates


def dense_cascade_check(ws: WeightSequence, r: int, a: int, seed: int) -> bool:
    """Seed ``a`` random heavy vertices and spread on the heavy-induced subgraph.

    Returns whether every heavy vertex ends infected.  ``a`` beyond the number
    of heavy vertices seeds all of them.
    """
    if a < 1:
        raise InvalidParam("seed count a must be >= 1")
    heavy = np.arange(ws.index_at_least(heavy_bound(ws, r)), ws.n)
    if heavy.size == 0:
        raise NoHeavyVertices("heavy bound exceeds the maximal weight")
    g = sample_graph(ws, rng.stream(seed, rng.GRAPH), vertices=heavy)
    chooser = rng.make_generator(rng.stream(seed, rng.CHOICE))
    seeds = chooser.choice(heavy, size=min(a, heavy.size), replace=False)
    tr = run_bootstrap(g, seeds, r)
    return bool(np.all(tr.infection_round[heavy] >= 0))
