"""Bootstrap percolation with threshold r, plus the breeding-ground variant.

Rounds are synchronous: ``A_{t+1} = A_t | {v : |N(v) & A_t| >= r}``.  The
engines keep an infected-neighbour counter per vertex and only push each
round's newly infected vertices, so a run costs ``O(n + sum of degrees of
infected vertices)``.  Oracles here rescan everything and are for tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numba
import numpy as np

from .graph import Graph
from .rng import make_generator
from .weights import WeightSequence


class EmptyNucleusBand(ValueError):
    pass


@dataclass(frozen=True)
class InfectionParams:
    r: int
    p0: float
    init_weight_cap: Optional[float] = None
    init_weight_floor_all: Optional[float] = None

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("infection threshold r must be >= 2")
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must lie in [0, 1]")


@dataclass(frozen=True)
class RoundRecord:
    newly_infected_count: int
    newly_infected_weight: float
    cumulative_weight: float


@dataclass(frozen=True, eq=False)
class Trace:
    rounds: list[RoundRecord]
    initial_set_size: int
    final_set: np.ndarray
    steps_taken: int
    infection_round: np.ndarray  # -1: never, 0: seed, t: infected in round t

    @property
    def final_size(self) -> int:
        return int(self.final_set.size)

    @property
    def final_weight(self) -> float:
        return self.rounds[-1].cumulative_weight

    def infected_by(self, t: int) -> np.ndarray:
        """Vertices infected at or before round ``t``."""
        ir = self.infection_round
        return np.nonzero((ir >= 0) & (ir <= t))[0]

    def to_dict(self, include_final_set: bool = False) -> dict:
        out = {
            "initial_set_size": self.initial_set_size,
            "final_set_size": self.final_size,
            "final_weight": self.final_weight,
            "steps_taken": self.steps_taken,
            "rounds": [
                {
                    "round": t + 1,
                    "newly_infected_count": rec.newly_infected_count,
                    "newly_infected_weight": rec.newly_infected_weight,
                    "cumulative_weight": rec.cumulative_weight,
                }
                for t, rec in enumerate(self.rounds)
            ],
        }
        if include_final_set:
            out["final_set"] = [int(v) for v in self.final_set]
        return out


def _as_mask(n: int, vertices: Iterable[int]) -> np.ndarray:
    if isinstance(vertices, np.ndarray) and vertices.dtype == bool:
        if vertices.shape != (n,):
            raise ValueError("boolean vertex mask has wrong length")
        return vertices.copy()
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("vertex index outside [0, n)")
    mask[idx] = True
    return mask


def sample_initial(ws: WeightSequence, params: InfectionParams, seed) -> np.ndarray:
    """Initial infected set as sorted indices.

    Each vertex is drawn independently with probability ``p0`` (only those with
    weight below ``init_weight_cap`` are eligible, if set); every vertex of
    weight at least ``init_weight_floor_all`` is added deterministically.
    """
    gen = make_generator(seed)
    chosen = gen.random(ws.n) < params.p0
    if params.init_weight_cap is not None:
        chosen &= ws.weights < params.init_weight_cap
    if params.init_weight_floor_all is not None:
        chosen |= ws.weights >= params.init_weight_floor_all
    return np.nonzero(chosen)[0]


@numba.njit(cache=True)
def _spread(indptr, indices, seeds, r, ground, previous_only):
    n = indptr.shape[0] - 1
    state = np.full(n, -1, dtype=np.int64)
    count = np.zeros(n, dtype=np.int32)
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    size = 0
    for s in seeds:
        if state[s] < 0:
            state[s] = 0
            frontier[size] = s
            size += 1
    t = 0
    while size > 0:
        new = 0
        ntouch = 0
        for i in range(size):
            u = frontier[i]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if state[v] >= 0 or not ground[v]:
                    continue
                if count[v] == 0:
                    touched[ntouch] = v
                    ntouch += 1
                count[v] += 1
                if count[v] >= r:
                    state[v] = t + 1
                    nxt[new] = v
                    new += 1
        if previous_only:
            for i in range(ntouch):
                count[touched[i]] = 0
        frontier, nxt = nxt, frontier
        size = new
        t += 1
    return state


def _trace_from_rounds(g: Graph, state: np.ndarray, n_seeds: int) -> Trace:
    w = g.weights if g.weights is not None else np.ones(g.n)
    infected = state >= 0
    last = int(state.max()) if infected.any() else 0
    counts = np.bincount(state[infected], minlength=last + 2)
    weights = np.bincount(state[infected], weights=w[infected], minlength=last + 2)
    rounds = []
    cumulative = float(weights[0])
    for t in range(1, last + 2):
        cumulative += float(weights[t])
        rounds.append(RoundRecord(int(counts[t]), float(weights[t]), cumulative))
    return Trace(
        rounds=rounds,
        initial_set_size=n_seeds,
        final_set=np.nonzero(infected)[0],
        steps_taken=last,
        infection_round=state,
    )


def run_bootstrap(g: Graph, a0: Iterable[int], r: int) -> Trace:
    if r < 2:
        raise ValueError("r must be >= 2")
    seeds = np.nonzero(_as_mask(g.n, a0))[0]
    ground = np.ones(g.n, dtype=np.bool_)
    state = _spread(g.indptr, g.indices, seeds, r, ground, False)
    return _trace_from_rounds(g, state, seeds.size)


def run_restricted(
    g: Graph,
    a0: Iterable[int],
    ground: Iterable[int],
    r: int,
    count_all_infected: bool = False,
) -> Trace:
    """Breeding-ground process: after the seeds, only ``ground`` vertices can be infected.

    At step ``t`` a ground vertex needs ``r`` neighbours among the vertices
    infected at step ``t-1`` exactly (seeds count as step 0).  With
    ``count_all_infected`` every earlier infection counts instead.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    seeds = np.nonzero(_as_mask(g.n, a0))[0]
    mask = _as_mask(g.n, ground)
    state = _spread(g.indptr, g.indices, seeds, r, mask, not count_all_infected)
    return _trace_from_rounds(g, state, seeds.size)


def run_bootstrap_oracle(g: Graph, a0: Iterable[int], r: int) -> set[int]:
    """Fixpoint by repeated full scans, one synchronous round per scan."""
    adj = [set(g.neighbors(v).tolist()) for v in range(g.n)]
    infected = {int(v) for v in np.nonzero(_as_mask(g.n, a0))[0]}
    while True:
        new = {v for v in range(g.n) if v not in infected and len(adj[v] & infected) >= r}
        if not new:
            return infected
        infected |= new


def run_restricted_oracle(g: Graph, a0: Iterable[int], ground: Iterable[int], r: int) -> list[set[int]]:
    """Per-step infected sets ``A'_0, A'_1, ...`` of the breeding-ground process."""
    adj = [set(g.neighbors(v).tolist()) for v in range(g.n)]
    allowed = {int(v) for v in np.nonzero(_as_mask(g.n, ground))[0]}
    history = [{int(v) for v in np.nonzero(_as_mask(g.n, a0))[0]}]
    last_new = set(history[0])
    while True:
        current = history[-1]
        new = {v for v in allowed - current if len(adj[v] & last_new) >= r}
        if not new:
            return history
        history.append(current | new)
        last_new = new


def nucleus_fraction(trace: Trace, ws: WeightSequence, psi_K: float) -> float:
    """Infected share of the weight carried by vertices of weight ``>= psi_K``."""
    start = ws.index_at_least(psi_K)
    if start >= ws.n:
        raise EmptyNucleusBand(f"no vertex has weight >= {psi_K!r}")
    band = ws.weights[start:]
    hit = trace.infection_round[start:] >= 0
    return float(band[hit].sum() / band.sum())


def check_fixpoint(g: Graph, trace: Trace, a0: Iterable[int], r: int) -> bool:
    """Every newly infected vertex has >= r infected neighbours; no outsider has r."""
    infected = trace.infection_round >= 0
    seeds = _as_mask(g.n, a0)
    src = np.repeat(np.arange(g.n), g.degrees())
    hits = np.bincount(src[infected[g.indices]], minlength=g.n)
    if np.any(hits[infected & ~seeds] < r):
        return False
    return not np.any(hits[~infected] >= r)
