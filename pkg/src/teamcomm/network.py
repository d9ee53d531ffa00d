"""Adjacency pairs, per-DA-pair communication networks, and their metrics.

Nodes are the five roles of the analysed team; edge ``(i, j)`` carries the
number of adjacency pairs in which role ``i`` spoke and role ``j`` answered.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from teamcomm import kernels
from teamcomm.model import TEAM_SIZE, DaPair, Utterance, role_of

DEFAULT_MAX_GAP_MS = 5_000
ALL = "All"


class Normalization(Enum):
    PAIRS = "pairs"
    UTTERANCES = "utterances"


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class AdjacencyPair:
    sender: int
    receiver: int
    da_pair: DaPair
    gap_ms: int
    time_ms: int


@dataclass(frozen=True)
class CommNetwork:
    tag: DaPair | str
    weights: tuple[tuple[int, ...], ...]

    @classmethod
    def empty(cls, tag=ALL) -> "CommNetwork":
        return cls(tag, tuple((0,) * TEAM_SIZE for _ in range(TEAM_SIZE)))

    @property
    def pair_count(self) -> int:
        return sum(map(sum, self.weights))

    @property
    def edges(self) -> dict[tuple[int, int], int]:
        return {
            (i, j): w
            for i, row in enumerate(self.weights)
            for j, w in enumerate(row)
            if w
        }


@dataclass(frozen=True)
class NetworkMetrics:
    rho: float
    c_od: float
    c_id: float
    out_degree: tuple[int, ...]
    in_degree: tuple[int, ...]
    pair_count: int
    normalization: Normalization
    degenerate: bool


def extract_adjacency_pairs(utterances, max_gap_ms: int = DEFAULT_MAX_GAP_MS) -> list[AdjacencyPair]:
    """Consecutive utterances by different speakers, at most ``max_gap_ms`` apart."""
    utterances = list(utterances)
    starts = [u.start_ms for u in utterances]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise ContractError("utterances must be sorted by start_ms")
    speakers = [u.speaker for u in utterances]
    out = []
    for i in kernels.adjacent_pair_indices(starts, speakers, max_gap_ms):
        a, b = utterances[i], utterances[i + 1]
        out.append(AdjacencyPair(a.speaker, b.speaker, DaPair(a.da, b.da), b.start_ms - a.start_ms, a.start_ms))
    return out


def build_networks(pairs, tags=()) -> dict:
    """One network per tag plus ``ALL`` aggregating every pair."""
    mats = {tag: [[0] * TEAM_SIZE for _ in range(TEAM_SIZE)] for tag in (*tags, ALL)}
    for p in pairs:
        i, j = role_of(p.sender), role_of(p.receiver)
        mats[ALL][i][j] += 1
        m = mats.get(p.da_pair)
        if m is not None:
            m[i][j] += 1
    return {tag: CommNetwork(tag, tuple(map(tuple, m))) for tag, m in mats.items()}


def density(net: CommNetwork) -> float:
    w = net.weights
    n = len(w)
    linked = sum(1 for i in range(n) for j in range(i + 1, n) if w[i][j] or w[j][i])
    return linked / (n * (n - 1) // 2)


def centralization(
    net: CommNetwork,
    outgoing: bool = True,
    normalization: Normalization = Normalization.PAIRS,
    utterance_count: int | None = None,
) -> float:
    if normalization is Normalization.UTTERANCES:
        if utterance_count is None:
            raise ContractError("utterance normalization needs utterance_count")
        u = utterance_count
    else:
        u = net.pair_count
    spread, _ = kernels.degree_spread(net.weights, outgoing)
    if u == 0:
        return 0.0
    return spread / ((len(net.weights) - 1) * u)


def metrics(
    net: CommNetwork,
    normalization: Normalization = Normalization.PAIRS,
    utterance_count: int | None = None,
) -> NetworkMetrics:
    w = net.weights
    out_deg = tuple(sum(row) for row in w)
    in_deg = tuple(sum(row[j] for row in w) for j in range(len(w)))
    u = net.pair_count if normalization is Normalization.PAIRS else utterance_count
    return NetworkMetrics(
        rho=density(net),
        c_od=centralization(net, True, normalization, utterance_count),
        c_id=centralization(net, False, normalization, utterance_count),
        out_degree=out_deg,
        in_degree=in_deg,
        pair_count=net.pair_count,
        normalization=normalization,
        degenerate=not net.pair_count or not u,
    )


def window_networks(utterances: tuple[Utterance, ...] | list[Utterance], tags=(), max_gap_ms=DEFAULT_MAX_GAP_MS):
    return build_networks(extract_adjacency_pairs(utterances, max_gap_ms), tags)
