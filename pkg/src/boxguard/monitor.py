"""Runtime monitor construction and traffic-light queries.

Logged decisions are split per predicted label into correct and incorrect
groups, each group is clustered, and every cluster becomes one box. Queries
compare a fresh input against the boxes of its predicted label and answer
Accept, Reject, or Uncertain.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .clustering import DEFAULT_MAX_ITER, DEFAULT_TOL, choose_k, kmeans
from .geometry import (
    AbstractionBox,
    DimensionMismatchError,
    Polarity,
    box_contains,
    box_from_points,
    box_inflate,
    feature_vector,
)


@dataclass(frozen=True)
class MonitoredSample:
    """One logged decision: features, predicted label, and whether the
    prediction matched ground truth."""

    features: tuple[float, ...]
    predicted: str
    correct: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", feature_vector(self.features))
        if not self.predicted:
            raise ValueError("predicted label must be non-empty")
        object.__setattr__(self, "correct", bool(self.correct))


@dataclass(frozen=True)
class MonitorConfig:
    """Construction parameters. ``k=None`` selects the cluster count per
    group via choose_k. ``m_min`` is the confirmation threshold used when a
    box must be backed by enough abstracted samples to carry a guarantee."""

    k: int | None = None
    seed: int = 0
    tau: float = 0.0
    inflation_floor: float = 0.0
    m_min: int = 1
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1 when given")
        if self.tau < 0.0:
            raise ValueError("tau must be >= 0")
        if self.inflation_floor < 0.0:
            raise ValueError("inflation_floor must be >= 0")
        if self.m_min < 1:
            raise ValueError("m_min must be >= 1")


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class Verdict:
    """Traffic-light answer plus the cluster ids of every box hit."""

    decision: Decision
    boxes_hit: tuple[str, ...]

    @property
    def covered(self) -> bool:
        """False flags a no-box-coverage query (out of distribution or
        unknown label)."""
        return bool(self.boxes_hit)


@dataclass(frozen=True)
class Monitor:
    """Immutable collection of boxes grouped by (label, polarity).

    ``group_counts`` records how many training samples fed each group.
    Built monitors are safe to query from any number of concurrent readers.
    """

    dimension: int
    boxes: tuple[AbstractionBox, ...]
    config: MonitorConfig
    group_counts: tuple[tuple[str, str, int], ...]
    _index: dict = field(
        init=False, compare=False, repr=False, hash=False, default=None
    )

    def __post_init__(self) -> None:
        for b in self.boxes:
            if b.dimension != self.dimension:
                raise DimensionMismatchError(
                    f"box {b.cluster_id} has dimension {b.dimension}, "
                    f"monitor has {self.dimension}"
                )
        ids = [b.cluster_id for b in self.boxes]
        if len(set(ids)) != len(ids):
            raise ValueError("box cluster ids must be unique within a monitor")
        index: dict[tuple[str, Polarity], tuple[np.ndarray, np.ndarray, tuple[str, ...]]] = {}
        for key in {(b.label, b.polarity) for b in self.boxes}:
            group = [b for b in self.boxes if (b.label, b.polarity) == key]
            index[key] = (
                np.array([b.center for b in group], dtype=float),
                np.array([b.radius for b in group], dtype=float),
                tuple(b.cluster_id for b in group),
            )
        object.__setattr__(self, "_index", index)

    def boxes_for(self, label: str, polarity: Polarity) -> tuple[AbstractionBox, ...]:
        return tuple(
            b for b in self.boxes if b.label == label and b.polarity == polarity
        )

    def labels(self) -> tuple[str, ...]:
        return tuple(sorted({b.label for b in self.boxes}))

    def _hits(self, label: str, polarity: Polarity, x: np.ndarray) -> tuple[str, ...]:
        entry = self._index.get((label, polarity))
        if entry is None:
            return ()
        centers, radii, ids = entry
        inside = (np.abs(x[None, :] - centers) <= radii).all(axis=1)
        return tuple(ids[i] for i in np.flatnonzero(inside))


def _group_seed(seed: int, label: str, polarity: Polarity) -> int:
    """Stable per-group clustering seed, independent of group enumeration
    order and of Python's salted hash()."""
    digest = hashlib.sha256(f"{seed}|{label}|{polarity.value}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_monitor(
    samples: Iterable[MonitoredSample], config: MonitorConfig | None = None
) -> Monitor:
    """Cluster logged decisions per (label, correctness) group and abstract
    each cluster into one box.

    Samples are order-normalised by a canonical sort (features, then label)
    before clustering, so the result does not depend on log order. Positive
    boxes come from correct samples only, negative boxes from incorrect
    ones; a configured k is capped at the group size.
    """
    config = config or MonitorConfig()
    samples = list(samples)
    if not samples:
        raise ValueError("cannot build a monitor from an empty sample set")
    dim = len(samples[0].features)
    for s in samples:
        if len(s.features) != dim:
            raise DimensionMismatchError("samples have mixed feature dimensions")

    groups: dict[tuple[str, Polarity], list[MonitoredSample]] = {}
    for s in samples:
        key = (s.predicted, Polarity.POSITIVE if s.correct else Polarity.NEGATIVE)
        groups.setdefault(key, []).append(s)

    boxes: list[AbstractionBox] = []
    group_counts: list[tuple[str, str, int]] = []
    counter = 0
    for label, polarity in sorted(groups, key=lambda g: (g[0], g[1].value)):
        members = sorted(groups[(label, polarity)], key=lambda s: s.features)
        group_counts.append((label, polarity.value, len(members)))
        k = choose_k(len(members)) if config.k is None else min(config.k, len(members))
        result = kmeans(
            [s.features for s in members],
            k=k,
            seed=_group_seed(config.seed, label, polarity),
            max_iter=config.max_iter,
            tol=config.tol,
        )
        for cluster in range(result.k):
            points = [
                members[i].features
                for i, a in enumerate(result.assignments)
                if a == cluster
            ]
            box = box_from_points(points, f"b{counter}", label, polarity)
            boxes.append(box_inflate(box, config.tau, config.inflation_floor))
            counter += 1

    return Monitor(
        dimension=dim,
        boxes=tuple(boxes),
        config=config,
        group_counts=tuple(group_counts),
    )


def monitor_query(monitor: Monitor, x: Sequence[float], predicted: str) -> Verdict:
    """Compare one input against the boxes of its predicted label.

    Inside positive boxes only: Accept. Inside negative boxes only: Reject.
    Inside both, or inside none (including an unknown label): Uncertain.
    """
    vec = np.asarray(feature_vector(x), dtype=float)
    if vec.shape[0] != monitor.dimension:
        raise DimensionMismatchError(
            f"query vector has {vec.shape[0]} dimensions, monitor has {monitor.dimension}"
        )
    pos = monitor._hits(predicted, Polarity.POSITIVE, vec)
    neg = monitor._hits(predicted, Polarity.NEGATIVE, vec)
    if pos and not neg:
        decision = Decision.ACCEPT
    elif neg and not pos:
        decision = Decision.REJECT
    else:
        decision = Decision.UNCERTAIN
    return Verdict(decision=decision, boxes_hit=tuple(pos) + tuple(neg))


def confirmed_boxes(
    monitor: Monitor, m_min: int | None = None
) -> tuple[AbstractionBox, ...]:
    """Boxes abstracted from at least m_min samples; only these are eligible
    to carry statistical guarantees."""
    if m_min is None:
        m_min = monitor.config.m_min
    if m_min < 1:
        raise ValueError("m_min must be >= 1")
    return tuple(b for b in monitor.boxes if b.sample_count >= m_min)


def replay_verdicts(
    monitor: Monitor, samples: Iterable[MonitoredSample]
) -> list[Verdict]:
    """Query every sample with its own predicted label (consistency checks)."""
    return [monitor_query(monitor, s.features, s.predicted) for s in samples]
