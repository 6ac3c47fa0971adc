"""Concentration bounds and error estimators.

Three ingredients feed the component-level claim: a one-sided Hoeffding
deviation for per-box error rates, an exact one-sided binomial upper
confidence bound for the chance that a fresh input escapes every confirmed
box, and an operational-profile-weighted 0-1 error over enumerable domains.

All bounds read "with probability > 1 - delta over the evidence draw, the
true rate is at most epsilon", and the evidence must be held-out data that
is disjoint from whatever built the monitor: both bounds assume i.i.d.
draws, which fails on construction data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .geometry import AbstractionBox, box_contains, membership_matrix
from .monitor import Monitor, MonitoredSample, Polarity, confirmed_boxes

PROFILE_SUM_TOL = 1e-9
BISECTION_TOL = 1e-12


class NoEvidenceError(ValueError):
    """Raised when a guarantee is requested without any held-out evidence."""


def hoeffding_epsilon(m: int, delta: float) -> float:
    """One-sided Hoeffding deviation for a [0,1]-bounded mean over m draws:
    sqrt(ln(1/delta) / (2m))."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return math.sqrt(math.log(1.0 / delta) / (2.0 * m))


def log_binomial_cdf(k: int, n: int, p: float) -> float:
    """log P(X <= k) for X ~ Binomial(n, p), summed in log space so that
    n up to 1e6 stays finite."""
    if not 0 <= k <= n:
        raise ValueError("k must satisfy 0 <= k <= n")
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 0.0 if k == n else -math.inf
    i = np.arange(k + 1)
    log_terms = (
        gammaln(n + 1)
        - gammaln(i + 1)
        - gammaln(n - i + 1)
        + i * math.log(p)
        + (n - i) * math.log1p(-p)
    )
    return float(np.logaddexp.reduce(log_terms))


def clopper_pearson_upper(misses: int, n: int, delta: float) -> float:
    """Smallest p with P(Binomial(n, p) <= misses) <= delta: the exact
    one-sided upper confidence bound on a miss probability.

    Located by bisection on p to absolute tolerance 1e-12. misses = n gives
    the vacuous bound 1. misses = 0 matches 1 - delta**(1/n) exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= misses <= n:
        raise ValueError("misses must satisfy 0 <= misses <= n")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if misses == n:
        return 1.0
    log_delta = math.log(delta)
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = (lo + hi) / 2.0
        if log_binomial_cdf(misses, n, mid) <= log_delta:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class BoxGuarantee:
    """Per-box (epsilon, delta) claim backed by held-out samples.

    ``disagreements`` counts held-out samples whose actual correctness
    contradicts the box polarity: incorrect predictions inside a positive
    box, correct ones inside a negative box.
    """

    cluster_id: str
    holdout_count: int
    disagreements: int
    empirical_error: float
    epsilon: float
    delta: float

    @property
    def vacuous(self) -> bool:
        return self.epsilon >= 1.0

    @property
    def has_evidence(self) -> bool:
        return self.holdout_count > 0


def vacuous_box_guarantee(cluster_id: str, delta: float) -> BoxGuarantee:
    """Evidence-free placeholder: epsilon = 1 holds trivially, so the claim
    is sound but carries no information. Used when a confirmed box received
    no held-out samples."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return BoxGuarantee(
        cluster_id=cluster_id,
        holdout_count=0,
        disagreements=0,
        empirical_error=0.0,
        epsilon=1.0,
        delta=delta,
    )


def box_guarantee(
    box: AbstractionBox, holdout: Sequence[MonitoredSample], delta: float
) -> BoxGuarantee:
    """Empirical in-box disagreement rate plus the Hoeffding deviation,
    capped at 1.

    ``holdout`` must contain exactly the held-out samples that land in the
    box under its label; an empty list raises NoEvidenceError because the
    box then cannot carry a guarantee.
    """
    if not holdout:
        raise NoEvidenceError(
            f"box {box.cluster_id} has no held-out samples; no guarantee possible"
        )
    for s in holdout:
        if s.predicted != box.label:
            raise ValueError(
                f"sample predicted {s.predicted!r} does not belong to box "
                f"{box.cluster_id} with label {box.label!r}"
            )
        if not box_contains(box, s.features):
            raise ValueError(
                f"sample {s.features} lies outside box {box.cluster_id}"
            )
    m = len(holdout)
    if box.polarity is Polarity.POSITIVE:
        disagreements = sum(1 for s in holdout if not s.correct)
    else:
        disagreements = sum(1 for s in holdout if s.correct)
    empirical = disagreements / m
    epsilon = min(1.0, empirical + hoeffding_epsilon(m, delta))
    return BoxGuarantee(
        cluster_id=box.cluster_id,
        holdout_count=m,
        disagreements=disagreements,
        empirical_error=empirical,
        epsilon=epsilon,
        delta=delta,
    )


@dataclass(frozen=True)
class CoverageGuarantee:
    """(epsilon, delta) bound on the probability that a fresh input escapes
    every confirmed box of its predicted label."""

    n_holdout: int
    misses: int
    epsilon: float
    delta: float
    method: str

    @property
    def miss_rate(self) -> float:
        return self.misses / self.n_holdout

    @property
    def vacuous(self) -> bool:
        return self.epsilon >= 1.0


def coverage_misses(
    monitor: Monitor, holdout: Sequence[MonitoredSample], m_min: int | None = None
) -> int:
    """Count held-out samples that fall in no confirmed box of their
    predicted label (unknown labels always miss)."""
    confirmed = confirmed_boxes(monitor, m_min)
    by_label: dict[str, list[AbstractionBox]] = {}
    for b in confirmed:
        by_label.setdefault(b.label, []).append(b)
    misses = 0
    samples_by_label: dict[str, list[MonitoredSample]] = {}
    for s in holdout:
        samples_by_label.setdefault(s.predicted, []).append(s)
    for label, group in samples_by_label.items():
        boxes = by_label.get(label, [])
        if not boxes:
            misses += len(group)
            continue
        pts = np.array([s.features for s in group], dtype=float)
        covered = membership_matrix(boxes, pts).any(axis=1)
        misses += int((~covered).sum())
    return misses


def coverage_guarantee(
    monitor: Monitor,
    holdout: Sequence[MonitoredSample],
    m_min: int | None = None,
    delta: float = 0.05,
    method: str = "clopper-pearson",
) -> CoverageGuarantee:
    """Upper-bound the miss probability of the confirmed region.

    ``holdout`` must be disjoint from the monitor's construction data
    (caller's responsibility; the bound assumes i.i.d. fresh draws). The
    exact binomial bound is the default; ``method="hoeffding"`` selects the
    looser closed form.
    """
    holdout = list(holdout)
    if not holdout:
        raise ValueError("holdout must be non-empty")
    n = len(holdout)
    misses = coverage_misses(monitor, holdout, m_min)
    if method == "clopper-pearson":
        epsilon = clopper_pearson_upper(misses, n, delta)
    elif method == "hoeffding":
        epsilon = min(1.0, misses / n + hoeffding_epsilon(n, delta))
    else:
        raise ValueError(f"unknown coverage method {method!r}")
    return CoverageGuarantee(
        n_holdout=n, misses=misses, epsilon=epsilon, delta=delta, method=method
    )


@dataclass(frozen=True)
class OperationalProfile:
    """Probability of each input id being selected in operation; must sum
    to 1 within 1e-9."""

    probabilities: Mapping[str, float]

    def __post_init__(self) -> None:
        probs = dict(self.probabilities)
        for key, p in probs.items():
            if p < 0.0 or not math.isfinite(p):
                raise ValueError(f"probability for {key!r} must be finite and >= 0")
        total = math.fsum(probs[k] for k in sorted(probs))
        if abs(total - 1.0) > PROFILE_SUM_TOL:
            raise ValueError(f"profile probabilities sum to {total}, expected 1")
        object.__setattr__(self, "probabilities", probs)

    def mixed_with(self, other: "OperationalProfile", lam: float) -> "OperationalProfile":
        """Convex mixture lam * self + (1 - lam) * other over the union of ids."""
        if not 0.0 <= lam <= 1.0:
            raise ValueError("mixture weight must be in [0, 1]")
        keys = set(self.probabilities) | set(other.probabilities)
        return OperationalProfile(
            {
                k: lam * self.probabilities.get(k, 0.0)
                + (1.0 - lam) * other.probabilities.get(k, 0.0)
                for k in keys
            }
        )


def generalization_error(
    predictions: Mapping[str, bool], profile: OperationalProfile
) -> float:
    """Profile-weighted 0-1 loss over an enumerable domain: the sum of
    selection probabilities of the inputs predicted incorrectly."""
    missing = [k for k in profile.probabilities if k not in predictions]
    if missing:
        raise ValueError(
            f"no prediction recorded for profiled inputs: {sorted(missing)[:5]}"
        )
    return math.fsum(
        profile.probabilities[k]
        for k in sorted(profile.probabilities)
        if not predictions[k]
    )
