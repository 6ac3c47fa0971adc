"""Composition of per-box and coverage claims into component- and
formula-level (epsilon, delta) guarantees.

The component rule is a conservative union bound: every constituent claim
pays its delta into the total, the error bound adds the coverage epsilon to
the worst per-box epsilon. Whenever either total reaches 1 the result is
flagged vacuous and downstream reports must surface that flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .monitor import Monitor, MonitoredSample, confirmed_boxes
from .speclang import Formula, ThreeValued, atoms_of
from .stats import (
    BoxGuarantee,
    CoverageGuarantee,
    NoEvidenceError,
    box_guarantee,
    coverage_guarantee,
    vacuous_box_guarantee,
)

IID_ASSUMPTION = (
    "held-out evidence is assumed to be drawn i.i.d. from the operational "
    "input distribution and to be disjoint from the monitor construction data"
)
WEIGHTED_CAVEAT = (
    "box weights are estimated from held-out counts; the weighted bound is "
    "an estimate and is excluded from soundness claims"
)


@dataclass(frozen=True)
class ComponentGuarantee:
    """Component-level claim: with probability > 1 - delta over the evidence
    draw, the operational error is at most epsilon."""

    epsilon: float
    delta: float
    coverage: CoverageGuarantee
    box_guarantees: tuple[BoxGuarantee, ...]
    weighted: bool
    assumption: str

    @property
    def vacuous(self) -> bool:
        return self.epsilon >= 1.0 or self.delta >= 1.0


def compose_component(
    coverage: CoverageGuarantee,
    box_guarantees: Sequence[BoxGuarantee],
    weighted: bool = False,
) -> ComponentGuarantee:
    """Union-bound combination of a coverage claim with per-box claims.

    epsilon = min(1, coverage.epsilon + max_b epsilon_b): if all constituent
    bounds hold, the operational error is at most the escape mass (counted
    in full) plus the worst in-box rate. delta = min(1, coverage.delta +
    sum_b delta_b) bounds the chance that any constituent fails.

    ``weighted=True`` replaces the max with a holdout-count-weighted average
    of the box epsilons; the weights are estimates, so the result is flagged
    and excluded from soundness claims.
    """
    boxes = tuple(box_guarantees)
    if not boxes:
        raise NoEvidenceError("no box guarantees to compose")
    if weighted:
        total = sum(b.holdout_count for b in boxes)
        if total == 0:
            raise NoEvidenceError("weighted composition needs held-out counts")
        box_term = sum(b.epsilon * b.holdout_count / total for b in boxes)
        assumption = f"{IID_ASSUMPTION}; {WEIGHTED_CAVEAT}"
    else:
        box_term = max(b.epsilon for b in boxes)
        assumption = IID_ASSUMPTION
    epsilon = min(1.0, coverage.epsilon + box_term)
    delta = min(1.0, coverage.delta + sum(b.delta for b in boxes))
    return ComponentGuarantee(
        epsilon=epsilon,
        delta=delta,
        coverage=coverage,
        box_guarantees=boxes,
        weighted=weighted,
        assumption=assumption,
    )


def assess_component(
    monitor: Monitor,
    holdout: Sequence[MonitoredSample],
    delta_box: float,
    delta_cov: float,
    m_min: int | None = None,
    method: str = "clopper-pearson",
    weighted: bool = False,
) -> ComponentGuarantee:
    """Full assessment pipeline: coverage bound plus one guarantee per
    confirmed box, composed into the component claim.

    A confirmed box that received no held-out samples gets the vacuous
    epsilon = 1 placeholder (sound but uninformative), which drives the
    composed bound to 1 and sets the vacuous flag rather than silently
    ignoring the box. Raises NoEvidenceError when the monitor has no
    confirmed boxes at all.
    """
    holdout = list(holdout)
    if not holdout:
        raise ValueError("holdout must be non-empty")
    confirmed = confirmed_boxes(monitor, m_min)
    if not confirmed:
        raise NoEvidenceError("monitor has no confirmed boxes; nothing to assess")
    coverage = coverage_guarantee(monitor, holdout, m_min, delta_cov, method)
    guarantees = []
    for box in confirmed:
        inside = [
            s
            for s in holdout
            if s.predicted == box.label
            and all(
                abs(s.features[j] - box.center[j]) <= box.radius[j]
                for j in range(box.dimension)
            )
        ]
        if inside:
            guarantees.append(box_guarantee(box, inside, delta_box))
        else:
            guarantees.append(vacuous_box_guarantee(box.cluster_id, delta_box))
    return compose_component(coverage, guarantees, weighted=weighted)


@dataclass(frozen=True)
class AtomContribution:
    """How one atomic proposition enters the formula-level claim."""

    name: str
    level: str
    epsilon: float
    delta: float
    evaluations: int
    delta_contribution: float


@dataclass(frozen=True)
class FormulaGuarantee:
    """Formula-level claim attached to a trace verdict.

    Instance-level atoms pay their delta once per evaluation the verdict
    consumed; model-level atoms pay once in total because their claim
    already quantifies over all draws. epsilon is the worst epsilon among
    contributing atoms.
    """

    epsilon: float
    delta: float
    verdict: ThreeValued
    contributions: tuple[AtomContribution, ...]
    total_evaluations: int

    @property
    def vacuous(self) -> bool:
        return self.delta >= 1.0


def compose_formula(
    formula: Formula,
    trace_verdict: ThreeValued,
    evaluations: Mapping[str, int],
    atom_guarantees: Mapping[str, tuple[float, float]] | None = None,
) -> FormulaGuarantee:
    """Lift per-atom (epsilon, delta) claims to the whole formula.

    Each atom's claim comes from its inline annotation or, failing that,
    from ``atom_guarantees``; an atom with neither is an error, as is a
    conflict between the two sources. Atoms the verdict never consulted
    (zero evaluations) contribute nothing.
    """
    atom_guarantees = dict(atom_guarantees or {})
    contributions = []
    for atom in atoms_of(formula):
        external = atom_guarantees.get(atom.name)
        if atom.bound is not None:
            if external is not None and tuple(external) != atom.bound:
                raise ValueError(
                    f"atom {atom.name!r} has conflicting inline and external "
                    f"guarantees: {atom.bound} vs {tuple(external)}"
                )
            eps, delta = atom.bound
        elif external is not None:
            eps, delta = external
        else:
            raise ValueError(f"atom {atom.name!r} has no (epsilon, delta) guarantee")
        count = int(evaluations.get(atom.name, 0))
        if count == 0:
            contribution = 0.0
        elif atom.level == "model":
            contribution = delta
        else:
            contribution = delta * count
        contributions.append(
            AtomContribution(
                name=atom.name,
                level=atom.level,
                epsilon=eps,
                delta=delta,
                evaluations=count,
                delta_contribution=contribution,
            )
        )
    contributing = [c for c in contributions if c.evaluations > 0]
    epsilon = max((c.epsilon for c in contributing), default=0.0)
    delta = min(1.0, sum(c.delta_contribution for c in contributions))
    return FormulaGuarantee(
        epsilon=epsilon,
        delta=delta,
        verdict=trace_verdict,
        contributions=tuple(contributions),
        total_evaluations=sum(c.evaluations for c in contributions),
    )
