"""Task metrics, cross-validation protocol and report assembly.

Three metrics: accuracy (fraction of predictions within a score-difference
threshold of the truth), average score difference (mean absolute difference),
and a per-subject Kendall distance over the relative ordering of each
subject's triples. Accuracy is better high; the other two better low.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import extract_features, schema_for
from .model import (
    ForestParams,
    feature_importance,
    map_score,
    params_with_seed,
    predict_batch,
    train,
)

K_FAMILIES = ("sumProfTerms", "simCos", "simCosVec")


def accuracy(pairs, threshold: int = 2) -> float:
    """Fraction of (predicted, truth) pairs with |difference| <= threshold."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("accuracy of an empty pair list is undefined")
    hits = sum(1 for p, t in pairs if abs(p - t) <= threshold)
    return hits / len(pairs)


def asd(pairs) -> float:
    """Average score difference: mean |predicted - truth|."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("ASD of an empty pair list is undefined")
    return sum(abs(p - t) for p, t in pairs) / len(pairs)


def _group_distance(group) -> float:
    """Normalized Kendall distance for one subject's (predicted, truth) list.

    Discordant pairs count 1; pairs tied in exactly one ordering count 0.5;
    the total is divided by n(n-1)/2.
    """
    n = len(group)
    total = 0.0
    for i in range(n):
        pi, ti = group[i]
        for j in range(i + 1, n):
            pj, tj = group[j]
            dp = int(pi > pj) - int(pi < pj)
            dt = int(ti > tj) - int(ti < tj)
            if dp * dt < 0:
                total += 1.0
            elif (dp == 0) != (dt == 0):
                total += 0.5
    return total / (n * (n - 1) / 2)


def kendall_distance(groups) -> float:
    """Mean per-subject Kendall distance; subjects with < 2 triples are excluded."""
    groups = [list(g) for g in groups]
    distances = [_group_distance(g) for g in groups if len(g) >= 2]
    if not distances:
        raise ValueError("kendall distance needs at least one subject with >= 2 triples")
    return sum(distances) / len(distances)


@dataclass
class SubjectStats:
    instances: int
    accuracy: float
    asd: float
    kendall: float | None


@dataclass
class EvaluationReport:
    relation: str
    accuracy: float
    asd: float
    kendall: float | None
    instances: int
    per_subject: dict[str, SubjectStats] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "relation": self.relation,
            "accuracy": self.accuracy,
            "asd": self.asd,
            "kendall": self.kendall,
            "instances": self.instances,
            "per_subject": {
                s: {
                    "instances": st.instances,
                    "accuracy": st.accuracy,
                    "asd": st.asd,
                    "kendall": st.kendall,
                }
                for s, st in self.per_subject.items()
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def evaluate_predictions(relation, rows, threshold: int = 2) -> EvaluationReport:
    """Build a report from (subject, predicted, truth) rows."""
    rows = list(rows)
    pairs = [(p, t) for _, p, t in rows]
    by_subject: dict[str, list[tuple[int, int]]] = {}
    for subject, p, t in rows:
        by_subject.setdefault(subject, []).append((p, t))
    try:
        kendall = kendall_distance(by_subject.values())
    except ValueError:
        kendall = None
    per_subject = {
        s: SubjectStats(
            instances=len(g),
            accuracy=accuracy(g, threshold),
            asd=asd(g),
            kendall=_group_distance(g) if len(g) >= 2 else None,
        )
        for s, g in by_subject.items()
    }
    return EvaluationReport(
        relation=relation,
        accuracy=accuracy(pairs, threshold),
        asd=asd(pairs),
        kendall=kendall,
        instances=len(pairs),
        per_subject=per_subject,
    )


def assign_folds(subjects, folds: int, seed: int) -> list[list]:
    """Shuffle subjects with the seed and split into `folds` contiguous chunks.

    Chunk sizes differ by at most one; subjects stay whole within a fold.
    """
    subjects = list(subjects)
    if len(subjects) < folds:
        raise ValueError(f"need at least {folds} subjects for {folds} folds, got {len(subjects)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(subjects))
    shuffled = [subjects[i] for i in order]
    return [list(chunk) for chunk in np.array_split(np.array(shuffled, dtype=object), folds)]


def cross_validate(
    pairs,
    ctx,
    relation: str,
    params: ForestParams,
    folds: int = 5,
    seed: int = 0,
    accuracy_threshold: int = 2,
    jobs: int = 1,
) -> EvaluationReport:
    """Subject-level k-fold cross-validation; fully reproducible for a seed.

    All triples of one subject share a fold. Features are extracted once
    (they depend only on the corpus and KB, never on labels); each fold's
    forest is seeded from a per-fold stream derived from `seed`.
    """
    pairs = list(pairs)
    if len(pairs) < folds:
        raise ValueError(f"need at least {folds} labeled pairs for {folds} folds")
    schema_for(relation)  # validates the relation name
    subjects = list(dict.fromkeys(p.subject for p in pairs))
    chunks = assign_folds(subjects, folds, seed)
    fold_of = {s: i for i, chunk in enumerate(chunks) for s in chunk}
    fold_seeds = np.random.SeedSequence(seed).generate_state(folds, dtype=np.uint64)

    vectors = [extract_features(ctx, relation, p.subject, p.object) for p in pairs]
    rows = []
    for i in range(folds):
        train_instances = [
            (fv, p.score) for fv, p in zip(vectors, pairs) if fold_of[p.subject] != i
        ]
        held_out = [(fv, p) for fv, p in zip(vectors, pairs) if fold_of[p.subject] == i]
        if not held_out:
            continue
        forest = train(train_instances, params_with_seed(params, fold_seeds[i]), jobs=jobs)
        X = np.array([fv.values for fv, _ in held_out], dtype=np.float64)
        raw = predict_batch(forest, X)
        for (fv, p), s_r in zip(held_out, raw):
            rows.append((p.subject, map_score(float(s_r)), p.score))
    return evaluate_predictions(relation, rows, accuracy_threshold)


def _family_of(name: str) -> str | None:
    """The k-grid family a feature name belongs to, if any."""
    for fam in K_FAMILIES:
        if name.startswith(fam) and name[len(fam) :].isdigit():
            return fam
    return None


def importance_report(forest, collapse: bool = False) -> list[tuple[str, float]]:
    """Feature importances ranked descending (ties alphabetical).

    With collapse=True each k-grid family keeps only its highest-importance
    variant, mirroring reports that show one row per feature family.
    """
    imp = feature_importance(forest)
    if collapse:
        best: dict[str, tuple[str, float]] = {}
        rows = []
        for name, weight in imp.items():
            fam = _family_of(name)
            if fam is None:
                rows.append((name, weight))
            elif fam not in best or weight > best[fam][1]:
                best[fam] = (name, weight)
        rows.extend(best.values())
        imp = dict(rows)
    return sorted(imp.items(), key=lambda kv: (-kv[1], kv[0]))
