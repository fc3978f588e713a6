"""Three-stage pipeline, per-stage evaluation and the k-fold protocol."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import (PRF, Accuracy, Review, kfold, macro_average, relation_prf, sentiment_accuracy,
                     strict_prf)
from .errors import DataError
from .features import HyperParams, Vocabulary
from .nn import Parameter, RmsPropConfig
from .relation import RelationModel, extract_relations, filter_recall, train_relation
from .sentiment import (SentimentModel, gold_labels, majority_baseline, predict_labels,
                        train_sentiment)
from .tagger import TermExtractor, train_term_extractor

log = logging.getLogger(__name__)

STAGES = ("terms", "sentiment", "relations")
DEFAULT_EPOCHS = {"terms": 15, "sentiment": 14, "relations": 28}


def run_pipeline(terms: TermExtractor, sentiment: SentimentModel, relation: RelationModel,
                 corpus: Sequence[Review], threshold: Optional[float] = None) -> list[Review]:
    """Annotate raw reviews: spans from stage one, sentiment for the
    predicted opinions, then relations among the predicted spans."""
    out = []
    for review in corpus:
        aspects, opinions = terms.extract(review)
        if opinions:
            opinions = sentiment.label_opinions(review, opinions)
        annotated = review.with_annotations(aspects, opinions)
        if aspects and opinions:
            annotated.relations = extract_relations(relation, [annotated], threshold)[0]
        out.append(annotated)
    return out


# ---------------------------------------------------------------------------
# evaluation of prediction files


def _align(gold: Sequence[Review], pred: Sequence[Review]) -> None:
    if [r.id for r in gold] != [r.id for r in pred]:
        raise DataError("gold and predicted corpora list different review ids")


def evaluate_terms(gold: Sequence[Review], pred: Sequence[Review]) -> dict[str, PRF]:
    _align(gold, pred)
    return {
        "aspects": strict_prf([r.aspects for r in gold], [r.aspects for r in pred]),
        "opinions": strict_prf([r.opinions for r in gold], [r.opinions for r in pred]),
    }


def evaluate_sentiment(gold: Sequence[Review], pred: Sequence[Review]) -> dict[str, Accuracy]:
    """Accuracy over gold opinion terms; predictions must label the same spans."""
    _align(gold, pred)
    predicted = []
    for g, p in zip(gold, pred):
        if [(o.start, o.end) for o in g.opinions] != [(o.start, o.end) for o in p.opinions]:
            raise DataError(f"review {g.id!r}: predicted opinions differ from gold opinions")
        predicted += [o.sentiment for o in p.opinions]
    gl = gold_labels(gold)
    return {
        "positive_only": sentiment_accuracy(gl, majority_baseline(gold)),
        "model": sentiment_accuracy(gl, predicted),
    }


def evaluate_relations(gold: Sequence[Review], pred: Sequence[Review]) -> PRF:
    _align(gold, pred)
    return relation_prf([r.relation_spans() for r in gold], [r.relation_spans() for r in pred])


# ---------------------------------------------------------------------------
# cross-validation


@dataclass
class TrainSettings:
    """Everything the three trainers share."""

    kind: str = "stacked"
    use_pos: Optional[bool] = None
    epochs: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_EPOCHS))
    hp: HyperParams = field(default_factory=HyperParams)
    rms: RmsPropConfig = field(default_factory=RmsPropConfig)
    vocab: Optional[Vocabulary] = None
    word_table: Optional[Parameter] = None
    threshold: float = 0.5


def train_stage(stage: str, corpus: Sequence[Review], settings: TrainSettings, seed: int):
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    common = dict(hp=settings.hp, vocab=settings.vocab, word_table=settings.word_table,
                  rms=settings.rms, seed=seed)
    epochs = settings.epochs[stage]
    if stage == "terms":
        return train_term_extractor(corpus, settings.kind, use_pos=settings.use_pos,
                                    epochs=epochs, **common)
    if stage == "sentiment":
        return train_sentiment(corpus, epochs=epochs, **common)
    model = train_relation(corpus, epochs=epochs, **common)
    model.threshold = settings.threshold
    return model


def evaluate_fold(stage: str, model, test: Sequence[Review]) -> dict:
    if stage == "terms":
        pred = [r.with_annotations(*model.extract(r)) for r in test]
        return evaluate_terms(test, pred)
    if stage == "sentiment":
        gl = gold_labels(test)
        return {"positive_only": sentiment_accuracy(gl, majority_baseline(test)),
                "model": sentiment_accuracy(gl, predict_labels(model, test))}
    rels = extract_relations(model, test)
    pred = [r.with_annotations(r.aspects, r.opinions, rel) for r, rel in zip(test, rels)]
    return {"relations": evaluate_relations(test, pred)}


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(corpus: Sequence[Review], k: int = 10, seed: int = 0,
                   stages: Sequence[str] = STAGES, settings: Optional[TrainSettings] = None) -> dict:
    """Train and test every requested stage on each fold (gold spans feed the
    sentiment and relation stages) and macro-average the fold scores."""
    settings = settings or TrainSettings()
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ValueError(f"unknown stages {unknown}")
    plan = kfold(corpus, k, seed)
    folds: list[dict] = []
    for f, (train, test) in enumerate(plan.splits(corpus)):
        scores = {}
        for stage in stages:
            model = train_stage(stage, train, settings, fold_seed(seed, f))
            scores.update(evaluate_fold(stage, model, test))
        folds.append(scores)
        log.info("fold %d/%d done", f + 1, k)

    report: dict = {"k": k, "seed": seed, "fold_sizes": plan.fold_sizes()}
    for key in ("aspects", "opinions", "relations"):
        if key in folds[0]:
            report[key] = macro_average([fs[key] for fs in folds])
    if "model" in folds[0]:
        for key in ("positive_only", "model"):
            accs = [fs[key] for fs in folds]
            report[key] = {
                "accuracy": float(np.mean([a.accuracy for a in accs])),
                "correct": float(np.mean([a.correct for a in accs])),
                "incorrect": float(np.mean([a.incorrect for a in accs])),
            }
    if "relations" in stages:
        kept, total = filter_recall(corpus, settings.hp.max_distance)
        report["distance_filter_recall"] = kept / total if total else 1.0
    return report


# ---------------------------------------------------------------------------
# text reports


def _fmt(x) -> str:
    return f"{x:.3f}" if isinstance(x, float) else str(x)


def format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(header)] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_report(report: dict) -> str:
    """Aligned-column rendering of term, sentiment and relation scores."""
    blocks = []
    terms = [(role.capitalize(), report[role]) for role in ("aspects", "opinions") if role in report]
    if terms:
        blocks.append(format_table(
            ["Role", "P", "R", "F1"],
            [(name, _get(s, "precision"), _get(s, "recall"), _get(s, "f1")) for name, s in terms]))
    if "model" in report:
        rows = []
        for name, key in (("Positive Only", "positive_only"), ("Model", "model")):
            a = report[key]
            rows.append((name, _get(a, "accuracy"), _get(a, "correct"), _get(a, "incorrect")))
        blocks.append(format_table(["Sentiment", "Accuracy", "#Correct", "#Incorrect"], rows))
    if "relations" in report:
        s = report["relations"]
        blocks.append(format_table(["Relations", "P", "R", "F1"],
                                   [("Model", _get(s, "precision"), _get(s, "recall"), _get(s, "f1"))]))
    return "\n\n".join(blocks)


def _get(obj, key):
    return obj[key] if isinstance(obj, dict) else getattr(obj, key)


def to_jsonable(obj):
    if isinstance(obj, (PRF, Accuracy)):
        return obj.as_dict()
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj
