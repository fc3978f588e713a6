"""The k-fold protocol: train on k-1 folds, score the held-out fold, macro-average.

Run: python demos/04_cross_validation.py
The same report comes from `relsent evaluate cv --corpus FILE --k 10`.
"""

from __future__ import annotations

from relsent.corpus import kfold
from relsent.pipeline import TrainSettings, cross_validate, format_report
from relsent.synthetic import load_synthetic

corpus = load_synthetic()
plan = kfold(corpus, k=5, seed=0)
print("fold sizes:", plan.fold_sizes())

settings = TrainSettings(kind="joint")  # default epochs 15/14/28
report = cross_validate(corpus, k=5, seed=0, settings=settings)
print(format_report(report))
print(f"\ngold relations within the 20-word filter: {report['distance_filter_recall']:.0%}")
