"""Train the three stages on the bundled synthetic corpus and annotate raw text.

Run: python demos/03_train_and_annotate.py   (about a minute on one core)
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from relsent import bundle
from relsent.corpus import Review
from relsent.pipeline import (TrainSettings, evaluate_fold, format_report, run_pipeline, to_jsonable,
                              train_stage)
from relsent.synthetic import load_synthetic

corpus = load_synthetic()
print(f"{len(corpus)} training reviews, e.g. {' '.join(corpus[1].tokens)!r}")

settings = TrainSettings(kind="stacked", epochs={"terms": 30, "sentiment": 28, "relations": 56})
terms = train_stage("terms", corpus, settings, seed=0)
sentiment = train_stage("sentiment", corpus, settings, seed=0)
relation = train_stage("relations", corpus, settings, seed=0)

report = {}
report.update(evaluate_fold("terms", terms, corpus))
report.update(evaluate_fold("sentiment", sentiment, corpus))
report.update(evaluate_fold("relations", relation, corpus))
print("\nTraining-set scores\n" + format_report(to_jsonable(report)))

# Models round-trip through bundles without changing a single bit.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "terms.bin"
    bundle.save_bundle(terms, path)
    print(f"\nterms bundle: {path.stat().st_size} bytes, {bundle.inspect_bundle(path)['parameter_count']} floats")
    terms = bundle.load_bundle(path)

new = [
    Review("n1", "the screen is great but the keyboard is awful .".split(),
           ["DT", "NN", "VBZ", "JJ", "CC", "DT", "NN", "VBZ", "JJ", "."]),
    Review("n2", "i love the camera .".split(), ["PRP", "VBP", "DT", "NN", "."]),
]
for r in run_pipeline(terms, sentiment, relation, new):
    print("\n" + " ".join(r.tokens))
    for a, o in sorted(r.relation_spans()):
        print(f"  {' '.join(r.tokens[a.start:a.end])!r} <- {' '.join(r.tokens[o.start:o.end])!r} ({o.sentiment})")
    linked = {o for _, o in r.relation_spans()}
    for o in r.opinions:
        if o not in linked:
            print(f"  unlinked opinion {' '.join(r.tokens[o.start:o.end])!r} ({o.sentiment})")
