"""Command-line entry point: ``relsent <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data fault, 3 numeric fault.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from . import bundle
from .corpus import load_corpus, save_corpus
from .errors import DataError, NumericFault
from .features import HyperParams, load_embeddings
from .gradcheck import MODEL_KINDS, TOLERANCE, check_model
from .nn import RmsPropConfig
from .pipeline import (DEFAULT_EPOCHS, STAGES, TrainSettings, cross_validate, evaluate_relations,
                       evaluate_sentiment, evaluate_terms, format_report, format_table,
                       run_pipeline, to_jsonable, train_stage)
from .relation import RelationModel, extract_relations
from .sentiment import SentimentModel
from .tagger import TAGGER_KINDS, TermExtractor

log = logging.getLogger("relsent")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(to_jsonable(payload), indent=2, sort_keys=True))
    else:
        print(text)


def _settings(args) -> TrainSettings:
    hp = HyperParams()
    settings = TrainSettings(
        kind=args.kind,
        use_pos=args.use_pos,
        hp=hp,
        rms=RmsPropConfig(args.lr, args.rho, args.eps),
        threshold=0.5 if args.threshold is None else args.threshold,
    )
    if args.epochs is not None:
        settings.epochs = {s: args.epochs for s in STAGES}
    if args.embeddings:
        settings.vocab, settings.word_table = load_embeddings(args.embeddings, args.trim, hp.d_word)
        log.info("loaded %d word vectors from %s", len(settings.vocab) - 2, args.embeddings)
    else:
        print("warning: no --embeddings given; word vectors are randomly initialised", file=sys.stderr)
    return settings


def _print_history(label: str, history: Sequence[float]) -> None:
    for epoch, loss in enumerate(history, start=1):
        print(f"{label} epoch {epoch:3d}  mean loss {loss:.6f}")


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    if not corpus:
        raise DataError(f"{args.corpus}: corpus is empty")
    settings = _settings(args)
    model = train_stage(args.stage, corpus, settings, args.seed)
    if isinstance(model, TermExtractor):
        for m in model.models:
            _print_history(f"{m.kind}[{'+'.join(m.roles)}]", m.loss_history)
    else:
        _print_history(args.stage, model.loss_history)
    if isinstance(model, RelationModel) and model.training_stats.get("unreachable"):
        st = model.training_stats
        print(f"note: {st['unreachable']} of {st['gold_relations']} gold relations exceed the distance filter")
    bundle.save_bundle(model, args.out)
    print(f"wrote {args.stage} model to {args.out}")
    return EXIT_OK


def predict_with(model, corpus):
    if isinstance(model, TermExtractor):
        return [r.with_annotations(*model.extract(r)) for r in corpus]
    if isinstance(model, SentimentModel):
        return [r.with_annotations(r.aspects, model.label_opinions(r), r.relations) for r in corpus]
    rels = extract_relations(model, corpus)
    return [r.with_annotations(r.aspects, r.opinions, rel) for r, rel in zip(corpus, rels)]


def cmd_predict(args) -> int:
    model = bundle.load_bundle(args.model)
    if isinstance(model, RelationModel) and args.threshold is not None:
        model.threshold = args.threshold
    save_corpus(predict_with(model, load_corpus(args.corpus)), args.out)
    print(f"wrote predictions to {args.out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    if not args.model or len(args.model) != 3:
        raise UsageError("pipeline needs three --model bundles (terms, sentiment, relation)")
    models = {}
    for path in args.model:
        m = bundle.load_bundle(path)
        if m.BUNDLE_KIND in models:
            raise UsageError(f"two {m.BUNDLE_KIND} bundles given")
        models[m.BUNDLE_KIND] = m
    out = run_pipeline(models["terms"], models["sentiment"], models["relation"],
                       load_corpus(args.corpus), args.threshold)
    save_corpus(out, args.out)
    print(f"wrote {len(out)} annotated reviews to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gold = load_corpus(args.corpus)
    if args.mode == "cv":
        stages = args.stages or list(STAGES)
        report = cross_validate(gold, args.k, args.seed, stages, _settings(args))
        _emit(args, report, format_report(report) + f"\n\n{args.k}-fold cross-validation, seed {args.seed}")
        return EXIT_OK

    if args.pred:
        pred = load_corpus(args.pred)
    elif args.model:
        model = bundle.load_bundle(args.model[0])
        if isinstance(model, RelationModel) and args.threshold is not None:
            model.threshold = args.threshold
        pred = predict_with(model, gold)
    else:
        raise UsageError("evaluate needs --pred or --model")

    if args.mode == "terms":
        report = evaluate_terms(gold, pred)
    elif args.mode == "sentiment":
        report = evaluate_sentiment(gold, pred)
    else:
        report = {"relations": evaluate_relations(gold, pred)}
    _emit(args, report, format_report(to_jsonable(report)))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    kinds = MODEL_KINDS if args.kind == "all" else (args.kind,)
    results = {k: check_model(k, args.seed, plant_bug=args.plant_bug) for k in kinds}
    failed = [k for k, r in results.items() if max(r.values()) > TOLERANCE]
    rows = [(f"{k}:{name}", err, "ok" if err <= TOLERANCE else "FAIL")
            for k, r in results.items() for name, err in r.items()]
    payload = {"tolerance": TOLERANCE, "results": results, "failed": failed}
    _emit(args, payload, format_table(["parameter", "max rel. error", ""], [
        (n, f"{e:.3e}", s) for n, e, s in rows]))
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_inspect(args) -> int:
    summary = bundle.inspect_bundle(args.model[0])
    model = bundle.load_bundle(args.model[0])
    if isinstance(model, TermExtractor):
        summary["layer_sizes"] = {"+".join(m.roles): m.layer_sizes() for m in model.models}
    else:
        summary["layer_sizes"] = model.layer_sizes()
    text = "\n".join(f"{k}: {v}" for k, v in summary.items() if k != "parameters")
    text += "\n" + format_table(["parameter", "shape"], [(n, "x".join(map(str, s)) or "scalar")
                                                          for n, s in summary["parameters"].items()])
    _emit(args, summary, text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--embeddings", help="word2vec text file; random init when omitted")
    training.add_argument("--trim", type=int, default=200_000, help="keep this many embedding rows")
    training.add_argument("--epochs", type=int, help=f"override the per-stage defaults {DEFAULT_EPOCHS}")
    training.add_argument("--kind", choices=TAGGER_KINDS, default="stacked")
    training.add_argument("--use-pos", action=argparse.BooleanOptionalAction, default=None,
                          help="POS one-hot features for the tagger (default: on for stacked/joint)")
    training.add_argument("--lr", type=float, default=0.001)
    training.add_argument("--rho", type=float, default=0.9)
    training.add_argument("--eps", type=float, default=1e-6)

    threshold = argparse.ArgumentParser(add_help=False)
    threshold.add_argument("--threshold", type=float, default=None,
                           help="relation decision threshold (default 0.5)")

    p = _Parser(prog="relsent", description="Aspect/opinion extraction, opinion sentiment and relations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", parents=[common, training, threshold], help="train one stage")
    t.add_argument("stage", choices=STAGES)
    t.add_argument("--corpus", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common, threshold], help="run one model over a corpus")
    pr.add_argument("--model", required=True)
    pr.add_argument("--corpus", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    pl = sub.add_parser("pipeline", parents=[common, threshold], help="run all three stages")
    pl.add_argument("--model", action="append", help="terms, sentiment and relation bundles")
    pl.add_argument("--corpus", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)

    ev = sub.add_parser("evaluate", parents=[common, training, threshold], help="score predictions")
    ev.add_argument("mode", choices=STAGES + ("cv",))
    ev.add_argument("--corpus", required=True, help="gold corpus")
    ev.add_argument("--pred", help="predicted corpus")
    ev.add_argument("--model", action="append", help="bundle to predict with")
    ev.add_argument("--k", type=int, default=10)
    ev.add_argument("--stages", nargs="+", choices=STAGES, help="cv: stages to run")
    ev.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    g.add_argument("--kind", choices=MODEL_KINDS + ("all",), default="all")
    g.add_argument("--plant-bug", action="store_true", help="double every analytic gradient")
    g.set_defaults(func=cmd_gradcheck)

    i = sub.add_parser("inspect", parents=[common], help="describe a model bundle")
    i.add_argument("--model", action="append", required=True)
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"relsent: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFault as exc:
        print(f"relsent: numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, IndexError) as exc:
        print(f"relsent: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
