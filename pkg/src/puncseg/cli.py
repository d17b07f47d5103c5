"""Command-line pipeline driver.

Subcommands: prepare, split, train, classify, segment, eval-labels,
eval-boundaries, sweep, significance.  Shared segmenter/classifier
settings can come from an optional ``key = value`` config file; flags
override file values, and unknown config keys fail fast.  Data goes to
files or stdout, diagnostics to stderr, and output files are written
atomically (write then rename).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import tempfile
from pathlib import Path

from . import metrics, segmenter, textprep
from .classifier import ReplayClassifier, load_model, save_model, train_reference
from .errors import ConfigError, TooFewUnitsError, TooShortError, ToolkitError, WordMismatchError
from .external import ExternalAdapterConfig, ExternalClassifier
from .sepp import (
    PunctLabel,
    SeppDocument,
    LabeledToken,
    label_from_char,
    parse_sepp_file,
    strip_labels,
    write_sepp,
)

_DEFAULTS = {
    "window": 200,
    "stride": 1,
    "theta": 0.1,
    "segmenters": ".?",
    "pooling": "per_class",
    "classifier": None,
    "seed": 0,
}

CONFIG_KEYS = frozenset(_DEFAULTS)

_CONVERTERS = {
    "window": int,
    "stride": int,
    "theta": float,
    "segmenters": str,
    "pooling": str,
    "classifier": str,
    "seed": int,
}


def load_config_file(path) -> dict:
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, eq, raw = stripped.partition("=")
            if not eq:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                values[key] = _CONVERTERS[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: bad value for {key}: {exc}") from None
    return values


def resolve_settings(args: argparse.Namespace, config_path=None) -> dict:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    merged = dict(_DEFAULTS)
    path = config_path if config_path is not None else getattr(args, "config", None)
    if path:
        merged.update(load_config_file(path))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def parse_segmenters(chars: str) -> frozenset[PunctLabel]:
    labels = set()
    for ch in chars:
        try:
            label = label_from_char(ch)
        except KeyError:
            raise ConfigError(f"unknown segmenter character {ch!r}") from None
        if label is PunctLabel.NONE:
            raise ConfigError("0 cannot be a segmenter")
        labels.add(label)
    if not labels:
        raise ConfigError("segmenter set must not be empty")
    return frozenset(labels)


def segmenter_config(settings: dict) -> segmenter.SegmenterConfig:
    try:
        return segmenter.SegmenterConfig(
            window_words=settings["window"],
            stride=settings["stride"],
            theta=settings["theta"],
            segmenters=parse_segmenters(settings["segmenters"]),
            pooling=settings["pooling"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def make_classifier(spec: str | None):
    if not spec:
        raise ConfigError("no classifier given; use --classifier or a config file")
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ConfigError(f"classifier spec {spec!r} is not kind:argument")
    if kind == "builtin":
        return load_model(arg)
    if kind == "replay":
        return ReplayClassifier.from_document(parse_sepp_file(arg))
    if kind == "external":
        return ExternalClassifier(ExternalAdapterConfig(arg))
    raise ConfigError(f"unknown classifier kind {kind!r}")


def _require_files(*paths) -> None:
    # fail before any classifier spawn or partial output
    for path in paths:
        if path and not os.path.isfile(path):
            raise FileNotFoundError(f"input file not found: {path}")


def atomic_write(path, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out_path) -> None:
    if out_path:
        atomic_write(out_path, text)
    else:
        sys.stdout.write(text)


def _check_aligned(gold: SeppDocument, pred: SeppDocument) -> None:
    gw, pw = gold.words(), pred.words()
    for i, (g, p) in enumerate(zip(gw, pw)):
        if g != p:
            raise WordMismatchError(i)
    if len(gw) != len(pw):
        raise WordMismatchError(min(len(gw), len(pw)))


def _predictions_document(
    words: list[str], labels: list[PunctLabel], boundaries: set[int], source_id=None
) -> SeppDocument:
    tokens = [
        LabeledToken(w, lab is PunctLabel.PERIOD or i in boundaries, lab)
        for i, (w, lab) in enumerate(zip(words, labels))
    ]
    return SeppDocument(tokens, source_id=source_id)


def cmd_prepare(args: argparse.Namespace) -> int:
    _require_files(args.input)
    with open(args.input, encoding="utf-8") as fh:
        lines = list(textprep.clean_lines(fh))
    if not lines:
        raise TooFewUnitsError("input corpus has no usable lines")
    sentences = [textprep.tokenize(line) for line in lines]

    model_path = args.truecase_model
    if model_path and os.path.exists(model_path):
        model = textprep.TruecaseModel.load(model_path)
    else:
        model = textprep.train_truecaser(sentences)
        if model_path:
            model.save(model_path)
    sentences = [textprep.truecase(sent, model) for sent in sentences]

    doc = textprep.extract_labels(sentences, source_id=str(args.input))
    atomic_write(args.out, write_sepp(doc))
    print(f"sentences: {len(sentences)}", file=sys.stderr)
    print(f"tokens: {len(doc)}", file=sys.stderr)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    _require_files(*args.inputs)
    docs = [parse_sepp_file(p) for p in args.inputs]
    spec = textprep.SplitSpec(train_fraction=args.fraction, seed=args.seed or 0, unit=args.unit)
    train, test = textprep.split_corpus(docs, spec)
    atomic_write(args.train_out, "".join(write_sepp(d) for d in train))
    atomic_write(args.test_out, "".join(write_sepp(d) for d in test))
    print(f"train units: {len(train)}, test units: {len(test)}", file=sys.stderr)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    _require_files(*args.inputs)
    settings = resolve_settings(args)
    docs = [parse_sepp_file(p) for p in args.inputs]
    model = train_reference(
        docs, args.epochs, settings["seed"], window_words=settings["window"]
    )
    save_model(model, args.out)
    total = sum(len(d) for d in docs)
    print(f"trained on {total} tokens, {len(model.weights)} active features", file=sys.stderr)
    return 0


def _chunked_labels(classifier, words: list[str], window: int) -> list[PunctLabel]:
    limit = getattr(classifier, "max_window_words", None)
    size = window if limit is None else min(window, limit)
    labels: list[PunctLabel] = []
    for off in range(0, len(words), size):
        labels.extend(classifier.classify(words[off : off + size]))
    return labels


def cmd_classify(args: argparse.Namespace) -> int:
    _require_files(args.input)
    settings = resolve_settings(args)
    classifier = make_classifier(settings["classifier"])
    doc = parse_sepp_file(args.input)
    words = doc.words()
    labels = _chunked_labels(classifier, words, settings["window"])
    pred = _predictions_document(words, labels, set(), source_id=str(args.input))
    _emit(write_sepp(pred), args.out)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    _require_files(args.input)
    settings = resolve_settings(args)
    cfg = segmenter_config(settings)
    classifier = make_classifier(settings["classifier"])
    words = Path(args.input).read_text(encoding="utf-8").split()
    result = segmenter.segment(words, classifier, cfg)
    _emit(result.to_text(), args.out)
    if args.emit_sepp:
        pred = _predictions_document(
            result.words, result.labels, set(result.boundaries), source_id=str(args.input)
        )
        atomic_write(args.emit_sepp, write_sepp(pred))
    return 0


def cmd_eval_labels(args: argparse.Namespace) -> int:
    _require_files(args.gold, args.pred)
    gold = parse_sepp_file(args.gold)
    pred = parse_sepp_file(args.pred)
    _check_aligned(gold, pred)
    cm = metrics.confusion([t.label for t in gold], [t.label for t in pred])
    rep = metrics.report(cm)
    if args.out_prefix:
        atomic_write(f"{args.out_prefix}.report.txt", metrics.format_report(rep))
        atomic_write(f"{args.out_prefix}.report.tsv", metrics.report_tsv(rep))
        atomic_write(f"{args.out_prefix}.confusion.tsv", metrics.confusion_tsv(cm))
    else:
        sys.stdout.write(metrics.format_report(rep))
    return 0


def cmd_eval_boundaries(args: argparse.Namespace) -> int:
    _require_files(args.gold, args.pred)
    settings = resolve_settings(args)
    seg_set = parse_segmenters(settings["segmenters"])
    gold = parse_sepp_file(args.gold)
    pred = parse_sepp_file(args.pred)
    _check_aligned(gold, pred)
    score = metrics.boundary_score(
        metrics.boundaries_from_document(gold, seg_set),
        metrics.boundaries_from_document(pred, seg_set),
        stream_length=len(gold),
    )
    _emit(metrics.boundary_tsv(score), args.out)
    return 0


def _parse_theta_list(raw: str) -> list[float]:
    values = [part for part in raw.replace(",", " ").split() if part]
    if not values:
        raise ConfigError("theta list is empty")
    try:
        return [float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad theta value: {exc}") from None


def cmd_sweep(args: argparse.Namespace) -> int:
    _require_files(args.gold)
    settings = resolve_settings(args)
    cfg = segmenter_config(settings)
    thetas = _parse_theta_list(args.thetas)
    classifier = make_classifier(settings["classifier"])

    gold = parse_sepp_file(args.gold)
    words = strip_labels(gold)
    gold_bounds = metrics.boundaries_from_document(gold, cfg.segmenters)
    votes = segmenter.accumulate_votes(words, classifier, cfg)

    lines = ["theta\tprecision\trecall\tf1"]
    for theta in thetas:
        _, bounds = segmenter.decide(votes, dataclasses.replace(cfg, theta=theta))
        score = metrics.boundary_score(gold_bounds, bounds, stream_length=len(words))
        lines.append(f"{theta:g}\t{score.precision:.6f}\t{score.recall:.6f}\t{score.f1:.6f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _condition_scores(
    blocks: list[SeppDocument], settings: dict
) -> list[float]:
    cfg = segmenter_config(settings)
    classifier = make_classifier(settings["classifier"])
    scores = []
    for block in blocks:
        words = strip_labels(block)
        gold_bounds = metrics.boundaries_from_document(block, cfg.segmenters)
        votes = segmenter.accumulate_votes(words, classifier, cfg)
        _, bounds = segmenter.decide(votes, cfg)
        scores.append(metrics.boundary_score(gold_bounds, bounds).f1)
    return scores


def cmd_significance(args: argparse.Namespace) -> int:
    _require_files(args.gold, args.config_a, args.config_b)
    corpus = parse_sepp_file(args.gold)
    blocks = metrics.split_testfiles(corpus, args.block_size)
    if len(blocks) < 2:
        raise TooShortError(f"only {len(blocks)} block(s); the paired test needs at least 2")

    empty = argparse.Namespace()
    settings_a = resolve_settings(empty, config_path=args.config_a)
    settings_b = resolve_settings(empty, config_path=args.config_b)
    scores_a = _condition_scores(blocks, settings_a)
    scores_b = _condition_scores(blocks, settings_b)

    rows = [("A", metrics.summarize(scores_a)), ("B", metrics.summarize(scores_b))]
    _emit(metrics.summaries_tsv(rows), args.out)
    if args.scores_out:
        lines = ["block\tf1_a\tf1_b"]
        lines.extend(
            f"{k}\t{a:.6f}\t{b:.6f}" for k, (a, b) in enumerate(zip(scores_a, scores_b))
        )
        atomic_write(args.scores_out, "\n".join(lines) + "\n")
    p = metrics.paired_significance(
        scores_a, scores_b, permutations=args.permutations, seed=args.seed or 0
    )
    sys.stdout.write(f"p_value\t{p:.6g}\n")
    return 0


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=None, help="sliding window size in words")
    parser.add_argument("--stride", type=int, default=None, help="window stride in words")
    parser.add_argument("--theta", type=float, default=None, help="vote-ratio acceptance threshold")
    parser.add_argument(
        "--segmenters", default=None, help="segmenting label characters, e.g. '.' or '.?'"
    )
    parser.add_argument(
        "--pooling", choices=["per_class", "pooled"], default=None, help="vote pooling mode"
    )
    parser.add_argument(
        "--classifier",
        default=None,
        help="builtin:<model path> | external:<command> | replay:<sepp path>",
    )
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    parser.add_argument("--config", default=None, help="key = value settings file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puncseg",
        description="Punctuation restoration and sentence segmentation for word streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="raw one-sentence-per-line text to SEPP")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--truecase-model", default=None, help="load if present, else train and save")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("split", help="deterministic train/test split of SEPP corpora")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.add_argument("--fraction", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--unit", choices=["sentence", "document"], default="sentence")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the reference classifier on SEPP files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=5)
    _add_shared(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="single-pass token labels for a SEPP file's words")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    _add_shared(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("segment", help="segment a plain word-stream file")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.add_argument("--emit-sepp", default=None, help="also write predicted labels as SEPP")
    _add_shared(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval-labels", help="label-level report of pred SEPP against gold SEPP")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_eval_labels)

    p = sub.add_parser("eval-boundaries", help="boundary-level score of pred against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--out", default=None)
    _add_shared(p)
    p.set_defaults(func=cmd_eval_boundaries)

    p = sub.add_parser("sweep", help="boundary scores over a list of theta values")
    p.add_argument("gold")
    p.add_argument("--thetas", required=True, help="comma or space separated theta values")
    p.add_argument("--out", default=None)
    _add_shared(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "significance", help="paired comparison of two conditions over testfile blocks"
    )
    p.add_argument("gold")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--block-size", type=int, required=True, help="sentences per test file")
    p.add_argument("--permutations", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--scores-out", default=None, help="per-block score table for plotting")
    p.set_defaults(func=cmd_significance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: [{exc.code}] {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
