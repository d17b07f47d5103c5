"""Evaluation mathematics.

Confusion matrices and precision/recall/F1 reports for the six-way label
task, exact-index boundary scoring for segmentation, rank-based summaries
of per-testfile score distributions, and a paired sign-flip permutation
test for comparing two conditions over the same test files.
"""

from __future__ import annotations

import itertools
import random
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    EmptyMatrixError,
    EmptyScoresError,
    LengthMismatchError,
    OutOfRangeError,
    TooShortError,
)
from .sepp import REPORT_ORDER, PunctLabel, SeppDocument

REPORT_INDEX: dict[PunctLabel, int] = {label: i for i, label in enumerate(REPORT_ORDER)}
_N = len(REPORT_ORDER)


@dataclass
class ConfusionMatrix:
    """6x6 counts, rows gold and columns predicted, in report label order."""

    counts: list[list[int]]

    labels = REPORT_ORDER

    @classmethod
    def zeros(cls) -> "ConfusionMatrix":
        return cls([[0] * _N for _ in range(_N)])

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def diagonal(self) -> int:
        return sum(self.counts[i][i] for i in range(_N))

    def __getitem__(self, gold_pred: tuple[PunctLabel, PunctLabel]) -> int:
        gold, pred = gold_pred
        return self.counts[REPORT_INDEX[gold]][REPORT_INDEX[pred]]


def confusion(gold: Sequence[PunctLabel], pred: Sequence[PunctLabel]) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise LengthMismatchError(f"gold has {len(gold)} labels, pred has {len(pred)}")
    cm = ConfusionMatrix.zeros()
    for g, p in zip(gold, pred):
        cm.counts[REPORT_INDEX[g]][REPORT_INDEX[p]] += 1
    return cm


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    per_class: dict[PunctLabel, ClassMetrics]
    accuracy: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total: int
    zero_division: bool = False


def report(cm: ConfusionMatrix) -> EvalReport:
    """Per-class and aggregate metrics; zero denominators score 0 and set a flag.

    Macro averages are unweighted means over all six classes, the NONE
    class included; micro F1 equals accuracy for this single-label task.
    """
    total = cm.total()
    if total == 0:
        raise EmptyMatrixError("confusion matrix has no counts")
    zero_division = False
    per_class: dict[PunctLabel, ClassMetrics] = {}
    for idx, label in enumerate(REPORT_ORDER):
        tp = cm.counts[idx][idx]
        gold_n = sum(cm.counts[idx])
        pred_n = sum(cm.counts[g][idx] for g in range(_N))
        if pred_n:
            precision = tp / pred_n
        else:
            precision, zero_division = 0.0, True
        if gold_n:
            recall = tp / gold_n
        else:
            recall, zero_division = 0.0, True
        per_class[label] = ClassMetrics(precision, recall, f1_score(precision, recall), gold_n)

    diag = cm.diagonal()
    micro_fp = total - diag
    micro_fn = total - diag
    micro_f1 = 2 * diag / (2 * diag + micro_fp + micro_fn)

    metrics = list(per_class.values())
    return EvalReport(
        per_class=per_class,
        accuracy=diag / total,
        micro_f1=micro_f1,
        macro_precision=sum(m.precision for m in metrics) / _N,
        macro_recall=sum(m.recall for m in metrics) / _N,
        macro_f1=sum(m.f1 for m in metrics) / _N,
        weighted_precision=sum(m.precision * m.support for m in metrics) / total,
        weighted_recall=sum(m.recall * m.support for m in metrics) / total,
        weighted_f1=sum(m.f1 * m.support for m in metrics) / total,
        total=total,
        zero_division=zero_division,
    )


@dataclass
class BoundaryScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def boundary_score(
    gold_boundaries: Iterable[int],
    pred_boundaries: Iterable[int],
    stream_length: int | None = None,
) -> BoundaryScore:
    """Exact-index match of predicted segment ends against gold ends."""
    gold = set(gold_boundaries)
    pred = set(pred_boundaries)
    if stream_length is not None:
        bad = [i for i in gold | pred if i < 0 or i >= stream_length]
        if bad:
            raise OutOfRangeError(f"boundary index {min(bad)} outside stream of {stream_length}")
    tp = len(gold & pred)
    fp = len(pred - gold)
    fn = len(gold - pred)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return BoundaryScore(tp, fp, fn, precision, recall, f1_score(precision, recall))


def boundaries_from_document(doc: SeppDocument, segmenters: Iterable[PunctLabel]) -> set[int]:
    """Positions whose label belongs to the segmenting set."""
    seg = set(segmenters)
    return {i for i, tok in enumerate(doc.tokens) if tok.label in seg}


def split_testfiles(corpus: SeppDocument, sentences_per_file: int) -> list[SeppDocument]:
    """Cut the corpus into consecutive blocks of exactly N sentences; drop the tail."""
    if sentences_per_file < 1:
        raise ValueError("sentences_per_file must be positive")
    sentences = corpus.sentences()
    if len(sentences) < sentences_per_file:
        raise TooShortError(
            f"corpus has {len(sentences)} sentences, need {sentences_per_file}"
        )
    files: list[SeppDocument] = []
    n_files = len(sentences) // sentences_per_file
    for k in range(n_files):
        block = sentences[k * sentences_per_file : (k + 1) * sentences_per_file]
        tokens = [tok for sent in block for tok in sent]
        src = f"{corpus.source_id or 'corpus'}:block{k}"
        files.append(SeppDocument(tokens, source_id=src))
    return files


@dataclass
class DistributionSummary:
    n: int
    median: float
    average: float
    stddev: float
    ci_low: float
    ci_high: float


def summarize(scores: Sequence[float], *, sample_stddev: bool = False) -> DistributionSummary:
    """Median, mean, stddev and the rank-based 95% interval of a score list.

    The interval takes the values at 1-based ranks floor(0.025 n) + 1 and
    ceil(0.975 n) of the ascending sort (ranks 251 and 9750 at n=10000).
    The standard deviation is the population one unless ``sample_stddev``.
    """
    n = len(scores)
    if n == 0:
        raise EmptyScoresError("no scores to summarize")
    ordered = sorted(scores)
    lo_rank = n // 40 + 1  # floor(n/40) + 1, exact integer form of floor(0.025 n) + 1
    hi_rank = (39 * n + 39) // 40  # ceil(39 n / 40)
    if n == 1:
        stddev = 0.0
    elif sample_stddev:
        stddev = statistics.stdev(scores)
    else:
        stddev = statistics.pstdev(scores)
    return DistributionSummary(
        n=n,
        median=statistics.median(ordered),
        average=statistics.fmean(scores),
        stddev=stddev,
        ci_low=ordered[lo_rank - 1],
        ci_high=ordered[hi_rank - 1],
    )


def paired_significance(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    permutations: int | None = 10000,
    seed: int = 0,
) -> float:
    """Two-sided paired sign-flip permutation test on per-file differences.

    The statistic is the mean difference.  When ``permutations`` is None or
    at least 2**n the test enumerates all sign patterns exactly and returns
    count / 2**n; otherwise it samples with the seeded RNG and returns
    (1 + count) / (1 + permutations).
    """
    if len(scores_a) != len(scores_b):
        raise LengthMismatchError(
            f"score lists differ in length: {len(scores_a)} vs {len(scores_b)}"
        )
    n = len(scores_a)
    if n < 2:
        raise TooShortError("need at least 2 paired scores")
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    observed = abs(sum(diffs) / n)

    if permutations is None or 2**n <= permutations:
        count = 0
        for signs in itertools.product((1.0, -1.0), repeat=n):
            stat = abs(sum(d * s for d, s in zip(diffs, signs)) / n)
            if stat >= observed:
                count += 1
        return count / 2**n

    rng = random.Random(seed)
    count = 0
    for _ in range(permutations):
        stat = abs(sum(d if rng.getrandbits(1) else -d for d in diffs) / n)
        if stat >= observed:
            count += 1
    return (1 + count) / (1 + permutations)


def format_report(rep: EvalReport) -> str:
    """Human-readable aligned table in the usual classification-report shape."""
    lines = [f"{'class':>12}  {'precision':>9}  {'recall':>9}  {'f1-score':>9}  {'support':>9}"]
    for label, m in rep.per_class.items():
        lines.append(
            f"{label.char:>12}  {m.precision:>9.6f}  {m.recall:>9.6f}  {m.f1:>9.6f}  {m.support:>9}"
        )
    lines.append("")
    lines.append(f"{'accuracy':>12}  {'':>9}  {'':>9}  {rep.accuracy:>9.6f}  {rep.total:>9}")
    lines.append(
        f"{'macro avg':>12}  {rep.macro_precision:>9.6f}  {rep.macro_recall:>9.6f}"
        f"  {rep.macro_f1:>9.6f}  {rep.total:>9}"
    )
    lines.append(
        f"{'weighted avg':>12}  {rep.weighted_precision:>9.6f}  {rep.weighted_recall:>9.6f}"
        f"  {rep.weighted_f1:>9.6f}  {rep.total:>9}"
    )
    return "\n".join(lines) + "\n"


def report_tsv(rep: EvalReport) -> str:
    lines = ["class\tprecision\trecall\tf1\tsupport"]
    for label, m in rep.per_class.items():
        lines.append(f"{label.char}\t{m.precision:.6f}\t{m.recall:.6f}\t{m.f1:.6f}\t{m.support}")
    lines.append(f"accuracy\t\t\t{rep.accuracy:.6f}\t{rep.total}")
    lines.append(
        f"macro avg\t{rep.macro_precision:.6f}\t{rep.macro_recall:.6f}\t{rep.macro_f1:.6f}\t{rep.total}"
    )
    lines.append(
        f"weighted avg\t{rep.weighted_precision:.6f}\t{rep.weighted_recall:.6f}"
        f"\t{rep.weighted_f1:.6f}\t{rep.total}"
    )
    return "\n".join(lines) + "\n"


def confusion_tsv(cm: ConfusionMatrix) -> str:
    header = "\t" + "\t".join(label.char for label in REPORT_ORDER)
    lines = [header]
    for idx, label in enumerate(REPORT_ORDER):
        lines.append(label.char + "\t" + "\t".join(str(v) for v in cm.counts[idx]))
    return "\n".join(lines) + "\n"


def boundary_tsv(score: BoundaryScore) -> str:
    return (
        "tp\tfp\tfn\tprecision\trecall\tf1\n"
        f"{score.tp}\t{score.fp}\t{score.fn}"
        f"\t{score.precision:.6f}\t{score.recall:.6f}\t{score.f1:.6f}\n"
    )


def summaries_tsv(rows: Iterable[tuple[str, DistributionSummary]]) -> str:
    lines = ["condition\tn\tmedian\taverage\tstddev\tci_lo\tci_hi"]
    for condition, s in rows:
        lines.append(
            f"{condition}\t{s.n}\t{s.median:.6f}\t{s.average:.6f}"
            f"\t{s.stddev:.6f}\t{s.ci_low:.6f}\t{s.ci_high:.6f}"
        )
    return "\n".join(lines) + "\n"
