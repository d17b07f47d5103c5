"""Per-token punctuation classifiers.

A classifier maps a window of words to one label per word, is
deterministic, and may advertise ``max_window_words`` as the largest call
it accepts (``None`` means unlimited).  This module ships a trainable
averaged-perceptron reference model, a replay classifier that serves
pre-recorded labels, and binary model persistence.  The subprocess
adapter for external models lives in :mod:`puncseg.external`.
"""

from __future__ import annotations

import random
import struct
import zlib
from typing import Iterable, Protocol, Sequence

from .errors import (
    BadMagicError,
    CorruptModelError,
    EmptyTrainingSetError,
    EmptyWindowError,
    VersionMismatchError,
)
from .sepp import PunctLabel, SeppDocument, label_from_char

LABELS: tuple[PunctLabel, ...] = tuple(PunctLabel)
LABEL_INDEX: dict[PunctLabel, int] = {label: i for i, label in enumerate(LABELS)}
N_LABELS = len(LABELS)

#: Hashed feature buckets; fixed so saved models are portable.
FEATURE_SPACE = 1 << 20
TEMPLATE_VERSION = 1

_BOS = "<s>"
_EOS = "</s>"


class Classifier(Protocol):
    """Contract every classifier implementation honors."""

    name: str
    max_window_words: int | None

    def classify(self, window: Sequence[str]) -> list[PunctLabel]:
        """Return exactly one label per window word; deterministic."""
        ...


def _bucket(pos: int) -> str:
    return str(pos) if pos < 4 else "4+"


def _shape(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = "o"
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def _hash(feature: str) -> int:
    # CRC32 keeps hashed models identical across runs and platforms.
    return zlib.crc32(feature.encode("utf-8")) & (FEATURE_SPACE - 1)


def _context_ids(
    prev: str, cur: str, nxt: str, nxt2: str, bucket: str, is_last: bool
) -> list[int]:
    return [
        _hash("w=" + cur),
        _hash("p=" + prev),
        _hash("n=" + nxt),
        _hash("nn=" + nxt2),
        _hash("l=" + cur.lower()),
        _hash("s=" + _shape(cur)),
        _hash("b=" + bucket),
        _hash("last=" + ("1" if is_last else "0")),
    ]


def _feature_ids(window: Sequence[str], i: int) -> list[int]:
    n = len(window)
    return _context_ids(
        window[i - 1] if i else _BOS,
        window[i],
        window[i + 1] if i + 1 < n else _EOS,
        window[i + 2] if i + 2 < n else _EOS,
        _bucket(i),
        i == n - 1,
    )


class LinearModel:
    """Averaged linear per-token classifier over hashed features.

    Instances are immutable once built; a context -> label cache makes
    repeated sliding-window calls cheap.
    """

    name = "linear"
    max_window_words: int | None = None

    def __init__(self, weights: dict[int, list[float]], seed: int = 0, epochs: int = 0):
        self.weights = weights
        self.seed = seed
        self.epochs = epochs
        self._label_cache: dict[tuple, int] = {}

    def _predict(self, ids: Iterable[int]) -> int:
        scores = [0.0] * N_LABELS
        weights = self.weights
        for fid in ids:
            row = weights.get(fid)
            if row is not None:
                for c in range(N_LABELS):
                    scores[c] += row[c]
        best = 0
        for c in range(1, N_LABELS):
            if scores[c] > scores[best]:
                best = c
        return best

    def classify(self, window: Sequence[str]) -> list[PunctLabel]:
        if not window:
            raise EmptyWindowError("classify needs at least one word")
        n = len(window)
        cache = self._label_cache
        out: list[PunctLabel] = []
        for i in range(n):
            key = (
                window[i - 1] if i else _BOS,
                window[i],
                window[i + 1] if i + 1 < n else _EOS,
                window[i + 2] if i + 2 < n else _EOS,
                _bucket(i),
                i == n - 1,
            )
            idx = cache.get(key)
            if idx is None:
                idx = self._predict(_context_ids(*key))
                cache[key] = idx
            out.append(LABELS[idx])
        return out


def _pooled_examples(
    documents: Iterable[SeppDocument], window_words: int
) -> list[tuple[tuple[int, ...], int]]:
    """One (feature ids, gold) example per token, in a canonical order.

    Documents are chunked into consecutive windows of at most
    ``window_words`` words; sorting the pooled examples makes training
    independent of document concatenation order.
    """
    examples: list[tuple[tuple[int, ...], int]] = []
    for doc in documents:
        words = [t.word for t in doc.tokens]
        golds = [LABEL_INDEX[t.label] for t in doc.tokens]
        for start in range(0, len(words), window_words):
            window = words[start : start + window_words]
            for i in range(len(window)):
                examples.append((tuple(_feature_ids(window, i)), golds[start + i]))
    examples.sort()
    return examples


def train_reference(
    train: list[SeppDocument],
    epochs: int,
    seed: int,
    *,
    window_words: int = 200,
) -> LinearModel:
    """Train the averaged perceptron on per-token decisions.

    Examples are pooled over all documents, shuffled once per epoch with
    the seeded RNG, and the returned weights are the running average over
    every training step.  Updates fire whenever the gold label fails to
    strictly outscore every other label (the zero-margin variant), which
    keeps the averaged weights from drifting on ties.
    """
    examples = _pooled_examples(train, window_words)
    if not examples:
        raise EmptyTrainingSetError("no training tokens")

    weights: dict[int, list[float]] = {}
    totals: dict[int, list[float]] = {}
    stamps: dict[int, list[int]] = {}

    def update(fid: int, c: int, delta: float, step: int) -> None:
        row = weights.get(fid)
        if row is None:
            row = weights[fid] = [0.0] * N_LABELS
            totals[fid] = [0.0] * N_LABELS
            stamps[fid] = [0] * N_LABELS
        tot = totals[fid]
        st = stamps[fid]
        tot[c] += row[c] * (step - 1 - st[c])
        st[c] = step - 1
        row[c] += delta

    rng = random.Random(seed)
    order = list(range(len(examples)))
    step = 0
    for _ in range(epochs):
        rng.shuffle(order)
        for ei in order:
            ids, gold = examples[ei]
            step += 1
            scores = [0.0] * N_LABELS
            for fid in ids:
                row = weights.get(fid)
                if row is not None:
                    for c in range(N_LABELS):
                        scores[c] += row[c]
            rival = 0 if gold != 0 else 1
            for c in range(N_LABELS):
                if c != gold and scores[c] > scores[rival]:
                    rival = c
            if scores[gold] <= scores[rival]:
                for fid in ids:
                    update(fid, gold, 1.0, step)
                    update(fid, rival, -1.0, step)

    averaged: dict[int, list[float]] = {}
    if step:
        for fid, row in weights.items():
            tot = totals[fid]
            st = stamps[fid]
            avg = [(tot[c] + row[c] * (step - st[c])) / step for c in range(N_LABELS)]
            if any(avg):
                averaged[fid] = avg
    return LinearModel(averaged, seed=seed, epochs=epochs)


_MAGIC = b"FSLM"
_FORMAT_VERSION = 1


def _section(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CorruptModelError("unexpected end of model file")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def save_model(model: LinearModel, path) -> None:
    """Write a model file: magic, version, then length-prefixed sections."""
    meta = struct.pack("<IIqI", FEATURE_SPACE, TEMPLATE_VERSION, model.seed, model.epochs)

    label_parts = [struct.pack("<I", len(LABELS))]
    for label in LABELS:
        raw = label.char.encode("utf-8")
        label_parts.append(struct.pack("<I", len(raw)) + raw)

    triples = [
        (fid, c, row[c])
        for fid, row in sorted(model.weights.items())
        for c in range(N_LABELS)
        if row[c] != 0.0
    ]
    weight_parts = [struct.pack("<Q", len(triples))]
    weight_parts.extend(struct.pack("<IId", fid, c, w) for fid, c, w in triples)

    blob = (
        _MAGIC
        + struct.pack("<I", _FORMAT_VERSION)
        + _section(meta)
        + _section(b"".join(label_parts))
        + _section(b"".join(weight_parts))
    )
    with open(path, "wb") as fh:
        fh.write(blob)


def load_model(path) -> LinearModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4:
        raise CorruptModelError("file too short for magic header")
    if data[:4] != _MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    reader = _Reader(data, 4)
    (version,) = reader.unpack("<I")
    if version != _FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, expected {_FORMAT_VERSION}")

    (meta_len,) = reader.unpack("<I")
    meta = _Reader(reader.take(meta_len), 0)
    feature_space, template_version, seed, epochs = meta.unpack("<IIqI")
    if feature_space != FEATURE_SPACE or template_version != TEMPLATE_VERSION:
        raise VersionMismatchError(
            f"feature space {feature_space}/template {template_version} not supported"
        )

    (labels_len,) = reader.unpack("<I")
    labels_reader = _Reader(reader.take(labels_len), 0)
    (n_labels,) = labels_reader.unpack("<I")
    labels: list[PunctLabel] = []
    for _ in range(n_labels):
        (raw_len,) = labels_reader.unpack("<I")
        ch = labels_reader.take(raw_len).decode("utf-8")
        try:
            labels.append(label_from_char(ch))
        except KeyError:
            raise CorruptModelError(f"unknown label {ch!r} in model file") from None
    if tuple(labels) != LABELS:
        raise CorruptModelError("model label list does not match the known alphabet")

    (weights_len,) = reader.unpack("<I")
    weights_reader = _Reader(reader.take(weights_len), 0)
    (n_triples,) = weights_reader.unpack("<Q")
    weights: dict[int, list[float]] = {}
    for _ in range(n_triples):
        fid, c, w = weights_reader.unpack("<IId")
        if fid >= FEATURE_SPACE or c >= N_LABELS:
            raise CorruptModelError(f"weight triple out of range: ({fid}, {c})")
        row = weights.get(fid)
        if row is None:
            row = weights[fid] = [0.0] * N_LABELS
        row[c] = w
    if reader.offset != len(data):
        raise CorruptModelError("trailing bytes after final section")
    return LinearModel(weights, seed=seed, epochs=epochs)


class ReplayClassifier:
    """Serves pre-recorded labels for windows of a fixed word stream.

    Windows are located as the first contiguous match inside the recorded
    stream, so sliding windows over the same stream replay exactly.
    """

    name = "replay"
    max_window_words: int | None = None

    def __init__(self, words: list[str], labels: list[PunctLabel]):
        if len(words) != len(labels):
            raise ValueError("words and labels must align")
        self.words = list(words)
        self.labels = list(labels)

    @classmethod
    def from_document(cls, doc: SeppDocument) -> "ReplayClassifier":
        return cls([t.word for t in doc.tokens], [t.label for t in doc.tokens])

    def _find(self, window: Sequence[str]) -> int:
        target = list(window)
        n, m = len(self.words), len(target)
        for start in range(n - m + 1):
            if self.words[start : start + m] == target:
                return start
        raise ValueError("window is not a contiguous part of the replay stream")

    def classify(self, window: Sequence[str]) -> list[PunctLabel]:
        if not window:
            raise EmptyWindowError("classify needs at least one word")
        start = self._find(window)
        return self.labels[start : start + len(window)]
