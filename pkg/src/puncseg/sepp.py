"""The three-column SEPP tab-separated token format.

One token per line: ``<word>\\t<0|1>\\t<label>``.  Column 1 is the word,
column 2 the binary sentence-end flag, column 3 the punctuation mark that
follows the word, with ``0`` meaning that no mark follows.  Files are
UTF-8; output always uses LF line endings and carries no BOM, while input
tolerates CRLF and a leading BOM.  Blank lines are skipped on input.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import SeppConsistencyWarning, SeppParseError


class PunctLabel(enum.Enum):
    """Punctuation mark predicted or observed after a word.

    Declaration order is the global tie-break order used by every
    classifier and by the vote threshold decision.
    """

    NONE = "0"
    PERIOD = "."
    COMMA = ","
    QUESTION = "?"
    COLON = ":"
    DASH = "-"

    @property
    def char(self) -> str:
        return self.value


_LABEL_BY_CHAR = {label.value: label for label in PunctLabel}

#: Tie-break order shared by classifiers and the segmenter.
TIE_ORDER: tuple[PunctLabel, ...] = tuple(PunctLabel)

#: Row/column order used by confusion matrices and evaluation reports.
REPORT_ORDER: tuple[PunctLabel, ...] = (
    PunctLabel.NONE,
    PunctLabel.PERIOD,
    PunctLabel.COMMA,
    PunctLabel.QUESTION,
    PunctLabel.DASH,
    PunctLabel.COLON,
)

#: Default segmenting set: full stop and question mark.
DEFAULT_SEGMENTERS: frozenset[PunctLabel] = frozenset(
    {PunctLabel.PERIOD, PunctLabel.QUESTION}
)


def label_from_char(ch: str) -> PunctLabel:
    """Map a single serialized character to its label, raising KeyError otherwise."""
    return _LABEL_BY_CHAR[ch]


@dataclass(frozen=True, slots=True)
class LabeledToken:
    """One SEPP row: a word, its sentence-end flag, and its punctuation label."""

    word: str
    eos: bool
    label: PunctLabel


@dataclass(slots=True)
class SeppDocument:
    """An ordered token sequence; sentence boundaries sit where ``eos`` is true."""

    tokens: list[LabeledToken] = field(default_factory=list)
    source_id: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[LabeledToken]:
        return iter(self.tokens)

    def words(self) -> list[str]:
        return [t.word for t in self.tokens]

    def sentences(self) -> list[list[LabeledToken]]:
        """Split tokens into sentences after each eos token.

        A trailing group without an eos token counts as a final sentence;
        the last token of a document is not required to carry the flag.
        """
        out: list[list[LabeledToken]] = []
        current: list[LabeledToken] = []
        for tok in self.tokens:
            current.append(tok)
            if tok.eos:
                out.append(current)
                current = []
        if current:
            out.append(current)
        return out


def _iter_physical_lines(stream: str | Iterable[str]) -> Iterator[str]:
    if isinstance(stream, str):
        yield from stream.split("\n")
    else:
        for line in stream:
            yield line.rstrip("\n")


def parse_sepp(
    stream: str | Iterable[str],
    *,
    strict: bool = False,
    source_id: str | None = None,
) -> SeppDocument:
    """Parse SEPP text into a document.

    ``stream`` may be a string or an iterable of lines (e.g. an open text
    file).  Line numbers in errors are 1-based and count blank lines too.
    Rows whose flag column contradicts the label (a full stop without the
    flag, or the flag without any mark) are accepted with a
    ``SeppConsistencyWarning`` unless ``strict`` is set, because published
    corpora contain such rows.
    """
    tokens: list[LabeledToken] = []
    for line_no, raw in enumerate(_iter_physical_lines(stream), start=1):
        if line_no == 1 and raw.startswith("﻿"):
            raw = raw[1:]
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise SeppParseError(
                "LINE_FORMAT", line_no, f"expected 3 tab-separated fields, got {len(fields)}"
            )
        word, flag, label_ch = fields
        if not word:
            raise SeppParseError("EMPTY_WORD", line_no, "empty word column")
        if flag not in ("0", "1"):
            raise SeppParseError("BAD_FLAG", line_no, f"flag column must be 0 or 1, got {flag!r}")
        try:
            label = label_from_char(label_ch)
        except KeyError:
            raise SeppParseError(
                "BAD_LABEL", line_no, f"unknown label {label_ch!r}"
            ) from None
        eos = flag == "1"
        inconsistent = (label is PunctLabel.PERIOD and not eos) or (
            label is PunctLabel.NONE and eos
        )
        if inconsistent:
            if strict:
                raise SeppParseError(
                    "FLAG_LABEL_MISMATCH",
                    line_no,
                    f"flag {flag} contradicts label {label_ch!r}",
                )
            warnings.warn(
                f"line {line_no}: flag {flag} contradicts label {label_ch!r}",
                SeppConsistencyWarning,
                stacklevel=2,
            )
        tokens.append(LabeledToken(word, eos, label))
    return SeppDocument(tokens, source_id=source_id)


def parse_sepp_file(path, *, strict: bool = False) -> SeppDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_sepp(fh, strict=strict, source_id=str(path))


def _render_flag(token: LabeledToken) -> str:
    # Column 2 is derived from the label where the consistency rule binds.
    if token.label is PunctLabel.PERIOD:
        return "1"
    if token.label is PunctLabel.NONE:
        return "0"
    return "1" if token.eos else "0"


def write_sepp(doc: SeppDocument) -> str:
    """Serialize a document, one LF-terminated line per token."""
    parts: list[str] = []
    for tok in doc.tokens:
        if not tok.word or any(ch in tok.word for ch in "\t\n\r"):
            raise ValueError(f"unwritable word {tok.word!r}")
        parts.append(f"{tok.word}\t{_render_flag(tok)}\t{tok.label.char}\n")
    if parts and parts[0].startswith("﻿"):
        # the format carries no BOM, so the output must not begin with one
        raise ValueError("document would begin with a byte-order mark")
    return "".join(parts)


def write_sepp_file(doc: SeppDocument, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(write_sepp(doc))


def strip_labels(doc: SeppDocument) -> list[str]:
    """Project the document onto its word column: the simulated ASR stream."""
    return doc.words()
