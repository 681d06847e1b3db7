"""Daily tweet-count, valence and polarization signals from a text corpus."""

from __future__ import annotations

import csv
import logging
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DataError
from .signals import DAY, Signal, to_day

log = logging.getLogger(__name__)

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; URLs and @-mentions removed, '#' dropped."""
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    return _WORD.findall(text.lower())


def expand_stems(stems: Iterable[str], vocabulary: Iterable[str]) -> set[str]:
    """Expand trailing-asterisk stems by prefix match; literal terms pass through."""
    vocabulary = list(vocabulary)
    out: set[str] = set()
    for stem in stems:
        if "*" in stem[:-1]:
            raise DataError(f"malformed stem {stem!r}: only a trailing '*' is allowed")
        if stem.endswith("*"):
            prefix = stem[:-1]
            out.update(w for w in vocabulary if w.startswith(prefix))
        else:
            out.add(stem)
    return out


@dataclass(frozen=True)
class Lexicon:
    kind: Literal["valence", "polarity"]
    entries: dict
    stems: tuple[str, ...] = ()
    stem_polarity: dict = field(default_factory=dict)
    scale: tuple[float, float] = (1.0, 9.0)

    def __post_init__(self):
        if self.kind == "valence":
            lo, hi = self.scale
            bad = [t for t, v in self.entries.items() if not lo <= v <= hi]
            if bad:
                raise DataError(f"valence scores outside [{lo}, {hi}]: {bad[:5]}")
        elif self.kind == "polarity":
            bad = [t for t, v in self.entries.items() if v not in ("positive", "negative")]
            if bad:
                raise DataError(f"polarity must be positive/negative: {bad[:5]}")
        else:
            raise DataError(f"unknown lexicon kind {self.kind!r}")

    @classmethod
    def valence(cls, scores: dict, scale=(1.0, 9.0)) -> "Lexicon":
        return cls("valence", dict(scores), scale=scale)

    @classmethod
    def polarity(cls, positive: Iterable[str], negative: Iterable[str]) -> "Lexicon":
        entries, stems, stem_pol = {}, [], {}
        for pol, terms in (("positive", positive), ("negative", negative)):
            for t in terms:
                if t.endswith("*"):
                    if "*" in t[:-1]:
                        raise DataError(f"malformed stem {t!r}")
                    stems.append(t)
                    stem_pol[t] = pol
                    continue
                if entries.get(t, pol) != pol:
                    raise DataError(f"term {t!r} listed as both positive and negative")
                entries[t] = pol
        return cls("polarity", entries, tuple(stems), stem_pol)

    @classmethod
    def load(cls, path, kind: Literal["valence", "polarity"]) -> "Lexicon":
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and rows[0][0].strip().lower() == "term":
            rows = rows[1:]
        if kind == "valence":
            try:
                return cls.valence({r[0].strip().lower(): float(r[1]) for r in rows})
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}: bad valence row ({exc})") from exc
        pos, neg = [], []
        for r in rows:
            tag = r[1].strip().lower() if len(r) > 1 else ""
            if tag not in ("pos", "neg"):
                raise DataError(f"{path}: polarity must be pos or neg, got {tag!r}")
            (pos if tag == "pos" else neg).append(r[0].strip().lower())
        return cls.polarity(pos, neg)

    def expanded(self, vocabulary: Iterable[str]) -> "Lexicon":
        """Resolve stems against ``vocabulary``. Literal entries win; words that
        stems of both classes match are left out."""
        if self.kind != "polarity" or not self.stems:
            return self
        vocabulary = list(vocabulary)
        hits: dict[str, set[str]] = defaultdict(set)
        for stem in self.stems:
            for w in expand_stems([stem], vocabulary):
                hits[w].add(self.stem_polarity[stem])
        entries = dict(self.entries)
        conflicts = 0
        for w, pols in hits.items():
            if w in entries:
                continue
            if len(pols) > 1:
                conflicts += 1
                continue
            entries[w] = next(iter(pols))
        if conflicts:
            log.warning("%d words matched both positive and negative stems and were dropped", conflicts)
        return Lexicon("polarity", entries)


@dataclass(frozen=True)
class DocBatch:
    date: np.datetime64
    documents: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        docs = tuple(tuple(d) for d in self.documents)
        if any(not tok for d in docs for tok in d):
            raise DataError("tokens must be nonempty strings")
        object.__setattr__(self, "documents", docs)
        object.__setattr__(self, "date", to_day(self.date))


def daily_valence(batch: DocBatch, lex: Lexicon) -> float | None:
    """Frequency-weighted mean valence of matched tokens; None when nothing matches."""
    if lex.kind != "valence":
        raise DataError("daily_valence needs a valence lexicon")
    freq = Counter(t for doc in batch.documents for t in doc if t in lex.entries)
    total = sum(freq.values())
    if total == 0:
        return None
    # sorted for a summation order independent of document order
    return math.fsum(n * lex.entries[t] for t, n in sorted(freq.items())) / total


def daily_polarization(batch: DocBatch, lex: Lexicon) -> float:
    """Geometric mean of positive and negative tokens per document."""
    if lex.kind != "polarity":
        raise DataError("daily_polarization needs a polarity lexicon")
    if lex.stems:
        raise DataError("expand polarity stems before scoring")
    n_docs = len(batch.documents)
    if n_docs == 0:
        raise DataError(f"no documents on {batch.date}")
    pos = neg = 0
    for doc in batch.documents:
        for t in doc:
            pol = lex.entries.get(t)
            if pol == "positive":
                pos += 1
            elif pol == "negative":
                neg += 1
    return math.sqrt((pos / n_docs) * (neg / n_docs))


def read_corpus(path, errors: list | None = None) -> Iterable[tuple[str, str]]:
    """Yield ``(timestamp, text)`` from a ``timestamp<TAB>text`` file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            ts, sep, text = line.partition("\t")
            if not sep:
                if errors is not None:
                    errors.append(f"{path}:{lineno}: missing tab separator")
                continue
            yield ts, text


def build_signals(
    corpus: Iterable[tuple],
    valence_lex: Lexicon,
    polarity_lex: Lexicon,
    date_range: Sequence | None = None,
    errors: list | None = None,
    vocabulary: Iterable[str] | None = None,
) -> tuple[Signal, Signal, Signal]:
    """Bin a corpus by UTC day into tweet-count, valence and polarization signals.

    Exact duplicate texts within a day count once. Unparseable records and
    records outside ``date_range`` are skipped and described in ``errors``.
    Days without matched tokens are left out of the valence signal.
    Unexpanded polarity stems are resolved against ``vocabulary``, or against
    the corpus vocabulary when none is given.
    """
    start = end = None
    if date_range is not None:
        start, end = (None if d is None else to_day(d) for d in date_range)
    texts: dict[np.datetime64, set[str]] = defaultdict(set)
    for record in corpus:
        try:
            ts, text = record
            day = to_day(ts)
        except (ValueError, TypeError) as exc:
            if errors is not None:
                errors.append(f"bad record {record!r}: {exc}")
            continue
        if (start is not None and day < start) or (end is not None and day > end):
            if errors is not None:
                errors.append(f"record outside range on {day}")
            continue
        texts[day].add(text)

    days = sorted(texts)
    batches = [DocBatch(d, [tuple(tokenize(t)) for t in sorted(texts[d])]) for d in days]
    if polarity_lex.stems:
        vocab = vocabulary if vocabulary is not None else {t for b in batches for doc in b.documents for t in doc}
        polarity_lex = polarity_lex.expanded(sorted(vocab))

    if days:
        first = start if start is not None else days[0]
        last = end if end is not None else days[-1]
        calendar = np.arange(first, last + DAY, DAY)
    else:
        calendar = np.array([], dtype="datetime64[D]")
    counts = np.array([len(texts.get(d, ())) for d in calendar], dtype=float)

    val_days, val_values, pol_days, pol_values = [], [], [], []
    for b in batches:
        v = daily_valence(b, valence_lex)
        if v is not None:
            val_days.append(b.date)
            val_values.append(v)
        pol_days.append(b.date)
        pol_values.append(daily_polarization(b, polarity_lex))
    return (
        Signal("tweets", calendar, counts),
        Signal("valence", np.array(val_days, dtype="datetime64[D]"), val_values),
        Signal("polarization", np.array(pol_days, dtype="datetime64[D]"), pol_values),
    )
