"""News sentiment via a small hidden Markov model.

Raw headlines and tweets become token category sequences through a
lexicon (seven categories, so emissions stay estimable from a small
labeled corpus).  Viterbi decodes each document into latent sentiment
states, documents score as (positive - negative) token share, dates
average their documents, and the daily series forward-fills onto trading
dates as an exogenous regressor.

Decoding runs a backward max pass followed by a forward reconstruction,
which returns the lexicographically smallest state path among the
argmax set; a plain backpointer sweep breaks ties from the wrong end.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._serde import LineReader, array_lines, fmt
from .errors import DataError

CATEGORIES = (
    "strong_positive",
    "positive",
    "neutral",
    "negative",
    "strong_negative",
    "numeric",
    "other",
)
NUMERIC_ID = CATEGORIES.index("numeric")
OTHER_ID = CATEGORIES.index("other")

DEFAULT_STATES = ("positive", "negative", "neutral")

_URL = re.compile(r"https?://\S+|www\.\S+")
_HANDLE = re.compile(r"@\w+")
_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class HmmModel:
    """State labels with transition, emission, and initial distributions."""

    labels: tuple[str, ...]
    transition: np.ndarray  # n x n
    emission: np.ndarray  # n x V
    initial: np.ndarray  # n

    @property
    def n_states(self) -> int:
        return len(self.labels)

    @property
    def vocab_size(self) -> int:
        return self.emission.shape[1]

    def validate(self) -> None:
        n = self.n_states
        if n < 2:
            raise DataError("need at least two sentiment states")
        if self.transition.shape != (n, n):
            raise DataError("transition matrix shape does not match state count")
        if self.emission.shape[0] != n or self.emission.shape[1] < 1:
            raise DataError("emission matrix shape does not match states/vocabulary")
        if self.initial.shape != (n,):
            raise DataError("initial distribution length does not match state count")
        for name, mat in (("transition", self.transition), ("emission", self.emission)):
            if np.any(mat < 0):
                raise DataError(f"{name} probabilities must be >= 0")
            if np.max(np.abs(mat.sum(axis=1) - 1.0)) > 1e-9:
                raise DataError(f"{name} rows must each sum to 1")
        if np.any(self.initial < 0) or abs(self.initial.sum() - 1.0) > 1e-9:
            raise DataError("initial distribution must be a probability vector")


def _check_tokens(tokens: tuple[int, ...], vocab_size: int, where: str = "") -> None:
    tag = f"{where}: " if where else ""
    if not tokens:
        raise DataError(f"{tag}empty token sequence")
    for tok in tokens:
        if not 0 <= tok < vocab_size:
            raise DataError(f"{tag}token id {tok} outside vocabulary")


@dataclass(frozen=True)
class DocumentRecord:
    date: dt.date
    source: str
    tokens: tuple[int, ...]

    def validate(self, vocab_size: int) -> None:
        _check_tokens(self.tokens, vocab_size, f"{self.date} {self.source}")


@dataclass(frozen=True)
class DecodedPath:
    states: tuple[int, ...]
    log_prob: float


@dataclass(frozen=True)
class SentimentSeries:
    """Date-ascending daily scores, one entry per date with documents."""

    dates: tuple[dt.date, ...]
    scores: np.ndarray

    def validate(self) -> None:
        if len(self.dates) != self.scores.shape[0]:
            raise DataError("dates and scores must have equal length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("sentiment dates must be strictly increasing")
        if self.scores.size and (np.min(self.scores) < -1 or np.max(self.scores) > 1):
            raise DataError("daily sentiment scores must lie in [-1, 1]")


def tokenize(text: str) -> list[str]:
    """Lowercase words with URLs and @handles removed."""
    text = _URL.sub(" ", text.lower())
    text = _HANDLE.sub(" ", text)
    return [w for w in _SPLIT.split(text) if w]


def load_lexicon(path: str | Path) -> dict[str, int]:
    """Read `word<TAB>category_id` lines into a lookup table."""
    table: dict[str, int] = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"lexicon line {i}: expected word<TAB>category_id")
        word, cat = parts[0].strip(), parts[1].strip()
        try:
            cat_id = int(cat)
        except ValueError:
            raise DataError(f"lexicon line {i}: category id {cat!r} is not an integer")
        if not 0 <= cat_id < len(CATEGORIES):
            raise DataError(f"lexicon line {i}: category id {cat_id} out of range")
        table[word] = cat_id
    return table


def words_to_tokens(words: list[str], lexicon: dict[str, int]) -> tuple[int, ...]:
    """Map words to category ids; digits go to numeric, unknowns to other."""
    out = []
    for w in words:
        if w in lexicon:
            out.append(lexicon[w])
        elif w.isdigit():
            out.append(NUMERIC_ID)
        else:
            out.append(OTHER_ID)
    return tuple(out)


def read_documents(path: str | Path, lexicon: dict[str, int]) -> list[DocumentRecord]:
    """Parse `date<TAB>source<TAB>text` lines; blank-token documents are dropped."""
    docs = []
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise DataError(f"document line {i}: expected date<TAB>source<TAB>text")
        try:
            date = dt.date.fromisoformat(parts[0].strip())
        except ValueError:
            raise DataError(f"document line {i}: bad date {parts[0]!r}")
        tokens = words_to_tokens(tokenize(parts[2]), lexicon)
        if tokens:
            docs.append(DocumentRecord(date, parts[1].strip(), tokens))
    return docs


def viterbi(model: HmmModel, obs: DocumentRecord | tuple[int, ...]) -> DecodedPath:
    """Most probable state path in log space.

    Among equally probable paths, returns the one with the smallest state
    indices reading left to right.  The backward pass stores, per (time,
    state), the best log probability of finishing the sequence from
    there; the forward pass then picks the smallest state that still
    attains the global maximum at every position.
    """
    model.validate()
    tokens = obs.tokens if isinstance(obs, DocumentRecord) else tuple(obs)
    _check_tokens(tokens, model.vocab_size)
    seq = np.asarray(tokens, dtype=int)
    T = seq.shape[0]
    with np.errstate(divide="ignore"):
        log_a = np.log(model.transition)
        log_b = np.log(model.emission)
        log_pi = np.log(model.initial)
    for t in range(T):
        if np.all(model.emission[:, seq[t]] == 0.0):
            raise DataError(
                f"token id {seq[t]} at position {t} has zero emission "
                "probability in every state"
            )

    # tail[t, j]: best log prob of emitting obs[t:] starting in state j
    tail = np.empty((T, model.n_states))
    tail[T - 1] = log_b[:, seq[T - 1]]
    for t in range(T - 2, -1, -1):
        tail[t] = log_b[:, seq[t]] + np.max(log_a + tail[t + 1][None, :], axis=1)

    first = log_pi + tail[0]
    if not np.isfinite(np.max(first)):
        raise DataError("no state path has positive probability")
    states = [int(np.argmax(first))]
    prefix = log_pi[states[0]] + log_b[states[0], seq[0]]
    for t in range(1, T):
        scores = prefix + log_a[states[-1]] + tail[t]
        states.append(int(np.argmax(scores)))
        prefix += log_a[states[-2], states[-1]] + log_b[states[-1], seq[t]]
    return DecodedPath(tuple(states), float(prefix))


def supervised_estimate(
    corpus: list[tuple[tuple[int, ...], tuple[int, ...]]],
    labels: tuple[str, ...] = DEFAULT_STATES,
    vocab_size: int = len(CATEGORIES),
) -> HmmModel:
    """Count-based estimation with add-one smoothing.

    `corpus` holds (token sequence, state sequence) pairs of equal length.
    A state index outside the label set is an error; a label with no
    occurrences merely falls back to the uniform rows smoothing implies,
    so estimates for it carry no information.
    """
    n = len(labels)
    if n < 2:
        raise DataError("need at least two state labels")
    if not corpus:
        raise DataError("empty training corpus")
    trans = np.zeros((n, n))
    emit = np.zeros((n, vocab_size))
    init = np.zeros(n)
    for i, (tokens, states) in enumerate(corpus):
        if len(tokens) != len(states) or not tokens:
            raise DataError(f"corpus sequence {i}: token/state lengths differ or empty")
        for tok, s in zip(tokens, states):
            if not 0 <= s < n:
                raise DataError(f"corpus sequence {i}: state index {s} has no label")
            if not 0 <= tok < vocab_size:
                raise DataError(f"corpus sequence {i}: token id {tok} out of range")
            emit[s, tok] += 1.0
        init[states[0]] += 1.0
        for a, b in zip(states, states[1:]):
            trans[a, b] += 1.0
    model = HmmModel(
        labels=tuple(labels),
        transition=(trans + 1.0) / (trans.sum(axis=1, keepdims=True) + n),
        emission=(emit + 1.0) / (emit.sum(axis=1, keepdims=True) + vocab_size),
        initial=(init + 1.0) / (init.sum() + n),
    )
    model.validate()
    return model


def extract_segments(
    path: DecodedPath, min_run: int, labels: tuple[str, ...] | None = None
):
    """Maximal constant-state runs of length >= min_run, inclusive ends."""
    if min_run < 1:
        raise DataError("min_run must be >= 1")
    states = path.states
    segments = []
    start = 0
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start]:
            if i - start >= min_run:
                tag = labels[states[start]] if labels else states[start]
                segments.append((start, i - 1, tag))
            start = i
    return segments


def score_documents(model: HmmModel, docs: list[DocumentRecord]) -> SentimentSeries:
    """Decode each document and average (pos - neg)/length scores per date.

    State labels equal to "positive"/"negative" carry weight +1/-1; any
    other label is neutral.
    """
    model.validate()
    weights = np.array(
        [1.0 if l == "positive" else -1.0 if l == "negative" else 0.0 for l in model.labels]
    )
    by_date: dict[dt.date, list[float]] = {}
    for doc in docs:
        decoded = viterbi(model, doc)
        score = float(weights[list(decoded.states)].sum() / len(decoded.states))
        by_date.setdefault(doc.date, []).append(score)
    dates = tuple(sorted(by_date))
    scores = np.array([float(np.mean(by_date[d])) for d in dates])
    series = SentimentSeries(dates, scores)
    series.validate()
    return series


def align_sentiment(
    trading_dates: list[dt.date], series: SentimentSeries, lookback_days: int = 3
) -> np.ndarray:
    """Most recent score at or before each trading date, else 0.

    Scores older than `lookback_days` calendar days do not carry forward,
    so a quiet stretch of news decays to the neutral value quickly.
    """
    series.validate()
    if any(b <= a for a, b in zip(trading_dates, trading_dates[1:])):
        raise DataError("trading dates must be strictly increasing")
    out = np.zeros(len(trading_dates))
    if not series.dates:
        return out
    j = -1
    for i, d in enumerate(trading_dates):
        while j + 1 < len(series.dates) and series.dates[j + 1] <= d:
            j += 1
        if j >= 0 and (d - series.dates[j]).days <= lookback_days:
            out[i] = series.scores[j]
    return out


FORMAT_TAG = "stockcast-hmm"
FORMAT_VERSION = 1


def scores_csv(series: SentimentSeries) -> str:
    """Two-column date,score text; an empty series renders as header only."""
    series.validate()
    lines = ["date,score"]
    for date, score in zip(series.dates, series.scores):
        lines.append(f"{date.isoformat()},{fmt(float(score))}")
    return "\n".join(lines) + "\n"


def load_scores(path: str | Path) -> SentimentSeries:
    """Parse a date,score CSV back into a validated series."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "date,score":
        raise DataError(f"{path}: expected a date,score header")
    dates = []
    values = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path} line {i}: expected date,score")
        try:
            dates.append(dt.date.fromisoformat(parts[0].strip()))
            values.append(float(parts[1]))
        except ValueError as exc:
            raise DataError(f"{path} line {i}: {exc}") from None
    series = SentimentSeries(tuple(dates), np.array(values, dtype=float))
    series.validate()
    return series


def save_hmm(model: HmmModel, path: str | Path) -> None:
    model.validate()
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        "labels " + " ".join(model.labels),
    ]
    lines.extend(array_lines("transition", model.transition))
    lines.extend(array_lines("emission", model.emission))
    lines.extend(array_lines("initial", model.initial))
    Path(path).write_text("\n".join(lines) + "\n")


def load_hmm(path: str | Path) -> HmmModel:
    reader = LineReader(Path(path).read_text())
    tag = reader.expect(FORMAT_TAG)
    if int(tag[0]) != FORMAT_VERSION:
        raise DataError(f"unsupported model version {tag[0]}")
    labels = tuple(reader.expect("labels"))
    model = HmmModel(
        labels=labels,
        transition=reader.array("transition"),
        emission=reader.array("emission"),
        initial=reader.array("initial"),
    )
    model.validate()
    return model
