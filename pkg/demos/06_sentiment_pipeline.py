"""News text to daily sentiment scores: lexicon, HMM decode, date alignment.

Uses the bundled lexicon, the small labeled corpus to estimate the HMM,
and the sample headlines to produce scores a forecaster can consume.
"""

from pathlib import Path

from stockcast.market_data import parse_csv
from stockcast.sentiment import (
    DEFAULT_STATES,
    align_sentiment,
    load_lexicon,
    read_documents,
    score_documents,
    supervised_estimate,
    tokenize,
    viterbi,
    words_to_tokens,
)

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

lexicon = load_lexicon(DATA / "sentiment_lexicon.tsv")
print(f"lexicon: {len(lexicon)} words over {len(set(lexicon.values()))} categories")

# labeled corpus -> transition/emission estimates with add-one smoothing;
# each labeled document trains as a constant-state token run
corpus = []
for line in (DATA / "labeled_corpus.tsv").read_text().splitlines():
    if not line.strip() or line.startswith("#"):
        continue
    label, text = line.split("\t", 1)
    tokens = words_to_tokens(tokenize(text), lexicon)
    if tokens:
        state = DEFAULT_STATES.index(label)
        corpus.append((tokens, (state,) * len(tokens)))
model = supervised_estimate(corpus)
print(f"states {model.labels}")

docs = read_documents(DATA / "news_sample.tsv", lexicon)
print(f"{len(docs)} dated documents")

first = docs[0]
path = viterbi(model, first)
print(f"decode {first.date} ({first.source}): states {path.states}, "
      f"log prob {path.log_prob:.3f}")

daily = score_documents(model, docs)
print("daily scores:")
for date, score in zip(daily.dates, daily.scores):
    print(f"  {date}: {score:+.3f}")

series = parse_csv((DATA / "BANKA.csv").read_bytes(), "BANKA")
aligned = align_sentiment(series.dates, daily, lookback_days=3)
nonzero = int((aligned != 0).sum())
print(f"aligned to {len(series)} trading days; {nonzero} days carry a score")
