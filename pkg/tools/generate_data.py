"""Regenerate the bundled synthetic dataset under data/.

Four ~520-row OHLCV series with distinct dynamics, a sentiment lexicon,
a news sample, and a labeled corpus.  Everything is seeded, so rerunning
this script reproduces data/ byte for byte.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

N_BARS = 520
START = dt.date(2023, 1, 2)


def business_days(start: dt.date, count: int) -> list[dt.date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def close_path(symbol: str, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(N_BARS, dtype=float)
    if symbol == "BANKA":
        # steady climber with a weekly wiggle and one mid-sample break
        base = 90.0 + 0.06 * t + 2.5 * np.sin(2 * np.pi * t / 5.0)
        base += np.where(t > 260, -0.03 * (t - 260), 0.0)
        noise = rng.normal(0.0, 0.8, N_BARS)
    elif symbol == "BANKB":
        # saturating growth toward a capacity
        base = 40.0 + 80.0 / (1.0 + np.exp(-(t - 250.0) / 90.0))
        noise = rng.normal(0.0, 1.1, N_BARS)
    elif symbol == "BANKC":
        # mean reversion around 60 with a monthly cycle
        base = 60.0 + 4.0 * np.cos(2 * np.pi * t / 21.0)
        ar = np.zeros(N_BARS)
        shocks = rng.normal(0.0, 0.9, N_BARS)
        for i in range(1, N_BARS):
            ar[i] = 0.85 * ar[i - 1] + shocks[i]
        noise = ar
    else:
        # drifting random walk
        steps = rng.normal(0.12, 1.4, N_BARS)
        base = 75.0 + np.cumsum(steps)
        noise = np.zeros(N_BARS)
    close = base + noise
    return np.maximum(close, 5.0)


def write_prices() -> None:
    dates = business_days(START, N_BARS)
    for i, symbol in enumerate(("BANKA", "BANKB", "BANKC", "BANKD")):
        rng = np.random.default_rng(1000 + i)
        close = close_path(symbol, rng)
        lines = ["date,open,high,low,close,volume"]
        prev_close = close[0] * 0.998
        for d, c in zip(dates, close):
            o = float(prev_close)
            c = float(c)
            spread = float(abs(rng.normal(0.0, 0.004))) + 0.001
            hi = max(o, c) * (1.0 + spread)
            lo = min(o, c) * (1.0 - spread)
            vol = int(rng.integers(200_000, 3_000_000))
            lines.append(f"{d.isoformat()},{o!r},{hi!r},{lo!r},{c!r},{vol}")
            prev_close = c
        (DATA / f"{symbol}.csv").write_text("\n".join(lines) + "\n")
        print(f"{symbol}: {len(dates)} bars {dates[0]}..{dates[-1]}")


LEXICON = {
    "surge": 0, "soar": 0, "soars": 0, "record": 0, "breakthrough": 0, "stellar": 0,
    "gain": 1, "gains": 1, "rise": 1, "rises": 1, "up": 1, "beat": 1, "beats": 1,
    "growth": 1, "strong": 1, "profit": 1, "profits": 1, "upgrade": 1, "optimistic": 1,
    "hold": 2, "holds": 2, "steady": 2, "flat": 2, "unchanged": 2, "market": 2,
    "stock": 2, "stocks": 2, "bank": 2, "shares": 2, "report": 2, "reports": 2,
    "quarter": 2, "earnings": 2, "trading": 2, "analysts": 2,
    "drop": 3, "drops": 3, "fall": 3, "falls": 3, "down": 3, "miss": 3, "misses": 3,
    "weak": 3, "loss": 3, "losses": 3, "decline": 3, "downgrade": 3, "concern": 3,
    "crash": 4, "plunge": 4, "plunges": 4, "collapse": 4, "scandal": 4, "fraud": 4,
}


def write_lexicon() -> None:
    lines = ["# word<TAB>category_id (0 strong_positive .. 4 strong_negative)"]
    for word, cat in LEXICON.items():
        lines.append(f"{word}\t{cat}")
    (DATA / "sentiment_lexicon.tsv").write_text("\n".join(lines) + "\n")
    print(f"lexicon: {len(LEXICON)} words")


NEWS = [
    ("2024-10-14", "wire", "BANKA shares rise after strong quarter earnings beat"),
    ("2024-10-14", "blog", "analysts optimistic on bank growth, profits up 12"),
    ("2024-10-16", "wire", "market holds steady, BANKA stock flat in quiet trading"),
    ("2024-10-18", "wire", "BANKA misses revenue target, shares drop 3 on the report"),
    ("2024-10-18", "blog", "concern grows over weak loan book, downgrade chatter"),
    ("2024-10-21", "wire", "sector rebound lifts stocks, BANKA gains with the market"),
    ("2024-10-23", "blog", "http://example.com/a @trader says hold, earnings unchanged"),
    ("2024-10-25", "wire", "record quarter sends shares to a surge, stellar growth"),
    ("2024-10-28", "wire", "profit warning: losses widen, stock falls ahead of report"),
    ("2024-10-30", "blog", "steady trading, analysts see flat quarter for the bank"),
    ("2024-11-01", "wire", "upgrade from two analysts, optimistic outlook, shares rise"),
    ("2024-11-04", "wire", "fraud probe news: shares plunge, scandal hits the bank"),
    ("2024-11-06", "blog", "market unchanged, stocks hold as earnings season ends"),
    ("2024-11-08", "wire", "strong growth in deposits, profits beat, stock gains 2"),
    ("2024-11-11", "wire", "decline in margins, weak quarter, shares down on the miss"),
    ("2024-11-13", "blog", "@desk quiet session, bank shares flat, volume thin"),
    ("2024-11-15", "wire", "soars on breakthrough deal, record volumes, surge continues"),
    ("2024-11-18", "wire", "loss provision rises, concern over credit, stock drops"),
    ("2024-11-20", "blog", "steady hands: market holds, analysts keep estimates unchanged"),
    ("2024-11-22", "wire", "gains extend, strong close to the quarter, profit up 5"),
]


def write_news() -> None:
    lines = ["# date<TAB>source<TAB>text"]
    for date, source, text in NEWS:
        lines.append(f"{date}\t{source}\t{text}")
    (DATA / "news_sample.tsv").write_text("\n".join(lines) + "\n")
    print(f"news: {len(NEWS)} documents")


CORPUS = [
    ("positive", "shares rise on strong earnings beat, profit growth continues"),
    ("positive", "record quarter, stock gains as analysts upgrade the bank"),
    ("positive", "surge in deposits, optimistic outlook, profits up again"),
    ("positive", "stellar report sends shares up, growth beats estimates"),
    ("positive", "soars after breakthrough, market cheers the strong numbers"),
    ("positive", "gains hold, rise extends into the close, up 4 on the day"),
    ("negative", "shares drop after weak quarter, loss widens at the bank"),
    ("negative", "downgrade hits the stock, decline in margins, concern grows"),
    ("negative", "plunge on fraud scandal, losses mount, shares fall hard"),
    ("negative", "misses on revenue, stock down, analysts flag weak guidance"),
    ("negative", "crash in sector drags shares, falls deepen into the close"),
    ("negative", "loss provision rises, drop continues, down 6 this week"),
    ("neutral", "market holds steady, shares flat in quiet trading session"),
    ("neutral", "bank reports quarter in line, stock unchanged on the day"),
    ("neutral", "analysts hold estimates, earnings steady, volumes thin"),
    ("neutral", "flat session for stocks, market unchanged ahead of the report"),
    ("neutral", "shares hold, trading steady, no surprises in the quarter"),
    ("neutral", "report lands as expected, stock flat, analysts stay put"),
]


def write_corpus() -> None:
    lines = ["# label<TAB>text"]
    for label, text in CORPUS:
        lines.append(f"{label}\t{text}")
    (DATA / "labeled_corpus.tsv").write_text("\n".join(lines) + "\n")
    print(f"corpus: {len(CORPUS)} labeled documents")


def main() -> None:
    DATA.mkdir(exist_ok=True)
    write_prices()
    write_lexicon()
    write_news()
    write_corpus()


if __name__ == "__main__":
    main()
