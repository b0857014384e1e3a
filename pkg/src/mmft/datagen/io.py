"""Dataset files: prices.csv, macro.csv, docs.jsonl, events.json and ledger.json.

All files are UTF-8 with ISO-8601 dates. Floats are written with ``repr`` so
a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from mmft.datagen.generate import Dataset, Document
from mmft.encoders.graph import EventGraph
from mmft.errors import InputError, ParseError, RangeError
from mmft.timebase import RawSeries, TradingCalendar, parse_date

PRICE_COLUMNS = ("date", "symbol", "open", "high", "low", "close", "volume")
MACRO_COLUMNS = ("date", "indicator", "value", "frequency")
FILES = ("prices.csv", "macro.csv", "docs.jsonl", "events.json")


def _f(x) -> str:
    return repr(float(x))


def save_dataset(ds: Dataset, directory) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "prices.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for t, day in enumerate(ds.calendar.iso()):
            for si, sym in enumerate(ds.symbols):
                w.writerow([day, sym] + [_f(v) for v in ds.prices[si, t]])
    written.append(path)

    path = out / "macro.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MACRO_COLUMNS)
        for s in ds.macro:
            for d, v in s.observations:
                w.writerow([d.isoformat(), s.name, _f(v), s.frequency])
    written.append(path)

    path = out / "docs.jsonl"
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for doc in ds.docs:
            rec = {"date": ds.calendar.day(doc.ordinal).isoformat(), "symbol": doc.symbol, "text": doc.text}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    written.append(path)

    path = out / "events.json"
    path.write_text(json.dumps(ds.events.to_json(ds.calendar), indent=1) + "\n", encoding="utf-8")
    written.append(path)

    if ds.ledger is not None:
        path = out / "ledger.json"
        path.write_text(json.dumps(ds.ledger, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _read_csv(path: Path, columns: tuple):
    if not path.exists():
        raise ParseError(path, 0, "file not found")
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != columns:
        raise ParseError(path, 1, f"header must be {','.join(columns)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise ParseError(path, lineno, f"expected {len(columns)} fields, got {len(row)}")
        yield lineno, row


def _load_prices(path: Path):
    table: dict = {}
    symbols: list = []
    dates = set()
    for lineno, row in _read_csv(path, PRICE_COLUMNS):
        try:
            d = parse_date(row[0])
            vals = [float(v) for v in row[2:]]
        except (InputError, ValueError) as exc:
            raise ParseError(path, lineno, str(exc)) from exc
        if not all(np.isfinite(vals)):
            raise ParseError(path, lineno, "non-finite price field")
        sym = row[1].strip()
        if sym not in table:
            table[sym] = {}
            symbols.append(sym)
        if d in table[sym]:
            raise ParseError(path, lineno, f"duplicate row for {sym} on {d}")
        table[sym][d] = vals
        dates.add(d)
    if not symbols:
        raise ParseError(path, 2, "no price rows")
    cal = TradingCalendar(tuple(sorted(dates)))
    prices = np.zeros((len(symbols), len(cal), 5))
    for si, sym in enumerate(symbols):
        if len(table[sym]) != len(cal):
            raise ParseError(path, 0, f"symbol {sym} is missing dates present for other symbols")
        for d, vals in table[sym].items():
            prices[si, cal.index[d]] = vals
    return cal, symbols, prices


def _load_macro(path: Path):
    obs: dict = {}
    for lineno, row in _read_csv(path, MACRO_COLUMNS):
        try:
            d, v = parse_date(row[0]), float(row[2])
        except (InputError, ValueError) as exc:
            raise ParseError(path, lineno, str(exc)) from exc
        name, freq = row[1].strip(), row[3].strip()
        entry = obs.setdefault(name, {"frequency": freq, "obs": []})
        if entry["frequency"] != freq:
            raise ParseError(path, lineno, f"indicator {name} changes frequency")
        entry["obs"].append((d, v))
    series = []
    for name, entry in obs.items():
        try:
            series.append(RawSeries(tuple(entry["obs"]), entry["frequency"], name))
        except InputError as exc:
            raise ParseError(path, 0, f"indicator {name}: {exc}") from exc
    return series


def _load_docs(path: Path, cal: TradingCalendar, symbols: list):
    docs = []
    if not path.exists():
        raise ParseError(path, 0, "file not found")
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc = Document(cal.ordinal(parse_date(rec["date"])), str(rec["symbol"]), str(rec["text"]))
            except (json.JSONDecodeError, KeyError, TypeError, InputError, RangeError) as exc:
                raise ParseError(path, lineno, f"bad document record: {exc}") from exc
            if doc.symbol not in symbols:
                raise ParseError(path, lineno, f"unknown symbol {doc.symbol!r}")
            docs.append(doc)
    docs.sort(key=lambda d: (d.ordinal, d.symbol))
    return docs


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    cal, symbols, prices = _load_prices(root / "prices.csv")
    macro = _load_macro(root / "macro.csv")
    docs = _load_docs(root / "docs.jsonl", cal, symbols)
    path = root / "events.json"
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        graph = EventGraph.from_json(obj, cal)
    except FileNotFoundError:
        raise ParseError(path, 0, "file not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    except (InputError, RangeError) as exc:
        raise ParseError(path, 0, str(exc)) from exc
    ledger = None
    path = root / "ledger.json"
    if path.exists():
        try:
            ledger = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    return Dataset(cal, symbols, prices, macro, docs, graph, ledger)
