"""Built-in tools: calculator, web search, FX rates, market data, filings.

Each tool has a fixture backend (table-driven, deterministic) and a live HTTP
backend slot. The fixture profile wires only fixtures.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from datetime import date, timedelta

from .calculator import calculator_eval, format_result
from .registry import ToolParam, ToolRegistry, ToolSpec

_CCY_RE = re.compile(r"^[A-Z]{3}$")


def _normalized_digest(query: str) -> str:
    return hashlib.sha256(" ".join(query.lower().split()).encode()).hexdigest()[:16]


@dataclass
class FixtureBackends:
    """Canned responses keyed by normalized request."""

    search_results: dict[str, list[dict]] = field(default_factory=dict)
    fx_rates: dict[tuple[str, str], float] = field(default_factory=dict)
    market_series: dict[str, list[dict]] = field(default_factory=dict)  # ticker -> [{date, close}]
    filings: dict[str, str] = field(default_factory=dict)  # accession id -> text

    def add_search(self, query: str, results: list[dict]) -> None:
        self.search_results[_normalized_digest(query)] = results

    def add_fx(self, base: str, quote: str, rate: float) -> None:
        self.fx_rates[(base, quote)] = rate
        self.fx_rates[(quote, base)] = 1.0 / rate


def default_fixtures() -> FixtureBackends:
    fx = FixtureBackends()
    fx.add_search(
        "American Water Works fair value per share",
        [{"title": "AWK 10-K highlights", "url": "https://example.test/awk",
          "snippet": "Grant date fair values of 40.13 (2013) and 45.45 (2014)."}],
    )
    fx.add_fx("USD", "EUR", 0.9)
    fx.add_fx("USD", "INR", 83.1)
    fx.market_series["AWK"] = [
        {"date": "2015-12-29", "close": 59.22},
        {"date": "2015-12-30", "close": 59.43},
        {"date": "2015-12-31", "close": 59.74},
    ]
    fx.filings["0000318154-16-000052"] = (
        "AMERICAN WATER WORKS COMPANY, INC. Form 10-K for the fiscal year "
        "ended December 31, 2015."
    )
    return fx


def calculator_tool(expression: str) -> dict:
    value = calculator_eval(expression)
    return {"expression": expression, "value": float(value),
            "text": format_result(value)}


def make_web_search(fixtures: FixtureBackends):
    def web_search(query: str, top_n: int = 5) -> list[dict]:
        if not query.strip():
            raise ValueError("empty query")
        if not 1 <= top_n <= 10:
            raise ValueError("top_n must be in [1, 10]")
        hits = fixtures.search_results.get(_normalized_digest(query), [])
        return hits[:top_n]

    return web_search


def make_fx_rate(fixtures: FixtureBackends):
    def fx_rate(base: str, quote: str) -> dict:
        base, quote = base.upper(), quote.upper()
        for code in (base, quote):
            if not _CCY_RE.match(code):
                raise ValueError(f"not a currency code: {code!r}")
        if base == quote:
            return {"base": base, "quote": quote, "rate": 1.0, "as_of": date.today().isoformat()}
        rate = fixtures.fx_rates.get((base, quote))
        if rate is None:
            raise ValueError(f"unknown currency pair {base}/{quote}")
        return {"base": base, "quote": quote, "rate": rate, "as_of": date.today().isoformat()}

    return fx_rate


def make_market_data(fixtures: FixtureBackends):
    def market_data(ticker: str, field: str = "price", start: str = "",
                    end: str = "") -> dict:
        if not ticker.strip():
            raise ValueError("empty ticker")
        series = fixtures.market_series.get(ticker.upper())
        if series is None:
            raise ValueError(f"unknown ticker {ticker!r}")
        if start or end:
            lo = start or "0000-00-00"
            hi = end or "9999-99-99"
            window = [p for p in series if lo <= p["date"] <= hi]
        else:
            window = series
        if field == "price":
            last = window[-1] if window else series[-1]
            return {"ticker": ticker.upper(), "price": last}
        return {"ticker": ticker.upper(), "series": window}

    return market_data


def make_fetch_filing(fixtures: FixtureBackends):
    def fetch_filing(accession_id: str) -> dict:
        text = fixtures.filings.get(accession_id)
        if text is None:
            raise ValueError(f"unknown accession id {accession_id!r}")
        return {"accession_id": accession_id, "text": text}

    return fetch_filing


def build_registry(fixtures: FixtureBackends | None = None) -> ToolRegistry:
    """Standard toolset. Retrieval and ask_user are registered by the agent,
    which owns their session context."""
    fixtures = fixtures or default_fixtures()
    reg = ToolRegistry()
    reg.register(
        ToolSpec(
            name="calculator",
            description="Evaluate an arithmetic expression (+ - * / ^ % and parentheses).",
            params=(ToolParam("expression", "string"),),
        ),
        calculator_tool,
    )
    reg.register(
        ToolSpec(
            name="web_search",
            description="Search the web for news and pages not present in the corpus.",
            params=(ToolParam("query", "string"), ToolParam("top_n", "integer", required=False)),
        ),
        make_web_search(fixtures),
    )
    reg.register(
        ToolSpec(
            name="fx_rate",
            description="Latest exchange rate between two ISO-4217 currency codes.",
            params=(ToolParam("base", "string"), ToolParam("quote", "string")),
        ),
        make_fx_rate(fixtures),
    )
    reg.register(
        ToolSpec(
            name="market_data",
            description="Stock price quote or daily close series for a ticker.",
            params=(
                ToolParam("ticker", "string"),
                ToolParam("field", "enum", required=False, values=("price", "series")),
                ToolParam("start", "string", required=False),
                ToolParam("end", "string", required=False),
            ),
        ),
        make_market_data(fixtures),
    )
    reg.register(
        ToolSpec(
            name="fetch_filing",
            description="Fetch the text of a regulatory filing by accession id.",
            params=(ToolParam("accession_id", "string"),),
        ),
        make_fetch_filing(fixtures),
    )
    return reg
