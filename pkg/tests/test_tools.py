import pytest

from finqa.tools.builtin import FixtureBackends, build_registry, default_fixtures
from finqa.tools.registry import ToolParam, ToolRegistry, ToolSpec


@pytest.fixture
def registry():
    return build_registry(default_fixtures())


class TestRegistry:
    def test_register_then_list(self):
        reg = ToolRegistry()
        spec = ToolSpec("custom", "does a thing", (ToolParam("x", "string"),))
        reg.register(spec, lambda x: x)
        assert spec in reg.list_tools()

    def test_duplicate_rejected(self):
        reg = ToolRegistry()
        spec = ToolSpec("t", "desc")
        reg.register(spec, lambda: 1)
        with pytest.raises(ValueError, match="duplicate"):
            reg.register(spec, lambda: 2)
        assert len(reg.list_tools()) == 1

    def test_deregister_then_invoke(self, registry):
        registry.deregister("calculator")
        result = registry.invoke("calculator", {"expression": "1+1"})
        assert not result.ok and "unknown tool" in result.error

    def test_unknown_args_rejected(self, registry):
        result = registry.invoke("calculator", {"expression": "1", "bogus": 2})
        assert not result.ok and "unknown args" in result.error

    def test_missing_required_arg(self, registry):
        result = registry.invoke("fx_rate", {"base": "USD"})
        assert not result.ok and "quote" in result.error

    def test_enum_validation(self, registry):
        result = registry.invoke("market_data", {"ticker": "AWK", "field": "volume"})
        assert not result.ok and "expected one of" in result.error

    def test_tool_exception_becomes_error_result(self):
        reg = ToolRegistry()
        reg.register(ToolSpec("boom", "always fails"), lambda: 1 / 0)
        result = reg.invoke("boom", {})
        assert not result.ok and "division" in result.error

    def test_roster_stable_order(self, registry):
        assert registry.roster_text() == registry.roster_text()
        names = [s.name for s in registry.list_tools()]
        assert names == sorted(names)


class TestCalculatorTool:
    def test_growth_rate(self, registry):
        result = registry.invoke("calculator", {"expression": "(45.45-40.13)/40.13"})
        assert result.ok
        assert abs(result.payload["value"] - 0.13256915026164965) < 1e-12

    def test_division_by_zero_is_error_result(self, registry):
        result = registry.invoke("calculator", {"expression": "1/0"})
        assert not result.ok and "zero" in result.error


class TestWebSearch:
    def test_fixture_hit(self, registry):
        result = registry.invoke("web_search", {
            "query": "American Water Works fair value per share"})
        assert result.ok and result.payload[0]["title"] == "AWK 10-K highlights"

    def test_unknown_query_empty(self, registry):
        result = registry.invoke("web_search", {"query": "nothing canned here"})
        assert result.ok and result.payload == []

    def test_top_n_truncates(self):
        fx = FixtureBackends()
        fx.add_search("q", [{"title": str(i), "url": "", "snippet": ""} for i in range(5)])
        reg = build_registry(fx)
        result = reg.invoke("web_search", {"query": "q", "top_n": 1})
        assert len(result.payload) == 1

    def test_top_n_bounds(self, registry):
        result = registry.invoke("web_search", {"query": "q", "top_n": 11})
        assert not result.ok


class TestFxRate:
    def test_identity_pair(self, registry):
        result = registry.invoke("fx_rate", {"base": "JPY", "quote": "JPY"})
        assert result.ok and result.payload["rate"] == 1.0

    def test_fixture_rate(self, registry):
        result = registry.invoke("fx_rate", {"base": "USD", "quote": "EUR"})
        assert result.ok and result.payload["rate"] == 0.9

    def test_inverse_consistency(self, registry):
        ab = registry.invoke("fx_rate", {"base": "USD", "quote": "EUR"}).payload["rate"]
        ba = registry.invoke("fx_rate", {"base": "EUR", "quote": "USD"}).payload["rate"]
        assert abs(ab * ba - 1.0) < 1e-9

    def test_unknown_pair(self, registry):
        result = registry.invoke("fx_rate", {"base": "USD", "quote": "ZZZ"})
        assert not result.ok

    def test_bad_code_shape(self, registry):
        result = registry.invoke("fx_rate", {"base": "DOLLARS", "quote": "EUR"})
        assert not result.ok


class TestMarketData:
    def test_series_verbatim(self, registry):
        result = registry.invoke("market_data", {"ticker": "AWK", "field": "series"})
        assert result.ok
        assert [p["date"] for p in result.payload["series"]] == [
            "2015-12-29", "2015-12-30", "2015-12-31"]

    def test_empty_range(self, registry):
        result = registry.invoke("market_data", {
            "ticker": "AWK", "field": "series", "start": "2020-01-01", "end": "2020-01-02"})
        assert result.ok and result.payload["series"] == []

    def test_price_shape(self, registry):
        result = registry.invoke("market_data", {"ticker": "AWK", "field": "price"})
        assert result.ok
        assert set(result.payload["price"]) == {"date", "close"}

    def test_unknown_ticker(self, registry):
        result = registry.invoke("market_data", {"ticker": "NOPE"})
        assert not result.ok


class TestFetchFiling:
    def test_fixture_filing(self, registry):
        result = registry.invoke("fetch_filing", {"accession_id": "0000318154-16-000052"})
        assert result.ok and "10-K" in result.payload["text"]

    def test_unknown_accession(self, registry):
        result = registry.invoke("fetch_filing", {"accession_id": "xx"})
        assert not result.ok
