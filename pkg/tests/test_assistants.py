"""Analysis assistants: exact statistics, focus-triggered analysis, tool loop."""
from __future__ import annotations

import json

import pytest

from conftest import gateway_from
from hopesim.assistants import (
    DataCatalog,
    EmptySeries,
    FocusSet,
    SeriesStats,
    UnknownColumn,
    describe_stats,
    execute_tool,
    generate_report,
    parse_tool_directives,
    saa_on_focus_change,
    stats_table,
    vaa_turn,
)


def write_csv(tmp_path, rows, header="tick,meat_supply,goal_meat"):
    path = tmp_path / "series.csv"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def catalog(tmp_path):
    rows = [f"{t},{float(3 * t + 2):.6f},{10.0:.6f}" for t in range(1, 9)]
    return DataCatalog.from_csv(write_csv(tmp_path, rows))


class TestDescribeStats:
    def test_constant_series(self):
        s = describe_stats([5.0, 5.0, 5.0])
        assert s == SeriesStats(count=3, mean=5.0, min=5.0, max=5.0, std=0.0, slope=0.0)

    def test_linear_series_slope_one(self):
        s = describe_stats([0.0, 1.0, 2.0, 3.0])
        assert s.slope == 1.0
        assert s.mean == 1.5

    def test_mean_of_two(self):
        assert describe_stats([2.0, 4.0]).mean == 3.0

    def test_population_std(self):
        # oracle: population variance of (1, 3) is 1, std is 1
        assert describe_stats([1.0, 3.0]).std == 1.0

    def test_ols_matches_finite_difference_oracle_on_linear(self):
        values = [float(3 * t + 2) for t in range(10)]
        ticks = list(range(10))
        s = describe_stats(values, ticks)
        fd = sum(
            (values[i + 1] - values[i]) / (ticks[i + 1] - ticks[i]) for i in range(9)
        ) / 9
        assert s.slope == fd == 3.0

    def test_single_point_slope_zero(self):
        s = describe_stats([7.0])
        assert s.slope == 0.0 and s.count == 1

    def test_empty_series_rejected(self):
        with pytest.raises(EmptySeries):
            describe_stats([])


class TestCatalog:
    def test_columns_and_values(self, catalog):
        assert catalog.columns == ("meat_supply", "goal_meat")
        assert catalog.values("meat_supply")[0] == 5.0
        assert catalog.ticks[0] == 1.0

    def test_unknown_column(self, catalog):
        with pytest.raises(UnknownColumn):
            catalog.values("nope")

    def test_stats_use_tick_axis(self, catalog):
        assert catalog.stats("meat_supply").slope == pytest.approx(3.0)

    def test_focus_must_be_subset(self, catalog):
        with pytest.raises(UnknownColumn):
            FocusSet(frozenset({"bogus"})).validate(catalog)


class TestSaa:
    def test_empty_focus_no_output_no_call(self, catalog):
        gw = gateway_from({})  # any call would raise MissingScriptKey
        assert saa_on_focus_change(FocusSet(frozenset()), catalog, gw) == ""

    def test_stats_table_verbatim_in_output(self, catalog):
        gw = gateway_from({"saa/0/1": "The series trends upward."})
        out = saa_on_focus_change(FocusSet(frozenset({"meat_supply"})), catalog, gw)
        table = stats_table(catalog, ["meat_supply"])
        assert table in out
        assert "The series trends upward." in out
        expected_std = describe_stats(
            catalog.values("meat_supply"), catalog.ticks
        ).std
        assert f"std={expected_std:.6f}" in out

    def test_two_columns_two_stat_lines(self, catalog):
        gw = gateway_from({"saa/0/1": "narrative"})
        out = saa_on_focus_change(
            FocusSet(frozenset({"meat_supply", "goal_meat"})), catalog, gw
        )
        stats_block = out.rsplit("\n\nnarrative", 1)[0]
        assert len(stats_block.splitlines()) == 2

    def test_unknown_column_error(self, catalog):
        gw = gateway_from({})
        with pytest.raises(UnknownColumn):
            saa_on_focus_change(FocusSet(frozenset({"ghost"})), catalog, gw)


def tool_block(name, **args):
    return "```tool\n" + json.dumps({"tool": name, "args": args}) + "\n```"


class TestVaa:
    def test_plain_reply_passthrough(self, catalog):
        gw = gateway_from({"vaa/0/1": "Nothing to compute."})
        reply, calls = vaa_turn([("user", "hello")], catalog, gw)
        assert reply == "Nothing to compute." and calls == []

    def test_scripted_tool_call_embeds_stats(self, catalog):
        gw = gateway_from(
            {
                "vaa/0/1": "Let me check.\n" + tool_block("describe_stats", column="meat_supply"),
                "vaa/0/2": "Done: see the numbers above.",
            }
        )
        reply, calls = vaa_turn([("user", "how is meat supply doing?")], catalog, gw)
        assert len(calls) == 1
        assert calls[0].tool == "describe_stats"
        line = stats_table(catalog, ["meat_supply"])
        assert calls[0].result == line
        assert line in reply  # computed numbers travel with the reply
        assert "Done: see the numbers above." in reply

    def test_malformed_directive_recovers(self, catalog):
        gw = gateway_from(
            {
                "vaa/0/1": "```tool\nnot json at all\n```",
                "vaa/0/2": "Sorry, plain answer instead.",
            }
        )
        reply, calls = vaa_turn([("user", "?")], catalog, gw)
        assert len(calls) == 1
        assert calls[0].result.startswith("error: unknown tool")
        assert "Sorry, plain answer instead." in reply

    def test_unknown_tool_error_fed_back(self, catalog):
        gw = gateway_from(
            {
                "vaa/0/1": tool_block("launch_rockets"),
                "vaa/0/2": "I will stick to data tools.",
            }
        )
        reply, calls = vaa_turn([("user", "?")], catalog, gw)
        assert "unknown tool" in calls[0].result

    def test_budget_exhaustion_truncates(self, catalog):
        blocks = "\n".join(tool_block("describe_stats", column="meat_supply") for _ in range(6))
        gw = gateway_from({"vaa/0/1": blocks})
        reply, calls = vaa_turn([("user", "go wild")], catalog, gw, tool_budget=5)
        assert len(calls) == 5
        assert "tool budget exhausted" in reply

    def test_compare_to_goal_tool(self, catalog):
        out = execute_tool(
            catalog, "compare_to_goal", {"column": "meat_supply", "goal_column": "goal_meat"}
        )
        assert "latest=26.000000" in out
        assert "goal=10.000000" in out

    def test_empty_dialogue_rejected(self, catalog):
        with pytest.raises(ValueError):
            vaa_turn([], catalog, gateway_from({}))


class TestGenerateReport:
    def test_report_from_dialogue(self):
        gw = gateway_from({"vaa/report/1": "Technical report: trends are stable."})
        out = generate_report([("user", "please summarise")], gw)
        assert out == "Technical report: trends are stable."

    def test_empty_dialogue_rejected(self):
        with pytest.raises(ValueError):
            generate_report([], gateway_from({}))


class TestDirectiveParsing:
    def test_multiple_blocks(self):
        text = tool_block("describe_stats", column="a") + "\nand\n" + tool_block("load_series", column="b")
        directives = parse_tool_directives(text)
        assert [d["tool"] for d in directives] == ["describe_stats", "load_series"]

    def test_non_tool_fences_ignored(self):
        assert parse_tool_directives("```json\n{}\n```") == []
