"""Data-analysis assistants over the simulation's time series.

Two assistants share a deterministic statistics core so that every number in
their output is computed, never generated: a focus-triggered analyst that
reacts to columns the user drops for visualisation, and a conversational
assistant that can call a fixed registry of data tools and draft reports.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .gateway import ChatMessage, ChatRequest, Gateway, RetryPolicy

TOOL_BUDGET = 5  # executed tool calls per conversational turn


class UnknownColumn(KeyError):
    pass


class EmptySeries(ValueError):
    pass


@dataclass(frozen=True)
class SeriesStats:
    count: int
    mean: float
    min: float
    max: float
    std: float          # population standard deviation
    slope: float        # ordinary least-squares trend, units per tick


def describe_stats(values: Sequence[float], ticks: Sequence[float] | None = None) -> SeriesStats:
    """Exact summary statistics; ticks default to 0..n-1."""
    n = len(values)
    if n == 0:
        raise EmptySeries("cannot describe an empty series")
    if ticks is None:
        ticks = range(n)
    elif len(ticks) != n:
        raise ValueError("ticks and values must have equal length")
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    t_mean = sum(ticks) / n
    denom = sum((t - t_mean) ** 2 for t in ticks)
    if denom == 0.0:
        slope = 0.0
    else:
        slope = sum((t - t_mean) * (v - mean) for t, v in zip(ticks, values)) / denom
    return SeriesStats(
        count=n,
        mean=mean,
        min=min(values),
        max=max(values),
        std=math.sqrt(var),
        slope=slope,
    )


class DataCatalog:
    """Named time series sharing one tick axis, loaded from the run CSV."""

    def __init__(self, ticks: list[float], series: dict[str, list[float]]):
        self.ticks = ticks
        self._series = series

    @classmethod
    def from_csv(cls, path: str | Path) -> "DataCatalog":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return cls([], {})
            names = [n for n in reader.fieldnames if n != "tick"]
            if len(set(reader.fieldnames)) != len(reader.fieldnames):
                raise ValueError(f"duplicate column names in {path}")
            ticks: list[float] = []
            series: dict[str, list[float]] = {n: [] for n in names}
            for row in reader:
                ticks.append(float(row["tick"]))
                for n in names:
                    series[n].append(float(row[n]))
        return cls(ticks, series)

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(self._series.keys())

    def values(self, name: str) -> list[float]:
        if name not in self._series:
            raise UnknownColumn(name)
        return list(self._series[name])

    def stats(self, name: str) -> SeriesStats:
        return describe_stats(self.values(name), self.ticks)


@dataclass(frozen=True)
class FocusSet:
    """Columns currently dropped for visualisation; must exist in the catalog."""

    columns: frozenset[str]

    def validate(self, catalog: DataCatalog) -> None:
        unknown = self.columns - set(catalog.columns)
        if unknown:
            raise UnknownColumn(", ".join(sorted(unknown)))


def stats_line(name: str, s: SeriesStats) -> str:
    return (
        f"{name}: count={s.count} mean={s.mean:.6f} min={s.min:.6f} "
        f"max={s.max:.6f} std={s.std:.6f} slope={s.slope:.6f}"
    )


def stats_table(catalog: DataCatalog, columns: Iterable[str]) -> str:
    """Fixed-format statistics block; injected verbatim into assistant output."""
    return "\n".join(stats_line(name, catalog.stats(name)) for name in sorted(columns))


def saa_on_focus_change(
    focus: FocusSet,
    catalog: DataCatalog,
    gateway: Gateway,
    phase_key: int | str = 0,
) -> str:
    """Automatic analysis when the focused columns change.

    Returns the computed statistics table verbatim, followed by the backend's
    narrative; an empty focus produces no output and no call.
    """
    if not focus.columns:
        return ""
    focus.validate(catalog)
    table = stats_table(catalog, focus.columns)
    request = ChatRequest(
        system=(
            "You are a data analyst inside a land-use policy simulation. "
            "Summarise what the following per-column statistics say about the "
            "focused series. Use only the numbers provided."
        ),
        messages=(ChatMessage("user", table),),
        tag="saa",
        phase=phase_key,
    )
    narrative, _usage, _used = gateway.complete_with_retry(request)
    return table + "\n\n" + narrative


@dataclass(frozen=True)
class ToolCall:
    tool: str
    arguments: dict
    result: str


_TOOL_FENCE_RE = re.compile(r"```tool\s*\n(.*?)```", re.DOTALL)

TOOL_NAMES = ("load_series", "describe_stats", "compare_to_goal", "generate_report")


def parse_tool_directives(text: str) -> list[dict]:
    """Fenced ``tool`` blocks containing {"tool": name, "args": {...}}."""
    directives = []
    for block in _TOOL_FENCE_RE.finditer(text):
        try:
            payload = json.loads(block.group(1))
        except json.JSONDecodeError:
            directives.append({"tool": None, "args": {}, "raw": block.group(1)})
            continue
        if isinstance(payload, dict):
            directives.append(
                {"tool": payload.get("tool"), "args": payload.get("args") or {}, "raw": None}
            )
    return directives


def _tool_load_series(catalog: DataCatalog, args: dict) -> str:
    values = catalog.values(str(args["column"]))
    tail = list(zip(catalog.ticks, values))[-20:]
    return "\n".join(f"t={int(t)}: {v:.6f}" for t, v in tail)


def _tool_describe_stats(catalog: DataCatalog, args: dict) -> str:
    name = str(args["column"])
    return stats_line(name, catalog.stats(name))


def _tool_compare_to_goal(catalog: DataCatalog, args: dict) -> str:
    name = str(args["column"])
    goal = str(args["goal_column"])
    values = catalog.values(name)
    goals = catalog.values(goal)
    gaps = [g - v for v, g in zip(values, goals)]
    meeting = sum(1 for gap in gaps if gap <= 0)
    return (
        f"{name} vs {goal}: latest={values[-1]:.6f} goal={goals[-1]:.6f} "
        f"latest_gap={gaps[-1]:.6f} mean_gap={sum(gaps) / len(gaps):.6f} "
        f"ticks_meeting_goal={meeting}/{len(gaps)}"
    )


def execute_tool(catalog: DataCatalog, name: str | None, args: dict) -> str:
    """Run one registered tool; unknown tools come back as error text so the
    model can recover.  Tools read the catalog and mutate nothing."""
    handlers = {
        "load_series": _tool_load_series,
        "describe_stats": _tool_describe_stats,
        "compare_to_goal": _tool_compare_to_goal,
    }
    if name not in handlers:
        return f"error: unknown tool {name!r}; available tools: {', '.join(TOOL_NAMES)}"
    try:
        return handlers[name](catalog, args)
    except UnknownColumn as exc:
        return f"error: unknown column {exc}"
    except KeyError as exc:
        return f"error: missing argument {exc}"
    except (ValueError, TypeError) as exc:
        return f"error: {exc}"


REPORT_INSTRUCTION = (
    "Draft a concise technical report from the dialogue below, suitable for "
    "submission to policymaking institutions. State observed trends and "
    "concrete recommendations, citing only numbers that appear in the dialogue."
)


def generate_report(
    dialogue: Sequence[tuple[str, str]],
    gateway: Gateway,
    phase_key: int | str = "report",
    length_hint: str = "under 300 words",
) -> str:
    """Draft a report from the dialogue history.  The caller routes the result
    into the pending decision draft; this function never submits anything."""
    if not dialogue:
        raise ValueError("dialogue must be non-empty")
    text = "\n".join(f"{speaker}: {line}" for speaker, line in dialogue)
    request = ChatRequest(
        system=REPORT_INSTRUCTION + f" Keep it {length_hint}.",
        messages=(ChatMessage("user", text),),
        tag="vaa",
        phase=phase_key,
    )
    report, _usage, _used = gateway.complete_with_retry(request)
    return report


def vaa_turn(
    dialogue: Sequence[tuple[str, str]],
    catalog: DataCatalog,
    gateway: Gateway,
    phase_key: int | str = 0,
    tool_budget: int = TOOL_BUDGET,
    retry_policy: RetryPolicy | None = None,
) -> tuple[str, list[ToolCall]]:
    """One conversational-assistant turn with tool calling.

    The backend may emit fenced tool directives; each is executed and its
    result appended before re-querying, until a plain reply arrives or the
    tool budget is exhausted (the reply is then truncated with a notice).
    """
    if not dialogue:
        raise ValueError("dialogue must be non-empty")
    policy = retry_policy or RetryPolicy()
    system = (
        "You are a versatile analysis assistant inside a land-use policy "
        "simulation. You may call data tools by emitting a fenced block "
        "tagged `tool` containing JSON {\"tool\": name, \"args\": {...}}. "
        f"Available tools: {', '.join(TOOL_NAMES)}. Catalog columns: "
        f"{', '.join(catalog.columns)}."
    )
    messages: list[ChatMessage] = [ChatMessage(s, t) for s, t in dialogue]
    calls: list[ToolCall] = []
    attempt_round = 1

    def with_results(text: str) -> str:
        # Executed results travel with the reply so every number is auditable.
        if not calls:
            return text
        return "\n".join(c.result for c in calls) + "\n\n" + text

    while True:
        request = ChatRequest(
            system=system,
            messages=tuple(messages),
            tag="vaa",
            phase=phase_key,
            attempt=attempt_round,
        )
        reply, _usage, used = gateway.complete_with_retry(request, policy)
        attempt_round += used
        directives = parse_tool_directives(reply)
        if not directives:
            return with_results(reply), calls
        results = []
        for directive in directives:
            if len(calls) >= tool_budget:
                notice = "[tool budget exhausted; answering with results so far]"
                return with_results(reply + "\n\n" + notice), calls
            if directive["tool"] == "generate_report":
                result = generate_report(
                    [(m.role, m.text) for m in messages], gateway, phase_key=f"{phase_key}-report"
                )
            else:
                result = execute_tool(catalog, directive["tool"], directive["args"])
            calls.append(
                ToolCall(tool=str(directive["tool"]), arguments=directive["args"], result=result)
            )
            results.append(result)
        messages.append(ChatMessage("assistant", reply))
        messages.append(ChatMessage("user", "Tool results:\n" + "\n".join(results)))
