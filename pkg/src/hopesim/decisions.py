"""Structured policy decisions and their extraction from free text.

The high-level institution announces budget shares for the two operational
institutions and signed goal adjustments for meat supply and protected-area
coverage.  The primary extraction path is a fenced JSON block; a regex
fallback recovers decisions stated in prose as percentages.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

SHARE_SUM_TOL = 0.02      # tolerated deviation of share_agri + share_env from 1
EXACT_SUM_TOL = 1e-6      # below this, shares are kept bit-for-bit (no renormalization)

DECISION_KEYS = ("share_agri", "share_env", "adj_meat", "adj_pa")


class ParseFailure(ValueError):
    """No decision candidate could be extracted from the text."""


class InvariantViolation(ValueError):
    """A candidate was extracted but violates the decision invariants."""


@dataclass(frozen=True)
class PolicyDecision:
    """Budget shares (fractions summing to 1) and signed goal adjustments."""

    share_agri: float
    share_env: float
    adj_meat: float
    adj_pa: float

    def validate(self) -> None:
        if not (0.0 <= self.share_agri <= 1.0 and 0.0 <= self.share_env <= 1.0):
            raise InvariantViolation(f"shares outside [0, 1]: {self}")
        if abs(self.share_agri + self.share_env - 1.0) > EXACT_SUM_TOL:
            raise InvariantViolation(
                f"shares sum to {self.share_agri + self.share_env}, expected 1"
            )
        if abs(self.adj_meat) > 1.0 or abs(self.adj_pa) > 1.0:
            raise InvariantViolation(f"adjustments outside [-1, 1]: {self}")

    def as_dict(self) -> dict[str, float]:
        return {
            "share_agri": self.share_agri,
            "share_env": self.share_env,
            "adj_meat": self.adj_meat,
            "adj_pa": self.adj_pa,
        }


EVEN_SPLIT = PolicyDecision(share_agri=0.5, share_env=0.5, adj_meat=0.0, adj_pa=0.0)


def render_decision(decision: PolicyDecision) -> str:
    """Canonical fenced block accepted by :func:`parse_decision`'s primary path."""
    decision.validate()
    return "```json\n" + json.dumps(decision.as_dict()) + "\n```"


_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)
_PERCENT_RE = re.compile(r"([+-]?)(\d+(?:\.\d+)?)\s*%")

_DECREASE_VERBS = re.compile(r"\b(decreas\w*|reduc\w*|cut(?:ting|s)?|lower\w*|shrink\w*)\b", re.I)
_INCREASE_VERBS = re.compile(r"\b(increas\w*|rais\w*|expand\w*|grow\w*|boost\w*|up\b)", re.I)

_ENV_HINT = re.compile(r"environment\w*|conservation\w*|ngo", re.I)
_AGRI_HINT = re.compile(r"agricultur\w*|farm\w*", re.I)
_MEAT_HINT = re.compile(r"\bmeat\b|livestock", re.I)
_PA_HINT = re.compile(r"\bpa\b|protected[- ]area\w*|\bcoverage\b|conservation\w*", re.I)


def _normalize_share_pair(a: float, b: float) -> tuple[float, float]:
    """Percent-or-fraction share pair to fractions summing to 1 (within tolerance)."""
    total = a + b
    if total > 1.5:  # stated as percentages
        a, b, total = a / 100.0, b / 100.0, total / 100.0
    if abs(total - 1.0) > SHARE_SUM_TOL:
        raise InvariantViolation(f"shares sum to {total}, outside 1 +/- {SHARE_SUM_TOL}")
    if abs(total - 1.0) > EXACT_SUM_TOL:
        a, b = a / total, b / total
    return a, b


def _normalize_adjustment(v: float) -> float:
    if abs(v) > 1.0:  # stated as a percentage
        v = v / 100.0
    if abs(v) > 1.0:
        raise InvariantViolation(f"adjustment {v} outside [-1, 1]")
    return v


def _from_mapping(payload: dict) -> PolicyDecision:
    values = {}
    for key in DECISION_KEYS:
        v = payload[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InvariantViolation(f"{key} is not numeric: {v!r}")
        values[key] = float(v)
    share_agri, share_env = _normalize_share_pair(values["share_agri"], values["share_env"])
    decision = PolicyDecision(
        share_agri=share_agri,
        share_env=share_env,
        adj_meat=_normalize_adjustment(values["adj_meat"]),
        adj_pa=_normalize_adjustment(values["adj_pa"]),
    )
    decision.validate()
    return decision


def _window_before(text: str, pos: int, width: int = 120) -> str:
    return text[max(0, pos - width):pos]


def _nearest_label(text: str, pos: int, hint_a: re.Pattern, hint_b: re.Pattern) -> str | None:
    """'a', 'b', or None depending on which hint pattern sits closest to pos."""
    best: tuple[int, str] | None = None
    for label, pattern in (("a", hint_a), ("b", hint_b)):
        for m in pattern.finditer(text):
            distance = min(abs(m.start() - pos), abs(m.end() - pos))
            if best is None or distance < best[0]:
                best = (distance, label)
    return best[1] if best else None


def _assign_pair(
    text: str,
    first: tuple[int, float],
    second: tuple[int, float],
    hint_a: re.Pattern,
    hint_b: re.Pattern,
) -> tuple[float, float]:
    """Order a value pair as (a, b) using the nearest keyword to each match;
    ambiguous or unlabeled pairs keep their order of appearance."""
    label_first = _nearest_label(text, first[0], hint_a, hint_b)
    label_second = _nearest_label(text, second[0], hint_a, hint_b)
    if label_first == "b" and label_second == "a":
        return second[1], first[1]
    return first[1], second[1]


def _fallback_parse(text: str) -> PolicyDecision:
    """Recover a decision stated in prose.

    Budget shares: an agri/env-labeled pair of unsigned percentages, else the
    first pair summing to ~100.  Goal adjustments: signed percentages, else
    unsigned ones governed by an increase/decrease verb; meat/PA keywords fix
    the assignment, order of appearance breaks ties.
    """
    matches = list(_PERCENT_RE.finditer(text))
    unsigned = [(m.start(), float(m.group(2))) for m in matches if not m.group(1)]
    signed = [
        (m.start(), float(m.group(2)) * (-1.0 if m.group(1) == "-" else 1.0))
        for m in matches
        if m.group(1)
    ]

    share_pair: tuple[tuple[int, float], tuple[int, float]] | None = None
    for i in range(len(unsigned)):
        for j in range(i + 1, len(unsigned)):
            if abs(unsigned[i][1] + unsigned[j][1] - 100.0) <= 2.0:
                share_pair = (unsigned[i], unsigned[j])
                break
        if share_pair:
            break
    if share_pair is None:
        # No pair sums to ~100.  A percentage near an agricultural hint plus one
        # near an environmental hint still marks an intended share pair: that is
        # the invariant-violation case, not a parse failure.
        labeled = [(p, v, _nearest_label(text, p, _AGRI_HINT, _ENV_HINT)) for p, v in unsigned]
        agri_labeled = [(p, v) for p, v, lab in labeled if lab == "a"]
        env_labeled = [(p, v) for p, v, lab in labeled if lab == "b"]
        if agri_labeled and env_labeled:
            _, a_val = min(agri_labeled, key=lambda t: abs(t[1] + env_labeled[0][1] - 100.0))
            _normalize_share_pair(a_val / 100.0, env_labeled[0][1] / 100.0)
        raise ParseFailure("no share percentages found")
    share_vals = _assign_pair(text, share_pair[0], share_pair[1], _AGRI_HINT, _ENV_HINT)
    share_agri, share_env = _normalize_share_pair(share_vals[0] / 100.0, share_vals[1] / 100.0)

    # Adjustments: signed percentages win; otherwise unsigned ones (excluding
    # the share pair) signed by the governing verb in the preceding window.
    adj_candidates = list(signed)
    if len(adj_candidates) < 2:
        used = {share_pair[0][0], share_pair[1][0]}
        for pos, val in unsigned:
            if pos in used:
                continue
            window = _window_before(text, pos)
            # the verb nearest to the percentage governs its sign
            dec = [m.end() for m in _DECREASE_VERBS.finditer(window)]
            inc = [m.end() for m in _INCREASE_VERBS.finditer(window)]
            if dec and (not inc or dec[-1] > inc[-1]):
                adj_candidates.append((pos, -val))
            elif inc:
                adj_candidates.append((pos, val))
        adj_candidates.sort(key=lambda t: t[0])
    if len(adj_candidates) < 2:
        raise ParseFailure("no adjustment percentages found")

    adj_meat, adj_pa = _assign_pair(
        text, adj_candidates[0], adj_candidates[1], _MEAT_HINT, _PA_HINT
    )
    decision = PolicyDecision(
        share_agri=share_agri,
        share_env=share_env,
        adj_meat=_normalize_adjustment(adj_meat / 100.0),
        adj_pa=_normalize_adjustment(adj_pa / 100.0),
    )
    decision.validate()
    return decision


def parse_decision(text: str) -> PolicyDecision:
    """Extract a :class:`PolicyDecision` from model output.

    Raises :class:`ParseFailure` when nothing decision-shaped is present and
    :class:`InvariantViolation` when a candidate breaks the share-sum or
    adjustment-range invariants.
    """
    for block in _FENCE_RE.finditer(text):
        try:
            payload = json.loads(block.group(1))
        except json.JSONDecodeError:
            continue
        if isinstance(payload, dict) and all(k in payload for k in DECISION_KEYS):
            return _from_mapping(payload)
    return _fallback_parse(text)
