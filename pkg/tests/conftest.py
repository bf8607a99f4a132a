"""Shared fixtures: deterministic worlds, scripted backends, recording wrappers."""
from __future__ import annotations

import pytest

from hopesim import land
from hopesim.gateway import Gateway, ScriptBook, ScriptedBackend
from hopesim.land import AftSpec, LandParams, PolicyLevers, ServiceId
from hopesim.scenario import default_script_book
from hopesim.session import SessionConfig, create_session


class RecordingBackend:
    """Wraps a backend and keeps every request for prompt-content assertions."""

    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.inner.complete(request)

    def request_for(self, tag: str, phase=None):
        hits = [
            r for r in self.requests if r.tag == tag and (phase is None or r.phase == phase)
        ]
        assert hits, f"no request recorded for tag {tag} phase {phase}"
        return hits[-1]


def two_aft_params(**overrides) -> LandParams:
    """A minimal two-AFT roster with hand-checkable utilities.

    On a cell with capitals (c, _): producer utility = 1.1*c - 0.25 + subsidy
    effects; grower utility = c - 0.15.
    """
    prod = (1.0, 0.0)
    afts = (
        AftSpec(
            id=0,
            name="producer",
            efficiency={ServiceId.MEAT: 1.0, ServiceId.CROPS: 0.1},
            capital_weights={ServiceId.MEAT: prod, ServiceId.CROPS: prod},
            base_cost=0.25,
            restricted_on_protected=True,
        ),
        AftSpec(
            id=1,
            name="grower",
            efficiency={ServiceId.CROPS: 1.0},
            capital_weights={ServiceId.CROPS: prod},
            base_cost=0.15,
        ),
    )
    defaults = dict(afts=afts, takeover_margin=0.05)
    defaults.update(overrides)
    return LandParams(**defaults)


def static_levers(goal_meat: float = 0.0, goal_pa: float = 0.0) -> PolicyLevers:
    return PolicyLevers(subsidy={}, goal_meat=goal_meat, goal_pa=goal_pa)


@pytest.fixture
def observer_config(tmp_path):
    return SessionConfig(out_dir=str(tmp_path / "runs"))


@pytest.fixture
def observer_session(observer_config):
    return create_session(observer_config)


def scripted_gateway(extra: dict | None = None, phases: int = 5) -> Gateway:
    """Gateway over the conservative default script plus test-specific entries."""
    book = default_script_book(phases)
    for key, value in (extra or {}).items():
        book.entries[key] = value
    return Gateway(ScriptedBackend(book))


def gateway_from(entries: dict) -> Gateway:
    return Gateway(ScriptedBackend(ScriptBook(dict(entries))))
