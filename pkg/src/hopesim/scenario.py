"""Scenario loading: agent profiles, visibility edges, schedule, land setup.

A scenario is a JSON document; the packaged default defines the seven-role
institutional network and the default land configuration.  Persona prompts
are plain data so they can be edited without touching code.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from . import land
from .decisions import PolicyDecision, render_decision
from .gateway import ScriptBook
from .institutions import (
    ActivationSchedule,
    AgentProfile,
    HIGH_LEVEL,
    InstitutionNetwork,
    VisibilityGraph,
)
from .land import AftSpec, LandParams, PolicyLevers, ServiceId


@dataclass(frozen=True)
class LandSetup:
    width: int
    height: int
    prices: dict[ServiceId, float]
    initial_goal_meat: float
    initial_goal_pa: float
    params: LandParams

    def initial_levers(self) -> PolicyLevers:
        return PolicyLevers(
            subsidy={}, goal_meat=self.initial_goal_meat, goal_pa=self.initial_goal_pa
        )


@dataclass(frozen=True)
class Scenario:
    network: InstitutionNetwork
    land: LandSetup
    human_role: str | None = None


def _aft_from_dict(payload: dict) -> AftSpec:
    efficiency = {ServiceId(k): float(v) for k, v in payload["efficiency"].items()}
    weights = {ServiceId(k): tuple(float(x) for x in v) for k, v in payload["capital_weights"].items()}
    return AftSpec(
        id=int(payload["id"]),
        name=str(payload["name"]),
        efficiency=efficiency,
        capital_weights=weights,
        base_cost=float(payload["base_cost"]),
        restricted_on_protected=bool(payload.get("restricted_on_protected", False)),
    )


def _land_from_dict(payload: dict, budget_rate: float | None = None) -> LandSetup:
    afts = tuple(_aft_from_dict(a) for a in payload["afts"]) if "afts" in payload else land.default_afts()
    for aft in afts:
        aft.validate()
    param_overrides = dict(payload.get("params", {}))
    if budget_rate is not None:
        param_overrides["budget_rate"] = budget_rate
    params = LandParams(afts=afts, **param_overrides)
    prices = dict(land.DEFAULT_PRICES)
    for k, v in payload.get("prices", {}).items():
        prices[ServiceId(k)] = float(v)
    return LandSetup(
        width=int(payload.get("width", 20)),
        height=int(payload.get("height", 20)),
        prices=prices,
        initial_goal_meat=float(payload.get("initial_goal_meat", land.DEFAULT_INITIAL_GOAL_MEAT)),
        initial_goal_pa=float(payload.get("initial_goal_pa", land.DEFAULT_INITIAL_GOAL_PA)),
        params=params,
    )


def scenario_from_dict(payload: dict, budget_rate: float | None = None) -> Scenario:
    profiles = tuple(
        AgentProfile(
            id=p["id"],
            role_name=p.get("role_name", p["id"]),
            persona_prompt=p["persona_prompt"],
            produces_decision=bool(p.get("produces_decision", False)),
        )
        for p in payload["profiles"]
    )
    edges = frozenset((src, dst) for src, dst in payload["edges"])
    schedule = ActivationSchedule(
        order=tuple(payload["schedule"]), human_role=payload.get("human_role")
    )
    network = InstitutionNetwork(profiles=profiles, graph=VisibilityGraph(edges), schedule=schedule)
    network.validate()
    setup = _land_from_dict(payload.get("land", {}), budget_rate)
    return Scenario(network=network, land=setup, human_role=payload.get("human_role"))


def load_scenario(path: str | Path, budget_rate: float | None = None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return scenario_from_dict(payload, budget_rate)


def default_scenario_payload() -> dict:
    text = resources.files("hopesim.data").joinpath("default_scenario.json").read_text("utf-8")
    return json.loads(text)


def default_scenario(budget_rate: float | None = None) -> Scenario:
    return scenario_from_dict(default_scenario_payload(), budget_rate)


def default_network() -> InstitutionNetwork:
    """The seven default roles with their information-flow edges and schedule."""
    return default_scenario().network


# --- Default stub script ------------------------------------------------------
# A conservative scripted cast for observer runs: every institutional agent
# states a short position each phase and the high-level institution keeps the
# even budget split while nudging both goals up 5%.

_PHASE_MOODS = {
    1: "early trends",
    2: "consolidating trends",
    3: "mid-simulation pressures",
    4: "end-game priorities",
}

CONSERVATIVE_DECISION = PolicyDecision(share_agri=0.5, share_env=0.5, adj_meat=0.05, adj_pa=0.05)


def _agent_line(agent: str, phase: int) -> str:
    mood = _PHASE_MOODS.get(phase, f"phase {phase}")
    lines = {
        "research_supplier": (
            f"Reviewing the {mood}: meat supply still sits below its goal while "
            "protected-area coverage is converging on target. I advise measured, "
            "evidence-based goal adjustments rather than abrupt reallocation."
        ),
        "env_ngo": (
            f"Given the {mood}, conservation cannot wait. We urge the high-level "
            "institution to prioritise protected-area expansion and to resist "
            "pressure to divert funds into livestock subsidies."
        ),
        "land_user_assoc": (
            f"Our members face real costs under the {mood}. Meat producers need "
            "dependable support; we ask for a stronger budget share for "
            "agricultural programmes and more ambitious meat-supply goals."
        ),
        "law_consultant": (
            f"On the {mood}: current statutes require balancing productive land "
            "use with environmental protection. Any reallocation should remain "
            "proportionate and legally defensible."
        ),
        "agri_institution": (
            f"Operationally, the {mood} show our subsidy programme straining the "
            "budget when the meat-supply gap widens. We request a budget share "
            "sufficient to avoid a prolonged deficit."
        ),
        "env_institution": (
            f"Designation is proceeding steadily through the {mood}. We can meet "
            "the coverage goal at the present share, provided it is not reduced."
        ),
    }
    return lines[agent]


def _high_level_text(phase: int, decision: PolicyDecision) -> str:
    return (
        f"Weighing all positions in phase {phase}, I keep the allocation balanced "
        "and continue a cautious upward revision of both policy goals.\n"
        + render_decision(decision)
    )


def conservative_script_book(phases: int = 5) -> ScriptBook:
    """Stub responses for every agent in activation phases 1..phases-1."""
    book = ScriptBook()
    for phase in range(1, phases):
        for agent in (
            "research_supplier",
            "env_ngo",
            "land_user_assoc",
            "law_consultant",
            "agri_institution",
            "env_institution",
        ):
            book.add(agent, phase, 1, _agent_line(agent, phase))
        book.add(HIGH_LEVEL, phase, 1, _high_level_text(phase, CONSERVATIVE_DECISION))
    return book


def default_script_book(phases: int = 5) -> ScriptBook:
    return conservative_script_book(phases)
