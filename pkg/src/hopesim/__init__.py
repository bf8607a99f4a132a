"""Perspective-shifting socio-ecological policy simulation.

LLM-driven institutional agents negotiate land-use policy over a stylized
land-use environment; a human user can take over any agent mid-simulation,
and a protocol state machine with a reflective companion guides role
iteration and perspective integration.
"""

from .decisions import InvariantViolation, ParseFailure, PolicyDecision, parse_decision, render_decision
from .land import (
    AftSpec,
    BudgetAccount,
    Cell,
    LandParams,
    LandSimulation,
    LandState,
    PolicyLevers,
    ServiceId,
    aggregate_supply,
    designate_protected,
    make_world,
    perceived_utility,
    production,
    step,
)
from .session import Session, SessionConfig, SessionStatus, create_session, replay_run, run_headless

__all__ = [
    "AftSpec",
    "BudgetAccount",
    "Cell",
    "InvariantViolation",
    "LandParams",
    "LandSimulation",
    "LandState",
    "ParseFailure",
    "PolicyDecision",
    "PolicyLevers",
    "ServiceId",
    "Session",
    "SessionConfig",
    "SessionStatus",
    "aggregate_supply",
    "create_session",
    "designate_protected",
    "make_world",
    "parse_decision",
    "perceived_utility",
    "production",
    "render_decision",
    "replay_run",
    "run_headless",
    "step",
]

__version__ = "0.1.0"
