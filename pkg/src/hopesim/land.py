"""Stylized land-use environment.

Rule-based land user types (AFTs) compete for grid cells by perceived
utility, produce ecosystem services from per-cell capital endowments, and
respond to subsidies, protected-area designation, policy goals, and the
budgets of two operational institutions.  The whole module is deterministic:
randomness enters only through seeded initial capital generation.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

WEIGHT_TOL = 1e-9
SHARE_TOL = 1e-9


class ServiceId(str, Enum):
    """The four ecosystem services produced by land use."""

    MEAT = "meat"
    CROPS = "crops"
    CARBON = "carbon"
    RECREATION = "recreation"


SERVICES: tuple[ServiceId, ...] = tuple(ServiceId)

AGRICULTURAL = "agricultural"
ENVIRONMENTAL = "environmental"


@dataclass(frozen=True)
class Cell:
    """One land cell: capital endowments, occupying AFT id, protection flag."""

    capitals: tuple[float, ...]
    aft: int
    protected: bool = False

    def validate(self) -> None:
        for c in self.capitals:
            if not (0.0 <= c <= 1.0):
                raise ValueError(f"capital {c} outside [0, 1]")


@dataclass(frozen=True)
class AftSpec:
    """An agent functional type: per-service efficiency and capital weights.

    ``efficiency[s]`` is the service output per tick per cell at full capital;
    ``capital_weights[s]`` weights the cell capitals when computing effective
    capital for service ``s`` and must sum to 1.
    """

    id: int
    name: str
    efficiency: Mapping[ServiceId, float]
    capital_weights: Mapping[ServiceId, tuple[float, ...]]
    base_cost: float
    restricted_on_protected: bool = False

    def validate(self) -> None:
        for s, m in self.efficiency.items():
            if not math.isfinite(m) or m < 0:
                raise ValueError(f"{self.name}: efficiency[{s.value}] = {m}")
            weights = self.capital_weights.get(s)
            if weights is None:
                raise ValueError(f"{self.name}: no capital weights for {s.value}")
            if any(w < 0 for w in weights):
                raise ValueError(f"{self.name}: negative weight for {s.value}")
            if abs(sum(weights) - 1.0) > WEIGHT_TOL:
                raise ValueError(f"{self.name}: weights for {s.value} sum to {sum(weights)}")


@dataclass(frozen=True)
class PolicyLevers:
    """Current policy: per-service subsidies and the two policy-target goals."""

    subsidy: Mapping[ServiceId, float]
    goal_meat: float
    goal_pa: float

    def validate(self) -> None:
        if any(v < 0 for v in self.subsidy.values()):
            raise ValueError("subsidies must be non-negative")
        if self.goal_meat < 0:
            raise ValueError("goal_meat must be non-negative")
        if not (0.0 <= self.goal_pa <= 1.0):
            raise ValueError("goal_pa must lie in [0, 1]")


@dataclass(frozen=True)
class BudgetAccount:
    """Budget account of one operational institution.

    ``surplus`` is the cumulative signed balance; deficits are allowed down to
    the configured cap, below which spending stops.
    """

    institution: str
    share: float
    inflow_rate: float
    surplus: float = 0.0


@dataclass(frozen=True)
class LandState:
    """Immutable snapshot of the land grid at one tick."""

    width: int
    height: int
    cells: tuple[Cell, ...]
    tick: int
    supply: Mapping[ServiceId, float]
    pa_coverage: float

    @property
    def cell_count(self) -> int:
        return self.width * self.height

    def protected_count(self) -> int:
        return sum(1 for c in self.cells if c.protected)


@dataclass(frozen=True)
class LandParams:
    """Tuning constants for the environment step."""

    afts: tuple[AftSpec, ...]
    takeover_margin: float = 0.3       # challenger must beat incumbent by this factor
    meat_gain: float = 0.5             # subsidy controller gain on the meat goal gap
    pa_gain: float = 0.5               # designation controller gain on the PA goal gap
    subsidy_cap: float = 0.5           # maximum per-unit meat subsidy
    budget_rate: float = 100.0         # total budget inflow per tick, split by shares
    designation_cost: float = 5.0      # one-off cost per newly protected cell
    maintenance_cost: float = 0.05     # per-protected-cell cost per tick
    deficit_cap: float = 50.0          # spending stops below -deficit_cap
    goal_floor: float = 1e-9           # guards the goal-gap division when goal == 0
    natural_capital: int = 1           # index of the natural-value capital
    capital_exponent: float = 0.45     # capitals ~ U(0,1)**exponent; <1 skews high

    def aft_by_id(self) -> dict[int, AftSpec]:
        return {a.id: a for a in self.afts}


@dataclass(frozen=True)
class StepReport:
    """What one environment step spent and why."""

    tick: int
    effective_subsidy: dict[ServiceId, float]
    designated: int
    designation_shortfall: int
    takeovers: int
    inflow: dict[str, float]
    expenditure: dict[str, float]


def production(cell: Cell, aft: AftSpec) -> dict[ServiceId, float]:
    """Per-service output of ``aft`` on ``cell``: efficiency times weighted capital."""
    out: dict[ServiceId, float] = {}
    for s in SERVICES:
        m = aft.efficiency.get(s, 0.0)
        if m == 0.0:
            out[s] = 0.0
            continue
        weights = aft.capital_weights[s]
        out[s] = m * sum(w * c for w, c in zip(weights, cell.capitals))
    return out


def perceived_utility(
    cell: Cell,
    aft: AftSpec,
    levers: PolicyLevers,
    prices: Mapping[ServiceId, float],
) -> float:
    """Land-value signal: subsidised revenue over all services minus base cost."""
    p = production(cell, aft)
    revenue = sum(
        (prices.get(s, 0.0) + levers.subsidy.get(s, 0.0)) * p[s] for s in SERVICES
    )
    return revenue - aft.base_cost


def eligible(aft: AftSpec, cell: Cell) -> bool:
    return not (cell.protected and aft.restricted_on_protected)


def aggregate_supply(state: LandState, afts: Iterable[AftSpec]) -> dict[ServiceId, float]:
    """Sum per-cell production of the occupying AFTs over the whole grid."""
    by_id = {a.id: a for a in afts}
    totals = {s: 0.0 for s in SERVICES}
    for cell in state.cells:
        p = production(cell, by_id[cell.aft])
        for s in SERVICES:
            totals[s] += p[s]
    return totals


def _best_eligible(
    cell: Cell,
    afts: Sequence[AftSpec],
    levers: PolicyLevers,
    prices: Mapping[ServiceId, float],
) -> tuple[AftSpec, float]:
    """Highest-utility eligible AFT; ties broken by lowest AFT id."""
    best: AftSpec | None = None
    best_u = -math.inf
    for aft in sorted(afts, key=lambda a: a.id):
        if not eligible(aft, cell):
            continue
        u = perceived_utility(cell, aft, levers, prices)
        if u > best_u:
            best, best_u = aft, u
    if best is None:
        raise ValueError("no eligible AFT for cell")
    return best, best_u


def designate_protected(
    state: LandState,
    n: int,
    params: LandParams,
    levers: PolicyLevers,
    prices: Mapping[ServiceId, float],
    criterion: Callable[[int, Cell], float] | None = None,
) -> tuple[LandState, int]:
    """Protect ``n`` more cells; returns the new state and any shortfall.

    Cells are picked by descending criterion (default: natural-value capital),
    ties by lowest cell index.  Protection is never revoked.  Restricted AFTs
    occupying a newly protected cell are replaced by the best eligible AFT.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if criterion is None:
        criterion = lambda _i, cell: cell.capitals[params.natural_capital]
    candidates = [i for i, c in enumerate(state.cells) if not c.protected]
    shortfall = max(0, n - len(candidates))
    take = min(n, len(candidates))
    if take == 0:
        return state, shortfall
    candidates.sort(key=lambda i: (-criterion(i, state.cells[i]), i))
    chosen = set(candidates[:take])
    by_id = params.aft_by_id()
    cells = list(state.cells)
    for i in chosen:
        cell = replace(cells[i], protected=True)
        if by_id[cell.aft].restricted_on_protected:
            best, _ = _best_eligible(cell, params.afts, levers, prices)
            cell = replace(cell, aft=best.id)
        cells[i] = cell
    new_cells = tuple(cells)
    protected = sum(1 for c in new_cells if c.protected)
    interim = LandState(
        width=state.width,
        height=state.height,
        cells=new_cells,
        tick=state.tick,
        supply=state.supply,
        pa_coverage=protected / state.cell_count,
    )
    # Replacements may have changed production; keep the supply identity intact.
    return replace(interim, supply=aggregate_supply(interim, params.afts)), shortfall


class LandSimulation:
    """Stateful stepper around the pure environment operations.

    Capitals never change after world creation, so per-(cell, AFT) production
    vectors and price revenues are tabulated once; utilities reduce to one
    multiply-add per subsidised service.  The arithmetic matches the pure
    functions operation for operation, so results are bit-identical.
    """

    def __init__(
        self,
        state: LandState,
        accounts: tuple[BudgetAccount, BudgetAccount],
        params: LandParams,
        prices: Mapping[ServiceId, float],
    ):
        self.state = state
        self.accounts = accounts
        self.params = params
        self.prices = dict(prices)
        self._roster = tuple(sorted(params.afts, key=lambda a: a.id))
        for aft in self._roster:
            aft.validate()
        # prod[i][j][k]: service-k output of roster AFT j on cell i.
        self._prod: list[list[tuple[float, ...]]] = [
            [tuple(production(cell, aft)[s] for s in SERVICES) for aft in self._roster]
            for cell in state.cells
        ]
        self._aft_index = {aft.id: j for j, aft in enumerate(self._roster)}

    def _utility(self, i: int, j: int, subsidy: Sequence[float]) -> float:
        # Same accumulation order as perceived_utility over SERVICES.
        p = self._prod[i][j]
        u = 0.0
        for k, s in enumerate(SERVICES):
            u += (self.prices.get(s, 0.0) + subsidy[k]) * p[k]
        return u - self._roster[j].base_cost

    def _best(self, i: int, cell: Cell, subsidy: Sequence[float]) -> tuple[int, float]:
        best_j, best_u = -1, -math.inf
        for j, aft in enumerate(self._roster):
            if cell.protected and aft.restricted_on_protected:
                continue
            u = self._utility(i, j, subsidy)
            if u > best_u:
                best_j, best_u = j, u
        if best_j < 0:
            raise ValueError("no eligible AFT for cell")
        return best_j, best_u

    def step(self, levers: PolicyLevers) -> StepReport:
        """One tick: subsidy controller, designation, competition sweep, supply
        recomputation, budget settlement, tick advance."""
        params = self.params
        state = self.state
        agri, env = self.accounts
        if agri.institution != AGRICULTURAL or env.institution != ENVIRONMENTAL:
            raise ValueError("accounts must be (agricultural, environmental)")
        if abs(agri.share + env.share - 1.0) > SHARE_TOL:
            raise ValueError(f"budget shares sum to {agri.share + env.share}")

        # 1) Subsidy controller: meat subsidy proportional to the relative goal
        #    gap, capped, cut entirely past the agricultural deficit cap.
        gap = max(0.0, levers.goal_meat - state.supply.get(ServiceId.MEAT, 0.0))
        sub_meat = params.meat_gain * gap / max(levers.goal_meat, params.goal_floor)
        sub_meat = min(max(sub_meat, 0.0), params.subsidy_cap)
        if agri.surplus < -params.deficit_cap:
            sub_meat = 0.0
        effective_subsidy = {s: levers.subsidy.get(s, 0.0) for s in SERVICES}
        effective_subsidy[ServiceId.MEAT] = sub_meat
        subsidy_vec = tuple(effective_subsidy[s] for s in SERVICES)
        eff_levers = PolicyLevers(
            subsidy=effective_subsidy, goal_meat=levers.goal_meat, goal_pa=levers.goal_pa
        )

        # 2) Designation, limited by what the environmental institution can
        #    afford at designation cost per cell (deficit headroom included).
        pa_gap = max(0.0, levers.goal_pa - state.pa_coverage)
        wanted = math.ceil(params.pa_gain * pa_gap * state.cell_count)
        available = env.surplus + env.inflow_rate + params.deficit_cap
        affordable = (
            max(0, math.floor(available / params.designation_cost)) if available > 0 else 0
        )
        unprotected = state.cell_count - state.protected_count()
        n = min(wanted, affordable, unprotected)
        state, _ = designate_protected(state, n, params, eff_levers, self.prices)

        # 3) Competition sweep in fixed row-major order.
        takeovers = 0
        cells = list(state.cells)
        for i, cell in enumerate(cells):
            best_j, best_u = self._best(i, cell, subsidy_vec)
            challenger = self._roster[best_j]
            if challenger.id == cell.aft:
                continue
            incumbent_u = self._utility(i, self._aft_index[cell.aft], subsidy_vec)
            if best_u > incumbent_u * (1.0 + params.takeover_margin):
                cells[i] = replace(cell, aft=challenger.id)
                takeovers += 1
        new_cells = tuple(cells)

        # 4) Supply recomputed from the post-sweep occupancy.
        protected = sum(1 for c in new_cells if c.protected)
        supply = {s: 0.0 for s in SERVICES}
        for i, cell in enumerate(new_cells):
            p = self._prod[i][self._aft_index[cell.aft]]
            for k, s in enumerate(SERVICES):
                supply[s] += p[k]
        self.state = LandState(
            width=state.width,
            height=state.height,
            cells=new_cells,
            tick=state.tick + 1,
            supply=supply,
            pa_coverage=protected / state.cell_count,
        )

        # 5) Settlement: subsidy bill against the agricultural account,
        #    designation plus maintenance against the environmental one.
        agri_exp = sum(
            effective_subsidy[s] * supply[s] for s in SERVICES if effective_subsidy[s] > 0.0
        )
        env_exp = params.designation_cost * n + params.maintenance_cost * protected
        self.accounts = (
            replace(agri, surplus=agri.surplus + (agri.inflow_rate - agri_exp)),
            replace(env, surplus=env.surplus + (env.inflow_rate - env_exp)),
        )
        return StepReport(
            tick=self.state.tick,
            effective_subsidy=effective_subsidy,
            designated=n,
            designation_shortfall=max(0, wanted - n),
            takeovers=takeovers,
            inflow={AGRICULTURAL: agri.inflow_rate, ENVIRONMENTAL: env.inflow_rate},
            expenditure={AGRICULTURAL: agri_exp, ENVIRONMENTAL: env_exp},
        )


def step(
    state: LandState,
    levers: PolicyLevers,
    accounts: tuple[BudgetAccount, BudgetAccount],
    prices: Mapping[ServiceId, float],
    params: LandParams,
) -> tuple[LandState, tuple[BudgetAccount, BudgetAccount], StepReport]:
    """Advance the environment one tick (pure-function form of the stepper)."""
    sim = LandSimulation(state, accounts, params, prices)
    report = sim.step(levers)
    return sim.state, sim.accounts, report


# --- Defaults -----------------------------------------------------------------
# None of these magnitudes are ground truth; they are the simplest configuration
# that exhibits the intended phenomenology (catch-up subsidies driving a bounded
# agricultural deficit, then recovery; steady PA expansion).  All overridable
# through the scenario file.

K_CAPITALS = 2  # productive, natural

DEFAULT_PRICES: dict[ServiceId, float] = {
    ServiceId.MEAT: 1.0,
    ServiceId.CROPS: 1.0,
    ServiceId.CARBON: 0.8,
    ServiceId.RECREATION: 0.6,
}

DEFAULT_INITIAL_GOAL_MEAT = 200.0
DEFAULT_INITIAL_GOAL_PA = 0.15


def default_afts() -> tuple[AftSpec, ...]:
    prod = (1.0, 0.0)
    both = (0.7, 0.3)
    nat = (0.0, 1.0)
    return (
        AftSpec(
            id=0,
            name="intensive_livestock",
            efficiency={ServiceId.MEAT: 1.0, ServiceId.CROPS: 0.1},
            capital_weights={ServiceId.MEAT: prod, ServiceId.CROPS: prod},
            base_cost=0.25,
            restricted_on_protected=True,
        ),
        AftSpec(
            id=1,
            name="crop_farmer",
            efficiency={ServiceId.CROPS: 1.0},
            capital_weights={ServiceId.CROPS: prod},
            base_cost=0.15,
            restricted_on_protected=True,
        ),
        AftSpec(
            id=2,
            name="mixed_farm",
            efficiency={
                ServiceId.MEAT: 0.4,
                ServiceId.CROPS: 0.5,
                ServiceId.CARBON: 0.1,
                ServiceId.RECREATION: 0.1,
            },
            capital_weights={
                ServiceId.MEAT: both,
                ServiceId.CROPS: both,
                ServiceId.CARBON: both,
                ServiceId.RECREATION: both,
            },
            base_cost=0.18,
        ),
        AftSpec(
            id=3,
            name="conservationist",
            efficiency={ServiceId.CARBON: 0.8, ServiceId.RECREATION: 0.7},
            capital_weights={ServiceId.CARBON: nat, ServiceId.RECREATION: nat},
            base_cost=0.05,
        ),
    )


def default_params(budget_rate: float = 100.0) -> LandParams:
    return LandParams(afts=default_afts(), budget_rate=budget_rate)


def default_levers() -> PolicyLevers:
    return PolicyLevers(
        subsidy={},
        goal_meat=DEFAULT_INITIAL_GOAL_MEAT,
        goal_pa=DEFAULT_INITIAL_GOAL_PA,
    )


def initial_accounts(budget_rate: float) -> tuple[BudgetAccount, BudgetAccount]:
    """Both institutions start on an even split with zero surplus."""
    return (
        BudgetAccount(AGRICULTURAL, share=0.5, inflow_rate=0.5 * budget_rate),
        BudgetAccount(ENVIRONMENTAL, share=0.5, inflow_rate=0.5 * budget_rate),
    )


def reallocate(
    accounts: tuple[BudgetAccount, BudgetAccount],
    share_agri: float,
    share_env: float,
    budget_rate: float,
) -> tuple[BudgetAccount, BudgetAccount]:
    if abs(share_agri + share_env - 1.0) > 1e-6:
        raise ValueError(f"shares sum to {share_agri + share_env}")
    agri, env = accounts
    return (
        replace(agri, share=share_agri, inflow_rate=share_agri * budget_rate),
        replace(env, share=share_env, inflow_rate=share_env * budget_rate),
    )


def make_world(
    width: int,
    height: int,
    seed: int,
    params: LandParams,
    prices: Mapping[ServiceId, float],
    levers: PolicyLevers,
) -> LandState:
    """Seeded world: random capitals, each cell occupied by its best base AFT."""
    rng = random.Random(seed)
    cells = []
    base_levers = PolicyLevers(subsidy={}, goal_meat=levers.goal_meat, goal_pa=levers.goal_pa)
    for _ in range(width * height):
        capitals = tuple(rng.random() ** params.capital_exponent for _ in range(K_CAPITALS))
        cell = Cell(capitals=capitals, aft=0, protected=False)
        best, _ = _best_eligible(cell, params.afts, base_levers, prices)
        cells.append(replace(cell, aft=best.id))
    state = LandState(
        width=width,
        height=height,
        cells=tuple(cells),
        tick=0,
        supply={},
        pa_coverage=0.0,
    )
    return replace(state, supply=aggregate_supply(state, params.afts))
