"""Land environment: production arithmetic, designation, competition, budgets."""
from __future__ import annotations

import math
import random
from dataclasses import replace

import pytest

from conftest import static_levers, two_aft_params
from hopesim import land
from hopesim.land import (
    AGRICULTURAL,
    ENVIRONMENTAL,
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
    default_afts,
    initial_accounts,
    make_world,
    perceived_utility,
    production,
    step,
)

MEAT = ServiceId.MEAT
CROPS = ServiceId.CROPS


def make_aft(m_meat=0.5, weights=(1.0, 0.0), base_cost=0.0, aft_id=0, restricted=False):
    return AftSpec(
        id=aft_id,
        name=f"aft{aft_id}",
        efficiency={MEAT: m_meat},
        capital_weights={MEAT: tuple(weights)},
        base_cost=base_cost,
        restricted_on_protected=restricted,
    )


class TestProduction:
    def test_full_capitals_yield_efficiency(self):
        cell = Cell(capitals=(1.0, 1.0), aft=0)
        aft = make_aft(m_meat=0.5, weights=(0.5, 0.5))
        assert production(cell, aft)[MEAT] == pytest.approx(0.5)

    def test_zero_capitals_zero_everything(self):
        cell = Cell(capitals=(0.0, 0.0), aft=0)
        out = production(cell, make_aft(m_meat=0.5, weights=(0.5, 0.5)))
        assert all(v == 0.0 for v in out.values())

    def test_weighted_capital_arithmetic(self):
        # oracle: 2 * (0.5*0.5 + 0.5*1.0) = 2 * 0.75 = 1.5
        cell = Cell(capitals=(0.5, 1.0), aft=0)
        aft = make_aft(m_meat=2.0, weights=(0.5, 0.5))
        assert production(cell, aft)[MEAT] == pytest.approx(1.5)

    def test_weight_rows_must_sum_to_one(self):
        bad = make_aft(weights=(0.6, 0.6))
        with pytest.raises(ValueError):
            bad.validate()


class TestPerceivedUtility:
    def test_zero_subsidy_is_base_utility(self):
        cell = Cell(capitals=(0.8, 0.2), aft=0)
        aft = make_aft(m_meat=1.0, weights=(1.0, 0.0), base_cost=0.3)
        base = perceived_utility(cell, aft, static_levers(), {MEAT: 1.0})
        assert base == pytest.approx(0.8 - 0.3)

    def test_subsidy_adds_per_unit_production(self):
        # oracle: base 1.0 plus 0.2 * production 1.5 = 1.3
        cell = Cell(capitals=(1.0, 0.5), aft=0)
        aft = make_aft(m_meat=1.5, weights=(1.0, 0.0), base_cost=0.5)
        prices = {MEAT: 1.0}
        base = perceived_utility(cell, aft, static_levers(), prices)
        assert base == pytest.approx(1.0)
        levers = PolicyLevers(subsidy={MEAT: 0.2}, goal_meat=0.0, goal_pa=0.0)
        assert perceived_utility(cell, aft, levers, prices) == pytest.approx(1.3)

    def test_restricted_aft_keeps_defined_utility_but_is_excluded(self):
        cell = Cell(capitals=(1.0, 1.0), aft=1, protected=True)
        restricted = make_aft(aft_id=0, restricted=True)
        u = perceived_utility(cell, restricted, static_levers(), {MEAT: 1.0})
        assert math.isfinite(u)
        assert not land.eligible(restricted, cell)
        assert land.eligible(make_aft(aft_id=1), cell)


class TestAggregateSupply:
    def test_single_cell_grid(self):
        params = two_aft_params()
        cell = Cell(capitals=(0.5, 0.5), aft=0)
        state = LandState(1, 1, (cell,), 0, {}, 0.0)
        supply = aggregate_supply(state, params.afts)
        assert supply[MEAT] == pytest.approx(0.5)

    def test_uniform_grid_scales_linearly(self):
        params = two_aft_params()
        cell = Cell(capitals=(0.6, 0.1), aft=0)
        state = LandState(4, 3, (cell,) * 12, 0, {}, 0.0)
        supply = aggregate_supply(state, params.afts)
        assert supply[MEAT] == pytest.approx(12 * 0.6)

    def test_random_grid_matches_brute_force(self):
        rng = random.Random(3)
        params = two_aft_params()
        cells = tuple(
            Cell(capitals=(rng.random(), rng.random()), aft=rng.choice([0, 1]))
            for _ in range(30)
        )
        state = LandState(6, 5, cells, 0, {}, 0.0)
        supply = aggregate_supply(state, params.afts)
        by_id = {a.id: a for a in params.afts}
        for s in ServiceId:
            expected = sum(production(c, by_id[c.aft])[s] for c in cells)
            assert supply[s] == pytest.approx(expected, abs=1e-12)


class TestDesignation:
    def _state(self, naturals):
        cells = tuple(Cell(capitals=(0.5, n), aft=1) for n in naturals)
        state = LandState(3, 3, cells, 0, {}, 0.0)
        return replace(state, supply=aggregate_supply(state, two_aft_params().afts))

    def test_zero_designation_is_identity(self):
        state = self._state([0.1 * i for i in range(9)])
        params = two_aft_params()
        out, shortfall = designate_protected(state, 0, params, static_levers(), {CROPS: 1.0})
        assert out == state and shortfall == 0

    def test_full_designation_saturates_coverage(self):
        state = self._state([0.1 * i for i in range(9)])
        params = two_aft_params()
        out, _ = designate_protected(state, 9, params, static_levers(), {CROPS: 1.0})
        assert out.pa_coverage == pytest.approx(1.0)

    def test_highest_natural_capital_selected_first(self):
        naturals = [0.3, 0.9, 0.1, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6]
        state = self._state(naturals)
        params = two_aft_params()
        out, _ = designate_protected(state, 3, params, static_levers(), {CROPS: 1.0})
        # sort oracle: indices of the three largest natural capitals
        expected = sorted(range(9), key=lambda i: (-naturals[i], i))[:3]
        assert {i for i, c in enumerate(out.cells) if c.protected} == set(expected)

    def test_overshoot_clamps_and_reports_shortfall(self):
        state = self._state([0.5] * 9)
        params = two_aft_params()
        out, shortfall = designate_protected(state, 12, params, static_levers(), {CROPS: 1.0})
        assert out.pa_coverage == pytest.approx(1.0)
        assert shortfall == 3

    def test_restricted_incumbent_replaced_on_protection(self):
        params = two_aft_params()
        cells = (Cell(capitals=(0.9, 0.9), aft=0),)  # producer is restricted
        state = LandState(1, 1, cells, 0, {}, 0.0)
        state = replace(state, supply=aggregate_supply(state, params.afts))
        out, _ = designate_protected(state, 1, params, static_levers(), {MEAT: 1.0, CROPS: 1.0})
        assert out.cells[0].protected
        assert out.cells[0].aft == 1  # replaced by the best eligible AFT

    def test_protection_never_revoked(self):
        state = self._state([0.1 * i for i in range(9)])
        params = two_aft_params()
        once, _ = designate_protected(state, 2, params, static_levers(), {CROPS: 1.0})
        twice, _ = designate_protected(once, 2, params, static_levers(), {CROPS: 1.0})
        first = {i for i, c in enumerate(once.cells) if c.protected}
        second = {i for i, c in enumerate(twice.cells) if c.protected}
        assert first <= second and len(second) == 4


def build_state(params, capitals_list, aft_ids, width=None, height=None):
    width = width or len(capitals_list)
    height = height or 1
    cells = tuple(Cell(capitals=c, aft=a) for c, a in zip(capitals_list, aft_ids))
    state = LandState(width, height, cells, 0, {}, 0.0)
    return replace(state, supply=aggregate_supply(state, params.afts))


class TestStep:
    def test_fixed_point_when_goals_met(self):
        # grower already optimal on a low-capital cell; zero goals leave subsidies off
        params = two_aft_params()
        state = build_state(params, [(0.4, 0.0), (0.3, 0.0)], [1, 1], width=2, height=1)
        accounts = initial_accounts(100.0)
        new_state, new_accounts, report = step(
            state, static_levers(), accounts, {MEAT: 1.0, CROPS: 1.0}, params
        )
        assert new_state.tick == 1
        assert new_state.cells == state.cells
        assert new_accounts[0].surplus == pytest.approx(50.0)
        assert new_accounts[1].surplus == pytest.approx(50.0)
        assert report.takeovers == 0 and report.designated == 0

    def test_takeover_requires_margin(self):
        # challenger 1.10 vs incumbent 1.00 with 5% margin: 1.10 > 1.05, flips
        incumbent = AftSpec(
            0, "incumbent", {CROPS: 1.0}, {CROPS: (1.0, 0.0)}, base_cost=0.0
        )
        challenger = AftSpec(
            1, "challenger", {CROPS: 1.1}, {CROPS: (1.0, 0.0)}, base_cost=0.0
        )
        params = LandParams(afts=(incumbent, challenger), takeover_margin=0.05)
        state = build_state(params, [(1.0, 0.0)], [0])
        prices = {CROPS: 1.0}
        new_state, _, report = step(state, static_levers(), initial_accounts(100.0), prices, params)
        assert new_state.cells[0].aft == 1 and report.takeovers == 1

        # 1.04 < 1.05: stays
        weaker = AftSpec(1, "weaker", {CROPS: 1.04}, {CROPS: (1.0, 0.0)}, base_cost=0.0)
        params2 = LandParams(afts=(incumbent, weaker), takeover_margin=0.05)
        state2 = build_state(params2, [(1.0, 0.0)], [0])
        new_state2, _, report2 = step(state2, static_levers(), initial_accounts(100.0), prices, params2)
        assert new_state2.cells[0].aft == 0 and report2.takeovers == 0

    def test_satisfied_goals_grow_both_surpluses(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        prices = land.DEFAULT_PRICES
        levers = PolicyLevers(subsidy={}, goal_meat=0.0, goal_pa=0.0)
        state = make_world(6, 6, 11, params, prices, levers)
        sim = LandSimulation(state, initial_accounts(100.0), params, prices)
        prev = sim.accounts
        for _ in range(5):
            sim.step(levers)
            agri, env = sim.accounts
            assert agri.surplus > prev[0].surplus
            assert env.surplus > prev[1].surplus
            prev = sim.accounts

    def test_zero_goal_forces_zero_subsidy(self):
        params = two_aft_params()
        state = build_state(params, [(0.5, 0.0)], [1])
        _, _, report = step(
            state, static_levers(goal_meat=0.0), initial_accounts(100.0), {CROPS: 1.0}, params
        )
        assert report.effective_subsidy[MEAT] == 0.0

    def test_subsidy_cut_past_deficit_cap(self):
        params = two_aft_params(deficit_cap=50.0)
        state = build_state(params, [(0.5, 0.0)], [1])
        accounts = (
            BudgetAccount(AGRICULTURAL, 0.5, 50.0, surplus=-50.001),
            BudgetAccount(ENVIRONMENTAL, 0.5, 50.0, surplus=0.0),
        )
        _, _, report = step(
            state, static_levers(goal_meat=100.0), accounts, {CROPS: 1.0}, params
        )
        assert report.effective_subsidy[MEAT] == 0.0

    def test_share_sum_validated(self):
        params = two_aft_params()
        state = build_state(params, [(0.5, 0.0)], [1])
        accounts = (
            BudgetAccount(AGRICULTURAL, 0.6, 60.0),
            BudgetAccount(ENVIRONMENTAL, 0.5, 50.0),
        )
        with pytest.raises(ValueError):
            step(state, static_levers(), accounts, {CROPS: 1.0}, params)


class TestInvariants:
    def _run(self, seed, ticks=40, width=8, height=8, params=None):
        params = params or LandParams(afts=default_afts(), capital_exponent=0.45)
        prices = land.DEFAULT_PRICES
        levers = PolicyLevers(subsidy={}, goal_meat=60.0, goal_pa=0.2)
        state = make_world(width, height, seed, params, prices, levers)
        sim = LandSimulation(state, initial_accounts(100.0), params, prices)
        reports = []
        trajectory = [(state, sim.accounts)]
        for _ in range(ticks):
            reports.append(sim.step(levers))
            trajectory.append((sim.state, sim.accounts))
        return params, prices, levers, trajectory, reports

    def test_budget_conservation_exact(self):
        _, _, _, trajectory, reports = self._run(seed=1)
        for (before, accounts_before), (after, accounts_after), report in zip(
            trajectory, trajectory[1:], reports
        ):
            for i, inst in enumerate((AGRICULTURAL, ENVIRONMENTAL)):
                delta = accounts_after[i].surplus - accounts_before[i].surplus
                assert delta == pytest.approx(
                    report.inflow[inst] - report.expenditure[inst], abs=1e-9
                )

    def test_shares_sum_to_one_every_tick(self):
        _, _, _, trajectory, _ = self._run(seed=2)
        for _, (agri, env) in trajectory:
            assert abs(agri.share + env.share - 1.0) <= 1e-9

    def test_pa_coverage_monotone(self):
        _, _, _, trajectory, _ = self._run(seed=3)
        coverages = [state.pa_coverage for state, _ in trajectory]
        assert all(b >= a for a, b in zip(coverages, coverages[1:]))

    def test_no_restricted_aft_on_protected_cell(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        _, _, _, trajectory, _ = self._run(seed=4, params=params)
        by_id = params.aft_by_id()
        for state, _ in trajectory:
            for cell in state.cells:
                if cell.protected:
                    assert not by_id[cell.aft].restricted_on_protected

    def test_supply_identity_holds(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        _, _, _, trajectory, _ = self._run(seed=5, params=params)
        for state, _ in trajectory:
            recomputed = aggregate_supply(state, params.afts)
            for s in ServiceId:
                assert state.supply[s] == recomputed[s]
            protected = sum(1 for c in state.cells if c.protected)
            assert state.pa_coverage == pytest.approx(protected / state.cell_count)

    def test_competition_soundness_against_brute_force(self):
        params, prices, levers, trajectory, reports = self._run(seed=6, ticks=25)
        state, _ = trajectory[-1]
        eff = PolicyLevers(
            subsidy=reports[-1].effective_subsidy,
            goal_meat=levers.goal_meat,
            goal_pa=levers.goal_pa,
        )
        by_id = params.aft_by_id()
        for cell in state.cells:
            incumbent_u = perceived_utility(cell, by_id[cell.aft], eff, prices)
            best = max(
                perceived_utility(cell, aft, eff, prices)
                for aft in params.afts
                if land.eligible(aft, cell)
            )
            assert incumbent_u >= best / (1.0 + params.takeover_margin) - 1e-12

    def test_deterministic_bit_identical(self):
        _, _, _, t1, r1 = self._run(seed=7)
        _, _, _, t2, r2 = self._run(seed=7)
        assert [s.cells for s, _ in t1] == [s.cells for s, _ in t2]
        assert [a for _, a in t1] == [a for _, a in t2]
        assert r1 == r2

    def test_pure_step_matches_simulation(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        prices = land.DEFAULT_PRICES
        levers = PolicyLevers(subsidy={}, goal_meat=60.0, goal_pa=0.2)
        state = make_world(5, 5, 8, params, prices, levers)
        accounts = initial_accounts(100.0)
        sim = LandSimulation(state, accounts, params, prices)
        pure_state, pure_accounts = state, accounts
        for _ in range(10):
            sim_report = sim.step(levers)
            pure_state, pure_accounts, pure_report = step(
                pure_state, levers, pure_accounts, prices, params
            )
            assert pure_state == sim.state
            assert pure_accounts == sim.accounts
            assert pure_report == sim_report


class TestWorld:
    def test_make_world_seed_reproducible(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        levers = land.default_levers()
        w1 = make_world(10, 10, 42, params, land.DEFAULT_PRICES, levers)
        w2 = make_world(10, 10, 42, params, land.DEFAULT_PRICES, levers)
        assert w1 == w2
        w3 = make_world(10, 10, 43, params, land.DEFAULT_PRICES, levers)
        assert w1 != w3

    def test_initial_cells_hold_best_base_aft(self):
        params = LandParams(afts=default_afts(), capital_exponent=0.45)
        levers = land.default_levers()
        world = make_world(6, 6, 9, params, land.DEFAULT_PRICES, levers)
        base = PolicyLevers(subsidy={}, goal_meat=levers.goal_meat, goal_pa=levers.goal_pa)
        by_id = params.aft_by_id()
        for cell in world.cells:
            own = perceived_utility(cell, by_id[cell.aft], base, land.DEFAULT_PRICES)
            best = max(
                perceived_utility(cell, aft, base, land.DEFAULT_PRICES) for aft in params.afts
            )
            assert own == best

    def test_reallocate_updates_inflow(self):
        accounts = initial_accounts(100.0)
        agri, env = land.reallocate(accounts, 0.7, 0.3, 100.0)
        assert agri.inflow_rate == pytest.approx(70.0)
        assert env.inflow_rate == pytest.approx(30.0)
        with pytest.raises(ValueError):
            land.reallocate(accounts, 0.7, 0.4, 100.0)
