"""Two-stage settlement and operator / participant accounting.

Ex-ante, every period: generators are paid their energy and reserve prices,
loads pay their energy price on base demand and a signed fluctuation charge
``sum_k omega_dk * pi_k``.  Ex-post, one step per period once the period's
scenario is known: the operator pays up-re-dispatch at the up price,
generators refund down-re-dispatch at the down price and shed load is
compensated at its shedding price.

Amounts carry full float precision; rounding is a presentation concern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASE = "base"


@dataclass(frozen=True)
class ExPostConvention:
    """Direction of each ex-post cash flow (+1 default, -1 reverses it)."""

    pay_up: float = 1.0  # operator -> generator at the up price
    refund_down: float = 1.0  # generator -> operator at the down price
    compensate_shedding: float = 1.0  # operator -> load at the shedding price


DEFAULT_CONVENTION = ExPostConvention()


@dataclass(frozen=True, eq=False)
class ExPostEntries:
    scenario: str
    period: int
    gen_payment: np.ndarray  # (G,) operator -> generator
    gen_refund: np.ndarray  # (G,) generator -> operator
    load_compensation: np.ndarray  # (L,) operator -> load

    @property
    def net_outflow(self):
        """Operator cash out minus cash in for this step."""
        return float(self.gen_payment.sum() + self.load_compensation.sum() - self.gen_refund.sum())


@dataclass(frozen=True, eq=False)
class SettlementLedger:
    gen_energy: np.ndarray  # (T, G) received by generators
    gen_reserve_up: np.ndarray
    gen_reserve_down: np.ndarray
    load_energy: np.ndarray  # (T, L) paid by loads
    fluctuation: np.ndarray  # (T, K, L) paid by loads, signed
    redispatch_up: np.ndarray  # (T, K, G) operator -> generator if k occurs
    redispatch_down: np.ndarray  # (T, K, G) generator -> operator if k occurs
    shed_compensation: np.ndarray  # (T, K, L) operator -> load if k occurs
    probabilities: np.ndarray  # (K,)
    scenario_ids: tuple = ()
    gen_ids: tuple = ()
    load_ids: tuple = ()

    @property
    def ex_ante_inflow(self):
        return self.load_energy.sum(axis=1) + self.fluctuation.sum(axis=(1, 2))

    @property
    def ex_ante_outflow(self):
        return (self.gen_energy + self.gen_reserve_up + self.gen_reserve_down).sum(axis=1)

    @property
    def ex_ante_surplus(self):
        return self.ex_ante_inflow - self.ex_ante_outflow

    @property
    def scenario_net_outflow(self):
        """(T, K) operator net ex-post outflow should scenario k occur."""
        return (self.redispatch_up.sum(axis=2) + self.shed_compensation.sum(axis=2)
                - self.redispatch_down.sum(axis=2))

    @property
    def expected_ex_post_outflow(self):
        return self.scenario_net_outflow @ self.probabilities

    @property
    def expected_surplus(self):
        return self.ex_ante_surplus - self.expected_ex_post_outflow

    def cash_flows(self, t, scenario=None):
        """Double-entry list of ``(party, item, amount received)`` for period t.

        ``scenario`` selects the realised ex-post step (``None`` = expected,
        ``"base"`` = no deviation, else a scenario index).  The last entry is
        the operator, whose receipt balances the participants exactly.
        """
        rows = []
        K = len(self.probabilities)
        if scenario is None:
            weights = self.probabilities
        else:
            weights = np.zeros(K)
            if scenario != BASE:
                weights[scenario] = 1.0
        for j, gid in enumerate(self.gen_ids):
            rows.append((gid, "energy", self.gen_energy[t, j]))
            rows.append((gid, "reserve_up", self.gen_reserve_up[t, j]))
            rows.append((gid, "reserve_down", self.gen_reserve_down[t, j]))
            rows.append((gid, "redispatch_up", weights @ self.redispatch_up[t, :, j]))
            rows.append((gid, "redispatch_down", -(weights @ self.redispatch_down[t, :, j])))
        for l, lid in enumerate(self.load_ids):
            rows.append((lid, "energy", -self.load_energy[t, l]))
            rows.append((lid, "fluctuation", -self.fluctuation[t, :, l].sum()))
            rows.append((lid, "shedding", weights @ self.shed_compensation[t, :, l]))
        operator = self.ex_ante_surplus[t] - weights @ self.scenario_net_outflow[t]
        rows.append(("operator", "surplus", operator))
        return rows


def ex_ante_settlement(solution, prices):
    """``(gen_energy, gen_reserve_up, gen_reserve_down, load_energy)`` per period."""
    return (
        prices.energy_gen * solution.g,
        prices.reserve_up * solution.r_up,
        prices.reserve_down * solution.r_down,
        prices.energy_load * solution.case.demand,
    )


def fluctuation_charges(solution, prices):
    """(T, K, L) charge on load l for fluctuation pi_k (negative = credit)."""
    return prices.energy_load_scen * solution.case.fluctuations


def _ex_post_arrays(solution, convention):
    case = solution.case
    up = convention.pay_up * solution.dg_up * case.gen_array("redispatch_up_price")
    down = convention.refund_down * solution.dg_down * case.gen_array("redispatch_down_price")
    shed = convention.compensate_shedding * solution.shed * case.load_array("shed_price")
    return up, down, shed


def ex_post_settlement(solution, scenario, period, convention=DEFAULT_CONVENTION):
    """The ``period``-th ex-post step given the realised scenario id."""
    case = solution.case
    G, L = len(case.generators), len(case.loads)
    if scenario is None or scenario == BASE:
        return ExPostEntries(BASE, period, np.zeros(G), np.zeros(G), np.zeros(L))
    k = case.scenarios.index(scenario) if isinstance(scenario, str) else int(scenario)
    up, down, shed = _ex_post_arrays(solution, convention)
    return ExPostEntries(case.scenarios.ids[k], period, up[period, k], down[period, k], shed[period, k])


def settle(solution, prices, convention=DEFAULT_CONVENTION):
    case = solution.case
    energy, res_up, res_down, load_energy = ex_ante_settlement(solution, prices)
    up, down, shed = _ex_post_arrays(solution, convention)
    return SettlementLedger(
        energy, res_up, res_down, load_energy, fluctuation_charges(solution, prices),
        up, down, shed, case.probabilities, case.scenarios.ids, case.gen_ids, case.load_ids,
    )


@dataclass(frozen=True, eq=False)
class SurplusReport:
    per_period: np.ndarray  # expected merchandise surplus
    expected_cost: np.ndarray  # expected system cost per period

    @property
    def total(self):
        return float(self.per_period.sum())

    def adequate(self, rel_tol=1e-6):
        return bool(np.all(self.per_period >= -rel_tol * (1.0 + np.abs(self.expected_cost))))


def expected_merchandise_surplus(solution, prices, convention=DEFAULT_CONVENTION):
    ledger = settle(solution, prices, convention)
    cost = solution.base_cost() + solution.expected_redispatch_cost()
    return SurplusReport(ledger.expected_surplus, cost)


@dataclass(frozen=True, eq=False)
class ProfitReport:
    per_period: np.ndarray  # (T, G)
    gen_ids: tuple = ()

    @property
    def total(self):
        return self.per_period.sum(axis=0)


def generator_profit_report(solution, prices, ledger=None):
    """Receipts (ex-ante plus expected ex-post) minus bid-in costs incurred."""
    case = solution.case
    ledger = ledger or settle(solution, prices)
    eps = case.probabilities
    receipts = (ledger.gen_energy + ledger.gen_reserve_up + ledger.gen_reserve_down
                + np.einsum("k,tkg->tg", eps, ledger.redispatch_up - ledger.redispatch_down))
    cg, cu, cd = (case.gen_array(a) for a in ("energy_bid", "up_reserve_bid", "down_reserve_bid"))
    redispatch = (np.einsum("k,tkg->tg", eps, solution.dg_up) * case.gen_array("redispatch_up_price")
                  - np.einsum("k,tkg->tg", eps, solution.dg_down) * case.gen_array("redispatch_down_price"))
    costs = solution.g * cg + solution.r_up * cu + solution.r_down * cd + redispatch
    return ProfitReport(receipts - costs, case.gen_ids)
