"""Release acceptance: scenario reproductions, seeded sweeps, corpus, CLI.

One test per criterion, every comparison in exact rationals, each timed
against its wall-clock budget. Criterion 5 fixes its own seeds so the sweep
counts (200 models, 100 diagrams) are stable across runs.
"""

import itertools
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from intentaudit.cli import main
from intentaudit.dsl import (
    DirectQuery,
    ObliqueQuery,
    check_text,
    lower_to_id,
    lower_to_scm,
    parse,
    serialize,
)
from intentaudit.epistemics import (
    expected_utility as scm_expected_utility,
    product_state,
)
from intentaudit.influence import (
    UtilityNode,
    best_foreseen_outcome,
    deterministic_policies,
    expected_utility as id_expected_utility,
    id_oblique_intent,
    kglt_intent,
    optimal_policy,
    to_howard_canonical_form,
)
from intentaudit.intent import (
    OutcomeSpec,
    hkw_intends,
    intends_to_affect,
    scm_oblique_intends,
    transfer_inequality,
)
from intentaudit.scenarios import scenario_path
from intentaudit.scm import Context, Intervention, intervene, solve

from randmodels import (
    random_choice,
    random_context,
    random_diagram,
    random_intervention,
    random_model,
    random_utility,
)

CORPUS = Path(__file__).parent / "corpus"


def _scm_lane(name):
    lane = lower_to_scm(parse(scenario_path(name).read_text()).document)
    assert lane.ok
    return lane


class TestCriterion1:
    def test_criterion_1_plane_direct_intent(self):
        started = time.perf_counter()
        lane = _scm_lane("plane.im")
        state, ref, a = lane.state, lane.reference, lane.action_value

        payout = intends_to_affect(state, a, ref, ("I",))
        assert payout.intended

        chain = intends_to_affect(state, a, ref, ("I", "E", "P", "D"))
        assert chain.intended
        assert chain.witnesses == (("P", "E", "I", "D"),)
        assert chain.check.lhs == Fraction(50)  # 100 + k at k = -50
        assert chain.check.best == Fraction(51)  # shopping adds 1 on top

        verdicts = {}
        for query in lane.queries:
            if isinstance(query, DirectQuery):
                spec = OutcomeSpec(
                    tuple(n for n, _ in query.literals),
                    tuple(v for _, v in query.literals),
                )
                verdicts[query.literals] = hkw_intends(state, a, ref, spec)
        assert verdicts[(("I", 1),)].intended
        assert not verdicts[(("D", 1),)].intended
        assert verdicts[(("D", 1),)].failed == "affect"
        assert sum(v.intended for v in verdicts.values()) == 1
        assert time.perf_counter() - started < 1.0

    @pytest.mark.xfail(
        strict=True,
        reason="freezing I alone already transfers the advantage "
        "(101 >= 50), so {I} is its own minimal witness and no strict "
        "superset can ever be reported for it",
    )
    def test_criterion_1_superset_witness_for_payout_alone(self):
        lane = _scm_lane("plane.im")
        payout = intends_to_affect(lane.state, lane.action_value, lane.reference, ("I",))
        assert payout.witnesses == (("P", "E", "I", "D"),)


class TestCriterion2:
    def test_criterion_2_unreliable_oblique_clause_b(self):
        started = time.perf_counter()
        lane = _scm_lane("unreliable.im")
        query = next(q for q in lane.queries if isinstance(q, ObliqueQuery))
        direct = OutcomeSpec(
            tuple(n for n, _ in query.given), tuple(v for _, v in query.given)
        )
        side = OutcomeSpec(
            tuple(n for n, _ in query.side), tuple(v for _, v in query.side)
        )
        grid = (
            Fraction(1, 1000),
            Fraction(1, 100),
            Fraction(3, 200),
            Fraction(1, 4),
            Fraction(1, 2),
            Fraction(19, 20),
            Fraction(99, 100),
            Fraction(199, 200),
        )
        for c in grid:
            verdict = scm_oblique_intends(
                lane.state, lane.action_value, direct, side, c
            )
            assert verdict.intended
            assert verdict.clause_a == Fraction(3, 200)
            assert verdict.clause_b == Fraction(1)
            if c >= Fraction(3, 200):
                # The outright chance of death is too small; conditioning
                # on the payout is what carries the verdict.
                assert verdict.clause == "b"
        assert time.perf_counter() - started < 1.0


class TestCriterion3:
    def test_criterion_3_kglt_grid(self):
        started = time.perf_counter()
        text = scenario_path("plane.im").read_text()
        for k in (-1, -10, -50, -90):
            lane = lower_to_id(parse(text.replace("-50", str(k))).document)
            assert lane.ok
            result = kglt_intent(lane.diagram)
            assert set(result.intended) == {("B", 1), ("P", 1), ("E", 1), ("I", 1)}
            death = next(c for c in result.checks if c.node == "D")
            assert not death.intended
        assert time.perf_counter() - started < 5.0


class TestCriterion4:
    def test_criterion_4_two_policies_against_subset_oracle(self):
        started = time.perf_counter()
        lane = _scm_lane("two_policies.im")
        state, ref, a = lane.state, lane.reference, lane.action_value

        for name in ("I1", "I2"):
            verdict = hkw_intends(state, a, ref, OutcomeSpec((name,), (1,)))
            assert not verdict.intended
            assert verdict.failed == "affect"
        pair = intends_to_affect(state, a, ref, ("I1", "I2"))
        assert pair.intended

        # Brute-force oracle: re-derive the transfer inequality for every
        # subset straight from solve, independent of the engine's search.
        live = [(s, w) for s, w in state.settings if w > 0]
        lhs = sum(
            (
                w * state.utility(solve(s.model, s.context, {ref.action: a}))
                for s, w in live
            ),
            Fraction(0),
        )

        def oracle_holds(subset):
            for alt in ref.alternatives:
                value = Fraction(0)
                for setting, weight in live:
                    world_a = solve(setting.model, setting.context, {ref.action: a})
                    frozen = Intervention({v: world_a[v] for v in subset})
                    world_b = solve(
                        intervene(setting.model, frozen),
                        setting.context,
                        {ref.action: alt},
                    )
                    value += weight * state.utility(world_b)
                if lhs <= value:
                    return True
            return False

        pool = lane.model.non_action_endogenous
        for size in range(len(pool) + 1):
            for combo in itertools.combinations(pool, size):
                engine = transfer_inequality(state, a, ref, combo).holds
                assert engine == oracle_holds(combo), combo
        assert not oracle_holds(("I1",))
        assert not oracle_holds(("I2",))
        assert oracle_holds(("I1", "I2"))
        assert time.perf_counter() - started < 5.0


class TestCriterion5:
    def test_criterion_5_seeded_property_sweeps(self):
        started = time.perf_counter()

        rng = random.Random(20260815)
        for _ in range(200):
            model = random_model(rng, max_exogenous=4, max_endogenous=6, with_action=True)
            first = random_intervention(rng, model)
            second = random_intervention(rng, model)
            once = intervene(model, first)
            assert intervene(once, first) == once
            merged = dict(first.assignment)
            merged.update(second.assignment)
            assert intervene(once, second) == intervene(model, Intervention(merged))
            world = solve(once, random_context(rng, model), random_choice(rng, model))
            for name, value in first.assignment.items():
                assert world[name] == value

        rng = random.Random(31415926)
        for _ in range(100):
            diagram = random_diagram(rng)
            hcf = to_howard_canonical_form(diagram)
            for policy in deterministic_policies(diagram):
                assert id_expected_utility(hcf, policy) == id_expected_utility(
                    diagram, policy
                )

        rng = random.Random(27182818)
        for _ in range(60):
            model = random_model(rng, with_action=True)
            sig = model.signature
            params = {n: Fraction(rng.randint(0, 8), 8) for n in sig.exogenous}
            utility = random_utility(rng, model)
            state = product_state(model, params, utility)
            action = random_choice(rng, model)
            total = Fraction(0)
            for combo in itertools.product(*(sig.domain(u) for u in sig.exogenous)):
                weight = Fraction(1)
                for name, value in zip(sig.exogenous, combo):
                    p = params[name]
                    weight *= p if value == sig.domain(name)[1] else 1 - p
                world = solve(model, Context(dict(zip(sig.exogenous, combo))), action)
                total += weight * utility(world)
            assert scm_expected_utility(state, action) == total

        rng = random.Random(16180339)
        done = 0
        while done < 40:
            model = random_model(rng, with_action=True)
            outcomes = [
                n for n in model.signature.endogenous if n not in model.actions
            ]
            if len(outcomes) < 2:
                continue
            params = {
                n: Fraction(rng.randint(0, 8), 8) for n in model.signature.exogenous
            }
            state = product_state(model, params, random_utility(rng, model))
            direct = OutcomeSpec((outcomes[0],), (rng.choice((0, 1)),))
            side = OutcomeSpec((outcomes[1],), (rng.choice((0, 1)),))
            lo = Fraction(rng.randint(1, 9), 20)
            hi = lo + Fraction(rng.randint(1, 10), 20)
            a = rng.choice((0, 1))
            at_hi = scm_oblique_intends(state, a, direct, side, hi)
            if at_hi.intended:
                assert scm_oblique_intends(state, a, direct, side, lo).intended
            done += 1

        rng = random.Random(14142135)
        for _ in range(40):
            diagram = random_diagram(rng)
            policy, _ = optimal_policy(diagram)
            foreseen = best_foreseen_outcome(diagram, policy)
            conditioning = [
                (n, v)
                for n, v in foreseen.realization.items()
                if not isinstance(diagram.nodes[n], UtilityNode)
            ]
            node = rng.choice([c.name for c in diagram.chances])
            value = rng.choice((0, 1))
            lo = Fraction(rng.randint(1, 9), 20)
            hi = lo + Fraction(rng.randint(1, 10), 20)
            at_hi = id_oblique_intent(diagram, policy, node, value, conditioning, hi)
            if at_hi.intended:
                at_lo = id_oblique_intent(
                    diagram, policy, node, value, conditioning, lo
                )
                assert at_lo.intended

        assert time.perf_counter() - started < 120.0


class TestCriterion6:
    def test_criterion_6_corpus_round_trip_and_byte_identical_reports(self, capsys):
        files = sorted(CORPUS.glob("*.im"))
        assert len(files) >= 25
        for path in files:
            text = path.read_text()
            expected = path.with_suffix(".expected").read_text().splitlines()
            assert [d.render() for d in check_text(text)] == expected, path.name
            result = parse(text)
            if result.ok:
                canonical = serialize(result.document)
                again = parse(canonical)
                assert again.document == result.document, path.name
                assert serialize(again.document) == canonical, path.name

        for name in ("plane.im", "unreliable.im"):
            for flag in ("--json", "--text"):
                runs = []
                for _ in range(2):
                    code = main(["audit", str(scenario_path(name)), flag])
                    assert code == 0
                    runs.append(capsys.readouterr().out)
                assert runs[0] == runs[1], (name, flag)
