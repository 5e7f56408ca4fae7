"""Shared model builders.

The bomb-for-insurance scenario: an agent can place a bomb on a plane (B) or
go shopping instead (S = not B). The bomb being placed (P) makes the plane
explode (E) when the detonator works (u_E); an explosion triggers the payout
(I) when the insurer is solvent (u_I) and kills the passengers (D) when they
are aboard (u_D). Utilities: payout 100, shopping 1, deaths k (negative).
All three exogenous switches default to certainty.
"""
from __future__ import annotations

from fractions import Fraction

import pytest

from intentaudit.epistemics import EpistemicState, UtilityFunction, product_state
from intentaudit.influence import (
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    UtilityNode,
)
from intentaudit.scm import CausalModel, Signature, StructuralEquation


def _and(a, b):
    return 1 if a == 1 and b == 1 else 0


def build_plane_model() -> CausalModel:
    sig = Signature(
        exogenous=("u_E", "u_I", "u_D"),
        endogenous=("B", "P", "S", "E", "I", "D"),
        domains={name: (0, 1) for name in ("u_E", "u_I", "u_D", "B", "P", "S", "E", "I", "D")},
    )
    dom = sig.domains
    equations = {
        "P": StructuralEquation.from_function("P", ("B",), dom, lambda b: b),
        "S": StructuralEquation.from_function("S", ("B",), dom, lambda b: 1 - b),
        "E": StructuralEquation.from_function("E", ("P", "u_E"), dom, _and),
        "I": StructuralEquation.from_function("I", ("E", "u_I"), dom, _and),
        "D": StructuralEquation.from_function("D", ("E", "u_D"), dom, _and),
    }
    return CausalModel(sig, equations, actions=("B",))


def plane_utility(k: int | Fraction = -50) -> UtilityFunction:
    return UtilityFunction.from_rules(
        [({"I": 1}, 100), ({"S": 1}, 1), ({"D": 1}, Fraction(k))], default=0
    )


def build_plane_state(
    k: int | Fraction = -50, p_detonate: Fraction = Fraction(1)
) -> EpistemicState:
    model = build_plane_model()
    params = {"u_E": Fraction(p_detonate), "u_I": Fraction(1), "u_D": Fraction(1)}
    return product_state(model, params, plane_utility(k))


def build_two_policies_model() -> CausalModel:
    names = ("B", "P", "S", "E", "I1", "I2", "D")
    exo = ("u_E", "u_I1", "u_I2", "u_D")
    sig = Signature(
        exogenous=exo,
        endogenous=names,
        domains={name: (0, 1) for name in exo + names},
    )
    dom = sig.domains
    equations = {
        "P": StructuralEquation.from_function("P", ("B",), dom, lambda b: b),
        "S": StructuralEquation.from_function("S", ("B",), dom, lambda b: 1 - b),
        "E": StructuralEquation.from_function("E", ("P", "u_E"), dom, _and),
        "I1": StructuralEquation.from_function("I1", ("E", "u_I1"), dom, _and),
        "I2": StructuralEquation.from_function("I2", ("E", "u_I2"), dom, _and),
        "D": StructuralEquation.from_function("D", ("E", "u_D"), dom, _and),
    }
    return CausalModel(sig, equations, actions=("B",))


def build_two_policies_state(k: int | Fraction = -50) -> EpistemicState:
    model = build_two_policies_model()
    params = {name: Fraction(1) for name in model.signature.exogenous}
    utility = UtilityFunction.from_rules(
        [({"I1": 1}, 100), ({"I2": 1}, 100), ({"S": 1}, 1), ({"D": 1}, Fraction(k))],
        default=0,
    )
    return product_state(model, params, utility)


def build_plane_diagram(
    k: int | Fraction = -50, p_detonate: Fraction = Fraction(1)
) -> InfluenceDiagram:
    """Influence-diagram form of the same scenario, detonator noise folded in."""
    p = Fraction(p_detonate)
    return InfluenceDiagram(
        decisions=(DecisionNode("B", (0, 1)),),
        chances=(
            ChanceNode.table("P", (0, 1), ("B",), {(0,): 0, (1,): 1}),
            ChanceNode.table("S", (0, 1), ("B",), {(0,): 1, (1,): 0}),
            ChanceNode(
                "E",
                (0, 1),
                ("P",),
                {(0,): (Fraction(1), Fraction(0)), (1,): (1 - p, p)},
                deterministic=p in (0, 1),
            ),
            ChanceNode.table("I", (0, 1), ("E",), {(0,): 0, (1,): 1}),
            ChanceNode.table("D", (0, 1), ("E",), {(0,): 0, (1,): 1}),
        ),
        utilities=(
            UtilityNode("U_I", ("I",), {(0,): Fraction(0), (1,): Fraction(100)}),
            UtilityNode("U_S", ("S",), {(0,): Fraction(0), (1,): Fraction(1)}),
            UtilityNode("U_D", ("D",), {(0,): Fraction(0), (1,): Fraction(k)}),
        ),
    )


@pytest.fixture
def plane_model() -> CausalModel:
    return build_plane_model()


@pytest.fixture
def plane_state() -> EpistemicState:
    return build_plane_state()


@pytest.fixture
def unreliable_state() -> EpistemicState:
    return build_plane_state(p_detonate=Fraction(3, 200))


@pytest.fixture
def two_policies_state() -> EpistemicState:
    return build_two_policies_state()
