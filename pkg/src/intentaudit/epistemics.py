"""Epistemic states: weighted causal settings plus a total utility function.

An epistemic state lists the (model, context) pairs the agent entertains with
exact rational probabilities summing to one; zero-weight settings stay in the
list so possibility queries can distinguish "entertained but ruled out" from
"never considered". Utilities are total over complete worlds: ordered
condition->value rules whose matching values sum, with an explicit default for
worlds matching no rule. Expected utility solves each setting under a given
action choice, optionally with a per-setting freeze built from the setting
itself (how counterfactual comparisons keep chosen variables at their values
under a different action).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .scm import (
    Assignment,
    CausalModel,
    Context,
    Intervention,
    ModelError,
    Value,
    World,
    intervene,
    solve,
)


@dataclass(frozen=True)
class CausalSetting:
    """One entertained possibility: a model together with a context."""

    model: CausalModel
    context: Context


@dataclass(frozen=True)
class UtilityRule:
    """Partial assignment over any variables, and the value it contributes."""

    condition: Assignment
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "condition", dict(self.condition))
        object.__setattr__(self, "value", Fraction(self.value))

    def matches(self, world: World) -> bool:
        return all(world[v] == x for v, x in self.condition.items())


@dataclass(frozen=True)
class UtilityFunction:
    """Sum of matching rule values; ``default`` for worlds matching no rule."""

    rules: tuple[UtilityRule, ...]
    default: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "default", Fraction(self.default))

    def __call__(self, world: World) -> Fraction:
        total = Fraction(0)
        matched = False
        for rule in self.rules:
            if rule.matches(world):
                total += rule.value
                matched = True
        return total if matched else self.default

    @classmethod
    def from_rules(
        cls,
        rules: Iterable[tuple[Assignment, Fraction | int | str]],
        default: Fraction | int | str = 0,
    ) -> "UtilityFunction":
        return cls(
            tuple(UtilityRule(cond, Fraction(v)) for cond, v in rules),
            Fraction(default),
        )

    @classmethod
    def from_table(cls, table: Mapping[tuple[tuple[str, Value], ...], Fraction]) -> "UtilityFunction":
        """Extensional form: one rule per (full) assignment; default unused."""
        rules = tuple(UtilityRule(dict(key), Fraction(v)) for key, v in table.items())
        return cls(rules, Fraction(0))

    @classmethod
    def from_factors(
        cls,
        factors: Iterable[tuple[tuple[str, ...], Mapping[tuple[Value, ...], Fraction]]],
    ) -> "UtilityFunction":
        """Factored form: local tables over variable subsets, values summed."""
        rules: list[UtilityRule] = []
        for variables, table in factors:
            for key, value in table.items():
                if len(key) != len(variables):
                    raise ModelError(
                        f"factor over {variables} has a row of arity {len(key)}"
                    )
                rules.append(UtilityRule(dict(zip(variables, key)), Fraction(value)))
        return cls(tuple(rules), Fraction(0))


@dataclass(frozen=True)
class EpistemicState:
    """Weighted settings plus the agent's utility function.

    Weights are exact nonnegative rationals summing to one; settings must be
    pairwise distinct and share a single signature.
    """

    settings: tuple[tuple[CausalSetting, Fraction], ...]
    utility: UtilityFunction

    def __post_init__(self) -> None:
        settings = tuple((s, Fraction(w)) for s, w in self.settings)
        object.__setattr__(self, "settings", settings)
        if not settings:
            raise ModelError("epistemic state needs at least one setting")
        total = Fraction(0)
        for setting, weight in settings:
            if weight < 0:
                raise ModelError("setting weight is negative")
            total += weight
        if total != 1:
            raise ModelError(f"setting weights sum to {total}, not 1")
        signature = settings[0][0].model.signature
        for setting, _ in settings:
            if setting.model.signature != signature:
                raise ModelError("settings mix different signatures")
        seen: list[CausalSetting] = []
        for setting, _ in settings:
            if setting in seen:
                raise ModelError("duplicate setting in epistemic state")
            seen.append(setting)

    @property
    def signature(self):
        return self.settings[0][0].model.signature

    @property
    def actions(self) -> tuple[str, ...]:
        return self.settings[0][0].model.actions


@dataclass(frozen=True)
class CounterfactualWorldSpec:
    """A setting, an action choice, and values held fixed by intervention.

    ``holds`` may only target endogenous non-action variables: it expresses
    outcomes kept at their values from another action, never a second choice.
    """

    setting: CausalSetting
    action_choice: Assignment
    holds: Intervention

    def __post_init__(self) -> None:
        object.__setattr__(self, "action_choice", dict(self.action_choice))
        model = self.setting.model
        for name in self.holds.assignment:
            if name in model.signature.exogenous:
                raise ModelError(f"holds targets exogenous {name}")
            if name in model.actions:
                raise ModelError(f"holds targets action {name}")
            if name not in model.signature.endogenous:
                raise ModelError(f"holds targets unknown variable {name}")


HoldsBuilder = Callable[[CausalSetting], Intervention]


def product_state(
    model: CausalModel,
    bernoulli_params: Mapping[str, Fraction],
    utility: UtilityFunction,
) -> EpistemicState:
    """Independent-product state over every context of a binary-exogenous model.

    ``bernoulli_params`` gives, per exogenous variable, the probability of its
    second domain value. Every context in the product space appears, including
    zero-weight ones.
    """
    sig = model.signature
    params: dict[str, Fraction] = {}
    for name in sig.exogenous:
        if name not in bernoulli_params:
            raise ModelError(f"no parameter for exogenous {name}")
        dom = sig.domain(name)
        if len(dom) != 2:
            raise ModelError(f"product state needs binary domains; {name} has {len(dom)} values")
        p = Fraction(bernoulli_params[name])
        if not 0 <= p <= 1:
            raise ModelError(f"parameter for {name} is {p}, outside [0, 1]")
        params[name] = p
    for extra in set(bernoulli_params) - set(sig.exogenous):
        raise ModelError(f"parameter for non-exogenous {extra}")

    settings: list[tuple[CausalSetting, Fraction]] = []
    spaces = [sig.domain(name) for name in sig.exogenous]
    for combo in itertools.product(*spaces):
        weight = Fraction(1)
        for name, value in zip(sig.exogenous, combo):
            p = params[name]
            weight *= p if value == sig.domain(name)[1] else 1 - p
        settings.append((CausalSetting(model, Context(dict(zip(sig.exogenous, combo)))), weight))
    return EpistemicState(tuple(settings), utility)


def world_of(spec: CounterfactualWorldSpec) -> World:
    """Solve the setting with ``holds`` imposed and the action choice applied."""
    model = intervene(spec.setting.model, spec.holds)
    return solve(model, spec.setting.context, spec.action_choice)


def expected_utility(
    state: EpistemicState,
    action_choice: Assignment,
    holds_builder: HoldsBuilder | None = None,
) -> Fraction:
    """Probability-weighted utility of the solved worlds under ``action_choice``.

    When ``holds_builder`` is given it is called once per setting and its
    intervention is imposed before solving, letting callers freeze outcome
    variables at per-setting values.
    """
    total = Fraction(0)
    for setting, weight in state.settings:
        if weight == 0:
            continue
        holds = holds_builder(setting) if holds_builder else Intervention({})
        world = world_of(CounterfactualWorldSpec(setting, action_choice, holds))
        total += weight * state.utility(world)
    return total
