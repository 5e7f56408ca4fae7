"""Direct and oblique intent over epistemic states (the hkw framework).

The affect check asks whether an action's expected advantage over a reference
action transfers once a chosen set of outcome variables is frozen at the
values the action would give them: if freezing the set makes some reference
action at least as good, the agent acted in order to affect those variables.
Direct intent adds feasibility of a specific outcome and its optimality among
the feasible alternatives. Oblique intent covers side effects: outcomes
disjoint from the directly intended ones that the agent foresees with high
confidence, either outright or conditional on the direct outcome.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .epistemics import CausalSetting, EpistemicState, expected_utility
from .scm import (
    CausalFormula,
    Intervention,
    ModelError,
    Value,
    intervene,
    satisfies,
    solve,
)

DEFAULT_CONFIDENCE = Fraction(19, 20)


@dataclass(frozen=True)
class Confidence:
    """Threshold for oblique foresight, strictly between 0 and 1."""

    value: Fraction

    def __post_init__(self) -> None:
        value = Fraction(self.value)
        object.__setattr__(self, "value", value)
        if not 0 < value < 1:
            raise ModelError(f"confidence {value} is not strictly between 0 and 1")


@dataclass(frozen=True)
class ReferenceSet:
    """The action variable and the alternatives the action is judged against."""

    action: str
    alternatives: tuple[Value, ...]

    def __post_init__(self) -> None:
        seen: list[Value] = []
        for value in self.alternatives:
            if value not in seen:
                seen.append(value)
        object.__setattr__(self, "alternatives", tuple(seen))
        if not self.alternatives:
            raise ModelError("reference set is empty")

    @property
    def default_value(self) -> Value:
        """Canonical action value for worlds that fix no action (first alternative)."""
        return self.alternatives[0]


@dataclass(frozen=True)
class OutcomeSpec:
    """An ordered tuple of endogenous variables with one value each."""

    variables: tuple[str, ...]
    values: tuple[Value, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.variables) != len(self.values):
            raise ModelError("outcome variables and values differ in length")
        if len(set(self.variables)) != len(self.variables):
            raise ModelError("outcome repeats a variable")
        if not self.variables:
            raise ModelError("outcome is empty")

    def as_assignment(self) -> dict[str, Value]:
        return dict(zip(self.variables, self.values))

    def formula(self) -> CausalFormula:
        return CausalFormula.of(self.as_assignment())


@dataclass(frozen=True)
class TransferCheck:
    """Eq.-style transfer test for one frozen variable set.

    ``lhs`` is the expected utility of the action; ``alternatives`` pairs each
    reference action with its expected utility when the frozen set keeps its
    values from the audited action; ``holds`` iff lhs <= the best of them.
    """

    frozen: tuple[str, ...]
    lhs: Fraction
    alternatives: tuple[tuple[Value, Fraction], ...]
    holds: bool

    @property
    def best(self) -> Fraction:
        return max(v for _, v in self.alternatives)


@dataclass(frozen=True)
class AffectVerdict:
    """Outcome of the affect check for one variable set.

    ``intended`` is the transfer test at the set itself. ``witnesses`` lists
    every minimal superset whose freezing makes the transfer hold, found by
    cardinality-then-declaration-order enumeration; for an intended set that
    is the set itself, and for a failed one it shows which larger sets would
    carry the advantage (empty when none does).
    """

    variables: tuple[str, ...]
    intended: bool
    check: TransferCheck
    witnesses: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class DirectIntentVerdict:
    """Three-condition direct-intent verdict for one outcome.

    ``failed`` names the first failing condition: "affect" (the outcome's
    variables fail the transfer test), "feasible" (the outcome value cannot
    result from the action in any possible setting), or "best-outcome" (some
    feasible alternative value would be at least as good forced directly).
    """

    outcome: OutcomeSpec
    intended: bool
    failed: str | None
    affect: AffectVerdict
    feasible: bool
    outcome_value: Fraction
    alternative_values: tuple[tuple[tuple[Value, ...], Fraction], ...]
    default_choice: tuple[tuple[str, Value], ...]


@dataclass(frozen=True)
class ObliqueIntentVerdict:
    """Which oblique clause fired, with exact achieved probabilities.

    ``clause_a`` is the unconditional probability that the side outcome
    follows the action; ``clause_b`` is the same probability conditioned on
    the direct outcome also following it, None when the direct outcome has
    probability zero (the clause is then not applicable).
    """

    side: OutcomeSpec
    direct: OutcomeSpec
    intended: bool
    clause: str | None
    achieved: Fraction
    clause_a: Fraction
    clause_b: Fraction | None
    confidence: Confidence


@dataclass(frozen=True)
class IntentVerdict:
    """Aggregate for one audited action: affect sets, direct, oblique."""

    affect_sets: tuple[tuple[str, ...], ...]
    direct: DirectIntentVerdict
    oblique: tuple[ObliqueIntentVerdict, ...]


def _single_action(state: EpistemicState) -> str:
    actions = state.actions
    if len(actions) != 1:
        raise ModelError(f"intent queries need exactly one action variable, found {len(actions)}")
    return actions[0]


def _check_action_value(state: EpistemicState, action: str, value: Value) -> None:
    if value not in state.signature.domain(action):
        raise ModelError(f"action value {value!r} outside domain of {action}")


def _validate_reference(state: EpistemicState, ref: ReferenceSet) -> None:
    action = _single_action(state)
    if ref.action != action:
        raise ModelError(f"reference set names {ref.action}, model action is {action}")
    for value in ref.alternatives:
        _check_action_value(state, action, value)


def _validate_outcome_variables(state: EpistemicState, variables: Iterable[str]) -> None:
    action = _single_action(state)
    sig = state.signature
    for name in variables:
        if name not in sig.endogenous:
            raise ModelError(f"outcome variable {name} is not endogenous")
        if name == action:
            raise ModelError(f"outcome variable {name} is the action")


def transfer_inequality(
    state: EpistemicState,
    a: Value,
    ref: ReferenceSet,
    frozen: tuple[str, ...],
) -> TransferCheck:
    """Expected utility of ``a`` vs each reference action with ``frozen`` inherited.

    The frozen variables keep, setting by setting, the values they take under
    ``a``; everything else re-solves under the reference action.
    """
    action = ref.action
    lhs = expected_utility(state, {action: a})

    def freeze(setting: CausalSetting) -> Intervention:
        world = solve(setting.model, setting.context, {action: a})
        return Intervention(world.restrict(frozen))

    alternatives = tuple(
        (alt, expected_utility(state, {action: alt}, freeze)) for alt in ref.alternatives
    )
    holds = any(lhs <= value for _, value in alternatives)
    return TransferCheck(tuple(frozen), lhs, alternatives, holds)


def intends_to_affect(
    state: EpistemicState,
    a: Value,
    ref: ReferenceSet,
    variables: Iterable[str],
) -> AffectVerdict:
    """Did the agent choose ``a`` in order to affect ``variables``?

    True iff freezing the set itself at its values under ``a`` makes some
    reference action at least as good. The verdict also reports all minimal
    supersets passing the same test.
    """
    _validate_reference(state, ref)
    action = ref.action
    _check_action_value(state, action, a)
    target = tuple(variables)
    _validate_outcome_variables(state, target)

    check = transfer_inequality(state, a, ref, target)

    sig = state.signature
    model = state.settings[0][0].model
    pool = [v for v in model.non_action_endogenous]
    base = set(target)
    extras = [v for v in pool if v not in base]
    satisfied: dict[frozenset[str], bool] = {}
    ordered: list[tuple[str, ...]] = []
    for size in range(len(extras) + 1):
        for combo in itertools.combinations(extras, size):
            members = frozenset(base | set(combo))
            candidate = tuple(v for v in pool if v in members)
            result = check.holds if members == base else transfer_inequality(
                state, a, ref, candidate
            ).holds
            satisfied[members] = result
            if result:
                ordered.append(candidate)
    witnesses = tuple(
        cand
        for cand in ordered
        if not any(
            satisfied[other]
            for other in satisfied
            if other < frozenset(cand) and other >= base
        )
    )
    return AffectVerdict(target, check.holds, check, witnesses)


def is_possible(state: EpistemicState, setting: CausalSetting) -> bool:
    """Positive weight in the state. The setting must be one of its members."""
    for member, weight in state.settings:
        if member == setting:
            return weight > 0
    raise ModelError("setting is not a member of the epistemic state")


def is_feasible(setting: CausalSetting, a: Value, spec: OutcomeSpec) -> bool:
    """Can the outcome result from the action in this setting?"""
    model = setting.model
    action = model.actions[0] if len(model.actions) == 1 else None
    if action is None:
        raise ModelError("feasibility needs exactly one action variable")
    return satisfies(
        model, setting.context, None, Intervention({action: a}), spec.formula()
    )


def hkw_intends(
    state: EpistemicState,
    a: Value,
    ref: ReferenceSet,
    spec: OutcomeSpec,
) -> DirectIntentVerdict:
    """Direct intent: affect, feasibility, and optimality of the outcome.

    Worlds compared in the optimality condition intervene on the outcome
    variables only; the action variable is not fixed by the agent there and
    takes the reference set's first alternative (recorded in the verdict).
    """
    _validate_reference(state, ref)
    action = ref.action
    _check_action_value(state, action, a)
    _validate_outcome_variables(state, spec.variables)
    for name, value in spec.as_assignment().items():
        if value not in state.signature.domain(name):
            raise ModelError(f"outcome value {value!r} outside domain of {name}")

    affect = intends_to_affect(state, a, ref, spec.variables)

    possible = [(s, w) for s, w in state.settings if w > 0]
    feasible = any(is_feasible(s, a, spec) for s, _ in possible)

    default_choice = {action: ref.default_value}

    def forced_value(values: tuple[Value, ...]) -> Fraction:
        forced = Intervention(dict(zip(spec.variables, values)))
        total = Fraction(0)
        for setting, weight in possible:
            world = solve(
                intervene(setting.model, forced), setting.context, default_choice
            )
            total += weight * state.utility(world)
        return total

    spaces = [state.signature.domain(v) for v in spec.variables]
    feasible_values = [
        combo
        for combo in itertools.product(*spaces)
        if any(
            is_feasible(s, a, OutcomeSpec(spec.variables, combo)) for s, _ in possible
        )
    ]
    outcome_value = forced_value(spec.values)
    alternative_values = tuple((combo, forced_value(combo)) for combo in feasible_values)
    best_outcome = all(outcome_value >= value for _, value in alternative_values)

    if not affect.intended:
        failed = "affect"
    elif not feasible:
        failed = "feasible"
    elif not best_outcome:
        failed = "best-outcome"
    else:
        failed = None
    return DirectIntentVerdict(
        outcome=spec,
        intended=failed is None,
        failed=failed,
        affect=affect,
        feasible=feasible,
        outcome_value=outcome_value,
        alternative_values=alternative_values,
        default_choice=tuple(default_choice.items()),
    )


def scm_oblique_intends(
    state: EpistemicState,
    a: Value,
    direct: OutcomeSpec,
    side: OutcomeSpec,
    confidence: Confidence | Fraction = DEFAULT_CONFIDENCE,
) -> ObliqueIntentVerdict:
    """Oblique intent of a side outcome disjoint from the direct one.

    Clause (a): the side outcome follows the action with probability above
    the confidence threshold. Clause (b): it does so conditional on the
    direct outcome also following the action; not applicable when the direct
    outcome has probability zero under the action.
    """
    if not isinstance(confidence, Confidence):
        confidence = Confidence(Fraction(confidence))
    action = _single_action(state)
    _check_action_value(state, action, a)
    _validate_outcome_variables(state, direct.variables)
    _validate_outcome_variables(state, side.variables)
    overlap = set(direct.variables) & set(side.variables)
    if overlap:
        raise ModelError(
            f"side outcome shares variables with the direct outcome: {', '.join(sorted(overlap))}"
        )

    act = Intervention({action: a})
    side_mass = Fraction(0)
    direct_mass = Fraction(0)
    joint_mass = Fraction(0)
    for setting, weight in state.settings:
        if weight == 0:
            continue
        world = solve(intervene(setting.model, act), setting.context, {})
        side_hit = side.formula().holds_in(world)
        direct_hit = direct.formula().holds_in(world)
        if side_hit:
            side_mass += weight
        if direct_hit:
            direct_mass += weight
        if side_hit and direct_hit:
            joint_mass += weight

    clause_a = side_mass
    clause_b = joint_mass / direct_mass if direct_mass > 0 else None
    threshold = confidence.value
    if clause_a > threshold:
        clause, achieved = "a", clause_a
    elif clause_b is not None and clause_b > threshold:
        clause, achieved = "b", clause_b
    else:
        clause = None
        achieved = clause_a if clause_b is None else max(clause_a, clause_b)
    return ObliqueIntentVerdict(
        side=side,
        direct=direct,
        intended=clause is not None,
        clause=clause,
        achieved=achieved,
        clause_a=clause_a,
        clause_b=clause_b,
        confidence=confidence,
    )


def audit_intent(
    state: EpistemicState,
    a: Value,
    ref: ReferenceSet,
    direct: OutcomeSpec,
    sides: Iterable[OutcomeSpec] = (),
    confidence: Confidence | Fraction = DEFAULT_CONFIDENCE,
) -> IntentVerdict:
    """Direct verdict for ``direct`` plus oblique verdicts for each side outcome."""
    verdict = hkw_intends(state, a, ref, direct)
    oblique = tuple(
        scm_oblique_intends(state, a, direct, side, confidence) for side in sides
    )
    return IntentVerdict(verdict.affect.witnesses, verdict, oblique)
