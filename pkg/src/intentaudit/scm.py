"""Finite discrete structural causal models.

A model couples a signature (exogenous and endogenous variables with finite
ordered domains) with one extensional structural equation per endogenous
non-action variable. Contexts fix the exogenous variables, action choices fix
the decision variables, and solving propagates values through the equations in
a fixed topological order. Interventions produce submodels whose targets are
pinned to constants, and causal formulas (conjunctions of possibly negated
assignments) are evaluated against solved worlds.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping

Value = int | str
Assignment = Mapping[str, Value]


class ModelError(ValueError):
    """A model, context, action choice or intervention violates a contract."""


@dataclass(frozen=True)
class Signature:
    """Variable inventory: exogenous names, endogenous names, finite domains.

    Domain tuples are ordered; the order fixes enumeration order everywhere
    (context enumeration, tie-breaking, canonical serialization).
    """

    exogenous: tuple[str, ...]
    endogenous: tuple[str, ...]
    domains: Mapping[str, tuple[Value, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exogenous", tuple(self.exogenous))
        object.__setattr__(self, "endogenous", tuple(self.endogenous))
        object.__setattr__(self, "domains", dict(self.domains))

    @property
    def variables(self) -> tuple[str, ...]:
        return self.exogenous + self.endogenous

    def domain(self, name: str) -> tuple[Value, ...]:
        try:
            return self.domains[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None


@dataclass(frozen=True)
class StructuralEquation:
    """Extensional equation: a total table from parent value tuples to a value."""

    target: str
    parents: tuple[str, ...]
    table: Mapping[tuple[Value, ...], Value]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", dict(self.table))

    @classmethod
    def constant(cls, target: str, value: Value) -> "StructuralEquation":
        return cls(target, (), {(): value})

    @classmethod
    def from_function(
        cls,
        target: str,
        parents: Iterable[str],
        domains: Mapping[str, tuple[Value, ...]],
        fn: Callable[..., Value],
    ) -> "StructuralEquation":
        """Tabulate ``fn`` over the parents' domain product."""
        parents = tuple(parents)
        spaces = [domains[p] for p in parents]
        table = {key: fn(*key) for key in itertools.product(*spaces)}
        return cls(target, parents, table)

    def evaluate(self, values: Assignment) -> Value:
        key = tuple(values[p] for p in self.parents)
        try:
            return self.table[key]
        except KeyError:
            raise ModelError(
                f"equation for {self.target!r} has no row for parents {key!r}"
            ) from None


@dataclass(frozen=True)
class Context:
    """Total assignment of the exogenous variables."""

    assignment: Assignment

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))

    def __getitem__(self, name: str) -> Value:
        return self.assignment[name]


@dataclass(frozen=True)
class Intervention:
    """Assignment forced onto endogenous variables (the do-operation targets)."""

    assignment: Assignment

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(self.assignment)


@dataclass(frozen=True)
class World:
    """Total assignment of every variable, exogenous and endogenous."""

    assignment: Assignment

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))

    def __getitem__(self, name: str) -> Value:
        return self.assignment[name]

    def restrict(self, names: Iterable[str]) -> dict[str, Value]:
        return {n: self.assignment[n] for n in names}


@dataclass(frozen=True)
class FormulaLiteral:
    variable: str
    value: Value
    negated: bool = False

    def holds_in(self, world: World) -> bool:
        hit = world[self.variable] == self.value
        return not hit if self.negated else hit


@dataclass(frozen=True)
class CausalFormula:
    """Conjunction of possibly negated variable assignments."""

    literals: tuple[FormulaLiteral, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "literals", tuple(self.literals))

    @classmethod
    def of(cls, assignment: Assignment) -> "CausalFormula":
        return cls(tuple(FormulaLiteral(v, x) for v, x in assignment.items()))

    def holds_in(self, world: World) -> bool:
        return all(lit.holds_in(world) for lit in self.literals)


@dataclass(frozen=True)
class Diagnostic:
    """One model validation violation, naming the variables involved."""

    code: str
    message: str
    variables: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class CausalModel:
    """Signature, equations for endogenous non-action variables, action list.

    Action variables are endogenous but carry no equation; their values come
    from the agent's choice (or an intervention). Instances are immutable;
    interventions return new models.
    """

    signature: Signature
    equations: Mapping[str, StructuralEquation]
    actions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "equations", dict(self.equations))
        object.__setattr__(self, "actions", tuple(self.actions))

    @cached_property
    def evaluation_order(self) -> tuple[str, ...]:
        """Equation targets in topological order, declaration order on ties."""
        order = _topological_order(self)
        if order is None:
            raise ModelError("model has a dependency cycle")
        return order

    def domain(self, name: str) -> tuple[Value, ...]:
        return self.signature.domain(name)

    @property
    def non_action_endogenous(self) -> tuple[str, ...]:
        return tuple(v for v in self.signature.endogenous if v not in self.actions)


def _topological_order(model: CausalModel) -> tuple[str, ...] | None:
    """Kahn's algorithm over equation targets; None when a cycle remains."""
    targets = [v for v in model.signature.endogenous if v in model.equations]
    pending: dict[str, set[str]] = {}
    for name in targets:
        eq = model.equations[name]
        pending[name] = {p for p in eq.parents if p in model.equations}
    order: list[str] = []
    placed: set[str] = set()
    while len(order) < len(targets):
        ready = [n for n in targets if n not in placed and pending[n] <= placed]
        if not ready:
            return None
        order.append(ready[0])
        placed.add(ready[0])
    return tuple(order)


def validate_model(model: CausalModel) -> list[Diagnostic]:
    """Check every structural invariant, one diagnostic per violation."""
    out: list[Diagnostic] = []
    sig = model.signature
    exo, endo = set(sig.exogenous), set(sig.endogenous)

    overlap = sorted(exo & endo)
    if overlap:
        out.append(
            Diagnostic(
                "overlapping-names",
                f"exogenous and endogenous sets share {', '.join(overlap)}",
                tuple(overlap),
            )
        )
    for name in sig.variables:
        dom = sig.domains.get(name)
        if dom is None:
            out.append(Diagnostic("missing-domain", f"{name} has no domain", (name,)))
        elif len(dom) == 0:
            out.append(Diagnostic("empty-domain", f"{name} has an empty domain", (name,)))
        elif len(set(dom)) != len(dom):
            out.append(
                Diagnostic("duplicate-domain-value", f"{name} repeats a domain value", (name,))
            )
    for extra in sorted(set(sig.domains) - set(sig.variables)):
        out.append(
            Diagnostic("unknown-domain", f"domain given for undeclared {extra}", (extra,))
        )

    for action in model.actions:
        if action not in endo:
            out.append(
                Diagnostic("action-not-endogenous", f"action {action} is not endogenous", (action,))
            )
        if action in model.equations:
            out.append(
                Diagnostic("equation-for-action", f"action {action} carries an equation", (action,))
            )

    for name in model.non_action_endogenous:
        if name not in model.equations:
            out.append(
                Diagnostic("missing-equation", f"{name} has no structural equation", (name,))
            )
    for name, eq in model.equations.items():
        if name not in endo:
            out.append(
                Diagnostic("equation-for-non-endogenous", f"equation targets {name}", (name,))
            )
            continue
        if eq.target != name:
            out.append(
                Diagnostic(
                    "mismatched-target",
                    f"equation stored under {name} targets {eq.target}",
                    (name, eq.target),
                )
            )
        unknown = [p for p in eq.parents if p not in exo | endo]
        for p in unknown:
            out.append(
                Diagnostic("unknown-parent", f"{name} depends on undeclared {p}", (name, p))
            )
        if unknown or name not in sig.domains:
            continue
        if any(p not in sig.domains for p in eq.parents):
            continue
        spaces = [sig.domains[p] for p in eq.parents]
        expected = set(itertools.product(*spaces))
        got = set(eq.table)
        for key in sorted(got - expected, key=repr):
            out.append(
                Diagnostic(
                    "out-of-domain-row",
                    f"{name} has a table row {key!r} outside the parent domains",
                    (name,),
                )
            )
        if expected - got:
            out.append(
                Diagnostic(
                    "non-total-table",
                    f"{name} misses {len(expected - got)} parent combination(s)",
                    (name,),
                )
            )
        dom = set(sig.domains[name])
        for key, val in eq.table.items():
            if key in expected and val not in dom:
                out.append(
                    Diagnostic(
                        "out-of-domain-value",
                        f"{name} maps {key!r} to {val!r} outside its domain",
                        (name,),
                    )
                )

    if not any(d.code == "missing-equation" for d in out):
        if _topological_order(model) is None:
            cyclic = _cycle_members(model)
            out.append(
                Diagnostic(
                    "cycle",
                    f"dependency cycle through {', '.join(cyclic)}",
                    tuple(cyclic),
                )
            )
    return out


def _cycle_members(model: CausalModel) -> list[str]:
    """Equation targets that can never be scheduled (the cycle and its wake)."""
    targets = set(model.equations)
    placed: set[str] = set()
    changed = True
    while changed:
        changed = False
        for name in model.equations:
            if name in placed:
                continue
            eq = model.equations[name]
            if all(p not in targets or p in placed for p in eq.parents):
                placed.add(name)
                changed = True
    return sorted(targets - placed)


def intervene(model: CausalModel, intervention: Intervention) -> CausalModel:
    """Pin each target to a constant, severing its parent arcs.

    Targets must be endogenous; exogenous targets are rejected. Intervening on
    an action variable fixes it and removes it from the action list.
    """
    sig = model.signature
    equations = dict(model.equations)
    actions = list(model.actions)
    for name, value in intervention.assignment.items():
        if name in sig.exogenous:
            raise ModelError(f"cannot intervene on exogenous {name}")
        if name not in sig.endogenous:
            raise ModelError(f"cannot intervene on unknown variable {name}")
        if value not in sig.domain(name):
            raise ModelError(f"intervention value {value!r} outside domain of {name}")
        equations[name] = StructuralEquation.constant(name, value)
        if name in actions:
            actions.remove(name)
    return CausalModel(sig, equations, tuple(actions))


def solve(
    model: CausalModel,
    context: Context,
    action_choice: Assignment | None = None,
) -> World:
    """Propagate the context and action choice through the equations.

    The context must cover every exogenous variable and the choice every
    action variable; all values must lie in the respective domains.
    """
    sig = model.signature
    choice = dict(action_choice or {})
    values: dict[str, Value] = {}
    for name in sig.exogenous:
        if name not in context.assignment:
            raise ModelError(f"context misses exogenous {name}")
        value = context[name]
        if value not in sig.domain(name):
            raise ModelError(f"context value {value!r} outside domain of {name}")
        values[name] = value
    for extra in set(context.assignment) - set(sig.exogenous):
        raise ModelError(f"context assigns non-exogenous {extra}")
    for name in model.actions:
        if name not in choice:
            raise ModelError(f"action choice misses {name}")
        value = choice[name]
        if value not in sig.domain(name):
            raise ModelError(f"action value {value!r} outside domain of {name}")
        values[name] = value
    for extra in set(choice) - set(model.actions):
        raise ModelError(f"action choice assigns non-action {extra}")
    for name in model.evaluation_order:
        values[name] = model.equations[name].evaluate(values)
    missing = set(sig.variables) - set(values)
    if missing:
        raise ModelError(f"no equation or choice covers {', '.join(sorted(missing))}")
    return World(values)


def satisfies(
    model: CausalModel,
    context: Context,
    action_choice: Assignment | None,
    intervention: Intervention | None,
    formula: CausalFormula,
) -> bool:
    """Truth of ``formula`` in the (possibly intervened) solved world.

    Intervening on an action variable removes it from the required choice;
    supplying a choice for it anyway is rejected by `solve`.
    """
    target = model if intervention is None else intervene(model, intervention)
    if intervention is not None and action_choice:
        action_choice = {
            k: v for k, v in action_choice.items() if k not in intervention.assignment
        }
    world = solve(target, context, action_choice)
    return formula.holds_in(world)
