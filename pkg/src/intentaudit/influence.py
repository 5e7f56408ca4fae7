"""Influence diagrams: exact enumeration, canonical form, intent procedure.

Diagrams carry decision, chance and utility nodes over finite ordered domains
with exact rational distributions. Everything is computed by full enumeration
of realizations and (for optima) of deterministic policies, behind a size
guard. The canonical-form pass gives every stochastic chance node descending
from a decision a fresh parentless noise parent and makes it deterministic,
preserving all marginals. The intent procedure asks, node by node, whether
the optimal policy would survive the best foreseen outcome being unattainable
at that node; the oblique check asks whether a given outcome was foreseen
with high confidence, outright or conditional on an intended one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence

from .scm import ModelError, Value

NodeValue = Value | tuple
Row = tuple[Fraction, ...]

DEFAULT_MAX_POLICIES = 20
DEFAULT_MAX_REALIZATIONS = 2**16


class SizeGuardError(RuntimeError):
    """An enumeration would exceed the configured policy or realization limits."""


@dataclass(frozen=True)
class Limits:
    max_policies: int = DEFAULT_MAX_POLICIES
    max_realizations: int = DEFAULT_MAX_REALIZATIONS


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class DecisionNode:
    name: str
    domain: tuple[NodeValue, ...]
    parents: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class ChanceNode:
    """Chance node with one exact distribution row per parent combination.

    Rows list probabilities in domain order. ``deterministic`` asserts every
    row is one-point; it is checked, not inferred.
    """

    name: str
    domain: tuple[NodeValue, ...]
    parents: tuple[str, ...]
    rows: Mapping[tuple[NodeValue, ...], Row]
    deterministic: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(
            self,
            "rows",
            {key: tuple(Fraction(p) for p in row) for key, row in self.rows.items()},
        )

    @classmethod
    def table(
        cls,
        name: str,
        domain: Sequence[NodeValue],
        parents: Sequence[str],
        mapping: Mapping[tuple[NodeValue, ...], NodeValue],
    ) -> "ChanceNode":
        """Deterministic node from a function table."""
        domain = tuple(domain)
        rows = {
            key: tuple(Fraction(1) if v == value else Fraction(0) for v in domain)
            for key, value in mapping.items()
        }
        return cls(name, domain, tuple(parents), rows, deterministic=True)


@dataclass(frozen=True)
class UtilityNode:
    """Leaf node contributing an exact rational to the total utility."""

    name: str
    parents: tuple[str, ...]
    table: Mapping[tuple[NodeValue, ...], Fraction]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(
            self, "table", {key: Fraction(v) for key, v in self.table.items()}
        )


@dataclass(frozen=True)
class Policy:
    """Per-decision rules: parent realization -> distribution over the domain."""

    rules: Mapping[str, Mapping[tuple[NodeValue, ...], Mapping[NodeValue, Fraction]]]

    def __post_init__(self) -> None:
        rules = {
            decision: {
                key: {v: Fraction(p) for v, p in dist.items()}
                for key, dist in table.items()
            }
            for decision, table in self.rules.items()
        }
        object.__setattr__(self, "rules", rules)

    @classmethod
    def deterministic(
        cls, choices: Mapping[str, Mapping[tuple[NodeValue, ...], NodeValue]]
    ) -> "Policy":
        return cls(
            {
                decision: {key: {value: Fraction(1)} for key, value in table.items()}
                for decision, table in choices.items()
            }
        )

    def distribution(
        self, decision: str, key: tuple[NodeValue, ...]
    ) -> Mapping[NodeValue, Fraction]:
        try:
            return self.rules[decision][key]
        except KeyError:
            raise ModelError(
                f"policy has no rule for {decision} given parents {key!r}"
            ) from None


@dataclass(frozen=True)
class ForeseenOutcome:
    """A full realization with its probability, utility, and their product."""

    realization: Mapping[str, NodeValue]
    probability: Fraction
    utility: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "realization", dict(self.realization))

    @property
    def score(self) -> Fraction:
        return self.probability * self.utility


@dataclass(frozen=True)
class InfluenceDiagram:
    """Decision, chance and utility nodes forming a DAG; validated on build."""

    decisions: tuple[DecisionNode, ...]
    chances: tuple[ChanceNode, ...]
    utilities: tuple[UtilityNode, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "decisions", tuple(self.decisions))
        object.__setattr__(self, "chances", tuple(self.chances))
        object.__setattr__(self, "utilities", tuple(self.utilities))
        self._validate()

    def _validate(self) -> None:
        names = [n.name for n in self.decisions + self.chances + self.utilities]
        if len(set(names)) != len(names):
            raise ModelError("duplicate node name in influence diagram")
        node_names = set(names)
        valued = {n.name: n for n in self.decisions + self.chances}
        for node in self.decisions + self.chances:
            if not node.domain:
                raise ModelError(f"{node.name} has an empty domain")
            if len(set(node.domain)) != len(node.domain):
                raise ModelError(f"{node.name} repeats a domain value")
        utility_names = {n.name for n in self.utilities}
        for node in self.decisions + self.chances + self.utilities:
            for parent in node.parents:
                if parent not in node_names:
                    raise ModelError(f"{node.name} has undeclared parent {parent}")
                if parent in utility_names:
                    raise ModelError(
                        f"utility node {parent} has child {node.name}; utilities are leaves"
                    )
        for node in self.chances:
            spaces = [valued[p].domain for p in node.parents]
            expected = set(itertools.product(*spaces))
            if set(node.rows) != expected:
                raise ModelError(f"{node.name} rows do not cover the parent space")
            for key, row in node.rows.items():
                if len(row) != len(node.domain):
                    raise ModelError(f"{node.name} row {key!r} has wrong arity")
                if any(p < 0 for p in row):
                    raise ModelError(f"{node.name} row {key!r} has a negative entry")
                if sum(row) != 1:
                    raise ModelError(f"{node.name} row {key!r} sums to {sum(row)}, not 1")
                if node.deterministic and max(row) != 1:
                    raise ModelError(
                        f"{node.name} is flagged deterministic but row {key!r} is not one-point"
                    )
        for node in self.utilities:
            spaces = [valued[p].domain for p in node.parents]
            if set(node.table) != set(itertools.product(*spaces)):
                raise ModelError(f"{node.name} table does not cover the parent space")
        if _topo_order(self) is None:
            raise ModelError("influence diagram has a cycle")

    @cached_property
    def topo(self) -> tuple[str, ...]:
        order = _topo_order(self)
        assert order is not None  # validated at construction
        return order

    @cached_property
    def nodes(self) -> dict[str, DecisionNode | ChanceNode | UtilityNode]:
        return {n.name: n for n in self.decisions + self.chances + self.utilities}

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {name: [] for name in self.nodes}
        for node in self.decisions + self.chances + self.utilities:
            for parent in node.parents:
                out[parent].append(node.name)
        return {name: tuple(kids) for name, kids in out.items()}

    def decision_descendants(self) -> set[str]:
        """Every node reachable from a decision, decisions included."""
        seen = {d.name for d in self.decisions}
        frontier = list(seen)
        while frontier:
            name = frontier.pop()
            for child in self.children[name]:
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
        return seen


def _topo_order(diagram: InfluenceDiagram) -> tuple[str, ...] | None:
    nodes = list(diagram.decisions + diagram.chances + diagram.utilities)
    names = [n.name for n in nodes]
    parents = {n.name: set(n.parents) for n in nodes}
    order: list[str] = []
    placed: set[str] = set()
    while len(order) < len(names):
        ready = [n for n in names if n not in placed and parents[n] <= placed]
        if not ready:
            return None
        order.append(ready[0])
        placed.add(ready[0])
    return tuple(order)


def _policy_count(diagram: InfluenceDiagram) -> int:
    count = 1
    valued = {n.name: n for n in diagram.decisions + diagram.chances}
    for node in diagram.decisions:
        rows = 1
        for parent in node.parents:
            rows *= len(valued[parent].domain)
        count *= len(node.domain) ** rows
    return count


def _realization_count(diagram: InfluenceDiagram) -> int:
    count = 1
    for node in diagram.decisions + diagram.chances:
        count *= len(node.domain)
    return count


def _guard(diagram: InfluenceDiagram, limits: Limits, policies: bool) -> None:
    realizations = _realization_count(diagram)
    if realizations > limits.max_realizations:
        raise SizeGuardError(
            f"{realizations} realizations exceed the limit of {limits.max_realizations}"
        )
    if policies:
        count = _policy_count(diagram)
        if count > limits.max_policies:
            raise SizeGuardError(
                f"{count} deterministic policies exceed the limit of {limits.max_policies}"
            )


def realizations(
    diagram: InfluenceDiagram, policy: Policy
) -> Iterator[tuple[dict[str, NodeValue], Fraction]]:
    """Positive-probability full realizations, lexicographic in topo order.

    Utility node values are included in each realization; the probability is
    the product of chance rows and policy rules along the way.
    """
    order = [n for n in diagram.topo if not isinstance(diagram.nodes[n], UtilityNode)]
    utilities = [diagram.nodes[n] for n in diagram.topo if isinstance(diagram.nodes[n], UtilityNode)]

    def rec(i: int, acc: dict[str, NodeValue], prob: Fraction):
        if i == len(order):
            full = dict(acc)
            for node in utilities:
                key = tuple(full[p] for p in node.parents)
                full[node.name] = node.table[key]
            yield full, prob
            return
        node = diagram.nodes[order[i]]
        key = tuple(acc[p] for p in node.parents)
        if isinstance(node, DecisionNode):
            dist = policy.distribution(node.name, key)
            pairs = [(v, dist.get(v, Fraction(0))) for v in node.domain]
        else:
            row = node.rows[key]
            pairs = list(zip(node.domain, row))
        for value, p in pairs:
            if p == 0:
                continue
            acc[node.name] = value
            yield from rec(i + 1, acc, prob * p)
        acc.pop(node.name, None)

    yield from rec(0, {}, Fraction(1))


def total_utility(diagram: InfluenceDiagram, realization: Mapping[str, NodeValue]) -> Fraction:
    return sum(
        (Fraction(realization[n.name]) for n in diagram.utilities), Fraction(0)
    )


def expected_utility(
    diagram: InfluenceDiagram, policy: Policy, limits: Limits = DEFAULT_LIMITS
) -> Fraction:
    """Sum of probability-weighted total utility over all realizations."""
    _guard(diagram, limits, policies=False)
    total = Fraction(0)
    for realization, prob in realizations(diagram, policy):
        total += prob * total_utility(diagram, realization)
    return total


def deterministic_policies(
    diagram: InfluenceDiagram, limits: Limits = DEFAULT_LIMITS
) -> Iterator[Policy]:
    """All deterministic policies, lexicographic in declaration/domain order."""
    _guard(diagram, limits, policies=True)
    valued = {n.name: n for n in diagram.decisions + diagram.chances}
    slots: list[tuple[str, tuple[NodeValue, ...]]] = []
    options: list[tuple[NodeValue, ...]] = []
    for node in diagram.decisions:
        spaces = [valued[p].domain for p in node.parents]
        for key in itertools.product(*spaces):
            slots.append((node.name, key))
            options.append(node.domain)
    for combo in itertools.product(*options):
        choices: dict[str, dict[tuple[NodeValue, ...], NodeValue]] = {
            n.name: {} for n in diagram.decisions
        }
        for (decision, key), value in zip(slots, combo):
            choices[decision][key] = value
        yield Policy.deterministic(choices)


def optimal_policy(
    diagram: InfluenceDiagram, limits: Limits = DEFAULT_LIMITS
) -> tuple[Policy, Fraction]:
    """Exhaustively best deterministic policy; first in canonical order wins ties."""
    best: tuple[Policy, Fraction] | None = None
    for policy in deterministic_policies(diagram, limits):
        value = expected_utility(diagram, policy, limits)
        if best is None or value > best[1]:
            best = (policy, value)
    if best is None:
        raise ModelError("diagram admits no policy")
    return best


def best_foreseen_outcome(
    diagram: InfluenceDiagram, policy: Policy, limits: Limits = DEFAULT_LIMITS
) -> ForeseenOutcome:
    """Highest probability-times-utility realization among possible ones.

    Only positive-probability realizations compete; the earliest in
    lexicographic enumeration order wins ties.
    """
    _guard(diagram, limits, policies=False)
    best: ForeseenOutcome | None = None
    for realization, prob in realizations(diagram, policy):
        candidate = ForeseenOutcome(realization, prob, total_utility(diagram, realization))
        if best is None or candidate.score > best.score:
            best = candidate
    if best is None:
        raise ModelError("policy admits no positive-probability realization")
    return best


def _noise_name(existing: set[str], base: str) -> str:
    name = f"u_{base}"
    counter = 2
    while name in existing:
        name = f"u_{base}_{counter}"
        counter += 1
    return name


def to_howard_canonical_form(diagram: InfluenceDiagram) -> InfluenceDiagram:
    """Make every stochastic decision descendant deterministic via noise parents.

    Each such node gains one fresh parentless stochastic parent carrying the
    node's uncertainty: one independent component per genuinely stochastic row
    (a single stochastic row yields a plain copy of the node's domain).
    Marginals of every original node are unchanged under every policy.
    Diagrams already in canonical form are returned unchanged.
    """
    descendants = diagram.decision_descendants()
    targets = [
        node
        for node in diagram.chances
        if node.name in descendants and not node.deterministic
    ]
    if not targets:
        return diagram
    target_names = {n.name for n in targets}
    existing = set(diagram.nodes)
    new_chances: list[ChanceNode] = []
    noise_nodes: list[ChanceNode] = []
    for node in diagram.chances:
        if node.name not in target_names:
            new_chances.append(node)
            continue
        row_keys = sorted(node.rows, key=repr)
        stochastic_keys = [k for k in row_keys if max(node.rows[k]) != 1]
        noise = _noise_name(existing, node.name)
        existing.add(noise)
        if len(stochastic_keys) == 1:
            noise_domain: tuple[NodeValue, ...] = node.domain
            noise_row = node.rows[stochastic_keys[0]]

            def component(combo: NodeValue, index: int) -> NodeValue:
                return combo
        else:
            combos = list(itertools.product(node.domain, repeat=len(stochastic_keys)))
            noise_domain = tuple(combos)
            weights = []
            for combo in combos:
                w = Fraction(1)
                for i, key in enumerate(stochastic_keys):
                    row = node.rows[key]
                    w *= row[node.domain.index(combo[i])]
                weights.append(w)
            noise_row = tuple(weights)

            def component(combo: NodeValue, index: int) -> NodeValue:
                return combo[index]

        noise_nodes.append(
            ChanceNode(noise, noise_domain, (), {(): noise_row}, deterministic=False)
        )
        new_rows: dict[tuple[NodeValue, ...], Row] = {}
        for key in row_keys:
            row = node.rows[key]
            for noise_value in noise_domain:
                if key in stochastic_keys:
                    value = component(noise_value, stochastic_keys.index(key))
                else:
                    value = node.domain[row.index(Fraction(1))]
                new_rows[key + (noise_value,)] = tuple(
                    Fraction(1) if v == value else Fraction(0) for v in node.domain
                )
        new_chances.append(
            ChanceNode(
                node.name,
                node.domain,
                node.parents + (noise,),
                new_rows,
                deterministic=True,
            )
        )
    return InfluenceDiagram(
        diagram.decisions, tuple(new_chances + noise_nodes), diagram.utilities
    )


@dataclass(frozen=True)
class RestrictedDiagram:
    """A diagram with one node barred from taking one value."""

    base: InfluenceDiagram
    node: str
    forbidden: NodeValue
    diagram: InfluenceDiagram


def restrict(
    diagram: InfluenceDiagram, name: str, forbidden: NodeValue
) -> RestrictedDiagram:
    """Remove ``forbidden`` from a node's possibilities.

    Chance rows lose the forbidden value's mass and renormalize; rows that
    kept no mass fall back to uniform over the remaining values (a one-point
    flip for deterministic binary rows). Decision nodes lose the value from
    their choice set. Single-valued domains cannot be restricted.
    """
    node = diagram.nodes.get(name)
    if node is None:
        raise ModelError(f"unknown node {name}")
    if isinstance(node, UtilityNode):
        raise ModelError(f"cannot restrict utility node {name}")
    if forbidden not in node.domain:
        raise ModelError(f"{forbidden!r} is not in the domain of {name}")
    if len(node.domain) == 1:
        raise ModelError(f"{name} has a single-valued domain; nothing to restrict")

    if isinstance(node, DecisionNode):
        reduced = tuple(v for v in node.domain if v != forbidden)
        restricted = replace(node, domain=reduced)
        decisions = tuple(
            restricted if d.name == name else d for d in diagram.decisions
        )
        chances, utilities = _drop_rows_for_parent_value(diagram, name, forbidden)
        new_diagram = InfluenceDiagram(decisions, chances, utilities)
        return RestrictedDiagram(diagram, name, forbidden, new_diagram)

    index = node.domain.index(forbidden)
    new_rows: dict[tuple[NodeValue, ...], Row] = {}
    for key, row in node.rows.items():
        kept = [Fraction(0) if i == index else p for i, p in enumerate(row)]
        mass = sum(kept)
        if mass == 0:
            share = Fraction(1, len(node.domain) - 1)
            kept = [Fraction(0) if i == index else share for i in range(len(row))]
        else:
            kept = [p / mass for p in kept]
        new_rows[key] = tuple(kept)
    deterministic = all(max(row) == 1 for row in new_rows.values())
    restricted_chance = replace(node, rows=new_rows, deterministic=deterministic)
    chances = tuple(
        restricted_chance if c.name == name else c for c in diagram.chances
    )
    new_diagram = InfluenceDiagram(diagram.decisions, chances, diagram.utilities)
    return RestrictedDiagram(diagram, name, forbidden, new_diagram)


def _drop_rows_for_parent_value(
    diagram: InfluenceDiagram, changed: str, forbidden: NodeValue
) -> tuple[tuple[ChanceNode, ...], tuple[UtilityNode, ...]]:
    """Children's rows keyed on the removed parent value disappear."""

    def keep(node: ChanceNode | UtilityNode, key: tuple[NodeValue, ...]) -> bool:
        return all(
            parent != changed or value != forbidden
            for parent, value in zip(node.parents, key)
        )

    chances = tuple(
        node
        if changed not in node.parents
        else replace(node, rows={k: r for k, r in node.rows.items() if keep(node, k)})
        for node in diagram.chances
    )
    utilities = tuple(
        node
        if changed not in node.parents
        else replace(node, table={k: v for k, v in node.table.items() if keep(node, k)})
        for node in diagram.utilities
    )
    return chances, utilities


@dataclass(frozen=True)
class KgltNodeCheck:
    """One node's intent test against the best foreseen outcome."""

    node: str
    kind: str
    foreseen_value: NodeValue
    restricted_optimum: Fraction
    achieved: Fraction | None
    intended: bool


@dataclass(frozen=True)
class KgltIntentResult:
    """Optimal policy, its best foreseen outcome, and the intended nodes."""

    diagram: InfluenceDiagram
    policy: Policy
    policy_value: Fraction
    foreseen: ForeseenOutcome
    checks: tuple[KgltNodeCheck, ...]

    @property
    def intended(self) -> tuple[tuple[str, NodeValue], ...]:
        return tuple(
            (c.node, c.foreseen_value) for c in self.checks if c.intended
        )


def kglt_intent(
    diagram: InfluenceDiagram, limits: Limits = DEFAULT_LIMITS
) -> KgltIntentResult:
    """Which foreseen node values the optimal policy was chosen to bring about.

    The diagram is first brought to canonical form. Nodes with a decision
    ancestor (each node counts as its own ancestor) are tested in reverse
    topological order: a chance node is intended when the optimal policy
    fails to achieve the maximum expected utility of the diagram with the
    node's foreseen value barred; a decision node is intended when barring
    its foreseen choice strictly lowers the achievable optimum.
    """
    hcf = to_howard_canonical_form(diagram)
    policy, value = optimal_policy(hcf, limits)
    foreseen = best_foreseen_outcome(hcf, policy, limits)
    decision_names = {d.name for d in hcf.decisions}
    with_decision_ancestor = hcf.decision_descendants()
    order = [
        name
        for name in reversed(hcf.topo)
        if name in with_decision_ancestor
        and not isinstance(hcf.nodes[name], UtilityNode)
    ]
    checks: list[KgltNodeCheck] = []
    for name in order:
        node = hcf.nodes[name]
        foreseen_value = foreseen.realization[name]
        if len(node.domain) == 1:
            # A single-valued node cannot take another value; nothing to test.
            checks.append(
                KgltNodeCheck(name, _kind(node), foreseen_value, value, value, False)
            )
            continue
        restricted = restrict(hcf, name, foreseen_value).diagram
        if name in decision_names:
            _, restricted_value = optimal_policy(restricted, limits)
            intended = restricted_value < value
            checks.append(
                KgltNodeCheck(
                    name, "decision", foreseen_value, restricted_value, None, intended
                )
            )
        else:
            achieved = expected_utility(restricted, policy, limits)
            _, restricted_value = optimal_policy(restricted, limits)
            intended = achieved < restricted_value
            checks.append(
                KgltNodeCheck(
                    name, "chance", foreseen_value, restricted_value, achieved, intended
                )
            )
    ordered = sorted(checks, key=lambda c: hcf.topo.index(c.node))
    return KgltIntentResult(hcf, policy, value, foreseen, tuple(ordered))


def _kind(node: DecisionNode | ChanceNode) -> str:
    return "decision" if isinstance(node, DecisionNode) else "chance"


@dataclass(frozen=True)
class IdObliqueVerdict:
    """Foresight verdict for one node value under a policy.

    Clause 1 is the node value's marginal probability under the policy;
    clause 2 conditions on each intended (node, value) pair in turn and
    reports the first that clears the threshold.
    """

    node: str
    value: NodeValue
    intended: bool
    clause: str | None
    achieved: Fraction
    marginal: Fraction
    conditionals: tuple[tuple[str, NodeValue, Fraction], ...]
    condition: tuple[str, NodeValue] | None


def id_oblique_intent(
    diagram: InfluenceDiagram,
    policy: Policy,
    node: str,
    value: NodeValue,
    intended: Sequence[tuple[str, NodeValue]],
    confidence: Fraction = Fraction(19, 20),
    limits: Limits = DEFAULT_LIMITS,
) -> IdObliqueVerdict:
    """Was ``node = value`` foreseen with confidence above the threshold?

    Probabilities come from full realization enumeration. Conditioning pairs
    with zero probability are skipped (not applicable); a pair naming the
    queried node itself is skipped likewise.
    """
    if node not in diagram.nodes or isinstance(diagram.nodes[node], UtilityNode):
        raise ModelError(f"{node} is not a decision or chance node")
    if value not in diagram.nodes[node].domain:
        raise ModelError(f"{value!r} is not in the domain of {node}")
    if not 0 < confidence < 1:
        raise ModelError(f"confidence {confidence} is not strictly between 0 and 1")
    _guard(diagram, limits, policies=False)

    target_mass = Fraction(0)
    pair_mass: dict[tuple[str, NodeValue], Fraction] = {}
    joint_mass: dict[tuple[str, NodeValue], Fraction] = {}
    pairs = [(z, zv) for z, zv in intended if z != node]
    for pair in pairs:
        pair_mass[pair] = Fraction(0)
        joint_mass[pair] = Fraction(0)
    for realization, prob in realizations(diagram, policy):
        hit = realization[node] == value
        if hit:
            target_mass += prob
        for z, zv in pairs:
            if realization[z] == zv:
                pair_mass[(z, zv)] += prob
                if hit:
                    joint_mass[(z, zv)] += prob

    conditionals = tuple(
        (z, zv, joint_mass[(z, zv)] / pair_mass[(z, zv)])
        for z, zv in pairs
        if pair_mass[(z, zv)] > 0
    )
    if target_mass > confidence:
        return IdObliqueVerdict(
            node, value, True, "1", target_mass, target_mass, conditionals, None
        )
    for z, zv, ratio in conditionals:
        if ratio > confidence:
            return IdObliqueVerdict(
                node, value, True, "2", ratio, target_mass, conditionals, (z, zv)
            )
    achieved = max(
        [target_mass] + [ratio for _, _, ratio in conditionals], default=target_mass
    )
    return IdObliqueVerdict(
        node, value, False, None, achieved, target_mass, conditionals, None
    )
