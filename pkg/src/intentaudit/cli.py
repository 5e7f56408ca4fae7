"""Command-line interface: check, solve, and audit model files.

Exit codes: 0 success, 1 semantic failure (bad model or undecidable
request), 2 usage or I/O error, 3 enumeration size guard tripped.

Reports are deterministic: rationals always print as p/q, keys and lines
come out in a fixed order, and timing goes to stderr only, so identical
inputs produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any

from .dsl import (
    AffectQuery,
    DirectQuery,
    ModelDocument,
    ObliqueQuery,
    ParseDiagnostic,
    Query,
    check_text,
    lower_to_id,
    lower_to_scm,
    parse,
    query_text,
    serialize,
)
from .epistemics import EpistemicState, expected_utility
from .influence import (
    DEFAULT_LIMITS,
    InfluenceDiagram,
    Limits,
    SizeGuardError,
    id_oblique_intent,
    kglt_intent,
)
from .intent import (
    DEFAULT_CONFIDENCE,
    OutcomeSpec,
    ReferenceSet,
    hkw_intends,
    intends_to_affect,
    scm_oblique_intends,
)
from .scm import Context, ModelError, Value, solve

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_USAGE = 2
EXIT_GUARD = 3

ENV_MAX_POLICIES = "INTENTAUDIT_MAX_POLICIES"
ENV_MAX_REALIZATIONS = "INTENTAUDIT_MAX_REALIZATIONS"


def _rat(value: Fraction) -> str:
    """Rationals render as p/q even when the denominator is one."""
    return f"{value.numerator}/{value.denominator}"


def _limits_from_env() -> Limits:
    limits = DEFAULT_LIMITS
    policies = os.environ.get(ENV_MAX_POLICIES)
    realizations = os.environ.get(ENV_MAX_REALIZATIONS)
    try:
        if policies is not None:
            limits = replace(limits, max_policies=int(policies))
        if realizations is not None:
            limits = replace(limits, max_realizations=int(realizations))
    except ValueError as error:
        raise UsageError(f"bad limit in environment: {error}") from None
    if limits.max_policies < 1 or limits.max_realizations < 1:
        raise UsageError("enumeration limits must be positive")
    return limits


class UsageError(Exception):
    """Bad flags, bad fragment syntax, or unreadable input."""


def _confidence_arg(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number")
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("confidence must be strictly between 0 and 1")
    return value


def _read_document(path: str) -> tuple[str, str]:
    """File text plus the sha256 of its exact bytes."""
    try:
        raw = Path(path).read_bytes()
        return raw.decode("utf-8"), hashlib.sha256(raw).hexdigest()
    except OSError as error:
        raise UsageError(str(error)) from None
    except UnicodeDecodeError as error:
        raise UsageError(f"{path}: {error}") from None


def _print_diagnostics(path: str, diagnostics: tuple[ParseDiagnostic, ...], stream) -> None:
    for diagnostic in diagnostics:
        print(f"{path}:{diagnostic.render()}", file=stream)


def _parse_fragment(doc: ModelDocument, section: str, lines: list[str]) -> ModelDocument:
    """Re-parse a reference or query override in the document's own scope.

    The override text is appended to the document's variable declarations and
    run through the ordinary parser, so it obeys exactly the file syntax.
    """
    stub = ModelDocument(
        variables=doc.variables,
        equations=(),
        distribution=(),
        utility_terms=(),
        utility_default=None,
        reference=None,
        queries=(),
    )
    text = serialize(stub) + f"\n[{section}]\n" + "\n".join(lines) + "\n"
    result = parse(text)
    if not result.ok or result.document is None:
        messages = "; ".join(d.message for d in result.diagnostics)
        raise UsageError(f"bad --{_FRAGMENT_FLAG[section]} value: {messages}")
    return result.document


_FRAGMENT_FLAG = {"reference": "ref", "queries": "query"}


def _apply_overrides(doc: ModelDocument, ref: str | None, queries: list[str] | None) -> ModelDocument:
    if ref is not None:
        doc = replace(doc, reference=_parse_fragment(doc, "reference", [ref]).reference)
    if queries:
        doc = replace(doc, queries=_parse_fragment(doc, "queries", queries).queries)
    return doc


def _split_assignments(entries: list[str]) -> dict[str, Value]:
    """Comma-separated name=value lists from repeated flags."""
    assignment: dict[str, Value] = {}
    for entry in entries:
        for item in entry.split(","):
            item = item.strip()
            if not item:
                continue
            name, eq, text = item.partition("=")
            name, text = name.strip(), text.strip()
            if not eq or not name or not text:
                raise UsageError(f"expected name=value, got {item!r}")
            try:
                assignment[name] = int(text)
            except ValueError:
                assignment[name] = text
    return assignment


def _context_from_distribution(doc: ModelDocument, model, overrides: dict[str, Value]) -> Context:
    """Fill unlisted exogenous values from a degenerate distribution."""
    degenerate = {}
    for decl in doc.distribution:
        domain = model.signature.domain(decl.name)
        if decl.probability == 0:
            degenerate[decl.name] = domain[0]
        elif decl.probability == 1:
            degenerate[decl.name] = domain[1]
    assignment = {}
    missing = []
    for name in model.signature.exogenous:
        if name in overrides:
            assignment[name] = overrides[name]
        elif name in degenerate:
            assignment[name] = degenerate[name]
        else:
            missing.append(name)
    if missing:
        raise UsageError(
            "context needed for " + ", ".join(missing) + " (no degenerate distribution entry)"
        )
    unknown = sorted(set(overrides) - set(model.signature.exogenous))
    if unknown:
        raise UsageError("not exogenous: " + ", ".join(unknown))
    return Context(assignment)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intentaudit",
        description="Audit direct and oblique intent in finite causal models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse and validate a model file")
    check.add_argument("path", help="model file")
    check.set_defaults(handler=cmd_check)

    solve_cmd = sub.add_parser("solve", help="print the world for one action choice")
    solve_cmd.add_argument("path", help="model file")
    solve_cmd.add_argument("--action", action="append", required=True,
                           help="action assignment, e.g. B=1")
    solve_cmd.add_argument("--context", action="append", default=[],
                           help="exogenous assignments, e.g. u_E=1,u_I=1")
    solve_cmd.set_defaults(handler=cmd_solve)

    audit = sub.add_parser("audit", help="run the file's intent queries")
    audit.add_argument("path", help="model file")
    audit.add_argument("--framework", choices=("hkw", "kglt", "both"), default="both",
                       help="which account to apply (default both)")
    audit.add_argument("--confidence", type=_confidence_arg, default=None,
                       help="oblique threshold, e.g. 19/20 (query-level settings win)")
    audit.add_argument("--ref", default=None,
                       help="override the reference line, e.g. 'B = 1 vs {0}'")
    audit.add_argument("--query", action="append", default=None,
                       help="replace the file's queries (repeatable)")
    style = audit.add_mutually_exclusive_group()
    style.add_argument("--json", action="store_true", help="JSON report")
    style.add_argument("--text", action="store_true", help="text report (default)")
    audit.set_defaults(handler=cmd_audit)
    return parser


def cmd_check(args: argparse.Namespace, limits: Limits) -> int:
    text, _ = _read_document(args.path)
    found = check_text(text)
    _print_diagnostics(args.path, found, sys.stdout)
    if any(d.severity == "error" for d in found):
        return EXIT_SEMANTIC
    print(f"ok: {args.path}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, limits: Limits) -> int:
    text, _ = _read_document(args.path)
    result = parse(text)
    if not result.ok or result.document is None:
        _print_diagnostics(args.path, result.diagnostics, sys.stderr)
        return EXIT_SEMANTIC
    lowering = lower_to_scm(result.document)
    if lowering.model is None:
        _print_diagnostics(args.path, lowering.diagnostics, sys.stderr)
        return EXIT_SEMANTIC
    model = lowering.model
    choice = _split_assignments(args.action)
    overrides = _split_assignments(args.context)
    context = _context_from_distribution(result.document, model, overrides)
    bad = sorted(set(choice) - set(model.actions))
    if bad:
        raise UsageError("not a decision variable: " + ", ".join(bad))
    try:
        world = solve(model, context, choice)
    except ModelError as error:
        raise UsageError(str(error)) from None
    signature = model.signature
    for name in signature.exogenous + signature.endogenous:
        print(f"{name} = {world[name]}")
    return EXIT_OK


def _label(query: Query) -> str:
    """Short query tag used at the start of every result line."""
    if isinstance(query, AffectQuery):
        return "affect {" + ",".join(query.variables) + "}"
    literals = query.literals if isinstance(query, DirectQuery) else query.side
    if len(literals) == 1:
        name, value = literals[0]
        return f"{name}={value}"
    return "{" + ",".join(name for name, _ in literals) + "}"


def _hkw_query_result(
    state: EpistemicState,
    a: Value,
    ref: ReferenceSet,
    query: Query,
    confidence: Fraction,
) -> dict[str, Any]:
    if isinstance(query, AffectQuery):
        verdict = intends_to_affect(state, a, ref, query.variables)
        return {
            "framework": "hkw",
            "kind": "affect",
            "intended": verdict.intended,
            "lhs": _rat(verdict.check.lhs),
            "alternatives": [
                {"action": value, "frozen": _rat(eu)}
                for value, eu in verdict.check.alternatives
            ],
            "witnesses": [list(w) for w in verdict.witnesses],
        }
    if isinstance(query, DirectQuery):
        spec = OutcomeSpec(
            tuple(n for n, _ in query.literals), tuple(v for _, v in query.literals)
        )
        verdict = hkw_intends(state, a, ref, spec)
        return {
            "framework": "hkw",
            "kind": "direct",
            "intended": verdict.intended,
            "failed": verdict.failed,
            "feasible": verdict.feasible,
            "outcome_value": _rat(verdict.outcome_value),
            "alternative_values": [
                {"values": list(values), "value": _rat(eu)}
                for values, eu in verdict.alternative_values
            ],
            "default_choice": {n: v for n, v in verdict.default_choice},
        }
    side = OutcomeSpec(tuple(n for n, _ in query.side), tuple(v for _, v in query.side))
    given = OutcomeSpec(tuple(n for n, _ in query.given), tuple(v for _, v in query.given))
    verdict = scm_oblique_intends(state, a, given, side, confidence)
    return {
        "framework": "hkw",
        "kind": "oblique",
        "intended": verdict.intended,
        "clause": verdict.clause,
        "achieved": _rat(verdict.achieved),
        "clause_a": _rat(verdict.clause_a),
        "clause_b": None if verdict.clause_b is None else _rat(verdict.clause_b),
        "confidence": _rat(verdict.confidence.value),
    }


def _kglt_query_result(
    diagram: InfluenceDiagram,
    result,
    query: Query,
    confidence: Fraction,
    limits: Limits,
) -> dict[str, Any] | None:
    if isinstance(query, AffectQuery):
        return None
    if isinstance(query, DirectQuery):
        intended = set(result.intended)
        hits = [[name, value, (name, value) in intended] for name, value in query.literals]
        return {
            "framework": "kglt",
            "kind": "direct",
            "intended": all(hit for _, _, hit in hits),
            "literals": [{"node": n, "value": v, "intended": hit} for n, v, hit in hits],
        }
    if len(query.side) != 1:
        return {
            "framework": "kglt",
            "kind": "oblique",
            "applicable": False,
            "note": "side outcome must be a single literal",
        }
    node, value = query.side[0]
    verdict = id_oblique_intent(
        diagram, result.policy, node, value, result.intended, confidence, limits
    )
    return {
        "framework": "kglt",
        "kind": "oblique",
        "intended": verdict.intended,
        "clause": verdict.clause,
        "achieved": _rat(verdict.achieved),
        "marginal": _rat(verdict.marginal),
        "condition": None if verdict.condition is None else list(verdict.condition),
        "confidence": _rat(confidence),
    }


def _policy_json(diagram: InfluenceDiagram, result) -> list[dict[str, Any]]:
    entries = []
    for decision in diagram.decisions:
        rules = result.policy.rules[decision.name]
        entries.append(
            {
                "decision": decision.name,
                "parents": list(decision.parents),
                "rules": [
                    {
                        "given": list(key),
                        "choice": max(dist, key=lambda v: dist[v]),
                    }
                    for key, dist in rules.items()
                ],
            }
        )
    return entries


def _kglt_summary(result) -> dict[str, Any]:
    hcf = result.diagram
    utility_names = {u.name for u in hcf.utilities}
    realization = {
        name: result.foreseen.realization[name]
        for name in hcf.topo
        if name not in utility_names
    }
    return {
        "policy": _policy_json(hcf, result),
        "policy_value": _rat(result.policy_value),
        "foreseen": {
            "realization": realization,
            "probability": _rat(result.foreseen.probability),
            "utility": _rat(result.foreseen.utility),
        },
        "intended": [{"node": n, "value": v} for n, v in result.intended],
        "checks": [
            {
                "node": c.node,
                "kind": c.kind,
                "foreseen_value": c.foreseen_value,
                "restricted_optimum": _rat(c.restricted_optimum),
                "achieved": None if c.achieved is None else _rat(c.achieved),
                "intended": c.intended,
            }
            for c in result.checks
        ],
    }


def _render_text(report: dict[str, Any]) -> str:
    lines = [
        f"model: {report['model']['path']}",
        f"sha256: {report['model']['sha256']}",
        f"framework: {report['parameters']['framework']}",
        f"confidence: {report['parameters']['confidence']}",
    ]
    reference = report["parameters"]["reference"]
    if reference is not None:
        alternatives = ",".join(str(v) for v in reference["alternatives"])
        lines.append(
            f"reference: {reference['action']} = {reference['value']} vs {{{alternatives}}}"
        )
    hkw = report.get("hkw")
    if hkw is not None:
        lines.append("")
        lines.append("== hkw ==")
        for entry in hkw["expected_utility"]:
            lines.append(
                f"expected utility: {entry['action']} = {entry['choice']} -> {entry['value']}"
            )
        for item in report["queries"]:
            for res in item["results"]:
                if res["framework"] == "hkw":
                    lines.append(_hkw_text_line(item["label"], res))
        lines.extend(_vocabulary_lines(report, "hkw"))
    kglt = report.get("kglt")
    if kglt is not None:
        lines.append("")
        lines.append("== kglt ==")
        for entry in kglt["policy"]:
            for rule in entry["rules"]:
                given = ",".join(str(v) for v in rule["given"])
                head = entry["decision"] if not rule["given"] else f"{entry['decision']}({given})"
                lines.append(f"optimal policy: {head} := {rule['choice']}")
        lines.append(f"policy value: {kglt['policy_value']}")
        foreseen = kglt["foreseen"]
        pairs = " ".join(f"{n}={v}" for n, v in foreseen["realization"].items())
        lines.append(
            f"foreseen: {pairs}; probability {foreseen['probability']};"
            f" utility {foreseen['utility']}"
        )
        intended = ", ".join(f"{e['node']}={e['value']}" for e in kglt["intended"])
        lines.append(f"intended: {intended if intended else '(none)'}")
        for item in report["queries"]:
            for res in item["results"]:
                if res["framework"] == "kglt":
                    lines.append(_kglt_text_line(item["label"], res))
        lines.extend(_vocabulary_lines(report, "kglt"))
    return "\n".join(lines) + "\n"


def _vocabulary_lines(report: dict[str, Any], framework: str) -> list[str]:
    """Per-section summary in the source vocabulary of the two accounts."""
    direct: list[str] = []
    oblique: list[str] = []
    saw_direct = saw_oblique = False
    for item in report["queries"]:
        for res in item["results"]:
            if res["framework"] != framework:
                continue
            if res["kind"] == "direct":
                saw_direct = True
                if res["intended"]:
                    direct.append(item["label"])
            elif res["kind"] == "oblique" and res.get("applicable", True):
                saw_oblique = True
                if res["intended"]:
                    oblique.append(item["label"])
    lines = []
    if saw_direct:
        lines.append("directly intends: " + (", ".join(direct) if direct else "(none)"))
    if saw_oblique:
        confidence = report["parameters"]["confidence"]
        lines.append(
            f"obliquely intends with confidence {confidence}: "
            + (", ".join(oblique) if oblique else "(none)")
        )
    return lines


def _hkw_text_line(label: str, res: dict[str, Any]) -> str:
    if res["kind"] == "affect":
        witnesses = ", ".join("{" + ",".join(w) + "}" for w in res["witnesses"])
        best = max(
            (alt["frozen"] for alt in res["alternatives"]),
            key=lambda text: Fraction(text),
        )
        verdict = "intends to affect" if res["intended"] else "does not intend to affect"
        tail = f"; lhs {res['lhs']}; best frozen {best}"
        tail += f"; witnesses {witnesses}" if witnesses else "; no witnesses"
        return f"{label}: {verdict}{tail}"
    if res["kind"] == "direct":
        if res["intended"]:
            return f"{label}: direct"
        return f"{label}: not direct (failed {res['failed']})"
    if res["intended"]:
        line = f"{label}: oblique (clause {res['clause']}, {res['achieved']})"
        if res["clause"] == "b":
            line += f"; clause a achieved {res['clause_a']}"
        return line
    clause_b = res["clause_b"] if res["clause_b"] is not None else "n/a"
    return (
        f"{label}: not oblique (clause a achieved {res['clause_a']};"
        f" clause b achieved {clause_b})"
    )


def _kglt_text_line(label: str, res: dict[str, Any]) -> str:
    if res["kind"] == "direct":
        return f"{label}: direct" if res["intended"] else f"{label}: not direct"
    if not res.get("applicable", True):
        return f"{label}: oblique query skipped ({res['note']})"
    if res["intended"]:
        line = f"{label}: oblique (clause {res['clause']}, {res['achieved']})"
        if res["clause"] == "2":
            line += f"; marginal {res['marginal']}"
        return line
    return f"{label}: not oblique (best achieved {res['achieved']})"


def cmd_audit(args: argparse.Namespace, limits: Limits) -> int:
    started = time.perf_counter()
    text, digest = _read_document(args.path)
    result = parse(text)
    if not result.ok or result.document is None:
        _print_diagnostics(args.path, result.diagnostics, sys.stderr)
        return EXIT_SEMANTIC
    doc = _apply_overrides(result.document, args.ref, args.query)
    framework = args.framework
    fallback = args.confidence if args.confidence is not None else DEFAULT_CONFIDENCE

    state = reference = action_value = None
    if framework in ("hkw", "both"):
        scm_lane = lower_to_scm(doc)
        if scm_lane.diagnostics:
            _print_diagnostics(args.path, scm_lane.diagnostics, sys.stderr)
            return EXIT_SEMANTIC
        state, reference, action_value = (
            scm_lane.state,
            scm_lane.reference,
            scm_lane.action_value,
        )
        if doc.queries and (state is None or reference is None):
            print(f"{args.path}: queries need a utility and a reference", file=sys.stderr)
            return EXIT_SEMANTIC

    diagram = None
    if framework in ("kglt", "both"):
        id_lane = lower_to_id(doc)
        if id_lane.diagnostics or id_lane.diagram is None:
            _print_diagnostics(args.path, id_lane.diagnostics, sys.stderr)
            return EXIT_SEMANTIC
        diagram = id_lane.diagram

    report: dict[str, Any] = {
        "model": {"path": str(args.path), "sha256": digest},
        "parameters": {
            "framework": framework,
            "confidence": _rat(fallback),
            "reference": None
            if doc.reference is None
            else {
                "action": doc.reference.action,
                "value": doc.reference.value,
                "alternatives": list(
                    doc.reference.alternatives
                    if doc.reference.alternatives is not None
                    else ()
                ),
            },
        },
        "queries": [],
    }
    if reference is not None and report["parameters"]["reference"] is not None:
        report["parameters"]["reference"]["alternatives"] = list(reference.alternatives)

    if state is not None and reference is not None and action_value is not None:
        report["hkw"] = {
            "expected_utility": [
                {
                    "action": reference.action,
                    "choice": choice,
                    "value": _rat(expected_utility(state, {reference.action: choice})),
                }
                for choice in (action_value, *reference.alternatives)
            ]
        }

    kglt_result = None
    if diagram is not None:
        kglt_result = kglt_intent(diagram, limits)
        report["kglt"] = _kglt_summary(kglt_result)

    for query in doc.queries:
        confidence = fallback
        if isinstance(query, ObliqueQuery) and query.confidence is not None:
            confidence = query.confidence
        results = []
        if state is not None and reference is not None and action_value is not None:
            results.append(
                _hkw_query_result(state, action_value, reference, query, confidence)
            )
        if kglt_result is not None:
            entry = _kglt_query_result(
                kglt_result.diagram, kglt_result, query, confidence, limits
            )
            if entry is not None:
                results.append(entry)
        report["queries"].append(
            {"query": query_text(query), "label": _label(query), "results": results}
        )

    if args.json:
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        sys.stdout.write(_render_text(report))
    elapsed = time.perf_counter() - started
    print(f"elapsed: {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        limits = _limits_from_env()
        return args.handler(args, limits)
    except UsageError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_SEMANTIC
    except SizeGuardError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
