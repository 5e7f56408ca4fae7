"""Intent auditing over finite discrete causal models and influence diagrams."""
from .dsl import (
    AffectQuery,
    AndExpr,
    DirectQuery,
    DistributionDecl,
    EquationDecl,
    Expr,
    IdLowering,
    Lit,
    ModelDocument,
    NotExpr,
    ObliqueQuery,
    OrExpr,
    ParseDiagnostic,
    ParseResult,
    Query,
    ReferenceDecl,
    ScmLowering,
    TableExpr,
    UtilityTerm,
    VarRef,
    VariableDecl,
    check_text,
    compile_equation,
    lower_to_id,
    lower_to_scm,
    parse,
    query_text,
    serialize,
)
from .epistemics import (
    CausalSetting,
    CounterfactualWorldSpec,
    EpistemicState,
    UtilityFunction,
    UtilityRule,
    expected_utility,
    product_state,
    world_of,
)
from .influence import (
    ChanceNode,
    DecisionNode,
    ForeseenOutcome,
    IdObliqueVerdict,
    InfluenceDiagram,
    KgltIntentResult,
    Limits,
    Policy,
    RestrictedDiagram,
    SizeGuardError,
    UtilityNode,
    best_foreseen_outcome,
    deterministic_policies,
    id_oblique_intent,
    kglt_intent,
    optimal_policy,
    restrict,
    to_howard_canonical_form,
)
from .intent import (
    DEFAULT_CONFIDENCE,
    AffectVerdict,
    Confidence,
    DirectIntentVerdict,
    IntentVerdict,
    ObliqueIntentVerdict,
    OutcomeSpec,
    ReferenceSet,
    TransferCheck,
    audit_intent,
    hkw_intends,
    intends_to_affect,
    is_feasible,
    is_possible,
    scm_oblique_intends,
    transfer_inequality,
)
from .scm import (
    CausalFormula,
    CausalModel,
    Context,
    Diagnostic,
    FormulaLiteral,
    Intervention,
    ModelError,
    Signature,
    StructuralEquation,
    World,
    intervene,
    satisfies,
    solve,
    validate_model,
)
from .scenarios import SCENARIOS, scenario_path

__all__ = [name for name in dir() if not name.startswith("_")]
