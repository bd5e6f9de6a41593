"""Toolchain for thing/machine conceptual models.

Parse ``.tm`` model text into a validated metamodel, enumerate and compose
events over the static model, simulate token flow into event chronologies,
simplify models down to their create/process skeleton, and render diagrams
as dot text or canonical JSON.
"""

from .diagnostics import (
    Diagnostic,
    ModelError,
    NotEnabledError,
    Span,
    TmError,
    ValidationReport,
)
from .dsl import (
    Ast,
    Document,
    ParseError,
    ParseFailure,
    SourceFile,
    format_model,
    load,
    lower,
    parse,
)
from .dynamics import (
    BehaviorEdge,
    BehaviorGraph,
    Candidate,
    Conformance,
    Event,
    EventDecl,
    SimOptions,
    SimState,
    Trace,
    TraceRecord,
    build_events,
    check_behavior,
    conforms,
    define_event,
    elementary_events,
    enabled,
    init_state,
    run,
    step,
)
from .model import (
    Digraph,
    FlowEdge,
    Stage,
    StageKind,
    Thimac,
    TmModel,
    TriggerEdge,
    build_model,
    model_from_json,
    model_to_json,
    reachable,
    stage_graph,
    try_build_model,
)
from .render import RenderOptions, from_json, to_dot, to_json
from .transform import (
    OverlaySpec,
    SimplifyReport,
    apply_overlay,
    make_overlay,
    simplify,
)
from .validator import (
    check_connectivity,
    check_flow_legality,
    validate,
    validate_document,
)

__version__ = "0.1.0"
