"""Events, behavior graphs, and the deterministic token-flow simulator.

An event is a region of the static model (stages plus optionally edges)
that fires during execution; a behavior graph declares the expected
chronology of events. The simulator moves tokens along flows, activates
triggers, fires events, and records everything in a trace that can be
checked against a behavior graph.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .diagnostics import (
    BEHAVIOR_INCONSISTENT,
    DUP_NAME,
    REF_UNRESOLVED,
    REGION_DISCONNECTED,
    REGION_EMPTY,
    Diagnostic,
    ModelError,
    NotEnabledError,
    Span,
    ValidationReport,
    error,
    warning,
)
from .model import StageKind, TmModel

ELEMENTARY = "elementary"
COMPOSITE = "composite"


@dataclass(frozen=True)
class EventDecl:
    """An event as declared in source: a name and the stage ids of its region."""

    name: str
    region: tuple[str, ...]
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Event:
    """A named region of the model at elementary or composite level."""

    id: str
    name: str
    region: tuple[str, ...]
    level: str
    constituents: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "level": self.level,
            "region": list(self.region),
            "constituents": list(self.constituents),
        }


@dataclass(frozen=True)
class BehaviorEdge:
    """Chronology edge ``before -> after``; a repeat mark declares a loop back."""

    before: str
    after: str
    repeat: bool = False


@dataclass(frozen=True)
class BehaviorGraph:
    nodes: tuple[str, ...]
    edges: tuple[BehaviorEdge, ...]

    def to_json_list(self) -> list[dict]:
        return [
            {"before": e.before, "after": e.after, "repeat": e.repeat}
            for e in self.edges
        ]


def _stage_elements(model: TmModel, region: Iterable[str]) -> tuple[str, ...]:
    """The stage ids named directly in a region; these drive event firing."""
    return tuple(e for e in region if model.has_stage(e))


def _touched_stages(model: TmModel, region: Iterable[str]) -> tuple[str, ...]:
    """Stage ids a region touches: stage elements plus edge endpoints.

    Used for connectivity and path questions, where an edge in the region
    stands for its two ends.
    """
    edge_by_id = {f.id: f for f in model.flows}
    edge_by_id.update({t.id: t for t in model.triggers})
    out: list[str] = []
    seen: set[str] = set()
    for element in region:
        if model.has_stage(element):
            candidates = (element,)
        elif element in edge_by_id:
            edge = edge_by_id[element]
            candidates = (edge.source, edge.target)
        else:
            candidates = ()
        for sid in candidates:
            if sid not in seen:
                seen.add(sid)
                out.append(sid)
    return tuple(out)


def _undirected_neighbors(model: TmModel) -> dict[str, set[str]]:
    neighbors: dict[str, set[str]] = {s.id: set() for s in model.stages}
    for edge in (*model.flows, *model.triggers):
        neighbors[edge.source].add(edge.target)
        neighbors[edge.target].add(edge.source)
    return neighbors


def elementary_events(model: TmModel) -> list[Event]:
    """One event per stage, in declaration order; its region is that stage alone."""
    return [
        Event(id=s.id, name=model.stage_ref(s.id), region=(s.id,), level=ELEMENTARY)
        for s in model.stages
    ]


def define_event(
    model: TmModel,
    name: str,
    region: Iterable[str],
    constituents: Sequence[Event] | None = None,
    span: Span | None = None,
) -> tuple[Event, list[Diagnostic]]:
    """Validate a region and produce an event, plus any warnings.

    Raises :class:`ModelError` for empty regions and unresolved element
    ids. A region whose elements do not hang together in the flow +
    trigger graph (ignoring arrow direction) earns a REGION_DISCONNECTED
    warning. When ``constituents`` are given the event is composite and
    its region is the union of theirs.
    """
    region = tuple(region)
    if constituents:
        derived: list[str] = []
        seen: set[str] = set()
        for c in constituents:
            for element in c.region:
                if element not in seen:
                    seen.add(element)
                    derived.append(element)
        if region and set(region) != set(derived):
            raise ValueError(
                f"event '{name}': region does not match the union of its constituents")
        region = tuple(derived)

    if not region:
        raise ModelError([error(REGION_EMPTY, f"event '{name}' has an empty region", name, span)])

    known = set(model.element_ids())
    unresolved = [
        error(REF_UNRESOLVED, f"event '{name}' names unknown element '{element}'", element, span)
        for element in region
        if element not in known
    ]
    if unresolved:
        raise ModelError(unresolved)

    touched = _touched_stages(model, region)
    warnings: list[Diagnostic] = []
    if len(touched) > 1:
        neighbors = _undirected_neighbors(model)
        component = {touched[0]}
        frontier = [touched[0]]
        while frontier:
            for nxt in neighbors[frontier.pop()]:
                if nxt not in component:
                    component.add(nxt)
                    frontier.append(nxt)
        if not set(touched) <= component:
            warnings.append(warning(
                REGION_DISCONNECTED,
                f"event '{name}' covers elements with no connecting flow or trigger",
                name,
                span,
            ))

    stages = _stage_elements(model, region)
    if constituents:
        event = Event(
            id=name,
            name=name,
            region=region,
            level=COMPOSITE,
            constituents=tuple(c.id for c in constituents),
        )
    elif len(stages) == 1 and set(touched) <= {stages[0]} | _incident(model, stages[0]):
        event = Event(id=name, name=name, region=region, level=ELEMENTARY)
    else:
        # Implicitly composed of the per-stage elementary events, whose ids
        # are the stage ids themselves.
        event = Event(
            id=name,
            name=name,
            region=region,
            level=COMPOSITE,
            constituents=stages,
        )
    return event, warnings


def _incident(model: TmModel, stage_id: str) -> set[str]:
    """Stages adjacent to ``stage_id`` through any flow or trigger edge."""
    out: set[str] = set()
    for f in (*model.flows_from(stage_id), *model.flows_into(stage_id)):
        out.update((f.source, f.target))
    for t in (*model.triggers_from(stage_id), *model.triggers_into(stage_id)):
        out.update((t.source, t.target))
    return out


def build_events(
    model: TmModel, decls: Iterable[EventDecl]
) -> tuple[list[Event], list[Diagnostic]]:
    """Turn declarations into events, accumulating diagnostics instead of raising."""
    events: list[Event] = []
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for decl in decls:
        if decl.name in seen:
            diags.append(error(
                DUP_NAME, f"event '{decl.name}' is declared twice", decl.name, decl.span))
            continue
        seen.add(decl.name)
        try:
            event, warns = define_event(model, decl.name, decl.region, span=decl.span)
        except ModelError as exc:
            diags.extend(exc.diagnostics)
            continue
        events.append(event)
        diags.extend(warns)
    return events, diags


# -- behavior-graph checking ----------------------------------------------

def _directed_reach(model: TmModel, sources: Iterable[str]) -> set[str]:
    """Stages reachable from any source along flow or trigger edges."""
    seen = set(sources)
    frontier = list(seen)
    while frontier:
        current = frontier.pop()
        for f in model.flows_from(current):
            if f.target not in seen:
                seen.add(f.target)
                frontier.append(f.target)
        for t in model.triggers_from(current):
            if t.target not in seen:
                seen.add(t.target)
                frontier.append(t.target)
    return seen


def check_behavior(
    model: TmModel, events: Iterable[Event], graph: BehaviorGraph
) -> ValidationReport:
    """Check a declared chronology against the static model.

    Every plain edge A -> B must be backed by a flow/trigger path from A's
    region to B's region, the plain edges must be acyclic, and every
    repeat edge must close a loop over plain edges. Repeat edges declare
    re-iteration, not precedence, so they are exempt from the path rule.
    """
    diags: list[Diagnostic] = []
    by_id = {e.id: e for e in events}

    resolved: list[BehaviorEdge] = []
    for edge in graph.edges:
        missing = [e for e in (edge.before, edge.after) if e not in by_id]
        if missing:
            for name in missing:
                diags.append(error(
                    REF_UNRESOLVED,
                    f"chronology edge names undeclared event '{name}'",
                    name,
                ))
            continue
        resolved.append(edge)

    plain = [e for e in resolved if not e.repeat]
    succ: dict[str, list[str]] = {}
    for e in plain:
        succ.setdefault(e.before, []).append(e.after)

    # Plain edges must form a DAG.
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def has_cycle(node: str) -> bool:
        state[node] = 1
        for nxt in succ.get(node, ()):
            mark = state.get(nxt)
            if mark == 1:
                return True
            if mark is None and has_cycle(nxt):
                return True
        state[node] = 2
        return False

    cyclic = any(state.get(e.before) is None and has_cycle(e.before) for e in plain)
    if cyclic:
        diags.append(error(
            BEHAVIOR_INCONSISTENT,
            "chronology edges form a cycle with no repeat mark",
            None,
        ))

    def dag_reaches(start: str, goal: str) -> bool:
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            if node == goal:
                return True
            for nxt in succ.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return False

    for edge in resolved:
        if edge.repeat:
            if not cyclic and not dag_reaches(edge.after, edge.before):
                diags.append(error(
                    BEHAVIOR_INCONSISTENT,
                    f"repeat edge {edge.before} -> {edge.after} does not loop back over the chronology",
                    f"{edge.before}->{edge.after}",
                ))
            continue
        before_stages = _touched_stages(model, by_id[edge.before].region)
        after_stages = set(_touched_stages(model, by_id[edge.after].region))
        if not (_directed_reach(model, before_stages) & after_stages):
            diags.append(error(
                BEHAVIOR_INCONSISTENT,
                f"no flow or trigger path from event '{edge.before}' to event '{edge.after}'",
                f"{edge.before}->{edge.after}",
            ))
    return ValidationReport(tuple(diags))


# -- simulation ------------------------------------------------------------

FIFO = "fifo"
RANDOM = "random"

STAGE_EXECUTED = "stage-executed"
EVENT_FIRED = "event-fired"
TOKEN_REJECTED = "token-rejected"
RUN_ENDED = "run-ended"


@dataclass(frozen=True)
class SimOptions:
    """Run parameters; equal options on the same model give equal runs."""

    seed: int = 0
    max_steps: int = 1000
    creation_cap: int = 1
    policy: str = FIFO
    reject_accept: frozenset[str] = frozenset()


@dataclass
class Token:
    """A simulated thing instance sitting in a stage.

    ``thing`` identifies what flows: the owning thimac's path plus the
    stage label at the mint point. ``visited`` holds indices of flow edges
    already traversed, because a thing never takes the same passage twice
    within one run; that is what lets a single transfer port serve both
    the inbound and the outbound leg without looping forever.
    """

    id: int
    thing: tuple[str, str | None]
    location: str
    visited: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class Candidate:
    """One firing choice: a spontaneous creation, the pending trigger
    activation at the head of the queue, or a token move along a flow."""

    kind: str  # "create" | "trigger" | "move"
    stage: str | None = None
    token: int | None = None
    flow_index: int | None = None


@dataclass(frozen=True)
class TraceRecord:
    step: int
    kind: str
    element: str
    tokens: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "kind": self.kind,
            "id": self.element,
            "tokens": list(self.tokens),
        }


@dataclass(frozen=True)
class Trace:
    """Ordered record of stage executions and event firings from one run."""

    records: tuple[TraceRecord, ...]
    truncated: bool = False

    def event_firings(self) -> tuple[str, ...]:
        return tuple(r.element for r in self.records if r.kind == EVENT_FIRED)

    def stage_executions(self) -> tuple[str, ...]:
        return tuple(r.element for r in self.records if r.kind == STAGE_EXECUTED)

    def to_ndjson(self) -> str:
        lines = [json.dumps(r.to_json_dict()) for r in self.records]
        lines.append(json.dumps({
            "kind": RUN_ENDED,
            "truncated": self.truncated,
            "records": len(self.records),
        }))
        return "\n".join(lines) + "\n"


@dataclass(eq=False)
class SimState:
    """Mutable run state with a single owner; never shared between runs."""

    model: TmModel
    options: SimOptions
    events: tuple[Event, ...]
    tokens: dict[int, Token] = field(default_factory=dict)
    at: dict[str, list[int]] = field(default_factory=dict)
    pending: deque = field(default_factory=deque)
    creations_used: dict[str, int] = field(default_factory=dict)
    coverage: dict[str, set[str]] = field(default_factory=dict)
    firing: dict[str, frozenset[str]] = field(default_factory=dict)
    flows_by_source: dict[str, tuple[tuple[int, str], ...]] = field(default_factory=dict)
    step_count: int = 0
    next_token: int = 1
    rng: random.Random = field(default_factory=random.Random)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimState):
            return NotImplemented
        return (
            self.model == other.model
            and self.options == other.options
            and self.events == other.events
            and self.tokens == other.tokens
            and self.at == other.at
            and tuple(self.pending) == tuple(other.pending)
            and self.creations_used == other.creations_used
            and self.coverage == other.coverage
            and self.step_count == other.step_count
            and self.next_token == other.next_token
        )


def init_state(
    model: TmModel,
    options: SimOptions = SimOptions(),
    events: Iterable[Event] = (),
) -> SimState:
    events = tuple(events)
    state = SimState(model=model, options=options, events=events)
    state.rng.seed(options.seed)
    state.firing = {e.id: frozenset(_stage_elements(model, e.region)) for e in events}
    state.coverage = {e.id: set() for e in events}
    per_source: dict[str, list[tuple[int, str]]] = {}
    for idx, f in enumerate(model.flows):
        per_source.setdefault(f.source, []).append((idx, f.target))
    state.flows_by_source = {src: tuple(moves) for src, moves in per_source.items()}
    return state


def _spontaneous_creates(model: TmModel) -> tuple[str, ...]:
    """Create stages with no incoming trigger fire on their own, up to the cap."""
    return tuple(
        s.id
        for s in model.stages
        if s.kind is StageKind.CREATE and not model.triggers_into(s.id)
    )


def enabled(state: SimState) -> list[Candidate]:
    """Firing candidates in deterministic order.

    Pending trigger activations come first (queue head only), then token
    moves (stage declaration order, arrival order within a stage, flow
    declaration order per token), then spontaneous creations still under
    their cap. Queued work runs before new creations so each created thing
    plays out its chain before the next appears.
    """
    out: list[Candidate] = []
    if state.pending:
        out.append(Candidate(kind="trigger", stage=state.pending[0]))
    for stage in state.model.stages:
        for token_id in state.at.get(stage.id, ()):
            token = state.tokens[token_id]
            for idx, _target in state.flows_by_source.get(stage.id, ()):
                if idx not in token.visited:
                    out.append(Candidate(kind="move", token=token_id, flow_index=idx))
    cap = state.options.creation_cap
    for sid in _spontaneous_creates(state.model):
        if state.creations_used.get(sid, 0) < cap:
            out.append(Candidate(kind="create", stage=sid))
    return out


def _mint(state: SimState, stage_id: str) -> Token:
    stage = state.model.stage(stage_id)
    token = Token(
        id=state.next_token,
        thing=(state.model.thimac_path(stage.owner), stage.label),
        location=stage_id,
    )
    state.next_token += 1
    state.tokens[token.id] = token
    state.at.setdefault(stage_id, []).append(token.id)
    return token


def _execute_stage(state: SimState, stage_id: str, token_id: int) -> list[TraceRecord]:
    """A token arriving at (or minted in) a stage executes it: the stage's
    outgoing triggers are enqueued and covering events may fire."""
    records = []
    state.step_count += 1
    records.append(TraceRecord(state.step_count, STAGE_EXECUTED, stage_id, (token_id,)))
    for trigger in state.model.triggers_from(stage_id):
        state.pending.append(trigger.target)
    for event in state.events:
        needed = state.firing[event.id]
        if stage_id not in needed:
            continue
        covered = state.coverage[event.id]
        covered.add(stage_id)
        if covered >= needed:
            state.step_count += 1
            records.append(TraceRecord(state.step_count, EVENT_FIRED, event.id, (token_id,)))
            covered.clear()
    return records


def step(state: SimState, candidate: Candidate) -> tuple[SimState, list[TraceRecord]]:
    """Execute one candidate, mutating and returning the state plus new records."""
    if candidate not in enabled(state):
        raise NotEnabledError(f"candidate {candidate} is not currently enabled")

    if candidate.kind == "create":
        assert candidate.stage is not None
        state.creations_used[candidate.stage] = state.creations_used.get(candidate.stage, 0) + 1
        token = _mint(state, candidate.stage)
        return state, _execute_stage(state, candidate.stage, token.id)

    if candidate.kind == "trigger":
        target = state.pending.popleft()
        token = _mint(state, target)
        return state, _execute_stage(state, target, token.id)

    assert candidate.kind == "move"
    assert candidate.token is not None and candidate.flow_index is not None
    flow = state.model.flows[candidate.flow_index]
    token = state.tokens[candidate.token]
    state.at[token.location].remove(token.id)
    token.visited.add(candidate.flow_index)
    target = state.model.stage(flow.target)
    if target.kind is StageKind.ACCEPT and flow.target in state.options.reject_accept:
        del state.tokens[token.id]
        state.step_count += 1
        return state, [TraceRecord(state.step_count, TOKEN_REJECTED, flow.target, (token.id,))]
    token.location = flow.target
    state.at.setdefault(flow.target, []).append(token.id)
    return state, _execute_stage(state, flow.target, token.id)


def run(model: TmModel, events: Iterable[Event] = (), options: SimOptions = SimOptions()) -> Trace:
    """Run to exhaustion (or the step bound), returning the full trace.

    The fifo policy always takes the first enabled candidate; the random
    policy picks uniformly with the seeded generator. Either way the trace
    is a pure function of (model, events, options).
    """
    state = init_state(model, options, events)
    records: list[TraceRecord] = []
    truncated = False
    while True:
        if state.step_count >= options.max_steps:
            truncated = True
            break
        candidates = enabled(state)
        if not candidates:
            break
        if options.policy == RANDOM:
            candidate = candidates[state.rng.randrange(len(candidates))]
        else:
            candidate = candidates[0]
        _, recs = step(state, candidate)
        records.extend(recs)
    return Trace(tuple(records), truncated)


# -- trace conformance ------------------------------------------------------

@dataclass(frozen=True)
class Conformance:
    """Outcome of checking a trace against a behavior graph."""

    ok: bool
    violation: tuple[str, str] | None = None
    step: int | None = None


def conforms(trace: Trace, graph: BehaviorGraph) -> Conformance:
    """True when the trace's event firings linearize the declared chronology.

    Only events that actually fired constrain the check. A repeat edge
    ``tail -> head`` lets the loop body (everything between head and tail
    in the plain chronology) fire again once the tail has fired; without
    one, a second firing of the same event is a violation, reported as
    ``(event, event)``. Precedence breaks are reported as the violated
    edge ``(before, after)``.
    """
    firings = [(r.step, r.element) for r in trace.records if r.kind == EVENT_FIRED]
    fired = {name for _, name in firings}

    plain = [(e.before, e.after) for e in graph.edges
             if not e.repeat and e.before in fired and e.after in fired]
    repeats = [(e.before, e.after) for e in graph.edges
               if e.repeat and e.before in fired and e.after in fired]

    succ: dict[str, set[str]] = {}
    preds: dict[str, list[str]] = {}
    for before, after in plain:
        succ.setdefault(before, set()).add(after)
        preds.setdefault(after, []).append(before)

    def descendants(node: str) -> set[str]:
        seen = {node}
        frontier = [node]
        while frontier:
            for nxt in succ.get(frontier.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    closure = {name: descendants(name) for name in fired}

    done: set[str] = set()
    for at_step, name in firings:
        if name in done:
            reset = False
            for tail, head in repeats:
                if tail not in done:
                    continue
                body = {x for x in closure.get(head, ()) if tail in closure.get(x, ())}
                if name in body:
                    done -= body
                    reset = True
                    break
            if not reset:
                return Conformance(False, (name, name), at_step)
        for before in preds.get(name, ()):
            if before not in done:
                return Conformance(False, (before, name), at_step)
        done.add(name)
    return Conformance(True)
