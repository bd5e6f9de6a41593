"""Model-to-model transformations.

``simplify`` removes the release/transfer/receive (and arrive/accept)
stages and lets arrow direction alone carry the flow, keeping exactly the
reachability between the retained create/process stages. ``apply_overlay``
paints event regions onto model elements for rendering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .diagnostics import REF_UNRESOLVED, ModelError, error
from .dynamics import Event
from .model import (
    FlowEdge,
    Stage,
    StageKind,
    Thimac,
    TmModel,
    TriggerEdge,
    build_model,
)

REMOVED_KINDS = (
    StageKind.RELEASE,
    StageKind.TRANSFER,
    StageKind.RECEIVE,
    StageKind.ARRIVE,
    StageKind.ACCEPT,
)


@dataclass(frozen=True)
class DroppedTrigger:
    source: str
    target: str
    reason: str

    def to_json_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "reason": self.reason}


@dataclass(frozen=True)
class SimplifyReport:
    """What the simplification did: stages removed by kind, direct flows
    added by path collapse, and triggers dropped with reasons."""

    removed: dict[str, int]
    rewired: int
    dropped_triggers: tuple[DroppedTrigger, ...]

    def to_json_dict(self) -> dict:
        return {
            "removed": dict(self.removed),
            "rewired": self.rewired,
            "dropped_triggers": [d.to_json_dict() for d in self.dropped_triggers],
        }


def simplify(model: TmModel) -> tuple[TmModel, SimplifyReport]:
    """Collapse transport chains into direct flows between retained stages.

    For every retained pair (u, v) joined by a flow path whose interior
    stages are all removable, the output gains the direct flow u -> v.
    Triggers touching removed stages are re-anchored to the nearest
    retained stage against the flow on the source side and along it on the
    target side; when no such stage exists (or re-anchoring would make a
    self-loop) the trigger is dropped and the report says why.
    """
    removable = {s.id for s in model.stages if s.kind in REMOVED_KINDS}
    retained = [s for s in model.stages if s.id not in removable]
    retained_ids = {s.id for s in retained}

    # Collapse: breadth-first from each retained stage through removable
    # interiors only; discovery order keeps the output deterministic.
    new_flows: list[FlowEdge] = []
    seen_flows: set[tuple[str, str]] = set()
    for stage in retained:
        frontier = [stage.id]
        visited = {stage.id}
        while frontier:
            nxt: list[str] = []
            for current in frontier:
                for flow in model.flows_from(current):
                    target = flow.target
                    if target in retained_ids:
                        pair = (stage.id, target)
                        if pair not in seen_flows:
                            seen_flows.add(pair)
                            new_flows.append(FlowEdge(stage.id, target))
                    elif target not in visited:
                        visited.add(target)
                        nxt.append(target)
            frontier = nxt

    direct_before = {(f.source, f.target) for f in model.flows
                     if f.source in retained_ids and f.target in retained_ids}
    rewired = sum(1 for f in new_flows if (f.source, f.target) not in direct_before)

    def nearest_retained(start: str, forward: bool) -> str | None:
        """Closest retained stage along (or against) the flow, breadth first;
        ties resolve by flow declaration order."""
        frontier = [start]
        visited = {start}
        while frontier:
            nxt: list[str] = []
            for current in frontier:
                edges = model.flows_from(current) if forward else model.flows_into(current)
                for edge in edges:
                    neighbor = edge.target if forward else edge.source
                    if neighbor in retained_ids:
                        return neighbor
                    if neighbor not in visited:
                        visited.add(neighbor)
                        nxt.append(neighbor)
            frontier = nxt
        return None

    new_triggers: list[TriggerEdge] = []
    seen_triggers: set[tuple[str, str]] = set()
    dropped: list[DroppedTrigger] = []
    for trigger in model.triggers:
        source = trigger.source
        if source in removable:
            source = nearest_retained(trigger.source, forward=False)
        target = trigger.target
        if target in removable:
            target = nearest_retained(trigger.target, forward=True)
        if source is None:
            dropped.append(DroppedTrigger(
                trigger.source, trigger.target,
                "no retained stage upstream of the trigger source"))
            continue
        if target is None:
            dropped.append(DroppedTrigger(
                trigger.source, trigger.target,
                "no retained stage downstream of the trigger target"))
            continue
        if source == target:
            dropped.append(DroppedTrigger(
                trigger.source, trigger.target,
                "re-anchoring would collapse the trigger to a self-loop"))
            continue
        if (source, target) not in seen_triggers:
            seen_triggers.add((source, target))
            new_triggers.append(TriggerEdge(source, target))

    simplified = build_model(
        thimacs=[Thimac(id=t.id, name=t.name, parent=t.parent) for t in model.thimacs],
        stages=[Stage(id=s.id, kind=s.kind, owner=s.owner, label=s.label) for s in retained],
        flows=new_flows,
        triggers=new_triggers,
    )
    removed_counts = {kind.value: 0 for kind in REMOVED_KINDS}
    for sid in removable:
        removed_counts[model.stage(sid).kind.value] += 1
    report = SimplifyReport(
        removed=removed_counts,
        rewired=rewired,
        dropped_triggers=tuple(dropped),
    )
    return simplified, report


# -- event overlays ----------------------------------------------------------

# Fixed palette cycled over events in declaration order; the names are
# valid fill colors in common graph renderers.
PALETTE = (
    "yellow",
    "orange",
    "lightblue",
    "palegreen",
    "plum",
    "salmon",
    "khaki",
    "turquoise",
)


@dataclass(frozen=True)
class OverlaySpec:
    """Event-to-color assignments, in event declaration order."""

    assignments: tuple[tuple[str, str], ...]

    def color_of(self, event_id: str) -> str | None:
        for eid, color in self.assignments:
            if eid == event_id:
                return color
        return None


def make_overlay(events: Iterable[Event], palette: tuple[str, ...] = PALETTE) -> OverlaySpec:
    """Assign palette colors to events, cycling in declaration order."""
    return OverlaySpec(tuple(
        (event.id, palette[i % len(palette)]) for i, event in enumerate(events)
    ))


def apply_overlay(
    model: TmModel,
    events: Iterable[Event],
    spec: OverlaySpec,
) -> dict[str, tuple[str, ...]]:
    """Map each model element to the colors of the events covering it.

    Elements inside several regions carry all their colors in event
    declaration order. The model itself is untouched; the mapping is the
    annotation.
    """
    by_id = {e.id: e for e in events}
    unknown = [eid for eid, _ in spec.assignments if eid not in by_id]
    if unknown:
        raise ModelError([
            error(REF_UNRESOLVED, f"overlay names unknown event '{eid}'", eid)
            for eid in unknown
        ])
    known_elements = set(model.element_ids())
    colors: dict[str, list[str]] = {}
    for event_id, color in spec.assignments:
        for element in by_id[event_id].region:
            if element in known_elements:
                colors.setdefault(element, []).append(color)
    return {element: tuple(cs) for element, cs in colors.items()}
