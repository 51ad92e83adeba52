"""Deterministic exporters: Graphviz DOT and a plain-text outline.

Node identifiers in the DOT output are the canonical paths, so diffing two
exports lines up with diffing the underlying DAGs. One DOT node is emitted
per DAG node: the AND grouping is drawn by shaping the threat-source node
itself as a junction, not by adding helper nodes.
"""

from __future__ import annotations

from .dag import AnnotationOverlay, AttackDag, DagNode, Gate, NodeKind

_STATUS_FILL = (
    ("warning_orphaned", "#f4a582"),
    ("new_since_last", "#b7e1a5"),
    ("disputable", "#ffe08a"),
    ("expert_required", "#cfe2f3"),
)

_DECISION_FILL = {
    "closed": "#d9d9d9",
    "developed": "#d9ead3",
}


def _fill(node: DagNode, overlay: AnnotationOverlay | None) -> str:
    if overlay:
        ann = overlay.get(node.path)
        if ann is not None:
            if ann.color:
                return ann.color
            if ann.decision in _DECISION_FILL:
                return _DECISION_FILL[ann.decision]
    for status, color in _STATUS_FILL:
        if status in node.status:
            return color
    return "#ffffff"


def _shape(node: DagNode) -> str:
    if node.gate is Gate.AND:
        return "invhouse"  # labeled junction for the AND grouping
    if node.kind is NodeKind.ROOT:
        return "doubleoctagon"
    if node.children or node.gate is Gate.OR:
        return "ellipse"
    return "box"


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(dag: AttackDag, overlay: AnnotationOverlay | None = None) -> str:
    lines = [
        "digraph attack_dag {",
        "  rankdir=TB;",
        '  node [fontname="Helvetica", style=filled];',
    ]
    for node in dag.walk():
        label = node.label
        if node.gate is Gate.AND:
            label = f"AND: {label}"
        lines.append(
            f'  "{_escape(node.path)}" [label="{_escape(label)}", '
            f'shape={_shape(node)}, fillcolor="{_fill(node, overlay)}"];'
        )
    for parent, child in dag.edges():
        lines.append(f'  "{_escape(parent)}" -> "{_escape(child)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_text(dag: AttackDag) -> str:
    """Indented outline; revisits of shared nodes point at the first one."""
    out: list[str] = []
    seen: set[str] = set()

    def visit(node: DagNode, depth: int):
        indent = "  " * depth
        gate = f" <{node.gate.value.upper()}>" if node.gate and node.children else ""
        flags = f" [{','.join(sorted(node.status))}]" if node.status else ""
        if node.path in seen:
            out.append(f"{indent}- {node.label} (shared, see {node.path})")
            return
        seen.add(node.path)
        out.append(f"{indent}- {node.label}{gate}{flags}")
        for child in node.children:
            visit(child, depth + 1)

    visit(dag.root, 0)
    return "\n".join(out) + "\n"
