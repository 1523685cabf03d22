"""Type inference, AST serialization, and call-site extraction.

Receiver classes come from three binding rules only: module imports,
literal assignments, and an unknown fallback.  Serialization walks the
tree pre-order, emitting node kinds for non-leaves, normalized tokens
for names ("var:<type>"), and type tags for literals ("lit:<type>").
"""

from dataclasses import dataclass

from . import parser as P

EOS_TOKEN = "."
MODULE_SCOPE = "<module>"

LITERAL_TAGS = ("str", "int", "float", "list", "dict", "tuple")


@dataclass
class CallSiteRecord:
    repo: str
    file: str
    class_name: str
    label: str
    context_tokens: list
    in_if: bool
    span: tuple

    def to_json_dict(self):
        return {
            "repo": self.repo,
            "file": self.file,
            "class_name": self.class_name,
            "label": self.label,
            "context_tokens": self.context_tokens,
            "in_if": self.in_if,
            "span": list(self.span),
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(d["repo"], d["file"], d["class_name"], d["label"],
                   d["context_tokens"], d["in_if"], tuple(d["span"]))


def infer_types(module: P.AstNode) -> dict:
    """Scope-indexed bindings: {scope_id: {name: type_tag}}.

    Tags are "module:<qualified>", a literal tag, or "unknown".  The last
    assignment in a scope wins; function parameters and for-targets bind
    unknown in their scope.
    """
    bindings = {MODULE_SCOPE: {}}

    def visit_stmt(node, scope):
        # Only statement-position nodes bind names; keyword arguments and
        # parameter defaults are Assign nodes too, but live in expressions.
        kind = node.kind
        if kind == P.IMPORT:
            if node.children:       # 'import X as Y' binds Y: module:X
                bindings[scope][node.children[0].text] = f"module:{node.text}"
            else:                   # 'import a.b' binds the top name 'a'
                top = node.text.split(".")[0]
                bindings[scope][top] = f"module:{top}"
            return
        if kind == P.FROM_IMPORT:
            name = node.children[0].text
            target = node.children[1].text if len(node.children) > 1 else name
            bindings[scope][target] = f"module:{node.text}.{name}"
            return
        if kind == P.ASSIGN:
            target, value = node.children
            if target.kind == P.NAME:
                if value.kind == P.LITERAL and value.text in LITERAL_TAGS:
                    bindings[scope][target.text] = value.text
                else:
                    bindings[scope][target.text] = "unknown"
            return
        if kind == P.FOR:
            target = node.children[0]
            targets = target.children if target.kind == P.ARG_LIST else [target]
            for t in targets:
                bindings[scope][t.text] = "unknown"
            for child in node.children[2:]:
                visit_stmt(child, scope)
            return
        if kind == P.WHILE:
            for child in node.children[1:]:
                visit_stmt(child, scope)
            return
        if kind == P.IF:
            for child in node.children[1:]:
                visit_stmt(child, scope)
            return
        if kind == P.FUNCTION_DEF:
            fname = node.children[0].text
            inner = f"{scope}::{fname}"
            bindings.setdefault(inner, {})
            for param in node.children[1].children:
                pname = param.children[0].text if param.kind == P.ASSIGN else param.text
                bindings[inner][pname] = "unknown"
            for child in node.children[2:]:
                visit_stmt(child, inner)
            return
        # ExprStmt / Return: no bindings.

    for child in module.children:
        visit_stmt(child, MODULE_SCOPE)
    return bindings


def resolve_name(name: str, scope: str, bindings: dict) -> str:
    """Look ``name`` up through the lexical scope chain; 'unknown' if unbound."""
    parts = scope.split("::")
    while parts:
        scope_id = "::".join(parts)
        table = bindings.get(scope_id)
        if table and name in table:
            return table[name]
        parts.pop()
    return "unknown"


def serialize_ast(module: P.AstNode, bindings: dict):
    """Pre-order token sequence for the whole file.

    Returns ``(tokens, label_positions)`` where label_positions maps
    id(attribute_node) -> index of that node's member-name token, so the
    extractor can slice lookback context at the label.
    """
    tokens: list[str] = []
    label_positions: dict[int, int] = {}

    def emit_name(node, scope):
        tag = resolve_name(node.text, scope, bindings)
        if tag.startswith("module:"):
            tokens.append(tag[len("module:"):])
        elif tag == "unknown":
            tokens.append("var:unknown")
        else:
            tokens.append(f"var:{tag}")

    def visit(node, scope):
        kind = node.kind
        if kind == P.NAME:
            emit_name(node, scope)
        elif kind == P.LITERAL:
            tokens.append(f"lit:{node.text}")
        elif kind == P.ATTRIBUTE:
            tokens.append(kind)
            visit(node.children[0], scope)
            label_positions[id(node)] = len(tokens)
            tokens.append(node.text)       # member names stay verbatim
        elif kind in (P.IMPORT, P.FROM_IMPORT):
            tokens.append(kind)
            tokens.append(node.text)
            for child in node.children:
                visit(child, scope)
        elif kind == P.FUNCTION_DEF:
            tokens.append(kind)
            inner = f"{scope}::{node.children[0].text}"
            for child in node.children:
                visit(child, inner)
        elif kind == P.MODULE:
            for child in node.children:
                visit(child, scope)
        else:
            tokens.append(kind)
            for child in node.children:
                visit(child, scope)

    visit(module, MODULE_SCOPE)
    return tokens, label_positions


def _receiver_class(expr: P.AstNode, scope: str, bindings: dict):
    """Completion class of a receiver expression, or None if unknown."""
    if expr.kind == P.NAME:
        tag = resolve_name(expr.text, scope, bindings)
        if tag.startswith("module:"):
            return tag[len("module:"):]
        if tag in LITERAL_TAGS:
            return tag
        return None
    if expr.kind == P.LITERAL:
        return expr.text if expr.text in LITERAL_TAGS else None
    if expr.kind == P.ATTRIBUTE:
        # Walk to the base name; module receivers extend one level, deeper
        # chains fall back to that same deepest known prefix.
        chain = []
        node = expr
        while node.kind == P.ATTRIBUTE:
            chain.append(node.text)
            node = node.children[0]
        if node.kind != P.NAME:
            return None
        tag = resolve_name(node.text, scope, bindings)
        if not tag.startswith("module:"):
            return None
        first_attr = chain[-1]
        return f"{tag[len('module:'):]}.{first_attr}"
    return None


def extract_call_sites(module: P.AstNode, bindings: dict, serialized, T: int,
                       repo: str = "", file: str = "") -> list:
    """One CallSiteRecord per outermost Attribute with a known receiver.

    ``serialized`` is the (tokens, label_positions) pair from serialize_ast
    on the same tree.  Context is the at-most-T tokens preceding the label
    position, terminated with the end-of-sequence token.
    """
    tokens, label_positions = serialized
    found = []

    def visit(node, scope, in_if, receiver_pos):
        kind = node.kind
        if kind == P.ATTRIBUTE:
            if not receiver_pos:
                cls = _receiver_class(node.children[0], scope, bindings)
                if cls is not None and id(node) in label_positions:
                    found.append((label_positions[id(node)], node, cls, in_if))
            visit(node.children[0], scope, in_if, True)
            return
        if kind == P.FUNCTION_DEF:
            inner = f"{scope}::{node.children[0].text}"
            for child in node.children[1:]:
                visit(child, inner, in_if, False)
            return
        if kind == P.IF:
            visit(node.children[0], scope, True, False)
            for child in node.children[1:]:
                visit(child, scope, in_if, False)
            return
        for child in node.children:
            visit(child, scope, in_if, False)

    visit(module, MODULE_SCOPE, False, False)
    found.sort(key=lambda item: item[0])

    records = []
    for pos, node, cls, in_if in found:
        context = tokens[max(0, pos - T):pos] + [EOS_TOKEN]
        records.append(CallSiteRecord(
            repo=repo, file=file, class_name=cls, label=node.text,
            context_tokens=context, in_if=in_if, span=node.label_span))
    return records
