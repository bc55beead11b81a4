"""Reader and writer for the `.archspec` architecture description format.

One declaration per line, `#` starts a comment:

    # archspec v1
    network "toy"
    input 3 32 32
    conv c1 k=3 s=1 p=1 out=8 bias=true from=input
    output from=c1

See schemas/archspec_format.md for the full grammar.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .graph_core import (
    DEFAULT_INPUT_ID,
    DEFAULT_OUTPUT_ID,
    Add,
    AvgPool,
    Concat,
    Conv,
    Fc,
    GlobalAvgPool,
    Graph,
    GraphBuilder,
    Input,
    MaxPool,
    Output,
    ShortcutPad,
    topo_order,
    validate,
)

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# archspec v1"
PARAM_ORDER = ("k", "s", "p", "out", "bias")

_TOKEN_RE = re.compile(r'"[^"]*"|"[^"]*$|[^\s"]+')
_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_KERNEL_RE = re.compile(r"^(\d+)(?:x(\d+))?$")
_INT_RE = re.compile(r"^\d+$")

# kind -> (allowed keys, required keys)
NODE_KEYS = {
    "conv": ({"k", "s", "p", "out", "bias"}, {"k", "out"}),
    "fc": ({"out", "bias"}, {"out"}),
    "maxpool": ({"k", "s", "p"}, {"k"}),
    "avgpool": ({"k", "s", "p"}, {"k"}),
    "gap": (set(), set()),
    "pad": ({"s", "out"}, {"out"}),
    "add": (set(), set()),
    "concat": (set(), set()),
    "output": (set(), set()),
}


class ArchSpecError(Exception):
    """Custom exception for archspec parse errors; carries the location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" at line {line}"
            if column is not None:
                location += f", column {column}"
        super().__init__(message + location)


@dataclass(frozen=True)
class Token:
    text: str
    column: int


@dataclass
class ArchSpecDocument:
    """Parsed declarations before they are frozen into a Graph."""

    name: str | None = None
    input_shape: tuple[int, int, int] | None = None
    input_id: str | None = None
    output_id: str | None = None
    builder: GraphBuilder = field(default_factory=GraphBuilder)
    node_lines: dict[str, int] = field(default_factory=dict)


def _tokenize(line: str, lineno: int) -> list[Token]:
    for col, ch in enumerate(line, start=1):
        if ord(ch) > 127:
            raise ArchSpecError(f"non-ASCII character {ch!r}", lineno, col)
    tokens = []
    for match in _TOKEN_RE.finditer(line):
        text = match.group(0)
        if text.startswith("#"):
            break
        if text.startswith('"') and (len(text) < 2 or not text.endswith('"')):
            raise ArchSpecError("unterminated string", lineno, match.start() + 1)
        if "#" in text and not text.startswith('"'):
            text = text.split("#", 1)[0]
            if text:
                tokens.append(Token(text, match.start() + 1))
            break
        tokens.append(Token(text, match.start() + 1))
    return tokens


def _parse_int(token: Token, value: str, lineno: int, key: str, minimum: int) -> int:
    if not _INT_RE.match(value):
        raise ArchSpecError(f"'{key}' expects an integer, got '{value}'", lineno, token.column)
    number = int(value)
    if number < minimum:
        raise ArchSpecError(f"'{key}' must be >= {minimum}, got {number}", lineno, token.column)
    return number


def _parse_params(kind: str, tokens: list[Token], lineno: int) -> tuple[dict, list[str], Token]:
    allowed, required = NODE_KEYS[kind]
    params: dict = {}
    sources: list[str] | None = None
    from_token = None
    for token in tokens:
        if "=" not in token.text:
            raise ArchSpecError(f"expected key=value, got '{token.text}'", lineno, token.column)
        key, value = token.text.split("=", 1)
        if not value:
            raise ArchSpecError(f"empty value for '{key}'", lineno, token.column)
        if key == "from":
            if sources is not None:
                raise ArchSpecError("duplicate key 'from'", lineno, token.column)
            sources = value.split(",")
            from_token = token
            continue
        if key not in allowed:
            raise ArchSpecError(f"unknown key '{key}' for {kind}", lineno, token.column)
        if key in params:
            raise ArchSpecError(f"duplicate key '{key}'", lineno, token.column)
        if key == "k":
            match = _KERNEL_RE.match(value)
            if not match:
                raise ArchSpecError(f"bad kernel '{value}'", lineno, token.column)
            kh = int(match.group(1))
            kw = int(match.group(2)) if match.group(2) else kh
            if kh < 1 or kw < 1:
                raise ArchSpecError(f"kernel must be positive, got '{value}'", lineno, token.column)
            if kind != "conv" and kh != kw:
                raise ArchSpecError(f"{kind} kernels must be square, got '{value}'", lineno, token.column)
            params[key] = (kh, kw)
        elif key == "bias":
            if value not in ("true", "false"):
                raise ArchSpecError(f"bias must be true or false, got '{value}'", lineno, token.column)
            params[key] = value == "true"
        else:
            params[key] = _parse_int(token, value, lineno, key, 0 if key == "p" else 1)
    missing = sorted(required - params.keys())
    if missing:
        raise ArchSpecError(f"{kind} is missing required key '{missing[0]}'", lineno)
    if sources is None:
        raise ArchSpecError(f"{kind} is missing 'from='", lineno)
    return params, sources, from_token


def _make_node(kind: str, params: dict):
    if kind == "conv":
        kh, kw = params["k"]
        return Conv(kernel_h=kh, kernel_w=kw, out_channels=params["out"], stride=params.get("s", 1),
                    padding=params.get("p", 0), bias=params.get("bias", True))
    if kind == "fc":
        return Fc(out_features=params["out"], bias=params.get("bias", True))
    if kind in ("maxpool", "avgpool"):
        cls = MaxPool if kind == "maxpool" else AvgPool
        return cls(kernel=params["k"][0], stride=params.get("s", 1), padding=params.get("p", 0))
    if kind == "pad":
        return ShortcutPad(out_channels=params["out"], stride=params.get("s", 1))
    return {"gap": GlobalAvgPool, "add": Add, "concat": Concat, "output": Output}[kind]()


def _declare_id(doc: ArchSpecDocument, token: Token, lineno: int) -> str:
    if not _ID_RE.match(token.text):
        raise ArchSpecError(f"invalid node id '{token.text}'", lineno, token.column)
    if token.text in doc.builder:
        raise ArchSpecError(f"duplicate id {token.text}", lineno, token.column)
    return token.text


def parse(text: str) -> Graph:
    """Parses archspec text into a validated Graph; raises ArchSpecError with location."""
    doc = ArchSpecDocument()

    for lineno, raw in enumerate(text.split("\n"), start=1):
        tokens = _tokenize(raw.rstrip("\r"), lineno)
        if not tokens:
            continue
        head = tokens[0]
        keyword = head.text

        if keyword == "network":
            if doc.name is not None:
                raise ArchSpecError("duplicate network declaration", lineno, head.column)
            if len(tokens) != 2 or not tokens[1].text.startswith('"'):
                raise ArchSpecError('expected network "<name>"', lineno, head.column)
            doc.name = tokens[1].text[1:-1]
            doc.builder.name = doc.name
            continue

        if keyword == "input":
            if doc.input_shape is not None:
                raise ArchSpecError("duplicate input", lineno, head.column)
            args = tokens[1:]
            node_id = DEFAULT_INPUT_ID
            if len(args) == 4:
                node_id = _declare_id(doc, args[0], lineno)
                args = args[1:]
            if len(args) != 3:
                raise ArchSpecError("expected input [<id>] <C> <H> <W>", lineno, head.column)
            dims = tuple(_parse_int(t, t.text, lineno, "input", 1) for t in args)
            if node_id in doc.builder:
                raise ArchSpecError(f"duplicate id {node_id}", lineno, head.column)
            doc.input_shape = dims
            doc.input_id = node_id
            doc.builder.input_shape = dims
            doc.builder.add(node_id, Input())
            doc.node_lines[node_id] = lineno
            continue

        if keyword not in NODE_KEYS:
            raise ArchSpecError(f"unknown node kind '{keyword}'", lineno, head.column)

        if keyword == "output":
            if doc.output_id is not None:
                raise ArchSpecError("duplicate output", lineno, head.column)
            rest = tokens[1:]
            node_id = DEFAULT_OUTPUT_ID
            if rest and "=" not in rest[0].text:
                node_id = _declare_id(doc, rest[0], lineno)
                rest = rest[1:]
            elif node_id in doc.builder:
                raise ArchSpecError(f"duplicate id {node_id}", lineno, head.column)
            doc.output_id = node_id
        else:
            if len(tokens) < 2 or "=" in tokens[1].text:
                raise ArchSpecError(f"{keyword} needs a node id", lineno, head.column)
            node_id = _declare_id(doc, tokens[1], lineno)
            rest = tokens[2:]

        params, sources, from_token = _parse_params(keyword, rest, lineno)
        if len(set(sources)) != len(sources):
            raise ArchSpecError("repeated id in from=", lineno, from_token.column)
        for src in sources:
            if src not in doc.builder:
                raise ArchSpecError(f"dangling reference {src}", lineno, from_token.column)
        try:
            node = _make_node(keyword, params)
        except ValueError as e:
            raise ArchSpecError(str(e), lineno, head.column) from e
        doc.builder.add(node_id, node, *sources)
        doc.node_lines[node_id] = lineno

    if doc.name is None:
        raise ArchSpecError("missing network declaration")
    if doc.input_shape is None:
        raise ArchSpecError("missing input declaration")
    if doc.output_id is None:
        raise ArchSpecError("missing output declaration")

    graph = doc.builder.build()
    report = validate(graph)
    if not report.ok:
        violation = report.violations[0]
        raise ArchSpecError(f"validation failure: {violation}", doc.node_lines.get(violation.node_id))
    logger.debug("ArchSpecParser: parsed '%s' with %d nodes", graph.name, len(graph.nodes))
    return graph


def _format_params(node) -> list[str]:
    values = {}
    if isinstance(node, Conv):
        k = str(node.kernel_h) if node.kernel_h == node.kernel_w else f"{node.kernel_h}x{node.kernel_w}"
        values = {"k": k, "s": node.stride, "p": node.padding, "out": node.out_channels, "bias": node.bias}
    elif isinstance(node, Fc):
        values = {"out": node.out_features, "bias": node.bias}
    elif isinstance(node, (MaxPool, AvgPool)):
        values = {"k": node.kernel, "s": node.stride, "p": node.padding}
    elif isinstance(node, ShortcutPad):
        values = {"s": node.stride, "out": node.out_channels}
    parts = []
    for key in PARAM_ORDER:
        if key in values:
            value = values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            parts.append(f"{key}={value}")
    return parts


def _check_writable(graph: Graph) -> None:
    name = graph.name
    if '"' in name or "\n" in name or "\r" in name or not name.isascii():
        raise ArchSpecError(f"network name {name!r} cannot be written as an archspec string")
    for node_id in sorted(graph.nodes):
        if not _ID_RE.match(node_id):
            raise ArchSpecError(f"invalid node id '{node_id}' cannot be written")


def serialize(graph: Graph) -> str:
    """Canonical archspec text: topological order, fixed key order, LF endings."""
    _check_writable(graph)
    lines = [FORMAT_HEADER, f'network "{graph.name}"']
    for node_id in topo_order(graph):
        node = graph.nodes[node_id]
        if isinstance(node, Input):
            dims = " ".join(str(d) for d in graph.input_shape)
            ident = "" if node_id == DEFAULT_INPUT_ID else f"{node_id} "
            lines.append(f"input {ident}{dims}")
            continue
        sources = "from=" + ",".join(graph.predecessors(node_id))
        if isinstance(node, Output):
            ident = "" if node_id == DEFAULT_OUTPUT_ID else f" {node_id}"
            lines.append(f"output{ident} {sources}")
            continue
        lines.append(" ".join([node.keyword, node_id, *_format_params(node), sources]))
    return "\n".join(lines) + "\n"


def load_archspec(path) -> Graph:
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as f:
        text = f.read()
    return parse(text)
