"""Attributed expression DAGs: representation, evaluation, rendering, templates.

A candidate equation is a directed acyclic graph rooted at an n-ary additive
node.  Edge features parameterize local operations:

  * edge into a ``pow`` node   -> exponent of that power
  * edge into a ``log`` node   -> logarithm base (10 or e)
  * other edge leaving ``add`` -> multiplicative coefficient of the child
  * any other edge             -> fixed to 1 (no redundant scale freedom)

Root-level coefficients are the only continuously fitted parameters; all
inner features (exponents, bases, inner signs) are discrete and evolved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, UnboundVariableError

ADD = "add"
MUL = "mul"
POW = "pow"
LOG = "log"
VAR = "var"
CONST = "const"

NODE_KINDS = (ADD, MUL, POW, LOG, VAR, CONST)

#: admissible logarithm bases
LOG_BASES = (10.0, math.e)

#: |denominator| below this raises a reciprocal to non-finite instead of inf
DENOM_GUARD = 1e-12

#: discrete exponent alphabet: integers in [-3, 3] without 0
DEFAULT_ALPHABET = (-3, -2, -1, 1, 2, 3)

# template kinds
POLY_TERM = "poly"
RATIONAL_TERM = "rational"
LOG_TERM = "log"
CONST_TERM = "const"
TEMPLATE_KINDS = (POLY_TERM, RATIONAL_TERM, LOG_TERM, CONST_TERM)


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    name: str | None = None


@dataclass(frozen=True)
class Edge:
    parent: int
    child: int
    feature: float = 1.0


class ExprGraph:
    """Immutable-by-convention expression graph.

    Mutating operations live elsewhere and always return new graphs;
    evaluation and rendering are pure, so graphs are safe to share across
    workers.
    """

    __slots__ = ("nodes", "edges", "root", "_by_id", "_children")

    def __init__(self, nodes, edges, root):
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        self.root = root
        self._by_id = {n.id: n for n in self.nodes}
        self._children = {}
        for e in self.edges:
            self._children.setdefault(e.parent, []).append(e)

    def node(self, nid: int) -> Node:
        return self._by_id[nid]

    def children(self, nid: int) -> list[Edge]:
        return self._children.get(nid, [])

    @property
    def term_edges(self) -> list[Edge]:
        return self.children(self.root)

    @property
    def term_count(self) -> int:
        return len(self.children(self.root))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def variables(self) -> set[str]:
        return {n.name for n in self.nodes if n.kind == VAR}

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            item = {"id": n.id, "kind": n.kind}
            if n.name is not None:
                item["name"] = n.name
            nodes.append(item)
        edges = [{"from": e.parent, "to": e.child, "feature": e.feature}
                 for e in self.edges]
        return {"nodes": nodes, "edges": edges, "root": self.root}

    @classmethod
    def from_dict(cls, payload: dict) -> "ExprGraph":
        nodes = [Node(item["id"], item["kind"], item.get("name"))
                 for item in payload["nodes"]]
        edges = [Edge(item["from"], item["to"], float(item["feature"]))
                 for item in payload["edges"]]
        return cls(nodes, edges, payload["root"])


def graph_to_json(graph: ExprGraph) -> str:
    return json.dumps(graph.to_dict(), sort_keys=True)


def graph_from_json(text: str) -> ExprGraph:
    return ExprGraph.from_dict(json.loads(text))


class GraphBuilder:
    """Incremental construction of expression graphs with fresh node ids."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._edges: list[Edge] = []
        self._next = 0

    def node(self, kind: str, name: str | None = None) -> int:
        nid = self._next
        self._next += 1
        self._nodes.append(Node(nid, kind, name))
        return nid

    def edge(self, parent: int, child: int, feature: float = 1.0) -> None:
        self._edges.append(Edge(parent, child, float(feature)))

    def attach(self, fragment: "TermFragment") -> int:
        """Graft a fragment into this builder, remapping its local ids."""
        remap = {}
        for n in fragment.nodes:
            remap[n.id] = self.node(n.kind, n.name)
        for e in fragment.edges:
            self.edge(remap[e.parent], remap[e.child], e.feature)
        return remap[fragment.head]

    def build(self, root: int) -> ExprGraph:
        return ExprGraph(self._nodes, self._edges, root)

    def fragment(self, head: int) -> "TermFragment":
        return TermFragment(self._nodes, self._edges, head)


@dataclass
class TermFragment:
    """A standalone term subgraph with local node ids and a head node."""

    nodes: list[Node]
    edges: list[Edge]
    head: int


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _safe_log(arg):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(arg)
    return np.where(arg > 0, out, np.nan)


def _safe_pow(base, exponent):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.power(base, exponent)
    if exponent < 0:
        out = np.where(np.abs(base) < DENOM_GUARD, np.nan, out)
    return out


def _eval_root(graph: ExprGraph, env: dict) -> np.ndarray:
    """Evaluate the graph over an environment of arrays (or 0-d scalars)."""
    cache: dict[int, object] = {}

    def node_value(nid):
        if nid in cache:
            return cache[nid]
        node = graph.node(nid)
        kind = node.kind
        if kind == VAR:
            try:
                value = env[node.name]
            except KeyError:
                raise UnboundVariableError(node.name) from None
        elif kind == CONST:
            value = np.float64(1.0)
        elif kind == ADD:
            value = np.float64(0.0)
            for e in graph.children(nid):
                value = value + edge_value(e, ADD)
        elif kind == MUL:
            value = np.float64(1.0)
            for e in graph.children(nid):
                value = value * edge_value(e, MUL)
        else:
            # pow/log values depend on the incoming edge; a valid graph
            # never asks for them directly
            raise ValueError(f"cannot evaluate bare {kind} node {nid}")
        cache[nid] = value
        return value

    def inner_value(nid):
        # value of the single operand edge of a pow/log node
        sole = graph.children(nid)[0]
        return edge_value(sole, graph.node(nid).kind)

    def edge_value(edge, parent_kind):
        child = graph.node(edge.child)
        if child.kind == POW:
            return _safe_pow(inner_value(edge.child), edge.feature)
        if child.kind == LOG:
            return _safe_log(inner_value(edge.child)) / np.log(edge.feature)
        value = node_value(edge.child)
        if parent_kind == ADD:
            value = edge.feature * value
        return value

    return node_value(graph.root)


def evaluate(graph: ExprGraph, assignment: dict) -> float:
    """Evaluate the graph at a single point.

    Raises UnboundVariableError for missing variables and NonFiniteError
    for any non-finite intermediate (log of a non-positive argument,
    0 to a negative power, near-zero reciprocal denominators).
    """
    env = {name: np.float64(value) for name, value in assignment.items()}
    result = float(_eval_root(graph, env))
    if not math.isfinite(result):
        raise NonFiniteError(f"graph evaluated to {result!r} at {assignment!r}")
    return result


def _column_env(data) -> dict:
    columns = getattr(data, "columns", data)
    return {name: np.asarray(col, dtype=float) for name, col in columns.items()}


def _row_count(env: dict) -> int:
    for col in env.values():
        return int(np.asarray(col).shape[0])
    return 1


def evaluate_batch(graph: ExprGraph, data) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the graph over every row of ``data``.

    ``data`` is a Dataset or a mapping of column name to array.  Returns
    ``(values, finite)``; rows that hit a non-finite intermediate carry
    NaN in ``values`` and False in ``finite``.
    """
    env = _column_env(data)
    n = _row_count(env)
    values = np.asarray(_eval_root(graph, env), dtype=float)
    if values.ndim == 0:
        values = np.full(n, float(values))
    finite = np.isfinite(values)
    values = np.where(finite, values, np.nan)
    return values, finite


def term_values(graph: ExprGraph, data) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix of per-term values with outer coefficients forced to 1.

    Column j holds the value of root child j.  Returns ``(matrix, row_ok)``
    where ``row_ok`` flags rows on which every term is finite.
    """
    env = _column_env(data)
    n = _row_count(env)
    inner = [e for e in graph.edges if e.parent != graph.root]
    columns = []
    for e in graph.term_edges:
        sub = ExprGraph(graph.nodes, [Edge(graph.root, e.child, 1.0)] + inner,
                        graph.root)
        col = np.asarray(_eval_root(sub, env), dtype=float)
        if col.ndim == 0:
            col = np.full(n, float(col))
        columns.append(col)
    matrix = np.column_stack(columns) if columns else np.empty((n, 0))
    row_ok = np.all(np.isfinite(matrix), axis=1)
    return matrix, row_ok


def coefficients(graph: ExprGraph) -> list[float]:
    return [e.feature for e in graph.term_edges]


def with_coefficients(graph: ExprGraph, coefs) -> ExprGraph:
    """New graph with the root-edge coefficients replaced."""
    terms = graph.term_edges
    if len(coefs) != len(terms):
        raise ValueError("coefficient count does not match term count")
    table = {id(e): float(c) for e, c in zip(terms, coefs)}
    edges = [Edge(e.parent, e.child, table.get(id(e), e.feature))
             for e in graph.edges]
    return ExprGraph(graph.nodes, edges, graph.root)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


def validate(graph: ExprGraph, max_terms: int | None = None) -> list[Violation]:
    """Structural checks; returns violations, never raises."""
    out: list[Violation] = []
    ids = {n.id for n in graph.nodes}
    if len(ids) != len(graph.nodes):
        out.append(Violation("structure", "duplicate node ids"))
        return out
    for e in graph.edges:
        if e.parent not in ids or e.child not in ids:
            out.append(Violation("structure", f"edge {e} references unknown node"))
            return out
    if graph.root not in ids:
        out.append(Violation("structure", "root id not among nodes"))
        return out

    # cycle detection over the full edge set
    WHITE, GREY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in ids}
    for start in ids:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(graph.children(start)))]
        color[start] = GREY
        while stack:
            nid, it = stack[-1]
            advanced = False
            for e in it:
                if color[e.child] == GREY:
                    out.append(Violation("cycle", f"cycle through node {e.child}"))
                    return out
                if color[e.child] == WHITE:
                    color[e.child] = GREY
                    stack.append((e.child, iter(graph.children(e.child))))
                    advanced = True
                    break
            if not advanced:
                color[nid] = BLACK
                stack.pop()

    # reachability from the root
    seen = {graph.root}
    frontier = [graph.root]
    while frontier:
        nid = frontier.pop()
        for e in graph.children(nid):
            if e.child not in seen:
                seen.add(e.child)
                frontier.append(e.child)
    for nid in sorted(ids - seen):
        out.append(Violation("unreachable", f"node {nid} unreachable from root"))

    # arity
    for n in graph.nodes:
        deg = len(graph.children(n.id))
        if n.kind in (ADD, MUL) and deg < 1:
            out.append(Violation("arity", f"{n.kind} node {n.id} has no children"))
        elif n.kind in (POW, LOG) and deg != 1:
            out.append(Violation("arity", f"{n.kind} node {n.id} has {deg} children"))
        elif n.kind in (VAR, CONST) and deg != 0:
            out.append(Violation("arity", f"leaf node {n.id} has children"))
        elif n.kind not in NODE_KINDS:
            out.append(Violation("structure", f"unknown node kind {n.kind!r}"))

    root_node = graph.node(graph.root)
    if root_node.kind != ADD:
        out.append(Violation("root-kind", f"root is {root_node.kind}, expected add"))
    else:
        if max_terms is not None and graph.term_count > max_terms:
            out.append(Violation(
                "term-count",
                f"{graph.term_count} terms exceed max_terms={max_terms}"))
        for e in graph.term_edges:
            if graph.node(e.child).kind in (POW, LOG):
                out.append(Violation(
                    "root-kind",
                    f"root child {e.child} is {graph.node(e.child).kind}; "
                    "terms must carry a coefficient edge"))

    # edge feature discipline
    for e in graph.edges:
        child = graph.node(e.child)
        parent = graph.node(e.parent)
        if child.kind == LOG:
            if not any(abs(e.feature - b) < 1e-9 for b in LOG_BASES):
                out.append(Violation(
                    "edge-feature", f"log base {e.feature} not in (10, e)"))
        elif child.kind == POW:
            pass  # exponent: any real feature is admissible
        elif parent.kind != ADD and e.feature != 1.0:
            out.append(Violation(
                "edge-feature",
                f"edge {e.parent}->{e.child} feature {e.feature} must be 1"))
    return out


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt_coef(value: float) -> str:
    return format(float(value), "#.6g")


def _fmt_exp(value: float) -> str:
    return format(float(value), "g")


def _is_log_base_10(base: float) -> bool:
    return abs(base - 10.0) < 1e-9


def _render_factor(graph: ExprGraph, edge: Edge) -> str:
    """Render one multiplicative factor (an edge out of a mul/pow/log node)."""
    child = graph.node(edge.child)
    if child.kind == POW:
        inner = graph.children(edge.child)[0]
        base = _render_operand(graph, inner)
        if edge.feature == 1.0:
            return base
        return f"{base}^{_fmt_exp(edge.feature)}"
    if child.kind == LOG:
        inner = graph.children(edge.child)[0]
        fn = "log10" if _is_log_base_10(edge.feature) else "ln"
        return f"{fn}({_render_operand(graph, inner, bare=True)})"
    return _render_operand(graph, edge)


def _render_operand(graph: ExprGraph, edge: Edge, bare: bool = False) -> str:
    child = graph.node(edge.child)
    if child.kind == POW or child.kind == LOG:
        return _render_factor(graph, edge)
    if child.kind == VAR:
        return child.name
    if child.kind == CONST:
        return "1"
    if child.kind == MUL:
        body = _render_mul(graph, edge.child)
        return body if bare else f"({body})"
    if child.kind == ADD:
        return f"({_render_add(graph, edge.child)})"
    raise ValueError(f"unrenderable node kind {child.kind}")


def _render_mul(graph: ExprGraph, nid: int) -> str:
    factors = sorted(_render_factor(graph, e) for e in graph.children(nid))
    return "*".join(factors)


def _render_add(graph: ExprGraph, nid: int) -> str:
    parts = []
    for e in graph.children(nid):
        child = graph.node(e.child)
        if child.kind in (POW, LOG):
            parts.append(_render_factor(graph, e))
        elif child.kind == CONST:
            parts.append(_fmt_exp(e.feature))
        else:
            body = _render_operand(graph, e, bare=True)
            if e.feature == 1.0:
                parts.append(body)
            elif e.feature == -1.0:
                parts.append(f"-{body}")
            else:
                parts.append(f"{_fmt_exp(e.feature)}*{body}")
    return " + ".join(sorted(parts))


def _term_body(graph: ExprGraph, edge: Edge) -> str:
    child = graph.node(edge.child)
    if child.kind == CONST:
        return ""
    if child.kind == MUL:
        return _render_mul(graph, edge.child)
    return _render_operand(graph, edge, bare=True)


def _term_profile(graph: ExprGraph, edge: Edge):
    """(kind rank, variable names, exponents) used as the canonical sort key."""
    child = graph.node(edge.child)
    if child.kind == CONST:
        return 0, (), ()
    names: list[str] = []
    exponents: list[float] = []
    has_log = False
    has_rational = False
    stack = [edge]
    while stack:
        e = stack.pop()
        node = graph.node(e.child)
        if node.kind == VAR:
            names.append(node.name)
        elif node.kind == POW:
            exponents.append(e.feature)
            if e.feature < 0:
                has_rational = True
        elif node.kind == LOG:
            has_log = True
        elif node.kind == ADD and e.child != graph.root:
            has_rational = True
        stack.extend(graph.children(e.child))
    if has_rational:
        rank = 3
    elif has_log:
        rank = 2
    else:
        rank = 1
    return rank, tuple(sorted(names)), tuple(sorted(exponents))


def render(graph: ExprGraph) -> str:
    """Canonical infix form: deterministic term order, 6-significant-digit
    coefficients, identical strings for structurally equal graphs."""
    entries = []
    for e in graph.term_edges:
        body = _term_body(graph, e)
        rank, names, exps = _term_profile(graph, e)
        text = _fmt_coef(e.feature) if not body else f"{_fmt_coef(e.feature)}*{body}"
        entries.append(((rank, names, exps, body, e.feature), text))
    entries.sort(key=lambda item: item[0])
    return " + ".join(text for _, text in entries)


# ---------------------------------------------------------------------------
# graph surgery (terms as units)
# ---------------------------------------------------------------------------

def extract_term(graph: ExprGraph, index: int) -> tuple[TermFragment, float]:
    """Copy root term ``index`` out as a standalone fragment plus its coefficient."""
    edge = graph.term_edges[index]
    keep = set()
    frontier = [edge.child]
    while frontier:
        nid = frontier.pop()
        if nid in keep:
            continue
        keep.add(nid)
        frontier.extend(e.child for e in graph.children(nid))
    nodes = [n for n in graph.nodes if n.id in keep]
    edges = [e for e in graph.edges if e.parent in keep and e.child in keep]
    return TermFragment(nodes, edges, edge.child), edge.feature


def from_terms(terms: list[tuple[TermFragment, float]]) -> ExprGraph:
    """Assemble a graph from (fragment, coefficient) term pairs."""
    builder = GraphBuilder()
    root = builder.node(ADD)
    for fragment, coef in terms:
        head = builder.attach(fragment)
        builder.edge(root, head, coef)
    return builder.build(root)


def graph_terms(graph: ExprGraph) -> list[tuple[TermFragment, float]]:
    return [extract_term(graph, i) for i in range(graph.term_count)]


def replace_term(graph: ExprGraph, index: int, fragment: TermFragment,
                 coef: float = 1.0) -> ExprGraph:
    terms = graph_terms(graph)
    terms[index] = (fragment, coef)
    return from_terms(terms)


def add_term(graph: ExprGraph, fragment: TermFragment, coef: float = 1.0) -> ExprGraph:
    return from_terms(graph_terms(graph) + [(fragment, coef)])


def remove_term(graph: ExprGraph, index: int) -> ExprGraph:
    terms = graph_terms(graph)
    del terms[index]
    return from_terms(terms)


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------

def _positive(alphabet) -> list[int]:
    return [a for a in alphabet if a > 0]


def _pow_var(b: GraphBuilder, parent: int, name: str, exponent: float) -> None:
    p = b.node(POW)
    v = b.node(VAR, name)
    b.edge(parent, p, exponent)
    b.edge(p, v, 1.0)


def _power_product(b: GraphBuilder, names, exponents) -> int:
    head = b.node(MUL)
    for name, exp in zip(names, exponents):
        _pow_var(b, head, name, exp)
    return head


def sample_template(kind: str, variables, rng, alphabet=DEFAULT_ALPHABET) -> TermFragment:
    """Draw one term subgraph of the requested archetype.

    The produced fragment always validates once attached under an additive
    root; exponents come from ``alphabet`` and log bases from (10, e).
    """
    variables = list(variables)
    if not variables:
        raise ValueError("sample_template needs at least one variable")
    alphabet = list(alphabet)
    b = GraphBuilder()

    if kind == CONST_TERM:
        return b.fragment(b.node(CONST))

    if kind == POLY_TERM:
        k = int(rng.integers(1, min(3, len(variables)) + 1))
        picks = rng.choice(len(variables), size=k, replace=False)
        names = [variables[i] for i in picks]
        exps = [alphabet[int(rng.integers(len(alphabet)))] for _ in names]
        return b.fragment(_power_product(b, names, exps))

    if kind == LOG_TERM:
        base = LOG_BASES[int(rng.integers(2))]
        k = int(rng.integers(1, min(2, len(variables)) + 1))
        picks = rng.choice(len(variables), size=k, replace=False)
        pos = _positive(alphabet)
        names = [variables[i] for i in picks]
        exps = [pos[int(rng.integers(len(pos)))] for _ in names]
        head = b.node(MUL)
        log_node = b.node(LOG)
        b.edge(head, log_node, base)
        arg = _power_product(b, names, exps)
        b.edge(log_node, arg, 1.0)
        return b.fragment(head)

    if kind == RATIONAL_TERM:
        pos = _positive(alphabet)
        head = b.node(MUL)
        # numerator: 0..2 positive power factors
        n_num = int(rng.integers(0, 3))
        if n_num:
            picks = rng.choice(len(variables), size=min(n_num, len(variables)),
                               replace=False)
            for i in picks:
                _pow_var(b, head, variables[i],
                         pos[int(rng.integers(len(pos)))])
        # denominator: 1..2 unit-coefficient power-product summands,
        # optionally plus a +-1 constant
        denom = b.node(ADD)
        n_sum = int(rng.integers(1, 3))
        for s in range(n_sum):
            k = int(rng.integers(1, min(2, len(variables)) + 1))
            picks = rng.choice(len(variables), size=k, replace=False)
            names = [variables[i] for i in picks]
            exps = [pos[int(rng.integers(len(pos)))] for _ in names]
            summand = _power_product(b, names, exps)
            sign = 1.0 if s == 0 or rng.random() < 0.75 else -1.0
            b.edge(denom, summand, sign)
        if rng.random() < 0.3:
            c = b.node(CONST)
            b.edge(denom, c, 1.0 if rng.random() < 0.5 else -1.0)
        recip = b.node(POW)
        b.edge(head, recip, -1.0)
        b.edge(recip, denom, 1.0)
        # optional extra reciprocal factor multiplying the denominator
        if rng.random() < 0.25:
            i = int(rng.integers(len(variables)))
            _pow_var(b, head, variables[i], -1.0)
        return b.fragment(head)

    raise ValueError(f"unknown template kind {kind!r}")
