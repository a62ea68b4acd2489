"""Causal DAGs with explicit latent nodes and the graph queries of the pipeline.

A ``Dag`` is immutable once built.  Queries cover d-separation (implemented as
linear-time ball-bouncing reachability), the missing-at-random check for a
(value, indicator) node pair, and the identifiability condition that forbids
latent-touching paths between a treatment and any of its children.

Graphs can be declared in a plain-text format, one declaration per line::

    # lines starting with '#' are comments
    node U latent
    node X observed
    edge U X

Two graphs ship with the package: the four-node mediation structure with a
latent confounder (``frontdoor_dag``) and its study-design expansion with
measurement copies, missingness indicators and sampling indicators
(``frontdoor_design_dag``).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import (
    CycleDetected,
    DuplicateEdge,
    GraphFormatError,
    NodeNotObserved,
    OverlappingSets,
    UnknownNode,
)


class NodeKind(Enum):
    OBSERVED = "observed"
    LATENT = "latent"


@dataclass(frozen=True)
class Node:
    name: str
    kind: NodeKind


class Dag:
    """Directed acyclic graph over named nodes tagged observed or latent.

    Use :func:`build_dag` or :func:`dag_from_text` to construct; both validate
    node references, duplicate edges and acyclicity.  Instances are immutable
    and safe to query concurrently.
    """

    __slots__ = ("_nodes", "_parents", "_children")

    def __init__(self, nodes: dict[str, Node], edges: Iterable[tuple[str, str]]):
        self._nodes = dict(nodes)
        self._parents: dict[str, frozenset[str]] = {}
        self._children: dict[str, frozenset[str]] = {}
        parents = {name: set() for name in self._nodes}
        children = {name: set() for name in self._nodes}
        for parent, child in edges:
            parents[child].add(parent)
            children[parent].add(child)
        for name in self._nodes:
            self._parents[name] = frozenset(parents[name])
            self._children[name] = frozenset(children[name])

    @property
    def node_names(self) -> frozenset[str]:
        return frozenset(self._nodes)

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return frozenset(
            (p, c) for c in self._nodes for p in self._parents[c]
        )

    def node(self, name: str) -> Node:
        self._require(name)
        return self._nodes[name]

    def is_latent(self, name: str) -> bool:
        return self.node(name).kind is NodeKind.LATENT

    def parents(self, name: str) -> frozenset[str]:
        self._require(name)
        return self._parents[name]

    def children(self, name: str) -> frozenset[str]:
        self._require(name)
        return self._children[name]

    def _require(self, name: str) -> None:
        if name not in self._nodes:
            raise UnknownNode(f"unknown node: {name!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._nodes == other._nodes and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Dag(nodes={sorted(self._nodes)}, edges={sorted(self.edges)})"


def build_dag(
    nodes: Sequence[tuple[str, NodeKind | str]],
    edges: Sequence[tuple[str, str]],
) -> Dag:
    """Validate and build a :class:`Dag`.

    ``nodes`` is a list of (name, kind) pairs where kind is a
    :class:`NodeKind` or one of the strings ``"observed"`` / ``"latent"``.
    Raises :class:`UnknownNode`, :class:`DuplicateEdge` or
    :class:`CycleDetected` on invalid input.
    """
    table: dict[str, Node] = {}
    for name, kind in nodes:
        if not name:
            raise GraphFormatError("node names must be nonempty")
        if name in table:
            raise GraphFormatError(f"node declared twice: {name!r}")
        kind = NodeKind(kind) if not isinstance(kind, NodeKind) else kind
        table[name] = Node(name, kind)

    seen: set[tuple[str, str]] = set()
    for parent, child in edges:
        if parent not in table:
            raise UnknownNode(f"edge endpoint not declared: {parent!r}")
        if child not in table:
            raise UnknownNode(f"edge endpoint not declared: {child!r}")
        if parent == child:
            raise CycleDetected([parent, child])
        if (parent, child) in seen:
            raise DuplicateEdge(f"duplicate edge: {parent} -> {child}")
        seen.add((parent, child))

    cycle = _find_cycle(table, seen)
    if cycle is not None:
        raise CycleDetected(cycle)
    return Dag(table, seen)


def _find_cycle(nodes: dict[str, Node], edges: set[tuple[str, str]]):
    """Return one directed cycle as a node list, or None if acyclic."""
    children: dict[str, list[str]] = {n: [] for n in nodes}
    for p, c in edges:
        children[p].append(c)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    trail: list[str] = []

    def visit(start: str):
        stack = [(start, iter(sorted(children[start])))]
        color[start] = GREY
        trail.append(start)
        while stack:
            node, it = stack[-1]
            advanced = False
            for child in it:
                if color[child] == GREY:
                    i = trail.index(child)
                    return trail[i:] + [child]
                if color[child] == WHITE:
                    color[child] = GREY
                    trail.append(child)
                    stack.append((child, iter(sorted(children[child]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                trail.pop()
                stack.pop()
        return None

    for name in sorted(nodes):
        if color[name] == WHITE:
            found = visit(name)
            if found is not None:
                return found
    return None


# ------------------------------------------------------------- separation


def _as_name_set(g: Dag, nodes: Iterable[str], label: str) -> frozenset[str]:
    out = frozenset(nodes)
    for name in out:
        if name not in g.node_names:
            raise UnknownNode(f"unknown node in {label}: {name!r}")
    return out


def d_separated(
    g: Dag,
    a: Iterable[str],
    b: Iterable[str],
    c: Iterable[str] = (),
) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked given ``c``.

    Blocking follows the standard rules: a chain or fork is blocked when its
    middle node is in ``c``; a collider is blocked unless it or one of its
    descendants is in ``c``.  Computed by reachability over (node, direction)
    states rather than path enumeration, so each query is linear in the size
    of the graph.
    """
    set_a = _as_name_set(g, a, "first set")
    set_b = _as_name_set(g, b, "second set")
    set_c = _as_name_set(g, c, "conditioning set")
    if set_a & set_b or set_a & set_c or set_b & set_c:
        raise OverlappingSets("query sets must be pairwise disjoint")
    if not set_a or not set_b:
        return True
    reachable = _reachable(g, set_a, set_c)
    return not (reachable & set_b)


def _reachable(g: Dag, sources: frozenset[str], given: frozenset[str]) -> set[str]:
    """Nodes connected to ``sources`` by at least one active trail."""
    # Ancestral closure of the conditioning set: these nodes open colliders.
    anc = set(given)
    queue = deque(given)
    while queue:
        node = queue.popleft()
        for parent in g.parents(node):
            if parent not in anc:
                anc.add(parent)
                queue.append(parent)

    UP, DOWN = 0, 1  # UP: arrived from a child; DOWN: arrived from a parent
    visited: set[tuple[str, int]] = set()
    reached: set[str] = set()
    frontier = deque((s, UP) for s in sources)
    while frontier:
        node, direction = frontier.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in given:
            reached.add(node)
        if direction == UP and node not in given:
            for parent in g.parents(node):
                frontier.append((parent, UP))
            for child in g.children(node):
                frontier.append((child, DOWN))
        elif direction == DOWN:
            if node not in given:
                for child in g.children(node):
                    frontier.append((child, DOWN))
            if node in anc:  # collider at node is open
                for parent in g.parents(node):
                    frontier.append((parent, UP))
    return reached


def mar_holds(
    g: Dag,
    value_node: str,
    indicator_node: str,
    given: Iterable[str] = (),
) -> bool:
    """Certify the missing-at-random condition for one (value, indicator) pair.

    True iff the indicator is d-separated from the underlying value given the
    conditioning set, i.e. missingness is independent of the missing value.
    """
    return d_separated(g, {indicator_node}, {value_node}, given)


def bidirected_path_exists(g: Dag, a: str, b: str) -> bool:
    """True iff some path between ``a`` and ``b`` uses only latent-touching edges.

    An edge qualifies when at least one endpoint is a latent node; the path is
    read ignoring edge direction.  Both query nodes must be observed.
    """
    for name in (a, b):
        if g.is_latent(name):
            raise NodeNotObserved(f"query node must be observed: {name!r}")
    if a == b:
        return False
    return _latent_edge_reachable(g, a, b)


def _latent_edge_reachable(g: Dag, a: str, b: str) -> bool:
    adjacency: dict[str, set[str]] = {n: set() for n in g.node_names}
    for parent, child in g.edges:
        if g.is_latent(parent) or g.is_latent(child):
            adjacency[parent].add(child)
            adjacency[child].add(parent)
    seen = {a}
    queue = deque([a])
    while queue:
        node = queue.popleft()
        for neighbour in adjacency[node]:
            if neighbour == b:
                return True
            if neighbour not in seen:
                seen.add(neighbour)
                queue.append(neighbour)
    return False


def frontdoor_identifiable(g: Dag, x: str) -> bool:
    """True iff no child of ``x`` is reachable from it through latent-touching edges.

    This is the child criterion for identifying the causal effect of ``x``
    by frontdoor-style adjustment; a node with no children passes vacuously.
    """
    if g.is_latent(x):
        raise NodeNotObserved(f"treatment node must be observed: {x!r}")
    for child in g.children(x):
        if g.is_latent(child):
            return False  # the x -> child edge itself touches a latent node
        if _latent_edge_reachable(g, x, child):
            return False
    return True


# ------------------------------------------------------------- text format


def dag_from_text(text: str) -> Dag:
    """Parse the plain-text graph format (``node``/``edge`` declarations)."""
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "node" and len(parts) == 3 and parts[2] in ("observed", "latent"):
            nodes.append((parts[1], parts[2]))
        elif parts[0] == "edge" and len(parts) == 3:
            edges.append((parts[1], parts[2]))
        else:
            raise GraphFormatError(f"line {lineno}: cannot parse {raw!r}")
    return build_dag(nodes, edges)


def dag_to_text(g: Dag) -> str:
    lines = [
        f"node {name} {g.node(name).kind.value}" for name in sorted(g.node_names)
    ]
    lines += [f"edge {p} {c}" for p, c in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def load_graph(path) -> Dag:
    with open(path, "r", encoding="utf-8") as handle:
        return dag_from_text(handle.read())


# ------------------------------------------------------------- built-ins


def frontdoor_dag() -> Dag:
    """Mediation structure with a latent confounder of treatment and outcome."""
    return build_dag(
        nodes=[("U", "latent"), ("X", "observed"), ("Z", "observed"), ("Y", "observed")],
        edges=[("U", "X"), ("U", "Y"), ("X", "Z"), ("Z", "Y")],
    )


def frontdoor_design_dag() -> Dag:
    """Study-design expansion of :func:`frontdoor_dag`.

    Underlying variables are latent; their recorded copies (``X*``, ``Z*``,
    ``Y*``), the missingness indicators (``M_X``, ``M_Z``) and the sampling
    indicators (``m_1``, ``m_Omega``) are observed.  Each indicator masks the
    recorded copy of its variable, and both missingness indicators are driven
    by the outcome.
    """
    return build_dag(
        nodes=[
            ("U", "latent"),
            ("X", "latent"),
            ("Z", "latent"),
            ("Y", "latent"),
            ("X*", "observed"),
            ("Z*", "observed"),
            ("Y*", "observed"),
            ("M_X", "observed"),
            ("M_Z", "observed"),
            ("m_1", "observed"),
            ("m_Omega", "observed"),
        ],
        edges=[
            ("U", "X"),
            ("U", "Y"),
            ("X", "Z"),
            ("Z", "Y"),
            ("X", "X*"),
            ("Z", "Z*"),
            ("Y", "Y*"),
            ("Y", "M_X"),
            ("Y", "M_Z"),
            ("M_X", "X*"),
            ("M_Z", "Z*"),
            ("m_Omega", "m_1"),
            ("m_1", "X*"),
            ("m_1", "Z*"),
            ("m_1", "Y*"),
        ],
    )
