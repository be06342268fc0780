"""DAG models with finite state spaces and their parameter sets.

Conventions used everywhere in the package:

* nodes are non-negative integers, kept in ascending order;
* the rows of a node's CPT enumerate joint parent states lexicographically,
  parents sorted by node id with the smallest id varying slowest;
* states are 1-based at every public boundary (JSON, CLI, ``row_index``),
  0-based inside arrays.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import prod

import numpy as np

from .errors import ModelError
from .scalar import FLOAT, RATIONAL, as_array, mode_of, parse_array, serialize_array


@dataclass(frozen=True)
class Model:
    nodes: tuple
    edges: tuple
    state_sizes: dict
    hidden: frozenset = frozenset()
    name: str = field(default=None, compare=False)

    def __hash__(self):
        return hash((self.nodes, self.edges, tuple(sorted(self.state_sizes.items())), self.hidden))

    def __repr__(self):
        label = f"{self.name}: " if self.name else ""
        arcs = ", ".join(f"{a}->{b}" for a, b in self.edges)
        return f"Model({label}{arcs}; hidden={sorted(self.hidden)})"

    @property
    def observed(self):
        return tuple(v for v in self.nodes if v not in self.hidden)

    @property
    def hidden_node(self):
        if len(self.hidden) != 1:
            raise ModelError(f"expected exactly one hidden node, got {sorted(self.hidden)}")
        return next(iter(self.hidden))

    def parents(self, v):
        return tuple(sorted(a for a, b in self.edges if b == v))

    def children(self, v):
        return tuple(sorted(b for a, b in self.edges if a == v))

    def n(self, v):
        return self.state_sizes[v]

    def cpt_shape(self, v):
        return (prod(self.n(w) for w in self.parents(v)), self.n(v))

    def topological_order(self):
        return _topological_order(self.nodes, self.edges)

    def with_edges(self, edges, name=None):
        return Model(self.nodes, tuple(sorted(edges)), self.state_sizes, self.hidden, name)

    def to_json(self):
        return {
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "state_sizes": {str(v): self.n(v) for v in self.nodes},
            "hidden": sorted(self.hidden),
        }


def _topological_order(nodes, edges):
    indeg = {v: 0 for v in nodes}
    for _, b in edges:
        indeg[b] += 1
    ready = sorted(v for v in nodes if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for a, b in edges:
            if a == v:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
        ready.sort()
    if len(order) != len(nodes):
        return None
    return tuple(order)


def validate_model(spec, name=None):
    """Build a :class:`Model` from a JSON-like description.

    Every violated invariant is collected and reported together.
    """
    problems = []
    try:
        nodes = sorted(int(v) for v in spec["nodes"])
        edges = sorted((int(a), int(b)) for a, b in spec.get("edges", []))
        sizes = {int(k): int(s) for k, s in spec.get("state_sizes", {}).items()}
        hidden = frozenset(int(v) for v in spec.get("hidden", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model description: {exc}") from exc
    node_set = set(nodes)
    if len(node_set) != len(nodes):
        problems.append("duplicate node ids")
    if any(v < 0 for v in nodes):
        problems.append("node ids must be non-negative")
    for a, b in edges:
        for v in (a, b):
            if v not in node_set:
                problems.append(f"unknown node {v} in edge {a}->{b}")
        if a == b:
            problems.append(f"self loop at {a}")
    if len(set(edges)) != len(edges):
        problems.append("duplicate edges")
    for v in sorted(hidden - node_set):
        problems.append(f"unknown hidden node {v}")
    for v in nodes:
        if v not in sizes:
            problems.append(f"missing state size for node {v}")
        elif sizes[v] < 2:
            problems.append(f"state size of node {v} is {sizes[v]} < 2")
    for v in sorted(set(sizes) - node_set):
        problems.append(f"state size given for unknown node {v}")
    if not problems and _topological_order(nodes, edges) is None:
        problems.append("cycle detected")
    if problems:
        raise ModelError(problems)
    return Model(tuple(nodes), tuple(edges), {v: sizes[v] for v in nodes}, hidden, name)


def parameter_dimension(model):
    return sum(
        (model.n(v) - 1) * prod(model.n(w) for w in model.parents(v)) for v in model.nodes
    )


def row_index(parent_states, parent_order, sizes):
    """1-based CPT row for 1-based parent states.

    ``parent_order`` lists the parents; they are sorted by id so the
    smallest id is the most significant digit.
    """
    order = sorted(parent_order)
    idx = 0
    for w in order:
        s = parent_states[w]
        if not 1 <= s <= sizes[w]:
            raise ValueError(f"state {s} out of range 1..{sizes[w]} for node {w}")
        idx = idx * sizes[w] + (s - 1)
    return idx + 1


def row_states(row, parent_order, sizes):
    """Inverse of :func:`row_index`."""
    order = sorted(parent_order)
    total = prod(sizes[w] for w in order)
    if not 1 <= row <= total:
        raise ValueError(f"row {row} out of range 1..{total}")
    rem = row - 1
    states = {}
    for w in reversed(order):
        rem, s = divmod(rem, sizes[w])
        states[w] = s + 1
    return {w: states[w] for w in order}


@dataclass(frozen=True)
class ParameterSet:
    """One CPT per node, each a 2-d array (parent rows x own states)."""

    cpts: dict

    def __post_init__(self):
        for arr in self.cpts.values():
            arr.flags.writeable = False

    def __getitem__(self, v):
        return self.cpts[v]

    @property
    def mode(self):
        return mode_of(next(iter(self.cpts.values())))

    def to_float(self):
        return ParameterSet({v: np.asarray(c, dtype=float) for v, c in self.cpts.items()})

    def to_json(self):
        return {str(v): serialize_array(self.cpts[v]) for v in sorted(self.cpts)}

    def flat(self):
        """All entries concatenated in node order."""
        return np.concatenate([np.asarray(self.cpts[v]).ravel() for v in sorted(self.cpts)])


def make_parameters(model, cpts, mode=None):
    """Wrap raw tables as a :class:`ParameterSet` after validating them."""
    tables = {}
    for v in model.nodes:
        if v not in cpts and str(v) not in cpts:
            raise ModelError(f"missing CPT for node {v}")
        raw = cpts[v] if v in cpts else cpts[str(v)]
        arr = parse_array(raw) if mode is None else as_array(raw, mode)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        tables[v] = arr
    modes = {mode_of(a) for a in tables.values()}
    if len(modes) > 1:
        # rational tables mixed with float tables: the computation is float
        tables = {v: np.asarray(a, dtype=float) for v, a in tables.items()}
    theta = ParameterSet(tables)
    validate_parameters(model, theta)
    return theta


def validate_parameters(model, theta, tol=1e-12):
    problems = []
    for v in model.nodes:
        if v not in theta.cpts:
            problems.append(f"missing CPT for node {v}")
            continue
        arr = np.asarray(theta[v])
        if arr.shape != model.cpt_shape(v):
            problems.append(f"CPT of node {v} has shape {arr.shape}, expected {model.cpt_shape(v)}")
            continue
        exact = arr.dtype == object
        lo = 0 if exact else -tol
        hi = 1 if exact else 1 + tol
        if any(x < lo or x > hi for x in arr.flat):
            problems.append(f"CPT of node {v} has entries outside [0, 1]")
        for r, s in enumerate(arr.sum(axis=1)):
            if (s != 1) if exact else abs(s - 1) > tol:
                problems.append(f"row {r + 1} of CPT of node {v} sums to {s}")
    if problems:
        raise ModelError(problems)
    return theta


def cpt_array(model, theta, v):
    """CPT of ``v`` reshaped to axes (sorted parents..., v)."""
    shape = tuple(model.n(w) for w in model.parents(v)) + (model.n(v),)
    return np.asarray(theta[v]).reshape(shape)


def sample_generic_parameters(model, seed, mode=FLOAT, max_denominator=1000):
    """Uniform draws on each row simplex (normalized exponentials).

    Rational mode rounds each draw to a fraction with bounded denominator
    and fixes the row sum exactly; entries stay strictly positive.
    """
    rng = np.random.default_rng(seed)
    cpts = {}
    for v in model.nodes:
        rows, cols = model.cpt_shape(v)
        draw = rng.standard_exponential((rows, cols))
        draw /= draw.sum(axis=1, keepdims=True)
        if mode == RATIONAL:
            draw = _rational_rows(draw, max_denominator)
        cpts[v] = draw
    return ParameterSet(cpts)


def _rational_rows(draw, max_denominator):
    out = np.empty(draw.shape, dtype=object)
    floor = Fraction(1, max_denominator)
    for r in range(draw.shape[0]):
        head = [max(Fraction(x).limit_denominator(max_denominator), floor) for x in draw[r, :-1]]
        last = 1 - sum(head)
        while last <= 0:
            # rounding pushed the row over 1: shave the largest entry
            k = max(range(len(head)), key=lambda i: head[i])
            head[k] = head[k] / 2
            last = 1 - sum(head)
        out[r] = head + [last]
    return out


def uniform_parameters(model, mode=RATIONAL):
    cpts = {}
    for v in model.nodes:
        rows, cols = model.cpt_shape(v)
        cpts[v] = as_array([[Fraction(1, cols)] * cols for _ in range(rows)], mode) \
            if mode == RATIONAL else np.full((rows, cols), 1.0 / cols)
    return ParameterSet(cpts)


def relabel(model, theta, mapping):
    """Rename nodes by ``mapping`` (a permutation of node ids).

    CPT rows are re-laid out because parent order is by id.
    """
    full = {v: mapping.get(v, v) for v in model.nodes}
    if sorted(full.values()) != list(model.nodes):
        raise ModelError("relabeling must permute the model's node ids")
    new_edges = tuple(sorted((full[a], full[b]) for a, b in model.edges))
    new_model = Model(
        model.nodes,
        new_edges,
        {full[v]: model.n(v) for v in model.nodes},
        frozenset(full[v] for v in model.hidden),
    )
    if theta is None:
        return new_model, None
    cpts = {}
    for v in model.nodes:
        arr = cpt_array(model, theta, v)
        old_axes = [full[w] for w in model.parents(v)] + [full[v]]
        new_axes = sorted(old_axes[:-1]) + [full[v]]
        arr = np.transpose(arr, [old_axes.index(a) for a in new_axes])
        cpts[full[v]] = np.ascontiguousarray(arr).reshape(new_model.cpt_shape(full[v]))
    return new_model, ParameterSet(cpts)


def model_from_json(doc, name=None):
    return validate_model(doc, name=name)


def parameters_from_json(model, doc, mode=None):
    return make_parameters(model, {int(k): v for k, v in doc.items()}, mode)


def all_states(sizes):
    """Iterate 0-based joint states in lexicographic order."""
    return product(*(range(n) for n in sizes))
