"""Built-in catalog of small binary DAG models.

Node 0 is the hidden node and a parent of every observable node; the
observable nodes are 1..A.  Ids follow the ``A-Bx`` naming (A observables,
B edges among observables, x a distinguishing letter).

Which edge sets are fixed by the identification arguments and which are
reconstructions is recorded per entry in :data:`PROVENANCE`.  The label
assignments were chosen so that each Markov equivalent pair of one row is
equivalent on *fixed* node labels, except 4-2b/4-2c which need the
relabeling in :data:`RELABELINGS`.
"""
from dataclasses import dataclass

from .model import Model, validate_model

INFINITE = "inf"


def _latent(num_observed, observable_edges, name, n=2, hidden_states=None):
    nodes = list(range(num_observed + 1))
    edges = [(0, v) for v in nodes[1:]] + list(observable_edges)
    sizes = {v: n for v in nodes}
    if hidden_states is not None:
        sizes[0] = hidden_states
    return validate_model(
        {"nodes": nodes, "edges": edges, "state_sizes": sizes, "hidden": [0]}, name=name
    )


_EDGES = {
    "2-0": (2, []),
    "2-1": (2, [(1, 2)]),
    "3-0": (3, []),
    "3-1": (3, [(1, 2)]),
    "4-0": (4, []),
    "4-1": (4, [(1, 2)]),
    "4-2a": (4, [(1, 2), (3, 4)]),
    "4-2b": (4, [(1, 2), (2, 3)]),
    "4-2c": (4, [(1, 2), (1, 3)]),
    "4-2d": (4, [(1, 3), (2, 3)]),
    "4-3a": (4, [(1, 3), (2, 1), (3, 4)]),
    "4-3b": (4, [(1, 2), (1, 3), (3, 4)]),
    "4-3c": (4, [(1, 2), (2, 3), (4, 3)]),
    "4-3d": (4, [(2, 1), (2, 3), (4, 3)]),
    "4-3e": (4, [(1, 2), (1, 3), (1, 4)]),
    "4-3f": (4, [(1, 3), (1, 4), (2, 1)]),
    "4-3g": (4, [(1, 2), (1, 3), (2, 3)]),
    "4-3h": (4, [(1, 4), (2, 4), (4, 3)]),
    "4-3i": (4, [(1, 4), (2, 4), (3, 4)]),
    "4-4": (4, [(1, 2), (1, 3), (2, 3), (3, 4)]),
}

PROVENANCE = {
    "2-0": "representative of the 2-B family (B=0)",
    "2-1": "representative of the 2-B family (B=1)",
    "3-0": "forced: no observable edges",
    "3-1": "representative of the 3-Bx family (B=1)",
    "4-0": "forced: no observable edges",
    "4-1": "forced: 2 is a sink child of 1; marginalizing 2 leaves a 3-0 model",
    "4-2a": "forced: amalgamating {1,2} and {3,4} gives two conditionally independent variables",
    "4-2b": "forced: chain 1->2->3 (causal effect of 1 on 2 adjusts only for 0)",
    "4-2c": "forced: M2, M3 condition on (X0, X1); M1, M4 only on X0",
    "4-2d": "forced: 3 is the sink with two observable parents",
    "4-3a": "reconstruction: 4-3b with covered edge 1->2 reversed",
    "4-3b": "forced: M2, M3 condition on (X0, X1), M4 on (X0, X3)",
    "4-3c": "reconstruction: path with one collider, dimension 17",
    "4-3d": "reconstruction: 4-3c with covered edge 1->2 reversed",
    "4-3e": "forced: conditioning on X1 leaves a 3-0 model on X2, X3, X4",
    "4-3f": "reconstruction: 4-3e with covered edge 1->2 reversed",
    "4-3g": "reconstruction: transitive triangle on 1, 2, 3 (dimension 17)",
    "4-3h": "reconstruction: collider 1->4<-2 plus 4->3 (dimension 17; printed value 25)",
    "4-3i": "reconstruction: three-parent collider at 4 (dimension 23; printed value 25)",
    "4-4": "representative of the 4-Bx family (B=4, minimal dimension 19)",
}

#: node renamings needed before two catalog DAGs are equivalent on fixed labels
RELABELINGS = {
    ("4-2b", "4-2c"): {1: 2, 2: 1},
    ("4-2c", "4-2b"): {1: 2, 2: 1},
}


@dataclass(frozen=True)
class TableRow:
    """One row of the published table of small binary models."""

    label: str
    members: tuple
    dim_printed: str
    obs_dim: int
    k: object


TABLE = (
    TableRow("2-B", ("2-0", "2-1"), ">=5", 3, INFINITE),
    TableRow("3-0", ("3-0",), "7", 7, 2),
    TableRow("3-Bx", ("3-1",), ">=9", 7, INFINITE),
    TableRow("4-0", ("4-0",), "9", 15, 2),
    TableRow("4-1", ("4-1",), "11", 15, 2),
    TableRow("4-2a", ("4-2a",), "13", 15, INFINITE),
    TableRow("4-2b,c", ("4-2b", "4-2c"), "13", 15, 2),
    TableRow("4-2d", ("4-2d",), "15", 15, 2),
    TableRow("4-3a,b", ("4-3a", "4-3b"), "15", 15, 2),
    TableRow("4-3c,d", ("4-3c", "4-3d"), "17", 15, INFINITE),
    TableRow("4-3e,f", ("4-3e", "4-3f"), "15", 15, 4),
    TableRow("4-3g", ("4-3g",), "17", 15, INFINITE),
    TableRow("4-3h", ("4-3h",), "25", 15, INFINITE),
    TableRow("4-3i", ("4-3i",), "25", 15, INFINITE),
    TableRow("4-Bx", ("4-4",), ">=19", 15, INFINITE),
)


def catalog_ids():
    return tuple(_EDGES)


def get_model(model_id, n=2, hidden_states=None):
    """Catalog model by id; ``n`` sets every state size, ``hidden_states`` overrides X0's."""
    try:
        num_observed, edges = _EDGES[model_id]
    except KeyError:
        raise KeyError(f"unknown catalog model {model_id!r}; known: {', '.join(_EDGES)}") from None
    return _latent(num_observed, edges, model_id, n=n, hidden_states=hidden_states)


def generic_k(model_id):
    for row in TABLE:
        if model_id in row.members:
            return row.k
    raise KeyError(model_id)
