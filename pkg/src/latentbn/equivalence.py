"""Covered-edge reversal and parameter transfer between Markov equivalent DAGs."""
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ModelError
from .model import Model, ParameterSet, cpt_array, relabel

MAX_NODES = 6
#: float-mode entries must exceed this to count as strictly positive
POSITIVITY_TOL = 1e-12


@dataclass
class TransferResult:
    target_dag: Model
    target_params: ParameterSet
    applied_reversals: list = field(default_factory=list)
    domain_ok: bool = True
    witness: str = None
    relabeling: dict = None


def covered_edges(model):
    """Edges i -> j with pa(j) = pa(i) + {i}."""
    return [
        (i, j) for i, j in model.edges
        if set(model.parents(j)) == set(model.parents(i)) | {i}
    ]


def _positive(arr):
    if arr.dtype == object:
        return all(x > 0 for x in arr.flat)
    return bool(np.all(arr > POSITIVITY_TOL))


def _to_axes(arr, axes, target):
    return np.transpose(arr, [axes.index(a) for a in target])


def reverse_covered_edge(model, theta, edge):
    """Reverse covered edge i -> j and transfer the parameters.

    With W = pa(i), computes P(Xi, Xj | W), then P(Xj | W) and
    P(Xi | Xj, W); all other CPTs are unchanged.  Parameters outside the
    strictly positive domain give ``domain_ok=False`` and no parameters.
    """
    i, j = edge
    if (i, j) not in model.edges:
        raise ModelError(f"{i}->{j} is not an edge")
    if (i, j) not in covered_edges(model):
        raise ModelError(f"edge {i}->{j} is not covered")
    target = model.with_edges([e for e in model.edges if e != (i, j)] + [(j, i)])
    w = list(model.parents(i))
    pi = cpt_array(model, theta, i)  # axes w..., i
    pj = cpt_array(model, theta, j)  # axes sorted(w + [i])..., j
    if not _positive(pi) or not _positive(pj):
        which = i if not _positive(pi) else j
        return TransferResult(
            target, None, [(i, j)], False,
            f"CPT of node {which} is not strictly positive; reversal of {i}->{j} undefined",
        )
    pj_axes = list(model.parents(j)) + [j]
    pj = _to_axes(pj, pj_axes, w + [i, j])
    joint = pi[..., None] * pj  # P(Xi, Xj | W), axes w..., i, j
    marg_j = joint.sum(axis=len(w))  # axes w..., j
    cond_i = joint / marg_j[..., None, :]  # P(Xi | Xj, W), axes w..., i, j
    new_i_axes = sorted(w + [j]) + [i]
    cond_i = _to_axes(cond_i, w + [i, j], new_i_axes)
    cpts = dict(theta.cpts)
    cpts[j] = np.ascontiguousarray(marg_j).reshape(target.cpt_shape(j))
    cpts[i] = np.ascontiguousarray(cond_i).reshape(target.cpt_shape(i))
    return TransferResult(target, ParameterSet(cpts), [(i, j)], True)


def _neighbors(model):
    for e in sorted(covered_edges(model)):
        i, j = e
        yield e, model.with_edges([x for x in model.edges if x != e] + [(j, i)])


def _check_size(model):
    if len(model.nodes) > MAX_NODES:
        raise ModelError(f"equivalence search limited to {MAX_NODES} nodes, model has {len(model.nodes)}")


def markov_equivalence_class(model, order=sorted):
    """All DAGs on the same labels reachable by covered-edge reversals.

    ``order`` arranges each node's outgoing reversals; the resulting set
    does not depend on it.
    """
    _check_size(model)
    seen = {model.edges: model}
    queue = deque([model])
    while queue:
        cur = queue.popleft()
        for _, nxt in order(list(_neighbors(cur))):
            if nxt.edges not in seen:
                seen[nxt.edges] = nxt
                queue.append(nxt)
    return [seen[k] for k in sorted(seen)]


def reversal_path(source, target):
    """Shortest covered-reversal path; ties break on lexicographic edge order."""
    _check_size(source)
    if source.edges == target.edges:
        return []
    prev = {source.edges: None}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for e, nxt in _neighbors(cur):
            if nxt.edges in prev:
                continue
            prev[nxt.edges] = (cur.edges, e)
            if nxt.edges == target.edges:
                path = []
                key = nxt.edges
                while prev[key] is not None:
                    key, e = prev[key]
                    path.append(e)
                return path[::-1]
            queue.append(nxt)
    return None


def transfer_parameters(source, theta, target, relabeling=None):
    """Move parameters from ``source`` to the Markov equivalent ``target``.

    ``relabeling`` renames source nodes first, for DAGs equivalent only
    up to renaming.
    """
    if relabeling:
        source, theta = relabel(source, theta, relabeling)
    if set(source.nodes) != set(target.nodes) or source.hidden != target.hidden \
            or source.state_sizes != target.state_sizes:
        raise ModelError("source and target differ in nodes, hidden set or state sizes")
    path = reversal_path(source, target)
    if path is None:
        raise ModelError(f"{target!r} is not Markov equivalent to {source!r}")
    cur, params, applied = source, theta, []
    for e in path:
        res = reverse_covered_edge(cur, params, e)
        applied.append(e)
        if not res.domain_ok:
            return TransferResult(res.target_dag, None, applied, False, res.witness, relabeling)
        cur, params = res.target_dag, res.target_params
    return TransferResult(target, params, applied, True, None, relabeling)


def skeleton(model):
    return {frozenset(e) for e in model.edges}


def immoralities(model):
    """Triples (a, c, b), a < b, with a -> c <- b and a, b non-adjacent."""
    skel = skeleton(model)
    out = set()
    for c in model.nodes:
        for a, b in combinations(model.parents(c), 2):
            if frozenset((a, b)) not in skel:
                out.add((a, c, b))
    return out


def same_skeleton_and_immoralities(g1, g2):
    return skeleton(g1) == skeleton(g2) and immoralities(g1) == immoralities(g2)
