from itertools import product

import numpy as np
import pytest

from latentbn.catalog import get_model
from latentbn.distribution import joint_distribution
from latentbn.equivalence import (
    MAX_NODES,
    covered_edges,
    immoralities,
    markov_equivalence_class,
    reversal_path,
    reverse_covered_edge,
    same_skeleton_and_immoralities,
    transfer_parameters,
)
from latentbn.errors import ModelError
from latentbn.model import ParameterSet, Model, _topological_order, sample_generic_parameters
from latentbn.scalar import RATIONAL, as_array


def oracle_class(model):
    """Every orientation of the skeleton that is acyclic with the same immoralities."""
    out = set()
    for flips in product((False, True), repeat=len(model.edges)):
        edges = tuple(sorted((b, a) if f else (a, b) for (a, b), f in zip(model.edges, flips)))
        if _topological_order(model.nodes, edges) is None:
            continue
        cand = model.with_edges(edges)
        if immoralities(cand) == immoralities(model):
            out.add(edges)
    return out


@pytest.mark.parametrize("mid", ["3-0", "4-2b", "4-2d", "4-3a", "4-3e", "4-3g", "4-4"])
def test_class_matches_skeleton_oracle(mid):
    m = get_model(mid)
    found = {g.edges for g in markov_equivalence_class(m)}
    assert found == oracle_class(m)
    assert found == {g.edges for g in markov_equivalence_class(m, order=lambda xs: sorted(xs, reverse=True))}


@pytest.mark.parametrize("mid", ["4-3b", "4-3e", "4-4"])
def test_covered_edges_definition(mid):
    m = get_model(mid)
    want = {(a, b) for a, b in m.edges if set(m.parents(b)) == set(m.parents(a)) | {a}}
    assert set(covered_edges(m)) == want
    assert (0, 1) in want


def test_uncovered_reversal_rejected():
    m = get_model("4-3b")
    theta = sample_generic_parameters(m, 0)
    bad = next(e for e in m.edges if e not in covered_edges(m))
    with pytest.raises(ModelError, match="not covered"):
        reverse_covered_edge(m, theta, bad)


def test_reversal_preserves_joint_exactly():
    m = get_model("4-3e")
    theta = sample_generic_parameters(m, 3, mode=RATIONAL)
    res = reverse_covered_edge(m, theta, (0, 1))
    assert res.domain_ok
    a = joint_distribution(m, theta)
    b = joint_distribution(res.target_dag, res.target_params)
    assert np.all(a.values == b.reorder(a.variables).values)


def test_transfer_positivity_failure():
    m = get_model("4-3e")
    theta = sample_generic_parameters(m, 3, mode=RATIONAL)
    cpts = dict(theta.cpts)
    cpts[1] = as_array([["1", "0"], ["1/2", "1/2"]], RATIONAL)
    res = transfer_parameters(m, ParameterSet(cpts), get_model("4-3f"))
    assert not res.domain_ok and res.target_params is None
    assert "not strictly positive" in res.witness


def test_non_equivalent_transfer_rejected():
    with pytest.raises(ModelError, match="not Markov equivalent"):
        transfer_parameters(get_model("4-3e"), sample_generic_parameters(get_model("4-3e"), 0),
                            get_model("4-3b"))


def test_reversal_path_deterministic():
    a, b = get_model("4-3a"), get_model("4-3b")
    path = reversal_path(a, b)
    assert path == reversal_path(a, b)
    assert same_skeleton_and_immoralities(a, b)
    assert reversal_path(a, a) == []


def test_size_limit():
    nodes = tuple(range(MAX_NODES + 1))
    m = Model(nodes, ((0, 1),), {v: 2 for v in nodes}, frozenset({0}))
    with pytest.raises(ModelError, match="limited"):
        markov_equivalence_class(m)
