"""Hidden-state relabeling: label-swap orbits and a canonical orbit representative."""
from itertools import permutations

import numpy as np

from .model import ParameterSet, cpt_array


def permute_hidden(model, theta, perm):
    """Rename hidden states so new state ``k`` is old state ``perm[k]``.

    Permutes the hidden root distribution and, for every CPT with the
    hidden node as a parent, the corresponding axis of its row blocks.
    """
    h = model.hidden_node
    perm = list(perm)
    cpts = {}
    for v in model.nodes:
        arr = cpt_array(model, theta, v)
        if v == h:
            arr = np.take(arr, perm, axis=arr.ndim - 1)
        elif h in model.parents(v):
            arr = np.take(arr, perm, axis=model.parents(v).index(h))
        cpts[v] = np.ascontiguousarray(arr).reshape(model.cpt_shape(v))
    return ParameterSet(cpts)


def label_swap_orbit(model, theta, dedupe=True):
    """All parameter sets obtained by permuting hidden states.

    With ``dedupe`` the result holds distinct elements only, so a
    swap-symmetric parameter set has a smaller orbit.
    """
    n0 = model.n(model.hidden_node)
    orbit = []
    for perm in permutations(range(n0)):
        cand = permute_hidden(model, theta, perm)
        if dedupe and any(_same(cand, o) for o in orbit):
            continue
        orbit.append(cand)
    return orbit


def _same(a, b):
    return all(np.array_equal(np.asarray(a[v]), np.asarray(b[v])) for v in a.cpts)


def _sort_key(model, theta):
    h = model.hidden_node
    p0 = np.asarray(theta[h]).ravel()
    key = [-x for x in p0]
    obs = model.observed
    if obs:
        key.extend(np.asarray(theta[obs[0]])[:, 0])
    for v in model.nodes:
        key.extend(np.asarray(theta[v]).ravel())
    return tuple(key)


def canonicalize(model, theta):
    """Orbit element with the hidden distribution sorted descending.

    Ties are broken by the first column of the first observable node's
    CPT, then by all CPT entries in node order.
    """
    return min(label_swap_orbit(model, theta, dedupe=False), key=lambda t: _sort_key(model, t))


def orbit_distance(model, a, b):
    """Max-norm distance between ``a`` and the nearest element of ``b``'s orbit."""
    fa = np.asarray(a.flat(), dtype=float)
    return min(
        float(np.max(np.abs(fa - np.asarray(o.flat(), dtype=float))))
        for o in label_swap_orbit(model, b, dedupe=False)
    )


def parameter_distance(a, b):
    return float(np.max(np.abs(np.asarray(a.flat(), dtype=float) - np.asarray(b.flat(), dtype=float))))
