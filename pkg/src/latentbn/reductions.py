"""Reduce-and-lift identification for models built around a 3-0 core.

* sink models (4-0, 4-1, 4-2d): marginalize a sink, recover the 3-0
  remainder, lift through an observable pivot whose CPT is invertible;
* conditioning models (4-2c, and 4-2b through equivalence): condition on
  the fork node, recover each slice, align the slices on the shared pivot
  CPT, lift;
* star models (4-3e, and 4-3f through equivalence): condition on the
  center, recover each slice and combine the per-slice label choices,
  giving a generically 4-to-one fiber for binary variables.
"""
from itertools import product

import numpy as np

from . import linalg
from .distribution import (
    DistributionTensor,
    condition,
    marginalize,
    observable_distribution,
    reproduces,
)
from .equivalence import markov_equivalence_class, transfer_parameters
from .errors import IdentificationError
from .model import ParameterSet
from .parametrize import polish
from .orbits import _sort_key, canonicalize, parameter_distance
from .recovery import REPRO_RTOL, Check, RecoveryResult, _finish, kruskal_recover
from .scalar import FLOAT, RATIONAL, is_exact

#: M4 rows closer than this (max-norm) cannot align hidden labels across slices
ALIGN_GAP = 1e-6
#: rank threshold for the data-level degeneracy diagnosis
DEGENERATE_RTOL = 1e-9


def _observed_tensor(model, tensor):
    if sorted(tensor.variables) != sorted(model.observed):
        raise IdentificationError(
            "model shape", f"tensor over {tensor.variables}, model observes {model.observed}"
        )
    if not tensor.normalized:
        raise IdentificationError("normalized input", "tensor is flagged unnormalized")
    return tensor.reorder(model.observed)


def _only_hidden_parent(model, v):
    return model.parents(v) == (model.hidden_node,)


def _root_hidden(model):
    h = model.hidden_node
    return not model.parents(h) and set(model.children(h)) == set(model.observed)


def sink_structure(model):
    """(sink, remaining) pairs whose marginalization leaves a 3-0 model."""
    if len(model.hidden) != 1 or not _root_hidden(model):
        return []
    out = []
    for s in model.observed:
        if model.children(s):
            continue
        rest = [v for v in model.observed if v != s]
        if len(rest) == 3 and all(_only_hidden_parent(model, v) for v in rest):
            pivots = [v for v in rest if not model.children(v)]
            if pivots:
                out.append((s, rest, pivots))
    return out


def conditioning_structure(model):
    """(fork, children, pivot) for fork-plus-pivot shapes like 4-2c."""
    if len(model.hidden) != 1 or not _root_hidden(model) or len(model.observed) != 4:
        return None
    h = model.hidden_node
    for c in model.observed:
        if not _only_hidden_parent(model, c):
            continue
        kids = [v for v in model.observed if v != c and set(model.parents(v)) == {h, c}]
        pivots = [v for v in model.observed
                  if v != c and _only_hidden_parent(model, v) and not model.children(v)]
        if len(kids) == 2 and len(pivots) == 1 and not any(model.children(k) for k in kids):
            return c, kids, pivots[0]
    return None


def star_structure(model):
    """Center c for star shapes like 4-3e (every other observable has parents {h, c})."""
    if len(model.hidden) != 1 or not _root_hidden(model) or len(model.observed) != 4:
        return None
    h = model.hidden_node
    for c in model.observed:
        others = [v for v in model.observed if v != c]
        if _only_hidden_parent(model, c) and all(set(model.parents(v)) == {h, c} for v in others):
            return c, others
    return None


def _pairwise_degenerate(tensor, v, n0):
    """Whether every two-way table involving ``v`` has rank below ``n0``
    while some table not involving ``v`` has full rank ``n0``.

    Data-level evidence that the CPT of ``v`` given the hidden node is
    singular.
    """
    others = [u for u in tensor.variables if u != v]
    float_t = tensor.to_float()

    def full(a, b):
        m = marginalize(float_t, {a, b}).matrix((a,), (b,))
        return linalg.rank(m, DEGENERATE_RTOL) >= n0

    with_v = [full(v, u) for u in others]
    without = [full(a, b) for i, a in enumerate(others) for b in others[i + 1:]]
    return not any(with_v) and any(without)


def _right_inverse(m, what):
    if m.shape[0] == m.shape[1]:
        return linalg.inv(m, what)
    return m.T @ linalg.inv(m @ m.T, what)


def _lift(model, tensor, pivot, m_pivot):
    """CPTs of every node but ``pivot`` from U = P M_pivot^-1.

    U is the joint of the hidden node with all observables except the
    pivot; the pivot's CPT is ``m_pivot``.
    """
    h = model.hidden_node
    n0 = model.n(h)
    rest = tuple(v for v in model.observed if v != pivot)
    pmat = tensor.matrix(rest, (pivot,))
    u = pmat @ _right_inverse(m_pivot, f"M{pivot}")
    exact = is_exact(u)
    low = min(u.flat)
    if (low < 0) if exact else low < -1e-9 * max(float(np.max(np.abs(u.astype(float)))), 1e-300):
        raise IdentificationError(
            "U nonnegativity", "lifted joint has negative entries (exceptional input)",
            witness=low,
        )
    joint = DistributionTensor(
        rest + (h,), u.reshape(tuple(model.n(v) for v in rest) + (n0,)), True
    )
    cpts = {pivot: m_pivot}
    for v in model.nodes:
        if v == pivot:
            continue
        pa = list(model.parents(v))
        family = marginalize(joint, set(pa) | {v}).reorder(pa + [v]).values
        norm = family.sum(axis=-1, keepdims=True)
        if any(x == 0 for x in np.asarray(norm).flat) if exact else \
                np.any(np.abs(np.asarray(norm, dtype=float)) <= 1e-300):
            raise IdentificationError("positive parent mass", f"zero mass in P(pa({v}))")
        cpts[v] = np.ascontiguousarray(family / norm).reshape(model.cpt_shape(v))
    return ParameterSet({v: cpts[v] for v in model.nodes})


def _equivalent_form(model, detector):
    """A fixed-label Markov equivalent DAG (hidden node still a root parent
    of all observables) on which ``detector`` succeeds."""
    if detector(model):
        return model
    for g in markov_equivalence_class(model):
        if _root_hidden(g) and detector(g):
            return g
    return None


def _transfer_back(result, form, model, tensor):
    """Map every candidate from ``form`` to the original ``model``."""
    if form.edges == model.edges:
        result.model = model
        return result
    moved = []
    for cand in result.candidates:
        tr = transfer_parameters(form, cand, model)
        if not tr.domain_ok:
            raise IdentificationError("transfer positivity", tr.witness)
        moved.append(tr.target_params)
    moved.sort(key=lambda t: tuple(float(x) for x in _sort_key(model, t)))
    result.preconditions["equivalence transfer"] = Check(True, list(form.edges))
    for cand in moved:
        if not reproduces(tensor, observable_distribution(model, cand), REPRO_RTOL):
            raise IdentificationError("reproduction", "transferred candidate does not reproduce input")
    return RecoveryResult(model, moved, result.preconditions, result.mode)


def _margin(result):
    checks = result.preconditions
    vals = [checks[k].witness for k in ("P++ invertible", "eigenvalue gap") if k in checks]
    return min(float(v) for v in vals) if vals else 0.0


def recover_via_sink(model, tensor):
    """Identify a sink model (4-0, 4-1, 4-2d shapes) by reduction to 3-0."""
    options = sink_structure(model)
    if not options:
        raise IdentificationError("model shape", f"{model!r} has no sink leaving a 3-0 model")
    tensor = _observed_tensor(model, tensor)
    h = model.hidden_node
    n0 = model.n(h)
    mode = RATIONAL if is_exact(tensor.values) else FLOAT
    attempts = []
    errors = {}
    for s, rest, pivots in options:
        order = [pivots[0]] + [v for v in rest if v != pivots[0]]
        reduced = marginalize(tensor, set(rest)).reorder(order)
        try:
            res = kruskal_recover(reduced, n0, hidden=h)
        except IdentificationError as exc:
            errors[s] = exc
            continue
        attempts.append((_margin(res), s, rest, pivots, res))
    if not attempts:
        for s, rest, pivots in options:
            for q in pivots:
                reduced = marginalize(tensor, set(rest))
                if _pairwise_degenerate(reduced, q, n0):
                    raise IdentificationError(
                        f"M{q} singular",
                        f"every two-way table with X{q} is rank deficient; P(X{q}|X{h}) is singular",
                    )
        s, exc = next(iter(errors.items()))
        raise IdentificationError(
            "reduced recovery", f"marginalizing sink {s}: {exc}", witness=exc.check
        ) from exc
    # sink with the largest reduced-problem margin goes first
    attempts.sort(key=lambda t: -t[0])
    margin, s, rest, pivots, res = attempts[0]
    base3 = res.candidates[0]
    q = max(pivots, key=lambda v: linalg.smallest_singular_value(np.asarray(base3[v], dtype=float)))
    m_pivot = base3[q]
    if linalg.is_singular(m_pivot):
        raise IdentificationError(f"M{q} singular", "recovered pivot CPT is singular")
    report = dict(res.preconditions)
    report["sink"] = Check(True, s)
    report["pivot"] = Check(True, q)
    base = _lift(model, tensor, q, m_pivot)
    return _finish(model, base, tensor, report, mode)


def recover_via_conditioning(model, tensor):
    """Identify a fork-plus-pivot model (4-2c shape; 4-2b via equivalence)."""
    form = _equivalent_form(model, conditioning_structure)
    if form is None:
        raise IdentificationError("model shape", f"{model!r} has no fork-plus-pivot form")
    tensor = _observed_tensor(model, tensor)
    result = _recover_fork(form, tensor)
    return _transfer_back(result, form, model, tensor)


def _recover_fork(model, tensor):
    c, kids, q = conditioning_structure(model)
    h = model.hidden_node
    n0 = model.n(h)
    mode = RATIONAL if is_exact(tensor.values) else FLOAT
    report = {}
    slices = {}
    failures = {}
    for j in range(1, model.n(c) + 1):
        try:
            cond = condition(tensor, {c: j}, normalize=True).reorder([q] + kids)
            slices[j] = kruskal_recover(cond, n0, hidden=h)
            report[f"slice X{c}={j}"] = Check(True)
        except IdentificationError as exc:
            failures[j] = exc
            report[f"slice X{c}={j}"] = Check(False, exc.check)
    if not slices:
        for j in failures:
            cond = condition(tensor, {c: j}, normalize=True)
            if _pairwise_degenerate(cond, q, n0):
                raise IdentificationError(
                    "alignment",
                    f"shared CPT of X{q} has coinciding rows; hidden labels cannot be aligned",
                )
        detail = "; ".join(f"X{c}={j}: {e}" for j, e in failures.items())
        raise IdentificationError("conditioned recovery", f"failed for every slice ({detail})")
    ref_j = next(iter(slices))
    ref = slices[ref_j].candidates[0]
    m_ref = ref[q]
    rows = np.asarray(m_ref, dtype=float)
    row_gap = min(
        float(np.max(np.abs(rows[a] - rows[b])))
        for a in range(n0) for b in range(a + 1, n0)
    )
    if row_gap < ALIGN_GAP:
        raise IdentificationError(
            "alignment", f"rows of the shared CPT of X{q} are too close", witness=row_gap
        )
    mismatch = 0.0
    for j, res in slices.items():
        if j == ref_j:
            continue
        mismatch = max(mismatch, min(
            float(np.max(np.abs(np.asarray(cand[q], dtype=float) - rows)))
            for cand in res.candidates
        ))
    report["alignment"] = Check(mismatch < row_gap / 2, {"row gap": row_gap, "mismatch": mismatch})
    if not report["alignment"].passed:
        raise IdentificationError(
            "alignment", "slices disagree on the shared pivot CPT", witness=mismatch
        )
    base = _lift(model, tensor, q, m_ref)
    return _finish(model, base, tensor, report, mode)


def fiber_43e(tensor, model):
    """All parameter sets of a star model (4-3e; 4-3f via equivalence).

    Each slice X_c = j is a 3-0 model recovered up to its own hidden
    labeling; every combination of per-slice labelings is a candidate.
    """
    form = _equivalent_form(model, star_structure)
    if form is None:
        raise IdentificationError("model shape", f"{model!r} has no star form")
    tensor = _observed_tensor(model, tensor)
    result = _recover_star(form, tensor)
    return _transfer_back(result, form, model, tensor)


def _recover_star(model, tensor):
    c, others = star_structure(model)
    h = model.hidden_node
    n0 = model.n(h)
    nc = model.n(c)
    exact = is_exact(tensor.values)
    mode = RATIONAL if exact else FLOAT
    report = {}
    slices = []
    pc = marginalize(tensor, {c}).values
    for j in range(1, nc + 1):
        try:
            cond = condition(tensor, {c: j}, normalize=True).reorder(others)
            slices.append(kruskal_recover(cond, n0, hidden=h))
        except IdentificationError as exc:
            report[f"slice X{c}={j}"] = Check(False, exc.check)
            raise IdentificationError(
                "conditioned recovery", f"slice X{c}={j}: {exc}", witness=exc.check
            ) from exc
        report[f"slice X{c}={j}"] = Check(True)

    candidates = []
    for choice in product(*(s.candidates for s in slices)):
        joint = np.stack(
            [np.asarray(ch[h]).ravel() * pc[j] for j, ch in enumerate(choice)], axis=1
        )  # P(X0, Xc)
        p0 = joint.sum(axis=1)
        cpts = {h: p0.reshape(1, n0), c: joint / p0[:, None]}
        for v in others:
            blocks = np.stack([np.asarray(ch[v]) for ch in choice], axis=1)  # (k, j, states)
            cpts[v] = np.ascontiguousarray(blocks).reshape(n0 * nc, model.n(v))
        cand = ParameterSet({v: np.ascontiguousarray(cpts[v]) for v in model.nodes})
        if not exact:
            cand = polish(model, cand, tensor)
        if not reproduces(tensor, observable_distribution(model, cand), REPRO_RTOL):
            report["reproduction"] = Check(False)
            raise IdentificationError(
                "reproduction", "a combined choice does not reproduce the input (exceptional input)"
            )
        candidates.append(cand)
    report["reproduction"] = Check(True)
    tol = 0 if exact else 1e-9
    distinct = []
    for cand in candidates:
        if all(parameter_distance(cand, d) > tol for d in distinct):
            distinct.append(cand)
    report["distinct candidates"] = Check(len(distinct) == len(candidates), len(distinct))
    candidates.sort(key=lambda t: tuple(float(x) for x in _sort_key(model, t)))
    return RecoveryResult(model, candidates, report, mode)


def canonical_classes(model, candidates, tol=1e-9):
    """Distinct canonical forms among ``candidates`` (one per label-swap orbit)."""
    out = []
    for cand in candidates:
        can = canonicalize(model, cand)
        if all(parameter_distance(can, o) > tol for o in out):
            out.append(can)
    return out
