"""Constructive identification for the 3-0 (restricted Kruskal) and 4-3b models.

Both procedures turn the observable tensor into commuting matrix products
whose eigen-structure exposes the hidden-state rows of the parameter
matrices, then solve linear systems for the rest.  They return the whole
label-swap fiber, every candidate checked against the input tensor.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from . import linalg
from .distribution import observable_distribution, reproduces
from .errors import IdentificationError
from .model import ParameterSet, validate_model
from .orbits import _sort_key, label_swap_orbit
from .parametrize import polish
from .scalar import FLOAT, RATIONAL, is_exact

#: minimum relative eigenvalue separation accepted in float mode
GAP_RTOL = 1e-8
#: relative max-norm tolerance for a candidate to count as reproducing the input
REPRO_RTOL = 1e-8


@dataclass
class Check:
    passed: bool
    witness: object = None

    def to_json(self):
        return {"passed": self.passed, "witness": _jsonable(self.witness)}


def _jsonable(w):
    if isinstance(w, Fraction):
        return str(w)
    if isinstance(w, (bool, np.bool_)):
        return bool(w)
    if isinstance(w, (np.integer, int)):
        return int(w)
    if isinstance(w, (np.floating, float)):
        return float(w)
    if isinstance(w, (str, type(None))):
        return w
    if isinstance(w, dict):
        return {str(k): _jsonable(v) for k, v in w.items()}
    if isinstance(w, (list, tuple)):
        return [_jsonable(v) for v in w]
    return str(w)


@dataclass
class RecoveryResult:
    model: object
    candidates: list
    preconditions: dict = field(default_factory=dict)
    mode: str = FLOAT

    @property
    def k(self):
        return len(self.candidates)

    @property
    def ok(self):
        return all(c.passed for c in self.preconditions.values())

    def to_json(self):
        return {
            "model": self.model.name,
            "mode": self.mode,
            "k": self.k,
            "candidates": [c.to_json() for c in self.candidates],
            "preconditions": {k: v.to_json() for k, v in self.preconditions.items()},
        }


def kruskal_row_rank(m, rtol=1e-9):
    """Largest r such that every set of r rows of ``m`` is linearly independent."""
    m = np.asarray(m)
    rows = m.shape[0]
    best = 0
    for r in range(1, rows + 1):
        if all(linalg.rank(m[list(sub)], rtol) == r for sub in combinations(range(rows), r)):
            best = r
        else:
            break
    return best


def _three_zero_model(hidden, variables, sizes, n0, name="3-0"):
    nodes = [hidden] + list(variables)
    return validate_model(
        {
            "nodes": nodes,
            "edges": [(hidden, v) for v in variables],
            "state_sizes": {**{hidden: n0}, **{v: s for v, s in zip(variables, sizes)}},
            "hidden": [hidden],
        },
        name=name,
    )


def kruskal_preconditions(model, theta):
    """Sufficient conditions for :func:`kruskal_recover` on a 3-0 parameter set.

    The observable nodes play the roles of X1, X2, X3 in node order.
    """
    h = model.hidden_node
    obs = model.observed
    shaped = (
        len(obs) == 3
        and set(model.edges) == {(h, v) for v in obs}
        and model.parents(h) == ()
    )
    if not shaped:
        raise IdentificationError("model shape", f"{model!r} is not a 3-0 model")
    n0 = model.n(h)
    p0 = np.asarray(theta[h]).ravel()
    m1, m2, m3 = (np.asarray(theta[v]) for v in obs)
    report = {}
    report["p0 positivity"] = Check(bool(all(x > 0 for x in p0)), min(p0))
    for label, m in (("M1 rank", m1), ("M2 rank", m2)):
        r = linalg.rank(m)
        report[label] = Check(r == n0, r)
    krr = kruskal_row_rank(m3)
    report["Kruskal row rank >= 2"] = Check(krr >= 2, krr)
    report["state sizes"] = Check(model.n(obs[0]) >= n0 and model.n(obs[1]) >= n0,
                                  [model.n(v) for v in obs])
    return report


def _best_square_block(mats, n0):
    """Row/column subsets of size n0 maximizing the worst smallest singular value."""
    rows, cols = mats[0].shape
    best = None
    for r in combinations(range(rows), n0):
        for c in combinations(range(cols), n0):
            score = min(
                linalg.smallest_singular_value(np.asarray(m, dtype=float)[np.ix_(r, c)])
                for m in mats
            )
            if best is None or score > best[0]:
                best = (score, list(r), list(c))
    return best


def _weight_trials(count, exact):
    # deterministic combination weights for resolving repeated eigenvalues
    trials = []
    for base in (3, 7, 11, 19):
        w = [Fraction(1, base ** i) for i in range(count)]
        trials.append(w if exact else [float(x) for x in w])
    for seed in range(4):
        rng = np.random.default_rng(1000 + seed)
        w = rng.uniform(0.5, 1.5, count)
        trials.append([Fraction(x).limit_denominator(97) for x in w] if exact else list(w))
    return trials


def _combine(mats, weights):
    out = weights[0] * mats[0]
    for w, m in zip(weights[1:], mats[1:]):
        out = out + w * m
    return out


def _try_eig(mat):
    try:
        vals, rows = linalg.eig_left(mat)
    except IdentificationError as exc:
        if exc.check in ("eigenvalue gap",):
            return None, None, 0.0
        raise
    return vals, rows, linalg.relative_gap(vals)


def simultaneous_left_eigenvectors(mats, weights=None):
    """Left eigenvectors shared by a commuting family of matrices.

    A single member with well separated eigenvalues is used directly; if
    none qualifies, fixed linear combinations of the family are tried.
    Returns ``(rows, weights, gap)``; ``weights`` are the combination
    coefficients actually used (a one-hot vector for a single member).
    """
    exact = is_exact(mats[0])
    count = len(mats)
    if weights is not None:
        vals, rows, gap = _try_eig(_combine(mats, weights))
        if rows is None or (not exact and gap <= GAP_RTOL):
            raise IdentificationError("eigenvalue gap", "combined matrix has close eigenvalues", gap)
        return rows, weights, gap
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    trials = [[one if k == i else zero for k in range(count)] for i in range(count)]
    best = None
    for w in trials:
        vals, rows, gap = _try_eig(_combine(mats, w))
        if rows is not None and (best is None or gap > best[2]):
            best = (rows, w, gap)
    if best is not None and best[2] > GAP_RTOL:
        return best
    # repeated eigenvalues in every member: use the commuting family jointly
    for w in _weight_trials(count, exact):
        vals, rows, gap = _try_eig(_combine(mats, w))
        if rows is not None and (best is None or gap > best[2]):
            best = (rows, w, gap)
    if best is None or best[2] <= GAP_RTOL:
        raise IdentificationError(
            "Kruskal rank",
            "no linear combination of the slice products has distinct eigenvalues",
            witness=None if best is None else best[2],
        )
    return best


def _diagonal_in_basis(rows, mat, what):
    """Diagonal of rows @ mat @ rows^-1, checking it really is diagonal."""
    d = rows @ mat @ linalg.inv(rows, "eigenvector basis")
    n = d.shape[0]
    off = [d[a, b] for a in range(n) for b in range(n) if a != b]
    if is_exact(d):
        bad = any(x != 0 for x in off)
    else:
        scale = max(float(np.max(np.abs(np.diag(d).astype(float)))), 1.0)
        bad = bool(off) and max(abs(float(x)) for x in off) > 1e-6 * scale
    if bad:
        raise IdentificationError("simultaneous eigenbasis", f"{what} is not diagonalized")
    return np.array([d[k, k] for k in range(n)], dtype=d.dtype)


def _match_order(target, source):
    """Permutation p with source[p[k]] closest to target[k]."""
    n = len(target)
    tf = np.asarray(target, dtype=float)
    sf = np.asarray(source, dtype=float)
    best = min(permutations(range(n)), key=lambda p: float(np.max(np.abs(tf - sf[list(p)]))))
    return list(best)


def _finish(model, base, tensor, report, mode):
    if mode == FLOAT:
        base = polish(model, base, tensor)
    candidates = []
    for cand in label_swap_orbit(model, base, dedupe=False):
        if not reproduces(tensor, observable_distribution(model, cand), REPRO_RTOL):
            report["reproduction"] = Check(False)
            raise IdentificationError(
                "reproduction", "a candidate does not reproduce the input (exceptional input)"
            )
        candidates.append(cand)
    report["reproduction"] = Check(True)
    candidates.sort(key=lambda t: tuple(float(x) for x in _sort_key(model, t)))
    return RecoveryResult(model, candidates, report, mode)


def _require_normalized(tensor):
    if not tensor.normalized:
        raise IdentificationError("normalized input", "tensor is flagged unnormalized")


def kruskal_recover(tensor, n0, hidden=0, name="3-0"):
    """Recover all 3-0 parameter sets producing ``tensor``.

    ``tensor`` is over (X1, X2, X3) in that axis order; X1 and X2 need at
    least ``n0`` states.  Candidate node ids are the tensor's variables
    plus ``hidden``.
    """
    _require_normalized(tensor)
    if tensor.values.ndim != 3:
        raise IdentificationError("model shape", "expected a tensor over three variables")
    a, b, c = tensor.variables
    n1, n2, n3 = tensor.shape
    report = {"state sizes": Check(n1 >= n0 and n2 >= n0, [n1, n2, n3])}
    if not report["state sizes"].passed:
        raise IdentificationError("state sizes", f"need n1, n2 >= {n0}, got {n1}, {n2}")
    exact = is_exact(tensor.values)
    mode = RATIONAL if exact else FLOAT
    p = tensor.values
    pplus = p.sum(axis=2)
    slices = [p[:, :, i] for i in range(n3)]

    score, rr, cc = _best_square_block([pplus], n0)
    report["P++ invertible"] = Check(True, score)
    block = pplus[np.ix_(rr, cc)]
    try:
        block_inv = linalg.inv(block, "P++ block")
    except IdentificationError:
        report["P++ invertible"] = Check(False, score)
        raise
    a_mats = [block_inv @ s[np.ix_(rr, cc)] for s in slices]
    w2, weights, gap = simultaneous_left_eigenvectors(a_mats)
    report["eigenvalue gap"] = Check(True, gap)
    m2 = linalg.normalize_rows(w2 @ block_inv @ pplus[rr, :])
    m3 = np.stack([_diagonal_in_basis(w2, am, "slice product") for am in a_mats], axis=1)

    # same argument with the roles of X1 and X2 exchanged
    block_t_inv = linalg.inv(block.T, "P++ block")
    b_mats = [block_t_inv @ s[np.ix_(rr, cc)].T for s in slices]
    w1, _, _ = simultaneous_left_eigenvectors(b_mats, weights)
    m1_full = linalg.normalize_rows(w1 @ block_t_inv @ pplus[:, cc].T)
    m3_from_1 = np.stack([_diagonal_in_basis(w1, bm, "slice product") for bm in b_mats], axis=1)
    lam2 = m3 @ np.asarray(weights, dtype=m3.dtype)
    lam1 = m3_from_1 @ np.asarray(weights, dtype=m3.dtype)
    order = _match_order(lam2, lam1)
    m1 = m1_full[order]

    dmat = linalg.inv(m1[:, rr].T, "M1 block") @ block @ linalg.inv(m2[:, cc], "M2 block")
    p0 = np.array([dmat[k, k] for k in range(n0)], dtype=dmat.dtype)
    report["p0 positivity"] = Check(bool(all(x > 0 for x in p0)), min(p0))

    model = _three_zero_model(hidden, (a, b, c), (n1, n2, n3), n0, name)
    cpts = {hidden: p0.reshape(1, n0), a: m1, b: m2, c: m3}
    base = ParameterSet({v: np.ascontiguousarray(cpts[v]) for v in model.nodes})
    return _finish(model, base, tensor, report, mode)


def odds_ratio_condition(m3, i, i2, n0=None, n1=None):
    """Whether the conditional odds ratios of X3 differ across hidden states.

    ``m3`` is P(X3 | X0, X1) with rows (k, i), k slowest; ``i``, ``i2``
    are 1-based X1 states.  True iff for all hidden k < k' and X3 states
    j < j' the two cross products differ (exactly, or by relative gap
    above 1e-8 in float mode).
    """
    m3 = np.asarray(m3)
    rows, n3 = m3.shape
    if n0 is None and n1 is None:
        raise ValueError("give n0 or n1 to split the rows of m3")
    if n1 is None:
        n1 = rows // n0
    n0 = rows // n1
    exact = is_exact(m3)
    x, y = i - 1, i2 - 1

    def e(k, ii, j):
        return m3[k * n1 + ii, j]

    for k, k2 in combinations(range(n0), 2):
        for j, j2 in combinations(range(n3), 2):
            lhs = e(k, x, j2) * e(k, y, j) * e(k2, x, j) * e(k2, y, j2)
            rhs = e(k, x, j) * e(k, y, j2) * e(k2, x, j2) * e(k2, y, j)
            if exact:
                if lhs == rhs:
                    return False
            elif abs(lhs - rhs) <= GAP_RTOL * max(abs(lhs), abs(rhs), 1e-300):
                return False
    return True


def model_43b(hidden, variables, sizes, n0, name="4-3b"):
    v1, v2, v3, v4 = variables
    nodes = [hidden] + list(variables)
    return validate_model(
        {
            "nodes": nodes,
            "edges": [(hidden, v) for v in variables] + [(v1, v2), (v1, v3), (v3, v4)],
            "state_sizes": {**{hidden: n0}, **dict(zip(variables, sizes))},
            "hidden": [hidden],
        },
        name=name,
    )


def recover_43b(tensor, n0, hidden=0, name="4-3b"):
    """Recover all 4-3b parameter sets producing ``tensor`` over (X1, X2, X3, X4).

    The DAG is hidden -> every observable, X1 -> X2, X1 -> X3, X3 -> X4;
    X2 and X4 need at least ``n0`` states.
    """
    _require_normalized(tensor)
    if tensor.values.ndim != 4:
        raise IdentificationError("model shape", "expected a tensor over four variables")
    n1, n2, n3, n4 = tensor.shape
    report = {"state sizes": Check(n2 >= n0 and n4 >= n0 and n1 >= 2 and n3 >= 2, [n1, n2, n3, n4])}
    if not report["state sizes"].passed:
        raise IdentificationError("state sizes", f"need n2, n4 >= {n0} and n1, n3 >= 2")
    exact = is_exact(tensor.values)
    mode = RATIONAL if exact else FLOAT
    p = tensor.values
    sl = {(i, j): p[i, :, j, :] for i in range(n1) for j in range(n3)}

    score, rr, cc = _best_square_block(list(sl.values()), n0)
    report["slices invertible"] = Check(score > 0, score)
    blocks = {key: m[np.ix_(rr, cc)] for key, m in sl.items()}
    try:
        inv_blocks = {key: linalg.inv(m, f"slice P{key[0] + 1},{key[1] + 1}") for key, m in blocks.items()}
    except IdentificationError:
        report["slices invertible"] = Check(False, score)
        raise

    def product(i, i2, j, j2):
        return inv_blocks[i, j] @ blocks[i, j2] @ inv_blocks[i2, j2] @ blocks[i2, j]

    ranked = []
    for i, i2 in combinations(range(n1), 2):
        for j in range(n3):
            for j2 in range(n3):
                if j == j2:
                    continue
                q = product(i, i2, j, j2)
                vals = np.linalg.eigvals(np.asarray(q, dtype=float))
                gap = linalg.relative_gap(vals.real) if np.allclose(vals.imag, 0) else 0.0
                ranked.append((gap, (i, i2, j, j2), q))
    ranked.sort(key=lambda t: -t[0])
    chosen = None
    for gap, key, q in ranked:
        if gap <= GAP_RTOL:
            break
        try:
            vals, w = linalg.eig_left(q)
        except IdentificationError as exc:
            if exc.check == "eigenvalue gap":
                continue
            raise
        chosen = (key, vals, w, linalg.relative_gap(vals))
        break
    if chosen is None:
        best = ranked[0][0] if ranked else None
        report["odds-ratio condition"] = Check(False, best)
        raise IdentificationError(
            "odds-ratio condition",
            "the four-slice products have repeated eigenvalues for every (i, i')",
            witness=best,
        )
    (i_ref, i_other, j_ref, j_other), vals, w, gap = chosen
    report["odds-ratio condition"] = Check(
        True, {"i": i_ref + 1, "i'": i_other + 1, "j": j_ref + 1, "j'": j_other + 1, "gap": float(gap)}
    )

    m4 = {}
    m4[j_ref] = linalg.normalize_rows(w @ inv_blocks[i_ref, j_ref] @ sl[i_ref, j_ref][rr, :])
    m4_ref_inv = linalg.inv(m4[j_ref][:, cc], "M4 block")
    m2 = {}
    for i in range(n1):
        scaled = sl[i, j_ref][:, cc] @ m4_ref_inv  # (M2^i)^T D_{i,ref}
        m2[i] = linalg.normalize_rows(scaled.T, "M2 column")
    d = {}
    for i in range(n1):
        left = linalg.inv(m2[i][:, rr].T, f"M2^{i + 1} block")
        for j in range(n3):
            scaled = left @ sl[i, j][rr, :]  # D_{i,j} M4^j
            d[i, j] = scaled.sum(axis=1)
            if i == i_ref and j != j_ref:
                m4[j] = linalg.normalize_rows(scaled, "M4 row")

    joint = np.empty((n0, n1, n3), dtype=object if exact else float)
    for (i, j), diag in d.items():
        joint[:, i, j] = diag
    positive = all(x > 0 for x in joint.flat)
    report["hidden joint positivity"] = Check(positive, min(joint.flat))
    if not positive and not exact:
        if min(joint.flat) < -1e-9:
            raise IdentificationError(
                "hidden joint positivity", "recovered P(X0, X1, X3) has negative mass",
                witness=float(min(joint.flat)),
            )
    p0 = joint.sum(axis=(1, 2))
    p01 = joint.sum(axis=2)
    if any(x == 0 for x in p0) or any(x == 0 for x in p01.flat):
        raise IdentificationError("hidden joint positivity", "zero mass in P(X0, X1)")
    m1 = p01 / p0[:, None]
    m3 = (joint / p01[:, :, None]).reshape(n0 * n1, n3)
    m2_all = np.stack([m2[i] for i in range(n1)], axis=1).reshape(n0 * n1, n2)
    m4_all = np.stack([m4[j] for j in range(n3)], axis=1).reshape(n0 * n3, n4)

    v1, v2, v3, v4 = tensor.variables
    model = model_43b(hidden, tensor.variables, (n1, n2, n3, n4), n0, name)
    cpts = {hidden: p0.reshape(1, n0), v1: m1, v2: m2_all, v3: m3, v4: m4_all}
    base = ParameterSet({v: np.ascontiguousarray(cpts[v]) for v in model.nodes})
    return _finish(model, base, tensor, report, mode)
