"""Small dense linear algebra working in either arithmetic mode.

Float inputs go to numpy/LAPACK; object arrays of Fractions get exact
Gauss-Jordan elimination and exact (rational) eigen-decomposition.
"""
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import IdentificationError, IrrationalResultError
from .scalar import is_exact

#: float matrices with sigma_min / sigma_max below this are treated as singular
SINGULAR_RTOL = 1e-12


def identity(n, exact):
    if exact:
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = Fraction(int(i == j))
        return out
    return np.eye(n)


def _row_reduce(a):
    """Reduced row echelon form of an exact matrix; returns (rref, pivots)."""
    m = np.array(a, dtype=object, copy=True)
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if m[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = m[r] / m[r, c]
        for i in range(rows):
            if i != r and m[i, c] != 0:
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def singular_values(a):
    return np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)


def smallest_singular_value(a):
    s = singular_values(a)
    return float(s[-1]) if s.size else 0.0


def rank(a, rtol=1e-9):
    a = np.asarray(a)
    if a.size == 0:
        return 0
    if is_exact(a):
        return len(_row_reduce(a)[1])
    s = singular_values(a)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def is_singular(a):
    a = np.asarray(a)
    if is_exact(a):
        return rank(a) < min(a.shape)
    s = singular_values(a)
    return s[0] == 0 or s[-1] <= SINGULAR_RTOL * s[0]


def inv(a, what="matrix"):
    """Inverse, raising :class:`IdentificationError` named ``what`` singular."""
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"{what} is not square: {a.shape}")
    if is_exact(a):
        aug = np.concatenate([a, identity(n, True)], axis=1)
        red, pivots = _row_reduce(aug)
        if pivots[:n] != list(range(n)):
            raise IdentificationError(f"{what} singular", "exact rank deficiency")
        return red[:, n:]
    if is_singular(a):
        raise IdentificationError(
            f"{what} singular", witness=smallest_singular_value(a)
        )
    return np.linalg.inv(a)


def solve(a, b, what="matrix"):
    return inv(a, what) @ b


def nullspace(a):
    """Basis (as rows) of the right null space of an exact matrix."""
    red, pivots = _row_reduce(a)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.array([Fraction(0)] * cols, dtype=object)
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -red[r, f]
        basis.append(v)
    return basis


def _frac_sqrt(q):
    """Exact square root of a nonnegative Fraction, or None if irrational."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _rational_eigenvalues(a):
    n = a.shape[0]
    if n == 1:
        return [a[0, 0]]
    if n == 2:
        # closed form: roots of x^2 - tr x + det
        tr = a[0, 0] + a[1, 1]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        disc = tr * tr - 4 * det
        root = _frac_sqrt(disc)
        if root is None:
            raise IrrationalResultError(
                "2x2 eigenvalues are not rational", witness=str(disc)
            )
        return [(tr + root) / 2, (tr - root) / 2]
    import sympy

    lam = sympy.Symbol("lam")
    poly = sympy.Matrix(a.tolist()).charpoly(lam)
    found = sympy.roots(poly, filter="Q")
    vals = []
    for root, mult in found.items():
        vals.extend([Fraction(int(root.p), int(root.q))] * mult)
    if len(vals) < n:
        raise IrrationalResultError(
            f"only {len(vals)} of {n} eigenvalues are rational"
        )
    return sorted(vals, reverse=True)


def eig_left(a):
    """Eigenvalues and left eigenvectors (rows of the returned matrix).

    Float mode rejects complex spectra.  Rational mode rejects irrational
    spectra and repeated eigenvalues (the caller resolves those by
    combining commuting matrices first).
    """
    a = np.asarray(a)
    n = a.shape[0]
    if is_exact(a):
        vals = _rational_eigenvalues(a)
        if len(set(vals)) < n:
            raise IdentificationError("eigenvalue gap", "repeated eigenvalue")
        rows = []
        for lam in vals:
            basis = nullspace((a - lam * identity(n, True)).T)
            rows.append(basis[0])
        return np.array(vals, dtype=object), np.array(rows, dtype=object)
    vals, vecs = np.linalg.eig(a.T)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if np.max(np.abs(vals.imag)) > 1e-9 * scale:
        raise IdentificationError(
            "real spectrum", "complex eigenvalues", witness=vals.tolist()
        )
    return vals.real, vecs.real.T


def relative_gap(vals):
    """Smallest pairwise eigenvalue distance relative to the spectrum's scale.

    Exact arrays report 0 for a repeated value and 1 otherwise.
    """
    vals = list(vals)
    if len(vals) < 2:
        return 1.0
    if isinstance(vals[0], Fraction):
        return 0.0 if len(set(vals)) < len(vals) else 1.0
    v = np.asarray(vals, dtype=float)
    diffs = np.abs(v[:, None] - v[None, :])
    gap = np.min(diffs[~np.eye(len(v), dtype=bool)])
    return float(gap / max(np.max(np.abs(v)), 1e-300))


def normalize_rows(w, what="eigenvector"):
    """Scale rows to sum to 1; a (numerically) zero-sum row is exceptional."""
    w = np.asarray(w)
    sums = w.sum(axis=1)
    if is_exact(w):
        bad = [i for i, s in enumerate(sums) if s == 0]
    else:
        scale = np.abs(w).sum(axis=1)
        bad = [i for i in range(len(sums)) if abs(sums[i]) <= 1e-12 * max(scale[i], 1e-300)]
    if bad:
        raise IdentificationError(
            f"{what} normalization", "row sums to zero", witness=bad
        )
    return w / sums[:, None]
