"""Fiber-size evidence: Jacobian rank, a multistart oracle and the catalog report.

The multistart oracle can only exhibit solutions; it never proves that a
fiber has no further elements.  Its counts are empirical evidence.
"""
from dataclasses import dataclass, field

import numpy as np

from .catalog import INFINITE, TABLE, get_model
from .distribution import observable_distribution
from .errors import IdentificationError
from .identify import identify, procedure_for
from .model import parameter_dimension, sample_generic_parameters
from .orbits import canonicalize, parameter_distance
from .parametrize import Coordinates, polish

#: central-difference step for the observable Jacobian
FD_STEP = 1e-5
#: singular values below this fraction of the largest count as zero
RANK_RTOL = 1e-7
#: a multistart solution converged if its residual norm is below this
RESIDUAL_TOL = 1e-10
#: squared residual below which a descent run is worth refining
CANDIDATE_COST = 1e-10
#: max-norm radius for merging canonical solutions
CLUSTER_TOL = 1e-4
#: seeds out of 20 that must be rank deficient for an infinite verdict
INFINITE_QUORUM = 18
JACOBIAN_SEEDS = 20
#: squared residual at which a start stops iterating
FLOOR = 1e-30
#: reduced logits stay in [-bound, bound], so softmax needs no overflow guard
LOGIT_BOUND = 60.0
#: round-trip accuracy for a recovery seed to count
ROUNDTRIP_TOL = 1e-9
#: Jacobian condition number above which residual 1e-10 cannot pin a solution to 1e-4
CONDITION_LIMIT = 1e6

ROUNDTRIP = "recovery-roundtrip"
JACOBIAN = "jacobian-deficiency"
MULTISTART = "multistart"


def observable_jacobian_rank(model, theta):
    """Numerical rank of the Jacobian of the observable map at ``theta``.

    Central differences in free coordinates (each row's last entry is
    implied), step 1e-5, cutoff 1e-7 times the largest singular value.
    """
    for v in model.nodes:
        arr = np.asarray(theta[v], dtype=float)
        if np.any(arr <= 0) or np.any(arr >= 1):
            raise IdentificationError(
                "boundary parameters", f"CPT of node {v} has entries outside (0, 1)"
            )
    coords = Coordinates(model)
    x = coords.free_from_parameters(theta)
    jac = coords.central_difference_jacobian(coords.observable_free, x, FD_STEP)
    s = np.linalg.svd(jac, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def observable_condition_number(model, theta):
    """Ratio of extreme singular values of the exact observable Jacobian at ``theta``.

    A solution with residual ``r`` can sit about ``r`` times this number
    away from the true point, so large values mean multistart clusters
    at the default tolerances are not resolvable.
    """
    coords = Coordinates(model)
    x = coords.free_from_parameters(theta)
    s = np.linalg.svd(coords.complex_step_jacobian(coords.observable_free, x), compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def well_conditioned_seeds(model, count, first_seed=0, limit=CONDITION_LIMIT):
    """The first ``count`` seeds from ``first_seed`` whose generic draw passes the condition screen."""
    out, seed = [], first_seed
    while len(out) < count:
        if observable_condition_number(model, sample_generic_parameters(model, seed)) <= limit:
            out.append(seed)
        seed += 1
    return out


def observable_dim(model):
    return int(np.prod([model.n(v) for v in model.observed])) - 1


def jacobian_survey(model, seeds=JACOBIAN_SEEDS):
    """Ranks at ``seeds`` generic draws; the generic rank is the most common value."""
    ranks = [observable_jacobian_rank(model, sample_generic_parameters(model, s))
             for s in range(seeds)]
    values, counts = np.unique(ranks, return_counts=True)
    generic = int(values[np.argmax(counts)])
    deviating = [s for s, r in enumerate(ranks) if r != generic]
    return ranks, generic, deviating


# --- multistart oracle -------------------------------------------------------

@dataclass
class MultistartResult:
    """Outcome of :func:`multistart_fiber_search`.

    ``clusters`` counts distinct solutions after canonicalization,
    ``raw_clusters`` before it.  Zero converged starts is inconclusive.
    """

    clusters: int
    raw_clusters: int
    converged: int
    starts: int
    representatives: list = field(default_factory=list)

    @property
    def inconclusive(self):
        return self.converged == 0

    def to_json(self):
        return {
            "clusters": self.clusters,
            "raw_clusters": self.raw_clusters,
            "converged": self.converged,
            "starts": self.starts,
            "inconclusive": self.inconclusive,
            "representatives": [r.to_json() for r in self.representatives],
        }


def _reduced_logits(coords):
    """Map from non-redundant logits (last logit per row fixed at 0) to full logits."""
    keep = []
    pos = 0
    for r, c in coords.shapes.values():
        for _ in range(r):
            keep.extend(range(pos, pos + c - 1))
            pos += c
    keep = np.array(keep)

    def expand(z):
        full = np.zeros(z.shape[:-1] + (coords.logit_dim,), dtype=z.dtype)
        full[..., keep] = z
        return full

    return expand


def _levenberg_marquardt(f, jac, x, target, iterations):
    """Batched Levenberg-Marquardt on rows of ``x``; returns (x, squared residuals)."""
    res = f(x) - target
    cost = np.einsum("bm,bm->b", res, res)
    lam = np.full(x.shape[0], 1e-3)
    active = cost > FLOOR
    d = x.shape[1]
    eye = np.eye(d)
    for _ in range(iterations):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        j = jac(x[idx])
        a = np.einsum("bmi,bmj->bij", j, j)
        g = np.einsum("bmi,bm->bi", j, res[idx])
        scale = np.einsum("bii->bi", a).mean(axis=1)[:, None, None] + 1e-300
        step = -np.linalg.solve(a + lam[idx, None, None] * scale * eye, g[..., None])[..., 0]
        trial = np.clip(x[idx] + step, -LOGIT_BOUND, LOGIT_BOUND)
        r2 = f(trial) - target
        c2 = np.einsum("bm,bm->b", r2, r2)
        better = np.isfinite(c2) & (c2 < cost[idx])
        up = idx[better]
        x[up] = trial[better]
        res[up] = r2[better]
        cost[up] = c2[better]
        lam[up] = np.maximum(lam[up] / 3, 1e-12)
        lam[idx[~better]] *= 4
        # stop converged starts and those whose damping blew up
        active[idx] = (cost[idx] > FLOOR) & (lam[idx] < 1e10)
    return x, cost


def _cluster(model, sets, tol):
    reps = []
    for t in sets:
        if all(parameter_distance(t, r) >= tol for r in reps):
            reps.append(t)
    return reps


def multistart_fiber_search(model, tensor, starts=500, seed=0, iterations=400,
                            residual_tol=RESIDUAL_TOL, cluster_tol=CLUSTER_TOL):
    """Count the distinct solutions of phi+(theta) = ``tensor`` found from random starts.

    Minimizes the squared residual by Levenberg-Marquardt over row-softmax
    logits.  Start ``k`` draws its initial point from the ``k``-th child of
    ``SeedSequence(seed)``, so results depend only on (starts, seed).
    Runs ending below squared residual 1e-10 are refined by Gauss-Newton;
    those whose residual norm is then below 1e-10 count as solutions and
    are clustered at max-norm 1e-4, before and after canonicalization.
    """
    coords = Coordinates(model)
    expand = _reduced_logits(coords)
    target = np.asarray(tensor.reorder(model.observed).values, dtype=float).ravel()
    d = coords.logit_dim - sum(r for r, _ in coords.shapes.values())
    children = np.random.SeedSequence(seed).spawn(starts)
    x0 = np.stack([np.random.default_rng(c).normal(0.0, 1.5, d) for c in children])

    def f(z):
        return coords.observable_logits(expand(z), shift=False)

    def jac(z):
        return coords.complex_step_jacobian(f, z)

    x, cost = _levenberg_marquardt(f, jac, x0, target, iterations)
    near = np.nonzero(cost < CANDIDATE_COST)[0]
    tables = coords.tables_from_logits(expand(x[near]))
    sols = []
    for k in range(len(near)):
        # refine to rounding level, then apply the residual test
        t = polish(model, coords.parameters(tables, k), tensor, iterations=30)
        r = coords.observable_free(coords.free_from_parameters(t)) - target
        if np.linalg.norm(r) < residual_tol:
            sols.append(t)
    raw = _cluster(model, sols, cluster_tol)
    canon = _cluster(model, [canonicalize(model, t) for t in sols], cluster_tol)
    return MultistartResult(len(canon), len(raw), len(sols), starts, canon)


# --- catalog report ----------------------------------------------------------

@dataclass
class FiberReport:
    """One catalog row: the published k against what the code observes."""

    model_id: str
    k_claimed: object
    k_observed: object
    evidence: str
    jacobian_rank: int
    dim_theta: int
    obs_dim: int
    dim_printed: str = ""
    members: tuple = ()
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "model": self.model_id,
            "members": list(self.members),
            "dim_theta": self.dim_theta,
            "dim_printed": self.dim_printed,
            "obs_dim": self.obs_dim,
            "k_claimed": self.k_claimed,
            "k_observed": self.k_observed,
            "evidence": self.evidence,
            "jacobian_rank": self.jacobian_rank,
            "detail": self.detail,
        }


def roundtrip_counts(model, seeds):
    """Per-seed candidate count and whether some candidate matches the truth."""
    counts, hits, failures = [], 0, {}
    for s in range(seeds):
        theta = sample_generic_parameters(model, s)
        try:
            res = identify(model, observable_distribution(model, theta))
        except IdentificationError as exc:
            failures[s] = exc.check
            continue
        counts.append(res.k)
        if min(parameter_distance(c, theta) for c in res.candidates) <= ROUNDTRIP_TOL:
            hits += 1
    return counts, hits, failures


def _row_report(row, seeds):
    model = get_model(row.members[0])
    dim = parameter_dimension(model)
    obs = observable_dim(model)
    ranks, generic, deviating = jacobian_survey(model, max(seeds, 1))
    detail = {"jacobian_ranks_deviating_seeds": deviating}
    if procedure_for(model) is not None:
        counts, hits, failures = roundtrip_counts(model, seeds)
        values, freq = np.unique(counts, return_counts=True) if counts else ([], [])
        k_obs = int(values[np.argmax(freq)]) if len(values) else None
        detail.update(seeds=seeds, matched_truth=hits, failed_seeds=failures)
        return FiberReport(row.label, row.k, k_obs, ROUNDTRIP, generic, dim, obs,
                           row.dim_printed, row.members, detail)
    deficient = sum(r < dim for r in ranks)
    quorum = int(np.ceil(INFINITE_QUORUM / JACOBIAN_SEEDS * len(ranks)))
    k_obs = INFINITE if deficient >= quorum else None
    detail["deficient_seeds"] = deficient
    return FiberReport(row.label, row.k, k_obs, JACOBIAN, generic, dim, obs,
                       row.dim_printed, row.members, detail)


def catalog_report(seeds=JACOBIAN_SEEDS):
    """A report per published catalog row, using the first member's DAG."""
    return [_row_report(row, seeds) for row in TABLE]


def format_catalog(reports):
    """Plain-text table with the published columns plus the observed k."""
    head = ("Model", "dim(Theta)", "2^A-1", "k", "k_observed", "evidence", "rank", "published dim")
    rows = [head]
    for r in reports:
        rows.append((
            r.model_id, str(r.dim_theta), str(r.obs_dim), str(r.k_claimed),
            "-" if r.k_observed is None else str(r.k_observed), r.evidence, str(r.jacobian_rank),
            r.dim_printed,
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)
