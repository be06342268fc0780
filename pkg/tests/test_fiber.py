import numpy as np
import pytest

from latentbn.catalog import INFINITE, get_model
from latentbn.distribution import DistributionTensor, observable_distribution
from latentbn.errors import IdentificationError
from latentbn.fiber import (
    catalog_report,
    format_catalog,
    jacobian_survey,
    multistart_fiber_search,
    observable_condition_number,
    observable_jacobian_rank,
    well_conditioned_seeds,
)
from latentbn.model import ParameterSet, sample_generic_parameters
from latentbn.orbits import orbit_distance
from latentbn.parametrize import Coordinates


def test_jacobian_rank_30_full():
    ranks, generic, deviating = jacobian_survey(get_model("3-0"))
    assert generic == 7 and deviating == []


def test_jacobian_rank_matches_complex_step():
    m = get_model("4-2a")
    theta = sample_generic_parameters(m, 3)
    coords = Coordinates(m)
    x = coords.free_from_parameters(theta)
    jac = coords.complex_step_jacobian(coords.observable_free, x)
    s = np.linalg.svd(jac, compute_uv=False)
    assert observable_jacobian_rank(m, theta) == int(np.sum(s > 1e-7 * s[0])) == 11


def test_jacobian_boundary_rejected():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0)
    cpts = dict(theta.cpts)
    cpts[1] = np.array([[1.0, 0.0], [0.3, 0.7]])
    with pytest.raises(IdentificationError, match="boundary parameters"):
        observable_jacobian_rank(m, ParameterSet(cpts))


def test_coordinates_roundtrip():
    m = get_model("4-3e")
    theta = sample_generic_parameters(m, 2)
    coords = Coordinates(m)
    x = coords.free_from_parameters(theta)
    assert x.size == coords.free_dim == 15
    back = coords.parameters(coords.tables_from_free(x))
    assert np.allclose(back.flat(), theta.flat())
    flat = coords.observable_free(x)
    assert np.allclose(flat, observable_distribution(m, theta).values.ravel())


def test_multistart_30_one_canonical_cluster():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0)
    res = multistart_fiber_search(m, observable_distribution(m, theta), starts=100, seed=1)
    assert res.clusters == 1 and res.raw_clusters == 2
    assert orbit_distance(m, res.representatives[0], theta) < 1e-6


def test_multistart_deterministic():
    m = get_model("3-0")
    t = observable_distribution(m, sample_generic_parameters(m, 4))
    a = multistart_fiber_search(m, t, starts=100, seed=9)
    b = multistart_fiber_search(m, t, starts=100, seed=9)
    assert (a.clusters, a.raw_clusters, a.converged) == (b.clusters, b.raw_clusters, b.converged)


def test_multistart_table2(model_43e, table2_tensor):
    res = multistart_fiber_search(model_43e, table2_tensor, starts=500, seed=0)
    assert res.clusters == 2 and res.raw_clusters == 4


def test_multistart_inconsistent_input():
    m = get_model("3-0")
    # X1 independent of (X2, X3) but X2, X3 dependent: outside the 3-0 image
    p = np.zeros((2, 2, 2))
    p[:, 0, 0] = p[:, 1, 1] = 0.25
    res = multistart_fiber_search(m, DistributionTensor((1, 2, 3), p), starts=100, seed=0)
    assert res.clusters == 0 and res.inconclusive


def test_catalog_report_rows():
    reports = {r.model_id: r for r in catalog_report(seeds=5)}
    r = reports["3-0"]
    assert (r.dim_theta, r.obs_dim, r.k_observed) == (7, 7, 2)
    r = reports["4-3e,f"]
    assert (r.dim_theta, r.obs_dim, r.k_observed) == (15, 15, 4)
    r = reports["2-B"]
    assert r.dim_theta >= 5 > r.obs_dim and r.k_observed == INFINITE
    for r in reports.values():
        assert r.k_observed == r.k_claimed
        assert r.jacobian_rank <= min(r.dim_theta, r.obs_dim)
    text = format_catalog(reports.values())
    assert text.splitlines()[0].startswith("Model")
    assert len(text.splitlines()) == len(reports) + 1


def test_condition_screen():
    m = get_model("4-3a")
    # this draw has p(X0 = 1) near 0.018 and a CPT row near 0.998
    assert observable_condition_number(m, sample_generic_parameters(m, 5000)) > 1e7
    assert well_conditioned_seeds(m, 2, first_seed=5000) == [5001, 5002]
