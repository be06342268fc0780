import numpy as np
import pytest

from latentbn.catalog import get_model
from latentbn.distribution import observable_distribution
from latentbn.errors import IdentificationError
from latentbn.identify import identify, procedure_for
from latentbn.model import ParameterSet, sample_generic_parameters
from latentbn.reductions import (
    canonical_classes,
    conditioning_structure,
    fiber_43e,
    recover_via_conditioning,
    recover_via_sink,
    sink_structure,
    star_structure,
)
from latentbn.scalar import RATIONAL, as_array


def exact_match(candidates, theta):
    return any(all(np.array_equal(c[v], theta[v]) for v in theta.cpts) for c in candidates)


@pytest.mark.parametrize("mid", ["4-0", "4-1", "4-2d"])
@pytest.mark.parametrize("seed", range(3))
def test_sink_exact(mid, seed):
    m = get_model(mid)
    theta = sample_generic_parameters(m, seed, mode=RATIONAL)
    res = recover_via_sink(m, observable_distribution(m, theta))
    assert res.k == 2 and exact_match(res.candidates, theta)


@pytest.mark.parametrize("mid", ["4-2b", "4-2c"])
@pytest.mark.parametrize("seed", range(3))
def test_conditioning_exact(mid, seed):
    m = get_model(mid)
    theta = sample_generic_parameters(m, seed, mode=RATIONAL)
    res = recover_via_conditioning(m, observable_distribution(m, theta))
    assert res.k == 2 and exact_match(res.candidates, theta)


@pytest.mark.parametrize("mid", ["4-3e", "4-3f"])
def test_star_exact(mid):
    m = get_model(mid)
    theta = sample_generic_parameters(m, 11, mode=RATIONAL)
    res = fiber_43e(observable_distribution(m, theta), m)
    assert res.k == 4 and exact_match(res.candidates, theta)
    assert len(canonical_classes(m, res.candidates, tol=0)) == 2


def test_structure_detectors():
    assert sink_structure(get_model("4-2d"))
    assert not sink_structure(get_model("4-2c"))
    assert conditioning_structure(get_model("4-2c"))[0] == 1
    assert conditioning_structure(get_model("4-2b")) is None
    assert star_structure(get_model("4-3e"))[0] == 1


def test_dispatch_table():
    expected = {"3-0": "kruskal", "4-0": "sink", "4-1": "sink", "4-2d": "sink",
                "4-2b": "conditioning", "4-2c": "conditioning", "4-3a": "odds-ratio",
                "4-3b": "odds-ratio", "4-3e": "star", "4-3f": "star", "4-2a": None, "4-3g": None}
    for mid, proc in expected.items():
        assert procedure_for(get_model(mid)) == proc


def test_singular_pivot_flagged():
    m = get_model("4-0")
    theta = sample_generic_parameters(m, 1, mode=RATIONAL)
    cpts = dict(theta.cpts)
    for v in (3, 4):
        cpts[v] = as_array([["1/3", "2/3"], ["1/3", "2/3"]], RATIONAL)
    with pytest.raises(IdentificationError):
        recover_via_sink(m, observable_distribution(m, ParameterSet(cpts)))


def test_infinite_model_rejected():
    m = get_model("4-3g")
    theta = sample_generic_parameters(m, 0)
    with pytest.raises(IdentificationError, match="finite fiber"):
        identify(m, observable_distribution(m, theta))


def test_float_tensor_rejected_in_rational_mode():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0)
    with pytest.raises(Exception, match="rational mode"):
        identify(m, observable_distribution(m, theta), mode=RATIONAL)


def test_rational_input_in_float_mode():
    m = get_model("4-2d")
    theta = sample_generic_parameters(m, 2, mode=RATIONAL)
    res = identify(m, observable_distribution(m, theta), mode="float")
    assert res.mode == "float"
    assert min(float(np.max(np.abs(c.flat().astype(float) - theta.flat().astype(float))))
               for c in res.candidates) < 1e-9
