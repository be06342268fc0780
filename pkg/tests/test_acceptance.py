"""Acceptance criteria 1-9.

Each test records a one-line verdict (printed in the pytest terminal
summary) before asserting, so a failing criterion still reports its line.
Published values are hard-coded from the source tables; derived values
come from oracles written independently of the library code paths.
"""
import time
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np
import pytest
import sympy

from latentbn.catalog import RELABELINGS, TABLE, get_model
from latentbn.causal import causal_effect, contrast, effect_ambiguity
from latentbn.distribution import joint_distribution, max_abs_difference, observable_distribution
from latentbn.equivalence import same_skeleton_and_immoralities, transfer_parameters
from latentbn.errors import IdentificationError
from latentbn.fiber import multistart_fiber_search, observable_jacobian_rank, well_conditioned_seeds
from latentbn.identify import identify
from latentbn.model import parameter_dimension, sample_generic_parameters
from latentbn.orbits import canonicalize, parameter_distance
from latentbn.reductions import canonical_classes
from latentbn.scalar import RATIONAL

from conftest import table2_entry

PUBLISHED_16 = [
    "116/625", "34/625", "27/500", "39/1250", "32/625", "13/625", "63/2500", "17/1250",
    "128/625", "52/625", "171/2500", "24/625", "44/625", "31/625", "81/2500", "21/1250",
]


def brute_force_observable(theta):
    """Oracle for 4-3e: sum over x0 of p0 M1 M2 M3 M4 by explicit loops."""
    p = {}
    for x1, x2, x3, x4 in product(range(2), repeat=4):
        total = Fraction(0)
        for x0 in range(2):
            total += (theta[0][0, x0] * theta[1][x0, x1] * theta[2][2 * x0 + x1, x2]
                      * theta[3][2 * x0 + x1, x3] * theta[4][2 * x0 + x1, x4])
        p[x1, x2, x3, x4] = total
    return p


# --- criterion 1 ---------------------------------------------------------------

def test_criterion_1_table2_reproduction(model_43e, table2_params, acceptance):
    start = time.perf_counter()
    ok = True
    for theta in table2_params:
        tensor = observable_distribution(model_43e, theta)
        for x1, x2, x3, x4 in product((1, 2), repeat=4):
            printed = table2_entry(x1, x2, x3, x4)
            ok &= tensor.values[x1 - 1, x2 - 1, x3 - 1, x4 - 1] == printed
        oracle = brute_force_observable(theta)
        ok &= all(tensor.values[k] == v for k, v in oracle.items())
    elapsed = time.perf_counter() - start
    # the printed list order is blocks over (X3, X4), each row-major over (X1, X2)
    listed = [table2_entry(x1, x2, x3, x4)
              for x3, x4 in product((1, 2), repeat=2) for x1, x2 in product((1, 2), repeat=2)]
    ok &= listed == [Fraction(s) for s in PUBLISHED_16]
    acceptance(1, ok and elapsed < 1.0,
               f"phi+ of parameters (1) and (2) equals the 16 printed rationals exactly ({elapsed:.3f}s)")
    assert ok
    assert elapsed < 1.0


# --- criterion 2 ---------------------------------------------------------------

def adjustment_oracle(theta):
    """P(X2=2 | do(X1=x)) = sum_k P(X2=2 | X1=x, X0=k) P(X0=k), by hand."""
    return {x: sum(theta[2][2 * k + x, 1] * theta[0][0, k] for k in range(2)) for x in range(2)}


def test_criterion_2_table3_reproduction(model_43e, table2_params, table2_tensor, acceptance):
    report = effect_ambiguity(model_43e, table2_tensor, 1, 2, mode=RATIONAL)
    got = sorted(report.contrasts)
    published = sorted([Fraction(-7, 50), Fraction(3, 50)])
    per_params = []
    for theta in table2_params:
        eff = causal_effect(model_43e, theta, 1, 2)
        oracle = adjustment_oracle(theta)
        assert eff[1, 1] == oracle[1] and eff[0, 1] == oracle[0]
        per_params.append((eff[1, 1], eff[0, 1], contrast(eff)))
    table3 = [(Fraction(11, 50), Fraction(9, 25), Fraction(-7, 50)),
              (Fraction(17, 50), Fraction(7, 25), Fraction(3, 50))]
    ok = got == published and report.signs_agree is False and per_params == table3
    acceptance(2, ok, f"contrasts {[str(c) for c in got]}, signs_agree={report.signs_agree}")
    assert per_params == table3
    assert got == published
    assert report.signs_agree is False


# --- criterion 3 ---------------------------------------------------------------

def test_criterion_3_table2_fiber(model_43e, table2_params, table2_tensor, acceptance):
    res = identify(model_43e, table2_tensor, mode=RATIONAL)
    classes = canonical_classes(model_43e, res.candidates, tol=0)
    expected = [canonicalize(model_43e, t) for t in table2_params]
    matched = all(any(parameter_distance(c, e) == 0 for c in classes) for e in expected)
    exact = all(c[v].dtype == object for c in res.candidates for v in model_43e.nodes)
    ok = res.k == 4 and len(classes) == 2 and matched and exact
    acceptance(3, ok, f"{res.k} candidates, {len(classes)} canonical classes, "
                      f"match parameters (1) and (2) exactly: {matched}")
    assert res.k == 4
    assert len(classes) == 2
    assert matched and exact


# --- criterion 4 ---------------------------------------------------------------

ROUNDTRIP_MODELS = ("3-0", "4-0", "4-1", "4-2b", "4-2c", "4-2d", "4-3a", "4-3b")


def test_criterion_4_recovery_roundtrips(acceptance):
    start = time.perf_counter()
    summary, ok = [], True
    for mid in ROUNDTRIP_MODELS:
        model = get_model(mid)
        passed = flagged = wrong = 0
        for seed in range(100):
            theta = sample_generic_parameters(model, seed)
            try:
                res = identify(model, observable_distribution(model, theta))
            except IdentificationError:
                flagged += 1
                continue
            if res.k == 2 and min(parameter_distance(c, theta) for c in res.candidates) <= 1e-9:
                passed += 1
            else:
                wrong += 1
        summary.append(f"{mid}:{passed}")
        ok &= passed >= 99 and wrong == 0
    elapsed = time.perf_counter() - start
    acceptance(4, ok and elapsed < 60, f"passing seeds per model {' '.join(summary)} ({elapsed:.1f}s)")
    assert ok
    assert elapsed < 60


# --- criterion 5 ---------------------------------------------------------------

def test_criterion_5_four_to_one(acceptance):
    summary, ok = [], True
    for mid in ("4-3e", "4-3f"):
        model = get_model(mid)
        good = 0
        for seed in range(100):
            theta = sample_generic_parameters(model, seed)
            tensor = observable_distribution(model, theta)
            res = identify(model, tensor)
            distinct = all(parameter_distance(a, b) > 1e-6
                           for a, b in combinations(res.candidates, 2))
            classes = canonical_classes(model, res.candidates)
            reproduce = all(max_abs_difference(observable_distribution(model, c), tensor) <= 1e-9
                            for c in res.candidates)
            truth = min(parameter_distance(c, theta) for c in res.candidates) <= 1e-9
            good += res.k == 4 and distinct and len(classes) == 2 and reproduce and truth
        summary.append(f"{mid}:{good}/100")
        ok &= good == 100
    acceptance(5, ok, "4 distinct candidates in 2 canonical classes, all reproducing within 1e-9: "
                      + " ".join(summary))
    assert ok


# --- criterion 6 ---------------------------------------------------------------

INFINITE_MODELS = ("4-2a", "4-3c", "4-3d", "4-3g", "4-3h", "4-3i")


def symbolic_rank_42a():
    """Exact rank of the 4-2a observable Jacobian at a rational interior point."""
    model = get_model("4-2a")
    syms, cpts = [], {}
    for v in model.nodes:
        rows, _ = model.cpt_shape(v)
        table = []
        for r in range(rows):
            s = sympy.Symbol(f"t{v}_{r}")
            syms.append(s)
            table.append((s, 1 - s))
        cpts[v] = table
    h = model.hidden_node
    polys = []
    for x in product(range(2), repeat=4):
        total = 0
        for x0 in range(2):
            states = {h: x0, **dict(zip(model.observed, x))}
            term = 1
            for v in model.nodes:
                pa = model.parents(v)
                row = sum(states[w] * 2 ** (len(pa) - 1 - i) for i, w in enumerate(pa))
                term *= cpts[v][row][states[v]]
            total += term
        polys.append(sympy.expand(total))
    jac = sympy.Matrix(polys).jacobian(syms)
    point = {s: sympy.Rational(k + 2, 3 * len(syms) + 7) for k, s in enumerate(syms)}
    return jac.subs(point).rank()


def test_criterion_6_infinite_to_one(acceptance):
    summary, ok = [], True
    ranks_42a = []
    for mid in INFINITE_MODELS:
        model = get_model(mid)
        dim = parameter_dimension(model)
        ranks = [observable_jacobian_rank(model, sample_generic_parameters(model, s)) for s in range(20)]
        deficient = [r for r in ranks if r < dim]
        if mid == "4-2a":
            ranks_42a = deficient
        summary.append(f"{mid}:{len(deficient)}/20")
        ok &= len(deficient) >= 18
    exact_rank = symbolic_rank_42a()
    ok &= bool(ranks_42a) and all(r == 11 for r in ranks_42a) and exact_rank == 11
    acceptance(6, ok, f"deficient seeds {' '.join(summary)}; 4-2a rank {sorted(set(ranks_42a))} "
                      f"(exact symbolic rank {exact_rank})")
    assert ok


# --- criterion 7 ---------------------------------------------------------------

def dimension_oracle(num_observed, observable_edges):
    """Binary models, hidden root parent of all: sum over nodes of 2^(in-degree)."""
    indeg = {v: 1 for v in range(1, num_observed + 1)}
    for _, b in observable_edges:
        indeg[b] += 1
    return 1 + sum(2 ** d for d in indeg.values())


def attainable_dims(num_observed, num_edges):
    """Dimensions of every DAG on the observables with ``num_edges`` edges."""
    nodes = range(1, num_observed + 1)
    out = set()
    for order in permutations(nodes):
        pairs = [(order[i], order[j]) for i in range(num_observed) for j in range(i + 1, num_observed)]
        for edges in combinations(pairs, num_edges):
            out.add(dimension_oracle(num_observed, edges))
    return out


def test_criterion_7_dimension_column(acceptance):
    checked, underivable, ok = 0, [], True
    for row in TABLE:
        dims = [parameter_dimension(get_model(m)) for m in row.members]
        for m, d in zip(row.members, dims):
            model = get_model(m)
            oracle = dimension_oracle(len(model.observed),
                                      [e for e in model.edges if model.hidden_node not in e])
            ok &= d == oracle
        if row.dim_printed.startswith(">="):
            # open-ended rows: the bound is the least dimension over the row's edge counts
            bound = int(row.dim_printed[2:])
            num_obs = int(row.label[0])
            least_edges = {"2-B": 0, "3-Bx": 1, "4-Bx": 4}[row.label]
            least = min(attainable_dims(num_obs, least_edges))
            ok &= least == bound and all(d >= bound for d in dims)
            checked += 1
            continue
        printed = int(row.dim_printed)
        num_obs = int(row.label[0])
        num_edges = int(row.label[2])
        if printed not in attainable_dims(num_obs, num_edges):
            underivable.append(f"{row.label} prints {printed}, attainable {sorted(attainable_dims(num_obs, num_edges))}")
            continue
        ok &= all(d == printed for d in dims)
        checked += 1
    detail = f"{checked} derivable rows match exactly"
    if underivable:
        detail += "; not derivable: " + "; ".join(underivable)
    acceptance(7, ok, detail)
    assert ok
    assert underivable == [f"{r} prints 25, attainable [15, 17, 23]" for r in ("4-3h", "4-3i")]


# --- criterion 8 ---------------------------------------------------------------

TRANSFER_PAIRS = (("4-3a", "4-3b"), ("4-3e", "4-3f"), ("4-2b", "4-2c"))


def _joint_in_target_labels(source, theta, mapping):
    joint = joint_distribution(source, theta)
    return joint.rename(mapping) if mapping else joint


def test_criterion_8_equivalence_transfer(acceptance):
    summary, ok = [], True
    for a, b in TRANSFER_PAIRS:
        src, dst = get_model(a), get_model(b)
        fwd, back = RELABELINGS.get((a, b)), RELABELINGS.get((b, a))
        renamed = src if not fwd else src.with_edges([(fwd.get(x, x), fwd.get(y, y)) for x, y in src.edges])
        ok &= same_skeleton_and_immoralities(renamed, dst)
        good = 0
        for seed in range(100):
            row_ok = True
            for mode, tol in ((RATIONAL, 0.0), ("float", 1e-12)):
                theta = sample_generic_parameters(src, seed, mode=mode)
                tr = transfer_parameters(src, theta, dst, fwd)
                before = _joint_in_target_labels(src, theta, fwd).reorder(dst.nodes)
                after = joint_distribution(dst, tr.target_params)
                back_tr = transfer_parameters(dst, tr.target_params, src, back)
                if mode == RATIONAL:
                    row_ok &= bool(np.all(before.values == after.values))
                    row_ok &= parameter_distance(back_tr.target_params, theta) == 0 and all(
                        np.all(back_tr.target_params[v] == theta[v]) for v in src.nodes)
                else:
                    row_ok &= max_abs_difference(before, after) <= tol
                    row_ok &= parameter_distance(back_tr.target_params, theta) <= tol
            good += row_ok
        summary.append(f"{a}<->{b}:{good}/100")
        ok &= good == 100
    acceptance(8, ok, "phi preserved, inverse transfer is the identity: " + " ".join(summary))
    assert ok


# --- criterion 9 ---------------------------------------------------------------

ORACLE_MODELS = ROUNDTRIP_MODELS + ("4-3e",)


@pytest.mark.slow
def test_criterion_9_oracle_concordance(acceptance):
    # Instances are the first 10 seeds from 5000 whose draw passes the
    # conditioning screen; the screen looks only at the true parameters.
    start = time.perf_counter()
    summary, ok = [], True
    for mid in ORACLE_MODELS:
        model = get_model(mid)
        seeds = well_conditioned_seeds(model, 10, first_seed=5000)
        skipped = seeds[-1] - 5000 + 1 - len(seeds)
        agree = 0
        for inst, seed in enumerate(seeds):
            tensor = observable_distribution(model, sample_generic_parameters(model, seed))
            expected = len(canonical_classes(model, identify(model, tensor).candidates))
            found = multistart_fiber_search(model, tensor, starts=500, seed=inst)
            agree += found.clusters == expected
        summary.append(f"{mid}:{agree}/10" + (f" ({skipped} ill-conditioned skipped)" if skipped else ""))
        ok &= agree == 10
    elapsed = time.perf_counter() - start
    acceptance(9, ok and elapsed < 600, f"multistart agrees with recovery: {', '.join(summary)} ({elapsed:.0f}s)")
    assert ok
    assert elapsed < 600
