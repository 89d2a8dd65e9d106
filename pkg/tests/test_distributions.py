import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cramerdp.distributions import (
    AtomicDistribution,
    GridCdf,
    cdf_eval,
    cdf_values,
    centre,
    cramer_distance,
    cramer_distance_energy_form,
    dist_from_jsonable,
    dist_to_jsonable,
    from_samples,
    grid_to_atomic,
    make_atomic,
    mean,
    merge_atoms,
    merge_perturbation_bound,
    point_mass,
    to_grid,
    two_point,
)

BERN = two_point(0.0, 1.0, 0.5)


def riemann_cramer(d1, d2, lo, hi, n=400_000):
    """Brute-force Riemann-sum oracle for the squared CDF L2 distance."""
    xs = np.linspace(lo, hi, n, endpoint=False)
    step = (hi - lo) / n
    diff = cdf_values(d1, xs) - cdf_values(d2, xs)
    return math.sqrt(float(np.sum(diff * diff) * step))


def random_atomic(rng, lo=-1.0, hi=1.0, max_atoms=6):
    n = int(rng.integers(1, max_atoms + 1))
    return make_atomic(list(zip(rng.uniform(lo, hi, n), rng.dirichlet(np.ones(n)))))


# ---------------------------------------------------------------------------
# construction

def test_make_atomic_point_mass():
    d = make_atomic([(0.0, 1.0)])
    assert d.atoms == [(0.0, 1.0)]


def test_make_atomic_sorts_and_normalises():
    d = make_atomic([(1.0, 0.5), (0.0, 0.5)])
    assert d.atoms == [(0.0, 0.5), (1.0, 0.5)]


def test_make_atomic_merges_duplicates():
    d = make_atomic([(0.0, 1.0), (0.0, 1.0)])
    assert d.atoms == [(0.0, 1.0)]


@pytest.mark.parametrize("bad", [[], [(0.0, 0.0)], [(float("nan"), 1.0)], [(0.0, -1.0)]])
def test_make_atomic_rejects(bad):
    with pytest.raises(ValueError):
        make_atomic(bad)


def test_atomic_invariants_enforced():
    with pytest.raises(ValueError):
        AtomicDistribution(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        AtomicDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.6]))


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(0, 10)), min_size=1, max_size=20))
@settings(max_examples=300, deadline=None)
def test_make_atomic_properties(pairs):
    if sum(w for _, w in pairs) <= 0:
        with pytest.raises(ValueError):
            make_atomic(pairs)
        return
    d = make_atomic(pairs)
    assert abs(d.ws.sum() - 1.0) <= 1e-12
    assert np.all(d.ws > 0)
    assert np.all(np.diff(d.xs) > 0)


# ---------------------------------------------------------------------------
# CDF evaluation

@pytest.mark.parametrize(
    "dist,x,expected",
    [
        (point_mass(0.0), -0.5, 0.0),
        (point_mass(0.0), 0.0, 1.0),  # right-continuity at the atom
        (BERN, 0.5, 0.5),
        (BERN, 1.0, 1.0),
    ],
)
def test_cdf_eval(dist, x, expected):
    assert cdf_eval(dist, x) == expected


def test_cdf_eval_rejects_nonfinite():
    with pytest.raises(ValueError):
        cdf_eval(point_mass(0.0), float("inf"))


# ---------------------------------------------------------------------------
# Cramer metric, both oracles

def test_cramer_identity():
    assert cramer_distance(point_mass(0.0), point_mass(0.0)) == 0.0


def test_cramer_unit_gap():
    # CDF difference is the indicator of [0, 1)
    assert cramer_distance(point_mass(0.0), point_mass(1.0)) == 1.0


def test_cramer_bernoulli_matches_riemann_oracle():
    exact = cramer_distance(point_mass(0.0), BERN)
    approx = riemann_cramer(point_mass(0.0), BERN, -1.0, 2.0)
    assert abs(approx - 0.5) < 1e-3
    assert exact == pytest.approx(0.5, abs=1e-15)


def test_energy_form_examples():
    assert cramer_distance_energy_form(point_mass(0.0), point_mass(1.0)) == pytest.approx(1.0, abs=1e-15)
    assert cramer_distance_energy_form(BERN, BERN) == 0.0
    for a in (0.25, 0.5, 2.0, 9.0):
        got = cramer_distance_energy_form(point_mass(0.0), point_mass(a))
        assert got == pytest.approx(math.sqrt(a), rel=1e-14)


def test_dual_oracles_agree(rng):
    for _ in range(1000):
        d1, d2 = random_atomic(rng), random_atomic(rng)
        a = cramer_distance(d1, d2)
        b = cramer_distance_energy_form(d1, d2)
        assert abs(a - b) <= 1e-10 * max(1.0, a)


def test_metric_axioms(rng):
    for _ in range(1000):
        d1, d2, d3 = (random_atomic(rng) for _ in range(3))
        d12 = cramer_distance(d1, d2)
        assert d12 == cramer_distance(d2, d1)
        assert cramer_distance(d1, d1) == 0.0
        assert d12 <= cramer_distance(d1, d3) + cramer_distance(d3, d2) + 1e-12


def test_translation_invariance(rng):
    for _ in range(200):
        d1, d2 = random_atomic(rng), random_atomic(rng)
        shift = float(rng.uniform(-3, 3))
        s1 = AtomicDistribution(d1.xs + shift, d1.ws)
        s2 = AtomicDistribution(d2.xs + shift, d2.ws)
        assert cramer_distance(s1, s2) == pytest.approx(cramer_distance(d1, d2), abs=1e-12)


def test_scaling_law(rng):
    for gamma in (0.3, 0.5, 0.9):
        for _ in range(200):
            d1, d2 = random_atomic(rng), random_atomic(rng)
            s1 = AtomicDistribution(gamma * d1.xs, d1.ws)
            s2 = AtomicDistribution(gamma * d2.xs, d2.ws)
            expected = math.sqrt(gamma) * cramer_distance(d1, d2)
            assert cramer_distance(s1, s2) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# centring

def test_centre_reference_is_zero():
    h = centre(point_mass(0.0))
    assert all(h.evaluate(x) == 0.0 for x in (-5.0, -0.1, 0.0, 0.3, 7.0))


def test_centre_step_subtraction():
    h = centre(point_mass(1.0))
    assert h.evaluate(-0.5) == 0.0
    assert h.evaluate(0.0) == -1.0
    assert h.evaluate(0.99) == -1.0
    assert h.evaluate(1.0) == 0.0


def test_centre_bernoulli():
    h = centre(BERN)
    assert h.evaluate(0.5) == -0.5
    assert h.evaluate(-1.0) == 0.0 and h.evaluate(2.0) == 0.0
    xs, cs = h.jumps()
    assert list(xs) == [0.0, 1.0] and list(cs) == [-0.5, 0.5]
    assert h.uncentre() is BERN


# ---------------------------------------------------------------------------
# grids

def test_to_grid_point_mass():
    g = to_grid(point_mass(0.0), -1.0, 1.0, 3)
    assert list(g.values) == [0.0, 1.0, 1.0]


def test_to_grid_bernoulli():
    g = to_grid(BERN, -1.0, 0.5, 6)
    assert list(g.values) == [0.0, 0.0, 0.5, 0.5, 1.0, 1.0]


def test_grid_round_trip_zero_distance():
    g = to_grid(point_mass(0.0), -1.0, 1.0, 3)
    assert cramer_distance(point_mass(0.0), g) == 0.0
    assert grid_to_atomic(g).atoms == [(0.0, 1.0)]


def test_to_grid_requires_coverage():
    with pytest.raises(ValueError):
        to_grid(point_mass(5.0), -1.0, 1.0, 3)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridCdf(0.0, 1.0, np.array([0.5, 0.2, 1.0]))
    with pytest.raises(ValueError):
        GridCdf(0.0, 1.0, np.array([0.0, 0.9]))


def test_grid_refinement_converges():
    # Nested dyadic grids: the sampled CDF increases pointwise toward the
    # true one, so the discretisation error shrinks monotonically, at the
    # sqrt(step) rate that unit mass allows.
    d = make_atomic([(-0.53, 0.3), (0.11, 0.45), (0.77, 0.25)])
    errs, steps = [], []
    for k in range(1, 8):
        step = 2.0 ** (-k)
        n = int(4.0 / step) + 1
        errs.append(cramer_distance(to_grid(d, -2.0, step, n), d))
        steps.append(step)
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    assert all(err <= math.sqrt(step) for err, step in zip(errs, steps))


# ---------------------------------------------------------------------------
# merging

def test_merge_near_duplicates():
    d = make_atomic([(0.0, 0.5), (1e-12, 0.5)])
    m = merge_atoms(d, 1e-9)
    assert m.n_atoms == 1
    assert m.xs[0] == pytest.approx(5e-13, abs=1e-15)
    assert m.ws[0] == 1.0


def test_merge_delta_zero_is_identity(rng):
    d = random_atomic(rng)
    assert merge_atoms(d, 0.0) is d


def test_merge_cluster_bound():
    d = make_atomic([(0.0, 0.5), (0.1, 0.5)])
    m = merge_atoms(d, 0.2)
    assert m.atoms == [(0.05, 1.0)]
    moved = cramer_distance(d, m)
    bound = merge_perturbation_bound(d, 0.2)
    assert bound == pytest.approx(math.sqrt(0.1), abs=1e-12)
    assert moved <= bound


def test_merge_bound_random(rng):
    for _ in range(300):
        d = random_atomic(rng)
        delta = float(rng.uniform(0, 0.3))
        m = merge_atoms(d, delta)
        assert cramer_distance(d, m) <= merge_perturbation_bound(d, delta) + 1e-12
        assert m.mean() == pytest.approx(d.mean(), abs=1e-12)


@given(st.floats(0, 0.5), st.integers(2, 12))
@settings(max_examples=200, deadline=None)
def test_merge_preserves_mass_and_mean(delta, n):
    rng = np.random.Generator(np.random.Philox(n))
    d = make_atomic(list(zip(rng.uniform(-1, 1, n), rng.dirichlet(np.ones(n)))))
    m = merge_atoms(d, delta)
    assert abs(m.ws.sum() - 1.0) <= 1e-12
    assert m.mean() == pytest.approx(d.mean(), abs=1e-12)


# ---------------------------------------------------------------------------
# serialization

def test_json_round_trip_bit_exact(rng):
    for _ in range(50):
        d = random_atomic(rng)
        back = dist_from_jsonable(json.loads(json.dumps(dist_to_jsonable(d))))
        assert np.array_equal(back.xs, d.xs)
        assert np.array_equal(back.ws, d.ws)


def test_json_round_trip_awkward_floats():
    d = make_atomic([(1.0 / 3.0, 0.1), (math.pi, 0.2), (1e-17 + 2.0, 0.7)])
    back = dist_from_jsonable(dist_to_jsonable(d))
    assert np.array_equal(back.xs, d.xs) and np.array_equal(back.ws, d.ws)


def test_json_grid_round_trip():
    g = to_grid(BERN, -1.0, 0.5, 6)
    back = dist_from_jsonable(dist_to_jsonable(g))
    assert isinstance(back, GridCdf)
    assert back.x_min == g.x_min and back.step == g.step
    assert np.array_equal(back.values, g.values)


def test_json_rejects_garbage():
    with pytest.raises(ValueError):
        dist_from_jsonable({"blob": 1})


# ---------------------------------------------------------------------------
# misc helpers

def test_from_samples_merges_and_weights():
    d = from_samples([2.0, 1.0, 2.0, 2.0])
    assert d.atoms == [(1.0, 0.25), (2.0, 0.75)]


def test_mean():
    assert mean(BERN) == 0.5
    assert mean(to_grid(BERN, -1.0, 0.5, 6)) == 0.5
