import cmath
import math

import numpy as np
import pytest

from cramerdp.bellman import BellmanConfig, bellman_apply, evaluate_policy, field_distance
from cramerdp.distributions import cramer_distance, make_atomic, point_mass, two_point
from cramerdp.mdp import ReturnField
from cramerdp.spectral import (
    DEFAULT_EPS_LIST,
    EpsGeometry,
    QuadratureSpec,
    SignedExpSum,
    cdf_diff_fourier,
    cdf_difference_jumps,
    centred_jumps,
    centred_norm_quadrature,
    char_fn_eval,
    cramer_via_spectrum,
    eps_sweep,
    exp_sum,
    h_eps_inner,
    h_eps_inner_quadrature,
    h_eps_norm,
    induced_field_distance,
    lift_V,
    lift_V_inv,
    reg_distance,
    spectral_bellman_apply,
    spectral_bellman_direct,
    spectral_embed,
    transport_U,
    transport_U_inv,
    transport_V,
)
from cramerdp.verify import exact_dag_fixed_point, random_atomic, random_field

BERN = two_point(0.0, 1.0, 0.5)


def closed_form_delta_pair(a, eps):
    """Squared regularised distance between point masses at 0 and a."""
    root = math.sqrt(eps)
    return (1.0 - math.exp(-a * root)) / root


def segment_fourier_oracle(p1, p2, omega, nodes_per_wave=160):
    """Numerical Fourier transform of H = F1 - F2 by per-segment Simpson rule."""
    h = cdf_difference_jumps(p1, p2)
    levels = np.cumsum(h.cs)[:-1]
    total = 0.0 + 0.0j
    for lam, a, b in zip(levels, h.xs[:-1], h.xs[1:]):
        if lam == 0.0:
            continue
        n = max(100, int(abs(omega) * (b - a) / (4 * math.pi) * nodes_per_wave) + 1)
        xs = np.linspace(a, b, 2 * n + 1)
        vals = lam * np.exp(-1j * omega * xs)
        total += (xs[1] - xs[0]) / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-2:2].sum())
    return total / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# exponential sums and embeddings

def test_char_fn_examples():
    assert char_fn_eval(point_mass(0.0), 3.7) == 1.0
    p = 0.3
    d = two_point(0.0, 1.0, p)
    w = 1.234
    assert cmath.isclose(char_fn_eval(d, w), (1 - p) + p * cmath.exp(1j * w))
    assert abs(char_fn_eval(make_atomic([(0.3, 0.5), (-1.2, 0.5)]), 0.0) - 1.0) <= 1e-15


def test_embed_reference_is_zero():
    assert spectral_embed(point_mass(0.0)).is_zero


def test_embed_point_mass():
    e = spectral_embed(point_mass(2.5))
    assert e.terms == [(0.0, -1.0), (2.5, 1.0)]
    w = 0.8
    assert cmath.isclose(complex(e.evaluate(w)), cmath.exp(1j * w * 2.5) - 1.0)


def test_embed_bernoulli():
    assert spectral_embed(BERN).terms == [(0.0, -0.5), (1.0, 0.5)]


def test_exp_sum_merges_and_drops_zeros():
    s = exp_sum([(1.0, 0.5), (0.0, -1.0), (1.0, -0.5), (0.0, 1.0)])
    assert s.is_zero


def test_exp_sum_validation():
    with pytest.raises(ValueError):
        SignedExpSum(np.array([0.0, 0.0]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        SignedExpSum(np.array([0.0]), np.array([float("nan")]))


# ---------------------------------------------------------------------------
# regularised inner product, closed form vs quadrature

def test_inner_zero_sum():
    z = exp_sum([])
    u = spectral_embed(point_mass(1.0))
    assert h_eps_inner(z, u, EpsGeometry(1.0)) == 0.0


def test_inner_closed_form_point_pair():
    for a in (0.5, 1.0, 2.0):
        for eps in (1.0, 1e-2, 1e-4):
            u = spectral_embed(point_mass(a)) - spectral_embed(point_mass(0.0))
            got = h_eps_inner(u, u, EpsGeometry(eps))
            assert got == pytest.approx(closed_form_delta_pair(a, eps), rel=1e-13)


def test_inner_frozen_value():
    u = spectral_embed(point_mass(1.0)) - spectral_embed(point_mass(0.0))
    assert h_eps_inner(u, u, EpsGeometry(1.0)) == pytest.approx(0.6321205588285577, abs=1e-12)


def test_inner_matches_quadrature(rng):
    geoms = [EpsGeometry(e) for e in (1.0, 1e-2, 1e-4)]
    for _ in range(20):
        p1, p2 = random_atomic(rng, -1, 1), random_atomic(rng, -1, 1)
        u = spectral_embed(p1) - spectral_embed(p2)
        for geom in geoms:
            exact = h_eps_inner(u, u, geom)
            approx = h_eps_inner_quadrature(u, u, geom)
            assert abs(exact - approx) <= 1e-6 * max(abs(exact), 1e-9)


def test_eps_geometry_validation():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            EpsGeometry(bad)


# ---------------------------------------------------------------------------
# regularised distances and sweeps

def test_reg_distance_identity(rng):
    p = random_atomic(rng, -1, 1)
    assert reg_distance(p, p, EpsGeometry(1.0)) == 0.0


def test_reg_distance_frozen_value():
    got = reg_distance(point_mass(0.0), point_mass(1.0), EpsGeometry(1.0))
    assert got == pytest.approx(math.sqrt(1.0 - math.exp(-1.0)), abs=1e-12)
    assert got == pytest.approx(0.7950600976206501, abs=1e-12)


def test_reg_distance_below_cramer(rng):
    for _ in range(100):
        p1, p2 = random_atomic(rng, -1, 1), random_atomic(rng, -1, 1)
        d = cramer_distance(p1, p2)
        for eps in (1.0, 1e-3, 1e-6):
            assert reg_distance(p1, p2, EpsGeometry(eps)) <= d + 1e-12


def test_eps_sweep_monotone_to_cramer():
    rows = eps_sweep(point_mass(0.0), point_mass(1.0), DEFAULT_EPS_LIST)
    values = [r.reg_distance for r in rows]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] <= 1.0
    assert rows[-1].gap == pytest.approx(1.0 - math.sqrt(closed_form_delta_pair(1.0, 1e-8)), abs=1e-12)
    assert rows[-1].gap < 5e-5


def test_eps_sweep_identical_pair_zero():
    rows = eps_sweep(BERN, BERN, (1.0, 1e-4))
    assert all(r.reg_distance == 0.0 and r.cdf_distance == 0.0 for r in rows)


def test_eps_sweep_bernoulli_limit():
    rows = eps_sweep(point_mass(0.0), BERN, (1.0, 1e-4, 1e-8, 1e-12))
    assert rows[-1].reg_distance == pytest.approx(0.5, abs=1e-3)
    assert all(r.reg_distance <= 0.5 for r in rows)


def test_eps_sweep_rejects_bad_lists():
    with pytest.raises(ValueError):
        eps_sweep(BERN, BERN, (1e-4, 1.0))
    with pytest.raises(ValueError):
        eps_sweep(BERN, BERN, (1.0, -1e-3))
    with pytest.raises(ValueError):
        eps_sweep(BERN, BERN, ())


# ---------------------------------------------------------------------------
# Fourier formula for CDF differences

def test_cdf_diff_fourier_point_masses():
    a = 1.7
    for w in (0.31, 2.0, -4.5):
        got = cdf_diff_fourier(point_mass(0.0), point_mass(a), w)
        expected = (1.0 - cmath.exp(-1j * w * a)) / (1j * w * math.sqrt(2 * math.pi))
        assert cmath.isclose(got, expected, rel_tol=1e-12)


def test_cdf_diff_fourier_identical_zero():
    assert cdf_diff_fourier(BERN, BERN, 1.0) == 0.0


def test_cdf_diff_fourier_frozen_value():
    got = cdf_diff_fourier(point_mass(0.0), point_mass(1.0), math.pi)
    expected = 2.0 / (1j * math.pi * math.sqrt(2 * math.pi))
    assert cmath.isclose(got, expected, rel_tol=1e-12)


def test_cdf_diff_fourier_rejects_zero_frequency():
    with pytest.raises(ValueError):
        cdf_diff_fourier(BERN, point_mass(0.0), 0.0)


def test_cdf_diff_fourier_matches_segment_quadrature(rng):
    for _ in range(10):
        p1, p2 = random_atomic(rng, -1, 1), random_atomic(rng, -1, 1)
        for w in rng.uniform(0.1, 20.0, size=8) * rng.choice([-1.0, 1.0], size=8):
            got = cdf_diff_fourier(p1, p2, float(w))
            oracle = segment_fourier_oracle(p1, p2, float(w))
            assert abs(got - oracle) <= 1e-6 * max(abs(oracle), 1e-9)


# ---------------------------------------------------------------------------
# spectral Cramer formula

def test_spectrum_point_pair_within_budget():
    est = cramer_via_spectrum(point_mass(0.0), point_mass(1.0))
    assert abs(est.squared - 1.0) <= est.error_budget
    assert est.error_budget <= 1e-3


def test_spectrum_identical_zero():
    est = cramer_via_spectrum(BERN, BERN)
    assert est.distance == 0.0 and est.error_budget == 0.0


def test_spectrum_bernoulli_within_budget():
    est = cramer_via_spectrum(point_mass(0.0), BERN)
    assert abs(est.squared - 0.25) <= est.error_budget


def test_spectrum_requires_positive_exclusion():
    with pytest.raises(ValueError):
        cramer_via_spectrum(BERN, point_mass(0.0), QuadratureSpec(omega_min=0.0))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(omega_max=1e-7, omega_min=1e-6)
    with pytest.raises(ValueError):
        QuadratureSpec(panels_per_decade=0)


# ---------------------------------------------------------------------------
# transports

def test_transport_U_point_pair():
    h = cdf_difference_jumps(point_mass(0.0), point_mass(1.5))
    assert h.terms == [(0.0, 1.0), (1.5, -1.0)]  # H = 1 on [0, 1.5)
    f = transport_U(h)
    diff = spectral_embed(point_mass(0.0)) - spectral_embed(point_mass(1.5))
    assert f.terms == diff.terms


def test_transport_U_zero():
    z = exp_sum([])
    assert transport_U(z).is_zero and transport_U_inv(z).is_zero


def test_transport_round_trip(rng):
    for _ in range(50):
        h = cdf_difference_jumps(random_atomic(rng, -1, 1), random_atomic(rng, -1, 1))
        back = transport_U_inv(transport_U(h))
        assert np.array_equal(back.xs, h.xs) and np.array_equal(back.cs, h.cs)


def test_transport_rejects_noncancelling():
    with pytest.raises(ValueError):
        transport_U(exp_sum([(0.0, 1.0), (1.0, 0.5)]))


def test_transport_U_preserves_norm(rng):
    geom = EpsGeometry(1.0)
    for _ in range(10):
        p1, p2 = random_atomic(rng, -1, 1), random_atomic(rng, -1, 1)
        h = cdf_difference_jumps(p1, p2)
        if h.is_zero:
            continue
        spectral_sq = h_eps_norm(transport_U(h), geom) ** 2
        cdf_sq = centred_norm_quadrature(h, geom)
        assert abs(spectral_sq - cdf_sq) <= 1e-6 * max(spectral_sq, 1e-9)


def test_transport_V_equals_embedding(rng):
    assert transport_V(point_mass(0.0)).is_zero
    assert transport_V(point_mass(1.0)).terms == [(0.0, -1.0), (1.0, 1.0)]
    for _ in range(50):
        d = random_atomic(rng, -1, 1)
        assert transport_V(d).terms == spectral_embed(d).terms
        assert centred_jumps(d).terms == spectral_embed(d).terms


# ---------------------------------------------------------------------------
# lifted transports and conjugated dynamics

def test_lift_round_trip(rng):
    f = random_field(rng, 2, 2, (-1.0, 1.0))
    back = lift_V_inv(lift_V(f))
    for s in range(2):
        for a in range(2):
            assert back.entry(s, a).atoms == f.entry(s, a).atoms


def test_lift_of_zero_field():
    f = ReturnField.constant(point_mass(0.0), 2, 2, (-1.0, 1.0))
    mu = lift_V(f)
    assert all(mu.entry(s, a).is_zero for s in range(2) for a in range(2))


def test_lift_inv_rejects_non_embeddings():
    from cramerdp.spectral import SpectralField

    bad = SpectralField(((exp_sum([(0.0, -0.5), (1.0, 0.5)]),),), (-1.0, 1.0))
    lift_V_inv(bad)  # this one is a valid embedding (bernoulli)
    worse = SpectralField(((exp_sum([(0.5, -0.7), (1.0, 0.7)]),),), (-1.0, 1.0))
    with pytest.raises(ValueError):
        lift_V_inv(worse)


def test_spectral_fixed_point_invariance(chain3):
    mdp, pol = chain3
    star = exact_dag_fixed_point(mdp, pol)
    mu = lift_V(star)
    out = spectral_bellman_apply(mu, mdp, pol, BellmanConfig())
    assert induced_field_distance(out, mu) <= 1e-12


def test_spectral_single_state_fixed_point(single_state):
    mdp, pol = single_state
    star = ReturnField.constant(point_mass(2.0), 1, 1, mdp.return_interval)
    mu = lift_V(star)
    out = spectral_bellman_apply(mu, mdp, pol, BellmanConfig())
    assert induced_field_distance(out, mu) == 0.0


def test_direct_and_conjugation_paths_agree(chain3, rng):
    mdp, pol = chain3
    for _ in range(20):
        f = random_field(rng, mdp.n_states, mdp.n_actions, mdp.return_interval)
        mu = lift_V(f)
        conj = spectral_bellman_apply(mu, mdp, pol, BellmanConfig())
        direct = spectral_bellman_direct(mu, mdp, pol)
        assert induced_field_distance(conj, direct) <= 1e-12
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                assert np.array_equal(conj.entry(s, a).xs, direct.entry(s, a).xs)
                assert np.allclose(conj.entry(s, a).cs, direct.entry(s, a).cs, atol=1e-14)


def test_induced_distance_is_pullback(rng):
    f1 = random_field(rng, 2, 2, (-1.0, 1.0))
    f2 = random_field(rng, 2, 2, (-1.0, 1.0))
    assert induced_field_distance(lift_V(f1), lift_V(f2)) == pytest.approx(
        field_distance(f1, f2), abs=1e-14
    )
    mu = lift_V(f1)
    assert induced_field_distance(mu, mu) == 0.0


def test_induced_distance_single_entry_difference():
    f1 = ReturnField(((point_mass(0.0), point_mass(0.0)),), (-2.0, 2.0))
    f2 = ReturnField(((point_mass(0.0), point_mass(1.0)),), (-2.0, 2.0))
    assert induced_field_distance(lift_V(f1), lift_V(f2)) == 1.0
