import numpy as np
import pytest

from anisoeig import dual_geometry as dg
from anisoeig import norms
from anisoeig.errors import DomainError

CLOSED_FORM_SPECS = [
    norms.euclidean(),
    norms.p_norm(1.5),
    norms.p_norm(3.0),
    norms.p_norm(4.0),
    norms.quadratic([[4.0, 1.0], [1.0, 2.0]]),
]


def test_euclidean_self_dual():
    d = dg.dual_norm(norms.euclidean(), [3.0, 4.0])
    assert d.value == pytest.approx(5.0, abs=0)
    assert d.certified_gap == 0.0


def test_p2_equals_euclidean():
    rng = np.random.default_rng(0)
    sp = norms.p_norm(2.0)
    eu = norms.euclidean()
    for _ in range(100):
        x = rng.standard_normal(2)
        assert dg.dual_norm(sp, x).value == pytest.approx(dg.dual_norm(eu, x).value, rel=1e-12)


def test_p4_dual_closed_form_and_brute_force():
    spec = norms.p_norm(4)
    x = np.array([1.0, 1.0])
    val = dg.dual_norm(spec, x).value
    assert val == pytest.approx(2.0**0.75, rel=1e-12)
    # brute force: sup <x, xi>/F(xi) over a million directions
    theta = np.linspace(0.0, 2.0 * np.pi, 10**6, endpoint=False)
    xi = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    fv = norms.batch_value(norms._lower(spec), xi)
    brute = np.max(xi @ x / fv)
    assert val == pytest.approx(brute, abs=1e-4)


def test_dual_of_quadratic_is_inverse_quadratic():
    A = np.array([[4.0, 1.0], [1.0, 2.0]])
    spec = norms.quadratic(A)
    inv = norms.quadratic(np.linalg.inv(A))
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.standard_normal(2)
        assert dg.dual_norm(spec, x).value == pytest.approx(
            norms.eval_norm(inv, x), rel=1e-10)


@pytest.mark.parametrize("spec", CLOSED_FORM_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_biduality_closed_form(spec):
    dual = dg.dual_spec(spec)
    rng = np.random.default_rng(2)
    for _ in range(200):
        x = rng.standard_normal(2)
        assert dg.dual_norm(dual, x).value == pytest.approx(
            norms.eval_norm(spec, x), rel=1e-6)


def test_biduality_regularized_numeric():
    spec = norms.regularize(norms.p_norm(4), 1e-2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal(2)
        assert dg.bidual_value(spec, x) == pytest.approx(
            norms.eval_norm(spec, x), rel=1e-6)


@pytest.mark.parametrize("spec", CLOSED_FORM_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_numeric_path_matches_closed_form(spec):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((200, 2))
    vals, maxi, gaps = dg.dual_norm_many(spec, X, force_numeric=True)
    ref = dg.dual_norm_many(spec, X)[0]
    np.testing.assert_allclose(vals, ref, rtol=1e-8)
    assert np.all(gaps <= 1e-8 * vals)
    # the reported maximizer attains the value on the unit sphere of F
    for x, v, xi, g in zip(X, vals, maxi, gaps):
        f = norms.eval_norm(spec, xi)
        assert x @ xi / f >= v - g - 1e-12 * v
        assert f == pytest.approx(1.0, rel=1e-9)


def test_dual_of_zero_vector():
    for spec in CLOSED_FORM_SPECS:
        d = dg.dual_norm(spec, np.zeros(2))
        assert d.value == 0.0 and d.certified_gap == 0.0


def test_regularized_numeric_dual_sandwich():
    # F_eps >= max(F, sqrt(eps)|.|)  =>  F0_eps <= min(F0, |.|/sqrt(eps))
    base = norms.p_norm(4)
    eps = 1e-2
    spec = norms.regularize(base, eps)
    q = dg.dual_spec(base)
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.standard_normal(2)
        v = dg.dual_norm(spec, x).value
        assert v <= min(norms.eval_norm(q, x), np.linalg.norm(x) / np.sqrt(eps)) + 1e-12
        assert v > 0.0


def test_f_distance_examples():
    assert dg.f_distance(norms.euclidean(), [0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)
    for spec in CLOSED_FORM_SPECS:
        assert dg.f_distance(spec, [0.3, -0.4], [0.3, -0.4]) == 0.0
    assert dg.f_distance(norms.p_norm(4), [0.0, 0.0], [1.0, 1.0]) == pytest.approx(
        2.0**0.75, rel=1e-12)


def test_f_distance_symmetry_and_triangle():
    rng = np.random.default_rng(6)
    for spec in CLOSED_FORM_SPECS:
        a, b, c = rng.standard_normal((3, 1000, 2))
        dab = dg.dual_norm_many(spec, b - a)[0]
        dba = dg.dual_norm_many(spec, a - b)[0]
        dac = dg.dual_norm_many(spec, c - a)[0]
        dcb = dg.dual_norm_many(spec, b - c)[0]
        np.testing.assert_allclose(dab, dba, rtol=1e-12)
        assert np.all(dab <= dac + dcb + 1e-10)


def test_wulff_contains():
    assert dg.wulff_contains(norms.euclidean(), [0.0, 0.0], 1.0, [0.6, 0.8])
    for spec in CLOSED_FORM_SPECS:
        assert dg.wulff_contains(spec, [0.2, 0.3], 0.0, [0.2, 0.3])
    # F0(0.9, 0.9) = 0.9 * 2^(3/4) ~ 1.514 > 1
    assert not dg.wulff_contains(norms.p_norm(4), [0.0, 0.0], 1.0, [0.9, 0.9])
    with pytest.raises(DomainError):
        dg.wulff_contains(norms.euclidean(), [0.0, 0.0], -0.1, [0.0, 0.0])


def test_cauchy_schwarz_examples():
    e = norms.euclidean()
    assert dg.cauchy_schwarz_gap(e, [1.0, 0.0], [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert dg.cauchy_schwarz_gap(e, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_cauchy_schwarz_tight_at_dual_maximizer():
    spec = norms.p_norm(4)
    xi = np.array([1.0, 2.0])
    # the pairing is maximized by eta proportional to the gradient direction
    t = norms.eval_tensors(spec, xi)
    eta = t.grad
    gap = dg.cauchy_schwarz_gap(spec, xi, eta)
    assert abs(gap) <= 1e-8 * norms.eval_norm(spec, xi) * dg.dual_norm(spec, eta).value


@pytest.mark.parametrize("spec", CLOSED_FORM_SPECS + [norms.regularize(norms.p_norm(4), 1e-3)],
                         ids=lambda s: s.family + str(s.p or ""))
def test_cauchy_schwarz_nonnegative_sweep(spec):
    rng = np.random.default_rng(7)
    xi = rng.standard_normal((10**4, 2))
    eta = rng.standard_normal((10**4, 2))
    fvals = norms.batch_value(norms._lower(spec), xi)
    dvals = dg.dual_norm_many(spec, eta)[0]
    gaps = fvals * dvals - np.einsum("ij,ij->i", xi, eta)
    assert np.all(gaps >= -1e-10 * fvals * dvals)


def test_deterministic_given_seed():
    spec = norms.regularize(norms.p_norm(3), 1e-2)
    x = np.array([0.7, -1.3])
    a = dg.dual_norm(spec, x, seed=42)
    b = dg.dual_norm(spec, x, seed=42)
    assert a.value == b.value and np.array_equal(a.maximizer, b.maximizer)
