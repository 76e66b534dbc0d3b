import numpy as np
import pytest

from anisoeig import norms
from anisoeig.errors import ConfigurationError, DomainError, SingularityError
from anisoeig.norms import eval_norm, eval_tensors, regularize

ALL_SPECS = [
    norms.euclidean(),
    norms.p_norm(1.5),
    norms.p_norm(3.0),
    norms.p_norm(4.0),
    norms.quadratic([[4.0, 1.0], [1.0, 2.0]]),
    norms.regularize(norms.p_norm(4.0), 1e-3),
]


def safe_point(rng, spec):
    """Random xi bounded away from the coordinate axes (p-norm singularities)."""
    while True:
        xi = rng.uniform(-2.0, 2.0, spec.n)
        if np.linalg.norm(xi) > 0.3 and np.min(np.abs(xi)) > 0.05:
            return xi


def test_euclidean_pythagorean():
    assert eval_norm(norms.euclidean(), [3.0, 4.0]) == pytest.approx(5.0, abs=0)


def test_p4_closed_form():
    assert eval_norm(norms.p_norm(4), [1.0, 1.0]) == pytest.approx(2.0**0.25, rel=1e-15)


def test_homogeneity_p3_example():
    spec = norms.p_norm(3)
    xi = np.array([1.0, 2.0])
    assert eval_norm(spec, -3.0 * xi) == pytest.approx(3.0 * eval_norm(spec, xi), rel=1e-14)


def test_norm_at_origin_is_zero():
    for spec in ALL_SPECS:
        assert eval_norm(spec, np.zeros(spec.n)) == 0.0


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_homogeneity_sweep(spec):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        xi = rng.standard_normal(spec.n)
        t = rng.uniform(-5.0, 5.0)
        lhs = eval_norm(spec, t * xi)
        assert abs(lhs - abs(t) * eval_norm(spec, xi)) <= 1e-12 * max(lhs, 1e-30)


def test_euclidean_tensors_example():
    t = eval_tensors(norms.euclidean(), [3.0, 4.0])
    np.testing.assert_allclose(t.grad, [0.6, 0.8], rtol=1e-15)
    np.testing.assert_allclose(t.a, np.eye(2), atol=1e-15)


def test_quadratic_tensors_example():
    t = eval_tensors(norms.quadratic(np.diag([4.0, 1.0])), [1.0, 0.0])
    assert t.value == pytest.approx(2.0)
    np.testing.assert_allclose(t.grad, [2.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(t.a, np.diag([4.0, 1.0]), atol=1e-15)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_euler_identities_sweep(spec):
    rng = np.random.default_rng(2)
    for _ in range(1000):
        xi = safe_point(rng, spec)
        t = eval_tensors(spec, xi)
        assert abs(t.grad @ xi - t.value) <= 1e-10 * t.value
        np.testing.assert_allclose(t.a @ xi, t.value * t.grad,
                                   atol=1e-10 * t.value, rtol=1e-10)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_a3_contracts_to_zero(spec):
    rng = np.random.default_rng(3)
    for _ in range(200):
        xi = safe_point(rng, spec)
        t = eval_tensors(spec, xi, want_a3=True)
        assert np.max(np.abs(np.einsum("ijk,k->ij", t.a3, xi))) <= 1e-10


def _fd_gradient(f, xi, h=1e-5):
    g = np.zeros_like(xi)
    for i in range(len(xi)):
        e = np.zeros_like(xi)
        e[i] = h
        g[i] = (f(xi + e) - f(xi - e)) / (2 * h)
    return g


def _fd_hessian(f, xi, h=1e-4):
    n = len(xi)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (
                f(xi + ei + ej) - f(xi + ei - ej) - f(xi - ei + ej) + f(xi - ei - ej)
            ) / (4 * h * h)
    return H


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_gradient_and_hessian_match_finite_differences(spec):
    rng = np.random.default_rng(4)
    for _ in range(20):
        xi = safe_point(rng, spec)
        t = eval_tensors(spec, xi)
        fd_grad = _fd_gradient(lambda z: eval_norm(spec, z), xi)
        np.testing.assert_allclose(t.grad, fd_grad, rtol=1e-6, atol=1e-8)
        halfsq = lambda z: 0.5 * eval_norm(spec, z) ** 2
        fd_hess = _fd_hessian(halfsq, xi)
        scale = np.max(np.abs(t.a))
        np.testing.assert_allclose(t.a, fd_hess, rtol=1e-5, atol=1e-6 * scale)


def test_p4_gradient_spec_example():
    spec = norms.p_norm(4)
    xi = np.array([1.0, 2.0])
    t = eval_tensors(spec, xi)
    fd = _fd_gradient(lambda z: eval_norm(spec, z), xi, h=1e-5)
    np.testing.assert_allclose(t.grad, fd, rtol=1e-7)


def test_a3_matches_finite_differences_of_hessian():
    spec = norms.p_norm(4)
    rng = np.random.default_rng(5)
    for _ in range(10):
        xi = safe_point(rng, spec)
        t = eval_tensors(spec, xi, want_a3=True)
        h = 1e-5
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (eval_tensors(spec, xi + e).a - eval_tensors(spec, xi - e).a) / (2 * h)
            np.testing.assert_allclose(t.a3[:, :, k], fd, rtol=1e-5,
                                       atol=1e-6 * np.max(np.abs(t.a3) + 1.0))


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.p or ""))
def test_hessian_positive_semidefinite(spec):
    rng = np.random.default_rng(6)
    strongly = spec.family in ("euclidean", "quadratic", "regularized")
    for _ in range(200):
        xi = safe_point(rng, spec)
        w = np.linalg.eigvalsh(eval_tensors(spec, xi).a)
        assert w[0] >= -1e-12 * max(1.0, w[-1])
        if strongly:
            assert w[0] > 0.0


def test_regularize_euclidean_closed_form():
    spec = regularize(norms.euclidean(), 1.0)
    for xi in ([1.0, 0.0], [3.0, 4.0], [-2.0, 0.5]):
        assert eval_norm(spec, xi) == pytest.approx(np.sqrt(2.0) * np.linalg.norm(xi), rel=1e-14)


def test_regularize_perturbation_bound():
    # sqrt(F^2 + eps |xi|^2) - F <= eps |xi|^2 / (2 F)
    base = norms.p_norm(4)
    eps = 1e-4
    spec = regularize(base, eps)
    xi = np.array([1.0, 1.0])
    f0 = eval_norm(base, xi)
    fe = eval_norm(spec, xi)
    assert f0 <= fe <= f0 + eps * (xi @ xi) / (2 * f0)
    assert fe <= 2.0**0.25 + 1e-4


def test_regularized_hessian_floor():
    eps = 1e-3
    spec = regularize(norms.p_norm(4), eps)
    rng = np.random.default_rng(7)
    for _ in range(50):
        xi = rng.standard_normal(2)
        xi /= np.linalg.norm(xi)
        assert np.linalg.eigvalsh(eval_tensors(spec, xi).a)[0] >= eps - 1e-12


def test_regularization_stacks_additively():
    nested = regularize(regularize(norms.euclidean(), 0.5), 0.5)
    assert eval_norm(nested, [1.0, 1.0]) == pytest.approx(2.0, rel=1e-14)


def test_uniform_convergence_as_eps_vanishes():
    base = norms.p_norm(3)
    rng = np.random.default_rng(8)
    xs = rng.standard_normal((100, 2))
    xs /= np.linalg.norm(xs, axis=1)[:, None]
    prev = np.inf
    for eps in (1e-2, 1e-4, 1e-6):
        spec = regularize(base, eps)
        gap = max(abs(eval_norm(spec, x) - eval_norm(base, x)) for x in xs)
        assert gap < prev
        prev = gap
    assert prev <= 1e-6


@pytest.mark.parametrize(
    "bad",
    [
        dict(family="p_norm", p=1.0),
        dict(family="p_norm", p=0.5),
        dict(family="quadratic", A=np.array([[1.0, 2.0], [2.0, 1.0]])),  # indefinite
        dict(family="quadratic", A=np.array([[1.0, 0.5], [0.0, 1.0]])),  # asymmetric
    ],
)
def test_malformed_specs_rejected(bad):
    with pytest.raises(ConfigurationError):
        norms.NormSpec(n=2, **bad)


def test_regularize_rejects_nonpositive_eps():
    with pytest.raises(ConfigurationError):
        regularize(norms.euclidean(), 0.0)


def test_tensors_rejected_at_origin():
    with pytest.raises(DomainError):
        eval_tensors(norms.euclidean(), [0.0, 0.0])


def test_pnorm_axis_singularities():
    with pytest.raises(SingularityError):
        eval_tensors(norms.p_norm(1.5), [1.0, 0.0])
    with pytest.raises(SingularityError):
        eval_tensors(norms.p_norm(2.5), [1.0, 0.0], want_a3=True)
    # p > 3: third derivatives extend continuously across the axes
    t = eval_tensors(norms.p_norm(4), [1.0, 0.0], want_a3=True)
    assert np.all(np.isfinite(t.a3))


def test_min_gauge_ratio_lower_bounds_norm():
    rng = np.random.default_rng(9)
    for spec in ALL_SPECS:
        c = norms.min_gauge_ratio(spec)
        for _ in range(200):
            xi = rng.standard_normal(spec.n)
            assert eval_norm(spec, xi) >= c * np.linalg.norm(xi) - 1e-12
