import numpy as np
import pytest
from scipy.integrate import quad

from temrec.fourier_model import (
    ChannelSignal,
    CoefficientMatrix,
    ModelConsistencyError,
    PeriodicExpBasis,
    SignalEnsemble,
    SincBasis,
    dense_grid,
    random_ensemble,
)


def hermitian_row(rng, size):
    c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return 0.5 * (c + np.conj(c[::-1]))


# ---------------------------------------------------------------- evaluation

def test_periodic_order_zero_is_constant():
    basis = PeriodicExpBasis(1.0, 2)
    assert basis.order_of(3) == 0
    assert basis.evaluate(3, 0.37) == pytest.approx(1.0 + 0.0j)


def test_sinc_peak_equals_omega_over_pi():
    basis = SincBasis(np.pi, [0.0])
    assert basis.evaluate(1, 0.0) == pytest.approx(1.0)


def test_sinc_zero_at_integer():
    basis = SincBasis(np.pi, [0.0])
    assert basis.evaluate(1, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_basis_index_out_of_range():
    basis = PeriodicExpBasis(1.0, 1)
    with pytest.raises(IndexError):
        basis.evaluate(0, 0.0)
    with pytest.raises(IndexError):
        basis.evaluate(4, 0.0)


def test_index_to_order_mapping():
    basis = PeriodicExpBasis(2.0, 3)
    assert [basis.order_of(k) for k in range(1, 8)] == [-3, -2, -1, 0, 1, 2, 3]


def test_eval_signal_zero_coefficients():
    basis = PeriodicExpBasis(1.0, 2)
    sig = ChannelSignal(basis, np.zeros(5, complex))
    assert sig.value(1.234) == 0.0


def test_eval_signal_constant():
    basis = PeriodicExpBasis(1.0, 2)
    coeffs = np.zeros(5, complex)
    coeffs[2] = 2.5  # order 0
    sig = ChannelSignal(basis, coeffs)
    assert sig.value(0.8) == pytest.approx(2.5)


def test_eval_signal_matches_extended_precision_oracle():
    # frozen from a 50-digit term-by-term summation (mpmath) of the same
    # rng(42)-drawn Hermitian coefficients at t = 0.37
    rng = np.random.default_rng(42)
    coeffs = hermitian_row(rng, 5)
    sig = ChannelSignal(PeriodicExpBasis(1.0, 2), coeffs)
    assert sig.value(0.37) == pytest.approx(1.4755700935384134, abs=1e-12)


def test_eval_signal_rejects_non_real():
    basis = PeriodicExpBasis(1.0, 1)
    coeffs = np.array([0.0, 0.0, 1.0], dtype=complex)  # lone positive order
    sig = ChannelSignal(basis, coeffs)
    with pytest.raises(ModelConsistencyError):
        sig.value(0.3)


# ------------------------------------------------------------ antiderivative

def test_antiderivative_order_zero_is_elapsed_time():
    basis = PeriodicExpBasis(1.0, 1)
    assert basis.antiderivative(2, 0.0, 2.0) == pytest.approx(2.0 + 0.0j)


def test_antiderivative_full_period_vanishes():
    basis = PeriodicExpBasis(1.0, 1)
    assert basis.antiderivative(3, 0.0, 1.0) == pytest.approx(0.0 + 0.0j, abs=1e-14)


def test_antiderivative_rejects_reversed_interval():
    basis = PeriodicExpBasis(1.0, 1)
    with pytest.raises(ValueError):
        basis.antiderivative(2, 1.0, 0.5)


def test_sinc_antiderivative_matches_quadrature():
    basis = SincBasis(np.pi, [0.0])

    def f(u):
        return 1.0 if u == 0 else np.sin(np.pi * u) / (np.pi * u)

    expected, _ = quad(f, -8.0, 8.0, epsabs=1e-13, limit=300)
    assert basis.antiderivative(1, -8.0, 8.0) == pytest.approx(expected, abs=1e-10)


def test_antiderivative_additive():
    rng = np.random.default_rng(1)
    for basis in (PeriodicExpBasis(1.3, 3), SincBasis(2.0, [-1.0, 0.5, 2.0])):
        for _ in range(20):
            t0, t1, t2 = np.sort(rng.uniform(-3, 3, 3))
            for k in range(1, basis.size + 1):
                whole = basis.antiderivative(k, t0, t2)
                split = basis.antiderivative(k, t0, t1) + basis.antiderivative(k, t1, t2)
                assert abs(whole - split) < 1e-12


def test_periodic_antiderivative_matches_quadrature_100_pairs():
    basis = PeriodicExpBasis(0.7, 2)
    rng = np.random.default_rng(2)
    for _ in range(100):
        t0, t = np.sort(rng.uniform(-2, 2, 2))
        k = int(rng.integers(1, basis.size + 1))
        k0 = basis.order_of(k)
        expected, _ = quad(
            lambda u: np.exp(2j * np.pi * k0 * u / basis.period),
            t0,
            t,
            complex_func=True,
            epsabs=1e-13,
        )
        assert abs(basis.antiderivative(k, t0, t) - expected) < 1e-10


def test_hermitian_rows_give_real_signals():
    rng = np.random.default_rng(3)
    basis = PeriodicExpBasis(1.0, 4)
    sig = ChannelSignal(basis, hermitian_row(rng, basis.size))
    times = rng.uniform(-5, 5, 1000)
    values = basis.values(times) @ sig.coefficients
    assert np.max(np.abs(values.imag)) < 1e-10


# ------------------------------------------------------------------ ensembles

def test_random_ensemble_rank_equal_channels_uses_identity():
    ens = random_ensemble(1, 1, PeriodicExpBasis(1.0, 2), 0.7, seed=11)
    np.testing.assert_array_equal(ens.mixing, np.eye(1))
    grid = dense_grid(ens.basis)
    values = np.array([ens.eval_signal(0, t) for t in grid[:50]])
    assert np.max(np.abs(values)) <= 0.7 + 1e-12


def test_random_ensemble_deterministic():
    a = random_ensemble(4, 2, PeriodicExpBasis(1.0, 3), 1.0, seed=5)
    b = random_ensemble(4, 2, PeriodicExpBasis(1.0, 3), 1.0, seed=5)
    np.testing.assert_array_equal(a.mixing, b.mixing)
    np.testing.assert_array_equal(a.low_coeffs.values, b.low_coeffs.values)


def test_random_ensemble_bound_holds_on_finer_grid():
    basis = PeriodicExpBasis(1.0, 4)  # K = 9
    bound = 0.8
    for seed in range(5):
        ens = random_ensemble(5, 2, basis, bound, seed=seed)
        fine = dense_grid(basis, oversample=640)
        samples = ens.observed_coeffs.values @ basis.values(fine).T
        assert np.max(np.abs(samples.real)) <= 1.05 * bound


def test_random_ensemble_sinc_signals_are_real():
    basis = SincBasis(np.pi, np.arange(5.0))
    ens = random_ensemble(3, 2, basis, 0.5, seed=0)
    assert np.max(np.abs(ens.low_coeffs.values.imag)) == 0.0
    assert abs(ens.eval_signal(1, 1.3)) <= 0.5 + 1e-12


def test_mixing_commutes_with_evaluation():
    rng = np.random.default_rng(9)
    basis = PeriodicExpBasis(1.0, 3)
    ens = random_ensemble(5, 2, basis, 1.0, seed=21)
    for t in rng.uniform(0, 1, 25):
        for i in range(ens.n_channels):
            direct = ens.eval_signal(i, t)
            parts = sum(
                ens.mixing[i, j]
                * np.sum(ens.low_coeffs.values[j] * basis.values(t))
                for j in range(ens.n_sources)
            )
            assert abs(direct - parts.real) < 1e-10


def test_ensemble_validates_shapes():
    basis = PeriodicExpBasis(1.0, 1)
    coeffs = CoefficientMatrix(np.zeros((2, 3), complex))
    with pytest.raises(ValueError):
        SignalEnsemble(basis, np.zeros((4, 3), complex), coeffs)  # J mismatch


def test_random_ensemble_rejects_bad_rank():
    with pytest.raises(ValueError):
        random_ensemble(2, 3, PeriodicExpBasis(1.0, 1), 1.0, seed=0)


# -------------------------------------------------------------- coefficients

def test_coefficient_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    mat = CoefficientMatrix(rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)))
    path = tmp_path / "coeffs.csv"
    mat.to_csv(path)
    back = CoefficientMatrix.from_csv(path)
    np.testing.assert_array_equal(back.values, mat.values)
    header = path.read_text().splitlines()[0]
    assert header == "row,col,re,im"


def test_coefficient_matrix_rejects_non_finite():
    with pytest.raises(ValueError):
        CoefficientMatrix(np.array([[np.inf, 0.0]]))


def test_hermitian_symmetry_check():
    rng = np.random.default_rng(6)
    good = CoefficientMatrix(np.vstack([hermitian_row(rng, 5)]))
    assert good.is_hermitian()
    bad = CoefficientMatrix(good.values + np.array([[0, 0, 0, 0, 1e-6]]))
    assert not bad.is_hermitian()
