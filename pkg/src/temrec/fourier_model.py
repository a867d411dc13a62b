"""Parametric signal models.

Signals are finite linear combinations of known basis functions: either
shifted sincs with a common bandwidth, or complex exponentials with a common
period.  Collections of such signals may share a low-dimensional structure
through a mixing matrix, ``y(t) = A x(t)``.

All objects are immutable after construction and evaluation is pure, so they
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

__all__ = [
    "ModelConsistencyError",
    "SincBasis",
    "PeriodicExpBasis",
    "CoefficientMatrix",
    "ChannelSignal",
    "SignalEnsemble",
    "dense_grid",
    "random_ensemble",
]

# Absolute magnitude allowed for the imaginary residue of a nominally
# real-valued evaluation.
REAL_TOLERANCE = 1e-10


class ModelConsistencyError(ValueError):
    """A nominally real-valued model produced a complex value."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _real_or_raise(z, tol=REAL_TOLERANCE):
    z = np.asarray(z)
    imag_max = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if imag_max >= tol:
        raise ModelConsistencyError(
            f"imaginary residue {imag_max:.3e} exceeds tolerance {tol:.1e}; "
            "coefficients do not describe a real-valued signal"
        )
    real = z.real
    return float(real) if real.ndim == 0 else real


class SincBasis:
    """Shifted sinc functions of common bandwidth.

    Basis function ``k`` (1-based, ``k = 1..K``) is
    ``sin(omega*(t - tau_k)) / (pi*(t - tau_k))`` with center ``tau_k`` and
    value ``omega/pi`` at its center.

    Parameters
    ----------
    omega : float
        Bandwidth in rad/time, > 0.
    centers : array_like
        Strictly increasing shift locations ``tau_k``.
    """

    kind = "sinc"

    def __init__(self, omega: float, centers) -> None:
        omega = float(omega)
        if omega <= 0:
            raise ValueError("omega must be positive")
        centers = np.asarray(centers, dtype=float)
        if centers.ndim != 1 or centers.size < 1:
            raise ValueError("centers must be a non-empty 1-d sequence")
        if centers.size > 1 and not np.all(np.diff(centers) > 0):
            raise ValueError("centers must be strictly increasing")
        self.omega = omega
        self.centers = _readonly(centers)

    @property
    def size(self) -> int:
        """Number of basis functions K."""
        return self.centers.size

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.size:
            raise IndexError(f"basis index {k} out of range 1..{self.size}")

    def values(self, t) -> np.ndarray:
        """All basis values ``f_k(t)``, shape ``t.shape + (K,)``, complex."""
        x = np.asarray(t, dtype=float)[..., np.newaxis] - self.centers
        # np.sinc(u) = sin(pi u)/(pi u), so this is sin(omega x)/(pi x)
        return (self.omega / np.pi) * np.sinc(self.omega * x / np.pi) + 0j

    def evaluate(self, k: int, t: float) -> complex:
        """Value of basis function ``k`` (1-based) at time ``t``."""
        self._check_index(k)
        x = float(t) - self.centers[k - 1]
        return complex((self.omega / np.pi) * np.sinc(self.omega * x / np.pi))

    def integrals(self, t0: float, t) -> np.ndarray:
        """Antiderivatives ``F_k(t) = int_t0^t f_k``, shape ``t.shape + (K,)``.

        Expressed through the sine integral Si:
        ``F_k = (Si(omega*(t - tau_k)) - Si(omega*(t0 - tau_k))) / pi``.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < t0):
            raise ValueError("integration endpoint precedes start t0")
        si_hi, _ = sici(self.omega * (t[..., np.newaxis] - self.centers))
        si_lo, _ = sici(self.omega * (t0 - self.centers))
        return (si_hi - si_lo) / np.pi + 0j

    def antiderivative(self, k: int, t0: float, t: float) -> complex:
        """``int_t0^t f_k(u) du`` for basis function ``k`` (1-based)."""
        self._check_index(k)
        return complex(self.integrals(t0, float(t))[k - 1])

    def bounding_interval(self) -> tuple[float, float]:
        """Interval over which sup-norms of signals are certified by gridding."""
        margin = 4.0 * np.pi / self.omega
        return float(self.centers[0] - margin), float(self.centers[-1] + margin)


class PeriodicExpBasis:
    """Complex exponentials ``exp(j*2*pi*k0*t/T)`` for orders ``k0 = -K0..K0``.

    Basis index ``k`` (1-based, ``k = 1..K`` with ``K = 2*K0 + 1``) maps to
    frequency order ``k - K0 - 1``.
    """

    kind = "periodic_exp"

    def __init__(self, period: float, max_order: int) -> None:
        period = float(period)
        if period <= 0:
            raise ValueError("period must be positive")
        max_order = int(max_order)
        if max_order < 0:
            raise ValueError("max_order must be >= 0")
        self.period = period
        self.max_order = max_order
        self.orders = _readonly(np.arange(-max_order, max_order + 1))

    @property
    def size(self) -> int:
        """Number of basis functions K = 2*max_order + 1."""
        return 2 * self.max_order + 1

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.size:
            raise IndexError(f"basis index {k} out of range 1..{self.size}")

    def order_of(self, k: int) -> int:
        """Frequency order of basis index ``k`` (1-based)."""
        self._check_index(k)
        return k - self.max_order - 1

    def values(self, t) -> np.ndarray:
        """All basis values at ``t``, shape ``t.shape + (K,)``."""
        t = np.asarray(t, dtype=float)
        return np.exp(2j * np.pi * t[..., np.newaxis] * self.orders / self.period)

    def evaluate(self, k: int, t: float) -> complex:
        """Value of basis function ``k`` (1-based) at time ``t``."""
        return complex(np.exp(2j * np.pi * self.order_of(k) * float(t) / self.period))

    def integrals(self, t0: float, t) -> np.ndarray:
        """Antiderivatives ``F_k(t) = int_t0^t f_k``, shape ``t.shape + (K,)``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < t0):
            raise ValueError("integration endpoint precedes start t0")
        out = np.empty(t.shape + (self.size,), dtype=complex)
        zero = self.max_order  # column of order 0
        out[..., zero] = (t - t0) + 0j
        for col, k0 in enumerate(self.orders):
            if k0 == 0:
                continue
            w = 2j * np.pi * k0 / self.period
            out[..., col] = (np.exp(w * t) - np.exp(w * t0)) / w
        return out

    def antiderivative(self, k: int, t0: float, t: float) -> complex:
        """``int_t0^t f_k(u) du`` for basis index ``k`` (1-based)."""
        self._check_index(k)
        return complex(self.integrals(t0, float(t))[k - 1])

    def bounding_interval(self) -> tuple[float, float]:
        """One full period; sup-norms over it bound the whole line."""
        return 0.0, self.period


Basis = SincBasis | PeriodicExpBasis


@dataclass(frozen=True)
class CoefficientMatrix:
    """Complex coefficient array: rows index signals, columns basis functions.

    For a periodic-exponential basis, columns are order-indexed
    (order ``-K0`` first); a real-valued signal then requires the Hermitian
    symmetry ``c[-k0] == conj(c[k0])``, checked by :meth:`is_hermitian`.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2:
            raise ValueError("coefficient array must be 2-d")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def hermitian_violation(self) -> float:
        """Max deviation from ``c[:, -k] == conj(c[:, k])`` (order-indexed)."""
        return float(np.max(np.abs(self.values - np.conj(self.values[:, ::-1]))))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermitian_violation() < tol

    def to_csv(self, path) -> None:
        """Write ``row,col,re,im`` lines in row-major order."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,re,im\n")
            for r in range(self.rows):
                for c in range(self.cols):
                    z = self.values[r, c]
                    fh.write(f"{r},{c},{z.real:.17g},{z.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "CoefficientMatrix":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "row,col,re,im":
                raise ValueError(f"unexpected coefficient CSV header: {header!r}")
            for line in fh:
                if not line.strip():
                    continue
                r, c, re, im = line.split(",")
                rows.append((int(r), int(c), float(re), float(im)))
        if not rows:
            raise ValueError("empty coefficient CSV")
        n_r = max(r for r, *_ in rows) + 1
        n_c = max(c for _, c, *_ in rows) + 1
        out = np.zeros((n_r, n_c), dtype=complex)
        for r, c, re, im in rows:
            out[r, c] = re + 1j * im
        return cls(out)


@dataclass(frozen=True)
class ChannelSignal:
    """One real-valued signal with a closed-form antiderivative.

    ``value(t)`` returns ``sum_k c_k f_k(t)``; the imaginary residue must stay
    below ``REAL_TOLERANCE`` or a :class:`ModelConsistencyError` is raised.
    """

    basis: Basis
    coefficients: np.ndarray
    amplitude_bound: float | None = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.basis.size,):
            raise ValueError("coefficient vector length must match basis size")
        object.__setattr__(self, "coefficients", _readonly(c))

    def value(self, t):
        return _real_or_raise(self.basis.values(t) @ self.coefficients)

    def integral(self, t0: float, t):
        """``int_t0^t`` of the signal, via the basis antiderivatives."""
        return _real_or_raise(self.basis.integrals(t0, t) @ self.coefficients)


@dataclass(frozen=True)
class SignalEnsemble:
    """Observed signals ``y(t) = A x(t)`` over a common basis.

    ``mixing`` is the I-by-J matrix A (complex; identity when the observed
    signals coincide with the underlying ones) and ``low_coeffs`` holds the
    J-by-K coefficients of ``x``.  Rows of ``observed_coeffs`` parametrize the
    individual channels ``y_i``.
    """

    basis: Basis
    mixing: np.ndarray
    low_coeffs: CoefficientMatrix
    amplitude_bound: float | None = None
    observed_coeffs: CoefficientMatrix = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.mixing, dtype=complex)
        if a.ndim != 2:
            raise ValueError("mixing matrix must be 2-d")
        if not np.all(np.isfinite(a)):
            raise ValueError("mixing matrix must be finite")
        if a.shape[1] != self.low_coeffs.rows:
            raise ValueError("mixing columns must match low-dimensional signal count")
        if self.low_coeffs.cols != self.basis.size:
            raise ValueError("coefficient columns must match basis size")
        object.__setattr__(self, "mixing", _readonly(a))
        object.__setattr__(
            self, "observed_coeffs", CoefficientMatrix(a @ self.low_coeffs.values)
        )

    @property
    def n_channels(self) -> int:
        return self.mixing.shape[0]

    @property
    def n_sources(self) -> int:
        return self.mixing.shape[1]

    def channel(self, i: int) -> ChannelSignal:
        """Observed channel ``y_i`` as a standalone signal."""
        return ChannelSignal(
            self.basis, self.observed_coeffs.values[i], self.amplitude_bound
        )

    def eval_signal(self, i: int, t):
        """Real value of channel ``i`` at time ``t``."""
        return self.channel(i).value(t)


def dense_grid(basis: Basis, oversample: int = 64) -> np.ndarray:
    """Evaluation grid of ``oversample * K`` points over the basis support.

    Used to certify amplitude bounds of randomly drawn ensembles; the default
    64 points per basis function keeps the between-sample overshoot of a
    K-term model within a few percent.
    """
    lo, hi = basis.bounding_interval()
    return np.linspace(lo, hi, oversample * basis.size, endpoint=False)


def random_ensemble(
    n_channels: int,
    rank: int,
    basis: Basis,
    amplitude_bound: float,
    seed: int,
) -> SignalEnsemble:
    """Draw a random ensemble of ``n_channels`` signals of rank ``rank``.

    Coefficients are i.i.d. standard normal (Hermitian-symmetrized for
    periodic bases so signals are real; plain real draws for sinc bases).
    When ``rank < n_channels`` the mixing matrix is i.i.d. standard normal
    and its rows are rescaled so each channel's sup-norm over a dense grid
    equals ``amplitude_bound``; when ``rank == n_channels`` the mixing is the
    identity and the coefficient rows are rescaled instead.

    Deterministic in ``seed``.
    """
    n_channels = int(n_channels)
    rank = int(rank)
    if not 1 <= rank <= n_channels:
        raise ValueError("need 1 <= rank <= n_channels")
    c = float(amplitude_bound)
    if c <= 0:
        raise ValueError("amplitude_bound must be positive")

    rng = np.random.default_rng(seed)
    shape = (rank, basis.size)
    if isinstance(basis, PeriodicExpBasis):
        coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
    else:
        coeffs = rng.standard_normal(shape) + 0j
    if rank == n_channels:
        mixing = np.eye(n_channels, dtype=complex)
    else:
        mixing = rng.standard_normal((n_channels, rank)) + 0j

    grid = dense_grid(basis)
    samples = np.abs((mixing @ coeffs) @ basis.values(grid).T)
    peaks = samples.max(axis=1)
    scale = np.where(peaks > 0, c / np.where(peaks > 0, peaks, 1.0), 1.0)
    if rank == n_channels:
        coeffs = scale[:, np.newaxis] * coeffs
    else:
        mixing = scale[:, np.newaxis] * mixing
    return SignalEnsemble(basis, mixing, CoefficientMatrix(coeffs), c)
