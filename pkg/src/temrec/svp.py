"""Singular Value Projection for unknown mixing.

When the mixing matrix is unknown but its rank J is, the observed-channel
coefficient matrix C(y) is a rank-J matrix probed by the spikes' rank-one
functionals.  SVP is projected gradient descent on the measurement residual
with a hard rank-J truncation after every step:

    Y <- X - eta_t * S^T(S(X) - b)
    X <- best rank-J approximation of Y

The per-iteration step size ``eta_t`` defaults to the exact minimizer of the
residual along the gradient direction; a fixed step (e.g. ``1/L`` from
:func:`estimate_step_size`) can be pinned through the config.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier_model import Basis
from .recon_known import cumulative_measurements

__all__ = [
    "SensingOperator",
    "SvpConfig",
    "SvpResult",
    "sensing_from_trains",
    "apply_sensing",
    "adjoint_sensing",
    "top_j_svd",
    "truncate_rank",
    "estimate_step_size",
    "svp_recover",
    "write_trace_csv",
]


@dataclass(frozen=True)
class SensingOperator:
    """Rank-one sensing of an I-by-K matrix.

    Component ``n`` of the measurement is the real part of
    ``e_{i_n}^T M h_n`` (plain product, no conjugation), i.e. row ``i_n`` of
    the probed matrix against the basis-integral vector ``h_n``.
    """

    channel_indices: np.ndarray  # (n,) ints in [0, I)
    basis_integrals: np.ndarray  # (n, K) complex
    shape: tuple[int, int]  # (I, K)

    def __post_init__(self):
        idx = np.asarray(self.channel_indices, dtype=int)
        h = np.asarray(self.basis_integrals, dtype=complex)
        if h.ndim != 2 or idx.shape != (h.shape[0],):
            raise ValueError("need one channel index per measurement row")
        if idx.size and (idx.min() < 0 or idx.max() >= self.shape[0]):
            raise ValueError("channel index out of range")
        if h.shape[1] != self.shape[1]:
            raise ValueError("basis-integral length must match target columns")
        idx.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "channel_indices", idx)
        object.__setattr__(self, "basis_integrals", h)

    @property
    def n_measurements(self) -> int:
        return self.channel_indices.size


@dataclass(frozen=True)
class SvpConfig:
    """Iteration parameters.

    ``step_size`` ``None`` selects an exact line search per iteration
    (the residual is quadratic along the gradient direction, so the
    minimizing step is ``||grad||^2 / ||S(grad)||^2``); a float pins a fixed
    step such as ``1/L``.  ``tolerance`` defaults to ``1e-12 * ||b||^2`` and
    is compared against the squared residual norm.
    """

    rank: int
    step_size: float | None = None
    tolerance: float | None = None
    max_iters: int = 5000

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class SvpResult:
    estimate: np.ndarray  # (I, K) complex, rank <= config.rank
    iterations: int
    converged: bool
    residuals: np.ndarray  # squared residual norm per iteration


def sensing_from_trains(basis: Basis, trains, params_list, *, differenced: bool = True):
    """Sensing operator and measurement vector from encoded spike trains.

    Machine ``pos`` in ``trains`` observes row ``pos`` of the probed matrix.
    With ``differenced=True`` (default) each machine contributes the
    integrals over its consecutive inter-spike intervals (first interval
    starting at the window start); these span the same constraints as the
    running integrals but over disjoint intervals, which conditions the
    operator far better for the iterative recovery.  ``differenced=False``
    keeps the raw cumulative form, matching
    :func:`temrec.recon_known.assemble_system` row for row.

    Returns ``(operator, b)``.
    """
    trains = list(trains)
    params_list = list(params_list)
    if len(trains) != len(params_list):
        raise ValueError("trains and params must align")
    idx, rows_h, b = [], [], []
    for pos, (train, params) in enumerate(zip(trains, params_list)):
        if train.n_spikes == 0:
            continue
        integrals = basis.integrals(params.t_start, train.times)  # (n, K)
        values = np.array([v for _, v in cumulative_measurements(train, params)])
        if differenced:
            integrals = np.diff(integrals, axis=0, prepend=np.zeros((1, basis.size)))
            values = np.diff(values, prepend=0.0)
        idx.extend([pos] * train.n_spikes)
        rows_h.extend(integrals)
        b.extend(values)
    n_basis = basis.size
    h_arr = (
        np.asarray(rows_h, dtype=complex)
        if rows_h
        else np.zeros((0, n_basis), dtype=complex)
    )
    op = SensingOperator(np.asarray(idx, dtype=int), h_arr, (len(trains), n_basis))
    return op, np.asarray(b, dtype=float)


def apply_sensing(op: SensingOperator, matrix) -> np.ndarray:
    """Measure ``matrix``: component n is ``Re(e_{i_n}^T M h_n)``."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != op.shape:
        raise ValueError(f"matrix shape {matrix.shape} != operator target {op.shape}")
    picked = matrix[op.channel_indices]  # (n, K)
    return np.real(np.einsum("nk,nk->n", picked, op.basis_integrals))


def adjoint_sensing(op: SensingOperator, residual) -> np.ndarray:
    """Adjoint of :func:`apply_sensing` under the real inner product.

    Returns ``sum_n r_n e_{i_n} h_n^H``, so that
    ``<S(M), r> == Re <M, S^T(r)>`` for all M and real r.
    """
    r = np.asarray(residual, dtype=float)
    if r.shape != (op.n_measurements,):
        raise ValueError("residual length must match measurement count")
    out = np.zeros(op.shape, dtype=complex)
    np.add.at(out, op.channel_indices, r[:, np.newaxis] * np.conj(op.basis_integrals))
    return out


def top_j_svd(matrix, rank: int):
    """Leading ``rank`` singular triplets ``(U, s, Vh)``.

    ``U @ diag(s) @ Vh`` is the Frobenius-optimal rank-``rank`` approximation;
    singular values come back non-negative and non-increasing.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if not 1 <= rank <= min(matrix.shape):
        raise ValueError(f"rank {rank} out of range for shape {matrix.shape}")
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    return u[:, :rank], s[:rank], vh[:rank]


def truncate_rank(matrix, rank: int) -> np.ndarray:
    """Best rank-``rank`` approximation in Frobenius norm."""
    u, s, vh = top_j_svd(matrix, rank)
    return (u * s) @ vh


def estimate_step_size(op: SensingOperator, n_iters: int = 50, seed: int = 0) -> float:
    """``1/L`` with L = top eigenvalue of S^T S, by power iteration.

    L equals the squared largest singular value of the dense sensing matrix;
    50 iterations are plenty at desk scale.  Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    m = rng.standard_normal(op.shape) + 1j * rng.standard_normal(op.shape)
    m /= np.linalg.norm(m)
    lam = 1.0
    for _ in range(n_iters):
        m = adjoint_sensing(op, apply_sensing(op, m))
        lam = np.linalg.norm(m)
        if lam == 0.0:  # operator is zero; any step size works
            return 1.0
        m /= lam
    return 1.0 / lam


def svp_recover(op: SensingOperator, b, config: SvpConfig) -> SvpResult:
    """Recover a rank-``config.rank`` matrix from measurements ``b``.

    Starting from zero, each iteration takes a gradient step on the squared
    residual and truncates to the best rank-J approximation.  Iteration
    stops once the squared residual drops to ``tolerance`` or ``max_iters``
    is reached; non-convergence is reported through the flag, not raised,
    and the estimate always has rank <= J.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (op.n_measurements,):
        raise ValueError("measurement vector length mismatch")
    b_energy = float(b @ b)
    eps = (
        config.tolerance
        if config.tolerance is not None
        else max(1e-12 * b_energy, 1e-300)
    )

    x = np.zeros(op.shape, dtype=complex)
    residual = apply_sensing(op, x) - b
    residuals = []
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        grad = adjoint_sensing(op, residual)
        if config.step_size is not None:
            eta = config.step_size
        else:
            sensed = apply_sensing(op, grad)
            denom = float(sensed @ sensed)
            eta = float(np.linalg.norm(grad)) ** 2 / denom if denom > 0 else 0.0
        x = truncate_rank(x - eta * grad, config.rank)
        residual = apply_sensing(op, x) - b
        rsq = float(residual @ residual)
        residuals.append(rsq)
        if rsq <= eps:
            converged = True
            break
    return SvpResult(x, iterations, converged, np.asarray(residuals))


def write_trace_csv(result: SvpResult, path) -> None:
    """Convergence trace: ``iter,residual_sq`` per iteration."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,residual_sq\n")
        for i, rsq in enumerate(result.residuals, start=1):
            fh.write(f"{i},{rsq:.17g}\n")
