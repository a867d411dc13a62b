"""Reconstruction with a known mixing matrix.

Each spike pins down the cumulative integral of its channel, which is a
rank-one linear functional of the unknown low-dimensional coefficient matrix:
``b = a_i C F(t)^T`` with ``a_i`` the channel's mixing row and ``F(t)`` the
vector of basis antiderivatives at the spike time.  Stacking one such row per
spike gives a linear system in ``vec(C)`` which is solved by minimum-norm
least squares; a spike-count bookkeeping rule predicts when the system
determines ``C`` exactly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .fourier_model import Basis, CoefficientMatrix
from .tem import SpikeTrain, TemParams

__all__ = [
    "Mode",
    "RankOneMeasurement",
    "MeasurementSystem",
    "FeasibilityReport",
    "SolveDiagnostics",
    "SolveResult",
    "cumulative_measurements",
    "assemble_system",
    "feasibility",
    "solve",
    "recover_Cy",
    "dump_system_csv",
]

# Relative singular-value cutoff for the rank-revealing solve.
RANK_RCOND = 1e-10


class Mode(enum.Enum):
    """Whether the initial integrator values are known to the decoder."""

    KNOWN_INIT = "known_init"
    UNKNOWN_INIT = "unknown_init"


@dataclass(frozen=True)
class RankOneMeasurement:
    """One spike's constraint ``value = row_weights . C . basis_integrals``."""

    tem_id: int
    spike_index: int  # 1-based position within its train
    value: float
    row_weights: np.ndarray  # mixing row a_i, length J
    basis_integrals: np.ndarray  # F(t_ell), length K


@dataclass(frozen=True)
class FeasibilityReport:
    """Spike-count bookkeeping for exact recovery.

    ``capped_sum`` counts useful spikes, ``sum_i min(n_i, K)`` (with known
    initial values) or ``sum_i min(n_i - 1, K)`` (unknown: each machine
    spends one spike on its own offset).  Spikes beyond K per machine add no
    new independent constraints, hence the cap.  Recovery is generically
    exact as soon as the useful count reaches the ``J*K`` degrees of freedom,
    so the boundary ``capped_sum == required`` counts as feasible.
    """

    capped_sum: int
    required: int
    feasible: bool


@dataclass(frozen=True)
class SolveDiagnostics:
    """Numerical-rank report of a least-squares solve."""

    rank: int
    unknowns: int
    residual: float

    @property
    def underdetermined(self) -> bool:
        return self.rank < self.unknowns

    def to_json(self) -> str:
        return json.dumps(
            {
                "rank": self.rank,
                "unknowns": self.unknowns,
                "residual": self.residual,
                "feasible": not self.underdetermined,
            }
        )


@dataclass(frozen=True)
class SolveResult:
    coefficients: CoefficientMatrix  # recovered C(x), J x K
    offsets: np.ndarray | None  # per-machine integrator offsets, unknown-init only
    diagnostics: SolveDiagnostics


@dataclass(frozen=True)
class MeasurementSystem:
    """Stacked rank-one measurements as a dense linear system.

    ``matrix`` has one row ``vec(a_i F(t)^T)`` per spike (row-major
    flattening, so unknown ``j*K + k`` is entry ``C[j, k]``).  In
    UNKNOWN_INIT mode, one extra column per machine carries the indicator of
    that machine scaled by its ``kappa``; the matching unknowns are the
    per-machine integrator offsets ``zeta0_true - zeta0_assumed``.
    """

    measurements: tuple[RankOneMeasurement, ...]
    matrix: np.ndarray
    rhs: np.ndarray
    mode: Mode
    n_sources: int  # J
    n_basis: int  # K
    n_machines: int

    @property
    def unknown_count(self) -> int:
        return self.matrix.shape[1]


def cumulative_measurements(train: SpikeTrain, params: TemParams) -> list[tuple[int, float]]:
    """Cumulative signal integrals ``b_ell = int_{t0}^{t_ell} y`` per spike.

    The first crossing consumes ``kappa*(delta - zeta0)`` of integrated
    input-plus-bias and every later one ``2*kappa*delta``, so
    ``b_ell = kappa*(delta - zeta0) + 2*(ell-1)*kappa*delta - bias*(t_ell - t0)``,
    which reduces to ``2*ell*kappa*delta - bias*(t_ell - t0)`` for the
    reset-style start ``zeta0 = -delta``.

    Returns ``(ell, b_ell)`` pairs with 1-based ``ell``; empty for an empty
    train.
    """
    k, d, beta = params.kappa, params.delta, params.bias
    first = k * (d - params.zeta0)
    return [
        (ell, first + 2.0 * (ell - 1) * k * d - beta * (t - params.t_start))
        for ell, t in enumerate(train.times, start=1)
    ]


def feasibility(
    spike_counts, n_basis: int, n_sources: int, mode: Mode = Mode.KNOWN_INIT
) -> FeasibilityReport:
    """Predict exact recovery from per-machine spike counts.

    ``n_basis`` is K (coefficients per signal) and ``n_sources`` is J (the
    low-space dimension).
    """
    counts = [int(n) for n in spike_counts]
    if any(n < 0 for n in counts):
        raise ValueError("spike counts must be non-negative")
    if mode is Mode.UNKNOWN_INIT:
        counts = [max(n - 1, 0) for n in counts]
    capped = sum(min(n, n_basis) for n in counts)
    required = n_sources * n_basis
    return FeasibilityReport(capped, required, capped >= required)


def assemble_system(
    mixing,
    basis: Basis,
    trains,
    params_list,
    mode: Mode = Mode.KNOWN_INIT,
) -> MeasurementSystem:
    """Build the linear system for ``vec(C(x))`` from all spikes.

    ``mixing`` rows must align with ``trains`` and ``params_list`` (machine
    ``i`` observes ``y_i = a_i x``).  With unknown initial integrator values
    the right-hand sides are computed from each machine's assumed ``zeta0``
    and the appended offset unknowns absorb the discrepancy.
    """
    mixing = np.asarray(mixing, dtype=complex)
    trains = list(trains)
    params_list = list(params_list)
    if mixing.shape[0] != len(trains) or len(trains) != len(params_list):
        raise ValueError("mixing rows, trains and params must align")
    n_machines = len(trains)
    n_sources = mixing.shape[1]
    n_basis = basis.size
    n_cols = n_sources * n_basis + (n_machines if mode is Mode.UNKNOWN_INIT else 0)

    measurements = []
    rows = []
    rhs = []
    for pos, (train, params) in enumerate(zip(trains, params_list)):
        if train.n_spikes == 0:
            continue
        integrals = basis.integrals(params.t_start, train.times)  # (n, K)
        for (ell, b), f_row in zip(cumulative_measurements(train, params), integrals):
            g_row = mixing[pos]
            measurements.append(
                RankOneMeasurement(train.tem_id, ell, b, g_row, f_row)
            )
            row = np.zeros(n_cols, dtype=complex)
            row[: n_sources * n_basis] = np.outer(g_row, f_row).ravel()
            if mode is Mode.UNKNOWN_INIT:
                row[n_sources * n_basis + pos] = params.kappa
            rows.append(row)
            rhs.append(b)

    matrix = (
        np.asarray(rows, dtype=complex)
        if rows
        else np.zeros((0, n_cols), dtype=complex)
    )
    return MeasurementSystem(
        tuple(measurements),
        matrix,
        np.asarray(rhs, dtype=float),
        mode,
        n_sources,
        n_basis,
        n_machines,
    )


def solve(system: MeasurementSystem) -> SolveResult:
    """Minimum-norm least-squares solve with a rank-revealing cutoff.

    Singular values below ``RANK_RCOND`` times the largest are treated as
    zero; a numerical rank short of the unknown count is reported as
    underdetermined in the diagnostics rather than raised.
    """
    matrix, rhs = system.matrix, system.rhs
    n_unknowns = system.unknown_count
    if matrix.shape[0] == 0:
        x = np.zeros(n_unknowns, dtype=complex)
        rank, residual = 0, 0.0
    else:
        x, _, rank, _ = np.linalg.lstsq(matrix, rhs.astype(complex), rcond=RANK_RCOND)
        residual = float(np.linalg.norm(matrix @ x - rhs))
    coeff_flat = x[: system.n_sources * system.n_basis]
    coeffs = CoefficientMatrix(coeff_flat.reshape(system.n_sources, system.n_basis))
    offsets = None
    if system.mode is Mode.UNKNOWN_INIT:
        offsets = x[system.n_sources * system.n_basis :].real.copy()
    diagnostics = SolveDiagnostics(int(rank), n_unknowns, residual)
    return SolveResult(coeffs, offsets, diagnostics)


def recover_Cy(mixing, coeffs_x: CoefficientMatrix) -> CoefficientMatrix:
    """Observed-channel coefficients ``C(y) = A C(x)``."""
    mixing = np.asarray(mixing, dtype=complex)
    if mixing.shape[1] != coeffs_x.rows:
        raise ValueError("mixing columns must match coefficient rows")
    return CoefficientMatrix(mixing @ coeffs_x.values)


def dump_system_csv(system: MeasurementSystem, path) -> None:
    """Debug dump: one line per measurement with interleaved re/im entries."""
    n_cols = system.unknown_count
    header = ["tem_id", "spike_index", "b"]
    for n in range(n_cols):
        header += [f"re_{n}", f"im_{n}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for meas, row, b in zip(system.measurements, system.matrix, system.rhs):
            cells = [str(meas.tem_id), str(meas.spike_index), f"{b:.17g}"]
            for z in row:
                cells += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            fh.write(",".join(cells) + "\n")
