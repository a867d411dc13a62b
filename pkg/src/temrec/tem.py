"""Integrate-and-fire time encoding.

A machine adds a bias ``beta`` to its input, integrates the sum scaled by
``1/kappa``, and emits a spike whenever the integrator reaches the threshold
``delta``, resetting to ``-delta``.  With the reset folded out, spike times
are the crossings of the strictly increasing cumulative function

    g(t) = kappa*zeta0 + Y(t) - Y(t0) + beta*(t - t0)

through the levels ``kappa*delta, 3*kappa*delta, 5*kappa*delta, ...`` where
``Y`` is the signal antiderivative.  Working on one monotone function avoids
accumulating reset error over long windows, and each crossing is located
exactly (to ``ROOT_TOLERANCE`` in time) because ``Y`` is known in closed
form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TemParams",
    "SpikeTrain",
    "encode",
    "max_gap_bound",
    "single_channel_bandwidth_limit",
    "inter_spike_integral",
    "write_spikes_csv",
    "read_spikes_csv",
]

ROOT_TOLERANCE = 1e-12  # absolute tolerance on spike times


@dataclass(frozen=True)
class TemParams:
    """Parameters of one integrate-and-fire machine.

    Attributes
    ----------
    kappa : float
        Integrator constant, > 0.
    delta : float
        Firing threshold, > 0.
    bias : float
        Bias added to the input; must exceed the input's amplitude bound
        for the spacing bound to hold.
    zeta0 : float
        Integrator value at ``t_start``, in ``[-delta, delta]``.
    t_start, t_end : float
        Encoding window; spikes are reported in ``(t_start, t_end]``.
    """

    kappa: float
    delta: float
    bias: float
    zeta0: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if abs(self.zeta0) > self.delta:
            raise ValueError("initial integrator value must lie in [-delta, delta]")


@dataclass(frozen=True)
class SpikeTrain:
    """Strictly increasing spike times of one machine.

    ``zeta_end`` is the integrator value at the window end, so encoding can
    be resumed from there; it is ``None`` for truncated trains.
    """

    tem_id: int
    times: np.ndarray
    zeta_end: float | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1:
            raise ValueError("spike times must be 1-d")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("spike times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def n_spikes(self) -> int:
        return self.times.size

    def truncated(self, n: int) -> "SpikeTrain":
        """First ``n`` spikes; the end-of-window integrator state is dropped."""
        if n >= self.n_spikes:
            return self
        return SpikeTrain(self.tem_id, self.times[:n], None)


def max_gap_bound(params: TemParams, amplitude_bound: float) -> float:
    """Upper bound ``2*kappa*delta/(bias - c)`` on consecutive spike spacing."""
    c = float(amplitude_bound)
    if params.bias <= c:
        raise ValueError("bias must exceed the amplitude bound")
    return 2.0 * params.kappa * params.delta / (params.bias - c)


def single_channel_bandwidth_limit(
    params: TemParams, amplitude_bound: float, n_machines: int = 1
) -> float:
    """Largest bandwidth (rad/time) encodable by ``n_machines`` such machines.

    One machine handles ``pi*(bias - c)/(2*kappa*delta)``; M machines scale
    the limit by M.
    """
    c = float(amplitude_bound)
    if params.bias <= c:
        raise ValueError("bias must exceed the amplitude bound")
    if n_machines < 1:
        raise ValueError("n_machines must be >= 1")
    return n_machines * np.pi * (params.bias - c) / (2.0 * params.kappa * params.delta)


def inter_spike_integral(params: TemParams, t_a: float, t_b: float) -> float:
    """Integral of the input between consecutive spikes ``t_a < t_b``.

    Each firing cycle consumes ``2*kappa*delta`` of integrated input-plus-
    bias, so the signal alone integrates to ``2*kappa*delta - bias*(t_b-t_a)``.
    """
    if t_b <= t_a:
        raise ValueError("t_b must exceed t_a")
    return 2.0 * params.kappa * params.delta - params.bias * (t_b - t_a)


def _solve_crossing(g, dg, target, lo, hi, tol=ROOT_TOLERANCE):
    """Root of ``g(t) = target`` on [lo, hi] for increasing g.

    Safeguarded Newton: the bracket is maintained throughout and a bisection
    step replaces any Newton step that leaves it.
    """
    f_lo = g(lo) - target
    if f_lo >= 0.0:  # crossing at (or within rounding of) the left edge
        return lo
    f_hi = g(hi) - target
    if f_hi <= 0.0:
        return hi
    t = 0.5 * (lo + hi)
    for _ in range(200):
        f = g(t) - target
        if f > 0.0:
            hi = t
        elif f < 0.0:
            lo = t
        else:
            return t
        if hi - lo < tol:
            return 0.5 * (lo + hi)
        slope = dg(t)
        t_next = t - f / slope if slope > 0.0 else 0.5 * (lo + hi)
        if not lo < t_next < hi:
            t_next = 0.5 * (lo + hi)
        if abs(t_next - t) < 0.25 * tol and lo < t_next < hi:
            return t_next
        t = t_next
    return 0.5 * (lo + hi)


def encode(signal, params: TemParams, amplitude_bound: float, tem_id: int = 0) -> SpikeTrain:
    """Encode one signal into spike times over the window of ``params``.

    Parameters
    ----------
    signal : object
        Provides ``value(t)`` and ``integral(t0, t)`` in closed form
        (e.g. :class:`temrec.fourier_model.ChannelSignal`).
    params : TemParams
    amplitude_bound : float
        Certified bound c on ``|signal|`` over the window; encoding refuses
        to run unless ``bias > c`` (otherwise the spacing bound is invalid
        and the cumulative function need not be increasing).
    tem_id : int
        Identifier stored on the returned train.

    Returns
    -------
    SpikeTrain
        All spike times in ``(t_start, t_end]``; a crossing exactly at
        ``t_end`` is included.
    """
    c = float(amplitude_bound)
    if params.bias <= c:
        raise ValueError(
            f"bias {params.bias} must exceed amplitude bound {c}: spike spacing unbounded"
        )
    kappa, delta, beta = params.kappa, params.delta, params.bias
    t0, t_end = params.t_start, params.t_end

    def g(t):
        return kappa * params.zeta0 + signal.integral(t0, t) + beta * (t - t0)

    def dg(t):
        return signal.value(t) + beta

    g_end = g(t_end)
    level = kappa * delta
    t_prev = t0
    g_prev = kappa * params.zeta0
    while level <= g_prev:  # zeta0 == delta: the machine resets at t_start
        level += 2.0 * kappa * delta

    times = []
    while level <= g_end:
        # g' lies in [beta - c, beta + c], giving a tight bracket for the root
        lo = t_prev + (level - g_prev) / (beta + c)
        hi = min(t_prev + (level - g_prev) / (beta - c), t_end)
        lo = min(max(lo, t_prev), hi)
        root = _solve_crossing(g, dg, level, lo, hi)
        times.append(root)
        t_prev = root
        g_prev = level  # exact by definition of the crossing
        level += 2.0 * kappa * delta

    zeta_end = (g_end - 2.0 * kappa * delta * len(times)) / kappa
    return SpikeTrain(tem_id, np.asarray(times, dtype=float), zeta_end)


def write_spikes_csv(trains, path) -> None:
    """Write spike trains as ``tem_id,spike_index,time`` (1-based index).

    Times carry 17 significant digits, enough to round-trip float64.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tem_id,spike_index,time\n")
        for train in trains:
            for ell, t in enumerate(train.times, start=1):
                fh.write(f"{train.tem_id},{ell},{t:.17g}\n")


def read_spikes_csv(path) -> list[SpikeTrain]:
    """Read trains written by :func:`write_spikes_csv`, sorted by tem_id."""
    by_id: dict[int, list[tuple[int, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "tem_id,spike_index,time":
            raise ValueError(f"unexpected spikes CSV header: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            tem_id, ell, t = line.split(",")
            by_id.setdefault(int(tem_id), []).append((int(ell), float(t)))
    trains = []
    for tem_id in sorted(by_id):
        entries = sorted(by_id[tem_id])
        trains.append(SpikeTrain(tem_id, np.array([t for _, t in entries])))
    return trains
