"""Command-line interface.

Subcommands: ``encode``, ``decode``, ``sweep-spikes``, ``sweep-tems``,
``svp-demo``, ``gram-check``.  Every subcommand accepts ``--config FILE``
with a JSON object whose keys mirror the long flags (dashes as underscores);
explicit flags override config values.  Exit codes: 0 success, 2 on
configuration errors, 3 when ``--require-feasible`` is set and the spike
counts cannot determine the unknowns.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .fourier_model import CoefficientMatrix, PeriodicExpBasis, SignalEnsemble
from .recon_known import Mode, assemble_system, feasibility, solve
from .scene import (
    SceneSpec,
    SensorGrid,
    gram_check,
    interpolate_patch,
    mixing_from_grid_2d,
    random_scene,
    read_patch,
    rect_grid,
    scene_ensemble,
    temporal_slices,
    uniform_grid,
)
from .svp import SvpConfig, sensing_from_trains, svp_recover, write_trace_csv
from .tem import SpikeTrain, TemParams, read_spikes_csv, write_spikes_csv
from . import experiments as ex

__all__ = ["main", "run"]


class ConfigError(Exception):
    """Invalid configuration or input file."""


class InfeasibleError(Exception):
    """Spike counts cannot determine the unknowns and feasibility was required."""


def _parse_int_list(text: str) -> list[int]:
    """Parse ``"1,2,5"`` or ``"1..12"`` (inclusive range) into ints."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_grids(text: str) -> dict[str, tuple[int, int]]:
    """Parse ``"5x9,5x5"`` into named (rows, cols) pairs."""
    grids = {}
    for tok in text.split(","):
        tok = tok.strip()
        rows, cols = tok.split("x")
        grids[tok] = (int(rows), int(cols))
    return grids


def _setting(args, config: dict, key: str, default=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _meta_path(spikes_path: str) -> Path:
    p = Path(spikes_path)
    return p.with_suffix(p.suffix + ".meta.json") if p.suffix != ".csv" else p.with_suffix(".meta.json")


def _build_scene(args, config) -> SceneSpec:
    patch_path = _setting(args, config, "patch")
    if patch_path:
        try:
            patch = read_patch(patch_path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read patch {patch_path}: {exc}") from exc
        return interpolate_patch(patch)
    dims = _setting(args, config, "scene_dims")
    if dims is None:
        raise ConfigError("need --patch or --scene-dims K0,K1,K2")
    if isinstance(dims, str):
        dims = _parse_int_list(dims)
    if len(dims) != 3:
        raise ConfigError("--scene-dims takes exactly three integers K0,K1,K2")
    seed = int(_setting(args, config, "scene_seed", 0))
    return random_scene(dims[0], dims[1], dims[2], seed)


def _encoded_ensemble(scene, grid, args, config, seed):
    """Shared encode path: ensemble, spike trains, params, beta."""
    bare = scene_ensemble(scene, grid)
    amp = ex.ensemble_amplitude(bare)
    beta_factor = float(_setting(args, config, "beta_factor", 2.0))
    beta = beta_factor * amp if amp > 0 else 1.0
    ens = SignalEnsemble(bare.basis, bare.mixing, bare.low_coeffs, amp)
    budget = int(_setting(args, config, "spikes_per_tem", 5))
    mechanism = _setting(args, config, "mechanism", "truncation")
    kappa = float(_setting(args, config, "kappa", 1.0))
    window = (0.0, scene.period_t)
    trains, params_list = ex.encode_ensemble(
        ens, [budget] * ens.n_channels, window, kappa, beta, seed, mechanism
    )
    return ens, trains, params_list, mechanism, budget


def cmd_encode(args) -> int:
    config = _load_config(args)
    scene = _build_scene(args, config)
    rows = int(_setting(args, config, "grid_rows", 2 * scene.k1 + 1))
    cols = int(
        _setting(
            args, config, "grid_cols", 1 if scene.k2 is None else 2 * scene.k2 + 1
        )
    )
    if scene.k2 is None:
        raise ConfigError("encode currently expects a two-spatial-dimension scene")
    grid = rect_grid(rows, cols, scene.period_d1, scene.period_d2)
    seed = int(_setting(args, config, "seed", 0))
    ens, trains, params_list, mechanism, budget = _encoded_ensemble(
        scene, grid, args, config, seed
    )

    output = _setting(args, config, "output")
    if not output:
        raise ConfigError("encode requires --output")
    write_spikes_csv(trains, output)
    meta = {
        "basis": {
            "kind": "periodic_exp",
            "period": ens.basis.period,
            "max_order": ens.basis.max_order,
        },
        "window": [0.0, scene.period_t],
        "mechanism": mechanism,
        "spikes_per_tem": budget,
        "amplitude_bound": ens.amplitude_bound,
        "scene": {
            "K0": scene.k0,
            "K1": scene.k1,
            "K2": scene.k2,
            "T": scene.period_t,
            "D1": scene.period_d1,
            "D2": scene.period_d2,
        },
        "grid": {"rows": rows, "cols": cols},
        "tems": [
            {
                "tem_id": train.tem_id,
                "kappa": p.kappa,
                "delta": p.delta,
                "bias": p.bias,
                "zeta0": p.zeta0,
                "t_start": p.t_start,
                "t_end": p.t_end,
            }
            for train, p in zip(trains, params_list)
        ],
        "mixing_re": ens.mixing.real.tolist(),
        "mixing_im": ens.mixing.imag.tolist(),
    }
    with open(_meta_path(output), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    truth = _setting(args, config, "truth")
    if truth:
        temporal_slices(scene).to_csv(truth)
    return 0


def _read_meta(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read encoding metadata {path}: {exc}") from exc


def cmd_decode(args) -> int:
    config = _load_config(args)
    spikes_path = _setting(args, config, "spikes")
    if not spikes_path:
        raise ConfigError("decode requires --spikes")
    meta_path = _setting(args, config, "meta") or _meta_path(spikes_path)
    meta = _read_meta(meta_path)
    try:
        trains_present = {t.tem_id: t for t in read_spikes_csv(spikes_path)}
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read spikes {spikes_path}: {exc}") from exc

    basis_info = meta["basis"]
    if basis_info["kind"] != "periodic_exp":
        raise ConfigError(f"unsupported basis kind {basis_info['kind']!r}")
    basis = PeriodicExpBasis(basis_info["period"], basis_info["max_order"])
    mixing = np.asarray(meta["mixing_re"], dtype=float) + 1j * np.asarray(
        meta["mixing_im"], dtype=float
    )
    trains, params_list = [], []
    for entry in meta["tems"]:
        tem_id = entry["tem_id"]
        params = TemParams(
            entry["kappa"],
            entry["delta"],
            entry["bias"],
            entry["zeta0"],
            entry["t_start"],
            entry["t_end"],
        )
        trains.append(trains_present.get(tem_id, SpikeTrain(tem_id, np.empty(0))))
        params_list.append(params)

    mode_name = _setting(args, config, "mode", "known-init")
    counts = [t.n_spikes for t in trains]
    output = _setting(args, config, "output")
    if not output:
        raise ConfigError("decode requires --output")
    diag_path = Path(output).with_suffix(".diag.json")
    require = bool(getattr(args, "require_feasible", False) or config.get("require_feasible"))

    if mode_name in ("known-init", "unknown-init"):
        mode = Mode.KNOWN_INIT if mode_name == "known-init" else Mode.UNKNOWN_INIT
        report = feasibility(counts, basis.size, mixing.shape[1], mode)
        if require and not report.feasible:
            raise InfeasibleError(
                f"capped spike sum {report.capped_sum} < required {report.required}"
            )
        if mode is Mode.UNKNOWN_INIT:
            # decoder does not trust the recorded zeta0: assume reset-style start
            params_list = [
                TemParams(p.kappa, p.delta, p.bias, -p.delta, p.t_start, p.t_end)
                for p in params_list
            ]
        system = assemble_system(mixing, basis, trains, params_list, mode)
        result = solve(system)
        result.coefficients.to_csv(output)
        with open(diag_path, "w", encoding="utf-8") as fh:
            fh.write(result.diagnostics.to_json())
            fh.write("\n")
        return 0

    if mode_name == "svp":
        rank = _setting(args, config, "rank")
        if rank is None:
            raise ConfigError("svp decoding requires --rank")
        rank = int(rank)
        report = feasibility(counts, basis.size, rank)
        if require and not report.feasible:
            raise InfeasibleError(
                f"capped spike sum {report.capped_sum} < required {report.required}"
            )
        op, b = sensing_from_trains(basis, trains, params_list)
        max_iters = int(_setting(args, config, "max_iters", 20000))
        result = svp_recover(op, b, SvpConfig(rank=rank, max_iters=max_iters))
        CoefficientMatrix(result.estimate).to_csv(output)
        trace = _setting(args, config, "trace")
        if trace:
            write_trace_csv(result, trace)
        with open(diag_path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "mode": "svp",
                    "converged": result.converged,
                    "iterations": result.iterations,
                    "residual_sq": result.residuals[-1] if result.residuals.size else 0.0,
                },
                fh,
            )
            fh.write("\n")
        return 0

    raise ConfigError(f"unknown decode mode {mode_name!r}")


def _write_sweep_csv(points, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "config,sweep_value,seed,relative_error,feasible,"
            "capped_threshold,naive_threshold\n"
        )
        for p in points:
            capped = "" if p.capped_threshold is None else str(p.capped_threshold)
            fh.write(
                f"{p.config},{p.sweep_value},{p.seed},{p.relative_error:.17g},"
                f"{str(p.feasible).lower()},{capped},{p.naive_threshold}\n"
            )


def _write_svp_csv(points, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "scenario,spikes_per_tem,total_spikes,seed,relative_error,"
            "jk_threshold,ik_threshold\n"
        )
        for p in points:
            fh.write(
                f"{p.scenario},{p.spikes_per_tem},{p.total_spikes},{p.seed},"
                f"{p.relative_error:.17g},{p.jk_threshold},{p.ik_threshold}\n"
            )


def cmd_sweep_spikes(args) -> int:
    config = _load_config(args)
    scene = _build_scene(args, config)
    if scene.k2 is None:
        raise ConfigError("spike sweep expects a two-spatial-dimension scene")
    grid_spec = _setting(args, config, "grids", "5x9,5x5,5x3")
    grids = {
        name: rect_grid(r, c, scene.period_d1, scene.period_d2)
        for name, (r, c) in _parse_grids(grid_spec).items()
    }
    budgets = _parse_int_list(str(_setting(args, config, "budgets", "1..12")))
    seeds = _parse_int_list(str(_setting(args, config, "seeds", "0..9")))
    output = _setting(args, config, "output")
    if not output:
        raise ConfigError("sweep-spikes requires --output")
    points = ex.sweep_spikes(
        scene,
        grids,
        budgets,
        seeds,
        kappa=float(_setting(args, config, "kappa", 1.0)),
        beta_factor=float(_setting(args, config, "beta_factor", 2.0)),
        mechanism=_setting(args, config, "mechanism", "truncation"),
    )
    _write_sweep_csv(points, output)
    return 0


def cmd_sweep_tems(args) -> int:
    config = _load_config(args)
    scene = _build_scene(args, config)
    if scene.k2 is None:
        raise ConfigError("machine sweep expects a two-spatial-dimension scene")
    budgets = _parse_int_list(str(_setting(args, config, "budgets", "3,5,9")))
    counts = _parse_int_list(str(_setting(args, config, "tem_counts", "5,10,15,20,25,30,35,40,45")))
    seeds = _parse_int_list(str(_setting(args, config, "seeds", "0..9")))
    output = _setting(args, config, "output")
    if not output:
        raise ConfigError("sweep-tems requires --output")
    points = ex.sweep_tems(
        scene,
        counts,
        budgets,
        seeds,
        kappa=float(_setting(args, config, "kappa", 1.0)),
        beta_factor=float(_setting(args, config, "beta_factor", 2.0)),
        mechanism=_setting(args, config, "mechanism", "truncation"),
    )
    _write_sweep_csv(points, output)
    return 0


def cmd_svp_demo(args) -> int:
    config = _load_config(args)
    budgets = _parse_int_list(str(_setting(args, config, "budgets", "1..12")))
    seeds = _parse_int_list(str(_setting(args, config, "seeds", "0..24")))
    output = _setting(args, config, "output")
    if not output:
        raise ConfigError("svp-demo requires --output")
    points = ex.svp_demo(
        budgets,
        seeds,
        n_channels=int(_setting(args, config, "channels", 8)),
        rank=int(_setting(args, config, "rank", 2)),
        n_basis=int(_setting(args, config, "n_basis", 9)),
        svp_max_iters=int(_setting(args, config, "max_iters", 20000)),
    )
    _write_svp_csv(points, output)
    return 0


def cmd_gram_check(args) -> int:
    config = _load_config(args)
    k1 = int(_setting(args, config, "k1", 1))
    k2 = int(_setting(args, config, "k2", 1))
    d1 = float(_setting(args, config, "d1", 1.0))
    d2 = float(_setting(args, config, "d2", 1.0))
    jitter = float(_setting(args, config, "jitter", 0.0))
    grid = uniform_grid(k1, k2, d1, d2)
    locations = grid.locations
    if jitter:
        rng = np.random.default_rng(int(_setting(args, config, "seed", 0)))
        noise = rng.uniform(-jitter, jitter, locations.shape) * np.array([d1, d2])
        grid = SensorGrid(locations + noise)
    mixing = mixing_from_grid_2d(grid, k1, k2, d1, d2)
    report = gram_check(mixing)
    payload = {
        "is_scaled_identity": report.is_scaled_identity,
        "max_off_diagonal": report.max_off_diagonal,
        "n_sensors": grid.n_sensors,
        "numerical_rank": int(np.linalg.matrix_rank(mixing)),
    }
    output = _setting(args, config, "output")
    text = json.dumps(payload, indent=2)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="temrec",
        description="Time encoding and low-rank reconstruction experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its keys")

    enc = sub.add_parser("encode", help="encode a scene into spike trains")
    add_common(enc)
    enc.add_argument("--patch", help="VPF1 video patch file")
    enc.add_argument("--scene-dims", dest="scene_dims", help="K0,K1,K2 for a random scene")
    enc.add_argument("--scene-seed", dest="scene_seed", type=int)
    enc.add_argument("--grid-rows", dest="grid_rows", type=int)
    enc.add_argument("--grid-cols", dest="grid_cols", type=int)
    enc.add_argument("--spikes-per-tem", dest="spikes_per_tem", type=int)
    enc.add_argument("--mechanism", choices=["truncation", "threshold"])
    enc.add_argument("--kappa", type=float)
    enc.add_argument("--beta-factor", dest="beta_factor", type=float)
    enc.add_argument("--seed", type=int)
    enc.add_argument("--output", help="spikes CSV path (meta JSON written alongside)")
    enc.add_argument("--truth", help="also write the true slice coefficients CSV")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="reconstruct coefficients from spikes")
    add_common(dec)
    dec.add_argument("--spikes", help="spikes CSV from encode")
    dec.add_argument("--meta", help="encoding metadata JSON (default: alongside spikes)")
    dec.add_argument("--mode", choices=["known-init", "unknown-init", "svp"])
    dec.add_argument("--rank", type=int, help="rank J for svp mode")
    dec.add_argument("--max-iters", dest="max_iters", type=int)
    dec.add_argument("--trace", help="svp convergence trace CSV")
    dec.add_argument("--require-feasible", dest="require_feasible", action="store_true")
    dec.add_argument("--output", help="coefficients CSV path (.diag.json alongside)")
    dec.set_defaults(func=cmd_decode)

    sw = sub.add_parser("sweep-spikes", help="error vs spikes per machine")
    add_common(sw)
    sw.add_argument("--scene-dims", dest="scene_dims")
    sw.add_argument("--scene-seed", dest="scene_seed", type=int)
    sw.add_argument("--patch")
    sw.add_argument("--grids", help="comma list like 5x9,5x5,5x3")
    sw.add_argument("--budgets", help="list 1,2,3 or range 1..12")
    sw.add_argument("--seeds", help="list or range of seeds")
    sw.add_argument("--kappa", type=float)
    sw.add_argument("--beta-factor", dest="beta_factor", type=float)
    sw.add_argument("--mechanism", choices=["truncation", "threshold"])
    sw.add_argument("--output")
    sw.set_defaults(func=cmd_sweep_spikes)

    st = sub.add_parser("sweep-tems", help="error vs machine count")
    add_common(st)
    st.add_argument("--scene-dims", dest="scene_dims")
    st.add_argument("--scene-seed", dest="scene_seed", type=int)
    st.add_argument("--patch")
    st.add_argument("--budgets")
    st.add_argument("--tem-counts", dest="tem_counts")
    st.add_argument("--seeds")
    st.add_argument("--kappa", type=float)
    st.add_argument("--beta-factor", dest="beta_factor", type=float)
    st.add_argument("--mechanism", choices=["truncation", "threshold"])
    st.add_argument("--output")
    st.set_defaults(func=cmd_sweep_tems)

    sv = sub.add_parser("svp-demo", help="S1/S2/S3 recovery comparison")
    add_common(sv)
    sv.add_argument("--budgets")
    sv.add_argument("--seeds")
    sv.add_argument("--channels", type=int)
    sv.add_argument("--rank", type=int)
    sv.add_argument("--n-basis", dest="n_basis", type=int)
    sv.add_argument("--max-iters", dest="max_iters", type=int)
    sv.add_argument("--output")
    sv.set_defaults(func=cmd_svp_demo)

    gr = sub.add_parser("gram-check", help="Gram diagonality of a sensor grid")
    add_common(gr)
    gr.add_argument("--k1", type=int)
    gr.add_argument("--k2", type=int)
    gr.add_argument("--d1", type=float)
    gr.add_argument("--d2", type=float)
    gr.add_argument("--jitter", type=float, help="uniform location jitter as a fraction of the period")
    gr.add_argument("--seed", type=int)
    gr.add_argument("--output")
    gr.set_defaults(func=cmd_gram_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
