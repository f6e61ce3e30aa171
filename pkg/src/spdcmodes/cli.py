"""Command-line front end: config ingestion, subcommand orchestration, and
emission of figure-reproducing datasets as CSV/JSON plus rendered figures.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .biphoton import (DetuningGrid, QuadratureSpec, SpdcConfig, make_config,
                       mode_amplitude, oracle_amplitude)
from .biphoton import spectrum as compute_spectrum
from .dispersion import TYPE_II_AXES, CrystalSpec, builtin_ktp, load_dispersion_file
from .errors import ConfigError, NoCrossing, SpdcError
from .optimize import (MinimizeOptions, match_collection_waists,
                       optimize_mode_superpositions, waist_sweep)
from .state import (CollectionChannel, best_phase_fidelity, fidelity,
                    joint_correlation_matrix, purity, reduced_spatial_density,
                    spectral_overlap, target_state)
from .tomography import (embedded_state, mle_reconstruct, projector_set,
                         read_counts_csv, simulate_counts, write_counts_csv)
from .units import m_to_nm, m_to_um, mm_to_m, nm_to_m, um_to_m

CONFIG_DEFAULTS = {
    "crystal.length_mm": 10.0,
    "crystal.poling_period_um": "auto",
    "crystal.pm_type": "type_II",
    "crystal.temperature_c": None,
    "pump.wavelength_nm": 405.0,
    "pump.waist_um": 142.0,
    "signal.waist_um": 42.0,
    "idler.waist_um": None,  # defaults to the signal waist
    "grid.points": 2001,
    "grid.span_nm": 6.0,
    "quadrature.z_order": 64,
    "dispersion.file": "builtin-ktp",
}


def _parse_scalar(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def load_run_config(path: str | None, overrides: list[str]) -> dict:
    """Flat dotted-key config with defaults, file values, then --set overrides."""
    config = dict(CONFIG_DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in config:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            config[key] = _parse_scalar(value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in config:
            raise ConfigError(f"--set: unknown config key {key!r}")
        config[key] = _parse_scalar(value)
    _validate_run_config(config)
    return config


def _validate_run_config(config: dict) -> None:
    positive = ["crystal.length_mm", "pump.wavelength_nm", "pump.waist_um",
                "signal.waist_um", "grid.span_nm"]
    for key in positive:
        value = config[key]
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"config key {key!r} must be a positive number, got {value!r}")
    if config["idler.waist_um"] is not None and (
            not isinstance(config["idler.waist_um"], (int, float))
            or config["idler.waist_um"] <= 0):
        raise ConfigError("config key 'idler.waist_um' must be a positive number")
    period = config["crystal.poling_period_um"]
    if period != "auto" and (not isinstance(period, (int, float)) or period <= 0):
        raise ConfigError("config key 'crystal.poling_period_um' must be positive or \"auto\"")
    points = config["grid.points"]
    if not isinstance(points, int) or points < 3 or points % 2 == 0:
        raise ConfigError(f"config key 'grid.points' must be an odd integer >= 3, got {points!r}")
    z_order = config["quadrature.z_order"]
    if not isinstance(z_order, int) or z_order < 2:
        raise ConfigError(f"config key 'quadrature.z_order' must be an integer >= 2, got {z_order!r}")
    if config["crystal.pm_type"] != "type_II":
        raise ConfigError("config key 'crystal.pm_type' only supports \"type_II\"")


def build_engine_config(config: dict) -> SpdcConfig:
    if config["dispersion.file"] == "builtin-ktp":
        model = builtin_ktp()
    else:
        model = load_dispersion_file(config["dispersion.file"])
    period = config["crystal.poling_period_um"]
    crystal = CrystalSpec(
        length=mm_to_m(config["crystal.length_mm"]),
        dispersion=model,
        poling_period=None if period == "auto" else um_to_m(period),
        pm_type=config["crystal.pm_type"],
        temperature=config["crystal.temperature_c"])
    idler_waist = config["idler.waist_um"]
    return make_config(
        crystal,
        pump_wavelength=nm_to_m(config["pump.wavelength_nm"]),
        pump_waist=um_to_m(config["pump.waist_um"]),
        signal_waist=um_to_m(config["signal.waist_um"]),
        idler_waist=None if idler_waist is None else um_to_m(idler_waist),
        z_order=config["quadrature.z_order"])


def build_grid(config: dict, engine: SpdcConfig) -> DetuningGrid:
    return DetuningGrid.from_span_nm(engine.signal.center_wavelength,
                                     count=config["grid.points"],
                                     span_nm=config["grid.span_nm"])


class Emitter:
    """Writes datasets in the requested formats plus a companion figure."""

    def __init__(self, out_dir: str, formats: str, plot: bool, run_config: dict,
                 seed: int | None):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.formats = formats
        self.plot = plot
        self.run_config = run_config
        self.seed = seed
        self.written: list[str] = []

    def meta(self, **extra) -> dict:
        meta = {
            "tool": "spdcmodes",
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": {k: v for k, v in self.run_config.items()},
            "axes": dict(TYPE_II_AXES),
            "partial": False,
        }
        if self.seed is not None:
            meta["seed"] = self.seed
        meta.update(extra)
        return meta

    def emit(self, name: str, header: list[str], rows: list[list], data: dict,
             meta: dict, figure=None) -> None:
        if self.formats in ("csv", "both"):
            path = self.out / f"{name}.csv"
            with open(path, "w", encoding="utf-8") as fh:
                for key in ("tool", "version", "timestamp"):
                    fh.write(f"# {key} = {meta[key]}\n")
                fh.write(f"# meta = {json.dumps({k: v for k, v in meta.items() if k != 'timestamp'}, sort_keys=True)}\n")
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(_csv_cell(v) for v in row) + "\n")
            self.written.append(str(path))
        if self.formats in ("json", "both"):
            path = self.out / f"{name}.json"
            with open(path, "w", encoding="utf-8") as fh:
                json.dump({"meta": meta, "data": data}, fh, indent=1, sort_keys=True)
                fh.write("\n")
            self.written.append(str(path))
        if self.plot and figure is not None:
            self.written.append(figure(self.out / f"{name}.png"))

    def report(self) -> None:
        for path in self.written:
            print(path)


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _float_list(data) -> list:
    return [float(v) for v in np.asarray(data).ravel()]


def _parse_mode(token: str, default_waist_m: float) -> tuple[int, int, int, float]:
    """p_s:p_i:ell with an optional @waist_um suffix."""
    spec, _, waist = token.partition("@")
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"mode {token!r} must be p_s:p_i:ell[@waist_um]")
    try:
        ps, pi, ell = (int(x) for x in parts)
    except ValueError as exc:
        raise ConfigError(f"mode {token!r}: indices must be integers") from exc
    w = um_to_m(float(waist)) if waist else default_waist_m
    return ps, pi, ell, w


def _parse_channels(text: str, default_waist_m: float) -> list[CollectionChannel]:
    channels = []
    for token in text.split(","):
        spec, _, waist = token.strip().partition("@")
        try:
            ell = int(spec)
        except ValueError as exc:
            raise ConfigError(f"channel {token!r} must be ell[@waist_um]") from exc
        w = um_to_m(float(waist)) if waist else default_waist_m
        channels.append(CollectionChannel(ell, w))
    return channels


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _mode_label(ps: int, pi: int, ell: int) -> str:
    return f"ps{ps}.pi{pi}.l{ell}"


# ---------------------------------------------------------------- subcommands

def cmd_decompose(args, config, engine, grid, emitter) -> int:
    window = None
    if args.window:
        try:
            center_nm, width_nm = (float(x) for x in args.window.split(","))
        except ValueError as exc:
            raise ConfigError("--window needs CENTER_NM,WIDTH_NM") from exc
        window = (nm_to_m(center_nm), nm_to_m(width_nm))
    matrix = joint_correlation_matrix(engine, args.pmax, args.ellmax, grid, window)
    header = ["p_s", "l_s", "p_i", "l_i", "probability"]
    rows = []
    for i, ms in enumerate(matrix.signal_modes):
        for j, mi in enumerate(matrix.idler_modes):
            rows.append([ms.p, ms.ell, mi.p, mi.ell, float(matrix.probabilities[i, j])])
    meta = emitter.meta(subspace=matrix.subspace,
                        window_nm=None if window is None else
                        [m_to_nm(window[0]), m_to_nm(window[1])])
    data = matrix.to_json_dict()
    data["meta"].update({"window_nm": meta["window_nm"]})

    def figure(path):
        from .plotting import matrix_figure
        labels = [str(m) for m in matrix.signal_modes]
        return matrix_figure(path, matrix.probabilities, labels, labels,
                             title="joint mode probabilities")

    emitter.emit("correlation_matrix", header, rows, data, meta, figure)
    return 0


def cmd_spectrum(args, config, engine, grid, emitter) -> int:
    if not args.modes:
        raise ConfigError("spectrum requires --modes with at least one entry")
    default_w = um_to_m(config["signal.waist_um"])
    modes = [_parse_mode(t.strip(), default_w) for t in args.modes.split(",")]
    lam_nm = m_to_nm(1) * grid.wavelengths(engine.signal.center_wavelength)
    header = ["wavelength_nm", "mode_label", "re", "im", "abs2"]
    rows, curves, series = [], {}, {}
    for ps, pi, ell, w in modes:
        cfg = engine.with_collection_waists(w, w)
        spec = compute_spectrum(cfg, ps, pi, ell, grid, normalize=args.normalize)
        label = _mode_label(ps, pi, ell)
        for k in range(grid.count):
            v = spec.values[k]
            rows.append([float(lam_nm[k]), label, float(v.real), float(v.imag),
                         float(abs(v) ** 2)])
        curves[label] = (lam_nm, np.abs(spec.values) ** 2)
        series[label] = {"re": _float_list(spec.values.real),
                         "im": _float_list(spec.values.imag),
                         "waist_um": m_to_um(w)}
    meta = emitter.meta(subspace={"modes": [m[:3] for m in modes]},
                        normalized=bool(args.normalize))
    data = {"wavelength_nm": _float_list(lam_nm), "spectra": series}

    def figure(path):
        from .plotting import spectrum_figure
        return spectrum_figure(path, curves)

    emitter.emit("spectrum", header, rows, data, meta, figure)
    return 0


def cmd_sweep(args, config, engine, grid, emitter) -> int:
    ells = _int_list(args.ells)
    w_range = (um_to_m(args.wmin), um_to_m(args.wmax), um_to_m(args.wstep))
    header = ["ell", "waist_um", "probability"]
    rows, curves = [], {}
    for ell in ells:
        result = waist_sweep(engine, ell, w_range, grid, threads=args.threads)
        w_um = [m_to_um(w) for w in result.waists]
        for w, p in zip(w_um, result.probabilities):
            rows.append([ell, float(w), float(p)])
        curves[ell] = (np.asarray(w_um), result.probabilities)
    meta = emitter.meta(subspace={"ells": ells},
                        sweep_um=[args.wmin, args.wmax, args.wstep])
    data = {"curves": {str(ell): {"waist_um": _float_list(c[0]),
                                  "probability": _float_list(c[1])}
                       for ell, c in curves.items()}}

    def figure(path):
        from .plotting import sweep_figure
        return sweep_figure(path, curves)

    emitter.emit("sweep", header, rows, data, meta, figure)
    return 0


def cmd_overlap(args, config, engine, grid, emitter) -> int:
    channels = _parse_channels(args.channels, um_to_m(config["signal.waist_um"]))
    n = len(channels)
    matrix = np.zeros((n, n), dtype=complex)
    for i, a in enumerate(channels):
        for j, b in enumerate(channels):
            matrix[i, j] = spectral_overlap(engine, a, b, grid) if j >= i else np.conj(matrix[j, i])
    labels = [f"l={c.ell}@{m_to_um(c.signal_waist):g}um" for c in channels]
    header = ["ell_a", "waist_a_um", "ell_b", "waist_b_um", "re", "im", "abs"]
    rows = []
    for i, a in enumerate(channels):
        for j, b in enumerate(channels):
            v = matrix[i, j]
            rows.append([a.ell, m_to_um(a.signal_waist), b.ell, m_to_um(b.signal_waist),
                         float(v.real), float(v.imag), float(abs(v))])
    meta = emitter.meta(subspace={"channels": labels})
    data = {"labels": labels, "re": matrix.real.tolist(), "im": matrix.imag.tolist(),
            "meta": {"subspace": {"channels": labels}}}

    def figure(path):
        from .plotting import matrix_figure
        return matrix_figure(path, np.abs(matrix), labels, labels,
                             title="spectral overlap |A|", xlabel="", ylabel="")

    emitter.emit("overlap_matrix", header, rows, data, meta, figure)
    return 0


def cmd_density(args, config, engine, grid, emitter) -> int:
    channels = _parse_channels(args.channels, um_to_m(config["signal.waist_um"]))
    rho = reduced_spatial_density(engine, channels, grid)
    result = {"purity": purity(rho)}
    if len(channels) == 2 and channels[0].ell != channels[1].ell:
        ells = (channels[0].ell, channels[1].ell)
        result["fidelity_phase0"] = fidelity(rho, target_state(*ells, 0.0, labels=rho.labels))
        if args.phi_sweep:
            best_f, best_phi = best_phase_fidelity(rho, *ells)
            result["fidelity_best"] = best_f
            result["best_phase_rad"] = best_phi
    header = ["row_label", "col_label", "re", "im"]
    rows = []
    for i, la in enumerate(rho.labels):
        for j, lb in enumerate(rho.labels):
            v = rho.matrix[i, j]
            rows.append([str(la), str(lb), float(v.real), float(v.imag)])
    meta = emitter.meta(subspace=rho.subspace, figures_of_merit=result)
    data = rho.to_json_dict()
    data["figures_of_merit"] = result

    def figure(path):
        from .plotting import density_figure
        return density_figure(path, rho.matrix, rho.labels, title="|rho_spatial|")

    emitter.emit("density_matrix", header, rows, data, meta, figure)
    return 0


def cmd_optimize_waists(args, config, engine, grid, emitter) -> int:
    ells = _int_list(args.ells)
    w_range = (um_to_m(args.wmin), um_to_m(args.wmax))
    step = um_to_m(args.wstep)
    curves = {}
    for ell in ells:
        result = waist_sweep(engine, ell, (*w_range, step), grid, threads=args.threads)
        curves[ell] = ([m_to_um(w) for w in result.waists], result.probabilities)
    partial = False
    matched_um: dict[int, float] = {}
    error_text = None
    try:
        matched = match_collection_waists(engine, ells, args.ref, grid, w_range,
                                          step, branch=args.branch,
                                          threads=args.threads)
        matched_um = {ell: m_to_um(w) for ell, w in matched.items()}
    except NoCrossing as exc:
        partial = True
        error_text = str(exc)
    header = ["ell", "waist_um", "probability"]
    rows = [[ell, float(w), float(p)] for ell, (ws, ps) in sorted(curves.items())
            for w, p in zip(ws, ps)]
    meta = emitter.meta(subspace={"ells": ells, "reference": args.ref,
                                  "branch": args.branch},
                        matched_waists_um={str(k): v for k, v in matched_um.items()},
                        error=error_text)
    meta["partial"] = partial
    data = {"matched_waists_um": {str(k): v for k, v in matched_um.items()},
            "curves": {str(ell): {"waist_um": _float_list(c[0]),
                                  "probability": _float_list(c[1])}
                       for ell, c in curves.items()},
            "determinism": "seed-free: identical inputs give identical outputs"}

    def figure(path):
        from .plotting import sweep_figure
        marks = {}
        for ell, w_um in matched_um.items():
            ws, ps = curves[ell]
            k = int(np.argmin(np.abs(np.asarray(ws) - w_um)))
            marks[ell] = (w_um, ps[k])
        return sweep_figure(path, {e: (np.asarray(c[0]), c[1]) for e, c in curves.items()},
                            marks)

    emitter.emit("optimization_report", header, rows, data, meta, figure)
    if partial:
        print(f"error: {error_text}", file=sys.stderr)
        return 1
    return 0


def cmd_optimize_modes(args, config, engine, grid, emitter) -> int:
    ells = _int_list(args.ells)
    options = MinimizeOptions(max_iterations=args.max_iters)
    report = optimize_mode_superpositions(engine, ells, args.pmax, grid,
                                          reference_ell=args.ref_ell, options=options)
    partial = not report.reference.converged or any(
        not r.converged for r in report.matched.values())
    spectra = report.spectra(engine, grid)
    lam_nm = m_to_nm(1) * grid.wavelengths(engine.signal.center_wavelength)

    def coeffs(result):
        return {"idler_re": _float_list(result.modes.idler_coeffs.real),
                "idler_im": _float_list(result.modes.idler_coeffs.imag),
                "signal_re": _float_list(result.modes.signal_coeffs.real),
                "signal_im": _float_list(result.modes.signal_coeffs.imag),
                "cost": result.cost, "iterations": result.iterations,
                "converged": result.converged}

    data = {
        "reference_ell": report.reference_ell,
        "p_max": report.p_max,
        "brightness": coeffs(report.reference),
        "matched": {str(ell): coeffs(r) for ell, r in report.matched.items()},
        "determinism": "seed-free: identical inputs give identical outputs",
    }
    header = ["stage", "ell", "cost", "iterations", "converged"]
    rows = [["brightness", report.reference_ell, report.reference.cost,
             report.reference.iterations, report.reference.converged]]
    for ell, r in report.matched.items():
        rows.append(["spectral_match", ell, r.cost, r.iterations, r.converged])
    meta = emitter.meta(subspace={"ells": ells, "p_max": args.pmax,
                                  "reference": report.reference_ell})
    meta["partial"] = partial

    def figure(path):
        from .plotting import spectrum_figure
        curves = {f"l={ell}": (lam_nm, np.abs(s.values) ** 2)
                  for ell, s in spectra.items()}
        return spectrum_figure(path, curves)

    emitter.emit("optimization_report", header, rows, data, meta, figure)
    if partial:
        print("error: optimization hit the iteration cap (best-so-far emitted)",
              file=sys.stderr)
        return 1
    return 0


def _tomography_report(run) -> tuple[dict, tuple, dict]:
    result = mle_reconstruct(run)
    rho = result.rho
    ell, ell_tilde = run.projectors.ell, run.projectors.ell_tilde
    merit = {"purity": purity(rho)}
    fids = [(phi, fidelity(rho, embedded_state(target_state(ell, ell_tilde, phi),
                                               ell, ell_tilde)))
            for phi in np.linspace(0.0, 2 * math.pi, 128, endpoint=False)]
    merit["fidelity_phase0"] = fids[0][1]
    best_phi, best_f = max(((phi, f) for phi, f in fids), key=lambda t: t[1])
    merit["fidelity_best"] = best_f
    merit["best_phase_rad"] = best_phi
    data = {
        "subspace": {"ell": ell, "ell_tilde": ell_tilde},
        "counts": [int(c) for c in run.counts],
        "rho": {"labels": [list(l) for l in rho.labels],
                "re": rho.matrix.real.tolist(), "im": rho.matrix.imag.tolist()},
        "figures_of_merit": merit,
        "log_likelihood": result.log_likelihood,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    header = ["setting_index", "signal_state", "idler_state", "counts"]
    rows = [[j, run.projectors.signal_labels[j], run.projectors.idler_labels[j],
             int(run.counts[j])] for j in range(36)]
    return data, (header, rows), merit


def cmd_tomography_simulate(args, config, engine, grid, emitter) -> int:
    ells = _int_list(args.ells)
    if len(ells) != 2:
        raise ConfigError("tomography needs exactly two channel labels in --ells")
    waists = [um_to_m(float(w)) for w in args.waists.split(",")]
    if len(waists) != 2:
        raise ConfigError("--waists needs exactly two values (um)")
    channels = [CollectionChannel(ells[0], waists[0]), CollectionChannel(ells[1], waists[1])]
    rho_theory = reduced_spatial_density(engine, channels, grid)
    pset = projector_set(ells[0], ells[1])
    run = simulate_counts(embedded_state(rho_theory, *ells).matrix, pset,
                          args.counts * 36, seed=emitter.seed)
    counts_path = emitter.out / "counts.csv"
    write_counts_csv(counts_path, run)
    emitter.written.append(str(counts_path))

    data, (header, rows), merit = _tomography_report(run)
    meta = emitter.meta(subspace={"ells": ells, "waists_um": [m_to_um(w) for w in waists]},
                        counts_per_setting=args.counts, simulated=True,
                        theory={"purity": purity(rho_theory),
                                "fidelity_best": best_phase_fidelity(rho_theory, *ells)[0]})

    def figure(path):
        from .plotting import density_figure
        rho = np.array(data["rho"]["re"]) + 1j * np.array(data["rho"]["im"])
        return density_figure(path, rho, data["rho"]["labels"], title="|rho| (MLE)")

    emitter.emit("tomography_report", header, rows, data, meta, figure)
    return 0


def cmd_tomography_reconstruct(args, config, engine, grid, emitter) -> int:
    ells = _int_list(args.ells)
    if len(ells) != 2:
        raise ConfigError("tomography needs exactly two channel labels in --ells")
    try:
        run = read_counts_csv(args.counts_file, ells[0], ells[1])
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    data, (header, rows), merit = _tomography_report(run)
    meta = emitter.meta(subspace={"ells": ells}, counts_file=str(args.counts_file),
                        simulated=False)

    def figure(path):
        from .plotting import density_figure
        rho = np.array(data["rho"]["re"]) + 1j * np.array(data["rho"]["im"])
        return density_figure(path, rho, data["rho"]["labels"], title="|rho| (MLE)")

    emitter.emit("tomography_report", header, rows, data, meta, figure)
    return 0


def cmd_oracle(args, config, engine, grid, emitter) -> int:
    ps, pi, ell, w = _parse_mode(args.mode, um_to_m(config["signal.waist_um"]))
    cfg = engine.with_collection_waists(w, w)
    omega = 2 * math.pi * 299792458.0 * (
        1.0 / nm_to_m(args.wavelength_nm) - 1.0 / cfg.signal.center_wavelength) \
        if args.wavelength_nm else 0.0
    quad = QuadratureSpec(radial_nodes=args.radial_nodes, angular_nodes=args.angular_nodes)
    closed = mode_amplitude(cfg, ps, pi, ell, omega)
    if args.ell_signal is not None or args.ell_idler is not None:
        oracle = oracle_amplitude(cfg, ps, pi, ell, omega, quad,
                                  ell_signal=args.ell_signal, ell_idler=args.ell_idler)
    else:
        oracle = oracle_amplitude(cfg, ps, pi, ell, omega, quad)
    rel = abs(closed - oracle) / max(abs(oracle), 1e-300)
    data = {"mode": [ps, pi, ell], "waist_um": m_to_um(w), "omega_rad_s": omega,
            "closed_form": {"re": closed.real, "im": closed.imag},
            "oracle": {"re": oracle.real, "im": oracle.imag},
            "relative_difference": rel,
            "quadrature": {"radial_nodes": quad.radial_nodes,
                           "angular_nodes": quad.angular_nodes}}
    header = ["quantity", "re", "im"]
    rows = [["closed_form", closed.real, closed.imag],
            ["oracle", oracle.real, oracle.imag],
            ["relative_difference", rel, 0.0]]
    meta = emitter.meta(subspace={"mode": [ps, pi, ell]})
    emitter.emit("oracle_check", header, rows, data, meta, None)
    print(f"relative difference: {rel:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdcmodes",
        description="Frequency-resolved LG mode decomposition of collinear SPDC "
                    "and entanglement engineering datasets")
    parser.add_argument("--config", help="flat dotted-key config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key")
    parser.add_argument("--out", default="spdc_out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed for simulations")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--no-plot", action="store_true",
                        help="skip rendering companion figures")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="joint LG mode correlation matrix")
    p.add_argument("--pmax", type=int, default=2)
    p.add_argument("--ellmax", type=int, default=3)
    p.add_argument("--window", help="CENTER_NM,WIDTH_NM top-hat signal filter")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("spectrum", help="complex spectra of joint modes")
    p.add_argument("--modes", required=True,
                   help="comma list of p_s:p_i:ell[@waist_um]")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="collection probability vs waist")
    p.add_argument("--ells", default="0,1,2,3,4")
    p.add_argument("--wmin", type=float, default=10.0)
    p.add_argument("--wmax", type=float, default=100.0)
    p.add_argument("--wstep", type=float, default=2.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("overlap", help="spectral overlap matrix of OAM channels")
    p.add_argument("--channels", required=True, help="comma list of ell[@waist_um]")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("density", help="reduced spatial density matrix")
    p.add_argument("--channels", required=True, help="comma list of ell[@waist_um]")
    p.add_argument("--phi-sweep", action="store_true",
                   help="also report the phase-swept best fidelity")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("optimize", help="engineering procedures")
    opt_sub = p.add_subparsers(dest="optimize_command", required=True)
    pw = opt_sub.add_parser("waists", help="Procrustean per-OAM waist matching")
    pw.add_argument("--ells", default="1,2,3,4")
    pw.add_argument("--ref", type=int, default=4)
    pw.add_argument("--branch", choices=("small", "large"), default="small")
    pw.add_argument("--wmin", type=float, default=10.0)
    pw.add_argument("--wmax", type=float, default=100.0)
    pw.add_argument("--wstep", type=float, default=2.0)
    pw.set_defaults(func=cmd_optimize_waists)
    pm = opt_sub.add_parser("modes", help="radial-superposition optimization")
    pm.add_argument("--ells", default="0,1,2")
    pm.add_argument("--ref-ell", type=int, default=None)
    pm.add_argument("--pmax", type=int, default=10)
    pm.add_argument("--max-iters", type=int, default=20000)
    pm.set_defaults(func=cmd_optimize_modes)

    p = sub.add_parser("tomography", help="simulated projective tomography")
    tomo_sub = p.add_subparsers(dest="tomography_command", required=True)
    ts = tomo_sub.add_parser("simulate", help="simulate counts and reconstruct")
    ts.add_argument("--ells", required=True, help="two OAM labels, e.g. 1,2")
    ts.add_argument("--waists", required=True, help="two collection waists (um)")
    ts.add_argument("--counts", type=int, default=10000,
                    help="expected counts per projector setting")
    ts.set_defaults(func=cmd_tomography_simulate)
    tr = tomo_sub.add_parser("reconstruct", help="reconstruct from a counts file")
    tr.add_argument("--counts-file", required=True)
    tr.add_argument("--ells", required=True, help="two OAM labels, e.g. 1,2")
    tr.set_defaults(func=cmd_tomography_reconstruct)

    p = sub.add_parser("oracle", help="closed form vs brute-force quadrature")
    p.add_argument("--mode", required=True, help="p_s:p_i:ell[@waist_um]")
    p.add_argument("--wavelength-nm", type=float, default=None)
    p.add_argument("--ell-signal", type=int, default=None)
    p.add_argument("--ell-idler", type=int, default=None)
    p.add_argument("--radial-nodes", type=int, default=96)
    p.add_argument("--angular-nodes", type=int, default=128)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config, args.set)
        engine = build_engine_config(config)
        grid = build_grid(config, engine)
        emitter = Emitter(args.out, args.format, not args.no_plot, config, args.seed)
        code = args.func(args, config, engine, grid, emitter)
        emitter.report()
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SpdcError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
