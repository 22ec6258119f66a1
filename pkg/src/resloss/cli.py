"""Batch command-line front end.

Subcommands wire the pipeline together: ``synth`` writes seeded fixture
sweeps, ``fit-s21`` turns sweeps into per-power loss points, ``fit-tls``
fits the saturable loss curve, ``extract`` runs the three-device solve
and ``error-map`` tabulates the single-measurement systematic error.

Every output embeds the tool version and the SHA-256 digests of its
inputs; nothing embeds a timestamp, so reruns on unchanged inputs are
byte-identical. All inputs are read and validated before the first
output file is written, and writes are atomic.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import error_analysis, fileio, synth
from .circuit import DesignKind
from .errors import (
    FitFailureError,
    GridRangeError,
    IllConditionedFitError,
    InconsistentInputsError,
    InsufficientBaselineError,
    OutOfSpanError,
    ReslossError,
)
from .extraction import ExtractionInput, extract
from .s21 import calibrate_and_fit, photon_number
from .tls import PowerSweepPoint, fit_power_sweep

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_EXTRACTION = 4
EXIT_RANGE = 5

_FIT_ERRORS = (FitFailureError, IllConditionedFitError, OutOfSpanError,
               InsufficientBaselineError)

PHOTON_CONVENTION = "side-coupled: n = 2*Q_l^2*P / (Q_c*hbar*omega0^2)"


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    out: str = "."
    beta: str = "fixed"
    threshold: float = 0.1
    seed: int | None = None
    grid: str | None = None
    axis: str = error_analysis.AXIS_INDUCTOR_LOSS
    curves: list[float] | None = None
    fixed: float | None = None
    delay: float | None = None
    baseline: complex | None = None
    # per-device TLS fit reports supplying the losses for `extract`
    fit_reports: dict[str, str] = field(default_factory=dict)


def _bundled_fixture(name: str) -> Path | None:
    ref = resources.files("resloss").joinpath("data", f"{name}.json")
    return Path(str(ref)) if ref.is_file() else None


def _resolve_input(spec: str) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    bundled = _bundled_fixture(spec)
    if bundled is not None:
        return bundled
    raise FileNotFoundError(f"input {spec!r} is neither a file nor a bundled fixture")


def _expand_sweep_inputs(specs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for spec in specs:
        path = Path(spec)
        if path.is_dir():
            paths.extend(sorted(path.glob("sweep_*.csv")) or sorted(path.glob("*.csv")))
        elif path.is_file():
            paths.append(path)
        else:
            raise FileNotFoundError(f"input {spec!r} does not exist")
    if not paths:
        raise FileNotFoundError("no sweep files found among the inputs")
    return paths


def _provenance(paths: list[Path]) -> dict:
    return {
        "tool_version": __version__,
        "input_files": [
            {"path": str(p), "digest": fileio.sha256_digest(p)} for p in paths
        ],
    }


def _csv_provenance_meta(paths: list[Path]) -> dict:
    meta = {"tool_version": __version__}
    for i, p in enumerate(paths):
        meta[f"input_digest_{i}"] = fileio.sha256_digest(p)
    return meta


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise GridRangeError(f"grid must be lo:hi:npts, got {spec!r}") from exc
    return error_analysis.log_grid(lo, hi, n)


# ---------------------------------------------------------------------------
# commands


def _cmd_synth(config: RunConfig) -> int:
    if config.inputs:
        truth_path = _resolve_input(config.inputs[0])
        doc = json.loads(truth_path.read_text(encoding="utf-8"))
        provenance = _provenance([truth_path])
    else:
        doc = _DEFAULT_TRUTH.copy()
        provenance = {"tool_version": __version__, "input_files": [{"path": "builtin:default-truth"}]}
    if config.seed is not None:
        doc["seed"] = config.seed
    baseline = doc.get("baseline", [1.0, 0.0])
    truth = synth.GroundTruth(
        f0=float(doc["f0"]),
        q_c=float(doc["q_c"]),
        phi=float(doc.get("phi", 0.0)),
        f_tan_delta0=float(doc["f_tan_delta0"]),
        n_c=float(doc["n_c"]),
        beta=float(doc.get("beta", 0.5)),
        q_hp=float(doc["q_hp"]),
        temperature=float(doc["temperature"]),
        span=float(doc["span"]),
        n_points=int(doc["n_points"]),
        powers=tuple(float(p) for p in doc["powers"]),
        s21_sigma=float(doc.get("s21_sigma", 0.0)),
        delay=float(doc.get("delay", 0.0)),
        baseline=complex(baseline[0], baseline[1]),
        loss_rel_sigma=float(doc.get("loss_rel_sigma", 0.0)),
        seed=int(doc.get("seed", 0)),
    )

    out = Path(config.out)
    sweep_files = []
    for i in range(len(truth.powers)):
        sweep = synth.generate_s21_sweep(truth, i)
        name = f"sweep_{i:03d}.csv"
        fileio.write_sweep(out / name, sweep, extra_meta={"tool_version": __version__})
        sweep_files.append(name)
    points = synth.generate_power_sweep(truth)
    fileio.write_power_sweep(
        out / "power_sweep.csv", points, truth.f0, truth.temperature,
        extra_meta={"tool_version": __version__},
    )
    manifest = {
        "command": "synth",
        "truth": {**doc, "baseline": list(baseline)},
        "sweep_files": sweep_files,
        "power_sweep_file": "power_sweep.csv",
        **provenance,
    }
    fileio.atomic_write_json(out / "manifest.json", manifest)
    print(f"synth: wrote {len(sweep_files)} sweeps to {out}")
    return EXIT_OK


def _cmd_fit_s21(config: RunConfig) -> int:
    paths = _expand_sweep_inputs(config.inputs)
    sweeps = [fileio.read_sweep(p) for p in paths]  # parse everything first

    results = []
    for path, sweep in zip(paths, sweeps):
        fit, _, _ = calibrate_and_fit(sweep, delay=config.delay, baseline=config.baseline)
        n = photon_number(sweep.power, fit.f0, fit.q_i, fit.q_c)
        results.append((path, sweep, fit, n))
    results.sort(key=lambda item: item[3])

    out = Path(config.out)
    report = {
        "command": "fit-s21",
        "photon_convention": PHOTON_CONVENTION,
        "results": [
            {
                "file": str(path),
                "power_w": sweep.power,
                "temperature_k": sweep.temperature,
                "f0_hz": fit.f0,
                "f0_err_hz": fit.f0_err,
                "q_i": fit.q_i,
                "q_i_err": fit.q_i_err,
                "q_c": fit.q_c,
                "q_c_err": fit.q_c_err,
                "phi_rad": fit.phi,
                "phi_err_rad": fit.phi_err,
                "loss": fit.loss,
                "loss_err": fit.loss_err,
                "photon_number": n,
                "residual_rms": fit.residual_rms,
                "converged": fit.converged,
            }
            for path, sweep, fit, n in results
        ],
        **_provenance(paths),
    }
    fileio.atomic_write_json(out / "fit_s21.json", report)

    points = [
        PowerSweepPoint(photons=n, loss=fit.loss, loss_sigma=fit.loss_err)
        for _, _, fit, n in results
    ]
    f0_mean = float(np.mean([fit.f0 for _, _, fit, _ in results]))
    temperature = results[0][1].temperature
    fileio.write_power_sweep(
        out / "power_sweep.csv", points, f0_mean, temperature,
        extra_meta=_csv_provenance_meta(paths),
    )
    print(f"fit-s21: fitted {len(results)} sweeps, wrote {out / 'fit_s21.json'}")
    return EXIT_OK


def _cmd_fit_tls(config: RunConfig) -> int:
    if len(config.inputs) != 1:
        raise ValueError("fit-tls takes exactly one power-sweep input")
    path = _resolve_input(config.inputs[0])
    points, f0, temperature, fractional = fileio.read_power_sweep(path)

    result = fit_power_sweep(
        points,
        omega0=2.0 * np.pi * f0,
        temperature=temperature,
        free_beta=(config.beta == "free"),
        fractional=fractional,
    )
    out = Path(config.out)
    report = {
        "command": "fit-tls",
        "options": {"beta": config.beta, "fractional": fractional},
        "f0_hz": f0,
        "temperature_k": temperature,
        "params": {
            "f_tan_delta0": result.params.f_tan_delta0,
            "n_c": result.params.n_c,
            "beta": result.params.beta,
            "q_hp": result.params.q_hp,
        },
        "uncertainties": {
            "f_tan_delta0": result.f_tan_delta0_err,
            "n_c": result.n_c_err,
            "beta": result.beta_err,
            "q_hp": result.q_hp_err,
        },
        "thermal_factor": result.params.thermal_factor,
        "n_c_physical": result.n_c_physical,
        "residual_rms": result.residual_rms,
        "converged": result.converged,
        **_provenance([path]),
    }
    fileio.atomic_write_json(out / "fit_tls.json", report)
    print(
        f"fit-tls: f_tan_delta0 = {result.params.f_tan_delta0:.6g} "
        f"+/- {result.f_tan_delta0_err:.2g}"
    )
    return EXIT_OK


def _find_record(records, kind: DesignKind):
    matches = [r for r in records if r.design is kind]
    if len(matches) != 1:
        raise ValueError(f"device table must contain exactly one {kind.value} row")
    return matches[0]


def _load_fit_loss(path) -> tuple[float, float]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return float(doc["params"]["f_tan_delta0"]), float(
        doc.get("uncertainties", {}).get("f_tan_delta0", 0.0))


def _cmd_extract(config: RunConfig) -> int:
    if len(config.inputs) != 1:
        raise ValueError("extract takes exactly one device-table input")
    path = _resolve_input(config.inputs[0])
    records, reference = fileio.read_device_table(path)

    ppc = _find_record(records, DesignKind.LE_PPC)
    idc = _find_record(records, DesignKind.LE_IDC)
    cpw = _find_record(records, DesignKind.CPW)
    fit_paths = {k: _resolve_input(v) for k, v in config.fit_reports.items()}
    losses = {}
    for key, rec in (("ppc", ppc), ("idc", idc), ("cpw", cpw)):
        if key in fit_paths:
            losses[key] = _load_fit_loss(fit_paths[key])
        elif rec.loss is not None:
            losses[key] = (rec.loss, rec.loss_err or 0.0)
        else:
            raise ValueError(
                f"device {rec.label or rec.design.value}: no loss in the table "
                f"and no --{key}-fit report given"
            )
    if ppc.circuit is None or idc.circuit is None:
        raise ValueError("PPC and IDC rows must carry circuit models")

    result = extract(
        ExtractionInput(
            ppc_resonator_loss=losses["ppc"][0],
            idc_resonator_loss=losses["idc"][0],
            cpw_loss=losses["cpw"][0],
            ppc_circuit=ppc.circuit,
            idc_circuit=idc.circuit,
            ppc_resonator_loss_err=losses["ppc"][1],
            idc_resonator_loss_err=losses["idc"][1],
            cpw_loss_err=losses["cpw"][1],
        )
    )

    report = {
        "command": "extract",
        "inputs": {
            "ppc": {"loss": losses["ppc"][0], "loss_err": losses["ppc"][1],
                    "C_C_f": ppc.circuit.cap_capacitance,
                    "C_L_f": ppc.circuit.stray_capacitance},
            "idc": {"loss": losses["idc"][0], "loss_err": losses["idc"][1],
                    "C_C_f": idc.circuit.cap_capacitance,
                    "C_L_f": idc.circuit.stray_capacitance},
            "cpw": {"loss": losses["cpw"][0], "loss_err": losses["cpw"][1]},
        },
        "idc_loss_proxy": result.idc_loss_proxy,
        "cpw_proxy_assumed": result.cpw_proxy_assumed,
        "inductor_loss": result.inductor_loss,
        "inductor_loss_err": result.inductor_loss_err,
        "ppc_loss": result.ppc_loss,
        "ppc_loss_err": result.ppc_loss_err,
        "single_measurement": result.single_measurement,
        "single_measurement_err": result.single_measurement_err,
        "fractional_difference": result.fractional_difference,
        **_provenance([path] + sorted(fit_paths.values())),
    }
    if reference:
        comparison = {"values": reference}
        if "inductor_loss" in reference:
            ref = float(reference["inductor_loss"])
            comparison["inductor_loss_relative_deviation"] = (
                result.inductor_loss - ref
            ) / ref
        if "ppc_loss" in reference:
            ref = float(reference["ppc_loss"])
            comparison["ppc_loss_relative_deviation"] = (result.ppc_loss - ref) / ref
        report["reference"] = comparison

    fileio.atomic_write_json(Path(config.out) / "extract.json", report)
    print(
        f"extract: inductor loss {result.inductor_loss:.4g}, "
        f"capacitor loss {result.ppc_loss:.4g}, "
        f"single-measurement {result.single_measurement:.4g} "
        f"(difference {result.fractional_difference:.3f})"
    )
    if reference and "inductor_loss" in reference:
        print(
            f"extract: reference inductor loss {float(reference['inductor_loss']):.4g} "
            f"({reference.get('note', 'reference value supplied with the dataset')})"
        )
    return EXIT_OK


def _cmd_error_map(config: RunConfig) -> int:
    grid = _parse_grid(config.grid or "1e-7:1e-1:61")
    axis = config.axis
    if axis == error_analysis.AXIS_INDUCTOR_LOSS:
        curves = config.curves or [1.12e-7, 1.12e-6, 1.12e-5, 1.12e-4, 1.12e-3]
        fixed = config.fixed if config.fixed is not None else 0.102
    else:
        curves = config.curves or [0.001, 0.01, 0.102, 0.3]
        fixed = config.fixed if config.fixed is not None else 1.12e-5
    emap = error_analysis.error_map(
        axis, grid, curves, fixed, threshold=config.threshold
    )

    out = Path(config.out)
    curve_name = "inductor_loss" if axis == error_analysis.AXIS_INDUCTOR_LOSS else "participation"
    header = ["capacitor_loss"] + [f"{curve_name}_{fileio.fmt(c)}" for c in emap.curves]
    lines = [f"# tool_version = {__version__}"]
    lines.append(f"# axis = {axis}")
    lines.append(f"# fixed_value = {fileio.fmt(emap.fixed_value)}")
    lines.append(",".join(header))
    for i, cap in enumerate(emap.capacitor_loss_grid):
        row = [fileio.fmt(cap)] + [fileio.fmt(v) for v in emap.signed[i]]
        lines.append(",".join(row))
    fileio.atomic_write_text(out / "error_map.csv", "\n".join(lines) + "\n")

    boundaries = []
    for j, curve in enumerate(emap.curves):
        mags = emap.magnitude[:, j]
        inside = mags <= emap.threshold
        boundaries.append({
            "curve": curve,
            "asymptote": emap.asymptotes()[j],
            "measurable_fraction": float(np.mean(inside)),
            "measurable_min_capacitor_loss": (
                float(emap.capacitor_loss_grid[inside].min()) if inside.any() else None
            ),
            "measurable_max_capacitor_loss": (
                float(emap.capacitor_loss_grid[inside].max()) if inside.any() else None
            ),
        })
    summary = {
        "command": "error-map",
        "tool_version": __version__,
        "axis": axis,
        "fixed_value": emap.fixed_value,
        "threshold": emap.threshold,
        "grid": {"lo": float(grid[0]), "hi": float(grid[-1]), "n": int(grid.size)},
        "curves": boundaries,
    }
    fileio.atomic_write_json(out / "error_map_summary.json", summary)
    print(f"error-map: wrote {grid.size}x{len(emap.curves)} map to {out}")
    return EXIT_OK


# Strong coupling keeps the loaded linewidth nearly constant while Q_i
# swings over three decades, so one span and point count serve every power.
_DEFAULT_TRUTH = {
    "f0": 3.7464e9,
    "q_c": 3e3,
    "phi": 0.05,
    "f_tan_delta0": 9.2e-4,
    "n_c": 10.0,
    "beta": 0.5,
    "q_hp": 1e6,
    "temperature": 0.1,
    "span": 7.5e7,
    "n_points": 1001,
    "powers": [float(p) for p in np.geomspace(1e-18, 1e-13, 21)],
    "s21_sigma": 0.0,
    "delay": 0.0,
    "baseline": [1.0, 0.0],
    "loss_rel_sigma": 0.0,
    "seed": 0,
}


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resloss",
        description="Dielectric loss extraction for superconducting microwave resonators",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", action="append", default=[],
                       help="input file (repeatable); 'table1' selects the bundled fixture")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("synth", help="generate seeded synthetic fixtures")
    common(p)
    p.add_argument("--seed", type=int, default=None, help="override the truth seed")

    p = sub.add_parser("fit-s21", help="fit complex transmission sweeps")
    common(p)
    p.add_argument("--delay", type=float, default=None,
                   help="cable delay in seconds (default: estimated)")
    p.add_argument("--baseline", default=None,
                   help="complex baseline as re,im (default: estimated)")

    p = sub.add_parser("fit-tls", help="fit the saturable loss curve to a power sweep")
    common(p)
    p.add_argument("--beta", choices=("fixed", "free"), default="fixed")

    p = sub.add_parser("extract", help="run the three-device loss extraction")
    common(p)
    p.add_argument("--ppc-fit", default=None,
                   help="TLS fit report supplying the PPC resonator loss")
    p.add_argument("--idc-fit", default=None,
                   help="TLS fit report supplying the IDC resonator loss")
    p.add_argument("--cpw-fit", default=None,
                   help="TLS fit report supplying the CPW loss")

    p = sub.add_parser("error-map", help="tabulate the single-measurement error")
    common(p)
    p.add_argument("--axis", choices=(error_analysis.AXIS_INDUCTOR_LOSS,
                                      error_analysis.AXIS_PARTICIPATION),
                   default=error_analysis.AXIS_INDUCTOR_LOSS)
    p.add_argument("--grid", default=None, help="capacitor-loss grid lo:hi:npts (log-spaced)")
    p.add_argument("--curves", default=None, help="comma-separated curve values")
    p.add_argument("--fixed", type=float, default=None,
                   help="fixed participation (inductor_loss axis) or inductor loss")
    p.add_argument("--threshold", type=float, default=0.1,
                   help="measurable-regime error threshold")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(command=args.command, inputs=list(args.input), out=args.out)
    if hasattr(args, "seed"):
        config.seed = args.seed
    if hasattr(args, "beta"):
        config.beta = args.beta
    if hasattr(args, "threshold"):
        config.threshold = args.threshold
    if hasattr(args, "grid"):
        config.grid = args.grid
    if hasattr(args, "axis"):
        config.axis = args.axis
    if getattr(args, "curves", None):
        config.curves = [float(c) for c in args.curves.split(",")]
    if hasattr(args, "fixed"):
        config.fixed = args.fixed
    if hasattr(args, "delay"):
        config.delay = args.delay
    if getattr(args, "baseline", None):
        re_s, _, im_s = args.baseline.partition(",")
        config.baseline = complex(float(re_s), float(im_s or 0.0))
    for key in ("ppc", "idc", "cpw"):
        value = getattr(args, f"{key}_fit", None)
        if value:
            config.fit_reports[key] = value
    return config


_COMMANDS = {
    "synth": _cmd_synth,
    "fit-s21": _cmd_fit_s21,
    "fit-tls": _cmd_fit_tls,
    "extract": _cmd_extract,
    "error-map": _cmd_error_map,
}


def run(config: RunConfig) -> int:
    return _COMMANDS[config.command](config)


def _error_report(exc: Exception, status: int) -> str:
    report = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_status": status,
    }
    stage = getattr(exc, "stage", None)
    if stage:
        report["stage"] = stage
    regime = getattr(exc, "missing_regime", None)
    if regime:
        report["missing_regime"] = regime
    return json.dumps(report, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)
    try:
        return run(config)
    except _FIT_ERRORS as exc:
        print(_error_report(exc, EXIT_FIT), file=sys.stderr)
        return EXIT_FIT
    except InconsistentInputsError as exc:
        print(_error_report(exc, EXIT_EXTRACTION), file=sys.stderr)
        return EXIT_EXTRACTION
    except GridRangeError as exc:
        print(_error_report(exc, EXIT_RANGE), file=sys.stderr)
        return EXIT_RANGE
    except (OSError, ValueError, KeyError, json.JSONDecodeError, ReslossError) as exc:
        print(_error_report(exc, EXIT_INPUT), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
