"""Command-line interface.

Subcommands: fit, pd-design, evm-sweep, ber-sweep, ibo-sweep, eval-model.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error. Sweep commands are driven by a strict JSON config file; every run
emits enough metadata (config echo plus master seed) to reproduce it.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DataError, NumericalError, ThzpaError
from . import fitting
from .files import emit_results, load_model, parse_measurement_csv, save_model
from .linksim import LinkConfig, sweep_ber_vs_snr, sweep_evm_vs_nsc, sweep_pa_input_vs_ibo
from .pa_models import (
    PaModel,
    SalehParams,
    model_amplitude,
    model_phase,
    poly_amplitude,
    poly_phase,
)
from .predistortion import design_predistorter
from .units import volts_to_dbm
from .waveforms import WaveformConfig


def _select_curve(curves, fc):
    for curve in curves:
        if abs(curve.fc - fc) <= 1e-6 * max(abs(fc), 1.0):
            return curve
    freqs = ", ".join(f"{c.fc:g}" for c in curves)
    raise DataError(f"no measurement at fc={fc:g} Hz (available: {freqs})")


def _cmd_fit(args):
    if args.model != "poly" and args.order is not None:
        raise ConfigError("--order only applies to the polynomial model")
    curves = parse_measurement_csv(args.data, normalize=args.normalize_phase)
    curve = _select_curve(curves, args.fc)
    if args.model == "poly":
        order = args.order if args.order is not None else 9
        params, report = fitting.fit_polynomial(curve, order)
    elif args.model == "rapp":
        params, report = fitting.fit_rapp(curve, seed=args.seed)
    elif args.model == "ghorbani":
        params, report = fitting.fit_ghorbani(curve, seed=args.seed)
    else:
        amp_params, amp_report = fitting.fit_saleh(curve, branch="amplitude")
        ph_params, ph_report = fitting.fit_saleh(curve, branch="phase")
        params = SalehParams(
            alpha1=amp_params.alpha1,
            beta1=amp_params.beta1,
            alpha2=ph_params.alpha2,
            beta2=ph_params.beta2,
            n1=amp_params.n1,
            nu1=amp_params.nu1,
            n2=ph_params.n2,
            nu2=ph_params.nu2,
        )
        report = fitting.FitReport(
            model=PaModel(kind="saleh", params=params, fc=curve.fc),
            residual_amplitude=amp_report.residual_amplitude,
            residual_phase=ph_report.residual_phase,
            iterations=0,
        )
    model = report.model
    meta = {
        "source": str(args.data),
        "fit_residuals": {
            "amplitude": report.residual_amplitude,
            "phase": report.residual_phase,
        },
        "iterations": report.iterations,
        "converged": report.converged,
        "seed": report.seed,
    }
    save_model(args.out, model, meta=meta)
    print(f"wrote {args.out} (residuals: amp {report.residual_amplitude:.4g}, "
          f"phase {report.residual_phase:.4g})")
    return 0


def _cmd_pd_design(args):
    model = load_model(args.model)
    if model.kind != "rapp":
        raise ConfigError("predistorter design requires a Rapp model file")
    pd = design_predistorter(
        model.params,
        chi=args.chi,
        mode="polynomial",
        n_amp=args.na,
        n_phase=args.ntheta,
    )
    doc = {
        "model_ref": str(args.model),
        "rapp": {
            "g_lin": model.params.g_lin,
            "v_sat": model.params.v_sat,
            "p": model.params.p,
            "a_pm": model.params.a_pm,
            "b_pm": model.params.b_pm,
            "q1": model.params.q1,
            "q2": model.params.q2,
        },
        "chi_v": pd.chi,
        "gamma_v": pd.gamma,
        "n_amp": args.na,
        "n_phase": args.ntheta,
        "eta": list(pd.eta),
        "nu": list(pd.nu),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {out} (chi={pd.chi:g} V, gamma={pd.gamma:g} V)")
    return 0


def _cmd_eval_model(args):
    model = load_model(args.model)
    if model.kind == "polynomial":
        out = {
            "kind": model.kind,
            "fc_hz": model.fc,
            "pin_dbm": args.pin,
            "pout_dbm": float(poly_amplitude(args.pin, model.params)),
            "phase_deg": float(poly_phase(args.pin, model.params)),
        }
    else:
        amp = float(model_amplitude(args.pin, model))
        out = {
            "kind": model.kind,
            "fc_hz": model.fc,
            "pin_v": args.pin,
            "amplitude_out_v": amp,
            "pout_dbm": float(volts_to_dbm(amp)) if amp > 0 else None,
            "phase_deg": float(model_phase(args.pin, model)),
        }
    print(json.dumps(out))
    return 0


# ---------------------------------------------------------------------------
# sweep configuration
# ---------------------------------------------------------------------------

_WAVEFORM_KEYS = {
    "modulation_order",
    "n_subcarriers",
    "rolloff",
    "oversampling",
    "rrc_span",
    "cp_fraction",
    "n_symbols",
}
_LINK_KEYS = {
    "g_t_dbi",
    "g_r_dbi",
    "distance_m",
    "fc_hz",
    "bandwidth_hz",
    "noise_temperature_k",
    "atten_db_per_km",
}
_PD_KEYS = {"mode", "chi_v", "n_amp", "n_phase"}
_BER_KEYS = {"max_bits", "target_errors"}
_TOP_KEYS = {
    "seed",
    "model",
    "pd",
    "waveform",
    "link",
    "axis",
    "ibo_db",
    "snr_mode",
    "ber",
    "output",
}
_OUTPUT_KEYS = {"path", "formats"}


def _check_keys(section, allowed, where):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)} in {where}")


def _load_run_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "the top level")
    for key, allowed in (
        ("waveform", _WAVEFORM_KEYS),
        ("link", _LINK_KEYS),
        ("pd", _PD_KEYS),
        ("ber", _BER_KEYS),
        ("output", _OUTPUT_KEYS),
    ):
        if key in cfg:
            if not isinstance(cfg[key], dict):
                raise ConfigError(f"{path}: {key} section must be an object")
            _check_keys(cfg[key], allowed, f"the {key} section")
    if "axis" not in cfg or not cfg["axis"]:
        raise ConfigError(f"{path}: non-empty 'axis' list required")
    model_path = cfg.get("model")
    if model_path is not None and not Path(model_path).is_file():
        raise ConfigError(f"{path}: referenced model file not found: {model_path}")
    return cfg


def _build_sim(cfg):
    seed = int(cfg.get("seed", 0))
    wf = WaveformConfig(**cfg.get("waveform", {}))
    model = load_model(cfg["model"]) if cfg.get("model") else None
    pd_cfg = dict(cfg.get("pd", {"mode": "none"}))
    mode = pd_cfg.pop("mode", "none")
    if mode == "none":
        pd = None
    else:
        if model is None or model.kind != "rapp":
            raise ConfigError("predistortion requires a Rapp model")
        if mode not in ("ideal", "polynomial"):
            raise ConfigError(f"unknown pd mode {mode!r}")
        pd = design_predistorter(
            model.params,
            chi=pd_cfg.get("chi_v"),
            mode=mode,
            n_amp=int(pd_cfg.get("n_amp", 8)),
            n_phase=int(pd_cfg.get("n_phase", 8)),
        )
    return seed, wf, model, pd


def _emit(cfg, result, default_stem):
    out = cfg.get("output", {})
    stem = Path(out.get("path", default_stem))
    formats = out.get("formats", ["csv", "json"])
    result.metadata["config"] = {k: v for k, v in cfg.items() if k != "output"}
    written = []
    for fmt in formats:
        written.append(str(emit_results(result, stem.with_suffix("." + fmt), fmt)))
    print("wrote " + ", ".join(written))
    return 0


def _cmd_evm_sweep(args):
    cfg = _load_run_config(args.config)
    seed, wf, model, pd = _build_sim(cfg)
    result = sweep_evm_vs_nsc(
        [int(v) for v in cfg["axis"]],
        wf,
        model,
        pd,
        ibo_db=float(cfg.get("ibo_db", 0.0)),
        seed=seed,
        n_symbols=wf.n_symbols,
    )
    return _emit(cfg, result, "evm_sweep")


def _cmd_ibo_sweep(args):
    cfg = _load_run_config(args.config)
    seed, wf, model, pd = _build_sim(cfg)
    if model is None:
        raise ConfigError("ibo-sweep requires an amplifier model")
    result = sweep_pa_input_vs_ibo(
        [float(v) for v in cfg["axis"]],
        wf,
        model,
        pd,
        seed=seed,
        n_symbols=wf.n_symbols,
    )
    return _emit(cfg, result, "ibo_sweep")


def _cmd_ber_sweep(args):
    cfg = _load_run_config(args.config)
    seed, wf, model, pd = _build_sim(cfg)
    mode = cfg.get("snr_mode", "direct")
    link = LinkConfig(**cfg["link"]) if "link" in cfg else None
    ber_cfg = cfg.get("ber", {})
    result = sweep_ber_vs_snr(
        [float(v) for v in cfg["axis"]],
        wf,
        model,
        pd,
        mode=mode,
        ibo_db=float(cfg.get("ibo_db", 0.0)),
        link=link,
        seed=seed,
        target_errors=int(ber_cfg.get("target_errors", 100)),
        max_bits=int(ber_cfg.get("max_bits", 10_000_000)),
    )
    return _emit(cfg, result, "ber_sweep")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thzpa",
        description="Sub-THz PA behavioral modeling, predistortion, and link simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to measurement data")
    p.add_argument("--data", required=True, help="measurement CSV path")
    p.add_argument("--model", required=True, choices=["poly", "rapp", "saleh", "ghorbani"])
    p.add_argument("--order", type=int, default=None, help="polynomial order (poly only)")
    p.add_argument("--fc", type=float, required=True, help="center frequency in Hz")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize-phase", action="store_true",
                   help="reference phases to the -40 dBm point before fitting")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("pd-design", help="design a polynomial predistorter")
    p.add_argument("--model", required=True, help="Rapp model JSON path")
    p.add_argument("--chi", type=float, default=None, help="input clipping level in V")
    p.add_argument("--na", type=int, default=8, help="amplitude polynomial order")
    p.add_argument("--ntheta", type=int, default=8, help="phase polynomial order")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pd_design)

    p = sub.add_parser("eval-model", help="evaluate a model at one input level")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--pin", type=float, required=True,
                   help="input power in dBm (polynomial) or amplitude in V (others)")
    p.set_defaults(func=_cmd_eval_model)

    for name, func, help_text in (
        ("evm-sweep", _cmd_evm_sweep, "EVM vs subcarrier count"),
        ("ber-sweep", _cmd_ber_sweep, "Monte-Carlo BER vs SNR"),
        ("ibo-sweep", _cmd_ibo_sweep, "PA input power vs IBO"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.set_defaults(func=func)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except ThzpaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
