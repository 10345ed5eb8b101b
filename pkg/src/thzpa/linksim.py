"""End-to-end link simulation: modulator, predistorter, amplifier, AWGN
channel, demodulator, equalizer, and the EVM / BER sweep drivers.

The chain is deterministic for a given master seed: payload bits and
noise use counter-based Philox streams keyed on (seed, role, point,
batch), so sweep points are independent and reproducible in isolation.

SNR follows the receiver-side convention SNR = P_r / sigma^2 with the
noise power referred to the nominal signal bandwidth (the symbol rate).
In direct mode the requested SNR sets the noise from the measured
post-amplifier power; in link-budget mode the drive level is solved so
that the free-space link closes at the requested SNR with kTB noise.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .buffers import SampleBuffer
from .errors import ConfigError, DomainError, NumericalError
from .pa_models import PaModel, apply_pa, compression_point_for_model
from .predistortion import Predistorter, apply_predistorter
from .units import (
    BOLTZMANN_J_PER_K,
    SPEED_OF_LIGHT_M_PER_S,
    dbm_to_watts,
    volts_to_dbm,
    watts_to_dbm,
)
from .waveforms import WaveformConfig, demodulate, equalize, evm, modulate, qam_demap, qam_map, scale_to_power

__all__ = [
    "LinkConfig",
    "ChainResult",
    "SweepResult",
    "free_space_path_loss_db",
    "received_power",
    "noise_power",
    "run_chain",
    "sweep_evm_vs_nsc",
    "sweep_pa_input_vs_ibo",
    "sweep_ber_vs_snr",
    "DEFAULT_ATTEN_DB_PER_KM",
]

# Atmospheric specific attenuation default, read from the ITU-R P.676-12
# standard-atmosphere charts (101.3 kPa, 290 K, 7.5 g/m^3 water vapor)
# around 315 GHz, between the ~20 dB/km window at 300 GHz and the 325 GHz
# water-vapor line. Below 70 m range its contribution stays under ~2 dB.
DEFAULT_ATTEN_DB_PER_KM = 30.0

BER_TARGET_ERRORS = 100
BER_MAX_BITS = 10_000_000
EVM_SWEEP_SYMBOLS = 20_000


@dataclass(frozen=True)
class LinkConfig:
    """Point-to-point link budget parameters."""

    g_t_dbi: float = 45.0
    g_r_dbi: float = 14.0
    distance_m: float = 35.0
    fc_hz: float = 315e9
    bandwidth_hz: float = 1e9
    noise_temperature_k: float = 290.0
    atten_db_per_km: float = DEFAULT_ATTEN_DB_PER_KM

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ConfigError("distance must be positive")
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth must be positive")
        if not self.noise_temperature_k > 0:
            raise ConfigError("noise temperature must be positive")
        if not self.fc_hz > 0:
            raise ConfigError("carrier frequency must be positive")
        for g in (self.g_t_dbi, self.g_r_dbi, self.atten_db_per_km):
            if not math.isfinite(g):
                raise ConfigError("link gains and attenuation must be finite")


def free_space_path_loss_db(distance_m, fc_hz):
    lam = SPEED_OF_LIGHT_M_PER_S / fc_hz
    return 20.0 * math.log10(4.0 * math.pi * distance_m / lam)


def received_power(p_t_dbm, cfg: LinkConfig):
    """Received power in dBm: antenna gains minus free-space and gaseous loss."""
    return (
        p_t_dbm
        + cfg.g_t_dbi
        + cfg.g_r_dbi
        - free_space_path_loss_db(cfg.distance_m, cfg.fc_hz)
        - cfg.atten_db_per_km * cfg.distance_m / 1000.0
    )


def noise_power(cfg: LinkConfig):
    """Thermal noise power kB * Tn * B in dBm."""
    return watts_to_dbm(BOLTZMANN_J_PER_K * cfg.noise_temperature_k * cfg.bandwidth_hz)


def link_gain_db(cfg: LinkConfig):
    return received_power(0.0, cfg)


@dataclass
class ChainResult:
    evm_db: float
    ber: float | None
    n_bits: int
    n_bit_errors: int
    mean_pa_input_dbm: float
    clip_rate: float
    snr_db: float | None
    seed: int


@dataclass
class SweepResult:
    """Tabulated sweep output: aligned axis values and metric rows."""

    axis_name: str
    axis: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.axis) != len(self.rows):
            raise ConfigError("sweep rows must align with the axis")
        for row in self.rows:
            ber = row.get("ber")
            if ber is not None and not math.isnan(ber) and not 0.0 <= ber <= 0.5:
                raise NumericalError(f"BER {ber} outside [0, 0.5]")

    def column_names(self):
        names = [self.axis_name]
        for row in self.rows:
            for key in row:
                if key not in names:
                    names.append(key)
        return names


def _rng(seed, *stream):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, *stream))))


def _payload(wf: WaveformConfig, seed, point=0, batch=0):
    n_bits = wf.n_symbols * wf.bits_per_symbol
    bits = _rng(seed, 0, point, batch).integers(0, 2, size=n_bits, dtype=np.int8)
    return bits, qam_map(bits, wf.modulation_order)


def _add_awgn(buffer: SampleBuffer, noise_var_per_sample, seed, point=0, batch=0):
    rng = _rng(seed, 1, point, batch)
    scale = np.sqrt(noise_var_per_sample / 2.0)
    noise = scale * (
        rng.standard_normal(len(buffer)) + 1j * rng.standard_normal(len(buffer))
    )
    return SampleBuffer(buffer.samples + noise, buffer.sample_rate)


def _chain_once(
    wf: WaveformConfig,
    model: PaModel | None,
    pd: Predistorter | None,
    seed,
    *,
    ibo_db=None,
    drive_scale=None,
    snr_db=None,
    noise_var_per_sample=None,
    channel_gain_db=0.0,
    point=0,
    batch=0,
) -> ChainResult:
    """One modulate -> predistort -> amplify -> AWGN -> demodulate pass.

    Drive level comes either from ibo_db (referred to the model's 1-dB
    compression point) or from an explicit drive_scale. Noise comes
    either from snr_db (relative to measured post-amplifier power) or
    from an explicit per-sample variance after the channel gain.
    """
    bits, symbols = _payload(wf, seed, point, batch)
    x = modulate(symbols, wf)

    if drive_scale is not None:
        # drive_scale is the exact RMS envelope at the predistorter input
        x = scale_to_power(x, drive_scale**2)
    elif ibo_db is not None and model is not None:
        x1 = compression_point_for_model(model)
        x = scale_to_power(x, x1**2 / 10.0 ** (ibo_db / 10.0))

    if pd is not None:
        y, n_clip = apply_predistorter(x, pd)
    else:
        y, n_clip = x, 0

    z = apply_pa(y, model) if model is not None else y

    snr_requested = snr_db
    if channel_gain_db:
        z = z.scaled(10.0 ** (channel_gain_db / 20.0))
    if snr_db is not None:
        noise_var_per_sample = z.mean_power * wf.os / 10.0 ** (snr_db / 10.0)
    if noise_var_per_sample is not None:
        rx = _add_awgn(z, noise_var_per_sample, seed, point, batch)
        snr_requested = 10.0 * math.log10(z.mean_power * wf.os / noise_var_per_sample)
    else:
        rx = z

    rx_symbols = demodulate(rx, wf)
    streams = wf.n_subcarriers if wf.n_subcarriers > 1 else 1
    eq = equalize(rx_symbols, symbols, n_streams=streams)
    evm_db = evm(eq, symbols)

    if noise_var_per_sample is not None:
        rx_bits = qam_demap(eq, wf.modulation_order)
        n_err = int(np.count_nonzero(rx_bits != bits))
        ber = n_err / bits.size
    else:
        n_err, ber = 0, None

    mean_pa_in = volts_to_dbm(math.sqrt(y.mean_power)) if y.mean_power > 0 else -math.inf
    return ChainResult(
        evm_db=evm_db,
        ber=ber,
        n_bits=bits.size if ber is not None else 0,
        n_bit_errors=n_err,
        mean_pa_input_dbm=float(mean_pa_in),
        clip_rate=n_clip / len(y),
        snr_db=snr_requested,
        seed=seed,
    )


def run_chain(
    wf: WaveformConfig,
    model: PaModel | None,
    pd: Predistorter | None = None,
    ibo_db=0.0,
    snr_db=None,
    seed=0,
) -> ChainResult:
    """Run the full chain once. model=None is the ideal linear amplifier
    stand-in (no back-off scaling applies); snr_db=None runs noiseless
    and reports EVM only."""
    if wf.n_subcarriers > 1 and wf.n_symbols % wf.n_subcarriers:
        raise ConfigError("n_symbols must be divisible by n_subcarriers")
    if pd is not None and model is not None and model.kind != "rapp":
        raise ConfigError("predistortion requires a Rapp amplifier model")
    return _chain_once(wf, model, pd, seed, ibo_db=ibo_db, snr_db=snr_db)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _pd_metadata(pd: Predistorter | None):
    if pd is None:
        return {"mode": "none"}
    meta = {"mode": pd.mode, "chi_v": pd.chi, "gamma_v": pd.gamma}
    if pd.mode == "polynomial":
        meta["n_amp"] = len(pd.eta) - 1
        meta["n_phase"] = len(pd.nu) - 1
    return meta


def _base_metadata(wf, model, pd, seed):
    return {
        "seed": seed,
        "waveform": {
            "modulation_order": wf.modulation_order,
            "n_subcarriers": wf.n_subcarriers,
            "rolloff": wf.rolloff,
            "oversampling": wf.os,
            "rrc_span": wf.rrc_span,
            "cp_fraction": wf.cp_fraction,
            "n_symbols": wf.n_symbols,
        },
        "model": None if model is None else {"kind": model.kind, "fc_hz": model.fc},
        "pd": _pd_metadata(pd),
    }


def sweep_evm_vs_nsc(
    nsc_list,
    wf: WaveformConfig,
    model: PaModel | None,
    pd: Predistorter | None = None,
    ibo_db=0.0,
    seed=0,
    n_symbols=EVM_SWEEP_SYMBOLS,
) -> SweepResult:
    """Noiseless distortion-limited EVM across subcarrier counts."""
    rows = []
    for i, nsc in enumerate(nsc_list):
        nsc = int(nsc)
        n_sym = n_symbols if nsc == 1 else (n_symbols // nsc) * nsc
        cfg = WaveformConfig(
            modulation_order=wf.modulation_order,
            n_subcarriers=nsc,
            rolloff=wf.rolloff,
            rrc_span=wf.rrc_span,
            cp_fraction=wf.cp_fraction,
            n_symbols=max(n_sym, nsc),
            seed=wf.seed,
        )
        res = _chain_once(cfg, model, pd, seed, ibo_db=ibo_db, point=i)
        rows.append(
            {
                "evm_db": res.evm_db,
                "mean_pa_input_dbm": res.mean_pa_input_dbm,
                "clip_rate": res.clip_rate,
            }
        )
    meta = _base_metadata(wf, model, pd, seed)
    meta["ibo_db"] = ibo_db
    meta["n_symbols_per_point"] = n_symbols
    return SweepResult("n_subcarriers", [int(n) for n in nsc_list], rows, meta)


def sweep_pa_input_vs_ibo(
    ibo_list,
    wf: WaveformConfig,
    model: PaModel,
    pd: Predistorter | None = None,
    seed=0,
    n_symbols=EVM_SWEEP_SYMBOLS,
) -> SweepResult:
    """Average amplifier input power (and clip rate, EVM) versus back-off."""
    n_sym = n_symbols if wf.n_subcarriers == 1 else max((n_symbols // wf.n_subcarriers) * wf.n_subcarriers, wf.n_subcarriers)
    cfg = WaveformConfig(
        modulation_order=wf.modulation_order,
        n_subcarriers=wf.n_subcarriers,
        rolloff=wf.rolloff,
        rrc_span=wf.rrc_span,
        cp_fraction=wf.cp_fraction,
        n_symbols=n_sym,
        seed=wf.seed,
    )
    rows = []
    for i, ibo in enumerate(ibo_list):
        res = _chain_once(cfg, model, pd, seed, ibo_db=float(ibo), point=i)
        rows.append(
            {
                "mean_pa_input_dbm": res.mean_pa_input_dbm,
                "clip_rate": res.clip_rate,
                "evm_db": res.evm_db,
            }
        )
    meta = _base_metadata(wf, model, pd, seed)
    meta["n_symbols_per_point"] = n_sym
    return SweepResult("ibo_db", [float(v) for v in ibo_list], rows, meta)


def _solve_drive_scale(wf, model, pd, target_out_watts, seed, tol_db=0.005):
    """Bisect the modulator output scale so the mean post-PA power hits the
    target. The PA output power is monotone in the drive, bounded by
    saturation; unreachable targets raise NumericalError."""
    _, symbols = _payload(wf, seed, point=0, batch=0)
    x = modulate(symbols, wf)
    x = scale_to_power(x, 1.0)

    def out_power(scale):
        drive = x.scaled(scale)
        if pd is not None:
            drive, _ = apply_predistorter(drive, pd)
        return apply_pa(drive, model).mean_power if model is not None else drive.mean_power

    lo, hi = 1e-6, 1.0
    while out_power(hi) < target_out_watts:
        hi *= 4.0
        if hi > 1e3:
            raise NumericalError(
                f"target output power {watts_to_dbm(target_out_watts):.2f} dBm "
                "is beyond amplifier saturation"
            )
    while out_power(lo) > target_out_watts:
        lo /= 4.0
        if lo < 1e-12:
            raise NumericalError("target output power too low to bracket")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if out_power(mid) < target_out_watts:
            lo = mid
        else:
            hi = mid
        if 10.0 * math.log10(hi / lo) < tol_db / 2.0:
            break
    return math.sqrt(lo * hi)


def _ber_point(i, snr_db, wf, model, pd, mode, ibo_db, link, seed, target_errors, max_bits):
    point_kwargs = {}
    ibo_realized = ibo_db
    if mode == "direct":
        point_kwargs["snr_db"] = snr_db
        point_kwargs["ibo_db"] = ibo_db
    else:
        gain_db = link_gain_db(link)
        noise_w = dbm_to_watts(noise_power(link))
        target_rx_w = noise_w * 10.0 ** (snr_db / 10.0)
        target_out_w = target_rx_w / 10.0 ** (gain_db / 10.0)
        if model is not None:
            scale = _solve_drive_scale(wf, model, pd, target_out_w, seed)
            x1 = compression_point_for_model(model)
            ibo_realized = 10.0 * math.log10(x1**2 / scale**2)
        else:
            scale = math.sqrt(target_out_w)
            ibo_realized = math.nan
        point_kwargs["drive_scale"] = scale
        point_kwargs["channel_gain_db"] = gain_db
        point_kwargs["noise_var_per_sample"] = noise_w * wf.os

    bits_total = 0
    errors_total = 0
    evm_last = math.nan
    mean_pa_in = math.nan
    clip_rate = math.nan
    batch = 0
    while errors_total < target_errors and bits_total < max_bits:
        res = _chain_once(wf, model, pd, seed, point=i, batch=batch, **point_kwargs)
        bits_total += res.n_bits
        errors_total += res.n_bit_errors
        evm_last = res.evm_db
        mean_pa_in = res.mean_pa_input_dbm
        clip_rate = res.clip_rate
        batch += 1
    ber = errors_total / bits_total if bits_total else math.nan
    stderr = math.sqrt(ber * (1.0 - ber) / bits_total) if bits_total else math.nan
    return {
        "ber": min(ber, 0.5),
        "ber_stderr": stderr,
        "n_bits": bits_total,
        "n_errors": errors_total,
        "flagged": int(errors_total < target_errors),
        "evm_db": evm_last,
        "mean_pa_input_dbm": mean_pa_in,
        "clip_rate": clip_rate,
        "ibo_db": ibo_realized,
    }


def sweep_ber_vs_snr(
    snr_list,
    wf: WaveformConfig,
    model: PaModel | None,
    pd: Predistorter | None = None,
    mode="direct",
    ibo_db=0.0,
    link: LinkConfig | None = None,
    seed=0,
    target_errors=BER_TARGET_ERRORS,
    max_bits=BER_MAX_BITS,
) -> SweepResult:
    """Monte-Carlo BER versus SNR.

    mode "direct" holds the drive at ibo_db and sets the noise from the
    measured post-amplifier power at each requested SNR. mode
    "link-budget" solves the drive level per point so the link closes at
    the requested SNR against kTB noise through the configured path
    loss; the realized back-off is reported per point.

    Each point accumulates payload batches until target_errors bit
    errors are seen or max_bits is spent; under-resolved points are
    flagged. The Monte-Carlo standard error is reported per point.
    """
    if mode not in ("direct", "link-budget"):
        raise ConfigError(f"unknown BER sweep mode {mode!r}")
    if mode == "link-budget":
        if link is None:
            raise ConfigError("link-budget mode requires a LinkConfig")
        if model is None and pd is not None:
            raise ConfigError("predistortion without an amplifier model")

    rows = []
    for i, snr_db in enumerate(snr_list):
        try:
            rows.append(
                _ber_point(
                    i, float(snr_db), wf, model, pd, mode, ibo_db, link, seed,
                    target_errors, max_bits,
                )
            )
        except (NumericalError, DomainError) as exc:
            # record the failed point and keep sweeping
            rows.append(
                {
                    "ber": math.nan,
                    "ber_stderr": math.nan,
                    "n_bits": 0,
                    "n_errors": 0,
                    "flagged": 1,
                    "evm_db": math.nan,
                    "mean_pa_input_dbm": math.nan,
                    "clip_rate": math.nan,
                    "ibo_db": math.nan,
                    "error": str(exc),
                }
            )

    meta = _base_metadata(wf, model, pd, seed)
    meta.update(
        {
            "mode": mode,
            "target_errors": target_errors,
            "max_bits": max_bits,
            "total_bits": int(sum(r["n_bits"] for r in rows)),
        }
    )
    if link is not None:
        meta["link"] = {
            "g_t_dbi": link.g_t_dbi,
            "g_r_dbi": link.g_r_dbi,
            "distance_m": link.distance_m,
            "fc_hz": link.fc_hz,
            "bandwidth_hz": link.bandwidth_hz,
            "noise_temperature_k": link.noise_temperature_k,
            "atten_db_per_km": link.atten_db_per_km,
        }
    return SweepResult("snr_db", [float(s) for s in snr_list], rows, meta)
