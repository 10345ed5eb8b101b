"""Acceptance suite: one test per criterion, each printing a PASS line
with the measured figures (run with -s or -v to see them). Every
tolerance is fixed here, not configurable."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from thzpa import (
    LinkConfig,
    WaveformConfig,
    design_predistorter,
    load_builtin_model,
    noise_power,
    rapp_amplitude,
    run_chain,
    sweep_ber_vs_snr,
    sweep_evm_vs_nsc,
)
from thzpa.fitting import saleh_closed_form
from thzpa.files import builtin_model_path
from thzpa.linksim import free_space_path_loss_db
from thzpa.pa_models import apply_pa, compression_point_1db, compression_point_1db_bisect
from thzpa.predistortion import apply_predistorter, ideal_amplitude_pd
from thzpa.buffers import SampleBuffer

from helpers import CHI_315_V, brute_force_saleh, qam_theory_ber, scalar_saleh


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the jit kernels outside any timed section
    model = load_builtin_model("rapp")
    pd = design_predistorter(model.params, chi=CHI_315_V, mode="polynomial", n_amp=4, n_phase=4)
    buf = SampleBuffer(np.full(64, 1e-3 + 0j))
    out, _ = apply_predistorter(buf, pd)
    apply_pa(out, model)
    ideal_amplitude_pd(np.full(16, 1e-3), design_predistorter(model.params, chi=CHI_315_V))


@pytest.fixture(scope="module")
def rapp_model():
    return load_builtin_model("rapp")


def report(num, detail):
    print(f"ACCEPTANCE {num:02d} PASS: {detail}")


def crossing_snr(snrs, bers, target):
    """SNR where a monotone BER curve crosses `target` (log-linear interp)."""
    for (s1, b1), (s2, b2) in zip(zip(snrs, bers), list(zip(snrs, bers))[1:]):
        if b1 >= target >= b2:
            t = (math.log10(target) - math.log10(b1)) / (math.log10(b2) - math.log10(b1))
            return s1 + t * (s2 - s1)
    raise AssertionError(f"curve never crosses {target}")


def theory_crossing_snr(m, target, lo=10.0, hi=35.0):
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if qam_theory_ber(m, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_01_table_anchor_via_cli():
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "thzpa", "eval-model",
         "--model", str(builtin_model_path("polynomial")), "--pin", "0"],
        capture_output=True, text=True,
    )
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    out = json.loads(proc.stdout)
    assert abs(out["pout_dbm"] - 4.93685) <= 1e-9
    assert abs(out["phase_deg"] - (-46.00981)) <= 1e-9
    assert elapsed < 1.0
    report(1, f"pout {out['pout_dbm']} dBm, phase {out['phase_deg']} deg, {elapsed:.2f} s")


def test_criterion_02_rapp_inverse_identity(rapp_model):
    t0 = time.perf_counter()
    params = rapp_model.params
    pd = design_predistorter(params, chi=CHI_315_V, mode="ideal")
    rho = np.linspace(1e-6, 0.99 * CHI_315_V, 10_000)
    amp = rapp_amplitude(ideal_amplitude_pd(rho, pd), params)
    amp_rel = np.max(np.abs(amp - params.g_lin * rho) / (params.g_lin * rho))
    assert amp_rel < 1e-9

    phases = np.exp(1j * np.linspace(-np.pi, np.pi, rho.size, endpoint=False))
    pd_out, _ = apply_predistorter(SampleBuffer(rho * phases), pd)
    pa_out = apply_pa(pd_out, rapp_model)
    arg_err = np.rad2deg(np.abs(np.angle(pa_out.samples * np.conj(phases)))).max()
    assert arg_err < 1e-6
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(2, f"amp residual {amp_rel:.2e}, phase residual {arg_err:.2e} deg, {elapsed:.2f} s")


def test_criterion_03_compression_point(rapp_model):
    params = rapp_model.params
    closed = compression_point_1db(params)
    assert closed == pytest.approx(1.823e-3, rel=1e-3)
    bisected = compression_point_1db_bisect(
        lambda x: float(rapp_amplitude(x, params)),
        params.g_lin,
        x_hi=2.0 * params.v_sat / params.g_lin,
    )
    assert bisected == pytest.approx(closed, rel=1e-4)
    report(3, f"closed form {closed:.6e} V, bisection {bisected:.6e} V")


def test_criterion_04_saleh_closed_form_vs_brute_force():
    rng = np.random.default_rng(2024)
    checked = 0
    for trial in range(20):
        n = int(rng.integers(1, 4))
        nu = int(rng.integers(1, 3))
        alpha = float(rng.uniform(2.0, 20.0))
        beta = float(rng.uniform(1e3, 2e4))
        x = np.geomspace(3e-4, 3e-2, int(rng.integers(25, 60)))
        z = scalar_saleh(x, alpha, beta, n, nu)
        z = z * (1.0 + 0.002 * rng.normal(size=x.size))
        a_cf, b_cf = saleh_closed_form(x, z, n, nu)
        a_bf, b_bf = brute_force_saleh(x, z, n, nu)
        assert a_cf == pytest.approx(a_bf, rel=1e-3), (trial, n, nu)
        assert b_cf == pytest.approx(b_bf, rel=1e-3), (trial, n, nu)
        checked += 1
    report(4, f"{checked} random curves, closed form == brute force within 1e-3")


def test_criterion_05_chain_floor():
    t0 = time.perf_counter()
    floors = {}
    for nsc in (1, 16, 32, 64, 128, 256):
        n_sym = 4096
        wf = WaveformConfig(modulation_order=64, n_subcarriers=nsc, n_symbols=n_sym)
        res = run_chain(wf, model=None, seed=nsc)
        floors[nsc] = res.evm_db
        assert res.evm_db <= -100.0, f"N_sc={nsc}: {res.evm_db:.1f} dB"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    worst = max(floors.values())
    report(5, f"worst floor {worst:.1f} dB across N_sc={list(floors)}, {elapsed:.1f} s")


def test_criterion_06_evm_improvement(rapp_model):
    t0 = time.perf_counter()
    wf = WaveformConfig(modulation_order=64, n_subcarriers=256, n_symbols=19968)
    no_pd = run_chain(wf, rapp_model, None, ibo_db=0.0, seed=101)
    pd4 = design_predistorter(rapp_model.params, chi=CHI_315_V, mode="polynomial",
                              n_amp=4, n_phase=4)
    pd8 = design_predistorter(rapp_model.params, chi=CHI_315_V, mode="polynomial",
                              n_amp=8, n_phase=8)
    with_pd4 = run_chain(wf, rapp_model, pd4, ibo_db=0.0, seed=101)
    with_pd8 = run_chain(wf, rapp_model, pd8, ibo_db=0.0, seed=101)
    gain4 = no_pd.evm_db - with_pd4.evm_db
    gain8 = no_pd.evm_db - with_pd8.evm_db
    assert 5.0 <= gain4 <= 15.0
    assert gain8 >= gain4
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(6, f"no-PD {no_pd.evm_db:.1f} dB, PD4 +{gain4:.1f} dB, PD8 +{gain8:.1f} dB, {elapsed:.0f} s")


def test_criterion_07_evm_flat_vs_nsc(rapp_model):
    pd4 = design_predistorter(rapp_model.params, chi=CHI_315_V, mode="polynomial",
                              n_amp=4, n_phase=4)
    wf = WaveformConfig(modulation_order=64, n_subcarriers=256, n_symbols=19968)
    spreads = {}
    for name, pd in (("no-PD", None), ("PD4", pd4)):
        res = sweep_evm_vs_nsc([16, 32, 64, 128, 256], wf, rapp_model, pd,
                               ibo_db=0.0, seed=77)
        evms = [r["evm_db"] for r in res.rows]
        spreads[name] = max(evms) - min(evms)
        assert spreads[name] < 2.0, (name, evms)
    report(7, ", ".join(f"{k} spread {v:.2f} dB" for k, v in spreads.items()))


def test_criterion_08_ber_sanity_awgn():
    t0 = time.perf_counter()
    snr_db = 22.5
    wf = WaveformConfig(modulation_order=64, n_subcarriers=1, n_symbols=100_000)
    res = sweep_ber_vs_snr([snr_db], wf, None, seed=404, target_errors=800,
                           max_bits=4_000_000)
    row = res.rows[0]
    theory = qam_theory_ber(64, snr_db)
    assert theory == pytest.approx(1e-3, rel=0.1)
    assert row["n_errors"] >= 100
    assert abs(row["ber"] - theory) <= 3.0 * row["ber_stderr"]
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    report(8, f"MC {row['ber']:.3e} vs theory {theory:.3e} "
              f"({abs(row['ber'] - theory) / row['ber_stderr']:.1f} sigma), {elapsed:.0f} s")


def test_criterion_09_ber_shape(rapp_model):
    t0 = time.perf_counter()
    link = LinkConfig()
    pd8 = design_predistorter(rapp_model.params, chi=CHI_315_V, mode="polynomial",
                              n_amp=8, n_phase=8)

    # (a) no predistortion: BER dips then rises with SNR (drive follows the link)
    wf_mc = WaveformConfig(modulation_order=64, n_subcarriers=256, n_symbols=50_176)
    snrs_a = [12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0]
    sweep_a = sweep_ber_vs_snr(snrs_a, wf_mc, rapp_model, None, mode="link-budget",
                               link=link, seed=901, max_bits=2_000_000)
    bers_a = [r["ber"] for r in sweep_a.rows]
    i_min = int(np.argmin(bers_a))
    assert 0 < i_min < len(bers_a) - 1, bers_a
    assert bers_a[-1] > bers_a[i_min]

    # (b) eighth-order predistortion, single carrier: monotone and close to ideal
    wf_sc = WaveformConfig(modulation_order=64, n_subcarriers=1, n_symbols=200_000)
    snrs_b = [14.0, 16.0, 18.0, 20.0, 21.0, 22.0, 23.0, 24.0, 25.0]
    sweep_b = sweep_ber_vs_snr(snrs_b, wf_sc, rapp_model, pd8, mode="link-budget",
                               link=link, seed=902, max_bits=10_000_000)
    bers_b = [r["ber"] for r in sweep_b.rows]
    assert all(b2 <= b1 for b1, b2 in zip(bers_b, bers_b[1:])), bers_b
    sc_cross = crossing_snr(snrs_b, bers_b, 1e-3)
    ideal_cross = theory_crossing_snr(64, 1e-3)
    assert abs(sc_cross - ideal_cross) <= 2.0

    # (c) eighth-order predistortion, 256 subcarriers: reaches 1e-4 near 23.5 dB
    snrs_c = [22.0, 23.0, 24.0, 25.0]
    sweep_c = sweep_ber_vs_snr(snrs_c, wf_mc, rapp_model, pd8, mode="link-budget",
                               link=link, seed=903, max_bits=10_000_000)
    bers_c = [r["ber"] for r in sweep_c.rows]
    hit = [s for s, b in zip(snrs_c, bers_c) if b <= 1e-4 and 21.5 <= s <= 25.5]
    assert hit, (snrs_c, bers_c)

    elapsed = time.perf_counter() - t0
    assert elapsed < 900.0
    report(9, f"no-PD min at {snrs_a[i_min]} dB; PD8 SC crosses 1e-3 at {sc_cross:.2f} dB "
              f"(ideal {ideal_cross:.2f}); PD8 MC <=1e-4 at {hit[0]} dB; {elapsed:.0f} s")


def test_criterion_10_link_budget_arithmetic():
    fspl = free_space_path_loss_db(35.0, 315e9)
    assert fspl == pytest.approx(113.29, abs=0.01)
    ktb = noise_power(LinkConfig(noise_temperature_k=290.0, bandwidth_hz=1e9))
    assert ktb == pytest.approx(-83.97, abs=0.01)
    report(10, f"free-space term {fspl:.4f} dB, kTB {ktb:.4f} dBm")
