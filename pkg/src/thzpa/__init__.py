"""Sub-THz power amplifier behavioral modeling, predistortion design, and
single-/multi-carrier link simulation."""

__version__ = "0.1.0"

from .buffers import SampleBuffer
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    InputRangeError,
    NumericalError,
    ThzpaError,
)
from .pa_models import (
    GhorbaniParams,
    PaModel,
    PolyParams,
    RappParams,
    SalehParams,
    apply_pa,
    compression_point_1db,
    gain_drop,
    ghorbani_amplitude,
    ghorbani_phase,
    poly_amplitude,
    poly_phase,
    rapp_amplitude,
    rapp_phase,
    saleh_amplitude,
    saleh_phase,
    vsat_trend,
)
from .fitting import (
    FitReport,
    MeasurementCurve,
    fit_error_vs_order,
    fit_ghorbani,
    fit_polynomial,
    fit_rapp,
    fit_saleh,
    minimize_simplex,
    normalize_phase,
)
from .predistortion import (
    Predistorter,
    apply_predistorter,
    design_predistorter,
    fit_pd_polynomials,
    ideal_amplitude_pd,
    ideal_phase_pd,
)
from .waveforms import (
    WaveformConfig,
    equalize,
    evm,
    ofdm_demodulate,
    ofdm_modulate,
    papr,
    qam_demap,
    qam_map,
    sc_demodulate,
    sc_modulate,
    scale_to_ibo,
)
from .linksim import (
    ChainResult,
    LinkConfig,
    SweepResult,
    noise_power,
    received_power,
    run_chain,
    sweep_ber_vs_snr,
    sweep_evm_vs_nsc,
    sweep_pa_input_vs_ibo,
)
from .files import (
    emit_results,
    load_builtin_model,
    load_model,
    parse_measurement_csv,
    save_model,
)
