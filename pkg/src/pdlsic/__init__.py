"""Worst-case analysis and simulation of PDL-impaired dual-polarization channels.

The toolkit covers the full chain: the compound channel class and its
matrices (:mod:`~pdlsic.channel`), the universal orthogonal precoders and
effective-channel structure (:mod:`~pdlsic.precode`), exact equalization
statistics with the two-stage cancellation pipeline
(:mod:`~pdlsic.equalize`), closed-form capacities with brute-force oracles
(:mod:`~pdlsic.capacity`), Monte Carlo certification
(:mod:`~pdlsic.montecarlo`), and link-budget composition from external FER
tables (:mod:`~pdlsic.linkbudget`).  The ``pdlsic`` command exposes all of
it from the shell.
"""

from .capacity import (
    CapacityReport,
    MeanIdentityReport,
    MiTerms,
    PdlPenalties,
    StarPropertyReport,
    WorstCaseSearch,
    c_awgn,
    c_compound,
    c_compound_approx,
    c_nonjoint,
    c_parallel,
    c_parallel_approx,
    capacity_report,
    inverse_c_compound,
    mean_identity_check,
    mi_terms,
    penalties_db,
    verify_star_property,
    worst_case_search,
)
from .channel import (
    ChannelMatrix,
    ChannelParams,
    Model,
    PdlClass,
    SampleMode,
    SnrSpec,
    alpha_from_pdl_db,
    channel_matrix,
    channel_matrix_complex,
    channel_matrix_real,
    pdl_db_from_alpha,
    received_snr,
    sample_params,
    spawn_seeds,
)
from .equalize import (
    Equalizer,
    EqualizerKind,
    SicResult,
    SingularChannelError,
    StreamScheme,
    StreamStats,
    closed_form_stream_snr,
    lmmse_equalizer,
    second_stage_statistics,
    sic_pipeline,
    stream_statistics,
    zf_equalizer,
)
from .linkbudget import (
    CodePoint,
    FerComposition,
    FerPoint,
    FerTable,
    FerTableError,
    OperatingPoint,
    SnrOutOfRangeError,
    compose_fer,
    compose_gap,
    evaluate_operating_point,
    rate_split,
)
from .montecarlo import (
    EmpiricalStats,
    Scheme,
    SerStats,
    SimConfig,
    SimReport,
    estimate_mi,
    run,
    ser_pam_awgn,
    uncoded_ser_experiment,
)
from .precode import (
    EffectiveChannel,
    OrthogonalDesignReport,
    Precoder,
    effective_channel,
    identity_precoder,
    interference_coupling,
    permute_columns,
    precoder_complex,
    precoder_real,
    verify_orthogonal_design,
)

__version__ = "0.1.0"
