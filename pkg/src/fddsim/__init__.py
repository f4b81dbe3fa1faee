"""FDD massive-MIMO downlink simulator: covariance extrapolation from
uplink pilots, active channel sparsification, effective-channel probing
and zero-forcing sum-rate evaluation."""

from .channel import (AngularScatteringFunction, ArrayConfig, UserGeometry,
                      array_response, make_scenario, sample_channels,
                      true_covariance)
from .config import ConfigError, ExperimentConfig, parse_config
from .covariance import (AsfEstimate, ToeplitzCovariance, asf_grid,
                         circulant_eigenvalues, estimate_asf, extrapolate_dl,
                         project_toeplitz_psd, sample_covariance)
from .errors import FddsimError, InvalidArgumentError, NumericalError
from .evaluation import (ExperimentRecord, ZfPrecoder, effective_gains,
                         greedy_user_selection, normalized_error,
                         run_experiment, run_trial, sum_rate, summarize,
                         write_records_csv, write_summary_json, zf_precoder)
from .probing import (EffectiveChannelModel, PilotMatrix, dl_observe,
                      error_trace_oracle, make_pilot, mmse_effective)
from .sparsifier import (BeamGraph, SparsificationPlan, SparsifyingPrecoder,
                         brute_force_sparsify, build_beam_graph,
                         formulate_milp, solve_sparsification,
                         sparsifying_precoder)

__version__ = "0.1.0"
