"""Frequency-resolved Laguerre-Gauss decomposition of collinear SPDC from a
monochromatic Gaussian pump, with spatial-entanglement engineering tools."""

from .biphoton import (ComplexSpectrum, DetuningGrid, QuadratureSpec, SpdcConfig,
                       amplitude_table, collection_probability, hyp2f1_regularized,
                       make_config, mode_amplitude, oracle_amplitude, spectrum)
from .dispersion import (CrystalSpec, DispersionModel, WaveParams, builtin_ktp,
                         degenerate_poling_period, load_dispersion_file,
                         phase_mismatch0, refractive_index, wave_params)
from .lgmodes import BeamSpec, LGIndex, lg_momentum_amplitude, t_coefficient
from .optimize import (MinimizeOptions, MinimizeResult, SuperpositionModes,
                       WaistSweepResult, cost_brightness, cost_spectral_match,
                       cost_target_spectrum, match_collection_waists, minimize,
                       optimize_mode_superpositions, waist_sweep)
from .state import (CollectionChannel, ModeCorrelationMatrix, SpatialDensityMatrix,
                    best_phase_fidelity, channel_spectrum, fidelity,
                    joint_correlation_matrix, purity, reduced_spatial_density,
                    spectral_overlap, target_state)
from .tomography import (MleResult, ProjectorSet, TomographyRun, embedded_state,
                         mle_reconstruct, projector_set, read_counts_csv,
                         simulate_counts, trace_distance, visibility,
                         write_counts_csv)

__version__ = "0.1.0"
