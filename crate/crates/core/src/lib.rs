//! Simulation core for a two-photon polarization-entanglement experiment:
//! a Bell pair dephased by birefringent delay in one or both arms, an optional
//! erasure/recovery stage built from beam displacers and wave plates, and the
//! readout quantities an experiment would report — concurrence, CHSH
//! violation, post-selection success probability, and tomographic
//! reconstructions with shot-noise error bars.
//!
//! Layering, bottom up:
//!
//! * [`qmath`] — 2×2/4×4 complex matrices and a 4×4 eigenvalue solver.
//! * [`states`] — two-qubit density matrices, concurrence, CHSH.
//! * [`optics`] — delay-tagged biphoton amplitudes and the optical elements
//!   that act on them; spectral reduction to a density matrix.
//! * [`oracle`] — quadrature cross-checks for the closed-form spectral
//!   integrals.
//! * [`scenarios`] — the experiment configurations and sweep drivers.
//! * [`tomo`] — simulated coincidence counting and tomographic
//!   reconstruction with Monte-Carlo error bars.
//!
//! The two-photon basis ordering is `{HH, HV, VH, VV}` in every module.

pub mod optics;
pub mod oracle;
pub mod qmath;
pub mod scenarios;
pub mod states;
pub mod tomo;

pub use optics::{
    apply_bd_merge, apply_bd_split, apply_element, apply_jones, apply_quartz, bell_state,
    bit_flip, gaussian_characteristic, hadamard, half_wave_jones, polarization_rotation, reduce,
    reduce_with, Arm, BeamPath, BiphotonState, Element, OpticsError, Pol, Spectrum, Term,
    SPEED_OF_LIGHT,
};
pub use oracle::{
    characteristic_disagreement, numeric_characteristic, numeric_reduce, OracleError,
    QuadratureGrid,
};
pub use qmath::{eig4, kron2, ComplexMatrix2, ComplexMatrix4, EigError};
pub use scenarios::{
    assemble_dephasing, assemble_esd, assemble_partial, assemble_recovery, kprime_closed_form,
    make_spectrum, partial_input, scenario_a, scenario_esd, scenario_recovery, sweep, EsdPoint,
    ExperimentConfig, ScenarioError, ScenarioKind, SigmaConvention, SweepResult, SweepRow,
};
pub use states::{
    chsh_s, coincidence_prob, concurrence, correlation_e, horodecki_smax, maximize_chsh_linear,
    ChshSetting, DensityMatrix, StateError,
};
pub use tomo::{
    linear_reconstruct, linear_reconstruct_expected, mc_error, simulate_counts, CountRecord,
    ErrorBars, ProjSpec, ProjectionSet, Reconstruction, TomoError,
};
