//! Post-processing of estimates into the quantities the checks compare.

mod checks;
mod density;
mod fit;

pub use checks::{
    beta_envelope, boundary_layer_check, f_envelope_check, fuk_nagaev_check, kendall_tau,
    truncated_mass_check, BoundaryLayerReport, BoundaryLayerRow, FEnvelopeReport, FEnvelopeRow,
    FukNagaevReport, FukNagaevRow, TruncatedMassReport, TruncatedMassRow,
};
pub use density::{
    conditional_limit_check, reference_self_check, sample_reference_radii, DensityCheck,
    LimitDensity, MIN_DENSITY_SAMPLES,
};
pub use fit::{
    fit_tail_exponent, kappa_constancy, weighted_line, FitResult, KappaReport, LineFit,
    MIN_FIT_POINTS, SIGNAL_TO_NOISE,
};
