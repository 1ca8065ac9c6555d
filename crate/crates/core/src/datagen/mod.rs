//! Synthetic SPD datasets built from eigenvalue profiles and noisy
//! eigenbases, plus covariance descriptors of multichannel trials.

mod covariance;
mod synth;

pub use covariance::covariance_from_trial;
pub use synth::{
    eigen_profile, gen_dataset, random_orthonormal_basis, random_orthonormal_basis_with,
    sample_instance, EigenProfile, OrthoBasis, SynthKind, SynthSpec, SynthSplits,
};
