//! Stopping-index certificates for the peaks computation problem: maximize φ(T^k(x)) over
//! x ∈ X^in and k ∈ ℕ, with a certified bound on how many static problems must be solved.
//!
//! Everything numeric is generic over [`Scalar`] (f32 or f64). The aliases at the bottom fix f64.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gallery;
pub mod klgen;
pub mod lyapunov;
pub mod pairs;
pub mod scalar;
pub mod seq;
pub mod systems;

pub use error::{PeaksError, Result};
pub use klgen::{
    klgen_from_pair, majorize_decreasing, pair_from_klgen, sontag_extension, verify_klgen_bound, KLGenFunction,
    KLGenReport, KLGenUpperBound, Majorant, MajorantBranch,
};
pub use lyapunov::{
    certificate_from_margins, hahn_majorant_pair, kappa_conjugacy, normalize_rho_decrease, operator_ratio,
    pair_from_lyapunov, verify_certificate, verify_opt_lyapunov, yoshizawa_construct, CertificateReport,
    CompatibilityCertificate, DirectOutcome, OptLyapunovCandidate, PsdFunction, RatioReport, YoshizawaResult,
};
pub use pairs::{
    beta_infimum, combine, formula_f, optimal_affine, solve_stop, verify_pair, CombineMode, MonotoneBijection,
    StopSolution, StoppingReport, UsefulPair,
};
pub use scalar::{Ext, Scalar};
pub use seq::{greatest_maximizer, is_in_delta, prefix_argmax, ArgmaxReport, BoundedSequence};
pub use systems::{
    nu_oracle, solve_peaks, solve_static, DynamicalSystem, InitialSet, NuOracle, PeaksSolution, StaticSolveResult,
};

pub type Sequence = BoundedSequence<f64>;
pub type Envelope = MonotoneBijection<f64>;
pub type Pair = UsefulPair<f64>;
pub type System = DynamicalSystem<f64>;
pub type InitialSet64 = InitialSet<f64>;
pub type Psd = PsdFunction<f64>;
pub type Certificate = CompatibilityCertificate<f64>;
pub type Candidate = OptLyapunovCandidate<f64>;
pub type KLGen = KLGenFunction<f64>;
pub type KLGenBound = KLGenUpperBound<f64>;
