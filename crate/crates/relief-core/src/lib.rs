//! Gradient-domain bas-relief synthesis.
//!
//! Converts source height/depth fields into relief height fields via
//! sigmoid-variant gradient remapping, band-pass detail extraction and
//! spectral Poisson reconstruction, evaluates the associated gradient- and
//! normal-domain losses, and minimizes them directly over the height field
//! for loss-style comparisons. Height fields, masks, previews and printable
//! meshes round-trip through the `io` module.
//!
//! The `parallel` feature (on by default) runs the data-parallel kernels on
//! rayon; without it every operation falls back to the same sequential
//! code path. Results are bit-identical either way and for any thread
//! count: each output row is produced by one sequential closure call, and
//! reductions fold per-row partials in row order.

mod error;
mod exec;
pub mod field;
pub mod gradmap;
pub mod io;
pub mod losses;
pub mod optimize;
pub mod pipeline;
pub mod poisson;
pub mod scene;

pub use error::{Error, Result};
pub use field::{
    divergence, divergence_seq, gradient, gradient_seq, normals_from_gradient, resample,
    GradientField, MaskField, NormalField, ScalarField,
};
pub use gradmap::{phi1, phi1_seq, phi2, sigmoid_variant, PhiMode, ReliefParams};
pub use losses::{loss_cosine, loss_detail, loss_grad, loss_l1s, loss_l2s, LossKind, LossReport};
pub use optimize::{
    optimize_height, style_compare, style_metrics, Init, OptimizeConfig, StyleEntry, StyleReport,
};
pub use pipeline::{
    depth_to_height, detail_layer, fuse, normalize_structure, structure_layer, two_scale,
    PipelineReport, STRUCTURE_BUDGET,
};
pub use poisson::{
    reconstruct_from_gradients, reconstruct_from_gradients_seq, solve_iterative, solve_spectral,
    solve_spectral_seq, SolveMethod, SolveReport,
};
