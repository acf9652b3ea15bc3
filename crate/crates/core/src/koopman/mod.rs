//! Koopman surrogates for control-affine systems.

pub mod bilinear;
pub mod dataset;
pub mod dictionary;
pub mod kernel;
pub mod serialize;

pub use bilinear::{
    artificial_data, cluster, edmd_fit, fit_cluster, fit_clusters, fit_surrogate,
    flexible_sampling_bound, sigma_tilde, ArtificialData, BilinearSurrogate, Cluster, ClusterFit,
    ClusterMetric, ClusteredDataset, FlexibleFit, Mode, Sample,
};
pub use dataset::Dataset;
pub use dictionary::Dictionary;
pub use kernel::{
    box_grid, constant_c, cross_kernel_matrix, fill_distance, g_tilde_from_fits, kedmd_control_fit,
    kedmd_fit, kedmd_fit_observables, kernel_matrix, ConstantC, KernelBoundTerms, KernelSurrogate,
    WendlandKernel,
};
pub use serialize::{from_text, to_text, Surrogate};
