//! The model elliptic problem (c - Laplacian)^q u = f in Omega,
//! D_nu^{m_j} u = g_j on Gamma, solved mode by mode with a Legendre-tau scheme.

mod classical;
mod estimates;
mod local;
mod roitberg;
mod solver;
mod system;

pub use classical::{classical_criterion, ClassicalReport, DataNorm, ModalData, ModeData};
pub use estimates::{
    apriori_check, index_bookkeeping, isomorphism_ratio, k_norm, kernel_counts, observed_index, sample_elements, AprioriReport, IndexRow,
    RatioReport, CRITICAL_EPS,
};
pub use local::{
    local_smoothness_experiment, rough_outside_data, smooth_data, smoothstep, Cutoff, LocalReport, LocalRow, Region, LOCAL_EXTRA,
};
pub use roitberg::{roitberg_vector, RoitbergVector};
pub use solver::{
    apply_operator, green_defect, green_terms, projectors, range_functional, solve, solve_mode, solve_with, DataTuple, GreenTerms,
    KernelData, KernelVector, Projectors, SolveReport,
};
pub use system::{BoundaryOp, BvpRecord, BvpSpec, GreenSystem};
