//! Uses of RATQ outside optimization: averaging many clients' vectors and
//! lossy compression of subgaussian sources.

mod dme;
mod rd;

pub use dme::{dme_estimate, DmeInstance, DmeOutcome};
pub use rd::{rd_quantize, RdOutcome};
