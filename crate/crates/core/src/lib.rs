#![no_std]
// `Float` supplies f64 math under no_std and goes unused when std is unified in.
#![allow(unused_imports)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

extern crate alloc;

pub mod domain;
pub mod error;
pub mod hankel;
pub mod kernels;
pub mod observables;
pub mod propagator;
pub mod quad;
pub mod specfun;
pub mod sphgrid;
pub mod tail;
pub mod timequad;

pub use error::{Error, Result};
