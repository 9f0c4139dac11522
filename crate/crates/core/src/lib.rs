//! Numerical laboratory for pseudo-Abelian integrals over the nest of ovals
//! of a Darboux foliation with an unfolded triple point.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN

pub mod asymptotics;
pub mod blowup;
pub mod cli;
pub mod config;
pub mod darboux;
pub mod error;
pub mod integrator;
pub mod ode;
pub mod oval;
pub mod poly;
pub mod quad;
pub mod zeros;

pub use error::{Error, Result};

use rayon::prelude::*;

/// Maps `f` over `items`, on the current rayon pool when `parallel` is set.
/// Output order always follows input order.
pub fn ordered_map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}
