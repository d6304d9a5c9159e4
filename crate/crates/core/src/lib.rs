pub mod bnp;
pub mod error;
pub mod instgen;
pub mod io;
pub mod knapsack;
pub mod lp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod pricing;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Assignment, Evaluation, Instance};
