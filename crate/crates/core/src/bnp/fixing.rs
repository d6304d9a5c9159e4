//! Reduced-cost fixing of assignment and opening variables from converged
//! master duals, without adding the linking rows to the master.
//!
//! With `Z` the node's master value and `U` the incumbent value:
//! - `x_ij = 0` is fixed when `x*_ij = 0` and `Z + f_i + mu_i - xi_ij > U`,
//!   where `xi_ij` is the pricing optimum with `j` forced in;
//! - `y_i = 0` when `y*_i = 0` and `Z + f_i + mu_i - xi_i > U`;
//! - `y_i = 1` when `y*_i = 1` and `Z + mu_i > U`.

use super::branch::INT_TOL;
use crate::master::{DualPrices, Fix, NodeFixes};
use crate::model::Instance;
use crate::parallel;
use crate::pricing::{xi_forced_all, PricingResult};

/// Margin by which a reduced-cost bound must exceed the incumbent.
pub const FIX_TOL: f64 = 1e-6;

#[allow(clippy::too_many_arguments)]
pub fn fix_variables(
    inst: &Instance,
    fixes: &NodeFixes,
    duals: &DualPrices,
    pricing: &[PricingResult],
    x: &[Vec<f64>],
    y: &[f64],
    lower: f64,
    incumbent: f64,
) -> Vec<Fix> {
    if !incumbent.is_finite() {
        return Vec::new();
    }
    let exceeds = |reduced: f64| lower + reduced > incumbent + FIX_TOL;
    let per_facility = parallel::map_slice(pricing, |res| {
        let i = res.facility;
        let f = inst.fixed_cost(i) as f64;
        let mu = duals.mu[i];
        let mut out = Vec::new();
        if fixes.is_closed(i) {
            return out;
        }
        if !fixes.is_opened(i) && y[i] <= INT_TOL && exceeds(f + mu - res.xi) {
            out.push(Fix::Close { facility: i });
            return out;
        }
        if !fixes.is_opened(i) && y[i] >= 1.0 - INT_TOL && exceeds(mu) {
            out.push(Fix::Open { facility: i });
        }
        let forced = xi_forced_all(inst, i, duals, fixes.forbidden_mask(i));
        for (j, xi) in forced.into_iter().enumerate() {
            let Some(xi) = xi else { continue };
            if x[i][j] > INT_TOL {
                continue;
            }
            if xi == f64::NEG_INFINITY || exceeds(f + mu - xi) {
                out.push(Fix::Forbid { facility: i, customer: j });
            }
        }
        out
    });
    per_facility.into_iter().flatten().collect()
}
