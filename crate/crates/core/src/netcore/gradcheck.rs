//! Central finite-difference gradient checking.
//!
//! The objective under test returns its value together with a *region
//! signature*: the branch taken by every piecewise-linear element (PReLU
//! units, hinges). A perturbation that changes the signature straddles a
//! kink, where central differences are meaningless, and is skipped.

use serde::Serialize;

use super::ParamBuffers;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOLERANCE: f64 = 1e-4;
/// Gradient magnitude, per unit of objective value, below which errors are
/// measured absolutely: central differences cannot resolve gradients much
/// smaller than `eps * |f| / h`.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub checked: usize,
    pub skipped: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_error < REL_TOLERANCE
    }

    /// Folds another report into this one.
    pub fn merge(&mut self, other: &GradCheckReport) {
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst_param = other.worst_param.clone();
        }
        self.checked += other.checked;
        self.skipped += other.skipped;
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_with_floor(analytic, numeric, REL_FLOOR)
}

pub fn relative_error_with_floor(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `objective` for every
/// scalar in `params`.
pub fn check_gradient<P, G, F>(params: &P, analytic: &G, h: f64, mut objective: F) -> GradCheckReport
where
    P: ParamBuffers + Clone,
    G: ParamBuffers,
    F: FnMut(&P) -> (f64, Vec<bool>),
{
    let (base_value, base_sig) = objective(params);
    let floor = REL_FLOOR * base_value.abs().max(1.0);
    let grads = analytic.buffers();
    let sizes: Vec<(String, usize)> = params
        .buffers()
        .iter()
        .map(|(n, b)| (n.clone(), b.len()))
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        checked: 0,
        skipped: 0,
    };
    for (k, (name, len)) in sizes.iter().enumerate() {
        for i in 0..*len {
            let mut plus = params.clone();
            plus.buffers_mut()[k].1[i] += h;
            let mut minus = params.clone();
            minus.buffers_mut()[k].1[i] -= h;
            let (fp, sp) = objective(&plus);
            let (fm, sm) = objective(&minus);
            if sp != base_sig || sm != base_sig {
                report.skipped += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * h);
            let err = relative_error_with_floor(grads[k].1[i], numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst_param = format!("{name}[{i}]");
            }
        }
    }
    report
}
