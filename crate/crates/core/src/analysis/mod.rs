//! Error measurement and the experiments built on it.

mod decompose;
mod error;
mod gap;
mod sweep;

pub use decompose::{decompose_errors, DecompositionConfig, DecompositionReport, LargeBudget};
pub use error::{
    h1_error, h1_error_net, reference_solution, ErrorReport, ErrorRule, MIN_GRID_NODES,
};
pub use gap::{gap_study, GapRow, GapSettings, GapSummary};
pub use sweep::{
    calibrate_aggregate, convergence_sweep, format_bound, SweepRow, SweepSettings, SWEEP_HEADER,
};

/// Median of the finite entries (NaN when there are none).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
        assert_eq!(median(&[f64::NAN, 1.0]), 1.0);
    }
}
