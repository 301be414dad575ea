//! Proximal corrections of a wrapper quantile toward the HF quantile equation.

use alloc::vec::Vec;


use crate::{Error, Result};

/// Tuning grids and safeguards shared by the corrections.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CorrectionConfig {
    pub gamma_grid: Vec<f64>,
    pub step_grid: Vec<usize>,
    pub folds: usize,
    pub density_floor: f64,
    pub step_cap: f64,
    /// Weight of the HF quantile equation in the mixed and projection estimators.
    pub lambda: f64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            gamma_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            step_grid: (1..=10).collect(),
            folds: 5,
            density_floor: 0.1,
            step_cap: 1.0,
            lambda: 1.0,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.density_floor > 0.0) || !(self.step_cap > 0.0) {
            return Err(Error::InvalidParameter("density floor and step cap must be positive"));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter("cross-fitting needs at least 2 folds"));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidParameter("gamma grid must be a nonempty subset of [0, 1]"));
        }
        if self.step_grid.is_empty() || self.step_grid.contains(&0) {
            return Err(Error::InvalidParameter("step grid must hold positive counts"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("lambda must be nonnegative"));
        }
        Ok(())
    }

    pub fn safeguards(&self) -> Safeguards {
        Safeguards { density_floor: self.density_floor, step_cap: self.step_cap }
    }
}

/// Density floor and step cap applied to every Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Safeguards {
    pub density_floor: f64,
    pub step_cap: f64,
}

impl Default for Safeguards {
    fn default() -> Self {
        Safeguards { density_floor: 0.1, step_cap: 1.0 }
    }
}

impl Safeguards {
    /// `clamp((F(q) - tau) / max(f(q), floor), -cap, cap)`, scaled by `gamma` before clamping.
    pub fn step(&self, residual: f64, density: f64, gamma: f64) -> f64 {
        (gamma * residual / density.max(self.density_floor)).clamp(-self.step_cap, self.step_cap)
    }
}

/// Stop iterating once `|F(q) - tau|` falls below this.
pub const NEWTON_TOLERANCE: f64 = 1e-10;

/// `w * direct + (1 - w) * wrapper` with `w = lambda / (1 + lambda)`.
pub fn mixed_estimate(wrapper_q: f64, direct_q: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be nonnegative"));
    }
    if lambda.is_infinite() {
        return Ok(direct_q);
    }
    let w = lambda / (1.0 + lambda);
    Ok(wrapper_q + w * (direct_q - wrapper_q))
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const PROBES: usize = 201;

/// Minimizer of `(q - wrapper_q)^2 + lambda (F(q) - tau)^2` over
/// `wrapper_q +- max(1, 3 iqr)`.
///
/// The objective is scanned on a probe grid, which also checks that `F` is
/// nondecreasing, then refined by golden-section search (tolerance 1e-6)
/// around the best probe.
pub fn projection_estimate(
    wrapper_q: f64,
    hf_cdf: impl Fn(f64) -> f64,
    tau: f64,
    lambda: f64,
    response_iqr: f64,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter("lambda must be nonnegative"));
    }
    if lambda == 0.0 {
        return Ok(wrapper_q);
    }
    let half = (3.0 * response_iqr).max(1.0);
    let (lo, hi) = (wrapper_q - half, wrapper_q + half);
    let objective = |q: f64| {
        let r = hf_cdf(q) - tau;
        (q - wrapper_q) * (q - wrapper_q) + lambda * r * r
    };
    let h = (hi - lo) / (PROBES - 1) as f64;
    let mut prev_cdf = f64::NEG_INFINITY;
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..PROBES {
        let q = lo + h * k as f64;
        let f = hf_cdf(q);
        if f < prev_cdf - 1e-12 {
            return Err(Error::ContractViolation("HF CDF is not monotone on the projection bracket"));
        }
        prev_cdf = f;
        let r = f - tau;
        let v = (q - wrapper_q) * (q - wrapper_q) + lambda * r * r;
        if v < best.0 {
            best = (v, k);
        }
    }
    let k = best.1;
    let mut a = lo + h * k.saturating_sub(1) as f64;
    let mut b = lo + h * (k + 1).min(PROBES - 1) as f64;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-6 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d);
        }
    }
    let mid = 0.5 * (a + b);
    let probe = lo + h * k as f64;
    Ok(if objective(mid) <= best.0 { mid } else { probe })
}

/// One damped, safeguarded Newton step from the wrapper quantile.
pub fn one_step_correct(
    wrapper_q: f64,
    hf_cdf: impl Fn(f64) -> f64,
    hf_density: impl Fn(f64) -> f64,
    tau: f64,
    gamma: f64,
    guards: Safeguards,
) -> f64 {
    if gamma == 0.0 {
        return wrapper_q;
    }
    wrapper_q - guards.step(hf_cdf(wrapper_q) - tau, hf_density(wrapper_q), gamma)
}

/// `m` safeguarded Newton steps on `F(q) = tau`, stopping early once the
/// residual is below [`NEWTON_TOLERANCE`].
pub fn multi_step_correct(
    wrapper_q: f64,
    hf_cdf: impl Fn(f64) -> f64,
    hf_density: impl Fn(f64) -> f64,
    tau: f64,
    m: usize,
    guards: Safeguards,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("step count must be at least 1"));
    }
    Ok(*newton_trajectory(wrapper_q, hf_cdf, hf_density, tau, m, guards).last().expect("nonempty"))
}

/// Iterates `q_0 = wrapper_q, ..., q_m`; after early exit the last iterate repeats.
pub fn newton_trajectory(
    wrapper_q: f64,
    hf_cdf: impl Fn(f64) -> f64,
    hf_density: impl Fn(f64) -> f64,
    tau: f64,
    m: usize,
    guards: Safeguards,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut q = wrapper_q;
    out.push(q);
    let mut converged = false;
    for _ in 0..m {
        if !converged {
            let r = hf_cdf(q) - tau;
            if r.abs() < NEWTON_TOLERANCE {
                converged = true;
            } else {
                q -= guards.step(r, hf_density(q), 1.0);
            }
        }
        out.push(q);
    }
    out
}

/// `rho_tau(z) = z (tau - 1{z < 0})`.
pub fn pinball_loss(z: f64, tau: f64) -> f64 {
    if z < 0.0 {
        z * (tau - 1.0)
    } else {
        z * tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{normal_cdf, normal_pdf, normal_quantile};

    const LOOSE: Safeguards = Safeguards { density_floor: 1e-300, step_cap: f64::INFINITY };

    #[test]
    fn mixed_examples() {
        assert_eq!(mixed_estimate(2.0, 5.0, 0.0).unwrap(), 2.0);
        assert_eq!(mixed_estimate(2.0, 5.0, 1.0).unwrap(), 3.5);
        let mut prev = 2.0;
        for l in [0.5, 1.0, 10.0, 1e3, 1e6] {
            let v = mixed_estimate(2.0, 5.0, l).unwrap();
            assert!(v > prev && v < 5.0);
            prev = v;
        }
        assert_eq!(mixed_estimate(2.0, 5.0, f64::INFINITY).unwrap(), 5.0);
        assert!(mixed_estimate(2.0, 5.0, -1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let unit = |q: f64| q.clamp(0.0, 1.0);
        assert_eq!(projection_estimate(0.3, unit, 0.5, 0.0, 0.2).unwrap(), 0.3);
        let q = projection_estimate(0.3, unit, 0.5, 1.0, 0.2).unwrap();
        assert!((q - 0.4).abs() < 1e-6, "{q}");

        let root = normal_quantile(0.8);
        let q = projection_estimate(0.0, normal_cdf, 0.8, 1e6, 1.0).unwrap();
        assert!((q - root).abs() < 1e-3, "{q} {root}");

        let bad = |q: f64| if q < 0.0 { 0.9 } else { 0.1 };
        assert!(matches!(projection_estimate(0.0, bad, 0.5, 1.0, 1.0), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn one_step_examples() {
        let g = Safeguards::default();
        assert_eq!(one_step_correct(1.7, normal_cdf, normal_pdf, 0.3, 0.0, g), 1.7);
        let q = one_step_correct(0.5, normal_cdf, normal_pdf, 0.5, 1.0, g);
        // Phi(0.5) - 1/2 = 0.191462461274013, phi(0.5) = 0.352065326764300
        let expected = 0.5 - 0.191_462_461_274_013_1 / 0.352_065_326_764_299_5;
        assert!((q - expected).abs() < 1e-12, "{q} {expected}");
        // raw step 1.41 from q = 1 is capped
        assert_eq!(one_step_correct(1.0, normal_cdf, normal_pdf, 0.5, 1.0, g), 0.0);
        // floor: density 0.01 -> divisor 0.1; residual 0.3 -> raw step 3 -> capped at 1
        let q = one_step_correct(5.0, |_| 0.8, |_| 0.01, 0.5, 1.0, g);
        assert_eq!(q, 4.0);
        let q = one_step_correct(5.0, |_| 0.2, |_| 0.01, 0.5, 1.0, g);
        assert_eq!(q, 6.0);
        let q = one_step_correct(5.0, |_| 0.52, |_| 0.01, 0.5, 1.0, g);
        assert!((q - 4.8).abs() < 1e-12);
    }

    #[test]
    fn multi_step_examples() {
        let g = Safeguards::default();
        let unit = |q: f64| q;
        let one = |_: f64| 1.0;
        for start in [0.1, 0.5, 0.93] {
            assert!((multi_step_correct(start, unit, one, 0.3, 1, g).unwrap() - 0.3).abs() < 1e-15);
        }
        let q = multi_step_correct(0.0, normal_cdf, normal_pdf, 0.975, 20, g).unwrap();
        assert!((q - 1.959_964).abs() < 1e-6);
        assert!(multi_step_correct(0.0, normal_cdf, normal_pdf, 0.5, 0, g).is_err());
        for start in [-0.4, 0.2, 0.8] {
            let a = multi_step_correct(start, normal_cdf, normal_pdf, 0.6, 1, g).unwrap();
            let b = one_step_correct(start, normal_cdf, normal_pdf, 0.6, 1.0, g);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn trajectory_repeats_after_convergence() {
        let t = newton_trajectory(0.2, |q| q, |_| 1.0, 0.7, 5, LOOSE);
        assert_eq!(t.len(), 6);
        assert!(t[1..].iter().all(|&q| q == 0.7));
    }

    #[test]
    fn pinball_examples() {
        assert_eq!(pinball_loss(1.0, 0.9), 0.9);
        assert!((pinball_loss(-1.0, 0.9) - 0.1).abs() < 1e-15);
        assert_eq!(pinball_loss(0.0, 0.3), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(CorrectionConfig::default().validate().is_ok());
        let bad = CorrectionConfig { folds: 1, ..CorrectionConfig::default() };
        assert!(bad.validate().is_err());
        let bad = CorrectionConfig { density_floor: 0.0, ..CorrectionConfig::default() };
        assert!(bad.validate().is_err());
        let bad = CorrectionConfig { step_grid: alloc::vec![0, 1], ..CorrectionConfig::default() };
        assert!(bad.validate().is_err());
    }
}
