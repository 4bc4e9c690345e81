//! Reverse water-filling (Gaussian remote distortion-rate), its ECSQ variant
//! with a per-coefficient rate overhead, and the TKL feedback power
//! allocation.
//!
//! All three thresholds are found by enumerating active-set sizes and solving
//! the resulting scalar equation in closed form. The reverse water-filling
//! equation is solved in the log domain so that large rate budgets do not
//! overflow `λ / γ`.

use std::cmp::Ordering;

/// Rate overhead of entropy-coded scalar quantization over the Gaussian
/// rate-distortion function, in bits per encoded coefficient.
pub const ECSQ_OVERHEAD_BITS: f64 = 1.508;

fn sorted_positive(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v
}

/// Smallest `γ` with `Σ [log2(λ_i/γ)]₊ + overhead·#{λ_i > γ} ≤ rate`.
fn threshold_with_overhead(values: &[f64], rate: f64, overhead: f64) -> f64 {
    let lam = sorted_positive(values);
    let Some(&top) = lam.first() else {
        return 0.0;
    };
    if !(rate > 0.0) {
        return top;
    }
    let mut best = top;
    let mut log_sum = 0.0;
    for m in 1..=lam.len() {
        log_sum += lam[m - 1].log2();
        let log_gamma = (log_sum + overhead * m as f64 - rate) / m as f64;
        let gamma = log_gamma.exp2();
        let next = lam.get(m).copied().unwrap_or(0.0);
        let candidate = gamma.max(next);
        if candidate < lam[m - 1] && candidate < best {
            best = candidate;
        }
    }
    best
}

/// Water level `γ` of reverse water-filling: `Σ [log2(λ_i/γ)]₊ = rate`.
///
/// Zero and negative entries are ignored. With `rate = 0` the level sits at
/// the largest value, so nothing is described.
pub fn reverse_waterfill(values: &[f64], rate: f64) -> f64 {
    threshold_with_overhead(values, rate, 0.0)
}

/// Rate in bits spent by reverse water-filling at level `gamma`.
pub fn reverse_waterfill_rate(values: &[f64], gamma: f64) -> f64 {
    values
        .iter()
        .filter(|&&x| x > gamma && x > 0.0)
        .map(|&x| x.log2() - gamma.log2())
        .sum()
}

/// ECSQ threshold `γ̂`: the smallest level whose rate, including
/// [`ECSQ_OVERHEAD_BITS`] per encoded coefficient, fits in `rate`.
///
/// The rate jumps by the overhead each time `γ̂` crosses an eigenvalue, so
/// equality is not always attainable; the budget is then left partly unused.
pub fn ecsq_threshold(values: &[f64], rate: f64) -> f64 {
    threshold_with_overhead(values, rate, ECSQ_OVERHEAD_BITS)
}

/// Rate in bits spent by ECSQ at threshold `gamma`.
pub fn ecsq_rate(values: &[f64], gamma: f64) -> f64 {
    let active = values.iter().filter(|&&x| x > gamma && x > 0.0).count();
    reverse_waterfill_rate(values, gamma) + ECSQ_OVERHEAD_BITS * active as f64
}

/// Power allocation over the retained Karhunen-Loève feedback dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TklAllocation {
    pub alpha: Vec<f64>,
    /// Lagrange multiplier of the power constraint; infinite when nothing is
    /// allocated.
    pub gamma_star: f64,
    pub rho: Vec<f64>,
    pub lambda_bar: Vec<f64>,
}

impl TklAllocation {
    /// Power actually used, `Σ α_i (λ̄_i + 1)`.
    pub fn power(&self) -> f64 {
        self.alpha
            .iter()
            .zip(&self.lambda_bar)
            .map(|(a, l)| a * (l + 1.0))
            .sum()
    }

    pub fn objective(&self) -> f64 {
        tkl_objective(&self.rho, &self.lambda_bar, &self.alpha)
    }
}

/// `Σ ρ_i λ̄_i α_i / (α_i (λ̄_i + 1) + 1)`: the trace of the TKL estimate
/// covariance as a function of the power allocation.
pub fn tkl_objective(rho: &[f64], lambda_bar: &[f64], alpha: &[f64]) -> f64 {
    rho.iter()
        .zip(lambda_bar)
        .zip(alpha)
        .map(|((&r, &l), &a)| r * l * a / (a * (l + 1.0) + 1.0))
        .sum()
}

/// Maximize [`tkl_objective`] subject to `Σ α_i (λ̄_i + 1) ≤ p_ul`, `α ≥ 0`.
///
/// The solution is `α_i = [√(ρ_i λ̄_i / (γ* (λ̄_i + 1))) − 1]₊ / (λ̄_i + 1)`
/// with `γ*` set so the power constraint is tight.
pub fn tkl_waterfill(rho: &[f64], lambda_bar: &[f64], p_ul: f64) -> TklAllocation {
    assert_eq!(
        rho.len(),
        lambda_bar.len(),
        "rho and lambda_bar differ in length"
    );
    let n = rho.len();
    let weight: Vec<f64> = rho
        .iter()
        .zip(lambda_bar)
        .map(|(&r, &l)| (r * l / (l + 1.0)).max(0.0))
        .collect();
    let zero = || TklAllocation {
        alpha: vec![0.0; n],
        gamma_star: f64::INFINITY,
        rho: rho.to_vec(),
        lambda_bar: lambda_bar.to_vec(),
    };
    if !(p_ul > 0.0) || weight.iter().all(|&w| w <= 0.0) {
        log::warn!("TKL allocation is empty: no power or no informative dimension");
        return zero();
    }

    let roots = sorted_positive(&weight.iter().map(|w| w.sqrt()).collect::<Vec<_>>());
    // 1/√γ* for active set size m is (P + m) / Σ_{i≤m} √w_i; dimension m is
    // active iff √w_m / √γ* > 1.
    let mut inv_sqrt_gamma = 0.0;
    let mut root_sum = 0.0;
    for (i, &r) in roots.iter().enumerate() {
        let m = (i + 1) as f64;
        let candidate = (p_ul + m) / (root_sum + r);
        if r * candidate > 1.0 {
            root_sum += r;
            inv_sqrt_gamma = candidate;
        } else {
            break;
        }
    }
    let alpha = weight
        .iter()
        .zip(lambda_bar)
        .map(|(&w, &l)| (w.sqrt() * inv_sqrt_gamma - 1.0).max(0.0) / (l + 1.0))
        .collect();
    TklAllocation {
        alpha,
        gamma_star: 1.0 / (inv_sqrt_gamma * inv_sqrt_gamma),
        rho: rho.to_vec(),
        lambda_bar: lambda_bar.to_vec(),
    }
}
