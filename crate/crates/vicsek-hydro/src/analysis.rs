//! Equilibrium statistics, micro/macro comparison metrics, and the
//! azimuthal-vortex stationarity check.
//!
//! Highlights:
//! * a local modified Bessel implementation (`bessel_i0`/`bessel_i1`,
//!   power series up to `z = 20`, asymptotic series beyond — both exposed
//!   in exponentially scaled form so nothing overflows),
//! * the circular exponential-alignment law [`VonMises`] with pdf, CDF,
//!   exact rejection sampling and a table-inversion fallback for extreme
//!   concentration,
//! * chi-square and Kolmogorov–Smirnov goodness-of-fit helpers,
//! * [`compare_profiles`] producing L1 distances and shock positions,
//! * [`vortex_residual`], a finite-difference residual of the stationary
//!   equations for the rotating solution `rho = C r^{c2/lambda}`,
//!   `Omega = e_theta`.

use crate::coefficients::{c1_closed_form, ModelCoefficients};
use crate::numerics::{cdf_chi2, quad_adaptive, QuadError};
use crate::particle_sim::Profile;
use crate::system::normalize_angle;
use rand::Rng;
use std::f64::consts::PI;

/// Errors from analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("noise intensity must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("profiles use different binning ({0} vs {1} bins)")]
    BinningMismatch(usize, usize),
    #[error("profile bin centers differ at index {index}")]
    BinCentersDiffer { index: usize },
    #[error("radial grid must be strictly positive, got {value} at index {index}")]
    NonPositiveRadius { index: usize, value: f64 },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadError),
    #[error("invalid goodness-of-fit input: {0}")]
    BadGoodnessOfFit(String),
    #[error("coefficient evaluation failed: {0}")]
    Coefficients(#[from] crate::coefficients::CoeffError),
}

// ---------------------------------------------------------------------------
// modified Bessel functions
// ---------------------------------------------------------------------------

/// `I_nu(z) * exp(-z)` for `nu` in {0, 1} and `z >= 0`.
///
/// Power series for `z <= 20`, asymptotic series in `1/z` beyond; the
/// switch point keeps both branches at full double accuracy (the asymptotic
/// tail at `z = 20` bottoms out below 1e-13 relative).
fn bessel_i_scaled(nu: u8, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z <= 20.0 {
        // sum_k (z/2)^(2k+nu) / (k! (k+nu)!)
        let q = 0.25 * z * z;
        let mut term = if nu == 0 { 1.0 } else { 0.5 * z };
        let mut sum = term;
        for k in 1..200 {
            term *= q / (k as f64 * (k + nu as usize) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum * (-z).exp()
    } else {
        // I_nu(z) ~ e^z / sqrt(2 pi z) * sum_k (-1)^k prod_j (4nu^2-(2j-1)^2)
        //                                           / (k! (8z)^k)
        let mu = 4.0 * (nu as f64) * (nu as f64);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let j = (2 * k - 1) as f64;
            term *= -(mu - j * j) / (k as f64 * 8.0 * z);
            if term.abs() >= prev {
                break; // asymptotic series started diverging
            }
            prev = term.abs();
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * PI * z).sqrt()
    }
}

/// Modified Bessel function `I_0(z)`, `z >= 0` (overflows above z ~ 709).
pub fn bessel_i0(z: f64) -> f64 {
    bessel_i_scaled(0, z) * z.exp()
}

/// `I_0(z) e^{-z}` — safe for arbitrarily large argument.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    bessel_i_scaled(0, z)
}

/// Modified Bessel function `I_1(z)`, `z >= 0`.
pub fn bessel_i1(z: f64) -> f64 {
    bessel_i_scaled(1, z) * z.exp()
}

/// `I_1(z) e^{-z}`.
pub fn bessel_i1_scaled(z: f64) -> f64 {
    bessel_i_scaled(1, z)
}

// ---------------------------------------------------------------------------
// circular alignment law
// ---------------------------------------------------------------------------

/// Circular density `C exp(cos(angle - center)/d)` with
/// `C^{-1} = 2 pi I_0(1/d)`.
#[derive(Debug, Clone, Copy)]
pub struct VonMises {
    pub d: f64,
    pub center: f64,
}

/// Concentration above which rejection sampling hands over to table
/// inversion.
const INVERSION_KAPPA: f64 = 500.0;

impl VonMises {
    pub fn new(d: f64, center: f64) -> Result<Self, AnalysisError> {
        if !(d > 0.0) {
            return Err(AnalysisError::NonPositiveNoise(d));
        }
        Ok(Self { d, center: normalize_angle(center) })
    }

    /// Probability density at `angle` (any real; periodic).
    pub fn pdf(&self, angle: f64) -> f64 {
        let kappa = 1.0 / self.d;
        // e^{kappa cos phi} / (2 pi I0(kappa)), evaluated peak-relative so
        // large concentrations cannot overflow
        ((angle - self.center).cos() - 1.0).mul_add(kappa, 0.0).exp()
            / (2.0 * PI * bessel_i0_scaled(kappa))
    }

    /// CDF of the centered angle: probability of the arc from `center - pi`
    /// to `angle`, by adaptive quadrature.
    pub fn cdf(&self, angle: f64) -> Result<f64, AnalysisError> {
        // keep exact endpoint inputs distinguishable: the circle's CDF jumps
        // at the cut, and normalize_angle would fold -pi onto +pi
        let delta = angle - self.center;
        let phi = if (-PI..=PI).contains(&delta) { delta } else { normalize_angle(delta) };
        let kappa = 1.0 / self.d;
        let norm = 2.0 * PI * bessel_i0_scaled(kappa);
        let f = |s: f64| ((s.cos() - 1.0) * kappa).exp();
        // exploit symmetry: integrate the short side
        let p = if phi <= 0.0 {
            quad_adaptive(&f, -PI, phi, 1e-13)? / norm
        } else {
            1.0 - quad_adaptive(&f, phi, PI, 1e-13)? / norm
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Mean resultant length `|E[omega]| = I_1(1/d) / I_0(1/d)`.
    pub fn mean_resultant_length(&self) -> f64 {
        let kappa = 1.0 / self.d;
        bessel_i1_scaled(kappa) / bessel_i0_scaled(kappa)
    }

    /// A sampler for this law (builds an inversion table only for extreme
    /// concentration `1/d > 500`).
    pub fn sampler(&self) -> VonMisesSampler {
        VonMisesSampler::new(*self)
    }
}

/// Exact rejection sampler (wrapped-Cauchy envelope), with numeric CDF
/// inversion as the extreme-concentration fallback.
#[derive(Debug, Clone)]
pub struct VonMisesSampler {
    vm: VonMises,
    /// precomputed envelope constants (r parameter of the wrapped-Cauchy)
    r_env: f64,
    /// quantile table (angles, cumulative) for `1/d > 500`
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl VonMisesSampler {
    fn new(vm: VonMises) -> Self {
        let kappa = 1.0 / vm.d;
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        let r_env = (1.0 + rho * rho) / (2.0 * rho);
        let table = if kappa > INVERSION_KAPPA {
            Some(Self::build_table(&vm))
        } else {
            None
        };
        Self { vm, r_env, table }
    }

    /// Trapezoid prefix of the pdf over `center ± 8 sqrt(d)` (the mass
    /// outside is below 1e-13 at the concentrations this branch serves).
    fn build_table(vm: &VonMises) -> (Vec<f64>, Vec<f64>) {
        let half_width = (8.0 * vm.d.sqrt()).min(PI);
        let m = 8193usize;
        let step = 2.0 * half_width / (m - 1) as f64;
        let kappa = 1.0 / vm.d;
        let xs: Vec<f64> = (0..m).map(|i| -half_width + i as f64 * step).collect();
        let pdf: Vec<f64> = xs.iter().map(|&x| ((x.cos() - 1.0) * kappa).exp()).collect();
        let mut cum = vec![0.0; m];
        for i in 1..m {
            cum[i] = cum[i - 1] + 0.5 * (pdf[i - 1] + pdf[i]) * step;
        }
        let total = cum[m - 1];
        for c in &mut cum {
            *c /= total;
        }
        (xs, cum)
    }

    /// Draw one heading angle in `(-pi, pi]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Some((xs, cum)) = &self.table {
            let u: f64 = rng.gen();
            let idx = match cum.partition_point(|&c| c < u) {
                0 => 1,
                i => i.min(cum.len() - 1),
            };
            let (c0, c1) = (cum[idx - 1], cum[idx]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            let phi = xs[idx - 1] + frac * (xs[idx] - xs[idx - 1]);
            return normalize_angle(self.vm.center + phi);
        }
        let kappa = 1.0 / self.vm.d;
        let r = self.r_env;
        for _ in 0..1_000_000 {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let u3: f64 = rng.gen();
                let phi = if u3 > 0.5 { f.clamp(-1.0, 1.0).acos() } else { -f.clamp(-1.0, 1.0).acos() };
                return normalize_angle(self.vm.center + phi);
            }
        }
        unreachable!("rejection sampler acceptance rate cannot be this low");
    }
}

// ---------------------------------------------------------------------------
// goodness-of-fit helpers
// ---------------------------------------------------------------------------

/// Chi-square goodness-of-fit outcome.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected counts.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<ChiSquareResult, AnalysisError> {
    if observed.len() != expected.len() {
        return Err(AnalysisError::BadGoodnessOfFit(format!(
            "{} observed vs {} expected bins",
            observed.len(),
            expected.len()
        )));
    }
    if observed.len() < 2 {
        return Err(AnalysisError::BadGoodnessOfFit("need at least 2 bins".into()));
    }
    let mut stat = 0.0;
    for (i, (&o, &e)) in observed.iter().zip(expected).enumerate() {
        if !(e > 0.0) {
            return Err(AnalysisError::BadGoodnessOfFit(format!(
                "expected count {e} in bin {i} must be positive"
            )));
        }
        stat += (o - e) * (o - e) / e;
    }
    let dof = observed.len() - 1;
    let p_value = 1.0 - cdf_chi2(dof, stat);
    Ok(ChiSquareResult { statistic: stat, dof, p_value })
}

/// Kolmogorov–Smirnov outcome against a fully specified CDF.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    /// asymptotic 1% critical value `1.628 / sqrt(n)`
    pub critical_1pct: f64,
}

/// Two-sided KS statistic of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptyInput("KS test needs samples".into()));
    }
    let mut sorted = samples.to_vec();
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::BadGoodnessOfFit("non-finite sample".into()));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n as f64).abs());
        d = d.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    Ok(KsResult { statistic: d, n, critical_1pct: 1.628 / (n as f64).sqrt() })
}

// ---------------------------------------------------------------------------
// profile comparison
// ---------------------------------------------------------------------------

/// Shortest angular separation `min(|a-b|, 2pi - |a-b|)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b).abs();
    d.min(2.0 * PI - d)
}

/// Comparison outcome between two binned profiles.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ComparisonReport {
    /// L1 distance of the density fields, `sum |drho| * dbin`
    pub l1_rho: f64,
    /// L1 distance of the direction fields with circular metric, bins where
    /// either side is undefined skipped
    pub l1_theta: f64,
    /// steepest-gradient shock estimate of the first profile
    pub shock_micro: Option<f64>,
    /// steepest-gradient shock estimate of the second profile
    pub shock_macro: Option<f64>,
    pub notes: Vec<String>,
}

/// Steepest-density-gradient shock locator with 3-point parabolic
/// refinement of the jump magnitudes. Returns the estimated position, or
/// `None` when the profile has no usable jump (flat or too short).
pub fn locate_shock(bin_centers: &[f64], rho: &[f64]) -> Option<f64> {
    let n = bin_centers.len().min(rho.len());
    if n < 2 {
        return None;
    }
    let jump = |j: usize| -> f64 {
        let d = rho[j + 1] - rho[j];
        if d.is_finite() {
            d.abs()
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for j in 0..n - 1 {
        let v = jump(j);
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    if !(best_val > 0.0) {
        return None;
    }
    let mid = 0.5 * (bin_centers[best] + bin_centers[best + 1]);
    let dbin = bin_centers[1] - bin_centers[0];
    if best == 0 || best + 2 >= n {
        return Some(mid);
    }
    let (a, b, c) = (jump(best - 1), jump(best), jump(best + 1));
    if !(a.is_finite() && c.is_finite()) {
        return Some(mid);
    }
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 1e-14 * (a.abs() + b.abs() + c.abs()).max(1e-300) {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(mid + delta * dbin)
}

/// L1 comparison of two profiles on identical binning, with shock
/// positions.
pub fn compare_profiles(micro: &Profile, macro_p: &Profile) -> Result<ComparisonReport, AnalysisError> {
    if micro.bin_centers.len() != macro_p.bin_centers.len() {
        return Err(AnalysisError::BinningMismatch(
            micro.bin_centers.len(),
            macro_p.bin_centers.len(),
        ));
    }
    if micro.bin_centers.len() < 2 {
        return Err(AnalysisError::EmptyInput("profiles need at least 2 bins".into()));
    }
    for (i, (&a, &b)) in micro.bin_centers.iter().zip(&macro_p.bin_centers).enumerate() {
        if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
            return Err(AnalysisError::BinCentersDiffer { index: i });
        }
    }
    let dbin = micro.bin_centers[1] - micro.bin_centers[0];
    let mut l1_rho = 0.0;
    let mut l1_theta = 0.0;
    let mut skipped = 0usize;
    for i in 0..micro.bin_centers.len() {
        l1_rho += (micro.rho[i] - macro_p.rho[i]).abs();
        let (ta, tb) = (micro.theta_mean[i], macro_p.theta_mean[i]);
        if ta.is_finite() && tb.is_finite() {
            l1_theta += circular_distance(ta, tb);
        } else {
            skipped += 1;
        }
    }
    let mut notes = Vec::new();
    if skipped > 0 {
        notes.push(format!("{skipped} bins without direction data skipped in the angle norm"));
    }
    Ok(ComparisonReport {
        l1_rho: l1_rho * dbin,
        l1_theta: l1_theta * dbin,
        shock_micro: locate_shock(&micro.bin_centers, &micro.rho),
        shock_macro: locate_shock(&macro_p.bin_centers, &macro_p.rho),
        notes,
    })
}

// ---------------------------------------------------------------------------
// rotating stationary solution
// ---------------------------------------------------------------------------

/// Uniform radial grid helper for [`vortex_residual`].
pub fn uniform_radial_grid(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    let h = (r1 - r0) / (n - 1) as f64;
    (0..n).map(|i| r0 + i as f64 * h).collect()
}

/// Max-norm residual of the stationary equations for the azimuthal vortex
/// `rho = C r^k`, `Omega = e_theta`, with the exact exponent `k =
/// c2/lambda` scaled by `exponent_scale` (1.0 = true solution; other values
/// give a non-solution control).
///
/// Uses centered second-order differences on the polar product grid
/// `r_grid x uniform angles`, evaluating
/// * mass: `c1 * div(rho Omega)`
/// * direction: `c2 (Omega . grad) Omega + lambda (I - Omega Omega^T) grad
///   ln rho`
/// and returns the largest absolute entry over interior radii.
pub fn vortex_residual_scaled(
    c_amp: f64,
    coeffs: &ModelCoefficients,
    r_grid: &[f64],
    n_angular: usize,
    exponent_scale: f64,
) -> Result<f64, AnalysisError> {
    if r_grid.len() < 3 {
        return Err(AnalysisError::EmptyInput(
            "radial grid needs at least 3 nodes for a centered stencil".into(),
        ));
    }
    if n_angular < 4 {
        return Err(AnalysisError::EmptyInput("need at least 4 angular nodes".into()));
    }
    for (i, &r) in r_grid.iter().enumerate() {
        if !(r > 0.0) {
            return Err(AnalysisError::NonPositiveRadius { index: i, value: r });
        }
    }
    let k_exp = coeffs.c2 / coeffs.lambda * exponent_scale;
    let nr = r_grid.len();
    let na = n_angular;
    let ha = 2.0 * PI / na as f64;
    let rho: Vec<f64> = r_grid.iter().map(|&r| c_amp * r.powf(k_exp)).collect();
    let lnrho: Vec<f64> = rho.iter().map(|&v| v.ln()).collect();
    let (sin, cos): (Vec<f64>, Vec<f64>) =
        (0..na).map(|j| (j as f64 * ha).sin_cos()).unzip();

    // node fields, indexed [i * na + j]
    let idx = |i: usize, j: usize| i * na + j;
    let mut fu = vec![0.0; nr * na]; // Omega_x = -sin
    let mut fv = vec![0.0; nr * na]; // Omega_y = cos
    let mut fp = vec![0.0; nr * na]; // rho * Omega_x
    let mut fq = vec![0.0; nr * na]; // rho * Omega_y
    let mut fl = vec![0.0; nr * na]; // ln rho
    for i in 0..nr {
        for j in 0..na {
            fu[idx(i, j)] = -sin[j];
            fv[idx(i, j)] = cos[j];
            fp[idx(i, j)] = -rho[i] * sin[j];
            fq[idx(i, j)] = rho[i] * cos[j];
            fl[idx(i, j)] = lnrho[i];
        }
    }

    // centered cartesian gradient of a node field at (i, j), interior i
    let grad = |f: &[f64], i: usize, j: usize| -> (f64, f64) {
        let jm = (j + na - 1) % na;
        let jp = (j + 1) % na;
        let dr = (f[idx(i + 1, j)] - f[idx(i - 1, j)]) / (r_grid[i + 1] - r_grid[i - 1]);
        let da = (f[idx(i, jp)] - f[idx(i, jm)]) / (2.0 * ha);
        let (s, c) = (sin[j], cos[j]);
        let r = r_grid[i];
        (c * dr - s / r * da, s * dr + c / r * da)
    };

    let mut max_res: f64 = 0.0;
    for i in 1..nr - 1 {
        for j in 0..na {
            let (px, _) = grad(&fp, i, j);
            let (_, qy) = grad(&fq, i, j);
            let mass = coeffs.c1 * (px + qy);
            let (ux, uy) = grad(&fu, i, j);
            let (vx, vy) = grad(&fv, i, j);
            let (lx, ly) = grad(&fl, i, j);
            let (u, v) = (fu[idx(i, j)], fv[idx(i, j)]);
            let adv_x = coeffs.c2 * (u * ux + v * uy);
            let adv_y = coeffs.c2 * (u * vx + v * vy);
            let along = lx * u + ly * v;
            let proj_x = lx - along * u;
            let proj_y = ly - along * v;
            let res_x = adv_x + coeffs.lambda * proj_x;
            let res_y = adv_y + coeffs.lambda * proj_y;
            max_res = max_res.max(mass.abs()).max(res_x.abs()).max(res_y.abs());
        }
    }
    Ok(max_res)
}

/// [`vortex_residual_scaled`] with the exact exponent.
pub fn vortex_residual(
    c_amp: f64,
    coeffs: &ModelCoefficients,
    r_grid: &[f64],
    n_angular: usize,
) -> Result<f64, AnalysisError> {
    vortex_residual_scaled(c_amp, coeffs, r_grid, n_angular, 1.0)
}

// ---------------------------------------------------------------------------
// equilibrium checks
// ---------------------------------------------------------------------------

/// Fraction of the trajectory discarded as burn-in.
pub const BURN_IN_FRACTION: f64 = 1.0 / 3.0;
/// Angular histogram bins for the chi-square test.
pub const CHI2_BINS: usize = 36;
/// Acceptance half-width for the alignment order parameter.
pub const PHI_TOLERANCE: f64 = 0.05;
/// Minimum expected count per (merged) chi-square bin.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EquilibriumStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of the equilibrium comparison of a heading trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EquilibriumReport {
    /// chi-square of the post-burn-in heading histogram vs the alignment law
    pub chi2: Option<ChiSquareResult>,
    pub chi2_pass: Option<bool>,
    /// time-averaged post-burn-in order parameter
    pub phi_mean: f64,
    /// closed-form alignment coefficient `c1(d)` the order parameter is
    /// compared against
    pub phi_target: f64,
    /// circular-law mean resultant length `I_1(1/d)/I_0(1/d)` (the value a
    /// planar-heading simulation actually equilibrates to)
    pub phi_circular: f64,
    pub phi_within: f64,
    pub phi_pass: bool,
    pub status: EquilibriumStatus,
    pub notes: Vec<String>,
}

/// Chi-square + order-parameter equilibrium checks of a heading
/// trajectory: the first third of the snapshots is burn-in, the rest are
/// each centered at their own snapshot mean direction, pooled into a 36-bin
/// histogram of deviations, and tested against the circular alignment law;
/// the order parameter is averaged over the same window and compared
/// against `c1(d)`.
///
/// Pearson's test assumes the pooled deviations are independent draws, so
/// snapshots should be spaced a few heading-relaxation times apart
/// (several times the response time of the angle dynamics); back-to-back
/// steps of the same run inflate the statistic.
///
/// Low-expectation histogram bins are merged (walking outward from the
/// antipode) until every bin expects at least 5 counts; if fewer than two
/// bins or fewer than 180 samples survive, the outcome is `Inconclusive`.
pub fn equilibrium_checks(
    heading_snapshots: &[Vec<f64>],
    d: f64,
) -> Result<EquilibriumReport, AnalysisError> {
    if !(d > 0.0) {
        return Err(AnalysisError::NonPositiveNoise(d));
    }
    if heading_snapshots.is_empty() {
        return Err(AnalysisError::EmptyInput("no snapshots".into()));
    }
    let burn = ((heading_snapshots.len() as f64) * BURN_IN_FRACTION).floor() as usize;
    let kept = &heading_snapshots[burn.min(heading_snapshots.len() - 1)..];
    let mut notes = vec![format!(
        "burn-in discarded {burn} of {} snapshots",
        heading_snapshots.len()
    )];

    // order parameter per snapshot
    let mut phi_sum = 0.0;
    let mut phi_count = 0usize;
    for snap in kept {
        if snap.is_empty() {
            continue;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for &t in snap {
            sx += t.cos();
            sy += t.sin();
        }
        phi_sum += sx.hypot(sy) / snap.len() as f64;
        phi_count += 1;
    }
    if phi_count == 0 {
        return Err(AnalysisError::EmptyInput("snapshots contain no particles".into()));
    }
    let phi_mean = phi_sum / phi_count as f64;
    let phi_target = c1_closed_form(d).map_err(AnalysisError::Coefficients)?;
    let vm_probe = VonMises::new(d, 0.0)?;
    let phi_circular = vm_probe.mean_resultant_length();
    let phi_within = (phi_mean - phi_target).abs();
    let phi_pass = phi_within <= PHI_TOLERANCE;

    // pooled headings, centered at the pooled mean direction
    // Deviations from each snapshot's own mean direction. The stationary
    // law describes headings *relative to the instantaneous collective
    // direction*; that direction itself performs a slow random walk (its
    // diffusion slows with ensemble size but never stops), so centering at
    // a single pooled mean would fold the walk into the histogram and
    // over-disperse it on long trajectories.
    let mut pooled: Vec<f64> = Vec::new();
    for snap in kept {
        if snap.is_empty() {
            continue;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for &t in snap {
            sx += t.cos();
            sy += t.sin();
        }
        let center = sy.atan2(sx);
        for &t in snap {
            pooled.push(normalize_angle(t - center));
        }
    }

    let (chi2, chi2_pass, status) = if pooled.len() < CHI2_BINS * 5 {
        notes.push(format!(
            "only {} pooled samples; need at least {} for the histogram test",
            pooled.len(),
            CHI2_BINS * 5
        ));
        (None, None, EquilibriumStatus::Inconclusive)
    } else {
        let n = pooled.len() as f64;
        let width = 2.0 * PI / CHI2_BINS as f64;
        let mut counts = vec![0.0f64; CHI2_BINS];
        for &phi in &pooled {
            // already centered in (-pi, pi]
            let mut b = ((phi + PI) / width).floor() as isize;
            if b < 0 {
                b = 0;
            }
            let b = (b as usize).min(CHI2_BINS - 1);
            counts[b] += 1.0;
        }
        let mut expected = vec![0.0f64; CHI2_BINS];
        for (b, e) in expected.iter_mut().enumerate() {
            let lo = -PI + b as f64 * width;
            let hi = lo + width;
            // arc probability of the centered law
            let p = vm_probe.cdf(hi)? - vm_probe.cdf(lo)?;
            *e = p.max(0.0) * n;
        }
        // merge thin bins walking inward from the antipodal ends
        let (mo, me) = merge_thin_bins(&counts, &expected);
        if mo.len() < 2 {
            notes.push("all probability mass in one merged bin; test degenerate".into());
            (None, None, EquilibriumStatus::Inconclusive)
        } else {
            if mo.len() < CHI2_BINS {
                notes.push(format!(
                    "merged {} thin histogram bins into their neighbors",
                    CHI2_BINS - mo.len()
                ));
            }
            let res = chi_square_gof(&mo, &me)?;
            let pass = res.p_value > 0.01;
            let status = if pass && phi_pass {
                EquilibriumStatus::Pass
            } else {
                EquilibriumStatus::Fail
            };
            (Some(res), Some(pass), status)
        }
    };
    if !phi_pass {
        notes.push(format!(
            "order parameter {phi_mean:.4} vs target {phi_target:.4} \
             (circular-law resultant would be {phi_circular:.4})"
        ));
    }
    Ok(EquilibriumReport {
        chi2,
        chi2_pass,
        phi_mean,
        phi_target,
        phi_circular,
        phi_within,
        phi_pass,
        status,
        notes,
    })
}

/// Merge histogram bins with expected counts below [`MIN_EXPECTED`] into
/// their neighbors, walking from both ends (the bins are ordered by
/// centered angle, so the thin tails sit at the ends).
fn merge_thin_bins(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = observed.len();
    let mut lo = 0usize;
    let mut hi = n; // exclusive
    let mut head = (0.0, 0.0);
    let mut tail = (0.0, 0.0);
    while lo < hi && head.1 < MIN_EXPECTED {
        head.0 += observed[lo];
        head.1 += expected[lo];
        lo += 1;
    }
    while hi > lo && tail.1 < MIN_EXPECTED {
        hi -= 1;
        tail.0 += observed[hi];
        tail.1 += expected[hi];
    }
    let mut obs = Vec::with_capacity(hi - lo + 2);
    let mut exp = Vec::with_capacity(hi - lo + 2);
    if head.1 > 0.0 {
        obs.push(head.0);
        exp.push(head.1);
    }
    for i in lo..hi {
        obs.push(observed[i]);
        exp.push(expected[i]);
    }
    if tail.1 > 0.0 {
        obs.push(tail.0);
        exp.push(tail.1);
    }
    // sweep up any bin still below the threshold into its thinner neighbor
    let mut i = 0;
    while exp.len() > 1 && i < exp.len() {
        if exp[i] < MIN_EXPECTED {
            let j = if i == 0 {
                1
            } else if i == exp.len() - 1 || exp[i - 1] <= exp[i + 1] {
                i - 1
            } else {
                i + 1
            };
            exp[j] += exp[i];
            obs[j] += obs[i];
            exp.remove(i);
            obs.remove(i);
            i = 0;
        } else {
            i += 1;
        }
    }
    (obs, exp)
}
