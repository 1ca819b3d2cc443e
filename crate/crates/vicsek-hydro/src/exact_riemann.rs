//! Semi-analytic Riemann solver for the rescaled flow system.
//!
//! Between two constant states the solution is a fan of (at most) two waves,
//! one per characteristic family, separated by a middle state. Rarefaction
//! waves follow the integral curves of the characteristic fields, written as
//! an exponential of a one-dimensional quadrature in the angle; discontinuous
//! waves satisfy the jump conditions of the conserved form
//!
//! ```text
//! U = (rho, ln|tan(theta/2)|),    F = (rho cos theta, c ln|sin theta| - lam ln rho)
//! ```
//!
//! and are admissible when the family's characteristic speed decreases across
//! the jump (Lax condition). The middle state is located by a bracketed
//! one-dimensional root find on the angle: the density reached by the forward
//! 1-wave curve from the left state must match the density reached by the
//! backward 2-wave curve from the right state.
//!
//! Everything here works in the rescaled system; the conserved-variable
//! transform is only valid while `sin theta` keeps its sign, so paths crossing
//! an axial flow angle are reported as errors rather than integrated through.

use crate::coefficients::ModelCoefficients;
use crate::numerics::{quad_adaptive, solve_bracketed, QuadError};
use crate::system::{
    log_abs_sin, log_abs_tan_half, CharField, Mat2, MvSystem, PrimState,
};

/// Characteristic family label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Slower family (smaller characteristic speed).
    One,
    /// Faster family.
    Two,
}

impl Family {
    /// 1-based index as used in reports.
    pub fn index(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }
}

/// Errors from wave-curve computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RiemannError {
    #[error("conserved variables undefined: sin(theta) vanishes on the {side} state")]
    SingularAngle { side: &'static str },
    #[error(
        "invariant undefined across singularity: family-{family} path [{lo:.6}, {hi:.6}] \
         meets the integrand singularity at {at:.6}"
    )]
    AcrossSingularity { family: u8, lo: f64, hi: f64, at: f64 },
    #[error("curve quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("no jump-condition root on the family-{family} locus from the anchor at angle {theta_m:.6}")]
    NoShockRoot { family: u8, theta_m: f64 },
    #[error(
        "wave-curve intersection not found: no sign change of the density mismatch over the \
         scanned angles (smallest |mismatch| {best:.3e} at angle {at:.6})"
    )]
    NoIntersection { best: f64, at: f64 },
    #[error("states are not connected by a single admissible jump: {why}")]
    NotAShock { why: String },
    #[error(
        "inadmissible wave fan: {what} (family {family}, speeds {detail})"
    )]
    Inadmissible { family: u8, what: &'static str, detail: String },
    #[error(
        "sampling inside a degenerate-field wave: the family-{family} fan spans a \
         characteristic-speed extremum and is not single-valued"
    )]
    DegenerateFan { family: u8 },
}

/// One wave of the fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    /// Admissible discontinuity traveling at `speed`.
    Shock { speed: f64 },
    /// Continuous fan; `head` is the characteristic speed at the adjoining
    /// outer state, `tail` at the middle state. `degenerate` marks a fan
    /// whose characteristic speed is not monotone along the curve (the field
    /// loses genuine nonlinearity inside the span).
    Rarefaction { head: f64, tail: f64, degenerate: bool },
}

impl Wave {
    /// Smallest and largest signal speed of the wave.
    pub fn speed_range(&self) -> (f64, f64) {
        match *self {
            Wave::Shock { speed } => (speed, speed),
            Wave::Rarefaction { head, tail, .. } => (head.min(tail), head.max(tail)),
        }
    }
}

/// Self-similar two-wave solution of a Riemann problem.
#[derive(Debug, Clone)]
pub struct WaveFan {
    pub left: PrimState,
    pub middle: PrimState,
    pub right: PrimState,
    pub wave1: Wave,
    pub wave2: Wave,
    sys: MvSystem,
}

/// Primitive-variable matrix of the rescaled system at a state.
pub fn jacobian(state: &PrimState, coeffs: &ModelCoefficients) -> Mat2 {
    MvSystem::rescaled(coeffs).jacobian(state)
}

/// Both characteristic fields of the rescaled system at a state.
pub fn eigen(state: &PrimState, coeffs: &ModelCoefficients) -> (CharField, CharField) {
    MvSystem::rescaled(coeffs).eigen(state)
}

/// Integrand of the family-1 curve exponent: `sin s / (cos s - gamma_1(s))`.
/// Singular only where the flow is anti-axial (`s = +/-pi`).
fn integrand_one(sys: &MvSystem, s: f64) -> f64 {
    let (g1, _) = sys.eigenvalues(s);
    s.sin() / (s.cos() - g1)
}

/// Integrand of the family-2 curve exponent:
/// `(b cos s - gamma_2(s)) / (lam sin s)`; singular where `sin s = 0`.
fn integrand_two(sys: &MvSystem, s: f64) -> f64 {
    let (_, g2) = sys.eigenvalues(s);
    (sys.b * s.cos() - g2) / (sys.lam * s.sin())
}

/// Points where the curve integrand of `family` is singular.
fn singular_points(family: Family) -> &'static [f64] {
    const PI: f64 = std::f64::consts::PI;
    match family {
        Family::One => &[-PI, PI],
        Family::Two => &[-PI, 0.0, PI],
    }
}

fn check_path(family: Family, a: f64, b: f64) -> Result<(), RiemannError> {
    let (lo, hi) = (a.min(b), a.max(b));
    for &p in singular_points(family) {
        if p >= lo - 1e-9 && p <= hi + 1e-9 {
            return Err(RiemannError::AcrossSingularity {
                family: family.index(),
                lo,
                hi,
                at: p,
            });
        }
    }
    Ok(())
}

/// Exponent integral of the rarefaction curve from `theta_a` to `theta_b`.
fn curve_exponent(
    sys: &MvSystem,
    family: Family,
    theta_a: f64,
    theta_b: f64,
) -> Result<f64, RiemannError> {
    check_path(family, theta_a, theta_b)?;
    if theta_a == theta_b {
        return Ok(0.0);
    }
    let v = match family {
        Family::One => quad_adaptive(&|s| integrand_one(sys, s), theta_a, theta_b, 1e-10)?,
        Family::Two => quad_adaptive(&|s| integrand_two(sys, s), theta_a, theta_b, 1e-10)?,
    };
    Ok(v)
}

/// Riemann invariant of `family` at `state`, with the curve integral taken
/// from the reference angle `theta_ref`:
/// `I_p = ln rho - ∫_{theta_ref}^{theta} (curve integrand) ds`.
/// Constant along the family's integral curves; two states lie on one curve
/// exactly when their invariants (same reference) coincide.
pub fn riemann_invariant(
    state: &PrimState,
    family: Family,
    theta_ref: f64,
    coeffs: &ModelCoefficients,
) -> Result<f64, RiemannError> {
    let sys = MvSystem::rescaled(coeffs);
    Ok(state.rho.ln() - curve_exponent(&sys, family, theta_ref, state.theta)?)
}

/// Point of the `family` integral curve through `anchor` at angle
/// `theta_target`: `rho(theta) = rho_anchor * exp(∫ integrand)`.
pub fn rarefaction_curve(
    anchor: &PrimState,
    family: Family,
    theta_target: f64,
    coeffs: &ModelCoefficients,
) -> Result<PrimState, RiemannError> {
    let sys = MvSystem::rescaled(coeffs);
    let expo = curve_exponent(&sys, family, anchor.theta, theta_target)?;
    Ok(PrimState::new(anchor.rho * expo.exp(), theta_target))
}

fn require_regular(state: &PrimState, side: &'static str) -> Result<(), RiemannError> {
    if state.theta.sin().abs() < 1e-14 {
        return Err(RiemannError::SingularAngle { side });
    }
    Ok(())
}

/// Jump-condition residual of the conserved form between two states:
///
/// ```text
/// (rho_r - rho_l) * (b Δln|sin| - lam Δln rho) - Δ(rho cos) * Δln|tan/2|
/// ```
///
/// Zero exactly when the two states satisfy both jump conditions with a
/// common speed. Symmetric under swapping the states (both factors of each
/// product flip sign).
pub fn hugoniot_residual(
    left: &PrimState,
    right: &PrimState,
    coeffs: &ModelCoefficients,
) -> Result<f64, RiemannError> {
    let sys = MvSystem::rescaled(coeffs);
    hugoniot_residual_sys(&sys, left, right)
}

fn hugoniot_residual_sys(
    sys: &MvSystem,
    left: &PrimState,
    right: &PrimState,
) -> Result<f64, RiemannError> {
    require_regular(left, "left")?;
    require_regular(right, "right")?;
    let d_rho = right.rho - left.rho;
    let d_f2 = log_abs_sin(right.theta) - log_abs_sin(left.theta);
    let d_lnrho = right.rho.ln() - left.rho.ln();
    let d_flux_mass =
        sys.a * (right.rho * right.theta.cos() - left.rho * left.theta.cos());
    let d_w = log_abs_tan_half(right.theta) - log_abs_tan_half(left.theta);
    // eliminating the common speed from s*d(rho) = d(a rho cos) and
    // s*d(w) = d(b ln|sin| - lam ln rho) leaves one scalar condition
    Ok(d_rho * (sys.b * d_f2 - sys.lam * d_lnrho) - d_flux_mass * d_w)
}

/// Speed of the discontinuity connecting two states that satisfy the jump
/// conditions: from the mass component, `s = Δ(rho cos theta) / Δrho`. The
/// angle component provides an independent value
/// `(b Δln|sin| - lam Δln rho) / Δln|tan/2|`; on the locus the two agree (to
/// round-off on root-found points). States far from the locus — where the
/// two components disagree by more than 5% — are rejected, as are coincident
/// states and equal-density pairs whose mass flux jumps.
pub fn shock_speed(
    left: &PrimState,
    right: &PrimState,
    coeffs: &ModelCoefficients,
) -> Result<f64, RiemannError> {
    require_regular(left, "left")?;
    require_regular(right, "right")?;
    let c = coeffs.c;
    let lam = coeffs.lambda_r;
    let d_rho = right.rho - left.rho;
    let d_mass_flux = right.rho * right.theta.cos() - left.rho * left.theta.cos();
    let d_w = log_abs_tan_half(right.theta) - log_abs_tan_half(left.theta);
    let d_angle_flux = c * (log_abs_sin(right.theta) - log_abs_sin(left.theta))
        - lam * (right.rho.ln() - left.rho.ln());
    let rho_scale = left.rho.max(right.rho);
    if d_rho.abs() <= 1e-12 * rho_scale {
        // mass component forces a continuous mass flux
        if d_mass_flux.abs() > 1e-10 * rho_scale {
            return Err(RiemannError::NotAShock {
                why: format!(
                    "equal densities but mass flux jumps by {d_mass_flux:.3e}"
                ),
            });
        }
        if d_w.abs() <= 1e-12 {
            return Err(RiemannError::NotAShock {
                why: "states coincide; no discontinuity to measure".into(),
            });
        }
        return Ok(d_angle_flux / d_w);
    }
    let s_mass = d_mass_flux / d_rho;
    if d_w.abs() > 1e-12 {
        let s_angle = d_angle_flux / d_w;
        let scale = s_mass.abs().max(s_angle.abs()).max(1e-8);
        if (s_mass - s_angle).abs() > 0.05 * scale {
            return Err(RiemannError::NotAShock {
                why: format!(
                    "jump-condition speeds disagree: mass component {s_mass:.6}, \
                     angle component {s_angle:.6}"
                ),
            });
        }
    }
    Ok(s_mass)
}

/// Wave kind chosen during curve construction.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Rarefaction,
    Shock,
}

/// Wave-curve machinery bound to one coefficient set.
struct Solver {
    sys: MvSystem,
}

impl Solver {
    fn gamma(&self, theta: f64, family: Family) -> f64 {
        let (g1, g2) = self.sys.eigenvalues(theta);
        match family {
            Family::One => g1,
            Family::Two => g2,
        }
    }

    /// Density reached by the forward 1-wave curve from `left` at angle
    /// `theta_m`: rarefaction branch when the slow speed rises toward the
    /// middle, otherwise the admissible jump found by a multiplicative
    /// outward scan for a residual sign change.
    fn one_wave_rho(
        &self,
        left: &PrimState,
        theta_m: f64,
    ) -> Result<(f64, Kind), RiemannError> {
        if self.gamma(theta_m, Family::One) >= self.gamma(left.theta, Family::One) {
            let e = curve_exponent(&self.sys, Family::One, left.theta, theta_m)?;
            Ok((left.rho * e.exp(), Kind::Rarefaction))
        } else {
            let rho = self.shock_root(
                |rho| {
                    hugoniot_residual_sys(
                        &self.sys,
                        left,
                        &PrimState { rho, theta: theta_m },
                    )
                },
                left.rho,
                Family::One,
                theta_m,
            )?;
            Ok((rho, Kind::Shock))
        }
    }

    /// Density reached by the backward 2-wave curve from `right` at angle
    /// `theta_m` (rarefaction branch when the fast speed falls toward the
    /// middle).
    fn two_wave_rho(
        &self,
        right: &PrimState,
        theta_m: f64,
    ) -> Result<(f64, Kind), RiemannError> {
        if self.gamma(theta_m, Family::Two) <= self.gamma(right.theta, Family::Two) {
            let e = curve_exponent(&self.sys, Family::Two, right.theta, theta_m)?;
            Ok((right.rho * e.exp(), Kind::Rarefaction))
        } else {
            let rho = self.shock_root(
                |rho| {
                    hugoniot_residual_sys(
                        &self.sys,
                        &PrimState { rho, theta: theta_m },
                        right,
                    )
                },
                right.rho,
                Family::Two,
                theta_m,
            )?;
            Ok((rho, Kind::Shock))
        }
    }

    /// Scan the jump-condition residual outward from the anchor density in
    /// multiplicative steps of 0.5% (2000 steps up, then down); bisect the
    /// first sign change.
    fn shock_root(
        &self,
        residual: impl Fn(f64) -> Result<f64, RiemannError>,
        rho_anchor: f64,
        family: Family,
        theta_m: f64,
    ) -> Result<f64, RiemannError> {
        let eval = |rho: f64| -> Option<f64> {
            residual(rho).ok().filter(|v| v.is_finite())
        };
        for sign in [1.0_f64, -1.0] {
            let mut prev_rho = rho_anchor;
            let Some(mut prev_val) = eval(rho_anchor) else { break };
            for k in 1..=2000 {
                let rho = rho_anchor * (sign * 0.005 * k as f64).exp();
                let Some(val) = eval(rho) else { break };
                if val.signum() != prev_val.signum() {
                    let (lo, hi) = (prev_rho.min(rho), prev_rho.max(rho));
                    let root = solve_bracketed(
                        |r| eval(r).unwrap_or(f64::NAN),
                        lo,
                        hi,
                        1e-13 * hi,
                    )
                    .ok_or(RiemannError::NoShockRoot {
                        family: family.index(),
                        theta_m,
                    })?;
                    return Ok(root);
                }
                prev_rho = rho;
                prev_val = val;
            }
        }
        Err(RiemannError::NoShockRoot { family: family.index(), theta_m })
    }

    /// Density mismatch between the two wave curves at a trial middle angle.
    fn mismatch(&self, left: &PrimState, right: &PrimState, theta_m: f64) -> Option<f64> {
        let (r1, _) = self.one_wave_rho(left, theta_m).ok()?;
        let (r2, _) = self.two_wave_rho(right, theta_m).ok()?;
        let v = r1.ln() - r2.ln();
        v.is_finite().then_some(v)
    }

    /// Whether the characteristic speed of `family` is monotone along the
    /// angular path `from -> to` in the direction required for a fan
    /// (nondecreasing left-to-right in space).
    fn fan_is_monotone(&self, family: Family, from: f64, to: f64) -> bool {
        let n = 64;
        let mut prev = self.gamma(from, family);
        for i in 1..=n {
            let t = from + (to - from) * i as f64 / n as f64;
            let g = self.gamma(t, family);
            if g < prev - 1e-12 {
                return false;
            }
            prev = g;
        }
        true
    }
}

/// Solve the Riemann problem for the rescaled system.
///
/// The middle angle is located by scanning the density mismatch of the two
/// wave curves over the admissible angle range (both signs of the angle,
/// excluding neighborhoods of the axial singularities) and bisecting the
/// first bracketed sign change. Each wave is then classified by the Lax
/// condition, and the assembled fan is validated: shock speeds must sit
/// between the family speeds of their adjoining states, fan speeds must be
/// monotone, and all wave-1 speeds must not exceed any wave-2 speed.
pub fn solve_riemann(
    left: &PrimState,
    right: &PrimState,
    coeffs: &ModelCoefficients,
) -> Result<WaveFan, RiemannError> {
    let sys = MvSystem::rescaled(coeffs);
    let solver = Solver { sys };

    if left.rho == right.rho && left.theta == right.theta {
        let (g1, g2) = sys.eigenvalues(left.theta);
        return Ok(WaveFan {
            left: *left,
            middle: *left,
            right: *right,
            wave1: Wave::Rarefaction { head: g1, tail: g1, degenerate: false },
            wave2: Wave::Rarefaction { head: g2, tail: g2, degenerate: false },
            sys,
        });
    }

    const DELTA: f64 = 0.02;
    const NSCAN: usize = 300;
    let pi = std::f64::consts::PI;
    let mut best = f64::INFINITY;
    let mut best_at = f64::NAN;
    let mut root: Option<f64> = None;
    'outer: for (lo, hi) in [(DELTA, pi - DELTA), (-pi + DELTA, -DELTA)] {
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..NSCAN {
            let t = lo + (hi - lo) * i as f64 / (NSCAN - 1) as f64;
            let Some(v) = solver.mismatch(left, right, t) else {
                prev = None;
                continue;
            };
            if v.abs() < best {
                best = v.abs();
                best_at = t;
            }
            if v == 0.0 {
                root = Some(t);
                break 'outer;
            }
            if let Some((tp, vp)) = prev {
                if v.signum() != vp.signum() {
                    let r = solve_bracketed(
                        |x| solver.mismatch(left, right, x).unwrap_or(f64::NAN),
                        tp,
                        t,
                        1e-13,
                    );
                    if let Some(r) = r {
                        root = Some(r);
                        break 'outer;
                    }
                }
            }
            prev = Some((t, v));
        }
    }
    let theta_m = root.ok_or(RiemannError::NoIntersection { best, at: best_at })?;

    let (rho_m, kind1) = solver.one_wave_rho(left, theta_m)?;
    let (_, kind2) = solver.two_wave_rho(right, theta_m)?;
    let middle = PrimState::new(rho_m, theta_m);

    let wave1 = match kind1 {
        Kind::Rarefaction => {
            let head = solver.gamma(left.theta, Family::One);
            let tail = solver.gamma(theta_m, Family::One);
            let degenerate = !solver.fan_is_monotone(Family::One, left.theta, theta_m);
            Wave::Rarefaction { head, tail, degenerate }
        }
        Kind::Shock => {
            let s = shock_speed(left, &middle, coeffs)?;
            let gl = solver.gamma(left.theta, Family::One);
            let gm = solver.gamma(theta_m, Family::One);
            let slack = 1e-7 * (1.0 + s.abs());
            if !(gl >= s - slack && s >= gm - slack) {
                return Err(RiemannError::Inadmissible {
                    family: 1,
                    what: "shock violates the Lax condition",
                    detail: format!("gamma_left {gl:.6}, s {s:.6}, gamma_middle {gm:.6}"),
                });
            }
            Wave::Shock { speed: s }
        }
    };
    let wave2 = match kind2 {
        Kind::Rarefaction => {
            let tail = solver.gamma(theta_m, Family::Two);
            let head = solver.gamma(right.theta, Family::Two);
            let degenerate = !solver.fan_is_monotone(Family::Two, theta_m, right.theta);
            Wave::Rarefaction { head, tail, degenerate }
        }
        Kind::Shock => {
            let s = shock_speed(&middle, right, coeffs)?;
            let gm = solver.gamma(theta_m, Family::Two);
            let gr = solver.gamma(right.theta, Family::Two);
            let slack = 1e-7 * (1.0 + s.abs());
            if !(gm >= s - slack && s >= gr - slack) {
                return Err(RiemannError::Inadmissible {
                    family: 2,
                    what: "shock violates the Lax condition",
                    detail: format!("gamma_middle {gm:.6}, s {s:.6}, gamma_right {gr:.6}"),
                });
            }
            Wave::Shock { speed: s }
        }
    };

    let (_, max1) = wave1.speed_range();
    let (min2, _) = wave2.speed_range();
    if max1 > min2 + 1e-9 {
        return Err(RiemannError::Inadmissible {
            family: 0,
            what: "wave families overlap",
            detail: format!("fastest 1-wave speed {max1:.6} exceeds slowest 2-wave speed {min2:.6}"),
        });
    }

    Ok(WaveFan { left: *left, middle, right: *right, wave1, wave2, sys })
}

impl WaveFan {
    /// Evaluate the self-similar solution at `xi = x/t`.
    ///
    /// Constant outside the wave speeds; inside a rarefaction the angle is
    /// recovered by inverting the monotone characteristic speed along the
    /// curve and the density follows the integral curve from the adjoining
    /// outer state. Sampling inside a degenerate fan is an error.
    pub fn sample(&self, xi: f64) -> Result<PrimState, RiemannError> {
        let (min1, max1) = self.wave1.speed_range();
        let (min2, max2) = self.wave2.speed_range();
        if xi < min1 {
            return Ok(self.left);
        }
        if xi > max2 {
            return Ok(self.right);
        }
        if xi > max1 && xi < min2 {
            return Ok(self.middle);
        }
        if xi <= max1 {
            // inside wave 1
            match self.wave1 {
                Wave::Shock { speed } => {
                    return Ok(if xi < speed { self.left } else { self.middle });
                }
                Wave::Rarefaction { head, tail, degenerate } => {
                    if (tail - head).abs() < 1e-14 {
                        return Ok(if xi <= head { self.left } else { self.middle });
                    }
                    if degenerate {
                        return Err(RiemannError::DegenerateFan { family: 1 });
                    }
                    let theta = self.invert_speed(Family::One, xi, self.left.theta, self.middle.theta)?;
                    let e = curve_exponent(&self.sys, Family::One, self.left.theta, theta)?;
                    return Ok(PrimState::new(self.left.rho * e.exp(), theta));
                }
            }
        }
        // inside wave 2
        match self.wave2 {
            Wave::Shock { speed } => {
                Ok(if xi < speed { self.middle } else { self.right })
            }
            Wave::Rarefaction { head, tail, degenerate } => {
                if (head - tail).abs() < 1e-14 {
                    return Ok(if xi <= tail { self.middle } else { self.right });
                }
                if degenerate {
                    return Err(RiemannError::DegenerateFan { family: 2 });
                }
                let theta = self.invert_speed(Family::Two, xi, self.middle.theta, self.right.theta)?;
                let e = curve_exponent(&self.sys, Family::Two, self.right.theta, theta)?;
                Ok(PrimState::new(self.right.rho * e.exp(), theta))
            }
        }
    }

    /// Solve `gamma_family(theta) = xi` for theta between two fan edges.
    fn invert_speed(
        &self,
        family: Family,
        xi: f64,
        theta_a: f64,
        theta_b: f64,
    ) -> Result<f64, RiemannError> {
        let g = |t: f64| {
            let (g1, g2) = self.sys.eigenvalues(t);
            (match family {
                Family::One => g1,
                Family::Two => g2,
            }) - xi
        };
        // the speed is monotone along an admissible fan; endpoints bracket xi
        let (lo, hi) = (theta_a.min(theta_b), theta_a.max(theta_b));
        match solve_bracketed(g, lo, hi, 1e-13) {
            Some(t) => Ok(t),
            // xi equals an edge speed to round-off: snap to the closer edge
            None => Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi }),
        }
    }

    /// All signal speeds (for CFL measurements and reporting).
    pub fn speed_bounds(&self) -> (f64, f64) {
        let (a, _) = self.wave1.speed_range();
        let (_, b) = self.wave2.speed_range();
        (a, b)
    }
}
