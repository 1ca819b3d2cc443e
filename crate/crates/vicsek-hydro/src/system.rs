//! Primitive states and the quasilinear structure of the 1D flow system.
//!
//! The model evolves a density `rho > 0` and a flow angle `theta` under
//!
//! ```text
//! d_t rho   + a * d_x(rho cos theta) = 0
//! d_t theta + b cos(theta) d_x theta - (lam sin(theta)/rho) d_x rho = 0
//! ```
//!
//! written here with generic speeds `(a, b, lam)` so the same code serves the
//! rescaled form `(1, c, lambda_r)` and the unrescaled form `(c1, c2, lambda)`
//! (the two are related by stretching `x` with `c1`). Both wave families,
//! their right eigenvectors, and positive/negative-part matrix splittings
//! (with a Harten-style regularization of near-zero speeds) live here; the
//! schemes and the wave-curve solver build on top.

use crate::coefficients::ModelCoefficients;

/// A 2x2 matrix in row-major order.
pub type Mat2 = [[f64; 2]; 2];

/// Multiply a 2x2 matrix by a 2-vector.
pub fn mat2_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Normalize an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// First conserved-variable transform: `w(theta) = ln |tan(theta/2)|`.
///
/// Bijective from `(0, pi)` to the real line; undefined at multiples of pi.
pub fn log_abs_tan_half(theta: f64) -> f64 {
    (0.5 * theta).tan().abs().ln()
}

/// Inverse of [`log_abs_tan_half`] on the principal branch `(0, pi)`.
pub fn theta_from_w(w: f64) -> f64 {
    2.0 * w.exp().atan()
}

/// Second flux transform: `ln |sin theta|`; undefined at multiples of pi.
pub fn log_abs_sin(theta: f64) -> f64 {
    theta.sin().abs().ln()
}

/// Density + flow angle at one point or cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimState {
    /// Density, strictly positive.
    pub rho: f64,
    /// Flow angle in `(-pi, pi]`.
    pub theta: f64,
}

impl PrimState {
    /// Build a state, normalizing the angle. Panics on non-positive or
    /// non-finite density — states are validated at system boundaries, so an
    /// invalid one here is a programming error.
    pub fn new(rho: f64, theta: f64) -> Self {
        assert!(
            rho.is_finite() && rho > 0.0,
            "density must be positive and finite, got {rho}"
        );
        assert!(theta.is_finite(), "angle must be finite, got {theta}");
        Self { rho, theta: normalize_angle(theta) }
    }
}

/// One characteristic family at one state.
#[derive(Debug, Clone, Copy)]
pub struct CharField {
    /// Family index, 1 (slower) or 2 (faster).
    pub index: u8,
    /// Characteristic speed of the family at this state.
    pub speed: f64,
    /// Unit right eigenvector of the primitive-variable matrix.
    pub right_eigenvector: [f64; 2],
}

/// Positive/negative-part splitting of a matrix with real eigenvalues:
/// `plus - minus` reproduces the matrix exactly and `plus + minus` is its
/// (regularized) absolute value; both parts have nonnegative eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct MatrixSplit {
    pub plus: Mat2,
    pub minus: Mat2,
    pub abs: Mat2,
}

/// The quasilinear system with generic speed coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvSystem {
    /// Speed multiplying the mass flux.
    pub a: f64,
    /// Speed multiplying the angle convection.
    pub b: f64,
    /// Pressure-like coefficient coupling density gradients into the angle.
    pub lam: f64,
}

impl MvSystem {
    /// Rescaled form: unit mass-flux speed, ratio `c`, coefficient `lambda_r`.
    pub fn rescaled(m: &ModelCoefficients) -> Self {
        Self { a: 1.0, b: m.c, lam: m.lambda_r }
    }

    /// Unrescaled form with the raw coefficients `(c1, c2, lambda)`.
    pub fn unrescaled(m: &ModelCoefficients) -> Self {
        Self { a: m.c1, b: m.c2, lam: m.lambda }
    }

    /// Primitive-variable matrix of the quasilinear system at a state.
    pub fn jacobian(&self, s: &PrimState) -> Mat2 {
        let (sin, cos) = s.theta.sin_cos();
        [
            [self.a * cos, -s.rho * self.a * sin],
            [-self.lam * sin / s.rho, self.b * cos],
        ]
    }

    /// Characteristic speeds `(gamma_1, gamma_2)` with `gamma_1 < gamma_2`:
    /// `(1/2) [ (a+b) cos t -+ sqrt((a-b)^2 cos^2 t + 4 a lam sin^2 t) ]`.
    pub fn eigenvalues(&self, theta: f64) -> (f64, f64) {
        let (sin, cos) = theta.sin_cos();
        let diff = (self.a - self.b) * cos;
        let rad = (diff * diff + 4.0 * self.a * self.lam * sin * sin).sqrt();
        let half_tr = 0.5 * (self.a + self.b) * cos;
        (half_tr - 0.5 * rad, half_tr + 0.5 * rad)
    }

    /// Both characteristic fields at a state.
    ///
    /// The structured eigenvectors are `(rho a sin t, a cos t - gamma_1)` for
    /// the slow family and `(b cos t - gamma_2, lam sin t / rho)` for the
    /// fast one; where those degenerate (at `sin t = 0` one of them can
    /// vanish identically) the eigenvector is recovered from whichever row of
    /// `A - gamma I` has the larger norm.
    pub fn eigen(&self, s: &PrimState) -> (CharField, CharField) {
        let (g1, g2) = self.eigenvalues(s.theta);
        let (sin, cos) = s.theta.sin_cos();
        let a_mat = self.jacobian(s);
        let scale = a_mat
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
            .max(1e-300);

        let r1 = checked_vector(
            [s.rho * self.a * sin, self.a * cos - g1],
            &a_mat,
            g1,
            scale,
        );
        let r2 = checked_vector(
            [self.b * cos - g2, self.lam * sin / s.rho],
            &a_mat,
            g2,
            scale,
        );
        (
            CharField { index: 1, speed: g1, right_eigenvector: r1 },
            CharField { index: 2, speed: g2, right_eigenvector: r2 },
        )
    }

    /// Flux Jacobian of the conserved form in `V = (rho, w)`,
    /// with flux `(a rho cos t, b ln|sin t| - lam ln rho)`:
    /// entries `[[a cos t, -a rho sin^2 t], [-lam/rho, b cos t]]`.
    /// Every entry is even in `theta`, so it is well defined from `|theta|`.
    pub fn conserved_flux_jacobian(&self, rho: f64, theta: f64) -> Mat2 {
        let (sin, cos) = theta.sin_cos();
        [
            [self.a * cos, -self.a * rho * sin * sin],
            [-self.lam / rho, self.b * cos],
        ]
    }

    /// Split the primitive-variable matrix at a state into positive and
    /// negative parts using the structured eigenvectors.
    pub fn split_at(&self, s: &PrimState) -> MatrixSplit {
        let (f1, f2) = self.eigen(s);
        split_from_eigen(f1.speed, f2.speed, f1.right_eigenvector, f2.right_eigenvector)
            .expect("characteristic directions are independent under strict hyperbolicity")
    }
}

/// Pick the structured eigenvector if it is healthy, else fall back to a
/// row-choice vector from `A - gamma I`; returns a unit vector.
fn checked_vector(cand: [f64; 2], a: &Mat2, gamma: f64, scale: f64) -> [f64; 2] {
    let norm = (cand[0] * cand[0] + cand[1] * cand[1]).sqrt();
    if norm > 1e-12 * scale.max(1.0) {
        return [cand[0] / norm, cand[1] / norm];
    }
    // rows of A - gamma I are both left-orthogonal to the eigenvector; use
    // the better-conditioned one
    let row1 = [a[0][0] - gamma, a[0][1]];
    let row2 = [a[1][0], a[1][1] - gamma];
    let v1 = [a[0][1], gamma - a[0][0]]; // orthogonal to row1
    let v2 = [gamma - a[1][1], a[1][0]]; // orthogonal to row2
    let n1 = row1[0].hypot(row1[1]);
    let n2 = row2[0].hypot(row2[1]);
    let v = if n1 >= n2 { v1 } else { v2 };
    let n = v[0].hypot(v[1]);
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        // A is already gamma*I in this direction; any unit vector works
        [1.0, 0.0]
    }
}

/// Harten regularization of `|gamma|`: below the cutoff `delta`, replace the
/// absolute value by the smooth parabola `(gamma^2 + delta^2) / (2 delta)`,
/// which matches `|gamma|` at `|gamma| = delta` and stays >= |gamma|.
pub fn harten_abs(gamma: f64, delta: f64) -> f64 {
    if gamma.abs() >= delta || delta <= 0.0 {
        gamma.abs()
    } else {
        (gamma * gamma + delta * delta) / (2.0 * delta)
    }
}

/// Fraction of the larger characteristic speed used as the Harten cutoff.
pub const ENTROPY_FIX_FRACTION: f64 = 0.05;

/// Build a [`MatrixSplit`] from an eigensystem. With `|g|*` the regularized
/// absolute value, the parts are `R diag((g + |g|*)/2) R^-1` and
/// `R diag((|g|* - g)/2) R^-1`; their difference is the original matrix
/// *exactly* (the regularization cancels) and their sum is the regularized
/// absolute value. Returns `None` when the eigenvectors are (numerically)
/// parallel.
pub fn split_from_eigen(
    g1: f64,
    g2: f64,
    r1: [f64; 2],
    r2: [f64; 2],
) -> Option<MatrixSplit> {
    let det = r1[0] * r2[1] - r1[1] * r2[0];
    let scale = r1[0].hypot(r1[1]) * r2[0].hypot(r2[1]);
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let delta = ENTROPY_FIX_FRACTION * g1.abs().max(g2.abs());
    let a1 = harten_abs(g1, delta);
    let a2 = harten_abs(g2, delta);
    let lp = [(g1 + a1) * 0.5, (g2 + a2) * 0.5];
    let lm = [(a1 - g1) * 0.5, (a2 - g2) * 0.5];
    let labs = [a1, a2];
    let build = |l: [f64; 2]| -> Mat2 {
        // R diag(l) R^-1 with R = [r1 r2] as columns
        let inv = [
            [r2[1] / det, -r2[0] / det],
            [-r1[1] / det, r1[0] / det],
        ];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = r1[i] * l[0] * inv[0][j] + r2[i] * l[1] * inv[1][j];
            }
        }
        out
    };
    Some(MatrixSplit { plus: build(lp), minus: build(lm), abs: build(labs) })
}

/// Split a generic 2x2 matrix with real eigenvalues (trace/determinant
/// quadratic, row-choice eigenvectors). Used for flux Jacobians whose
/// structured eigenvectors are not available. Returns `None` for complex
/// eigenvalues or a defective matrix.
pub fn split_generic(m: &Mat2) -> Option<MatrixSplit> {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let g1 = 0.5 * (tr - sq);
    let g2 = 0.5 * (tr + sq);
    let scale = m.iter().flatten().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1e-300);
    let vector_for = |g: f64| -> [f64; 2] {
        let v1 = [m[0][1], g - m[0][0]];
        let v2 = [g - m[1][1], m[1][0]];
        let n1 = v1[0].hypot(v1[1]);
        let n2 = v2[0].hypot(v2[1]);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        if n > 1e-14 * scale {
            [v[0] / n, v[1] / n]
        } else {
            [1.0, 0.0] // scalar multiple of the identity
        }
    };
    let r1 = vector_for(g1);
    let r2 = if sq > 1e-14 * scale {
        vector_for(g2)
    } else {
        // equal eigenvalues: diagonalizable only if m = g I
        let off = m[0][1].abs().max(m[1][0].abs());
        if off > 1e-12 * scale {
            return None;
        }
        [0.0, 1.0]
    };
    split_from_eigen(g1, g2, r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::make_coefficients;

    fn d1_system() -> MvSystem {
        MvSystem::rescaled(&make_coefficients(1.0).unwrap())
    }

    #[test]
    fn angle_normalization_lands_in_half_open_interval() {
        let pi = std::f64::consts::PI;
        assert!((normalize_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((normalize_angle(-pi) - pi).abs() < 1e-12);
        assert!((normalize_angle(0.3) - 0.3).abs() < 1e-15);
        assert!((normalize_angle(2.0 * pi + 0.3) - 0.3).abs() < 1e-12);
        assert!((normalize_angle(-0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn angle_transform_round_trips_on_principal_branch() {
        for theta in [0.01, 0.6, 1.5707, 2.5, 3.1] {
            let w = log_abs_tan_half(theta);
            assert!((theta_from_w(w) - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_at_aligned_flow_are_the_two_speeds() {
        let m = make_coefficients(1.0).unwrap();
        let sys = MvSystem::rescaled(&m);
        let (g1, g2) = sys.eigenvalues(0.0);
        assert!((g1 - m.c).abs() < 1e-14);
        assert!((g2 - 1.0).abs() < 1e-14);
        // at transverse flow the speeds are +/- sqrt(lambda_r)
        let (h1, h2) = sys.eigenvalues(std::f64::consts::FRAC_PI_2);
        assert!((h1 + m.lambda_r.sqrt()).abs() < 1e-12);
        assert!((h2 - m.lambda_r.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial_roots() {
        // independent oracle: trace/determinant quadratic on the assembled matrix
        let sys = d1_system();
        for &theta in &[-3.0, -1.2, -0.4, 0.0, 0.7, 1.5707, 2.9, std::f64::consts::PI] {
            for &rho in &[0.3, 1.0, 4.2] {
                let s = PrimState::new(rho, theta);
                let a = sys.jacobian(&s);
                let tr = a[0][0] + a[1][1];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let sq = (tr * tr - 4.0 * det).max(0.0).sqrt();
                let (g1, g2) = sys.eigenvalues(theta);
                assert!((g1 - 0.5 * (tr - sq)).abs() < 1e-12, "theta={theta}");
                assert!((g2 - 0.5 * (tr + sq)).abs() < 1e-12, "theta={theta}");
            }
        }
    }

    #[test]
    fn eigenvectors_annihilate_the_shifted_matrix() {
        let sys = d1_system();
        for &theta in &[-3.1, -1.0, 0.0, 0.2, 1.5707, 2.8, std::f64::consts::PI] {
            for &rho in &[0.5, 1.0, 3.0] {
                let s = PrimState::new(rho, theta);
                let a = sys.jacobian(&s);
                let scale = a.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()));
                let (f1, f2) = sys.eigen(&s);
                assert!(f1.speed < f2.speed, "strict hyperbolicity");
                for f in [f1, f2] {
                    let av = mat2_vec(&a, f.right_eigenvector);
                    let res = [
                        av[0] - f.speed * f.right_eigenvector[0],
                        av[1] - f.speed * f.right_eigenvector[1],
                    ];
                    let r = res[0].hypot(res[1]);
                    assert!(
                        r <= 1e-10 * scale,
                        "family {} at theta={theta}: residual {r:.2e}",
                        f.index
                    );
                }
            }
        }
    }

    #[test]
    fn characteristic_speed_has_one_interior_extremum_with_flat_direction() {
        // tan^2 t* = [ (4 lam - (1-c)^2)^2/(1+c)^2 - (1-c)^2 ] / (4 lam)
        let m = make_coefficients(1.0).unwrap();
        let sys = MvSystem::rescaled(&m);
        let (c, lam) = (m.c, m.lambda_r);
        let k0 = 4.0 * lam - (1.0 - c) * (1.0 - c);
        let tan2 = (k0 * k0 / ((1.0 + c) * (1.0 + c)) - (1.0 - c) * (1.0 - c)) / (4.0 * lam);
        assert!(tan2 > 0.0);
        let t0 = tan2.sqrt().atan(); // in (0, pi/2)
        // fast family peaks where cos > 0, slow family where cos < 0
        for (family, theta_star) in [(2u8, t0), (1u8, std::f64::consts::PI - t0)] {
            let s = PrimState::new(1.0, theta_star);
            let (f1, f2) = sys.eigen(&s);
            let f = if family == 1 { f1 } else { f2 };
            // gamma depends on theta only; directional derivative along the
            // eigenvector is (theta-component) * dgamma/dtheta
            let h = 1e-6;
            let gp = |t: f64| {
                let (g1, g2) = sys.eigenvalues(t);
                if family == 1 { g1 } else { g2 }
            };
            let dgam = (gp(theta_star + h) - gp(theta_star - h)) / (2.0 * h);
            let directional = f.right_eigenvector[1] * dgam;
            assert!(
                directional.abs() < 1e-5,
                "family {family}: directional derivative {directional:.2e}"
            );
            // and it is the unique interior extremum on (0, pi): the
            // finite-difference slope changes sign exactly once
            let n = 2000;
            let mut changes = 0;
            let mut prev = 0.0_f64;
            for i in 1..n {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                let slope = gp(t + 1e-7) - gp(t - 1e-7);
                if i > 1 && slope.signum() != prev.signum() {
                    changes += 1;
                }
                prev = slope;
            }
            assert_eq!(changes, 1, "family {family}");
        }
    }

    #[test]
    fn strict_hyperbolicity_over_random_states() {
        // deterministic pseudo-random sweep over three noise levels
        for d in [0.2, 1.0, 5.0] {
            let m = make_coefficients(d).unwrap();
            let sys = MvSystem::rescaled(&m);
            let mut state = 0x9e3779b97f4a7c15u64;
            for _ in 0..10_000 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = (state >> 11) as f64 / (1u64 << 53) as f64;
                let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * u;
                let (g1, g2) = sys.eigenvalues(theta);
                assert!(g2 - g1 > 0.0, "d={d}, theta={theta}, rho={}", 0.1 + 5.0 * v);
            }
        }
    }

    #[test]
    fn harten_regularization_is_continuous_and_dominating() {
        let delta = 0.3;
        assert_eq!(harten_abs(0.5, delta), 0.5);
        assert!((harten_abs(0.3, delta) - 0.3).abs() < 1e-15);
        assert!((harten_abs(-0.3, delta) - 0.3).abs() < 1e-15);
        assert!((harten_abs(0.0, delta) - 0.15).abs() < 1e-15);
        for g in [-0.29, -0.1, 0.0, 0.05, 0.29] {
            assert!(harten_abs(g, delta) >= g.abs());
        }
    }

    #[test]
    fn matrix_splitting_identities_hold_exactly() {
        let sys = d1_system();
        for &theta in &[-2.8, -0.9, 0.0, 0.4, 1.2, 3.0] {
            let s = PrimState::new(1.3, theta);
            let a = sys.jacobian(&s);
            let sp = sys.split_at(&s);
            for i in 0..2 {
                for j in 0..2 {
                    let diff = sp.plus[i][j] - sp.minus[i][j];
                    let sum = sp.plus[i][j] + sp.minus[i][j];
                    assert!((diff - a[i][j]).abs() < 1e-11, "difference reproduces A");
                    assert!((sum - sp.abs[i][j]).abs() < 1e-11, "sum reproduces |A|");
                }
            }
        }
    }

    #[test]
    fn generic_splitting_agrees_with_structured_on_the_flux_jacobian() {
        // the conserved flux Jacobian is similar to the primitive matrix, so
        // its split eigenvalues must coincide
        let sys = d1_system();
        let (rho, theta) = (0.8, 1.1);
        let m = sys.conserved_flux_jacobian(rho, theta);
        let sp = split_generic(&m).unwrap();
        let (g1, g2) = sys.eigenvalues(theta);
        // trace of plus part = sum of positive-part eigenvalues
        let delta = ENTROPY_FIX_FRACTION * g1.abs().max(g2.abs());
        let want_tr = (g1 + harten_abs(g1, delta)) * 0.5 + (g2 + harten_abs(g2, delta)) * 0.5;
        assert!((sp.plus[0][0] + sp.plus[1][1] - want_tr).abs() < 1e-12);
        // identity m = plus - minus
        for i in 0..2 {
            for j in 0..2 {
                assert!((sp.plus[i][j] - sp.minus[i][j] - m[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generic_splitting_rejects_rotation_matrices() {
        let rot = [[0.0, -1.0], [1.0, 0.0]];
        assert!(split_generic(&rot).is_none());
    }

    #[test]
    fn rescaled_and_unrescaled_spectra_are_scaled_copies() {
        // gamma_unrescaled(theta) = c1 * gamma_rescaled(theta)
        let m = make_coefficients(0.7).unwrap();
        let re = MvSystem::rescaled(&m);
        let un = MvSystem::unrescaled(&m);
        for &theta in &[-2.0, -0.3, 0.9, 2.7] {
            let (r1, r2) = re.eigenvalues(theta);
            let (u1, u2) = un.eigenvalues(theta);
            assert!((u1 - m.c1 * r1).abs() < 1e-13);
            assert!((u2 - m.c1 * r2).abs() < 1e-13);
        }
    }
}
