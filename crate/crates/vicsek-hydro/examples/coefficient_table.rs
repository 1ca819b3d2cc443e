//! Tabulate the transport coefficients of the macroscopic model over a
//! range of noise intensities.
//!
//! For each noise level `d` this solves the stationary elliptic equation
//! behind the second alignment moment, evaluates the closed-form first
//! moment, and prints the resulting coefficient set `(c1, c2, lambda)`
//! together with the rescaled pair `(c, lambda_r)` used by the
//! one-dimensional solvers. The last column is the hyperbolicity ratio
//! `sqrt(lambda_r / (c - c^2))`; values above 1 mean the rescaled system
//! is strictly hyperbolic at every flow angle.
//!
//! Run with: `cargo run --release --example coefficient_table`

use vicsek_hydro::coefficients::{c1_quadrature, make_coefficients, DEFAULT_QUAD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // geometric ladder of noise intensities from 0.05 to 5
    let n = 13usize;
    let (d0, d1) = (0.05_f64, 5.0_f64);
    let ratio = (d1 / d0).powf(1.0 / (n - 1) as f64);

    println!(
        "{:>10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>8}",
        "d", "c1", "c1_quad", "c2", "lambda", "c", "lambda_r", "hyp"
    );
    for i in 0..n {
        let d = d0 * ratio.powi(i as i32);
        let co = make_coefficients(d)?;
        // independent check of the closed form against direct quadrature
        let c1q = c1_quadrature(d, DEFAULT_QUAD)?;
        let hyp = (co.lambda_r / (co.c - co.c * co.c)).sqrt();
        println!(
            "{:>10.5} {:>12.8} {:>12.8} {:>12.8} {:>12.8} {:>12.8} {:>12.8} {:>8.3}",
            d, co.c1, c1q, co.c2, co.lambda, co.c, co.lambda_r, hyp
        );
        assert!(
            (co.c1 - c1q).abs() < 1e-6,
            "closed form and quadrature disagree at d = {d}"
        );
        assert!(co.c > 0.5 && co.c < 1.0, "c must sit in (1/2, 1)");
    }
    println!("\nall rows: closed-form c1 matches quadrature to 1e-6, and c in (1/2, 1)");
    Ok(())
}
