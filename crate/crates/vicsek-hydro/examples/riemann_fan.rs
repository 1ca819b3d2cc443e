//! Solve two Riemann problems semi-analytically and print their wave
//! structure.
//!
//! The first problem produces two rarefaction fans, the second two shocks.
//! For each, the middle state, the wave types with their signal speeds, and
//! a short table of the self-similar solution `(xi, rho, theta)` are
//! printed. The shock case also reports the jump conditions' residual-free
//! speeds so they can be compared against what a conservative grid scheme
//! reproduces.
//!
//! Run with: `cargo run --release --example riemann_fan`

use vicsek_hydro::coefficients::make_coefficients;
use vicsek_hydro::exact_riemann::{solve_riemann, Wave, WaveFan};
use vicsek_hydro::system::PrimState;

fn describe(label: &str, fan: &WaveFan) -> Result<(), Box<dyn std::error::Error>> {
    println!("== {label} ==");
    println!(
        "  left   rho = {:.6}  theta = {:.6}",
        fan.left.rho, fan.left.theta
    );
    println!(
        "  middle rho = {:.6}  theta = {:.6}",
        fan.middle.rho, fan.middle.theta
    );
    println!(
        "  right  rho = {:.6}  theta = {:.6}",
        fan.right.rho, fan.right.theta
    );
    for (name, wave) in [("wave 1", &fan.wave1), ("wave 2", &fan.wave2)] {
        match *wave {
            Wave::Shock { speed } => println!("  {name}: shock, speed = {speed:.6}"),
            Wave::Rarefaction { head, tail, degenerate } => println!(
                "  {name}: rarefaction, speeds {:.6} .. {:.6}{}",
                head.min(tail),
                head.max(tail),
                if degenerate { " (degenerate)" } else { "" }
            ),
        }
    }

    let (lo, hi) = fan.speed_bounds();
    let pad = 0.25 * (hi - lo).max(0.5);
    let (lo, hi) = (lo - pad, hi + pad);
    println!("  {:>10} {:>12} {:>12}", "xi", "rho", "theta");
    let samples = 9;
    for k in 0..samples {
        let xi = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let s = fan.sample(xi)?;
        println!("  {:>10.4} {:>12.6} {:>12.6}", xi, s.rho, s.theta);
    }
    println!();
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coeffs = make_coefficients(1.0)?;

    // two rarefactions: density and angle both relax through smooth fans
    let fan = solve_riemann(
        &PrimState::new(2.0, 1.7),
        &PrimState::new(1.12, 0.6),
        &coeffs,
    )?;
    describe("double rarefaction", &fan)?;

    // two shocks: both jumps are admissible discontinuities
    let fan = solve_riemann(
        &PrimState::new(1.0, 0.314),
        &PrimState::new(2.0, 1.54),
        &coeffs,
    )?;
    describe("double shock", &fan)?;

    Ok(())
}
