//! Measure which schemes propagate a shock at its true speed.
//!
//! The system's flux is only defined through a nonconservative product, so
//! scheme design decides what jump conditions a captured shock actually
//! satisfies. This example runs all four schemes on initial data whose
//! exact solution carries a fast left-moving 1-shock, locates the captured
//! shock by its steepest density gradient, converts position into an
//! average propagation speed, and compares against the semi-analytic speed.
//! The conservative scheme should land within a few 1e-3 of the exact
//! value; the upwind and semi-conservative variants converge to a *wrong*
//! speed (they satisfy different jump conditions), and the splitting scheme
//! deviates in its own way - it honors a different weak form.
//!
//! Run with: `cargo run --release --example shock_speed_tracking`

use vicsek_hydro::analysis::locate_shock;
use vicsek_hydro::coefficients::make_coefficients;
use vicsek_hydro::exact_riemann::{solve_riemann, Wave};
use vicsek_hydro::macro_schemes::{run, Bc, MacroGrid, Scheme, SchemeConfig};
use vicsek_hydro::system::PrimState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coeffs = make_coefficients(1.0)?;
    let left = PrimState::new(1.0, 1.05);
    let right = PrimState::new(1.432, 1.7);
    let (length, nx, dt, t_end) = (20.0, 400usize, 2e-2, 2.0);

    let fan = solve_riemann(&left, &right, &coeffs)?;
    let exact_speed = match fan.wave1 {
        Wave::Shock { speed } => speed,
        Wave::Rarefaction { .. } => unreachable!("this data produces a 1-shock"),
    };
    println!("exact 1-shock speed: {exact_speed:.6}\n");
    println!(
        "{:<18} {:>12} {:>12} {:>12}",
        "scheme", "x_shock", "speed", "deviation"
    );

    for scheme in [
        Scheme::Conservative,
        Scheme::Splitting,
        Scheme::Upwind,
        Scheme::SemiConservative,
    ] {
        let grid = MacroGrid::riemann_init(nx, length, left, right, Bc::NeumannHomogeneous, coeffs)?;
        let out = run(grid, &SchemeConfig { scheme, dt, t_end, snapshot_every: 0 })?;
        let centers: Vec<f64> = (0..nx).map(|i| out.final_grid.x_center(i)).collect();
        let rho: Vec<f64> = out.final_grid.cells.iter().map(|c| c.rho).collect();
        match locate_shock(&centers, &rho) {
            Some(x) => {
                // shock starts at mid-domain, so average speed over the run
                let speed = (x - 0.5 * length) / t_end;
                println!(
                    "{:<18} {:>12.4} {:>12.4} {:>12.4}",
                    scheme.tag(),
                    x,
                    speed,
                    (speed - exact_speed).abs()
                );
            }
            None => println!("{:<18} no shock located", scheme.tag()),
        }
    }
    println!("\n(deviation = |measured - exact|; only flux-form discretizations");
    println!(" are entitled to the exact jump conditions)");
    Ok(())
}
