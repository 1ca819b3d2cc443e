//! Four finite-volume/finite-difference schemes for the 1D flow system on a
//! uniform grid.
//!
//! * `Conservative` — Roe-type flux-difference scheme on the conserved pair
//!   `(rho, ln|tan(theta/2)|)`, with the angle *sign* recovered from an
//!   auxiliary upwind predictor (the conserved variables only carry `|theta|`).
//! * `Splitting` — relaxation splitting: one conservative substep on
//!   `(rho, rho*cos, rho*sin)` with a Roe-type linearization at mean states,
//!   then an exact projection of the direction vector back to unit length.
//! * `Upwind` — non-conservative characteristic upwinding on `(rho, theta)`
//!   with positive/negative matrix parts at interface means.
//! * `SemiConservative` — mass advanced by a conservative interface flux
//!   (mean-state mass flux minus the first row of `|A|` times the jump), the
//!   angle exactly as in the upwind scheme.
//!
//! All schemes are explicit Euler in time, use one ghost cell per side
//! (copy for homogeneous Neumann, wraparound for periodic), treat densities
//! at or below `1e-12` as a hard error (the log-density flux is undefined at
//! vacuum, and clamping would corrupt wave speeds), and work for both the
//! rescaled and the unrescaled coefficient forms through [`MvSystem`].

use crate::coefficients::ModelCoefficients;
use crate::system::{log_abs_sin, log_abs_tan_half, theta_from_w, MvSystem, PrimState};

/// Density floor below which a cell is declared to have lost positivity.
pub const RHO_FLOOR: f64 = 1e-12;

/// Boundary handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// Ghost cells copy the adjacent interior cell.
    NeumannHomogeneous,
    /// Ghost cells wrap around the domain.
    Periodic,
}

/// Scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Conservative,
    Splitting,
    Upwind,
    SemiConservative,
}

impl Scheme {
    /// Short names used by the command line and file outputs.
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Conservative => "cons",
            Scheme::Splitting => "split",
            Scheme::Upwind => "upwind",
            Scheme::SemiConservative => "semi",
        }
    }

    /// Parse a short name (`cons|split|upwind|semi`).
    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "cons" | "conservative" => Some(Scheme::Conservative),
            "split" | "splitting" => Some(Scheme::Splitting),
            "up" | "upwind" => Some(Scheme::Upwind),
            "semi" | "semiconservative" => Some(Scheme::SemiConservative),
        _ => None,
        }
    }
}

/// Errors raised by scheme steps and runs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemeError {
    #[error("grid must have at least 4 cells, got {0}")]
    GridTooSmall(usize),
    #[error("cell width must be positive, got {0}")]
    BadCellWidth(f64),
    #[error("cell {cell}: density {rho:.3e} at or below the vacuum floor {floor:.0e}")]
    PositivityLost { cell: usize, rho: f64, floor: f64 },
    #[error("cell {cell}: {what}")]
    NumericalFailure { cell: usize, what: String },
    #[error("cell {cell}: direction vector vanished; normalization undefined")]
    NormalizationUndefined { cell: usize },
    #[error(
        "interface {interface}: relaxation substep lost hyperbolicity \
         (discriminant {delta:.3e} with mean velocity {u:.6})"
    )]
    HyperbolicityLost { interface: usize, delta: f64, u: f64 },
    #[error("cell {cell}: unit-direction constraint violated by {deviation:.3e} after the projection")]
    UnitDirectionLost { cell: usize, deviation: f64 },
    #[error("step {step}: Courant number {courant:.3} above 2; the run is meaningless")]
    CourantTooLarge { step: usize, courant: f64 },
    #[error("configuration error: {0}")]
    BadConfig(String),
}

/// Uniform 1D grid of primitive states.
#[derive(Debug, Clone)]
pub struct MacroGrid {
    pub nx: usize,
    pub dx: f64,
    pub cells: Vec<PrimState>,
    pub bc: Bc,
    pub coeffs: ModelCoefficients,
    /// Speed coefficients actually advanced (rescaled by default).
    pub sys: MvSystem,
}

impl MacroGrid {
    /// Grid over the rescaled system.
    pub fn new(
        dx: f64,
        cells: Vec<PrimState>,
        bc: Bc,
        coeffs: ModelCoefficients,
    ) -> Result<Self, SchemeError> {
        Self::with_system(dx, cells, bc, coeffs, MvSystem::rescaled(&coeffs))
    }

    /// Grid advancing an explicit speed set (used for the unrescaled form).
    pub fn with_system(
        dx: f64,
        cells: Vec<PrimState>,
        bc: Bc,
        coeffs: ModelCoefficients,
        sys: MvSystem,
    ) -> Result<Self, SchemeError> {
        if cells.len() < 4 {
            return Err(SchemeError::GridTooSmall(cells.len()));
        }
        if !(dx > 0.0) {
            return Err(SchemeError::BadCellWidth(dx));
        }
        Ok(Self { nx: cells.len(), dx, cells, bc, coeffs, sys })
    }

    /// Two-state initial data on `[0, length]` with the jump at `length/2`.
    pub fn riemann_init(
        nx: usize,
        length: f64,
        left: PrimState,
        right: PrimState,
        bc: Bc,
        coeffs: ModelCoefficients,
    ) -> Result<Self, SchemeError> {
        let dx = length / nx as f64;
        let cells = (0..nx)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                if x < 0.5 * length {
                    left
                } else {
                    right
                }
            })
            .collect();
        Self::new(dx, cells, bc, coeffs)
    }

    /// Cell-center coordinate of cell `i` (domain starts at 0).
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Total mass `sum(rho) * dx`.
    pub fn mass(&self) -> f64 {
        self.cells.iter().map(|s| s.rho).sum::<f64>() * self.dx
    }

    /// Largest characteristic speed magnitude over the cells.
    pub fn max_wave_speed(&self) -> f64 {
        self.cells
            .iter()
            .map(|s| {
                let (g1, g2) = self.sys.eigenvalues(s.theta);
                g1.abs().max(g2.abs())
            })
            .fold(0.0, f64::max)
    }

    fn rho_theta(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.cells.iter().map(|s| s.rho).collect(),
            self.cells.iter().map(|s| s.theta).collect(),
        )
    }

    fn rebuild(&self, rho: Vec<f64>, theta: Vec<f64>) -> Result<Self, SchemeError> {
        let mut cells = Vec::with_capacity(self.nx);
        for i in 0..self.nx {
            let (r, t) = (rho[i], theta[i]);
            if !r.is_finite() || !t.is_finite() {
                return Err(SchemeError::NumericalFailure {
                    cell: i,
                    what: format!("non-finite update (rho = {r}, theta = {t})"),
                });
            }
            if r <= RHO_FLOOR {
                return Err(SchemeError::PositivityLost { cell: i, rho: r, floor: RHO_FLOOR });
            }
            cells.push(PrimState::new(r, t));
        }
        Ok(Self {
            nx: self.nx,
            dx: self.dx,
            cells,
            bc: self.bc,
            coeffs: self.coeffs,
            sys: self.sys,
        })
    }
}

/// Extend a field with one ghost value per side according to the boundary.
fn ghost(a: &[f64], bc: Bc) -> Vec<f64> {
    let n = a.len();
    let mut g = Vec::with_capacity(n + 2);
    match bc {
        Bc::NeumannHomogeneous => {
            g.push(a[0]);
            g.extend_from_slice(a);
            g.push(a[n - 1]);
        }
        Bc::Periodic => {
            g.push(a[n - 1]);
            g.extend_from_slice(a);
            g.push(a[0]);
        }
    }
    g
}

/// Characteristic upwind update of both fields; also used by the
/// conservative scheme as its angle-sign predictor.
fn upwind_update(
    rho: &[f64],
    theta: &[f64],
    dt: f64,
    dx: f64,
    bc: Bc,
    sys: &MvSystem,
) -> (Vec<f64>, Vec<f64>) {
    let nx = rho.len();
    let r = ghost(rho, bc);
    let t = ghost(theta, bc);
    // per-interface upwind contributions (nx + 1 interfaces)
    let mut plus = vec![[0.0; 2]; nx + 1];
    let mut minus = vec![[0.0; 2]; nx + 1];
    for k in 0..=nx {
        let mean = PrimState::new(0.5 * (r[k] + r[k + 1]), 0.5 * (t[k] + t[k + 1]));
        let sp = sys.split_at(&mean);
        let du = [r[k + 1] - r[k], t[k + 1] - t[k]];
        for row in 0..2 {
            plus[k][row] = sp.plus[row][0] * du[0] + sp.plus[row][1] * du[1];
            minus[k][row] = sp.minus[row][0] * du[0] + sp.minus[row][1] * du[1];
        }
    }
    let lam = dt / dx;
    let mut rho2 = vec![0.0; nx];
    let mut th2 = vec![0.0; nx];
    for i in 0..nx {
        rho2[i] = rho[i] - lam * (plus[i][0] - minus[i + 1][0]);
        th2[i] = theta[i] - lam * (plus[i][1] - minus[i + 1][1]);
    }
    (rho2, th2)
}

/// Upwind scheme step.
pub fn step_upwind(grid: &MacroGrid, dt: f64) -> Result<MacroGrid, SchemeError> {
    let (rho, theta) = grid.rho_theta();
    let (rho2, th2) = upwind_update(&rho, &theta, dt, grid.dx, grid.bc, &grid.sys);
    grid.rebuild(rho2, th2)
}

/// Roe-type conservative scheme step on `(rho, ln|tan(theta/2)|)`.
///
/// The interface matrix is the conserved-variable flux Jacobian at the
/// arithmetic-mean state; its entries are even in the angle, so the mean of
/// the angle-magnitude variable suffices. The angle sign, which the
/// conserved pair cannot carry, follows an auxiliary field advanced by the
/// upwind scheme from the same input grid (a fresh predictor each step).
pub fn step_conservative(grid: &MacroGrid, dt: f64) -> Result<MacroGrid, SchemeError> {
    let sys = &grid.sys;
    let nx = grid.nx;
    let (rho, theta) = grid.rho_theta();
    let mut w = vec![0.0; nx];
    for i in 0..nx {
        w[i] = log_abs_tan_half(theta[i]);
        if !w[i].is_finite() {
            return Err(SchemeError::NumericalFailure {
                cell: i,
                what: format!(
                    "conserved angle variable undefined at axial flow (theta = {})",
                    theta[i]
                ),
            });
        }
    }
    let r = ghost(&rho, grid.bc);
    let wg = ghost(&w, grid.bc);
    let tg = ghost(&theta, grid.bc);

    // physical fluxes on extended cells
    let mut flux = vec![[0.0; 2]; nx + 2];
    for k in 0..nx + 2 {
        flux[k][0] = sys.a * r[k] * tg[k].cos();
        flux[k][1] = sys.b * log_abs_sin(tg[k]) - sys.lam * r[k].ln();
    }

    // interface fluxes with Roe dissipation
    let mut fhat = vec![[0.0; 2]; nx + 1];
    for k in 0..=nx {
        let rbar = 0.5 * (r[k] + r[k + 1]);
        let wbar = 0.5 * (wg[k] + wg[k + 1]);
        let tbar = theta_from_w(wbar);
        let m = sys.conserved_flux_jacobian(rbar, tbar);
        let sp = crate::system::split_generic(&m).ok_or_else(|| {
            SchemeError::NumericalFailure {
                cell: k.min(nx - 1),
                what: "interface flux Jacobian not diagonalizable".into(),
            }
        })?;
        let dv = [r[k + 1] - r[k], wg[k + 1] - wg[k]];
        for row in 0..2 {
            let diss = sp.abs[row][0] * dv[0] + sp.abs[row][1] * dv[1];
            fhat[k][row] = 0.5 * (flux[k][row] + flux[k + 1][row]) - 0.5 * diss;
        }
    }

    let lam = dt / grid.dx;
    let mut rho2 = vec![0.0; nx];
    let mut w2 = vec![0.0; nx];
    for i in 0..nx {
        rho2[i] = rho[i] - lam * (fhat[i + 1][0] - fhat[i][0]);
        w2[i] = w[i] - lam * (fhat[i + 1][1] - fhat[i][1]);
    }

    // angle sign from the upwind predictor on the same input grid
    let (_, theta_hat) = upwind_update(&rho, &theta, dt, grid.dx, grid.bc, sys);
    let mut th2 = vec![0.0; nx];
    for i in 0..nx {
        let mag = theta_from_w(w2[i]);
        if !mag.is_finite() {
            return Err(SchemeError::NumericalFailure {
                cell: i,
                what: format!("angle-magnitude inversion failed (w = {})", w2[i]),
            });
        }
        th2[i] = if theta_hat[i] < 0.0 { -mag } else { mag };
    }
    grid.rebuild(rho2, th2)
}

/// Semi-conservative scheme step: conservative mass flux, upwind angle.
pub fn step_semiconservative(grid: &MacroGrid, dt: f64) -> Result<MacroGrid, SchemeError> {
    let sys = &grid.sys;
    let nx = grid.nx;
    let (rho, theta) = grid.rho_theta();
    let r = ghost(&rho, grid.bc);
    let t = ghost(&theta, grid.bc);

    let mut hhat = vec![0.0; nx + 1]; // mass interface flux
    let mut plus2 = vec![0.0; nx + 1]; // angle row of A+ dU
    let mut minus2 = vec![0.0; nx + 1]; // angle row of A- dU
    for k in 0..=nx {
        let mean = PrimState::new(0.5 * (r[k] + r[k + 1]), 0.5 * (t[k] + t[k + 1]));
        let sp = sys.split_at(&mean);
        let du = [r[k + 1] - r[k], t[k + 1] - t[k]];
        let diss = sp.abs[0][0] * du[0] + sp.abs[0][1] * du[1];
        hhat[k] = sys.a * mean.rho * mean.theta.cos() - 0.5 * diss;
        plus2[k] = sp.plus[1][0] * du[0] + sp.plus[1][1] * du[1];
        minus2[k] = sp.minus[1][0] * du[0] + sp.minus[1][1] * du[1];
    }

    let lam = dt / grid.dx;
    let mut rho2 = vec![0.0; nx];
    let mut th2 = vec![0.0; nx];
    for i in 0..nx {
        rho2[i] = rho[i] - lam * (hhat[i + 1] - hhat[i]);
        th2[i] = theta[i] - lam * (plus2[i] - minus2[i + 1]);
    }
    grid.rebuild(rho2, th2)
}

/// Relaxation-splitting scheme step.
///
/// Substep 1 advances the conserved triple `q = (rho, rho cos, rho sin)`
/// with flux `(a q2, b q2^2/q1 + lam q1, b q2 q3 / q1)` using a Roe-type
/// linearization at arithmetic-mean states: eigenvalues `b u` and
/// `b u ± sqrt(Δ)` with `Δ = a lam - b(a-b) u^2` (positive for all `|u| <= 1`
/// — checked at every interface). Substep 2 projects the direction vector
/// back to unit length, the exact limit of the stiff relaxation source.
pub fn step_splitting(grid: &MacroGrid, dt: f64) -> Result<MacroGrid, SchemeError> {
    let sys = &grid.sys;
    let (a, b, lam_c) = (sys.a, sys.b, sys.lam);
    let nx = grid.nx;
    let (rho, theta) = grid.rho_theta();
    let mut q1 = vec![0.0; nx];
    let mut q2 = vec![0.0; nx];
    let mut q3 = vec![0.0; nx];
    for i in 0..nx {
        let (sin, cos) = theta[i].sin_cos();
        q1[i] = rho[i];
        q2[i] = rho[i] * cos;
        q3[i] = rho[i] * sin;
    }
    let g1 = ghost(&q1, grid.bc);
    let g2 = ghost(&q2, grid.bc);
    let g3 = ghost(&q3, grid.bc);

    // physical fluxes on extended cells
    let mut flux = vec![[0.0; 3]; nx + 2];
    for k in 0..nx + 2 {
        let u = g2[k] / g1[k];
        flux[k] = [
            a * g2[k],
            b * g2[k] * u + lam_c * g1[k],
            b * g3[k] * u,
        ];
    }

    let mut fhat = vec![[0.0; 3]; nx + 1];
    for k in 0..=nx {
        let qm = [
            0.5 * (g1[k] + g1[k + 1]),
            0.5 * (g2[k] + g2[k + 1]),
            0.5 * (g3[k] + g3[k + 1]),
        ];
        let u = qm[1] / qm[0];
        let v = qm[2] / qm[0];
        let delta = a * lam_c - b * (a - b) * u * u;
        if !(delta > 0.0) {
            return Err(SchemeError::HyperbolicityLost { interface: k, delta, u });
        }
        let sd = delta.sqrt();
        let gm = b * u - sd;
        let gp = b * u + sd;
        let g0 = b * u;
        let dq = [g1[k + 1] - g1[k], g2[k + 1] - g2[k], g3[k + 1] - g3[k]];
        // wave strengths: dq = alpha1 r- + alpha2 r+ + alpha3 r0 with
        // r± = (1, gamma±/a, b v (u - gamma±/a)/(b u - gamma±)), r0 = (0,0,1)
        let alpha2 = (a * dq[1] - gm * dq[0]) / (gp - gm);
        let alpha1 = dq[0] - alpha2;
        let rm3 = b * v * (u - gm / a) / (g0 - gm);
        let rp3 = b * v * (u - gp / a) / (g0 - gp);
        let alpha3 = dq[2] - rm3 * alpha1 - rp3 * alpha2;
        let dmax = crate::system::ENTROPY_FIX_FRACTION
            * gm.abs().max(gp.abs()).max(g0.abs());
        let am = crate::system::harten_abs(gm, dmax);
        let ap = crate::system::harten_abs(gp, dmax);
        let a0 = crate::system::harten_abs(g0, dmax);
        let diss = [
            am * alpha1 + ap * alpha2,
            (am * alpha1 * gm + ap * alpha2 * gp) / a,
            am * alpha1 * rm3 + ap * alpha2 * rp3 + a0 * alpha3,
        ];
        for c in 0..3 {
            fhat[k][c] = 0.5 * (flux[k][c] + flux[k + 1][c]) - 0.5 * diss[c];
        }
    }

    let lam = dt / grid.dx;
    let mut rho2 = vec![0.0; nx];
    let mut th2 = vec![0.0; nx];
    for i in 0..nx {
        let n1 = q1[i] - lam * (fhat[i + 1][0] - fhat[i][0]);
        let n2 = q2[i] - lam * (fhat[i + 1][1] - fhat[i][1]);
        let n3 = q3[i] - lam * (fhat[i + 1][2] - fhat[i][2]);
        if !(n1.is_finite() && n2.is_finite() && n3.is_finite()) {
            return Err(SchemeError::NumericalFailure {
                cell: i,
                what: "non-finite conservative substep".into(),
            });
        }
        if n1 <= RHO_FLOOR {
            return Err(SchemeError::PositivityLost { cell: i, rho: n1, floor: RHO_FLOOR });
        }
        // relaxation limit: rescale the direction vector to unit length
        let norm = n2.hypot(n3);
        if norm == 0.0 {
            return Err(SchemeError::NormalizationUndefined { cell: i });
        }
        let m2 = n1 * n2 / norm;
        let m3 = n1 * n3 / norm;
        let deviation = ((m2.hypot(m3) / n1) - 1.0).abs();
        if deviation > 1e-12 {
            return Err(SchemeError::UnitDirectionLost { cell: i, deviation });
        }
        rho2[i] = n1;
        th2[i] = m3.atan2(m2);
    }
    grid.rebuild(rho2, th2)
}

/// Advance one step of the chosen scheme.
pub fn step(grid: &MacroGrid, scheme: Scheme, dt: f64) -> Result<MacroGrid, SchemeError> {
    match scheme {
        Scheme::Conservative => step_conservative(grid, dt),
        Scheme::Splitting => step_splitting(grid, dt),
        Scheme::Upwind => step_upwind(grid, dt),
        Scheme::SemiConservative => step_semiconservative(grid, dt),
    }
}

/// Time-stepping configuration.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Keep a snapshot every this many steps (0 = final state only).
    pub snapshot_every: usize,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    /// Courant number of the step just taken (pre-step wave speeds).
    pub courant: f64,
    pub min_rho: f64,
    pub max_rho: f64,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// `(time, cells)` pairs, always including the final state.
    pub snapshots: Vec<(f64, Vec<PrimState>)>,
    pub final_grid: MacroGrid,
    pub diagnostics: Vec<StepDiagnostics>,
    pub max_courant: f64,
    pub warnings: Vec<String>,
}

/// Drive `grid` from `t = 0` to `config.t_end`.
///
/// The Courant number is monitored every step: above 1 a warning is recorded
/// (explicit schemes may still behave on smooth data), above 2 the run
/// aborts.
pub fn run(grid: MacroGrid, config: &SchemeConfig) -> Result<RunResult, SchemeError> {
    if !(config.dt > 0.0) {
        return Err(SchemeError::BadConfig(format!(
            "time step must be positive, got {}",
            config.dt
        )));
    }
    if !(config.t_end >= 0.0) {
        return Err(SchemeError::BadConfig(format!(
            "final time must be nonnegative, got {}",
            config.t_end
        )));
    }
    let nsteps = (config.t_end / config.dt).round() as usize;
    let mut g = grid;
    let mut snapshots = vec![(0.0, g.cells.clone())];
    let mut diagnostics = Vec::with_capacity(nsteps);
    let mut warnings = Vec::new();
    let mut max_courant: f64 = 0.0;
    let mut warned = false;
    for n in 0..nsteps {
        let courant = config.dt / g.dx * g.max_wave_speed();
        max_courant = max_courant.max(courant);
        if courant > 2.0 {
            return Err(SchemeError::CourantTooLarge { step: n, courant });
        }
        if courant > 1.0 && !warned {
            warnings.push(format!(
                "step {n}: Courant number {courant:.3} above 1; results may be unstable"
            ));
            warned = true;
        }
        g = step(&g, config.scheme, config.dt)?;
        let t = (n + 1) as f64 * config.dt;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &g.cells {
            lo = lo.min(s.rho);
            hi = hi.max(s.rho);
        }
        diagnostics.push(StepDiagnostics {
            step: n + 1,
            t,
            mass: g.mass(),
            courant,
            min_rho: lo,
            max_rho: hi,
        });
        if config.snapshot_every > 0 && (n + 1) % config.snapshot_every == 0 && n + 1 < nsteps {
            snapshots.push((t, g.cells.clone()));
        }
    }
    snapshots.push((nsteps as f64 * config.dt, g.cells.clone()));
    Ok(RunResult { snapshots, final_grid: g, diagnostics, max_courant, warnings })
}

/// L1 distance between two density profiles on the same grid.
pub fn l1_rho(a: &[PrimState], b: &[PrimState], dx: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.rho - q.rho).abs())
        .sum::<f64>()
        * dx
}
