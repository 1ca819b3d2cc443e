//! Thin command-line front end over the library. Every subcommand
//! delegates to a library function; see the crate documentation and the
//! `examples/` directory for the programmatic interface.

use clap::{Parser, Subcommand};
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vicsek_hydro::analysis::{uniform_radial_grid, vortex_residual_scaled};
use vicsek_hydro::coefficients::{
    make_coefficients, make_coefficients_with, DEFAULT_DX, DEFAULT_QUAD,
};
use vicsek_hydro::exact_riemann::solve_riemann;
use vicsek_hydro::macro_schemes::{run, MacroGrid, Scheme, SchemeConfig};
use vicsek_hydro::particle_sim::{
    ensemble_average, init_riemann, member_seed, run_micro, MicroRunConfig, Profile,
};
use vicsek_hydro::suite::{
    fan_csv, load_suite, parse_bc, profile_csv, run_suite, CompareArtifact,
    SuiteOptions, OUT_DIR_ENV,
};
use vicsek_hydro::system::PrimState;

#[derive(Parser)]
#[command(
    name = "vicsek-hydro",
    about = "Shock dynamics of a self-propelled alignment model: transport \
             coefficients, an exact Riemann solver, four finite-volume schemes, \
             the underlying particle model, and scenario suites.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the transport coefficients c1, c2, lambda over noise intensities
    Coeffs {
        /// single noise intensity
        #[arg(long, conflicts_with = "sweep")]
        d: Option<f64>,
        /// sweep "d0:d1:n" over n values from d0 to d1
        #[arg(long)]
        sweep: Option<String>,
        /// space the sweep geometrically instead of linearly
        #[arg(long)]
        log: bool,
        /// elliptic mesh width
        #[arg(long, default_value_t = DEFAULT_DX)]
        dx: f64,
        /// quadrature nodes
        #[arg(long, default_value_t = DEFAULT_QUAD)]
        quad: usize,
        /// output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one Riemann problem of the rescaled system and sample the fan
    Riemann {
        #[arg(long)]
        d: f64,
        /// left state as "rho,theta"
        #[arg(long)]
        left: String,
        /// right state as "rho,theta"
        #[arg(long)]
        right: String,
        /// similarity-coordinate samples
        #[arg(long, default_value_t = 401)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one finite-volume scheme on a Riemann problem
    Macro {
        /// cons | split | upwind | semi
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long = "T")]
        t_end: f64,
        #[arg(long, default_value_t = 20.0)]
        length: f64,
        /// neumann | periodic
        #[arg(long, default_value = "neumann")]
        bc: String,
        /// output file prefix
        #[arg(long, default_value = "macro")]
        out: String,
        /// write a profile every this many steps (0 = final only)
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
    },
    /// Run an ensemble of particle simulations on a Riemann initial condition
    Micro {
        /// particles per run
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        d: f64,
        /// time-scale separation
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// alignment radius
        #[arg(long = "R", default_value_t = 0.5)]
        radius: f64,
        #[arg(long = "Lx", default_value_t = 10.0)]
        lx: f64,
        #[arg(long = "Ly", default_value_t = 1.0)]
        ly: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long = "T")]
        t_end: f64,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 400)]
        bins: usize,
        #[arg(long, default_value_t = 1)]
        ensemble: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// output directory
        #[arg(long, default_value = "micro_out")]
        out: PathBuf,
        /// deposit a profile every this many steps (0 = final only)
        #[arg(long, default_value_t = 0)]
        snap_every: usize,
    },
    /// Compare a particle profile with a scheme profile (both CSV)
    Compare {
        /// particle profile: x,rho,theta[,circ_var]
        #[arg(long)]
        micro: PathBuf,
        /// scheme profile: x,rho,theta
        #[arg(long = "macro")]
        macro_profile: PathBuf,
        /// report path
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Check the stationary azimuthal vortex of the two-dimensional system
    Vortex {
        #[arg(long)]
        d: f64,
        /// density amplitude
        #[arg(long, default_value_t = 1.0)]
        c_amp: f64,
        /// coarsest radial resolution
        #[arg(long, default_value_t = 16)]
        nr: usize,
        /// coarsest angular resolution
        #[arg(long, default_value_t = 32)]
        ntheta: usize,
        /// refinement levels
        #[arg(long, default_value_t = 9)]
        levels: usize,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        #[arg(long, default_value_t = 2.0)]
        r1: f64,
    },
    /// Run a scenario suite and write the artifact tree plus report.json
    Run {
        /// suite file; "paper.suite" resolves to the built-in reference suite
        #[arg(long, default_value = "paper.suite")]
        suite: String,
        #[arg(long, default_value = "suite_out")]
        out: PathBuf,
        /// run only this scenario
        #[arg(long)]
        only: Option<String>,
        /// skip all particle ensembles
        #[arg(long)]
        skip_micro: bool,
        /// use full-scale particle counts and ensemble sizes
        #[arg(long)]
        paper_scale: bool,
        /// override every scenario's base seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Relative output paths land under `$VICSEK_HYDRO_OUT` when set.
fn resolve_out(p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) => PathBuf::from(root).join(p),
        None => p.to_path_buf(),
    }
}

fn parse_state(s: &str) -> Result<PrimState, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"rho,theta\", got {s:?}"));
    }
    let rho: f64 = parts[0].trim().parse().map_err(|e| format!("bad rho in {s:?}: {e}"))?;
    let theta: f64 = parts[1].trim().parse().map_err(|e| format!("bad theta in {s:?}: {e}"))?;
    Ok(PrimState::new(rho, theta))
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected \"d0:d1:n\", got {s:?}"));
    }
    let d0: f64 = parts[0].parse().map_err(|e| format!("bad d0: {e}"))?;
    let d1: f64 = parts[1].parse().map_err(|e| format!("bad d1: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
    if n < 2 {
        return Err("sweep needs at least 2 values".into());
    }
    Ok((d0, d1, n))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Box<dyn Error>> {
    match out {
        Some(p) => {
            let p = resolve_out(p);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Read a profile CSV leniently: `#` lines and non-numeric header lines are
/// skipped, columns are `x,rho,theta[,circ_var]`, and `NaN` round-trips.
fn read_profile(path: &Path) -> Result<Profile, Box<dyn Error>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut bin_centers = Vec::new();
    let mut rho = Vec::new();
    let mut theta_mean = Vec::new();
    let mut circ_var = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(format!("{}: need at least 3 columns, got {line:?}", path.display()).into());
        }
        let x: f64 = match fields[0].parse() {
            Ok(v) => v,
            Err(_) => continue, // header line
        };
        bin_centers.push(x);
        rho.push(fields[1].parse::<f64>()?);
        theta_mean.push(fields[2].parse::<f64>()?);
        circ_var.push(if fields.len() > 3 { fields[3].parse::<f64>()? } else { f64::NAN });
    }
    if bin_centers.is_empty() {
        return Err(format!("{}: no data rows", path.display()).into());
    }
    Ok(Profile { bin_centers, rho, theta_mean, circ_var, n_ensemble: 1 })
}

fn run_cli(cli: Cli) -> Result<u8, Box<dyn Error>> {
    match cli.command {
        Command::Coeffs { d, sweep, log, dx, quad, out } => {
            let ds: Vec<f64> = match (d, sweep) {
                (Some(d), None) => vec![d],
                (None, Some(s)) => {
                    let (d0, d1, n) = parse_sweep(&s)?;
                    (0..n)
                        .map(|i| {
                            let t = i as f64 / (n - 1) as f64;
                            if log {
                                d0 * (d1 / d0).powf(t)
                            } else {
                                d0 + (d1 - d0) * t
                            }
                        })
                        .collect()
                }
                _ => return Err("pass exactly one of --d or --sweep".into()),
            };
            let mut csv = String::from("d,c1,c2,lambda,c,lambda_r\n");
            for dv in ds {
                let c = make_coefficients_with(dv, dx, quad)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.d, c.c1, c.c2, c.lambda, c.c, c.lambda_r
                ));
            }
            emit(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Riemann { d, left, right, samples, out } => {
            let coeffs = make_coefficients(d)?;
            let l = parse_state(&left)?;
            let r = parse_state(&right)?;
            let fan = solve_riemann(&l, &r, &coeffs)?;
            let mut text = format!(
                "# middle state: rho={} theta={}\n# wave1: {:?}\n# wave2: {:?}\n",
                fan.middle.rho, fan.middle.theta, fan.wave1, fan.wave2
            );
            text.push_str(&fan_csv(&fan, samples)?);
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Macro {
            scheme,
            d,
            left,
            right,
            nx,
            dt,
            t_end,
            length,
            bc,
            out,
            snapshot_every,
        } => {
            let coeffs = make_coefficients(d)?;
            let sch = Scheme::from_tag(&scheme)
                .ok_or_else(|| format!("unknown scheme {scheme:?}"))?;
            let bcv = parse_bc(&bc).ok_or_else(|| format!("unknown bc {bc:?}"))?;
            let grid =
                MacroGrid::riemann_init(nx, length, parse_state(&left)?, parse_state(&right)?, bcv, coeffs)?;
            let cfg = SchemeConfig { scheme: sch, dt, t_end, snapshot_every };
            let res = run(grid, &cfg)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            let dxv = length / nx as f64;
            for (t, cells) in &res.snapshots {
                let prof = Profile {
                    bin_centers: (0..nx).map(|i| (i as f64 + 0.5) * dxv).collect(),
                    rho: cells.iter().map(|s| s.rho).collect(),
                    theta_mean: cells.iter().map(|s| s.theta).collect(),
                    circ_var: vec![f64::NAN; nx],
                    n_ensemble: 1,
                };
                emit(Some(Path::new(&format!("{out}_t{t:.4}.csv"))), &profile_csv(&prof, false))?;
            }
            let mut diag = String::from("step,t,mass,courant,min_rho\n");
            for l in &res.diagnostics {
                diag.push_str(&format!(
                    "{},{},{},{},{}\n",
                    l.step, l.t, l.mass, l.courant, l.min_rho
                ));
            }
            emit(Some(Path::new(&format!("{out}_diagnostics.csv"))), &diag)?;
            eprintln!(
                "final profile in {out}_t{:.4}.csv (max Courant {:.3})",
                res.snapshots.last().map(|s| s.0).unwrap_or(t_end),
                res.max_courant
            );
            Ok(0)
        }
        Command::Micro {
            n,
            d,
            eps,
            radius,
            lx,
            ly,
            dt,
            t_end,
            left,
            right,
            bins,
            ensemble,
            seed,
            out,
            snap_every,
        } => {
            if ensemble == 0 {
                return Err("ensemble size must be positive".into());
            }
            let l = parse_state(&left)?;
            let r = parse_state(&right)?;
            let cfg = MicroRunConfig { dt, t_end, snapshot_every: snap_every, nbins: bins };
            let mut snapshot_sets: Vec<(f64, Vec<Profile>)> = Vec::new();
            let mut phi_mean: Vec<(f64, f64)> = Vec::new();
            for member in 0..ensemble {
                let ens = init_riemann(n, l, r, lx, ly, radius, d, eps, member_seed(seed, member as u64))?;
                let res = run_micro(ens, &cfg)?;
                if member == 0 {
                    phi_mean = res.phi.clone();
                    snapshot_sets = res
                        .profiles
                        .into_iter()
                        .map(|(t, p)| (t, vec![p]))
                        .collect();
                } else {
                    for (acc, new) in phi_mean.iter_mut().zip(&res.phi) {
                        acc.1 += new.1;
                    }
                    for (slot, (_, p)) in snapshot_sets.iter_mut().zip(res.profiles) {
                        slot.1.push(p);
                    }
                }
                eprintln!("member {member} done");
            }
            for acc in &mut phi_mean {
                acc.1 /= ensemble as f64;
            }
            let outdir = resolve_out(&out);
            fs::create_dir_all(&outdir)?;
            for (t, profs) in &snapshot_sets {
                let avg = ensemble_average(profs)?;
                let name = if (*t - t_end).abs() < 1e-12 {
                    "micro_profile.csv".to_string()
                } else {
                    format!("micro_t{t:.4}.csv")
                };
                fs::write(outdir.join(&name), profile_csv(&avg, true))?;
            }
            let mut phi_csv = String::from("t,phi_N\n");
            for (t, phi) in &phi_mean {
                phi_csv.push_str(&format!("{t},{phi}\n"));
            }
            fs::write(outdir.join("order_param.csv"), phi_csv)?;
            eprintln!("wrote {}", outdir.display());
            Ok(0)
        }
        Command::Compare { micro, macro_profile, out } => {
            let mp = read_profile(&micro)?;
            let gp = read_profile(&macro_profile)?;
            let rep = vicsek_hydro::analysis::compare_profiles(&mp, &gp)?;
            let artifact: CompareArtifact = rep.into();
            let json = serde_json::to_string_pretty(&artifact)? + "\n";
            emit(Some(&out), &json)?;
            println!(
                "L1(rho) = {}  L1(theta) = {}  shock micro = {:?}  shock macro = {:?}",
                artifact.l1_rho, artifact.l1_theta, artifact.shock_micro, artifact.shock_macro
            );
            Ok(0)
        }
        Command::Vortex { d, c_amp, nr, ntheta, levels, r0, r1 } => {
            let coeffs = make_coefficients(d)?;
            println!("level,nr,ntheta,residual,order");
            let mut prev: Option<f64> = None;
            let mut last = f64::NAN;
            for lev in 0..levels.max(1) {
                let f = 1usize << lev;
                let grid = uniform_radial_grid(r0, r1, nr * f + 1);
                let res = vortex_residual_scaled(c_amp, &coeffs, &grid, ntheta * f, 1.0)?;
                let order = prev.map(|p| (p / res).log2());
                match order {
                    Some(o) => println!("{lev},{},{},{res},{o:.3}", nr * f + 1, ntheta * f),
                    None => println!("{lev},{},{},{res},", nr * f + 1, ntheta * f),
                }
                prev = Some(res);
                last = res;
            }
            let grid = uniform_radial_grid(r0, r1, nr * (1 << (levels.max(1) - 1)) + 1);
            let control =
                vortex_residual_scaled(c_amp, &coeffs, &grid, ntheta * (1 << (levels.max(1) - 1)), 1.1)?;
            println!("# control (wrong density exponent): residual {control}");
            if last < 1e-6 && control > 100.0 * last {
                println!("# verdict: stationary to {last:.3e}; control fails as expected");
                Ok(0)
            } else {
                println!("# verdict: NOT confirmed (residual {last:.3e}, control {control:.3e})");
                Ok(1)
            }
        }
        Command::Run { suite, out, only, skip_micro, paper_scale, seed } => {
            let scenarios = load_suite(&suite)?;
            let opts = SuiteOptions { only, skip_micro, paper_scale, seed };
            let outdir = resolve_out(&out);
            let rep = run_suite(&scenarios, &suite, &outdir, &opts)?;
            for sc in &rep.scenarios {
                match &sc.error {
                    Some(e) => println!("{:<12} {}  ({e})", sc.name, sc.status),
                    None => println!("{:<12} {}", sc.name, sc.status),
                }
            }
            println!("report: {}", outdir.join("report.json").display());
            Ok(if rep.failed > 0 { 1 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
