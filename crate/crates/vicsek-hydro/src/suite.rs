//! Scenario suites: strict TOML configuration, a built-in reference
//! matrix, and the orchestration that turns a suite into a deterministic
//! artifact tree (CSV profiles, diagnostics, and a JSON summary with
//! comparison verdicts).

use crate::analysis::{compare_profiles, locate_shock, ComparisonReport};
use crate::coefficients::make_coefficients;
use crate::exact_riemann::{solve_riemann, Wave, WaveFan};
use crate::macro_schemes::{run, Bc, MacroGrid, Scheme, SchemeConfig};
use crate::particle_sim::{
    ensemble_average, init_riemann, member_seed, run_micro, MicroRunConfig, Profile,
};
use crate::system::PrimState;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Name under which the embedded reference suite is always resolvable.
pub const BUILTIN_SUITE_NAME: &str = "paper.suite";

/// The embedded reference suite (also shipped as `suites/paper.suite`).
pub const BUILTIN_SUITE: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../suites/paper.suite"));

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "VICSEK_HYDRO_OUT";

/// Errors from suite loading and orchestration.
#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}:\n{message}")]
    Parse { path: PathBuf, message: String },
    #[error("scenario {name}: {message}")]
    Scenario { name: String, message: String },
    #[error("duplicate scenario name {0:?}")]
    DuplicateName(String),
    #[error("no scenario named {0:?} in the suite")]
    UnknownScenario(String),
}

/// Top-level structure of a suite file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    #[serde(default)]
    pub scenario: Vec<Scenario>,
}

/// A constant state of the initial jump.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub rho: f64,
    pub theta: f64,
}

/// Finite-volume settings of a scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub dt: f64,
    pub bc: String,
    pub schemes: Vec<String>,
}

/// Particle-ensemble settings of a scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    /// particles per run at desk scale
    pub n: usize,
    /// independent runs averaged at desk scale
    pub ensemble: usize,
    /// replacement for `n` under `--paper-scale`
    #[serde(default)]
    pub paper_n: Option<usize>,
    /// replacement for `ensemble` under `--paper-scale`
    #[serde(default)]
    pub paper_ensemble: Option<usize>,
    pub eps: f64,
    pub radius: f64,
    pub ly: f64,
    pub dt: f64,
    /// micro end time; defaults to the scenario `t_end`
    #[serde(default)]
    pub t_end: Option<f64>,
    pub bins: usize,
}

/// One validated scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub d: f64,
    pub left: StateConfig,
    pub right: StateConfig,
    pub length: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub particles: Option<ParticleConfig>,
}

/// Parse a boundary-condition name.
pub fn parse_bc(s: &str) -> Option<Bc> {
    match s {
        "neumann" => Some(Bc::NeumannHomogeneous),
        "periodic" => Some(Bc::Periodic),
        _ => None,
    }
}

fn validate(scenarios: &[Scenario]) -> Result<(), SuiteError> {
    let mut seen = std::collections::BTreeSet::new();
    for sc in scenarios {
        if !seen.insert(sc.name.clone()) {
            return Err(SuiteError::DuplicateName(sc.name.clone()));
        }
        let fail = |message: String| SuiteError::Scenario { name: sc.name.clone(), message };
        if !(sc.d > 0.0) {
            return Err(fail(format!("noise intensity must be positive, got {}", sc.d)));
        }
        if !(sc.length > 0.0) {
            return Err(fail(format!("domain length must be positive, got {}", sc.length)));
        }
        if !(sc.t_end >= 0.0) {
            return Err(fail(format!("end time must be nonnegative, got {}", sc.t_end)));
        }
        if !(sc.left.rho > 0.0 && sc.right.rho > 0.0) {
            return Err(fail("densities must be positive".into()));
        }
        if sc.grid.nx < 4 {
            return Err(fail(format!("need at least 4 cells, got {}", sc.grid.nx)));
        }
        if !(sc.grid.dt > 0.0) {
            return Err(fail(format!("time step must be positive, got {}", sc.grid.dt)));
        }
        if parse_bc(&sc.grid.bc).is_none() {
            return Err(fail(format!(
                "unknown boundary condition {:?} (expected \"neumann\" or \"periodic\")",
                sc.grid.bc
            )));
        }
        if sc.grid.schemes.is_empty() {
            return Err(fail("at least one scheme is required".into()));
        }
        for tag in &sc.grid.schemes {
            if Scheme::from_tag(tag).is_none() {
                return Err(fail(format!("unknown scheme tag {tag:?}")));
            }
        }
        if let Some(pc) = &sc.particles {
            if pc.n == 0 || pc.ensemble == 0 {
                return Err(fail("particle count and ensemble size must be positive".into()));
            }
            if pc.bins < 4 {
                return Err(fail(format!("need at least 4 deposition bins, got {}", pc.bins)));
            }
            if !(pc.dt > 0.0 && pc.eps > 0.0 && pc.radius > 0.0 && pc.ly > 0.0) {
                return Err(fail("particle dt, eps, radius, and ly must be positive".into()));
            }
        }
    }
    Ok(())
}

/// Load a suite from a TOML file; the name `paper.suite` falls back to the
/// embedded reference suite when no such file exists on disk. Unknown keys
/// are parse errors, and the error message carries the offending location.
pub fn load_suite(path: &str) -> Result<Vec<Scenario>, SuiteError> {
    let p = Path::new(path);
    let text = if p.exists() {
        fs::read_to_string(p).map_err(|source| SuiteError::Io { path: p.into(), source })?
    } else if path == BUILTIN_SUITE_NAME {
        BUILTIN_SUITE.to_string()
    } else {
        return Err(SuiteError::Io {
            path: p.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    };
    let file: SuiteFile = toml::from_str(&text)
        .map_err(|e| SuiteError::Parse { path: p.into(), message: e.to_string() })?;
    validate(&file.scenario)?;
    Ok(file.scenario)
}

/// Execution switches of [`run_suite`].
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// run only the scenario with this name
    pub only: Option<String>,
    /// skip all particle ensembles
    pub skip_micro: bool,
    /// use the `paper_n` / `paper_ensemble` particle settings
    pub paper_scale: bool,
    /// override every scenario's base seed
    pub seed: Option<u64>,
}

/// Yes/no summary judgments of a micro/macro comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    /// a shock was located in both profiles
    pub shock_in_both: bool,
    /// when both shocks exist: positions within half a space unit
    pub shock_positions_close: Option<bool>,
    /// no bins had to be excluded from the angular distance
    pub theta_fully_comparable: bool,
}

/// The documented comparison-report schema (written by `compare` and for
/// every scheme of a suite scenario with particle runs).
#[derive(Debug, Clone, Serialize)]
pub struct CompareArtifact {
    pub l1_rho: f64,
    pub l1_theta: f64,
    pub shock_micro: Option<f64>,
    pub shock_macro: Option<f64>,
    pub verdicts: Verdicts,
    pub notes: Vec<String>,
}

impl From<ComparisonReport> for CompareArtifact {
    fn from(rep: ComparisonReport) -> Self {
        let shock_positions_close = match (rep.shock_micro, rep.shock_macro) {
            (Some(a), Some(b)) => Some((a - b).abs() <= 0.5),
            _ => None,
        };
        CompareArtifact {
            l1_rho: rep.l1_rho,
            l1_theta: rep.l1_theta,
            shock_micro: rep.shock_micro,
            shock_macro: rep.shock_macro,
            verdicts: Verdicts {
                shock_in_both: rep.shock_micro.is_some() && rep.shock_macro.is_some(),
                shock_positions_close,
                theta_fully_comparable: rep.notes.is_empty(),
            },
            notes: rep.notes,
        }
    }
}

/// Wave-fan summary recorded in the scenario report.
#[derive(Debug, Clone, Serialize)]
pub struct ExactSummary {
    pub middle_rho: f64,
    pub middle_theta: f64,
    pub wave1: String,
    pub wave2: String,
}

fn wave_label(w: &Wave) -> String {
    match *w {
        Wave::Shock { speed } => format!("shock speed={speed}"),
        Wave::Rarefaction { head, tail, degenerate } => {
            if degenerate {
                format!("degenerate rarefaction head={head} tail={tail}")
            } else {
                format!("rarefaction head={head} tail={tail}")
            }
        }
    }
}

/// Outcome of one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    /// "ok" or "failed"
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactSummary>,
    /// refined shock position of each scheme's final profile
    pub shock_macro: BTreeMap<String, Option<f64>>,
    /// shock position of the ensemble-averaged particle profile
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_micro: Option<f64>,
    /// micro-vs-scheme comparison per scheme tag
    pub comparisons: BTreeMap<String, CompareArtifact>,
}

/// Outcome of a whole suite run.
#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub paper_scale: bool,
    pub micro_included: bool,
    pub failed: usize,
    pub scenarios: Vec<ScenarioReport>,
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("mkdir {}: {e}", parent.display()))?;
    }
    let mut f = fs::File::create(path).map_err(|e| format!("create {}: {e}", path.display()))?;
    f.write_all(content.as_bytes())
        .map_err(|e| format!("write {}: {e}", path.display()))
}

/// Serialize a profile as `x,rho,theta[,circ_var]` CSV text.
pub fn profile_csv(p: &Profile, with_circ_var: bool) -> String {
    let mut out = String::new();
    if with_circ_var {
        out.push_str("x,rho,theta,circ_var\n");
    } else {
        out.push_str("x,rho,theta\n");
    }
    for j in 0..p.bin_centers.len() {
        if with_circ_var {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.bin_centers[j], p.rho[j], p.theta_mean[j], p.circ_var[j]
            ));
        } else {
            out.push_str(&format!(
                "{},{},{}\n",
                p.bin_centers[j], p.rho[j], p.theta_mean[j]
            ));
        }
    }
    out
}

/// View a finite-volume grid state as a profile on cell centers.
pub fn grid_profile(grid: &MacroGrid) -> Profile {
    let nx = grid.nx;
    Profile {
        bin_centers: (0..nx).map(|i| grid.x_center(i)).collect(),
        rho: grid.cells.iter().map(|s| s.rho).collect(),
        theta_mean: grid.cells.iter().map(|s| s.theta).collect(),
        circ_var: vec![f64::NAN; nx],
        n_ensemble: 1,
    }
}

/// Sample a wave fan on `samples` equispaced similarity coordinates
/// covering the fan with 20% padding, as `xi,rho,theta` CSV text.
pub fn fan_csv(fan: &WaveFan, samples: usize) -> Result<String, String> {
    let (lo, hi) = fan.speed_bounds();
    let pad = 0.2 * (hi - lo).max(1.0);
    let (a, b) = (lo - pad, hi + pad);
    let mut out = String::from("xi,rho,theta\n");
    for i in 0..samples.max(2) {
        let xi = a + (b - a) * i as f64 / (samples.max(2) - 1) as f64;
        let s = fan.sample(xi).map_err(|e| format!("sampling fan at xi={xi}: {e}"))?;
        out.push_str(&format!("{},{},{}\n", xi, s.rho, s.theta));
    }
    Ok(out)
}

struct ScenarioInputs<'a> {
    sc: &'a Scenario,
    opts: &'a SuiteOptions,
    dir: PathBuf,
}

fn run_scenario(inp: ScenarioInputs<'_>) -> Result<ScenarioReport, String> {
    let sc = inp.sc;
    let opts = inp.opts;
    let mut warnings = Vec::new();
    let mut report = ScenarioReport {
        name: sc.name.clone(),
        status: "ok".into(),
        error: None,
        warnings: Vec::new(),
        exact: None,
        shock_macro: BTreeMap::new(),
        shock_micro: None,
        comparisons: BTreeMap::new(),
    };

    let coeffs = make_coefficients(sc.d).map_err(|e| format!("coefficients: {e}"))?;
    let left = PrimState::new(sc.left.rho, sc.left.theta);
    let right = PrimState::new(sc.right.rho, sc.right.theta);
    let bc = parse_bc(&sc.grid.bc).ok_or("unreachable: bc validated at load")?;

    // exact solver (not every jump admits a two-wave fan; record and move on)
    match solve_riemann(&left, &right, &coeffs) {
        Ok(fan) => {
            match fan_csv(&fan, 401) {
                Ok(csv) => write_file(&inp.dir.join("exact_fan.csv"), &csv)?,
                Err(e) => warnings.push(e),
            }
            let txt = format!(
                "left:   rho={} theta={}\nwave1:  {}\nmiddle: rho={} theta={}\nwave2:  {}\nright:  rho={} theta={}\n",
                fan.left.rho,
                fan.left.theta,
                wave_label(&fan.wave1),
                fan.middle.rho,
                fan.middle.theta,
                wave_label(&fan.wave2),
                fan.right.rho,
                fan.right.theta,
            );
            write_file(&inp.dir.join("waves.txt"), &txt)?;
            report.exact = Some(ExactSummary {
                middle_rho: fan.middle.rho,
                middle_theta: fan.middle.theta,
                wave1: wave_label(&fan.wave1),
                wave2: wave_label(&fan.wave2),
            });
        }
        Err(e) => warnings.push(format!("exact solver: {e}")),
    }

    // finite-volume schemes
    let mut scheme_profiles: Vec<(String, Profile)> = Vec::new();
    for tag in &sc.grid.schemes {
        let scheme = Scheme::from_tag(tag).ok_or("unreachable: scheme validated at load")?;
        let tag = scheme.tag().to_string();
        let grid = MacroGrid::riemann_init(sc.grid.nx, sc.length, left, right, bc, coeffs)
            .map_err(|e| format!("{tag}: init: {e}"))?;
        let cfg = SchemeConfig { scheme, dt: sc.grid.dt, t_end: sc.t_end, snapshot_every: 0 };
        let res = run(grid, &cfg).map_err(|e| format!("{tag}: {e}"))?;
        for w in &res.warnings {
            warnings.push(format!("{tag}: {w}"));
        }
        let prof = grid_profile(&res.final_grid);
        write_file(&inp.dir.join(format!("{tag}_final.csv")), &profile_csv(&prof, false))?;
        let mut diag = String::from("step,t,mass,courant,min_rho\n");
        for dline in &res.diagnostics {
            diag.push_str(&format!(
                "{},{},{},{},{}\n",
                dline.step, dline.t, dline.mass, dline.courant, dline.min_rho
            ));
        }
        write_file(&inp.dir.join(format!("{tag}_diagnostics.csv")), &diag)?;
        report
            .shock_macro
            .insert(tag.clone(), locate_shock(&prof.bin_centers, &prof.rho));
        scheme_profiles.push((tag, prof));
    }

    // particle ensemble
    if let (Some(pc), false) = (&sc.particles, opts.skip_micro) {
        let (n, members) = if opts.paper_scale {
            (pc.paper_n.unwrap_or(pc.n), pc.paper_ensemble.unwrap_or(pc.ensemble))
        } else {
            (pc.n, pc.ensemble)
        };
        let base_seed = opts.seed.unwrap_or(sc.seed);
        let mcfg = MicroRunConfig {
            dt: pc.dt,
            t_end: pc.t_end.unwrap_or(sc.t_end),
            snapshot_every: 0,
            nbins: pc.bins,
        };
        let mut finals = Vec::with_capacity(members);
        let mut phi_mean: Vec<(f64, f64)> = Vec::new();
        for member in 0..members {
            let ens = init_riemann(
                n,
                left,
                right,
                sc.length,
                pc.ly,
                pc.radius,
                sc.d,
                pc.eps,
                member_seed(base_seed, member as u64),
            )
            .map_err(|e| format!("particles: member {member}: {e}"))?;
            let out = run_micro(ens, &mcfg)
                .map_err(|e| format!("particles: member {member}: {e}"))?;
            if member == 0 {
                phi_mean = out.phi.clone();
            } else {
                for (acc, new) in phi_mean.iter_mut().zip(&out.phi) {
                    acc.1 += new.1;
                }
            }
            finals.push(out.profiles.last().expect("run_micro always yields a final").1.clone());
        }
        for acc in &mut phi_mean {
            acc.1 /= members as f64;
        }
        let avg = ensemble_average(&finals).map_err(|e| format!("particles: {e}"))?;
        write_file(&inp.dir.join("micro_profile.csv"), &profile_csv(&avg, true))?;
        let mut phi_csv = String::from("t,phi_N\n");
        for (t, phi) in &phi_mean {
            phi_csv.push_str(&format!("{t},{phi}\n"));
        }
        write_file(&inp.dir.join("order_param.csv"), &phi_csv)?;
        report.shock_micro = locate_shock(&avg.bin_centers, &avg.rho);

        for (tag, prof) in &scheme_profiles {
            match compare_profiles(&avg, prof) {
                Ok(rep) => {
                    report.comparisons.insert(tag.clone(), rep.into());
                }
                Err(e) => warnings.push(format!("compare micro vs {tag}: {e}")),
            }
        }
    }

    report.warnings = warnings;
    Ok(report)
}

/// Run every scenario of a suite (optionally restricted by
/// [`SuiteOptions::only`]), writing the artifact tree under `outdir` and a
/// machine-readable `report.json` at its root. Per-scenario failures are
/// isolated: the suite continues and the failure is recorded in the report
/// (`failed` counts them). Deterministic given the seeds.
pub fn run_suite(
    scenarios: &[Scenario],
    suite_name: &str,
    outdir: &Path,
    opts: &SuiteOptions,
) -> Result<SuiteReport, SuiteError> {
    if let Some(only) = &opts.only {
        if !scenarios.iter().any(|s| &s.name == only) {
            return Err(SuiteError::UnknownScenario(only.clone()));
        }
    }
    let mut report = SuiteReport {
        suite: suite_name.to_string(),
        paper_scale: opts.paper_scale,
        micro_included: !opts.skip_micro,
        failed: 0,
        scenarios: Vec::new(),
    };
    for sc in scenarios {
        if let Some(only) = &opts.only {
            if &sc.name != only {
                continue;
            }
        }
        let dir = outdir.join(&sc.name);
        fs::create_dir_all(&dir)
            .map_err(|source| SuiteError::Io { path: dir.clone(), source })?;
        match run_scenario(ScenarioInputs { sc, opts, dir }) {
            Ok(r) => report.scenarios.push(r),
            Err(message) => {
                report.failed += 1;
                report.scenarios.push(ScenarioReport {
                    name: sc.name.clone(),
                    status: "failed".into(),
                    error: Some(message),
                    warnings: Vec::new(),
                    exact: None,
                    shock_macro: BTreeMap::new(),
                    shock_micro: None,
                    comparisons: BTreeMap::new(),
                });
            }
        }
    }
    let json = serde_json::to_string_pretty(&report)
        .expect("suite report serializes") + "\n";
    let path = outdir.join("report.json");
    write_file(&path, &json).map_err(|message| SuiteError::Scenario {
        name: "report.json".into(),
        message,
    })?;
    Ok(report)
}
