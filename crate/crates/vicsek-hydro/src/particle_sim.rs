//! Direct simulation of the microscopic alignment dynamics: point particles
//! with unit-speed headings, neighbor alignment within a fixed radius under
//! periodic wrap, an implicit geometric angle update, and Brownian heading
//! noise, all expressed in macroscopic time units (drift and noise carry a
//! `1/eps` acceleration so trajectories compare directly with the continuum
//! solver).
//!
//! Determinism contract: heading noise is counter-based — one ChaCha8
//! stream per particle, with the word position derived from the step index —
//! so trajectories are bitwise reproducible for a given seed regardless of
//! how the per-particle loop is scheduled across threads.

use crate::analysis::{AnalysisError, VonMises};
use crate::system::{normalize_angle, PrimState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Errors from ensemble construction and stepping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParticleError {
    #[error("ensemble must contain at least one particle")]
    EmptyEnsemble,
    #[error("domain sides must be positive, got ({lx}, {ly})")]
    BadDomain { lx: f64, ly: f64 },
    #[error("interaction radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error(
        "interaction radius {radius} exceeds half the shortest side {limit}; \
         the minimum-image metric would miss neighbors"
    )]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("noise intensity must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("scale separation eps must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("position step must be nonnegative, got {0}")]
    NegativeDt(f64),
    #[error("need at least 4 bins, got {0}")]
    TooFewBins(usize),
    #[error("positions ({x}) and headings ({theta}) differ in length")]
    MismatchedLengths { x: usize, theta: usize },
    #[error("profiles use different binning")]
    ProfileBinningMismatch,
    #[error("no profiles to average")]
    NoProfiles,
    #[error("heading sampler: {0}")]
    Sampling(#[from] AnalysisError),
}

/// A periodic 2D ensemble of self-propelled particles.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    /// positions in `[0, lx) x [0, ly)`
    pub x: Vec<[f64; 2]>,
    /// heading angles in `(-pi, pi]` (the direction vector has unit length
    /// by construction)
    pub theta: Vec<f64>,
    pub lx: f64,
    pub ly: f64,
    /// interaction radius
    pub radius: f64,
    /// heading noise intensity
    pub d: f64,
    /// micro/macro scale separation
    pub eps: f64,
    /// base seed of the counter-based noise streams
    pub seed: u64,
    /// number of angle updates taken so far (indexes the noise streams)
    pub step_index: u64,
    /// total macroscopic mass the particles represent (fixes the deposition
    /// scale so binned densities land in continuum units)
    pub macro_mass: f64,
}

impl ParticleEnsemble {
    /// Validate and wrap a raw ensemble.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: Vec<[f64; 2]>,
        theta: Vec<f64>,
        lx: f64,
        ly: f64,
        radius: f64,
        d: f64,
        eps: f64,
        seed: u64,
    ) -> Result<Self, ParticleError> {
        if x.is_empty() {
            return Err(ParticleError::EmptyEnsemble);
        }
        if x.len() != theta.len() {
            return Err(ParticleError::MismatchedLengths { x: x.len(), theta: theta.len() });
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(ParticleError::BadDomain { lx, ly });
        }
        if !(radius > 0.0) {
            return Err(ParticleError::NonPositiveRadius(radius));
        }
        let limit = 0.5 * lx.min(ly);
        if radius > limit {
            return Err(ParticleError::RadiusTooLarge { radius, limit });
        }
        if !(d >= 0.0) {
            return Err(ParticleError::NegativeNoise(d));
        }
        if !(eps > 0.0) {
            return Err(ParticleError::NonPositiveEps(eps));
        }
        let x = x
            .into_iter()
            .map(|p| [p[0].rem_euclid(lx), p[1].rem_euclid(ly)])
            .collect();
        let theta = theta.into_iter().map(normalize_angle).collect();
        Ok(Self {
            x,
            theta,
            lx,
            ly,
            radius,
            d,
            eps,
            seed,
            step_index: 0,
            macro_mass: lx * ly,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Unit heading vector of particle `k`.
    pub fn omega(&self, k: usize) -> [f64; 2] {
        let (s, c) = self.theta[k].sin_cos();
        [c, s]
    }
}

/// Derive the seed of ensemble member `member` from a base seed
/// (SplitMix64 finalizer; avoids correlated streams between members).
pub fn member_seed(base: u64, member: u64) -> u64 {
    let mut z = base.wrapping_add(member.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id reserved for initial-condition sampling (particle streams use
/// the particle index, which can never reach this value).
const INIT_STREAM: u64 = u64::MAX;

/// One standard-normal draw from the counter-based stream of `particle` at
/// `step` (Box–Muller on two uniforms; fixed consumption per counter).
fn standard_normal(seed: u64, particle: u64, step: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle);
    rng.set_word_pos((step as u128) << 5);
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Lane count of the in-ball accumulation kernel. Every implementation
/// tier groups candidates into eights the same way, which keeps their
/// floating-point results bitwise identical.
const ACC_LANES: usize = 8;

/// Query geometry of one in-ball sum.
#[derive(Clone, Copy)]
struct BallGeom {
    px: f64,
    py: f64,
    lx: f64,
    ly: f64,
    half_lx: f64,
    half_ly: f64,
    r2: f64,
}

impl BallGeom {
    fn new(ens: &ParticleEnsemble, p: &[f64; 2]) -> Self {
        BallGeom {
            px: p[0],
            py: p[1],
            lx: ens.lx,
            ly: ens.ly,
            half_lx: 0.5 * ens.lx,
            half_ly: 0.5 * ens.ly,
            r2: ens.radius * ens.radius,
        }
    }

    /// Minimum-image test used by every kernel tier: a raw separation in
    /// `(-L, L)` is folded by one comparison per side, and only the squared
    /// distance matters (at exactly `L/2` both images square identically).
    #[inline(always)]
    fn within(&self, x: f64, y: f64) -> bool {
        let mut dx = x - self.px;
        dx -= if dx > self.half_lx { self.lx } else { 0.0 };
        dx += if dx < -self.half_lx { self.lx } else { 0.0 };
        let mut dy = y - self.py;
        dy -= if dy > self.half_ly { self.ly } else { 0.0 };
        dy += if dy < -self.half_ly { self.ly } else { 0.0 };
        dx * dx + dy * dy <= self.r2
    }
}

/// Fixed lane-combination tree shared by every kernel tier.
#[inline]
fn combine_lanes(a: &[f64; ACC_LANES]) -> f64 {
    ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]))
}

/// Add `cw[i]` / `sw[i]` into the lane accumulators for every candidate `i`
/// within the query ball. Candidates are processed in chunks of
/// [`ACC_LANES`] (element `i` of a chunk feeds lane `i`), the tail goes
/// through lane 0 in index order — identically in every tier, so the
/// scalar and SIMD paths agree bitwise (the SIMD tiers use only
/// mask/multiply/add operations with the same per-operation rounding, and
/// never fuse).
fn accumulate_masked(
    xs: &[f64],
    ys: &[f64],
    cw: &[f64],
    sw: &[f64],
    geom: &BallGeom,
    axs: &mut [f64; ACC_LANES],
    ays: &mut [f64; ACC_LANES],
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the avx512f feature was just verified at runtime.
            unsafe { accumulate_masked_avx512(xs, ys, cw, sw, geom, axs, ays) };
            return;
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the avx2 feature was just verified at runtime.
            unsafe { accumulate_masked_avx2(xs, ys, cw, sw, geom, axs, ays) };
            return;
        }
    }
    accumulate_masked_scalar(xs, ys, cw, sw, geom, axs, ays);
}

fn accumulate_masked_scalar(
    xs: &[f64],
    ys: &[f64],
    cw: &[f64],
    sw: &[f64],
    geom: &BallGeom,
    axs: &mut [f64; ACC_LANES],
    ays: &mut [f64; ACC_LANES],
) {
    let n = xs.len();
    let main = n - n % ACC_LANES;
    let mut i = 0;
    while i < main {
        for l in 0..ACC_LANES {
            let w = geom.within(xs[i + l], ys[i + l]);
            axs[l] += if w { cw[i + l] } else { 0.0 };
            ays[l] += if w { sw[i + l] } else { 0.0 };
        }
        i += ACC_LANES;
    }
    for l in main..n {
        let w = geom.within(xs[l], ys[l]);
        axs[0] += if w { cw[l] } else { 0.0 };
        ays[0] += if w { sw[l] } else { 0.0 };
    }
}

/// AVX2 tier: two 256-bit halves per chunk of eight, lanes 0-3 and 4-7.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_masked_avx2(
    xs: &[f64],
    ys: &[f64],
    cw: &[f64],
    sw: &[f64],
    geom: &BallGeom,
    axs: &mut [f64; ACC_LANES],
    ays: &mut [f64; ACC_LANES],
) {
    use std::arch::x86_64::*;
    let n = xs.len();
    let main = n - n % ACC_LANES;
    let vpx = _mm256_set1_pd(geom.px);
    let vpy = _mm256_set1_pd(geom.py);
    let vlx = _mm256_set1_pd(geom.lx);
    let vly = _mm256_set1_pd(geom.ly);
    let vhx = _mm256_set1_pd(geom.half_lx);
    let vhy = _mm256_set1_pd(geom.half_ly);
    let vnhx = _mm256_set1_pd(-geom.half_lx);
    let vnhy = _mm256_set1_pd(-geom.half_ly);
    let vr2 = _mm256_set1_pd(geom.r2);
    let mut ax0 = _mm256_loadu_pd(axs.as_ptr());
    let mut ax1 = _mm256_loadu_pd(axs.as_ptr().add(4));
    let mut ay0 = _mm256_loadu_pd(ays.as_ptr());
    let mut ay1 = _mm256_loadu_pd(ays.as_ptr().add(4));
    let mut i = 0;
    while i < main {
        for (ax, ay, off) in [(&mut ax0, &mut ay0, i), (&mut ax1, &mut ay1, i + 4)] {
            let x = _mm256_loadu_pd(xs.as_ptr().add(off));
            let mut dx = _mm256_sub_pd(x, vpx);
            let hi = _mm256_cmp_pd::<_CMP_GT_OQ>(dx, vhx);
            dx = _mm256_sub_pd(dx, _mm256_and_pd(hi, vlx));
            let lo = _mm256_cmp_pd::<_CMP_LT_OQ>(dx, vnhx);
            dx = _mm256_add_pd(dx, _mm256_and_pd(lo, vlx));
            let y = _mm256_loadu_pd(ys.as_ptr().add(off));
            let mut dy = _mm256_sub_pd(y, vpy);
            let hi = _mm256_cmp_pd::<_CMP_GT_OQ>(dy, vhy);
            dy = _mm256_sub_pd(dy, _mm256_and_pd(hi, vly));
            let lo = _mm256_cmp_pd::<_CMP_LT_OQ>(dy, vnhy);
            dy = _mm256_add_pd(dy, _mm256_and_pd(lo, vly));
            let d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
            let m = _mm256_cmp_pd::<_CMP_LE_OQ>(d2, vr2);
            let c = _mm256_loadu_pd(cw.as_ptr().add(off));
            let s = _mm256_loadu_pd(sw.as_ptr().add(off));
            *ax = _mm256_add_pd(*ax, _mm256_and_pd(m, c));
            *ay = _mm256_add_pd(*ay, _mm256_and_pd(m, s));
        }
        i += ACC_LANES;
    }
    _mm256_storeu_pd(axs.as_mut_ptr(), ax0);
    _mm256_storeu_pd(axs.as_mut_ptr().add(4), ax1);
    _mm256_storeu_pd(ays.as_mut_ptr(), ay0);
    _mm256_storeu_pd(ays.as_mut_ptr().add(4), ay1);
    for l in main..n {
        let w = geom.within(xs[l], ys[l]);
        axs[0] += if w { cw[l] } else { 0.0 };
        ays[0] += if w { sw[l] } else { 0.0 };
    }
}

/// AVX-512 tier: one 512-bit vector per chunk of eight.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn accumulate_masked_avx512(
    xs: &[f64],
    ys: &[f64],
    cw: &[f64],
    sw: &[f64],
    geom: &BallGeom,
    axs: &mut [f64; ACC_LANES],
    ays: &mut [f64; ACC_LANES],
) {
    use std::arch::x86_64::*;
    let n = xs.len();
    let main = n - n % ACC_LANES;
    let vpx = _mm512_set1_pd(geom.px);
    let vpy = _mm512_set1_pd(geom.py);
    let vlx = _mm512_set1_pd(geom.lx);
    let vly = _mm512_set1_pd(geom.ly);
    let vhx = _mm512_set1_pd(geom.half_lx);
    let vhy = _mm512_set1_pd(geom.half_ly);
    let vnhx = _mm512_set1_pd(-geom.half_lx);
    let vnhy = _mm512_set1_pd(-geom.half_ly);
    let vr2 = _mm512_set1_pd(geom.r2);
    let mut vax = _mm512_loadu_pd(axs.as_ptr());
    let mut vay = _mm512_loadu_pd(ays.as_ptr());
    let mut i = 0;
    while i < main {
        let x = _mm512_loadu_pd(xs.as_ptr().add(i));
        let mut dx = _mm512_sub_pd(x, vpx);
        let hi = _mm512_cmp_pd_mask::<_CMP_GT_OQ>(dx, vhx);
        dx = _mm512_mask_sub_pd(dx, hi, dx, vlx);
        let lo = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(dx, vnhx);
        dx = _mm512_mask_add_pd(dx, lo, dx, vlx);
        let y = _mm512_loadu_pd(ys.as_ptr().add(i));
        let mut dy = _mm512_sub_pd(y, vpy);
        let hi = _mm512_cmp_pd_mask::<_CMP_GT_OQ>(dy, vhy);
        dy = _mm512_mask_sub_pd(dy, hi, dy, vly);
        let lo = _mm512_cmp_pd_mask::<_CMP_LT_OQ>(dy, vnhy);
        dy = _mm512_mask_add_pd(dy, lo, dy, vly);
        let d2 = _mm512_add_pd(_mm512_mul_pd(dx, dx), _mm512_mul_pd(dy, dy));
        let m = _mm512_cmp_pd_mask::<_CMP_LE_OQ>(d2, vr2);
        let c = _mm512_loadu_pd(cw.as_ptr().add(i));
        let s = _mm512_loadu_pd(sw.as_ptr().add(i));
        vax = _mm512_mask_add_pd(vax, m, vax, c);
        vay = _mm512_mask_add_pd(vay, m, vay, s);
        i += ACC_LANES;
    }
    _mm512_storeu_pd(axs.as_mut_ptr(), vax);
    _mm512_storeu_pd(ays.as_mut_ptr(), vay);
    for l in main..n {
        let w = geom.within(xs[l], ys[l]);
        axs[0] += if w { cw[l] } else { 0.0 };
        ays[0] += if w { sw[l] } else { 0.0 };
    }
}

/// Uniform-cell spatial index: cells at least `radius` wide, so the 3x3
/// block around a cell (deduplicated under wrap) covers every possible
/// neighbor. Positions are gathered into cell-sorted arrays so the inner
/// distance loop runs over contiguous memory.
struct CellList {
    ncx: usize,
    ncy: usize,
    starts: Vec<usize>,
    /// particle index per slot, grouped by cell, ascending within a cell
    items: Vec<u32>,
    /// positions gathered in slot order
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// per cell: sorted, deduplicated ids of the cells a neighbor can be in
    neighbor_cells: Vec<Vec<u32>>,
}

impl CellList {
    fn build(ens: &ParticleEnsemble) -> Self {
        let ncx = ((ens.lx / ens.radius).floor() as usize).max(1);
        let ncy = ((ens.ly / ens.radius).floor() as usize).max(1);
        let ncells = ncx * ncy;
        let cwx = ens.lx / ncx as f64;
        let cwy = ens.ly / ncy as f64;
        let cell_of = |p: &[f64; 2]| -> usize {
            let ix = ((p[0] / cwx) as usize).min(ncx - 1);
            let iy = ((p[1] / cwy) as usize).min(ncy - 1);
            iy * ncx + ix
        };
        let mut counts = vec![0usize; ncells + 1];
        for p in &ens.x {
            counts[cell_of(p) + 1] += 1;
        }
        for c in 1..=ncells {
            counts[c] += counts[c - 1];
        }
        let starts = counts.clone();
        let mut cursor = counts;
        let mut items = vec![0u32; ens.len()];
        for (k, p) in ens.x.iter().enumerate() {
            let c = cell_of(p);
            items[cursor[c]] = k as u32;
            cursor[c] += 1;
        }
        let xs: Vec<f64> = items.iter().map(|&k| ens.x[k as usize][0]).collect();
        let ys: Vec<f64> = items.iter().map(|&k| ens.x[k as usize][1]).collect();
        let mut neighbor_cells = Vec::with_capacity(ncells);
        for cy in 0..ncy {
            for cx in 0..ncx {
                let mut ids: Vec<u32> = Vec::with_capacity(9);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = (cx as i64 + dx).rem_euclid(ncx as i64) as usize;
                        let ny = (cy as i64 + dy).rem_euclid(ncy as i64) as usize;
                        ids.push((ny * ncx + nx) as u32);
                    }
                }
                ids.sort_unstable();
                ids.dedup();
                neighbor_cells.push(ids);
            }
        }
        Self { ncx, ncy, starts, items, xs, ys, neighbor_cells }
    }

    fn cell_of(&self, ens: &ParticleEnsemble, p: &[f64; 2]) -> usize {
        let cwx = ens.lx / self.ncx as f64;
        let cwy = ens.ly / self.ncy as f64;
        let ix = ((p[0] / cwx) as usize).min(self.ncx - 1);
        let iy = ((p[1] / cwy) as usize).min(self.ncy - 1);
        iy * self.ncx + ix
    }

    /// Headings gathered into slot order as (cos, sin) arrays.
    fn gather_headings(&self, ens: &ParticleEnsemble) -> (Vec<f64>, Vec<f64>) {
        let mut cs = vec![0.0; ens.len()];
        let mut ss = vec![0.0; ens.len()];
        for (slot, &k) in self.items.iter().enumerate() {
            let (s, c) = ens.theta[k as usize].sin_cos();
            cs[slot] = c;
            ss[slot] = s;
        }
        (cs, ss)
    }

    /// Sum the slot-ordered weights `(cs, ss)` over every particle within
    /// `radius` of `p` (minimum image), in a fixed deterministic order.
    fn ball_sum(
        &self,
        ens: &ParticleEnsemble,
        p: &[f64; 2],
        cs: &[f64],
        ss: &[f64],
    ) -> (f64, f64) {
        let geom = BallGeom::new(ens, p);
        let mut axs = [0.0f64; ACC_LANES];
        let mut ays = [0.0f64; ACC_LANES];
        for &cid in &self.neighbor_cells[self.cell_of(ens, p)] {
            let (a, b) = (self.starts[cid as usize], self.starts[cid as usize + 1]);
            accumulate_masked(
                &self.xs[a..b],
                &self.ys[a..b],
                &cs[a..b],
                &ss[a..b],
                &geom,
                &mut axs,
                &mut ays,
            );
        }
        (combine_lanes(&axs), combine_lanes(&ays))
    }

    /// Call `f(j)` for every particle `j` with `|x_j - x_k| <= radius`
    /// (minimum image, including `j = k`), in slot order per cell.
    fn for_neighbors(&self, ens: &ParticleEnsemble, k: usize, mut f: impl FnMut(usize)) {
        let (lx, ly) = (ens.lx, ens.ly);
        let (half_lx, half_ly) = (0.5 * lx, 0.5 * ly);
        let r2 = ens.radius * ens.radius;
        let pk = ens.x[k];
        for &cid in &self.neighbor_cells[self.cell_of(ens, &pk)] {
            let (a, b) = (self.starts[cid as usize], self.starts[cid as usize + 1]);
            for slot in a..b {
                let mut dx = self.xs[slot] - pk[0];
                dx -= if dx > half_lx { lx } else { 0.0 };
                dx += if dx < -half_lx { lx } else { 0.0 };
                let mut dy = self.ys[slot] - pk[1];
                dy -= if dy > half_ly { ly } else { 0.0 };
                dy += if dy < -half_ly { ly } else { 0.0 };
                if dx * dx + dy * dy <= r2 {
                    f(self.items[slot] as usize);
                }
            }
        }
    }
}

/// Indices of all neighbors of particle `k` (cell-list search), sorted.
pub fn neighbor_indices(ens: &ParticleEnsemble, k: usize) -> Vec<u32> {
    let list = CellList::build(ens);
    let mut out = Vec::new();
    list.for_neighbors(ens, k, |j| out.push(j as u32));
    out.sort_unstable();
    out
}

/// Indices of all neighbors of particle `k` by brute-force all-pairs scan,
/// sorted (test oracle for the cell-list search).
pub fn neighbor_indices_brute(ens: &ParticleEnsemble, k: usize) -> Vec<u32> {
    let pk = ens.x[k];
    let r2 = ens.radius * ens.radius;
    let (half_lx, half_ly) = (0.5 * ens.lx, 0.5 * ens.ly);
    (0..ens.len())
        .filter(|&j| {
            let pj = ens.x[j];
            let mut dx = pj[0] - pk[0];
            dx -= if dx > half_lx { ens.lx } else { 0.0 };
            dx += if dx < -half_lx { ens.lx } else { 0.0 };
            let mut dy = pj[1] - pk[1];
            dy -= if dy > half_ly { ens.ly } else { 0.0 };
            dy += if dy < -half_ly { ens.ly } else { 0.0 };
            dx * dx + dy * dy <= r2
        })
        .map(|j| j as u32)
        .collect()
}

/// Normalize `j`, falling back to `fallback` on exact cancellation.
#[inline]
fn normalize_or(j: (f64, f64), fallback: [f64; 2]) -> [f64; 2] {
    let norm = j.0.hypot(j.1);
    if norm == 0.0 {
        fallback
    } else {
        [j.0 / norm, j.1 / norm]
    }
}

/// Rotation angle of the implicit alignment step: twice the signed angle
/// from the heading `om` to the chord point `B = om + (ob - om) * half_ratio`.
/// A vanishing chord point leaves the heading unchanged.
#[inline]
fn implicit_rotation(om: [f64; 2], ob: [f64; 2], half_ratio: f64) -> f64 {
    let bx = om[0] + (ob[0] - om[0]) * half_ratio;
    let by = om[1] + (ob[1] - om[1]) * half_ratio;
    if bx == 0.0 && by == 0.0 {
        0.0
    } else {
        2.0 * (om[0] * by - om[1] * bx).atan2(om[0] * bx + om[1] * by)
    }
}

/// Normalized average heading of the neighbors of particle `k` (self
/// included). Falls back to the particle's own heading on exact
/// cancellation.
pub fn mean_direction(ens: &ParticleEnsemble, k: usize) -> [f64; 2] {
    let list = CellList::build(ens);
    let (cs, ss) = list.gather_headings(ens);
    normalize_or(list.ball_sum(ens, &ens.x[k], &cs, &ss), ens.omega(k))
}

/// Advance all headings by one implicit geometric step of size `dt` plus
/// Brownian noise; positions are untouched. Pure Jacobi update: every
/// particle sees the step-start snapshot.
pub fn step_angles(ens: &ParticleEnsemble, dt: f64) -> Result<ParticleEnsemble, ParticleError> {
    if !(dt > 0.0) {
        return Err(ParticleError::NonPositiveDt(dt));
    }
    let list = CellList::build(ens);
    let (cs, ss) = list.gather_headings(ens);
    let half_ratio = 0.5 * dt / ens.eps;
    let noise_scale = (2.0 * ens.d * dt / ens.eps).sqrt();
    let (seed, step) = (ens.seed, ens.step_index);
    // queries run in cell-sorted slot order: consecutive queries then share
    // their candidate strip, which keeps it cache-hot (the result for a
    // particle is independent of this ordering)
    let by_slot: Vec<f64> = (0..ens.len())
        .into_par_iter()
        .map(|slot| {
            let k = list.items[slot] as usize;
            let om = ens.omega(k);
            let ob = normalize_or(list.ball_sum(ens, &ens.x[k], &cs, &ss), om);
            let rot = implicit_rotation(om, ob, half_ratio);
            let noise = if noise_scale > 0.0 {
                noise_scale * standard_normal(seed, k as u64, step)
            } else {
                0.0
            };
            normalize_angle(ens.theta[k] + rot + noise)
        })
        .collect();
    let mut theta = vec![0.0; ens.len()];
    for (slot, &k) in list.items.iter().enumerate() {
        theta[k as usize] = by_slot[slot];
    }
    let mut out = ens.clone();
    out.theta = theta;
    out.step_index += 1;
    Ok(out)
}

/// Advance all positions by `dt` along the current headings, with periodic
/// wrap. `dt = 0` is the identity.
pub fn step_positions(ens: &ParticleEnsemble, dt: f64) -> Result<ParticleEnsemble, ParticleError> {
    if !(dt >= 0.0) {
        return Err(ParticleError::NegativeDt(dt));
    }
    let mut out = ens.clone();
    for k in 0..out.len() {
        let (s, c) = out.theta[k].sin_cos();
        out.x[k][0] = (out.x[k][0] + dt * c).rem_euclid(out.lx);
        out.x[k][1] = (out.x[k][1] + dt * s).rem_euclid(out.ly);
    }
    Ok(out)
}

/// One full step: headings first (from step-start positions), then
/// positions along the new headings.
pub fn step(ens: &ParticleEnsemble, dt: f64) -> Result<ParticleEnsemble, ParticleError> {
    step_positions(&step_angles(ens, dt)?, dt)
}

/// Alignment order parameter `|sum omega_k| / N` in `[0, 1]`.
pub fn order_parameter(ens: &ParticleEnsemble) -> f64 {
    let (mut sx, mut sy) = (0.0, 0.0);
    for &t in &ens.theta {
        let (s, c) = t.sin_cos();
        sx += c;
        sy += s;
    }
    sx.hypot(sy) / ens.len() as f64
}

/// Two-state initial condition: a fraction `rho_l / (rho_l + rho_r)` of
/// the particles uniform on the left half of the box, the rest on the
/// right, with headings drawn from the circular alignment law centered at
/// the respective side's angle. The deposition scale is fixed so binned
/// densities reproduce `rho_l` / `rho_r`.
#[allow(clippy::too_many_arguments)]
pub fn init_riemann(
    n: usize,
    left: PrimState,
    right: PrimState,
    lx: f64,
    ly: f64,
    radius: f64,
    d: f64,
    eps: f64,
    seed: u64,
) -> Result<ParticleEnsemble, ParticleError> {
    if n == 0 {
        return Err(ParticleError::EmptyEnsemble);
    }
    if !(d > 0.0) {
        return Err(ParticleError::NegativeNoise(d));
    }
    let vm_left = VonMises::new(d, left.theta)?.sampler();
    let vm_right = VonMises::new(d, right.theta)?.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    let n_left = ((n as f64) * left.rho / (left.rho + right.rho)).round() as usize;
    let n_left = n_left.min(n);
    let mut x = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for k in 0..n {
        let (x0, sampler) = if k < n_left {
            (0.0, &vm_left)
        } else {
            (0.5 * lx, &vm_right)
        };
        let px = x0 + 0.5 * lx * rng.gen::<f64>();
        let py = ly * rng.gen::<f64>();
        x.push([px, py]);
        theta.push(sampler.sample(&mut rng));
    }
    let mut ens = ParticleEnsemble::new(x, theta, lx, ly, radius, d, eps, seed)?;
    ens.macro_mass = 0.5 * (left.rho + right.rho) * lx * ly;
    Ok(ens)
}

/// Binned 1D profile of an ensemble (or an ensemble average of runs).
#[derive(Debug, Clone)]
pub struct Profile {
    pub bin_centers: Vec<f64>,
    /// density in continuum units
    pub rho: Vec<f64>,
    /// direction of the summed heading flux per bin; NaN where undefined
    pub theta_mean: Vec<f64>,
    /// circular variance `1 - |mean omega|` per bin; NaN where undefined
    pub circ_var: Vec<f64>,
    /// number of runs averaged into this profile
    pub n_ensemble: usize,
}

/// Linear (cloud-in-cell) deposition onto `nbins` periodic x-bins.
///
/// Each particle splits unit mass linearly between the two nearest bin
/// centers; densities are scaled by `macro_mass / N` so they land in
/// continuum units. Empty bins report zero density and NaN direction
/// statistics.
pub fn deposit(ens: &ParticleEnsemble, nbins: usize) -> Result<Profile, ParticleError> {
    if nbins < 4 {
        return Err(ParticleError::TooFewBins(nbins));
    }
    let db = ens.lx / nbins as f64;
    let mut mass = vec![0.0f64; nbins];
    let mut fx = vec![0.0f64; nbins];
    let mut fy = vec![0.0f64; nbins];
    for k in 0..ens.len() {
        let u = ens.x[k][0] / db - 0.5;
        let j0 = u.floor();
        let frac = u - j0;
        let j0 = (j0 as i64).rem_euclid(nbins as i64) as usize;
        let j1 = (j0 + 1) % nbins;
        let (s, c) = ens.theta[k].sin_cos();
        for (j, w) in [(j0, 1.0 - frac), (j1, frac)] {
            mass[j] += w;
            fx[j] += w * c;
            fy[j] += w * s;
        }
    }
    let scale = ens.macro_mass / ens.len() as f64 / (db * ens.ly);
    let mut rho = vec![0.0; nbins];
    let mut theta_mean = vec![f64::NAN; nbins];
    let mut circ_var = vec![f64::NAN; nbins];
    for j in 0..nbins {
        if mass[j] > 0.0 {
            rho[j] = mass[j] * scale;
            theta_mean[j] = fy[j].atan2(fx[j]);
            circ_var[j] = 1.0 - fx[j].hypot(fy[j]) / mass[j];
        }
    }
    Ok(Profile {
        bin_centers: (0..nbins).map(|j| (j as f64 + 0.5) * db).collect(),
        rho,
        theta_mean,
        circ_var,
        n_ensemble: 1,
    })
}

/// Average profiles from independent runs on identical binning: arithmetic
/// mean of densities and circular variances, direction from the vector
/// mean of the per-run fluxes. Bins undefined in a run are skipped for
/// that run.
pub fn ensemble_average(runs: &[Profile]) -> Result<Profile, ParticleError> {
    let first = runs.first().ok_or(ParticleError::NoProfiles)?;
    let nb = first.bin_centers.len();
    for r in runs {
        if r.bin_centers.len() != nb
            || r.bin_centers
                .iter()
                .zip(&first.bin_centers)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
        {
            return Err(ParticleError::ProfileBinningMismatch);
        }
    }
    let mut rho = vec![0.0; nb];
    let mut fx = vec![0.0; nb];
    let mut fy = vec![0.0; nb];
    let mut cv_sum = vec![0.0; nb];
    let mut cv_count = vec![0usize; nb];
    for r in runs {
        for j in 0..nb {
            rho[j] += r.rho[j] / runs.len() as f64;
            if r.theta_mean[j].is_finite() {
                // flux magnitude: density times mean resultant length
                let mag = r.rho[j] * (1.0 - r.circ_var[j]);
                fx[j] += mag * r.theta_mean[j].cos();
                fy[j] += mag * r.theta_mean[j].sin();
            }
            if r.circ_var[j].is_finite() {
                cv_sum[j] += r.circ_var[j];
                cv_count[j] += 1;
            }
        }
    }
    let mut theta_mean = vec![f64::NAN; nb];
    let mut circ_var = vec![f64::NAN; nb];
    for j in 0..nb {
        if fx[j] != 0.0 || fy[j] != 0.0 {
            theta_mean[j] = fy[j].atan2(fx[j]);
        }
        if cv_count[j] > 0 {
            circ_var[j] = cv_sum[j] / cv_count[j] as f64;
        }
    }
    Ok(Profile {
        bin_centers: first.bin_centers.clone(),
        rho,
        theta_mean,
        circ_var,
        n_ensemble: runs.iter().map(|r| r.n_ensemble).sum(),
    })
}

/// Time-stepping configuration for a micro run.
#[derive(Debug, Clone, Copy)]
pub struct MicroRunConfig {
    pub dt: f64,
    pub t_end: f64,
    /// deposit a profile every this many steps (0 = final only)
    pub snapshot_every: usize,
    pub nbins: usize,
}

/// Outcome of a micro run.
#[derive(Debug)]
pub struct MicroRunResult {
    /// `(time, profile)` snapshots, always including the final state
    pub profiles: Vec<(f64, Profile)>,
    /// `(time, order parameter)` at every step, starting at t = 0
    pub phi: Vec<(f64, f64)>,
    pub final_state: ParticleEnsemble,
}

/// Drive an ensemble from `t = 0` to `t_end`.
pub fn run_micro(
    ens: ParticleEnsemble,
    cfg: &MicroRunConfig,
) -> Result<MicroRunResult, ParticleError> {
    if !(cfg.dt > 0.0) {
        return Err(ParticleError::NonPositiveDt(cfg.dt));
    }
    if cfg.nbins < 4 {
        return Err(ParticleError::TooFewBins(cfg.nbins));
    }
    let nsteps = (cfg.t_end / cfg.dt).round() as usize;
    let mut state = ens;
    let mut profiles = Vec::new();
    let mut phi = vec![(0.0, order_parameter(&state))];
    if cfg.snapshot_every > 0 {
        profiles.push((0.0, deposit(&state, cfg.nbins)?));
    }
    for n in 0..nsteps {
        state = step(&state, cfg.dt)?;
        let t = (n + 1) as f64 * cfg.dt;
        phi.push((t, order_parameter(&state)));
        if cfg.snapshot_every > 0 && (n + 1) % cfg.snapshot_every == 0 && n + 1 < nsteps {
            profiles.push((t, deposit(&state, cfg.nbins)?));
        }
    }
    profiles.push((nsteps as f64 * cfg.dt, deposit(&state, cfg.nbins)?));
    Ok(MicroRunResult { profiles, phi, final_state: state })
}
