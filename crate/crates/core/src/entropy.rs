//! Covering and packing numbers of finite point sets, metric-entropy
//! profiles, entropy-exponent fitting, and small-ball probabilities.
//!
//! Balls are open everywhere: `y ∈ B(x, r)` iff `ρ(x, y) < r`. Packings
//! require pairwise distances strictly greater than the radius.
//!
//! Exact counts come from exhaustive branch-and-bound search and are only
//! offered for sets of at most [`DEFAULT_EXACT_THRESHOLD`] points (callers
//! may raise it up to 64). Larger sets get farthest-point-first greedy
//! bounds, flagged as such in the profile.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divergences::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metric::{distance, PointSet, SampledFunction};

pub const DEFAULT_EXACT_THRESHOLD: usize = 14;
const MAX_EXACT_THRESHOLD: usize = 64;

/// Where covering balls may be centred.
#[derive(Clone, Copy, Debug)]
pub enum Centers<'a> {
    /// Centres restricted to the set itself (intrinsic covering number).
    Intrinsic,
    /// The set plus all pairwise midpoints `(f + g) / 2`.
    Midpoints,
    /// The set plus the given extra curves.
    Pool(&'a [SampledFunction]),
}

fn check_exact(ps: &PointSet, delta: f64, threshold: usize) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "radius must be positive and finite, got {delta}"
        )));
    }
    let threshold = threshold.min(MAX_EXACT_THRESHOLD);
    if ps.len() > threshold {
        return Err(Error::TooLarge {
            size: ps.len(),
            threshold,
        });
    }
    Ok(())
}

/// Minimal number of open `delta`-balls covering `ps`, by exhaustive search.
pub fn covering_number_exact(
    ps: &PointSet,
    delta: f64,
    centers: Centers<'_>,
    threshold: usize,
) -> Result<usize> {
    check_exact(ps, delta, threshold)?;
    let n = ps.len();
    if n == 0 {
        return Ok(0);
    }
    let mut masks: Vec<u64> = (0..n)
        .map(|c| ball_mask((0..n).map(|j| ps.dist(c, j)), delta))
        .collect();
    match centers {
        Centers::Intrinsic => {}
        Centers::Midpoints => {
            for a in 0..n {
                for b in (a + 1)..n {
                    let mid = ps.point(a).midpoint(ps.point(b))?;
                    masks.push(ball_mask(ps.distances_to(&mid)?, delta));
                }
            }
        }
        Centers::Pool(extra) => {
            for c in extra {
                masks.push(ball_mask(ps.distances_to(c)?, delta));
            }
        }
    }
    let universe = full_mask(n);
    Ok(min_set_cover(universe, masks))
}

/// Maximal number of points of `ps` with pairwise distances `> delta`, by
/// exhaustive max-clique search.
pub fn packing_number_exact(ps: &PointSet, delta: f64, threshold: usize) -> Result<usize> {
    check_exact(ps, delta, threshold)?;
    let n = ps.len();
    if n == 0 {
        return Ok(0);
    }
    let adj: Vec<u64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && ps.dist(i, j) > delta)
                .fold(0u64, |m, j| m | (1 << j))
        })
        .collect();
    let mut best = 0;
    max_clique(&adj, full_mask(n), 0, &mut best);
    Ok(best)
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn ball_mask(dists: impl IntoIterator<Item = f64>, delta: f64) -> u64 {
    dists
        .into_iter()
        .enumerate()
        .filter(|(_, d)| *d < delta)
        .fold(0u64, |m, (j, _)| m | (1 << j))
}

fn min_set_cover(universe: u64, masks: Vec<u64>) -> usize {
    let mut cands: Vec<u64> = masks
        .into_iter()
        .map(|m| m & universe)
        .filter(|&m| m != 0)
        .collect();
    cands.sort_unstable_by(|a, b| b.count_ones().cmp(&a.count_ones()).then(a.cmp(b)));
    cands.dedup();
    // Drop candidates dominated by a superset.
    let mut kept: Vec<u64> = Vec::with_capacity(cands.len());
    for &c in &cands {
        if !kept.iter().any(|&k| k & c == c) {
            kept.push(c);
        }
    }
    let mut best = greedy_cover_size(universe, &kept);
    cover_search(universe, 0, &kept, &mut best);
    best
}

fn greedy_cover_size(universe: u64, cands: &[u64]) -> usize {
    let mut uncovered = universe;
    let mut count = 0;
    while uncovered != 0 {
        let best = cands
            .iter()
            .max_by_key(|&&c| (c & uncovered).count_ones())
            .copied()
            .unwrap_or(0);
        if best & uncovered == 0 {
            // Not coverable; callers always include the set itself as centres.
            unreachable!("every point covers itself");
        }
        uncovered &= !best;
        count += 1;
    }
    count
}

fn cover_search(uncovered: u64, depth: usize, cands: &[u64], best: &mut usize) {
    if uncovered == 0 {
        *best = (*best).min(depth);
        return;
    }
    let max_gain = cands
        .iter()
        .map(|c| (c & uncovered).count_ones())
        .max()
        .unwrap_or(0);
    if max_gain == 0 {
        return;
    }
    let lower = depth + uncovered.count_ones().div_ceil(max_gain) as usize;
    if lower >= *best {
        return;
    }
    // Branch on the uncovered element with the fewest covering candidates.
    let mut pivot = 0;
    let mut fewest = usize::MAX;
    let mut rest = uncovered;
    while rest != 0 {
        let e = rest.trailing_zeros();
        rest &= rest - 1;
        let k = cands.iter().filter(|&&c| c >> e & 1 == 1).count();
        if k < fewest {
            fewest = k;
            pivot = e;
        }
    }
    let mut options: Vec<u64> = cands
        .iter()
        .copied()
        .filter(|&c| c >> pivot & 1 == 1)
        .collect();
    options.sort_unstable_by_key(|&c| std::cmp::Reverse((c & uncovered).count_ones()));
    for c in options {
        cover_search(uncovered & !c, depth + 1, cands, best);
    }
}

fn max_clique(adj: &[u64], mut cand: u64, size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    while cand != 0 {
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        cand &= !(1u64 << v);
        max_clique(adj, cand & adj[v], size + 1, best);
    }
}

/// Farthest-point-first ordering of a subset of a point set.
///
/// Starts at `indices[0]`; each next point is the one farthest from the
/// points chosen so far (lowest position wins ties). `radii[k]` is the
/// distance from `order[k]` to the previously chosen points at insertion
/// time (`+∞` for the first). Radii are nonincreasing, so the greedy net at
/// any radius is a prefix of `order`.
#[derive(Clone, Debug)]
pub struct FarthestPointOrder {
    pub order: Vec<usize>,
    pub radii: Vec<f64>,
}

impl FarthestPointOrder {
    pub fn new(ps: &PointSet, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut order = Vec::with_capacity(m);
        let mut radii = Vec::with_capacity(m);
        if m == 0 {
            return Self { order, radii };
        }
        let dm = ps.distance_matrix();
        let mut chosen = vec![false; m];
        let mut gap = vec![f64::INFINITY; m];
        let mut next = 0;
        let mut next_radius = f64::INFINITY;
        for _ in 0..m {
            chosen[next] = true;
            order.push(indices[next]);
            radii.push(next_radius);
            let row = dm.row(indices[next]);
            let mut far = None;
            let mut far_gap = f64::NEG_INFINITY;
            for k in 0..m {
                if chosen[k] {
                    continue;
                }
                gap[k] = gap[k].min(row[indices[k]]);
                if gap[k] > far_gap {
                    far_gap = gap[k];
                    far = Some(k);
                }
            }
            match far {
                Some(k) => {
                    next = k;
                    next_radius = far_gap;
                }
                None => break,
            }
        }
        Self { order, radii }
    }

    /// Net with pairwise distances `>= delta`; every other point lies at
    /// distance `< delta` from some centre.
    pub fn net(&self, delta: f64) -> &[usize] {
        let k = self.radii.iter().take_while(|&&r| r >= delta).count();
        &self.order[..k]
    }

    /// Packing with pairwise distances `> delta`; every other point lies
    /// within `delta` of some centre.
    pub fn strict_packing(&self, delta: f64) -> &[usize] {
        let k = self.radii.iter().take_while(|&&r| r > delta).count();
        &self.order[..k]
    }
}

/// Farthest-point-first `delta`-net of `ps`, starting from index 0.
///
/// The centres are pairwise at distance `>= delta` and every point of `ps`
/// lies in the open `delta`-ball of some centre. Its size is therefore an
/// upper bound on the intrinsic covering number at `delta` and a lower bound
/// on the covering number at `delta / 2`.
pub fn greedy_net(ps: &PointSet, delta: f64) -> Result<Vec<usize>> {
    if ps.is_empty() {
        return Err(Error::EmptyInput("greedy net of an empty set".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {delta}"
        )));
    }
    let all: Vec<usize> = (0..ps.len()).collect();
    Ok(FarthestPointOrder::new(ps, &all).net(delta).to_vec())
}

/// How a profile count was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Exact,
    GreedyUpper,
    GreedyLower,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Exact => "exact",
            CountMode::GreedyUpper => "greedy-upper",
            CountMode::GreedyLower => "greedy-lower",
        })
    }
}

impl std::str::FromStr for CountMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(CountMode::Exact),
            "greedy-upper" => Ok(CountMode::GreedyUpper),
            "greedy-lower" => Ok(CountMode::GreedyLower),
            other => Err(Error::Domain(format!("unknown count mode `{other}`"))),
        }
    }
}

/// Covering counts at a decreasing sequence of radii.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyProfile {
    radii: Vec<f64>,
    counts: Vec<u64>,
    modes: Vec<CountMode>,
}

impl EntropyProfile {
    pub fn new(radii: Vec<f64>, counts: Vec<u64>, modes: Vec<CountMode>) -> Result<Self> {
        if radii.len() != counts.len() || radii.len() != modes.len() {
            return Err(Error::LengthMismatch {
                expected: radii.len(),
                got: counts.len().min(modes.len()),
            });
        }
        check_radii(&radii)?;
        if counts.contains(&0) {
            return Err(Error::Invariant("profile counts must be positive".into()));
        }
        if counts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invariant(
                "profile counts must be nonincreasing in the radius".into(),
            ));
        }
        Ok(Self {
            radii,
            counts,
            modes,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn modes(&self) -> &[CountMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, u64, CountMode)> + '_ {
        self.radii
            .iter()
            .zip(&self.counts)
            .zip(&self.modes)
            .map(|((r, c), m)| (*r, *c, *m))
    }

    /// CSV with header `radius,count,mode`, preceded by `comment` lines
    /// prefixed by `# `.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, comment: &[String]) -> Result<()> {
        for line in comment {
            writeln!(out, "# {line}")?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["radius", "count", "mode"])?;
        for (r, c, m) in self.iter() {
            wtr.write_record([
                crate::dataset::format_float(r),
                c.to_string(),
                m.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["radius", "count", "mode"] {
            return Err(Error::Domain(format!(
                "profile header must be radius,count,mode, got {}",
                header.join(",")
            )));
        }
        let (mut radii, mut counts, mut modes) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            radii.push(
                rec[0]
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad radius `{}`", &rec[0])))?,
            );
            counts.push(
                rec[1]
                    .parse::<u64>()
                    .map_err(|_| Error::Domain(format!("bad count `{}`", &rec[1])))?,
            );
            modes.push(rec[2].parse::<CountMode>()?);
        }
        Self::new(radii, counts, modes)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::Domain("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// Which greedy bound to report above the exact-search threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GreedyBound {
    /// Size of the greedy net at `r`: an upper bound on the covering number.
    #[default]
    Upper,
    /// Size of the greedy net at `2r`: a lower bound on the covering number.
    Lower,
}

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    pub intrinsic: bool,
    pub exact_threshold: usize,
    pub greedy: GreedyBound,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            intrinsic: true,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            greedy: GreedyBound::Upper,
        }
    }
}

/// Covering counts of `ps` at each radius: exact when `ps` is small enough,
/// greedy bounds otherwise.
pub fn entropy_profile(
    ps: &PointSet,
    radii: &[f64],
    opts: ProfileOptions,
    exec: Exec,
) -> Result<EntropyProfile> {
    check_radii(radii)?;
    if ps.is_empty() {
        return Err(Error::EmptyInput("entropy profile of an empty set".into()));
    }
    ps.distance_matrix_with(exec);
    let exact = ps.len() <= opts.exact_threshold.min(MAX_EXACT_THRESHOLD);
    let (counts, modes) = if exact {
        let centers = if opts.intrinsic {
            Centers::Intrinsic
        } else {
            Centers::Midpoints
        };
        let counts = exec
            .map_indexed(radii.len(), |k| {
                covering_number_exact(ps, radii[k], centers, opts.exact_threshold).map(|c| c as u64)
            })
            .into_iter()
            .collect::<Result<Vec<u64>>>()?;
        (counts, vec![CountMode::Exact; radii.len()])
    } else {
        let all: Vec<usize> = (0..ps.len()).collect();
        let fpo = FarthestPointOrder::new(ps, &all);
        match opts.greedy {
            GreedyBound::Upper => (
                radii.iter().map(|&r| fpo.net(r).len() as u64).collect(),
                vec![CountMode::GreedyUpper; radii.len()],
            ),
            GreedyBound::Lower => (
                radii
                    .iter()
                    .map(|&r| fpo.net(2.0 * r).len() as u64)
                    .collect(),
                vec![CountMode::GreedyLower; radii.len()],
            ),
        }
    };
    EntropyProfile::new(radii.to_vec(), counts, modes)
}

/// Power-law envelope `c_low s^{-γ} <= log N(s) <= c_high s^{-γ}` for
/// `s < s0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEnvelope {
    pub gamma: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub s0: f64,
    #[serde(rename = "residual")]
    pub fit_residual: f64,
}

impl EntropyEnvelope {
    /// A flat profile (no growth of the entropy over the window) fits with
    /// `gamma ≈ 0`; such an envelope carries no information.
    pub fn is_degenerate(&self) -> bool {
        !(self.gamma > 1e-9) || !(self.c_low > 0.0) || self.c_low > self.c_high
    }

    /// `log N(s)` upper envelope at `s`.
    pub fn upper_log_count(&self, s: f64) -> f64 {
        self.c_high * s.powf(-self.gamma)
    }
}

fn window_entries(profile: &EntropyProfile, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi >= lo) {
        return Err(Error::Domain(format!(
            "window must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    let usable: Vec<(f64, f64)> = profile
        .iter()
        .filter(|&(s, c, _)| s >= lo && s <= hi && c >= 2)
        .map(|(s, c, _)| (s, (c as f64).ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 profile entries with count >= 2 inside [{lo}, {hi}], found {}",
            usable.len()
        )));
    }
    Ok(usable)
}

/// Least-squares fit of `log log N(s)` against `log(1/s)` over the window.
pub fn fit_gamma(profile: &EntropyProfile, window: (f64, f64)) -> Result<EntropyEnvelope> {
    let usable = window_entries(profile, window)?;
    let xs: Vec<f64> = usable.iter().map(|(s, _)| -s.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, l)| l.ln()).collect();
    let fit = least_squares(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("window radii do not vary".into()))?;
    let (c_low, c_high) = envelope_constants(&usable, fit.slope);
    Ok(EntropyEnvelope {
        gamma: fit.slope,
        c_low,
        c_high,
        s0: window.1,
        fit_residual: fit.rms_residual,
    })
}

/// Envelope constants for a caller-supplied exponent over the window.
pub fn envelope_with_gamma(
    profile: &EntropyProfile,
    window: (f64, f64),
    gamma: f64,
) -> Result<EntropyEnvelope> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let usable = window_entries(profile, window)?;
    let (c_low, c_high) = envelope_constants(&usable, gamma);
    let xs: Vec<f64> = usable.iter().map(|(s, _)| -s.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, l)| l.ln()).collect();
    let intercept = ys.iter().zip(&xs).map(|(y, x)| y - gamma * x).sum::<f64>() / xs.len() as f64;
    let rss: f64 = ys
        .iter()
        .zip(&xs)
        .map(|(y, x)| (y - intercept - gamma * x).powi(2))
        .sum();
    Ok(EntropyEnvelope {
        gamma,
        c_low,
        c_high,
        s0: window.1,
        fit_residual: (rss / xs.len() as f64).sqrt(),
    })
}

fn envelope_constants(usable: &[(f64, f64)], gamma: f64) -> (f64, f64) {
    usable
        .iter()
        .map(|(s, log_count)| log_count * s.powf(gamma))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

/// Ordinary least-squares line.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub rms_residual: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
        rms_residual: (rss / nf).sqrt(),
    })
}

/// `ψ(x, h) = P(B(x, h))`: mass of the support points at distance `< h`
/// from support point `x`.
pub fn small_ball(ps: &PointSet, p: &DiscreteMeasure, x: usize, h: f64) -> Result<f64> {
    if !p.contains(x) {
        return Err(Error::Domain(format!(
            "point {x} is not in the support of the measure"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {h}")));
    }
    Ok(ball_mass(ps, p, x, h))
}

fn ball_mass(ps: &PointSet, p: &DiscreteMeasure, x: usize, h: f64) -> f64 {
    let row = ps.distance_matrix().row(x);
    p.iter().filter(|&(j, _)| row[j] < h).map(|(_, w)| w).sum()
}

/// Small-ball probability of an arbitrary curve (not necessarily in the
/// support).
pub fn small_ball_at(
    ps: &PointSet,
    p: &DiscreteMeasure,
    x: &SampledFunction,
    h: f64,
) -> Result<f64> {
    let mut mass = 0.0;
    for (j, w) in p.iter() {
        if distance(x, ps.point(j), ps.metric())? < h {
            mass += w;
        }
    }
    Ok(mass)
}

/// `ψ(·, h)` at every support point of a measure.
#[derive(Clone, Debug)]
pub struct SmallBallProfile {
    pub measure: DiscreteMeasure,
    pub h: f64,
    /// `(pool index, ψ)` in support order.
    pub psi: Vec<(usize, f64)>,
}

pub fn small_ball_profile(ps: &PointSet, p: &DiscreteMeasure, h: f64) -> Result<SmallBallProfile> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {h}")));
    }
    let psi = p
        .support()
        .iter()
        .map(|&x| (x, ball_mass(ps, p, x, h)))
        .collect();
    Ok(SmallBallProfile {
        measure: p.clone(),
        h,
        psi,
    })
}

/// Mass of support points whose small-ball probability is at most `level`.
pub fn small_ball_tail(ps: &PointSet, p: &DiscreteMeasure, h: f64, level: f64) -> Result<f64> {
    let prof = small_ball_profile(ps, p, h)?;
    Ok(prof
        .psi
        .iter()
        .zip(p.weights())
        .filter(|((_, psi), _)| *psi <= level)
        .map(|(_, w)| w)
        .sum())
}

/// Both sides of the small-ball mass inequality
/// `P{x : ψ(x,h) <= δ} <= δ exp(c_high 4^γ h^{-γ})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Record {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Size of the greedy intrinsic `h/2`-cover used to certify the envelope.
    pub cover_size: usize,
}

/// Evaluate the small-ball mass inequality for `p`, after certifying that the
/// envelope bounds the intrinsic covering number of the support at `h / 2`.
pub fn lemma1_check(
    ps: &PointSet,
    p: &DiscreteMeasure,
    h: f64,
    delta: f64,
    env: &EntropyEnvelope,
) -> Result<Lemma1Record> {
    if !(h > 0.0) || !(delta > 0.0) {
        return Err(Error::Domain("h and delta must be positive".into()));
    }
    let cover_size = FarthestPointOrder::new(ps, p.support()).net(h / 2.0).len();
    let allowed = env.upper_log_count(h / 2.0);
    if !((cover_size as f64).ln() <= allowed) {
        return Err(Error::Precondition(format!(
            "envelope not certified at radius {}: log of greedy cover size {} = {:.6} exceeds c_high (h/2)^-gamma = {:.6}",
            h / 2.0,
            cover_size,
            (cover_size as f64).ln(),
            allowed
        )));
    }
    let lhs = small_ball_tail(ps, p, h, delta)?;
    let rhs = delta * (env.c_high * 4f64.powf(env.gamma) * h.powf(-env.gamma)).exp();
    Ok(Lemma1Record {
        lhs,
        rhs,
        holds: lhs <= rhs,
        cover_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    fn three() -> PointSet {
        PointSet::constants(&[0.0, 1.0, 2.0], MetricSpec::Supremum).unwrap()
    }

    #[test]
    fn covering_examples() {
        let ps = three();
        assert_eq!(
            covering_number_exact(&ps, 1.5, Centers::Intrinsic, 14).unwrap(),
            1
        );
        assert_eq!(
            covering_number_exact(&ps, 0.75, Centers::Intrinsic, 14).unwrap(),
            3
        );
        let single = PointSet::constants(&[3.0], MetricSpec::Supremum).unwrap();
        assert_eq!(
            covering_number_exact(&single, 0.01, Centers::Intrinsic, 14).unwrap(),
            1
        );
        assert_eq!(
            covering_number_exact(&single, 100.0, Centers::Midpoints, 14).unwrap(),
            1
        );
    }

    #[test]
    fn open_balls_exclude_the_boundary() {
        // Distance exactly 1 is not inside a ball of radius 1.
        let ps = three();
        assert_eq!(
            covering_number_exact(&ps, 1.0, Centers::Intrinsic, 14).unwrap(),
            3
        );
        assert_eq!(packing_number_exact(&ps, 1.0, 14).unwrap(), 2);
    }

    #[test]
    fn midpoint_centres_can_beat_intrinsic() {
        let ps = PointSet::constants(&[0.0, 1.0], MetricSpec::Supremum).unwrap();
        assert_eq!(
            covering_number_exact(&ps, 0.75, Centers::Intrinsic, 14).unwrap(),
            2
        );
        assert_eq!(
            covering_number_exact(&ps, 0.75, Centers::Midpoints, 14).unwrap(),
            1
        );
    }

    #[test]
    fn profile_csv_round_trip() {
        let prof =
            EntropyProfile::new(vec![1.5, 0.75], vec![1, 3], vec![CountMode::Exact; 2]).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "radius,count,mode\n1.5,1,exact\n0.75,3,exact\n"
        );
        assert_eq!(EntropyProfile::read_csv(buf.as_slice()).unwrap(), prof);
    }

    #[test]
    fn exact_search_refuses_large_sets() {
        let vals: Vec<f64> = (0..15).map(f64::from).collect();
        let ps = PointSet::constants(&vals, MetricSpec::Supremum).unwrap();
        assert!(matches!(
            covering_number_exact(&ps, 1.0, Centers::Intrinsic, 14),
            Err(Error::TooLarge {
                size: 15,
                threshold: 14
            })
        ));
        assert!(packing_number_exact(&ps, 1.0, 14).is_err());
        assert_eq!(packing_number_exact(&ps, 1.5, 15).unwrap(), 8);
    }

    #[test]
    fn packing_examples() {
        let ps = three();
        assert_eq!(packing_number_exact(&ps, 1.5, 14).unwrap(), 2);
        assert_eq!(packing_number_exact(&ps, 2.5, 14).unwrap(), 1);
        let single = PointSet::constants(&[0.3], MetricSpec::Supremum).unwrap();
        assert_eq!(packing_number_exact(&single, 0.1, 14).unwrap(), 1);
    }

    #[test]
    fn greedy_net_examples() {
        let ps = three();
        assert_eq!(greedy_net(&ps, 1.5).unwrap(), vec![0, 2]);
        let single = PointSet::constants(&[5.0], MetricSpec::Supremum).unwrap();
        assert_eq!(greedy_net(&single, 0.2).unwrap(), vec![0]);
        let tenths: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let ps = PointSet::constants(&tenths, MetricSpec::Supremum).unwrap();
        assert_eq!(greedy_net(&ps, 0.35).unwrap(), vec![0, 10, 5]);
        let empty = PointSet::new(vec![], MetricSpec::Supremum).unwrap();
        assert!(matches!(greedy_net(&empty, 1.0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn profile_examples() {
        let single = PointSet::constants(&[0.0], MetricSpec::Supremum).unwrap();
        let p = entropy_profile(
            &single,
            &[1.0, 0.5],
            ProfileOptions::default(),
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(p.counts(), &[1, 1]);
        assert_eq!(p.modes(), &[CountMode::Exact, CountMode::Exact]);

        let p = entropy_profile(
            &three(),
            &[1.5, 0.75],
            ProfileOptions::default(),
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(p.counts(), &[1, 3]);

        assert!(entropy_profile(
            &three(),
            &[0.5, 1.0],
            ProfileOptions::default(),
            Exec::Sequential
        )
        .is_err());
    }

    #[test]
    fn greedy_profile_above_threshold() {
        let vals: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let ps = PointSet::constants(&vals, MetricSpec::Supremum).unwrap();
        let radii = [0.5, 0.25, 0.1];
        let up = entropy_profile(&ps, &radii, ProfileOptions::default(), Exec::Sequential).unwrap();
        let lo = entropy_profile(
            &ps,
            &radii,
            ProfileOptions {
                greedy: GreedyBound::Lower,
                ..Default::default()
            },
            Exec::Sequential,
        )
        .unwrap();
        assert!(up.modes().iter().all(|m| *m == CountMode::GreedyUpper));
        assert!(lo.modes().iter().all(|m| *m == CountMode::GreedyLower));
        for (u, l) in up.counts().iter().zip(lo.counts()) {
            assert!(l <= u);
        }
    }

    #[test]
    fn fit_recovers_synthetic_exponent() {
        let radii = vec![0.5, 0.4, 0.3, 0.25, 0.2];
        let counts: Vec<u64> = radii
            .iter()
            .map(|s: &f64| (2.0 * s.powf(-1.5)).exp().round() as u64)
            .collect();
        let n = radii.len();
        let prof = EntropyProfile::new(radii, counts, vec![CountMode::Exact; n]).unwrap();
        let env = fit_gamma(&prof, (0.2, 0.5)).unwrap();
        assert!((env.gamma - 1.5).abs() < 0.1, "{env:?}");
        assert_eq!(env.s0, 0.5);
        assert!(env.c_low <= 2.0 + 1e-3 && env.c_high >= 2.0 - 1e-3);
    }

    #[test]
    fn flat_profile_is_degenerate() {
        let prof = EntropyProfile::new(
            vec![0.5, 0.4, 0.3],
            vec![7, 7, 7],
            vec![CountMode::Exact; 3],
        )
        .unwrap();
        let env = fit_gamma(&prof, (0.1, 1.0)).unwrap();
        assert!(env.gamma.abs() < 1e-12);
        assert!(env.is_degenerate());
    }

    #[test]
    fn fit_needs_three_entries() {
        let prof = EntropyProfile::new(
            vec![0.5, 0.4, 0.3],
            vec![1, 3, 9],
            vec![CountMode::Exact; 3],
        )
        .unwrap();
        assert!(matches!(
            fit_gamma(&prof, (0.1, 1.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn small_ball_examples() {
        let ps = PointSet::constants(&[0.0, 0.5, 2.0], MetricSpec::Supremum).unwrap();
        let p = DiscreteMeasure::uniform(vec![0, 1, 2]).unwrap();
        assert!((small_ball(&ps, &p, 0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(small_ball(&ps, &p, 1, 0.4).unwrap(), p.weight_of(1));
        assert!((small_ball(&ps, &p, 2, 10.0).unwrap() - 1.0).abs() < 1e-15);
        let q = DiscreteMeasure::uniform(vec![0, 1]).unwrap();
        assert!(matches!(small_ball(&ps, &q, 2, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn lemma1_examples() {
        let vals: Vec<f64> = (0..10).map(f64::from).collect();
        let ps = PointSet::constants(&vals, MetricSpec::Supremum).unwrap();
        let p = DiscreteMeasure::uniform((0..10).collect()).unwrap();
        let h = 0.5;
        // log(10) <= c_high (h/2)^-1  <=>  c_high >= 0.25 ln 10.
        let env = EntropyEnvelope {
            gamma: 1.0,
            c_low: 0.1,
            c_high: 0.6,
            s0: 1.0,
            fit_residual: 0.0,
        };
        let rec = lemma1_check(&ps, &p, h, 0.05, &env).unwrap();
        assert_eq!(rec.lhs, 0.0);
        assert!(rec.holds);
        let rec = lemma1_check(&ps, &p, h, 1.0, &env).unwrap();
        assert!(rec.holds && rec.rhs >= 1.0);

        let weak = EntropyEnvelope { c_high: 0.1, ..env };
        assert!(matches!(
            lemma1_check(&ps, &p, h, 0.05, &weak),
            Err(Error::Precondition(_))
        ));
    }
}
