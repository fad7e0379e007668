//! Hypercube-indexed hard instances: the bump-based regression family `g_θ`
//! on a separated set of centres, and the discrete classification family
//! `f_θ` with respect to a reference measure `R`.

use rand::Rng;
use serde::Serialize;

use crate::divergences::{kl, tv, DiscreteMeasure};
use crate::entropy::FarthestPointOrder;
use crate::error::{Error, Result};
use crate::metric::{distance, PointSet, SampledFunction};
use crate::models::{holder_audit, ClassificationInstance, SmoothnessSpec, HOLDER_SLACK};

/// `ϑ(t) = exp(1/(t² − 1))` on `(−1, 1)`, zero elsewhere.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 / (t * t - 1.0)).exp()
    } else {
        0.0
    }
}

/// `ϑ'(t) = −2t ϑ(t) / (t² − 1)²`.
pub fn bump_derivative(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let s = t * t - 1.0;
        -2.0 * t * bump(t) / (s * s)
    } else {
        0.0
    }
}

/// `max(‖ϑ‖_∞, ‖ϑ'‖_∞)`, with the derivative bound taken from a dense grid.
pub fn bump_lipschitz_bound() -> f64 {
    let k = 200_000;
    let deriv = (0..=k)
        .map(|i| bump_derivative(-1.0 + 2.0 * i as f64 / k as f64).abs())
        .fold(0.0, f64::max);
    deriv.max((-1f64).exp())
}

/// Uniformly drawn bit vector.
pub fn random_theta<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<bool> {
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

/// All `2^len` bit vectors in binary counting order.
pub fn all_thetas(len: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << len)).map(move |code| (0..len).map(|b| (code >> b) & 1 == 1).collect())
}

pub fn complement(theta: &[bool]) -> Vec<bool> {
    theta.iter().map(|b| !b).collect()
}

fn check_len(theta: &[bool], expected: usize) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: theta.len(),
        });
    }
    Ok(())
}

/// Checks behind a regression family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionFamilyAudit {
    /// Smallest pairwise distance between centres (`+∞` for one centre).
    pub min_center_gap: f64,
    /// Centres pairwise farther apart than `δ_n`, so the `δ_n/4` balls are disjoint.
    pub disjoint_balls: bool,
    /// `min (C ρ^β − d Σ_j |u_j(a) − u_j(b)|)` over all pool pairs. Controls
    /// `|g_θ(a) − g_θ(b)|` for every θ at once.
    pub holder_margin: f64,
    /// `C − d h_n^β ϑ(0)`.
    pub bound_margin: f64,
    /// Largest amplitude for which both margins are nonnegative.
    pub max_admissible_amplitude: f64,
    pub passed: bool,
}

/// `g_θ(x) = Σ_j θ_j d h_n^β ϑ(ρ(z_j, x) / h_n)`, `h_n = δ_n / 4`, on a
/// strict `δ_n`-packing `z_1..z_m` with the uniform design on the centres.
#[derive(Clone, Debug)]
pub struct AssouadRegressionFamily {
    points: PointSet,
    centers: Vec<usize>,
    delta_n: f64,
    h_n: f64,
    amplitude: f64,
    smoothness: SmoothnessSpec,
    design: DiscreteMeasure,
    audit: RegressionFamilyAudit,
}

/// Regression family on the farthest-point-first strict `δ_n`-packing of
/// the whole pool, started at pool index 0.
pub fn build_regression_family(
    ps: &PointSet,
    delta_n: f64,
    amplitude: f64,
    spec: SmoothnessSpec,
) -> Result<AssouadRegressionFamily> {
    build_regression_family_with(ps, delta_n, amplitude, spec, None)
}

/// Centres and Hölder-audit ingredients that do not depend on the amplitude.
struct RegressionPlan {
    centers: Vec<usize>,
    h_n: f64,
    min_center_gap: f64,
    /// `h_n^β ϑ(0)`, the largest unit-amplitude bump value.
    peak: f64,
    /// `(C ρ(a, b)^β, Σ_j |u_j(a) − u_j(b)|)` for pool pairs with a nonzero sum.
    pairs: Vec<(f64, f64)>,
}

impl RegressionPlan {
    fn new(
        ps: &PointSet,
        delta_n: f64,
        spec: SmoothnessSpec,
        max_centers: Option<usize>,
    ) -> Result<Self> {
        spec.validate()?;
        if ps.is_empty() {
            return Err(Error::EmptyInput("point pool is empty".into()));
        }
        if !(delta_n > 0.0) {
            return Err(Error::Domain(format!(
                "delta_n must be positive, got {delta_n}"
            )));
        }
        if max_centers == Some(0) {
            return Err(Error::Domain("at least one centre is required".into()));
        }
        let all: Vec<usize> = (0..ps.len()).collect();
        let mut centers = FarthestPointOrder::new(ps, &all)
            .strict_packing(delta_n)
            .to_vec();
        if let Some(cap) = max_centers {
            centers.truncate(cap);
        }
        let h_n = delta_n / 4.0;

        let mut min_center_gap = f64::INFINITY;
        for (a, &i) in centers.iter().enumerate() {
            for &j in &centers[a + 1..] {
                min_center_gap = min_center_gap.min(ps.dist(i, j));
            }
        }

        // Unit-amplitude bump contributions u_j(x) = h^β ϑ(ρ(z_j, x)/h), kept
        // sparsely per pool point.
        let scale = h_n.powf(spec.beta);
        let terms: Vec<Vec<(usize, f64)>> = (0..ps.len())
            .map(|x| {
                centers
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &z)| {
                        let u = scale * bump(ps.dist(z, x) / h_n);
                        (u > 0.0).then_some((j, u))
                    })
                    .collect()
            })
            .collect();
        let mut pairs = Vec::new();
        for a in 0..ps.len() {
            for b in (a + 1)..ps.len() {
                if terms[a].is_empty() && terms[b].is_empty() {
                    continue;
                }
                let s = term_difference(&terms[a], &terms[b]);
                if s > 0.0 {
                    pairs.push((spec.c * ps.dist(a, b).powf(spec.beta), s));
                }
            }
        }
        Ok(Self {
            centers,
            h_n,
            min_center_gap,
            peak: scale * bump(0.0),
            pairs,
        })
    }

    fn amplitude_limit(&self, c: f64) -> f64 {
        self.pairs
            .iter()
            .map(|(allowed, s)| allowed / s)
            .fold(c / self.peak, f64::min)
    }
}

/// Largest amplitude `d` for which the family on this pool stays in the
/// Hölder class for every θ.
pub fn regression_amplitude_limit(
    ps: &PointSet,
    delta_n: f64,
    spec: SmoothnessSpec,
    max_centers: Option<usize>,
) -> Result<f64> {
    Ok(RegressionPlan::new(ps, delta_n, spec, max_centers)?.amplitude_limit(spec.c))
}

/// As [`build_regression_family`], keeping at most `max_centers` centres
/// (a prefix of the packing order; `Some(1)` keeps pool index 0 only).
pub fn build_regression_family_with(
    ps: &PointSet,
    delta_n: f64,
    amplitude: f64,
    spec: SmoothnessSpec,
    max_centers: Option<usize>,
) -> Result<AssouadRegressionFamily> {
    if !(amplitude > 0.0) {
        return Err(Error::Domain(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let plan = RegressionPlan::new(ps, delta_n, spec, max_centers)?;
    let disjoint_balls = plan.min_center_gap > delta_n;
    let holder_margin = plan
        .pairs
        .iter()
        .map(|(allowed, s)| allowed - amplitude * s)
        .fold(f64::INFINITY, f64::min);
    let bound_margin = spec.c - amplitude * plan.peak;
    let d_max = plan.amplitude_limit(spec.c);
    let passed = disjoint_balls && holder_margin >= -HOLDER_SLACK && bound_margin >= -HOLDER_SLACK;
    let audit = RegressionFamilyAudit {
        min_center_gap: plan.min_center_gap,
        disjoint_balls,
        holder_margin,
        bound_margin,
        max_admissible_amplitude: d_max,
        passed,
    };
    if !passed {
        let detail = if !disjoint_balls {
            format!(
                "centres are not {delta_n}-separated (min gap {})",
                plan.min_center_gap
            )
        } else {
            format!(
                "amplitude {amplitude} breaks the Hölder class (pair margin {holder_margin:.3e}, bound margin {bound_margin:.3e})"
            )
        };
        return Err(Error::AmplitudeTooLarge {
            detail,
            max_admissible: d_max,
        });
    }
    let design = DiscreteMeasure::uniform(plan.centers.clone())?;
    Ok(AssouadRegressionFamily {
        points: ps.clone(),
        centers: plan.centers,
        delta_n,
        h_n: plan.h_n,
        amplitude,
        smoothness: spec,
        design,
        audit,
    })
}

/// `Σ_j |u_j(a) − u_j(b)|` for sparse, centre-sorted term lists.
fn term_difference(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut s = 0.0;
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        match (a.get(i), b.get(k)) {
            (Some(&(ja, ua)), Some(&(jb, ub))) if ja == jb => {
                s += (ua - ub).abs();
                i += 1;
                k += 1;
            }
            (Some(&(ja, ua)), Some(&(jb, _))) if ja < jb => {
                s += ua;
                i += 1;
            }
            (Some(_), Some(&(_, ub))) => {
                s += ub;
                k += 1;
            }
            (Some(&(_, ua)), None) => {
                s += ua;
                i += 1;
            }
            (None, Some(&(_, ub))) => {
                s += ub;
                k += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    s
}

impl AssouadRegressionFamily {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    pub fn h_n(&self) -> f64 {
        self.h_n
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn smoothness(&self) -> SmoothnessSpec {
        self.smoothness
    }

    /// Uniform design on the centres.
    pub fn design(&self) -> &DiscreteMeasure {
        &self.design
    }

    pub fn audit(&self) -> &RegressionFamilyAudit {
        &self.audit
    }

    fn term(&self, rho: f64) -> f64 {
        self.amplitude * self.h_n.powf(self.smoothness.beta) * bump(rho / self.h_n)
    }

    /// `g_θ` at pool index `x`.
    pub fn g_at(&self, theta: &[bool], x: usize) -> Result<f64> {
        check_len(theta, self.m())?;
        Ok(self
            .centers
            .iter()
            .zip(theta)
            .filter(|(_, &on)| on)
            .map(|(&z, _)| self.term(self.points.dist(z, x)))
            .sum())
    }

    /// `g_θ` at an arbitrary curve on the pool's grid.
    pub fn eval(&self, theta: &[bool], x: &SampledFunction) -> Result<f64> {
        check_len(theta, self.m())?;
        let mut total = 0.0;
        for (&z, &on) in self.centers.iter().zip(theta) {
            if on {
                total += self.term(distance(self.points.point(z), x, self.points.metric())?);
            }
        }
        Ok(total)
    }

    /// `g_θ` on every pool point.
    pub fn g_table(&self, theta: &[bool]) -> Result<Vec<f64>> {
        (0..self.points.len())
            .map(|x| self.g_at(theta, x))
            .collect()
    }

    /// `E_X |g_{θ⊕e_j}(X) − g_θ(X)|²` under the design, summed over its support.
    pub fn flip_sq_difference(&self, theta: &[bool], j: usize) -> Result<f64> {
        check_len(theta, self.m())?;
        if j >= self.m() {
            return Err(Error::Domain(format!(
                "coordinate {j} out of range for {} centres",
                self.m()
            )));
        }
        let mut flipped = theta.to_vec();
        flipped[j] = !flipped[j];
        let mut total = 0.0;
        for (x, w) in self.design.iter() {
            let diff = self.g_at(&flipped, x)? - self.g_at(theta, x)?;
            total += w * diff * diff;
        }
        Ok(total)
    }

    /// Closed form of [`flip_sq_difference`](Self::flip_sq_difference):
    /// `d² h_n^{2β} ϑ(0)² / m`.
    pub fn flip_sq_difference_closed_form(&self) -> f64 {
        let a = self.amplitude * self.h_n.powf(self.smoothness.beta) * bump(0.0);
        a * a / self.m() as f64
    }
}

/// Anchor triple maximising the smallest pairwise distance: exhaustive
/// over all triples for pools of at most 40 points (lexicographically first
/// maximiser), otherwise the first three farthest-point-first points.
pub fn select_anchors(ps: &PointSet) -> Result<[usize; 3]> {
    let n = ps.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "need at least three points for the anchors, got {n}"
        )));
    }
    let best = if n <= 40 {
        let mut best = ([0, 1, 2], f64::NEG_INFINITY);
        for a in 0..n {
            for b in (a + 1)..n {
                let ab = ps.dist(a, b);
                if ab <= best.1 {
                    continue;
                }
                for c in (b + 1)..n {
                    let m = ab.min(ps.dist(a, c)).min(ps.dist(b, c));
                    if m > best.1 {
                        best = ([a, b, c], m);
                    }
                }
            }
        }
        best.0
    } else {
        let all: Vec<usize> = (0..n).collect();
        let fpo = FarthestPointOrder::new(ps, &all);
        [fpo.order[0], fpo.order[1], fpo.order[2]]
    };
    let gap = ps
        .dist(best[0], best[1])
        .min(ps.dist(best[0], best[2]))
        .min(ps.dist(best[1], best[2]));
    if !(gap > 0.0) {
        return Err(Error::Precondition(
            "the pool has fewer than three distinct points".into(),
        ));
    }
    Ok(best)
}

/// Checks behind a classification family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationFamilyAudit {
    /// Number of θ vectors examined and whether that was all of them.
    pub thetas_checked: usize,
    pub exhaustive: bool,
    pub weight_sum_error: f64,
    pub weights_ok: bool,
    pub density_min: f64,
    pub density_max: f64,
    pub density_ok: bool,
    /// `min TV(P_θ, P_θ') − κ` over the examined θ.
    pub tv_margin: f64,
    pub tv_ok: bool,
    /// `min (C ρ^β − |f_θ(x) − f_θ(y)|)` over support pairs and θ.
    pub holder_margin: f64,
    pub holder_ok: bool,
    /// `min (3 C δ_n^β R{z_2l} − KL(P_{θ,l,1}, P_{θ,l,0}))` over `l >= 1` and θ.
    pub kl_margin: f64,
    pub kl_ok: bool,
    /// Whether `δ_n < 2^{-1/β} M_0`, the regime in which every check must pass.
    pub delta_in_regime: bool,
    pub passed: bool,
}

/// Discrete classification family: reference measure `R` on
/// `z_{-1}, z_0, z_1..z_{d_n}` and densities `f_θ` with respect to `R`.
#[derive(Clone, Debug)]
pub struct AssouadClassificationFamily {
    points: PointSet,
    anchors: [usize; 3],
    cell_anchor: usize,
    z_minus1: usize,
    z_0: usize,
    packing: Vec<usize>,
    big_m: f64,
    m_0: f64,
    kappa: f64,
    smoothness: SmoothnessSpec,
    delta_n: f64,
    reference: DiscreteMeasure,
}

/// Upper end of the admissible κ range, `M_0^β C / 8`.
pub fn kappa_upper(m_0: f64, spec: SmoothnessSpec) -> f64 {
    m_0.powf(spec.beta) * spec.c / 8.0
}

/// Builds the family; `max_packing` caps `d_n` (rounded down to even).
pub fn build_classification_family(
    ps: &PointSet,
    kappa: f64,
    spec: SmoothnessSpec,
    delta_n: f64,
    max_packing: Option<usize>,
) -> Result<AssouadClassificationFamily> {
    spec.validate()?;
    if !(delta_n > 0.0) {
        return Err(Error::Domain(format!(
            "delta_n must be positive, got {delta_n}"
        )));
    }
    let anchors = select_anchors(ps)?;
    let big_m = ps
        .dist(anchors[0], anchors[1])
        .min(ps.dist(anchors[0], anchors[2]))
        .min(ps.dist(anchors[1], anchors[2]))
        / 2.0;
    let m_0 = spec.c.powf(-1.0 / spec.beta).min(big_m);
    let upper = kappa_upper(m_0, spec);
    if !(kappa > 0.0 && kappa < upper) {
        return Err(Error::KappaOutOfRange { kappa, upper });
    }

    // Voronoi cells of the anchors, ties to the lowest anchor position.
    let mut cells: [Vec<usize>; 3] = Default::default();
    for y in 0..ps.len() {
        let mut best = 0;
        for k in 1..3 {
            if ps.dist(y, anchors[k]) < ps.dist(y, anchors[best]) {
                best = k;
            }
        }
        cells[best].push(y);
    }
    let mut cell = 0;
    for k in 1..3 {
        if cells[k].len() > cells[cell].len() {
            cell = k;
        }
    }
    let others: Vec<usize> = (0..3).filter(|&k| k != cell).map(|k| anchors[k]).collect();

    let mut packing = FarthestPointOrder::new(ps, &cells[cell])
        .strict_packing(delta_n)
        .to_vec();
    if let Some(cap) = max_packing {
        packing.truncate(cap);
    }
    packing.truncate(packing.len() / 2 * 2);
    if packing.len() < 2 {
        return Err(Error::PackingTooSmall {
            found: packing.len(),
        });
    }

    let d_n = packing.len();
    let anchor_mass = 2.0 * kappa * m_0.powf(-spec.beta) / spec.c;
    let packing_mass = (1.0 - 2.0 * anchor_mass) / d_n as f64;
    let mut support = vec![others[0], others[1]];
    support.extend_from_slice(&packing);
    let mut weights = vec![anchor_mass, anchor_mass];
    weights.extend(std::iter::repeat_n(packing_mass, d_n));
    let reference = DiscreteMeasure::new(support, weights)?;

    Ok(AssouadClassificationFamily {
        points: ps.clone(),
        anchors,
        cell_anchor: anchors[cell],
        z_minus1: others[0],
        z_0: others[1],
        packing,
        big_m,
        m_0,
        kappa,
        smoothness: spec,
        delta_n,
        reference,
    })
}

impl AssouadClassificationFamily {
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn anchors(&self) -> [usize; 3] {
        self.anchors
    }

    /// Anchor whose Voronoi cell hosts the packing.
    pub fn cell_anchor(&self) -> usize {
        self.cell_anchor
    }

    pub fn z_minus1(&self) -> usize {
        self.z_minus1
    }

    pub fn z_0(&self) -> usize {
        self.z_0
    }

    /// `z_1..z_{d_n}`.
    pub fn packing(&self) -> &[usize] {
        &self.packing
    }

    pub fn d_n(&self) -> usize {
        self.packing.len()
    }

    /// Length of θ: `d_n / 2 + 1`.
    pub fn theta_len(&self) -> usize {
        self.packing.len() / 2 + 1
    }

    /// Half the smallest anchor distance.
    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn m_0(&self) -> f64 {
        self.m_0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn smoothness(&self) -> SmoothnessSpec {
        self.smoothness
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    /// `R`, supported on `z_{-1}, z_0, z_1..z_{d_n}` in that order.
    pub fn reference(&self) -> &DiscreteMeasure {
        &self.reference
    }

    /// `f_θ(y)` at pool index `y` (1 off the perturbed points).
    pub fn density(&self, theta: &[bool], y: usize) -> Result<f64> {
        check_len(theta, self.theta_len())?;
        let SmoothnessSpec { beta, c } = self.smoothness;
        // C·M_0^β <= 1 and C·δ_n^β < 1; the clamp absorbs rounding when M_0 = C^{-1/β}.
        let anchor_step = (0.5 * c * self.m_0.powf(beta)).min(0.5);
        let pair_step = (0.5 * c * self.delta_n.powf(beta)).min(0.5);
        let mut f = 1.0;
        if theta[0] {
            if y == self.z_minus1 {
                f += anchor_step;
            } else if y == self.z_0 {
                f -= anchor_step;
            }
        }
        if let Some(pos) = self.packing.iter().position(|&z| z == y) {
            // z_{2j-1} sits at position 2j-2 and z_{2j} at 2j-1.
            let j = pos / 2 + 1;
            if theta[j] {
                f += if pos % 2 == 0 { pair_step } else { -pair_step };
            }
        }
        Ok(f)
    }

    /// `P_θ = f_θ R`.
    pub fn p_theta(&self, theta: &[bool]) -> Result<DiscreteMeasure> {
        let weights = self
            .reference
            .iter()
            .map(|(y, r)| Ok(r * self.density(theta, y)?))
            .collect::<Result<Vec<f64>>>()?;
        DiscreteMeasure::new(self.reference.support().to_vec(), weights)
    }

    /// Classification instance with `P_X = P_θ` and `P_Y = P_θ'`.
    pub fn instance(&self, theta: &[bool], w: f64) -> Result<ClassificationInstance> {
        let p_x = self.p_theta(theta)?;
        let p_y = self.p_theta(&complement(theta))?;
        ClassificationInstance::new(
            self.points.clone(),
            p_x,
            p_y,
            self.kappa,
            w,
            self.smoothness,
        )
    }

    /// Runs every family check over all θ when `2^{d_n/2+1} <= max_thetas`,
    /// otherwise over `max_thetas` θ drawn uniformly from `rng`.
    pub fn audit<R: Rng + ?Sized>(
        &self,
        max_thetas: usize,
        rng: &mut R,
    ) -> Result<ClassificationFamilyAudit> {
        let len = self.theta_len();
        let exhaustive = len < 64 && (1u64 << len) <= max_thetas as u64;
        let thetas: Vec<Vec<bool>> = if exhaustive {
            all_thetas(len).collect()
        } else {
            (0..max_thetas).map(|_| random_theta(len, rng)).collect()
        };
        let SmoothnessSpec { beta, c } = self.smoothness;

        let weight_sum_error = (self.reference.weights().iter().sum::<f64>() - 1.0).abs();
        let weights_ok =
            weight_sum_error <= 1e-12 && self.reference.weights().iter().all(|&w| w >= 0.0);

        let support = self.reference.support();
        let mut density_min = f64::INFINITY;
        let mut density_max = f64::NEG_INFINITY;
        let mut tv_margin = f64::INFINITY;
        let mut holder_margin = f64::INFINITY;
        let mut kl_margin = f64::INFINITY;
        let kl_scale = 3.0 * c * self.delta_n.powf(beta);
        for theta in &thetas {
            let f: Vec<f64> = support
                .iter()
                .map(|&y| self.density(theta, y))
                .collect::<Result<_>>()?;
            for &v in &f {
                density_min = density_min.min(v);
                density_max = density_max.max(v);
            }
            let audit = holder_audit(&self.points, support, &f, self.smoothness, false);
            holder_margin = holder_margin.min(audit.worst_pair_margin);

            let p = self.p_theta(theta)?;
            let q = self.p_theta(&complement(theta))?;
            tv_margin = tv_margin.min(tv(&p, &q) - self.kappa);

            for l in 1..len {
                let mut on = theta.clone();
                on[l] = true;
                let mut off = theta.clone();
                off[l] = false;
                let div = kl(&self.p_theta(&on)?, &self.p_theta(&off)?);
                let bound = kl_scale * self.reference.weight_of(self.packing[2 * l - 1]);
                kl_margin = kl_margin.min(bound - div);
            }
        }
        let density_ok = density_min >= 0.5 && density_max <= 1.5;
        let tv_ok = tv_margin >= 0.0;
        let holder_ok = holder_margin >= -HOLDER_SLACK;
        let kl_ok = kl_margin >= 0.0;
        Ok(ClassificationFamilyAudit {
            thetas_checked: thetas.len(),
            exhaustive,
            weight_sum_error,
            weights_ok,
            density_min,
            density_max,
            density_ok,
            tv_margin,
            tv_ok,
            holder_margin,
            holder_ok,
            kl_margin,
            kl_ok,
            delta_in_regime: self.delta_n < 2f64.powf(-1.0 / beta) * self.m_0,
            passed: weights_ok && density_ok && tv_ok && holder_ok && kl_ok,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;
    use crate::rng::rng_from_seed;

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0), (-1f64).exp());
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert!((bump(0.5) - (-4.0f64 / 3.0).exp()).abs() < 1e-16);
        assert!((bump(0.5) - 0.263597).abs() < 1e-6);
        assert!(bump(0.999_999) < 1e-100);
    }

    #[test]
    fn bump_is_lipschitz_on_a_fine_grid() {
        let l = bump_lipschitz_bound();
        let k = 20_000;
        let ts: Vec<f64> = (0..=k).map(|i| -1.2 + 2.4 * i as f64 / k as f64).collect();
        for w in ts.windows(2) {
            assert!((bump(w[1]) - bump(w[0])).abs() <= l * (w[1] - w[0]) + 1e-15);
        }
    }

    fn line(n: usize, step: f64) -> PointSet {
        let vals: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        PointSet::constants(&vals, MetricSpec::Supremum).unwrap()
    }

    #[test]
    fn regression_family_worked_example() {
        // Four well separated centres, δ_n = 0.4, h_n = 0.1.
        let ps = line(4, 1.0);
        let spec = SmoothnessSpec::new(1.0, 1.0).unwrap();
        let fam = build_regression_family(&ps, 0.4, 0.1, spec).unwrap();
        assert_eq!(fam.m(), 4);
        assert_eq!(fam.h_n(), 0.1);
        let theta = vec![true, false, true, false];
        let got = fam.flip_sq_difference(&theta, 1).unwrap();
        let expected = 0.01 * 0.01 * (-2f64).exp() / 4.0;
        assert!((got - expected).abs() <= 1e-12 * expected);
        assert!((got - 3.383e-6).abs() < 1e-9);
        assert_eq!(fam.g_table(&[false; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn g_theta_point_values() {
        let ps = PointSet::constants(&[0.0, 0.05, 1.0, 2.0], MetricSpec::Supremum).unwrap();
        let spec = SmoothnessSpec::new(1.0, 1.0).unwrap();
        let fam = build_regression_family(&ps, 0.4, 0.1, spec).unwrap();
        assert_eq!(fam.centers(), &[0, 3, 2]);
        let theta = vec![true, false, false];
        let peak = 0.1 * 0.1 * (-1f64).exp();
        assert!((fam.g_at(&theta, 0).unwrap() - peak).abs() < 1e-18);
        // ρ = h_n / 2.
        let half = fam.g_at(&theta, 1).unwrap();
        assert!((half - 0.1 * 0.1 * (-4.0f64 / 3.0).exp()).abs() < 1e-15);
        assert_eq!(fam.g_at(&theta, 2).unwrap(), 0.0);
        assert!(fam.g_at(&[true], 0).is_err());
    }

    #[test]
    fn regression_family_rejects_large_amplitude() {
        let ps = line(5, 0.3);
        let spec = SmoothnessSpec::new(1.0, 1.0).unwrap();
        match build_regression_family(&ps, 0.25, 1e6, spec) {
            Err(Error::AmplitudeTooLarge { max_admissible, .. }) => {
                assert!(max_admissible > 0.0);
                build_regression_family(&ps, 0.25, max_admissible, spec).unwrap();
            }
            other => panic!("expected amplitude error, got {other:?}"),
        }
        let limit = regression_amplitude_limit(&ps, 0.25, spec, None).unwrap();
        assert!(build_regression_family(&ps, 0.25, limit * 1.01, spec).is_err());
    }

    #[test]
    fn single_centre_family_uses_index_zero() {
        let ps = line(5, 1.0);
        let spec = SmoothnessSpec::new(1.0, 1.0).unwrap();
        let fam = build_regression_family_with(&ps, 0.4, 0.1, spec, Some(1)).unwrap();
        assert_eq!(fam.centers(), &[0]);
    }

    fn class_pool() -> PointSet {
        // Three far anchors and a dense cluster around 0.
        let mut vals = vec![0.0, 10.0, 20.0];
        vals.extend((1..=8).map(|i| 0.3 * i as f64));
        PointSet::constants(&vals, MetricSpec::Supremum).unwrap()
    }

    #[test]
    fn classification_family_structure() {
        let ps = class_pool();
        let spec = SmoothnessSpec::new(1.0, 0.1).unwrap();
        let fam = build_classification_family(&ps, 0.05, spec, 0.25, None).unwrap();
        assert_eq!(fam.anchors(), [0, 1, 2]);
        assert_eq!(fam.cell_anchor(), 0);
        assert_eq!((fam.z_minus1(), fam.z_0()), (1, 2));
        assert_eq!(fam.big_m(), 5.0);
        assert_eq!(fam.m_0(), 5.0);
        assert!(fam.d_n().is_multiple_of(2) && fam.d_n() >= 2);
        let total: f64 = fam.reference().weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);

        let theta = vec![true; fam.theta_len()];
        assert_eq!(
            fam.density(&theta, fam.z_minus1()).unwrap(),
            1.0 + 0.1 * 5.0 / 2.0
        );
        for j in 0..fam.d_n() / 2 {
            let a = fam.density(&theta, fam.packing()[2 * j]).unwrap();
            let b = fam.density(&theta, fam.packing()[2 * j + 1]).unwrap();
            assert!((a + b - 2.0).abs() < 1e-15);
        }
        let f_int: f64 = fam
            .reference()
            .iter()
            .map(|(y, r)| r * fam.density(&theta, y).unwrap())
            .sum();
        assert!((f_int - 1.0).abs() < 1e-12);

        let audit = fam.audit(1 << 12, &mut rng_from_seed(0)).unwrap();
        assert!(audit.exhaustive);
        assert!(audit.delta_in_regime);
        assert!(audit.passed, "{audit:?}");
    }

    #[test]
    fn classification_family_errors() {
        let ps = class_pool();
        let spec = SmoothnessSpec::new(1.0, 0.1).unwrap();
        // κ must be below M_0^β C / 8 = 0.0625.
        assert!(matches!(
            build_classification_family(&ps, 0.07, spec, 0.25, None),
            Err(Error::KappaOutOfRange { .. })
        ));
        assert!(matches!(
            build_classification_family(&ps, 0.01, spec, 100.0, None),
            Err(Error::PackingTooSmall { .. })
        ));
        let two = line(2, 1.0);
        assert!(build_classification_family(&two, 0.01, spec, 0.1, None).is_err());
    }

    #[test]
    fn packing_cap_keeps_even_prefix() {
        let ps = class_pool();
        let spec = SmoothnessSpec::new(1.0, 0.1).unwrap();
        let fam = build_classification_family(&ps, 0.01, spec, 0.25, Some(3)).unwrap();
        assert_eq!(fam.d_n(), 2);
    }
}
