//! Functional data points, the supremum and L_p metrics, and distance
//! matrices over finite point sets.
//!
//! A [`SampledFunction`] is a curve on `[0, 1]` known only through its values
//! on a strictly increasing grid. All points taking part in one computation
//! must share the same grid; the library never resamples.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Strictly increasing abscissae in `[0, 1]` together with their trapezoidal
/// quadrature weights.
#[derive(Clone)]
pub struct Grid {
    abscissae: Arc<[f64]>,
    weights: Arc<[f64]>,
}

impl Grid {
    pub fn new(abscissae: Vec<f64>) -> Result<Self> {
        if abscissae.is_empty() {
            return Err(Error::EmptyInput("grid has no abscissae".into()));
        }
        if abscissae.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("grid abscissae must be finite".into()));
        }
        if abscissae[0] < 0.0 || abscissae[abscissae.len() - 1] > 1.0 {
            return Err(Error::Domain("grid must lie inside [0, 1]".into()));
        }
        if abscissae.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid must be strictly increasing".into()));
        }
        let weights = trapezoid_weights(&abscissae);
        Ok(Self {
            abscissae: abscissae.into(),
            weights: weights.into(),
        })
    }

    /// `m` equally spaced abscissae `0, 1/(m-1), .., 1`.
    pub fn uniform(m: usize) -> Result<Self> {
        match m {
            0 => Err(Error::EmptyInput("grid size must be positive".into())),
            1 => Self::new(vec![0.0]),
            _ => {
                let last = (m - 1) as f64;
                Self::new((0..m).map(|i| i as f64 / last).collect())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoidal integral of the sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.abscissae, &other.abscissae) || self.abscissae == other.abscissae
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Grid").field(&self.abscissae).finish()
    }
}

fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let m = t.len();
    if m == 1 {
        return vec![0.0];
    }
    (0..m)
        .map(|i| {
            let left = if i == 0 { t[0] } else { t[i - 1] };
            let right = if i == m - 1 { t[m - 1] } else { t[i + 1] };
            0.5 * (right - left)
        })
        .collect()
}

/// A functional datum: finite values on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at grid index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.abscissae().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoidal mean over the grid span.
    pub fn mean(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Pointwise average `(self + other) / 2`.
    pub fn midpoint(&self, other: &SampledFunction) -> Result<SampledFunction> {
        check_grids(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        SampledFunction::new(self.grid.clone(), values)
    }
}

fn check_grids(f: &SampledFunction, g: &SampledFunction) -> Result<()> {
    if f.grid.same_as(&g.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids of length {} and {} differ",
            f.grid.len(),
            g.grid.len()
        )))
    }
}

/// Which metric to put on sampled curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    Supremum,
    /// `(∫ |f - g|^p)^{1/p}` by trapezoidal quadrature.
    Lp {
        p: f64,
    },
}

impl MetricSpec {
    pub fn lp(p: f64) -> Result<Self> {
        let m = MetricSpec::Lp { p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricSpec::Supremum => Ok(()),
            MetricSpec::Lp { p } if p.is_finite() && p >= 1.0 => Ok(()),
            MetricSpec::Lp { p } => Err(Error::Domain(format!(
                "L_p exponent must satisfy p >= 1, got {p}"
            ))),
        }
    }

    /// Parse `sup`, `l1`, `l2` or `lp:<p>`.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "sup" | "supremum" => Ok(MetricSpec::Supremum),
            "l1" => Ok(MetricSpec::Lp { p: 1.0 }),
            "l2" => Ok(MetricSpec::Lp { p: 2.0 }),
            other => {
                let p = other
                    .strip_prefix("lp:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Domain(format!(
                            "unknown metric `{s}` (expected sup, l1, l2 or lp:<p>)"
                        ))
                    })?;
                MetricSpec::lp(p)
            }
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Supremum => write!(f, "sup"),
            MetricSpec::Lp { p } if *p == 1.0 => write!(f, "l1"),
            MetricSpec::Lp { p } if *p == 2.0 => write!(f, "l2"),
            MetricSpec::Lp { p } => write!(f, "lp:{p}"),
        }
    }
}

/// Distance between two curves on the same grid.
pub fn distance(f: &SampledFunction, g: &SampledFunction, metric: MetricSpec) -> Result<f64> {
    check_grids(f, g)?;
    metric.validate()?;
    let diffs = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs());
    let d = match metric {
        MetricSpec::Supremum => diffs.fold(0.0, f64::max),
        MetricSpec::Lp { p } => {
            if f.grid.len() < 2 {
                return Err(Error::Domain(
                    "L_p distance needs at least two grid points".into(),
                ));
            }
            let w = f.grid.weights();
            if p == 1.0 {
                diffs.zip(w).map(|(d, w)| w * d).sum()
            } else if p == 2.0 {
                diffs.zip(w).map(|(d, w)| w * d * d).sum::<f64>().sqrt()
            } else {
                diffs
                    .zip(w)
                    .map(|(d, w)| w * d.powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        }
    };
    Ok(d)
}

/// Dense symmetric matrix of pairwise distances, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// A finite ordered collection of curves under one metric, with a lazily
/// filled distance-matrix cache.
#[derive(Debug)]
pub struct PointSet {
    points: Vec<SampledFunction>,
    metric: MetricSpec,
    cache: OnceLock<DistanceMatrix>,
}

impl Clone for PointSet {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(m) = self.cache.get() {
            let _ = cache.set(m.clone());
        }
        Self {
            points: self.points.clone(),
            metric: self.metric,
            cache,
        }
    }
}

impl PointSet {
    pub fn new(points: Vec<SampledFunction>, metric: MetricSpec) -> Result<Self> {
        metric.validate()?;
        if let Some(first) = points.first() {
            for (i, p) in points.iter().enumerate().skip(1) {
                if !p.grid.same_as(&first.grid) {
                    return Err(Error::GridMismatch(format!(
                        "point {i} does not share the grid of point 0"
                    )));
                }
            }
            if matches!(metric, MetricSpec::Lp { .. }) && first.grid.len() < 2 {
                return Err(Error::Domain(
                    "L_p distance needs at least two grid points".into(),
                ));
            }
        }
        Ok(Self {
            points,
            metric,
            cache: OnceLock::new(),
        })
    }

    /// Points that are constant functions `c` on a two-point grid `{0, 1}`.
    /// Handy for hand-checkable fixtures: every metric reduces to `|a - b|`.
    pub fn constants(values: &[f64], metric: MetricSpec) -> Result<Self> {
        let grid = Grid::new(vec![0.0, 1.0])?;
        let points = values
            .iter()
            .map(|&c| SampledFunction::constant(grid.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, metric)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SampledFunction] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &SampledFunction {
        &self.points[i]
    }

    pub fn metric(&self) -> MetricSpec {
        self.metric
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.points.first().map(|p| &p.grid)
    }

    /// Cached distance matrix, filled sequentially on first use.
    pub fn distance_matrix(&self) -> &DistanceMatrix {
        self.distance_matrix_with(Exec::Sequential)
    }

    /// Cached distance matrix; a first fill is row-parallel under
    /// [`Exec::Parallel`]. The result does not depend on `exec`.
    pub fn distance_matrix_with(&self, exec: Exec) -> &DistanceMatrix {
        self.cache
            .get_or_init(|| compute_matrix(&self.points, self.metric, exec))
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distance_matrix().get(i, j)
    }

    /// Distances from an arbitrary curve to every point of the set.
    pub fn distances_to(&self, x: &SampledFunction) -> Result<Vec<f64>> {
        self.points
            .iter()
            .map(|p| distance(x, p, self.metric))
            .collect()
    }

    /// New set holding the selected points (in the given order).
    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        PointSet {
            points,
            metric: self.metric,
            cache: OnceLock::new(),
        }
    }
}

fn compute_matrix(points: &[SampledFunction], metric: MetricSpec, exec: Exec) -> DistanceMatrix {
    let n = points.len();
    // Grids and metric were validated when the set was built.
    let upper = exec.map_indexed(n, |i| {
        ((i + 1)..n)
            .map(|j| distance(&points[i], &points[j], metric).expect("validated point set"))
            .collect::<Vec<f64>>()
    });
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (k, &d) in row.iter().enumerate() {
            let j = i + 1 + k;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_of_constant_shift() {
        let grid = Grid::uniform(17).unwrap();
        let f = SampledFunction::constant(grid.clone(), 0.0).unwrap();
        let g = SampledFunction::constant(grid, 2.5).unwrap();
        assert_eq!(distance(&f, &g, MetricSpec::Supremum).unwrap(), 2.5);
    }

    #[test]
    fn l1_of_unit_constant() {
        let grid = Grid::uniform(101).unwrap();
        let f = SampledFunction::constant(grid.clone(), 0.0).unwrap();
        let g = SampledFunction::constant(grid, 1.0).unwrap();
        let d = distance(&f, &g, MetricSpec::Lp { p: 1.0 }).unwrap();
        assert!((d - 1.0).abs() < 1e-14, "{d}");
    }

    #[test]
    fn l2_of_identity_matches_closed_form() {
        // ∫_0^1 t^2 dt = 1/3.
        let grid = Grid::uniform(1001).unwrap();
        let f = SampledFunction::from_fn(grid.clone(), |t| t).unwrap();
        let g = SampledFunction::constant(grid, 0.0).unwrap();
        let d = distance(&f, &g, MetricSpec::Lp { p: 2.0 }).unwrap();
        assert!((d - (1.0f64 / 3.0).sqrt()).abs() < 1e-4, "{d}");
    }

    #[test]
    fn grid_mismatch_is_refused() {
        let f = SampledFunction::constant(Grid::uniform(5).unwrap(), 0.0).unwrap();
        let g = SampledFunction::constant(Grid::uniform(6).unwrap(), 0.0).unwrap();
        assert!(matches!(
            distance(&f, &g, MetricSpec::Supremum),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            PointSet::new(vec![f, g], MetricSpec::Supremum),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let grid = Grid::uniform(3).unwrap();
        assert!(matches!(
            SampledFunction::new(grid, vec![0.0, f64::NAN, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
        assert!(Grid::new(vec![-0.1, 0.5]).is_err());
        assert!(Grid::new(vec![0.5, 1.1]).is_err());
    }

    #[test]
    fn lp_exponent_below_one_rejected() {
        assert!(MetricSpec::lp(0.5).is_err());
        assert!(MetricSpec::parse("lp:0.5").is_err());
        assert_eq!(
            MetricSpec::parse("lp:3").unwrap(),
            MetricSpec::Lp { p: 3.0 }
        );
        assert_eq!(MetricSpec::parse("sup").unwrap(), MetricSpec::Supremum);
    }

    #[test]
    fn single_point_matrix() {
        let ps = PointSet::constants(&[4.0], MetricSpec::Supremum).unwrap();
        assert_eq!(ps.distance_matrix().row(0), &[0.0]);
    }

    #[test]
    fn two_point_matrix() {
        let ps = PointSet::constants(&[0.0, 1.5], MetricSpec::Lp { p: 2.0 }).unwrap();
        let m = ps.distance_matrix();
        assert_eq!(m.row(0), &[0.0, 1.5]);
        assert_eq!(m.row(1), &[1.5, 0.0]);
    }

    #[test]
    fn collinear_constants_are_tight() {
        let ps = PointSet::constants(&[0.0, 1.0, 3.0], MetricSpec::Supremum).unwrap();
        assert_eq!(ps.dist(0, 1), 1.0);
        assert_eq!(ps.dist(1, 2), 2.0);
        assert_eq!(ps.dist(0, 2), 3.0);
        assert_eq!(ps.dist(0, 2), ps.dist(0, 1) + ps.dist(1, 2));
    }

    #[test]
    fn parallel_fill_is_bit_identical() {
        let grid = Grid::uniform(33).unwrap();
        let points: Vec<_> = (0..40)
            .map(|k| SampledFunction::from_fn(grid.clone(), |t| (t * k as f64).sin()).unwrap())
            .collect();
        let a = PointSet::new(points.clone(), MetricSpec::Lp { p: 3.0 }).unwrap();
        let b = PointSet::new(points, MetricSpec::Lp { p: 3.0 }).unwrap();
        assert_eq!(
            a.distance_matrix_with(Exec::Sequential),
            b.distance_matrix_with(Exec::Parallel)
        );
    }
}
