//! Numerical side of the study: fast map iteration, dynamical-aperture
//! scans, invariant level curves through the normalizing transform, the
//! apparent-convergence heuristic, and invariant-drift measurement.
//!
//! Iteration uses the exact closed form for the built-in quadratic map and a
//! compiled real-coefficient evaluator for truncated polynomial maps.  Grid
//! scans parallelize over points with results collected in grid order, so
//! survivor masks do not depend on the worker count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{point_to_complex, point_to_real};
use crate::geometry::{hausdorff_distance, polyline_self_intersects, Point2};
use crate::lie::{inverse_transform_coordinates, transform_coordinates, CoordinateMap, GeneratingSequence};
use crate::map::PolyMap;
use crate::normalform::NormalFormResult;
use crate::poly::Frame;

/// Hard overflow guard: beyond this the orbit counts as escaped regardless
/// of the escape square.
const OVERFLOW_RADIUS: f64 = 1e6;

/// A map that can be iterated quickly on real points.
#[derive(Debug, Clone)]
pub enum DynamicalMap {
    /// Closed-form quadratic map `(x, y) -> Lambda (x, y + x^2)`.
    ExactHenon { omega: f64 },
    /// A compiled truncated polynomial map.
    Compiled(CompiledPolyMap),
}

impl DynamicalMap {
    pub fn n_vars(&self) -> usize {
        match self {
            DynamicalMap::ExactHenon { .. } => 2,
            DynamicalMap::Compiled(c) => c.n_vars,
        }
    }

    pub fn step(&self, z: &mut [f64]) {
        match self {
            DynamicalMap::ExactHenon { omega } => {
                let (s, c) = omega.sin_cos();
                let u = z[0];
                let v = z[1] + z[0] * z[0];
                z[0] = c * u - s * v;
                z[1] = s * u + c * v;
            }
            DynamicalMap::Compiled(m) => m.step(z),
        }
    }
}

/// Real-frame polynomial map flattened for iteration: coefficient/exponent
/// arrays plus the rotation matrix.
#[derive(Debug, Clone)]
pub struct CompiledPolyMap {
    n_vars: usize,
    max_degree: usize,
    /// Per component of the inner nonlinearity: `(coefficient, exponents)`.
    terms: Vec<Vec<(f64, Vec<u32>)>>,
    rotation: Vec<Vec<f64>>,
}

impl CompiledPolyMap {
    /// Flatten a real-frame map.  Imaginary coefficient residue (roundoff
    /// from the complex-frame algebra) must be negligible.
    pub fn new(map: &PolyMap) -> Result<Self> {
        if map.frame() != Frame::Real {
            return Err(Error::FrameMismatch { expected: Frame::Real, got: map.frame() });
        }
        let n_vars = 2 * map.n_dof();
        let mut terms = vec![Vec::new(); n_vars];
        let mut scale = 0.0f64;
        let mut worst_im = 0.0f64;
        for piece in map.nonlinear() {
            for (j, comp) in piece.components().iter().enumerate() {
                for (idx, c) in comp.terms() {
                    scale = scale.max(c.norm());
                    worst_im = worst_im.max(c.im.abs());
                    terms[j].push((c.re, idx.0.clone()));
                }
            }
        }
        if worst_im > 1e-10 * scale.max(1.0) {
            return Err(Error::Invalid(format!(
                "map coefficients are not real: imaginary residue {worst_im:e}"
            )));
        }
        Ok(CompiledPolyMap {
            n_vars,
            max_degree: map.d_max(),
            terms,
            rotation: map.rotation().real_matrix(),
        })
    }

    fn step(&self, z: &mut [f64]) {
        // Power tables per variable.
        let mut pows: Vec<Vec<f64>> = Vec::with_capacity(self.n_vars);
        for &zi in z.iter() {
            let mut p = Vec::with_capacity(self.max_degree + 1);
            p.push(1.0);
            for d in 1..=self.max_degree {
                let prev = p[d - 1];
                p.push(prev * zi);
            }
            pows.push(p);
        }
        let mut inner: Vec<f64> = z.to_vec();
        for (j, comp_terms) in self.terms.iter().enumerate() {
            let mut acc = 0.0;
            for (coeff, exps) in comp_terms {
                let mut m = *coeff;
                for (v, &e) in exps.iter().enumerate() {
                    m *= pows[v][e as usize];
                }
                acc += m;
            }
            inner[j] += acc;
        }
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = self.rotation[i].iter().zip(&inner).map(|(r, w)| r * w).sum();
        }
    }
}

/// Outcome of iterating one initial point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub survived: bool,
    /// First step (1-based) at which the orbit left the square, if any.
    pub escape_time: Option<usize>,
    pub final_point: Vec<f64>,
}

/// Iterate `z0` for `n_steps`, flagging escape from `[-l, l]^{2n}`.
pub fn iterate(map: &DynamicalMap, z0: &[f64], n_steps: usize, l: f64) -> OrbitSummary {
    assert!(n_steps >= 1 && l > 0.0);
    let mut z = z0.to_vec();
    for step in 1..=n_steps {
        map.step(&mut z);
        let sup = z.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if sup > l || sup > OVERFLOW_RADIUS || !sup.is_finite() {
            return OrbitSummary { survived: false, escape_time: Some(step), final_point: z };
        }
    }
    OrbitSummary { survived: true, escape_time: None, final_point: z }
}

/// Square grid of initial conditions, `points_per_side^2` points with
/// endpoints on the boundary of `[-half_side, half_side]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_side: f64,
    pub points_per_side: usize,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    pub fn is_empty(&self) -> bool {
        self.points_per_side == 0
    }

    /// Point at row-major index `iy * m + ix`.
    pub fn point(&self, index: usize) -> Point2 {
        let m = self.points_per_side;
        let (iy, ix) = (index / m, index % m);
        [self.coord(ix), self.coord(iy)]
    }

    fn coord(&self, i: usize) -> f64 {
        let m = self.points_per_side;
        if m <= 1 {
            0.0
        } else {
            -self.half_side + 2.0 * self.half_side * i as f64 / (m - 1) as f64
        }
    }
}

/// Survival mask of a grid scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApertureResult {
    pub grid: GridSpec,
    pub n_steps: usize,
    pub escape_half_side: f64,
    /// Aligned with the grid's row-major indexing.
    pub survived: Vec<bool>,
    pub escape_times: Vec<Option<usize>>,
}

impl ApertureResult {
    pub fn survivor_count(&self) -> usize {
        self.survived.iter().filter(|&&s| s).count()
    }

    pub fn survivors(&self) -> impl Iterator<Item = Point2> + '_ {
        self.survived
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.grid.point(i))
    }
}

/// Iterate every grid point; embarrassingly parallel, deterministic mask.
pub fn dynamical_aperture(
    map: &DynamicalMap,
    grid: GridSpec,
    n_steps: usize,
    escape_half_side: f64,
) -> ApertureResult {
    assert!(
        grid.half_side <= escape_half_side,
        "grid must fit inside the escape square"
    );
    let outcomes: Vec<(bool, Option<usize>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            let summary = iterate(map, &p, n_steps, escape_half_side);
            (summary.survived, summary.escape_time)
        })
        .collect();
    ApertureResult {
        grid,
        n_steps,
        escape_half_side,
        survived: outcomes.iter().map(|o| o.0).collect(),
        escape_times: outcomes.into_iter().map(|o| o.1).collect(),
    }
}

/// A level curve of the invariant function in original coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurve {
    pub rho: f64,
    pub r_used: usize,
    /// Closed polyline, `samples[0] == samples[last]`.
    pub samples: Vec<Point2>,
    pub self_intersecting: bool,
    pub max_circle_deviation: f64,
}

/// The normalizing point transformation truncated at order `r_used`,
/// realized once and reused across curves.
pub struct RealizedTransform {
    r_used: usize,
    forward: CoordinateMap,
}

impl RealizedTransform {
    pub fn forward(nf: &NormalFormResult, r_used: usize) -> Result<Self> {
        if r_used > nf.order_r {
            return Err(Error::Invalid(format!(
                "transform order {} exceeds normalization order {}",
                r_used, nf.order_r
            )));
        }
        let gens = truncated_generators(&nf.transform_generators()?, r_used);
        Ok(RealizedTransform {
            r_used,
            forward: transform_coordinates(&gens, r_used + 1),
        })
    }

    /// Original coordinates of a normalized-frame real point.
    pub fn apply_real(&self, z_normalized: Point2) -> Point2 {
        let zeta = point_to_complex(&z_normalized);
        let image = self.forward.eval(&zeta);
        let real = point_to_real(&image);
        [real[0].re, real[1].re]
    }
}

fn truncated_generators(seq: &GeneratingSequence, r_used: usize) -> GeneratingSequence {
    let mut out = GeneratingSequence::new(seq.n_dof(), seq.frame(), r_used.max(1));
    for (s, v) in seq.orders() {
        if s <= r_used {
            out.insert(s, v.clone()).expect("validated entries");
        }
    }
    out
}

/// Circle of radius `rho` in normalized coordinates pushed through the
/// truncated transform.
pub fn level_curve(
    nf: &NormalFormResult,
    rho: f64,
    r_used: usize,
    n_samples: usize,
) -> Result<LevelCurve> {
    let transform = RealizedTransform::forward(nf, r_used)?;
    Ok(level_curve_with(&transform, rho, n_samples))
}

/// Same, reusing an already-realized transform.
pub fn level_curve_with(
    transform: &RealizedTransform,
    rho: f64,
    n_samples: usize,
) -> LevelCurve {
    assert!(rho > 0.0 && n_samples >= 64);
    let mut samples: Vec<Point2> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
            transform.apply_real([rho * t.cos(), rho * t.sin()])
        })
        .collect();
    samples.push(samples[0]);
    let self_intersecting = polyline_self_intersects(&samples);
    let max_circle_deviation = samples
        .iter()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - rho).abs())
        .fold(0.0, f64::max);
    LevelCurve {
        rho,
        r_used: transform.r_used,
        samples,
        self_intersecting,
        max_circle_deviation,
    }
}

/// One `(rho, r)` cell of the apparent-convergence table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanCell {
    pub rho: f64,
    pub r: usize,
    pub has_loop: bool,
    /// Hausdorff distance to the curve at the previous order in the list.
    pub dist_to_prev: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceScan {
    pub threshold: f64,
    pub target_r: usize,
    pub cells: Vec<ScanCell>,
    /// Per `rho`: the largest prefix order with no loop and curve-to-curve
    /// distance under the threshold (the apparent-convergence interval).
    pub apparent_r: Vec<(f64, Option<usize>)>,
    /// Largest `rho` whose interval contains `target_r`.
    pub recommended_rho: Option<f64>,
}

/// Tabulate loops and curve distances over a `(rho, r)` grid and apply the
/// safe-radius heuristic.
pub fn apparent_convergence_scan(
    nf: &NormalFormResult,
    rho_list: &[f64],
    r_list: &[usize],
    n_samples: usize,
    threshold: f64,
    target_r: usize,
) -> Result<ConvergenceScan> {
    if r_list.is_empty() || rho_list.is_empty() {
        return Err(Error::Invalid("scan needs non-empty rho and r lists".into()));
    }
    if !r_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Invalid("r list must be strictly ascending".into()));
    }
    let transforms = r_list
        .iter()
        .map(|&r| RealizedTransform::forward(nf, r))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(rho_list.len() * r_list.len());
    let mut apparent_r = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        let curves: Vec<LevelCurve> = transforms
            .iter()
            .map(|t| level_curve_with(t, rho, n_samples))
            .collect();
        let mut best: Option<usize> = None;
        let mut intact = true;
        for (i, curve) in curves.iter().enumerate() {
            let dist = (i > 0)
                .then(|| hausdorff_distance(&curve.samples, &curves[i - 1].samples));
            let ok = !curve.self_intersecting && dist.map_or(true, |d| d <= threshold);
            if intact && ok {
                best = Some(r_list[i]);
            } else {
                intact = false;
            }
            cells.push(ScanCell {
                rho,
                r: r_list[i],
                has_loop: curve.self_intersecting,
                dist_to_prev: dist,
            });
        }
        apparent_r.push((rho, best));
    }
    // Largest rho whose interval reaches the target order; ties cannot occur
    // across distinct rho values, and equal candidates resolve to the last
    // (largest) listed.
    let recommended_rho = apparent_r
        .iter()
        .filter(|(_, best)| best.map_or(false, |b| b >= target_r))
        .map(|(rho, _)| *rho)
        .fold(None, |acc: Option<f64>, rho| Some(acc.map_or(rho, |a: f64| a.max(rho))));
    Ok(ConvergenceScan { threshold, target_r, cells, apparent_r, recommended_rho })
}

/// Per-step action changes seen through the inverse normalizing transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftSeries {
    pub r_used: usize,
    pub initial_action: f64,
    pub drifts: Vec<f64>,
    pub max_drift: f64,
}

/// Pull an orbit back to normalized coordinates and record `|I(t) - I(t-1)|`.
pub fn invariant_drift(
    nf: &NormalFormResult,
    map: &DynamicalMap,
    z0: Point2,
    n_steps: usize,
    r_used: usize,
) -> Result<DriftSeries> {
    if r_used > nf.order_r {
        return Err(Error::Invalid(format!(
            "transform order {} exceeds normalization order {}",
            r_used, nf.order_r
        )));
    }
    let gens = truncated_generators(&nf.transform_generators()?, r_used);
    let inverse = inverse_transform_coordinates(&gens, r_used + 1);
    let action = |z: &[f64]| -> f64 {
        let zeta = point_to_complex(z);
        let back = inverse.eval(&zeta);
        let real = point_to_real(&back);
        (real[0].re * real[0].re + real[1].re * real[1].re) / 2.0
    };
    let mut z = z0.to_vec();
    let mut prev = action(&z);
    let initial_action = prev;
    let mut drifts = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        map.step(&mut z);
        let cur = action(&z);
        drifts.push((cur - prev).abs());
        prev = cur;
    }
    let max_drift = drifts.iter().fold(0.0f64, |m, &d| m.max(d));
    Ok(DriftSeries { r_used, initial_action, drifts, max_drift })
}
