//! Target potentials `U` on `R^d`, with analytic gradients.
//!
//! A target density is `pi ∝ exp(-U)`. Every shipped model has its minimiser
//! at the origin, so `gradient(0) = 0` holds exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::reference_moment_double_well;

/// Default Ginzburg–Landau temperature-like coupling.
pub const DEFAULT_GL_TAU: f64 = 2.0;
/// Default Ginzburg–Landau neighbour coupling.
pub const DEFAULT_GL_ALPHA: f64 = 0.1;
/// Default Ginzburg–Landau quartic coupling.
pub const DEFAULT_GL_LAMBDA: f64 = 0.5;

/// Coarse classification, used where a drift is only valid for one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Gaussian,
    DoubleWell,
    GinzburgLandau,
    Custom,
}

/// A differentiable potential. Implementations must be pure.
pub trait Potential: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    /// `U(x)`. `x.len()` equals [`Potential::dimension`].
    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇U(x)` into `out`. Both slices have length [`Potential::dimension`].
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn family(&self) -> ModelFamily {
        ModelFamily::Custom
    }
}

/// A known moment `E[x_coordinate^order]` of the target with its accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMoment {
    pub coordinate: usize,
    pub order: u32,
    pub value: f64,
    pub tolerance: f64,
}

/// A named potential together with its known reference moments.
///
/// Cheap to clone; the potential is shared behind an `Arc` and never mutated.
#[derive(Debug, Clone)]
pub struct TargetModel {
    name: String,
    potential: Arc<dyn Potential>,
    reference_moments: Vec<ReferenceMoment>,
}

impl TargetModel {
    pub fn new(
        name: impl Into<String>,
        potential: Arc<dyn Potential>,
        reference_moments: Vec<ReferenceMoment>,
    ) -> Self {
        Self {
            name: name.into(),
            potential,
            reference_moments,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.potential.dimension()
    }

    pub fn family(&self) -> ModelFamily {
        self.potential.family()
    }

    pub fn reference_moments(&self) -> &[ReferenceMoment] {
        &self.reference_moments
    }

    pub fn reference_moment(&self, coordinate: usize, order: u32) -> Option<ReferenceMoment> {
        self.reference_moments
            .iter()
            .find(|m| m.coordinate == coordinate && m.order == order)
            .copied()
    }

    /// Evaluates `U(x)`, checking the dimension.
    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        self.check_dimension(x)?;
        Ok(self.potential.value(x))
    }

    /// Evaluates `∇U(x)`, checking the dimension.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dimension(x)?;
        let mut out = vec![0.0; x.len()];
        self.potential.gradient_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked `U(x)` for hot loops.
    #[inline]
    pub fn potential_unchecked(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension());
        self.potential.value(x)
    }

    /// Unchecked `∇U(x)` for hot loops.
    #[inline]
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension());
        debug_assert_eq!(out.len(), self.dimension());
        self.potential.gradient_into(x, out);
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, model {} has dimension {}",
                x.len(),
                self.name,
                self.dimension()
            )));
        }
        Ok(())
    }
}

/// Centred Gaussian with diagonal covariance: `U(x) = ½ Σ x_i² / σ_i²`.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    inv_variances: Vec<f64>,
}

impl Potential for DiagonalGaussian {
    fn dimension(&self) -> usize {
        self.inv_variances.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.inv_variances)
            .map(|(xi, p)| xi * xi * p)
            .sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), p) in out.iter_mut().zip(x).zip(&self.inv_variances) {
            *o = xi * p;
        }
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::Gaussian
    }
}

/// `U(x) = ¼‖x‖⁴ − ½‖x‖²`, with `∇U(x) = (‖x‖² − 1) x`.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    dimension: usize,
}

impl Potential for DoubleWell {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2 = crate::norm_sq(x);
        0.25 * r2 * r2 - 0.5 * r2
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let scale = crate::norm_sq(x) - 1.0;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::DoubleWell
    }
}

/// Site `(i, j, k)` on a periodic cubic lattice of side `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub side: usize,
}

impl LatticeIndex {
    /// Row-major flat index: `(i * p + j) * p + k`.
    pub fn flat(&self) -> usize {
        (self.i * self.side + self.j) * self.side + self.k
    }

    pub fn from_flat(index: usize, side: usize) -> Self {
        Self {
            i: index / (side * side),
            j: (index / side) % side,
            k: index % side,
            side,
        }
    }

    /// Neighbour shifted by `delta ∈ {-1, +1}` along `axis ∈ {0, 1, 2}`, wrapping mod p.
    pub fn shifted(&self, axis: usize, delta: isize) -> Self {
        let wrap = |c: usize| (c as isize + delta).rem_euclid(self.side as isize) as usize;
        let mut out = *self;
        match axis {
            0 => out.i = wrap(self.i),
            1 => out.j = wrap(self.j),
            2 => out.k = wrap(self.k),
            _ => panic!("lattice axis {axis} out of range"),
        }
        out
    }
}

/// Ginzburg–Landau field on a `p × p × p` periodic lattice.
///
/// `U(x) = Σ_s { (1−τ)/2 x_s² + τα/2 Σ_axes (x_{s+e} − x_s)² + τλ/4 x_s⁴ }`.
#[derive(Debug, Clone)]
pub struct GinzburgLandau {
    side: usize,
    tau: f64,
    alpha: f64,
    lambda: f64,
    // For each site, the flat indices of its +1 neighbour along each axis,
    // followed by the -1 neighbours.
    neighbours: Vec<[usize; 6]>,
}

impl GinzburgLandau {
    pub fn side(&self) -> usize {
        self.side
    }
}

impl Potential for GinzburgLandau {
    fn dimension(&self) -> usize {
        self.neighbours.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let quad = 0.5 * (1.0 - self.tau);
        let grad = 0.5 * self.tau * self.alpha;
        let quart = 0.25 * self.tau * self.lambda;
        x.iter()
            .zip(&self.neighbours)
            .map(|(&xs, nb)| {
                let diffs: f64 = nb[..3].iter().map(|&n| (x[n] - xs).powi(2)).sum();
                let x2 = xs * xs;
                quad * x2 + grad * diffs + quart * x2 * x2
            })
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let ta = self.tau * self.alpha;
        let tl = self.tau * self.lambda;
        let lin = 1.0 - self.tau;
        for ((o, &xs), nb) in out.iter_mut().zip(x).zip(&self.neighbours) {
            let sum_nb: f64 = nb.iter().map(|&n| x[n]).sum();
            *o = ta * (6.0 * xs - sum_nb) + lin * xs + tl * xs * xs * xs;
        }
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::GinzburgLandau
    }
}

/// Centred Gaussian with covariance `diag(variances)`.
pub fn make_gaussian(variances: &[f64]) -> Result<TargetModel> {
    if variances.is_empty() {
        return Err(Error::InvalidParameter(
            "gaussian needs at least one variance".into(),
        ));
    }
    if let Some((i, v)) = variances
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "variance {i} must be positive and finite, got {v}"
        )));
    }
    let reference_moments = variances
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| {
            [
                ReferenceMoment {
                    coordinate: i,
                    order: 1,
                    value: 0.0,
                    tolerance: 0.0,
                },
                ReferenceMoment {
                    coordinate: i,
                    order: 2,
                    value: v,
                    tolerance: 0.0,
                },
            ]
        })
        .collect();
    let potential = DiagonalGaussian {
        inv_variances: variances.iter().map(|v| 1.0 / v).collect(),
    };
    Ok(TargetModel::new(
        "gaussian",
        Arc::new(potential),
        reference_moments,
    ))
}

/// Gaussian with covariance `diag(1, 2, …, d)`.
pub fn make_linear_gaussian(dimension: usize) -> Result<TargetModel> {
    let variances: Vec<f64> = (1..=dimension).map(|i| i as f64).collect();
    make_gaussian(&variances)
}

/// Gaussian with covariance `diag(smallest, 1, …, 1)`.
pub fn make_ill_conditioned_gaussian(dimension: usize, smallest: f64) -> Result<TargetModel> {
    if dimension < 2 {
        return Err(Error::InvalidParameter(
            "ill-conditioned gaussian needs dimension >= 2".into(),
        ));
    }
    let mut variances = vec![1.0; dimension];
    variances[0] = smallest;
    let mut model = make_gaussian(&variances)?;
    model.name = "ill_conditioned_gaussian".into();
    Ok(model)
}

/// Double well `U(x) = ¼‖x‖⁴ − ½‖x‖²`; second moments come from the radial quadrature oracle.
pub fn make_double_well(dimension: usize) -> Result<TargetModel> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "double well needs dimension >= 1".into(),
        ));
    }
    let second = reference_moment_double_well(dimension, 2)?;
    let reference_moments = (0..dimension)
        .flat_map(|i| {
            [
                ReferenceMoment {
                    coordinate: i,
                    order: 1,
                    value: 0.0,
                    tolerance: 0.0,
                },
                ReferenceMoment {
                    coordinate: i,
                    order: 2,
                    value: second,
                    tolerance: 1e-4,
                },
            ]
        })
        .collect();
    Ok(TargetModel::new(
        "double_well",
        Arc::new(DoubleWell { dimension }),
        reference_moments,
    ))
}

/// Ginzburg–Landau lattice of side `side` (dimension `side³`).
///
/// Only first moments are known (zero, since `U` is even).
pub fn make_ginzburg_landau(side: usize, tau: f64, alpha: f64, lambda: f64) -> Result<TargetModel> {
    if side < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice side must be >= 2, got {side}"
        )));
    }
    for (name, v) in [("tau", tau), ("alpha", alpha), ("lambda", lambda)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let dimension = side * side * side;
    let neighbours = (0..dimension)
        .map(|s| {
            let site = LatticeIndex::from_flat(s, side);
            let mut nb = [0usize; 6];
            for axis in 0..3 {
                nb[axis] = site.shifted(axis, 1).flat();
                nb[axis + 3] = site.shifted(axis, -1).flat();
            }
            nb
        })
        .collect();
    let reference_moments = (0..dimension)
        .map(|i| ReferenceMoment {
            coordinate: i,
            order: 1,
            value: 0.0,
            tolerance: 0.0,
        })
        .collect();
    let potential = GinzburgLandau {
        side,
        tau,
        alpha,
        lambda,
        neighbours,
    };
    Ok(TargetModel::new(
        "ginzburg_landau",
        Arc::new(potential),
        reference_moments,
    ))
}

/// Evaluates `U(x)`.
pub fn eval_potential(model: &TargetModel, x: &[f64]) -> Result<f64> {
    model.potential(x)
}

/// Evaluates `∇U(x)`.
pub fn eval_gradient(model: &TargetModel, x: &[f64]) -> Result<Vec<f64>> {
    model.gradient(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    // Centred finite differences, h = 1e-5 * max(1, |x_i|).
    fn fd_gradient(model: &TargetModel, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = 1e-5 * x[i].abs().max(1.0);
                y[i] = x[i] + h;
                let up = model.potential(&y).unwrap();
                y[i] = x[i] - h;
                let down = model.potential(&y).unwrap();
                y[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn fd_relative_error(model: &TargetModel, x: &[f64]) -> f64 {
        let g = model.gradient(x).unwrap();
        let fd = fd_gradient(model, x);
        let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        g.iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    }

    fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
        (0..d)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn models() -> Vec<TargetModel> {
        vec![
            make_gaussian(&[1.0, 2.0, 0.5]).unwrap(),
            make_linear_gaussian(20).unwrap(),
            make_ill_conditioned_gaussian(10, 1e-5).unwrap(),
            make_double_well(1).unwrap(),
            make_double_well(20).unwrap(),
            make_ginzburg_landau(3, DEFAULT_GL_TAU, DEFAULT_GL_ALPHA, DEFAULT_GL_LAMBDA).unwrap(),
            make_ginzburg_landau(2, 0.7, 1.3, 0.2).unwrap(),
        ]
    }

    #[test]
    fn gaussian_gradient_example() {
        let m = make_gaussian(&[1.0, 2.0]).unwrap();
        assert_eq!(m.gradient(&[1.0, 1.0]).unwrap(), vec![1.0, 0.5]);
        assert!(fd_relative_error(&m, &[1.0, 1.0]) < 1e-8);
        assert_eq!(m.potential(&[2.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn gaussian_reference_moments() {
        let m = make_linear_gaussian(100).unwrap();
        assert_eq!(m.dimension(), 100);
        for i in 0..100 {
            assert_eq!(m.reference_moment(i, 2).unwrap().value, (i + 1) as f64);
            assert_eq!(m.reference_moment(i, 1).unwrap().value, 0.0);
        }
    }

    #[test]
    fn gaussian_rejects_bad_variance() {
        assert!(matches!(
            make_gaussian(&[1.0, 0.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(make_gaussian(&[1.0, -2.0]).is_err());
        assert!(make_gaussian(&[f64::NAN]).is_err());
        assert!(make_gaussian(&[]).is_err());
    }

    #[test]
    fn double_well_examples() {
        let m = make_double_well(100).unwrap();
        let mut x = vec![0.0; 100];
        assert!(m.gradient(&x).unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(m.potential(&x).unwrap(), 0.0);
        x[0] = 1.0;
        assert!(m.gradient(&x).unwrap().iter().all(|&g| g == 0.0));
        x[0] = 2.0;
        let g = m.gradient(&x).unwrap();
        assert_eq!(g[0], 6.0);
        assert!(g[1..].iter().all(|&v| v == 0.0));
        assert!(fd_relative_error(&m, &x) < 1e-8);
        assert_eq!(m.potential(&x).unwrap(), 2.0);
    }

    #[test]
    fn ginzburg_landau_constant_field() {
        let (tau, alpha, lambda) = (DEFAULT_GL_TAU, DEFAULT_GL_ALPHA, DEFAULT_GL_LAMBDA);
        let m = make_ginzburg_landau(2, tau, alpha, lambda).unwrap();
        let c = 0.7;
        let x = vec![c; 8];
        let expected = (1.0 - tau) * c + tau * lambda * c * c * c;
        for g in m.gradient(&x).unwrap() {
            assert!((g - expected).abs() < 1e-14);
        }
        assert!(fd_relative_error(&m, &x) < 1e-8);
    }

    #[test]
    fn ginzburg_landau_dimension() {
        let m = make_ginzburg_landau(10, 2.0, 0.1, 0.5).unwrap();
        assert_eq!(m.dimension(), 1000);
        assert!(m.gradient(&vec![0.0; 1000]).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn ginzburg_landau_rejects_bad_parameters() {
        assert!(make_ginzburg_landau(1, 2.0, 0.1, 0.5).is_err());
        assert!(make_ginzburg_landau(3, 0.0, 0.1, 0.5).is_err());
        assert!(make_ginzburg_landau(3, 2.0, -0.1, 0.5).is_err());
        assert!(make_ginzburg_landau(3, 2.0, 0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn lattice_wraps_periodically() {
        let s = LatticeIndex { i: 0, j: 3, k: 3, side: 4 };
        assert_eq!(s.shifted(0, -1).i, 3);
        assert_eq!(s.shifted(1, 1).j, 0);
        assert_eq!(s.shifted(2, 1).k, 0);
        assert_eq!(LatticeIndex::from_flat(s.flat(), 4), s);
        assert_eq!(LatticeIndex { i: 1, j: 2, k: 3, side: 10 }.flat(), 123);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = make_double_well(3).unwrap();
        assert!(matches!(m.gradient(&[1.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(eval_potential(&m, &[1.0; 4]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn finite_difference_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in models() {
            for n in 0..100 {
                let scale = [0.3, 1.0, 3.0][n % 3];
                let x = random_point(&mut rng, model.dimension(), scale);
                let err = fd_relative_error(&model, &x);
                assert!(err <= 1e-5, "{}: relative error {err}", model.name());
            }
        }
    }

    #[test]
    fn ginzburg_landau_translation_covariance() {
        let p = 4;
        let m = make_ginzburg_landau(p, 2.0, 0.1, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_point(&mut rng, p * p * p, 1.0);
        let g = m.gradient(&x).unwrap();
        for axis in 0..3 {
            // shifted[s] = x[s - e]
            let shift = |v: &[f64]| -> Vec<f64> {
                (0..v.len())
                    .map(|s| v[LatticeIndex::from_flat(s, p).shifted(axis, -1).flat()])
                    .collect()
            };
            let gs = m.gradient(&shift(&x)).unwrap();
            for (a, b) in gs.iter().zip(shift(&g)) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn double_well_alignment_outside_unit_ball() {
        let m = make_double_well(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut x = random_point(&mut rng, 5, 1.0);
            let r = crate::norm(&x);
            let target = 1.0 + 10.0 * rng.random::<f64>();
            x.iter_mut().for_each(|v| *v *= target / r);
            let g = m.gradient(&x).unwrap();
            let dot: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
            let prod = crate::norm(&x) * crate::norm(&g);
            assert!((dot - prod).abs() <= 1e-12 * prod.max(1.0));
        }
    }
}
