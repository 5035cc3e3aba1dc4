//! Spectrum of the generator pencil `A x = λ M x` and the resolvent `(iλ - A)⁻¹` measured
//! in the energy norm.
//!
//! Both are computed on the whitened generator `C = L⁻¹ A L⁻ᵀ` (`M = L Lᵀ`), which is
//! similar to `M⁻¹A` and whose Euclidean norm is the energy norm of the original state.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Par};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{ModelConfig, SemidiscreteSystem};
use crate::error::{Error, Result};

/// Largest state dimension accepted by the dense solvers.
pub const MAX_DENSE_DIM: usize = 6000;

/// `σ_min` below this fraction of `‖C‖` marks a sample as numerically singular.
const NEAR_SINGULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn as_complex(self) -> c64 {
        c64::new(self.re, self.im)
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// `|iλ - self|`
    pub fn distance_to_axis_point(self, lambda: f64) -> f64 {
        self.re.hypot(lambda - self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by decreasing real part, then increasing imaginary part.
    pub eigenvalues: Vec<Eigenvalue>,
    pub abscissa: f64,
    pub dim: usize,
    pub config: ModelConfig,
}

impl SpectrumReport {
    /// The eigenvalue attaining the abscissa with non-negative imaginary part.
    pub fn least_damped(&self) -> Eigenvalue {
        let top = self.eigenvalues[0].re;
        let tol = 1e-9 * (1.0 + top.abs());
        self.eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re >= top - tol)
            .max_by(|a, b| a.im.total_cmp(&b.im))
            .expect("spectrum is non-empty")
    }

    /// `dist(iλ, spectrum)`
    pub fn distance_from_axis(&self, lambda: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.distance_to_axis_point(lambda))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest mismatch between the spectrum and its complex conjugate after matching
    /// each eigenvalue to its nearest conjugate.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| {
                self.eigenvalues
                    .iter()
                    .map(|w| (z.re - w.re).hypot(z.im + w.im))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Eigenvalues with `Im ≥ 0`, ordered by decreasing real part.
    pub fn upper_half(&self) -> impl Iterator<Item = Eigenvalue> + '_ {
        self.eigenvalues.iter().copied().filter(|z| z.im >= 0.0)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "re,im")?;
        for z in &self.eigenvalues {
            writeln!(w, "{:e},{:e}", z.re, z.im)?;
        }
        Ok(())
    }
}

fn check_dense(sys: &SemidiscreteSystem) -> Result<()> {
    if sys.dim() > MAX_DENSE_DIM {
        return Err(Error::Eigen(format!(
            "state dimension {} exceeds the dense limit {MAX_DENSE_DIM}",
            sys.dim()
        )));
    }
    Ok(())
}

fn sort_spectrum(ev: &mut [Eigenvalue]) {
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues of `A x = λ M x`.
pub fn eigenvalues(sys: &SemidiscreteSystem) -> Result<SpectrumReport> {
    check_dense(sys)?;
    let c = sys.whitened_generator();
    let raw = c.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mut eigenvalues: Vec<Eigenvalue> = raw.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    sort_spectrum(&mut eigenvalues);
    Ok(SpectrumReport {
        abscissa: eigenvalues[0].re,
        eigenvalues,
        dim: sys.dim(),
        config: sys.config().clone(),
    })
}

/// `max Re λ` over the spectrum.
pub fn spectral_abscissa(sys: &SemidiscreteSystem) -> Result<f64> {
    Ok(eigenvalues(sys)?.abscissa)
}

/// Eigenpair of the least-damped eigenvalue (upper half plane), by shifted inverse
/// iteration on the whitened generator. The eigenvector is returned in state
/// coordinates, normalized to unit energy norm.
pub fn least_damped_mode(sys: &SemidiscreteSystem) -> Result<(Eigenvalue, Vec<c64>)> {
    let report = eigenvalues(sys)?;
    let target = report.least_damped();
    let c = sys.whitened_generator();
    let n = c.nrows();
    let scale = report.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let shift = c64::new(target.re + 1e-10 * scale, target.im);
    let b = Mat::<c64>::from_fn(n, n, |i, j| {
        let v = c64::new(c[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = b.partial_piv_lu();
    let mut y = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 + (i % 7) as f64 * 0.1, 0.0));
    for _ in 0..3 {
        y = lu.solve(&y);
        let norm = y.norm_l2();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigen("inverse iteration broke down".into()));
        }
        y = &y * faer::Scale(c64::new(1.0 / norm, 0.0));
    }
    // x = L⁻ᵀ y, so that ‖x‖_M = ‖y‖ = 1.
    let l = sys.gram_factor().L();
    let mut re = Mat::<f64>::from_fn(n, 1, |i, _| y[(i, 0)].re);
    let mut im = Mat::<f64>::from_fn(n, 1, |i, _| y[(i, 0)].im);
    for part in [&mut re, &mut im] {
        faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), part.as_mut(), Par::Seq);
    }
    Ok((target, (0..n).map(|i| c64::new(re[(i, 0)], im[(i, 0)])).collect()))
}

/// Largest distance between paired eigenvalues, pairing each eigenvalue of `a` greedily
/// with its nearest unpaired eigenvalue of `b`. Insensitive to ordering ties.
pub fn matched_distance(a: &[Eigenvalue], b: &[Eigenvalue]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z.re - w.re).hypot(z.im - w.im)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `(iλ I - C)` as a complex matrix.
fn shifted(c: &Mat<f64>, lambda: f64) -> Mat<c64> {
    let n = c.nrows();
    Mat::<c64>::from_fn(n, n, |i, j| {
        let v = -c[(i, j)];
        if i == j {
            c64::new(v, lambda)
        } else {
            c64::new(v, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub lambda: f64,
    /// `‖(iλ - A)⁻¹‖` in the energy norm.
    pub norm: f64,
    /// `iλ` is numerically an eigenvalue; `norm` is then a large finite stand-in.
    pub near_singular: bool,
}

/// `‖(iλ - A)⁻¹‖` in the energy norm, as `1/σ_min(iλI - C)`.
pub fn resolvent_sample(sys: &SemidiscreteSystem, lambda: f64) -> Result<ResolventSample> {
    check_dense(sys)?;
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("frequency {lambda} is not finite")));
    }
    let c = sys.whitened_generator();
    let sv = shifted(c, lambda)
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let largest = sv[0];
    let smallest = *sv.last().expect("non-empty system");
    let floor = NEAR_SINGULAR * largest.max(f64::MIN_POSITIVE);
    let near_singular = smallest <= floor;
    Ok(ResolventSample {
        lambda,
        norm: 1.0 / smallest.max(floor),
        near_singular,
    })
}

pub fn resolvent_norm(sys: &SemidiscreteSystem, lambda: f64) -> Result<f64> {
    Ok(resolvent_sample(sys, lambda)?.norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub samples: Vec<ResolventSample>,
    pub sup_norm: f64,
    pub argmax: f64,
}

impl ResolventScan {
    pub fn lambdas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm).collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "lambda,norm")?;
        for s in &self.samples {
            writeln!(w, "{:e},{:e}", s.lambda, s.norm)?;
        }
        Ok(())
    }
}

/// Samples the resolvent norm on `grid` (in parallel, output in grid order).
pub fn resolvent_scan(sys: &SemidiscreteSystem, grid: &[f64]) -> Result<ResolventScan> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    sys.whitened_generator();
    let samples = grid
        .par_iter()
        .map(|&l| resolvent_sample(sys, l))
        .collect::<Result<Vec<_>>>()?;
    let best = samples
        .iter()
        .max_by(|a, b| a.norm.total_cmp(&b.norm))
        .expect("non-empty grid");
    Ok(ResolventScan {
        sup_norm: best.norm,
        argmax: best.lambda,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub log_min: f64,
    pub log_max: f64,
    pub log_points: usize,
    /// Number of least-damped eigenvalues whose imaginary parts get a local refinement.
    pub anchors: usize,
    /// Half-width of each refinement window, relative to `|Im λ|`.
    pub window: f64,
    pub window_points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            log_min: 1e-2,
            log_max: 1e3,
            log_points: 41,
            anchors: 8,
            window: 0.05,
            window_points: 9,
        }
    }
}

impl ScanGrid {
    /// Log-spaced `λ ∈ [log_min, log_max]` plus linear refinement around the imaginary
    /// parts of the least-damped eigenvalues. Only `λ ≥ 0` is needed: the norm is even
    /// in `λ` for a real generator.
    pub fn build(&self, spectrum: &SpectrumReport) -> Result<Vec<f64>> {
        if !(self.log_min > 0.0 && self.log_max > self.log_min) || self.log_points < 2 {
            return Err(Error::Domain("invalid logarithmic scan range".into()));
        }
        let (a, b) = (self.log_min.ln(), self.log_max.ln());
        let step = (b - a) / (self.log_points - 1) as f64;
        let mut grid: Vec<f64> = (0..self.log_points).map(|i| (a + i as f64 * step).exp()).collect();
        for z in spectrum.upper_half().take(self.anchors) {
            let centre = z.im.abs();
            if centre == 0.0 {
                continue;
            }
            let half = self.window * centre;
            let m = self.window_points.max(2);
            grid.extend((0..m).map(|i| centre - half + 2.0 * half * i as f64 / (m - 1) as f64));
        }
        grid.retain(|l| *l >= 0.0);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Discretization, PhysicalParams};
    use crate::kernels::{KernelSpec, PronyKernel};
    use crate::assembly::Scheme;
    use crate::spaces::BoundarySet;

    fn small(bcs: BoundarySet) -> ModelConfig {
        let kernel = PronyKernel::from_pairs(&[(2.0, 1.0), (6.0, 3.0)]).unwrap();
        ModelConfig {
            params: PhysicalParams {
                rho2: 0.5,
                k: 2.0,
                gamma: 0.7,
                ..PhysicalParams::default()
            },
            law_theta: KernelSpec::GurtinPipkin { kernel },
            law_xi: KernelSpec::ColemanGurtin {
                ell: 0.5,
                kernel: PronyKernel::from_pairs(&[(1.0, 1.0)]).unwrap(),
            },
            bcs,
            discretization: Discretization { cells: 8, scheme: Scheme::P1 },
            thermal: true,
        }
    }

    #[test]
    fn undamped_core_has_imaginary_spectrum() {
        let c = ModelConfig::elastic_core(PhysicalParams::default(), BoundarySet::FullDirichlet, Discretization { cells: 10, scheme: Scheme::P1 });
        let r = eigenvalues(&assemble(&c).unwrap()).unwrap();
        assert!(r.eigenvalues.iter().all(|z| z.re.abs() <= 1e-10));
        assert!(r.abscissa.abs() <= 1e-10);
        assert!(r.conjugation_defect() <= 1e-10);
    }

    #[test]
    fn damped_spectrum_is_conjugate_closed_and_stable() {
        for bcs in BoundarySet::ALL {
            let r = eigenvalues(&assemble(&small(bcs)).unwrap()).unwrap();
            assert_eq!(r.eigenvalues.len(), r.dim);
            let scale = r.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(r.conjugation_defect() <= 1e-10 * scale);
            assert!(r.abscissa < -1e-6, "{bcs:?}: {}", r.abscissa);
            assert!(r.least_damped().im >= 0.0);
        }
    }

    #[test]
    fn zero_conductivity_gives_zero_abscissa() {
        let mut c = small(BoundarySet::MixedDirichletNeumann);
        c.params.varpi1 = 0.0;
        c.params.varpi2 = 0.0;
        let a = spectral_abscissa(&assemble(&c).unwrap()).unwrap();
        assert!(a.abs() <= 1e-10, "{a}");
        c.params.varpi1 = 1.0;
        c.params.varpi2 = 1.0;
        assert!(spectral_abscissa(&assemble(&c).unwrap()).unwrap() < 0.0);
    }

    #[test]
    fn least_damped_mode_satisfies_the_pencil() {
        let sys = assemble(&small(BoundarySet::FullDirichlet)).unwrap();
        let (z, x) = least_damped_mode(&sys).unwrap();
        let n = sys.dim();
        let (a, m) = (sys.generator(), sys.gram());
        let lam = z.as_complex();
        let mut res = 0.0f64;
        for i in 0..n {
            let mut r = c64::new(0.0, 0.0);
            for j in 0..n {
                r += x[j] * a[(i, j)] - lam * x[j] * m[(i, j)];
            }
            res = res.max(r.norm());
        }
        assert!(res <= 1e-8, "{res}");
    }

    /// `‖C⁻¹‖₂` through an LU solve and a symmetric eigenproblem, independent of the SVD.
    fn inverse_norm_via_lu(c: &Mat<f64>) -> f64 {
        let n = c.nrows();
        let x = c.partial_piv_lu().solve(Mat::<f64>::identity(n, n));
        let g = x.transpose() * &x;
        let ev = g.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    #[test]
    fn resolvent_at_zero_matches_inverse_norm() {
        for bcs in BoundarySet::ALL {
            let sys = assemble(&small(bcs)).unwrap();
            let svd = resolvent_norm(&sys, 0.0).unwrap();
            let lu = inverse_norm_via_lu(sys.whitened_generator());
            assert!((svd - lu).abs() <= 1e-8 * lu, "{svd} vs {lu}");
        }
    }

    #[test]
    fn resolvent_bounds_and_continuity() {
        let sys = assemble(&small(BoundarySet::MixedDirichletNeumann)).unwrap();
        let spec = eigenvalues(&sys).unwrap();
        let top = spec.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        for lambda in [0.0, 0.7, 3.1, 25.0, 10.0 * top] {
            let s = resolvent_sample(&sys, lambda).unwrap();
            assert!(!s.near_singular);
            assert!(s.norm >= (1.0 - 1e-8) / spec.distance_from_axis(lambda));
        }
        // Far out, the resolvent of a bounded operator behaves like 1/|λ|.
        let far = 1e3 * top;
        assert!((resolvent_norm(&sys, far).unwrap() * far - 1.0).abs() < 1e-2);
        let (l, d) = (2.3, 1e-4);
        let (n0, n1) = (resolvent_norm(&sys, l).unwrap(), resolvent_norm(&sys, l + d).unwrap());
        assert!((n1 - n0).abs() <= n0 * n0 * d * 1.01);
    }

    #[test]
    fn resolvent_flags_eigenvalues_on_the_axis() {
        let c = ModelConfig::elastic_core(PhysicalParams::default(), BoundarySet::FullDirichlet, Discretization { cells: 4, scheme: Scheme::P1 });
        let sys = assemble(&c).unwrap();
        let spec = eigenvalues(&sys).unwrap();
        let s = resolvent_sample(&sys, spec.least_damped().im).unwrap();
        assert!(s.near_singular && s.norm.is_finite());
    }

    #[test]
    fn scan_reports_sup_and_grid_order() {
        let sys = assemble(&small(BoundarySet::FullDirichlet)).unwrap();
        let spec = eigenvalues(&sys).unwrap();
        let grid = ScanGrid::default().build(&spec).unwrap();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        let scan = resolvent_scan(&sys, &grid).unwrap();
        assert_eq!(scan.lambdas(), grid);
        assert_eq!(scan.sup_norm, scan.norms().iter().cloned().fold(0.0, f64::max));
        assert!(matches!(resolvent_scan(&sys, &[]), Err(Error::EmptyGrid)));
        let mut csv = Vec::new();
        scan.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("lambda,norm\n"));
    }
}
