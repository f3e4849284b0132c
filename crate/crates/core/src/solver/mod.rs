//! Spectral computations and the multi-scale-analysis predicates.

mod green;
mod lanczos;
mod predicates;

pub use green::{combes_thomas_check, green_column, BoundaryGreenScan, CtPairs, CtReport, GreenColumn};
pub use lanczos::{lowest_eigenpair, LanczosResult};
pub use predicates::{
    hnr_witness, is_e_cnr, is_em_singular, is_hnr, is_tunnelling, lemma46_implication_check,
    min_subcube_radius, sub_cube_family, CnrEnumeration, CnrVerdict, EmSingularityScan, FactorData,
    HnrWitness, Lemma46Report, PiCube, PredicateReport, SingularityVerdict, SubCube, SubCubeFamily,
    TunnellingContext, TunnellingVerdict, CNR_BUDGET, RESONANCE_SOLVER_TOL,
};

use crate::error::{LabError, Result};
use crate::geometry::Rectangle;
use crate::operator::OperatorMatrix;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use std::sync::Once;

/// Default switch-over from dense decomposition to the iterative
/// lowest-part solver.
pub const DENSE_THRESHOLD: usize = 3000;

static FAER_SEQ: Once = Once::new();

/// Force faer into sequential mode. Trial-level parallelism lives in the
/// experiment layer; keeping the kernels sequential makes numeric output
/// independent of the worker count.
pub fn init_deterministic_kernels() {
    FAER_SEQ.call_once(|| {
        faer::set_global_parallelism(faer::Parallelism::None);
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    PaperConstants,
    Calibrated,
}

/// The full parameter record tying together every model constant used by
/// the predicates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    /// Maximal particle number N.
    pub big_n: usize,
    /// Current particle number, 1 <= n <= N.
    pub n: usize,
    pub d: usize,
    pub p: f64,
    /// Ladder exponent, fixed 3/2.
    pub alpha: f64,
    /// Resonance-width exponent, fixed 1/2.
    pub beta: f64,
    pub l0: i64,
    /// Decay rate entering gamma(m, L, n).
    pub m: f64,
    /// Upper edge of the energy interval I = [0, E*].
    pub e_star: f64,
    pub mode: ParamMode,
}

impl ModelParams {
    /// Paper-constants mode: `m = (14 N^N + 6Nd) L0^{-1/2}`,
    /// `E* = 12 N d 2^{N+1} m`. Requires p > 6Nd and L0 > 3.
    pub fn paper(big_n: usize, n: usize, d: usize, p: f64, l0: i64) -> Result<Self> {
        Self::validate_shape(big_n, n, d)?;
        if p <= (6 * big_n * d) as f64 {
            return Err(LabError::InvalidArgument(format!(
                "paper mode requires p > 6Nd = {}, got {p}",
                6 * big_n * d
            )));
        }
        if l0 <= 3 {
            return Err(LabError::InvalidArgument("paper mode requires L0 > 3".into()));
        }
        let m = mass_paper(big_n, d, l0);
        let e_star = e_star_paper(big_n, d, m);
        Ok(ModelParams {
            big_n,
            n,
            d,
            p,
            alpha: 1.5,
            beta: 0.5,
            l0,
            m,
            e_star,
            mode: ParamMode::PaperConstants,
        })
    }

    /// Calibrated mode: user-supplied m > 0 and E* > 0; p below 6Nd is
    /// allowed here (desk-scale experiments) and visible via `p_relaxed`.
    pub fn calibrated(
        big_n: usize,
        n: usize,
        d: usize,
        p: f64,
        l0: i64,
        m: f64,
        e_star: f64,
    ) -> Result<Self> {
        Self::validate_shape(big_n, n, d)?;
        if !(m > 0.0) || !(e_star > 0.0) {
            return Err(LabError::InvalidArgument("calibrated mode needs m > 0 and E* > 0".into()));
        }
        if l0 < 2 {
            return Err(LabError::InvalidArgument("L0 must be >= 2".into()));
        }
        Ok(ModelParams {
            big_n,
            n,
            d,
            p,
            alpha: 1.5,
            beta: 0.5,
            l0,
            m,
            e_star,
            mode: ParamMode::Calibrated,
        })
    }

    fn validate_shape(big_n: usize, n: usize, d: usize) -> Result<()> {
        if big_n == 0 || n == 0 || d == 0 || n > big_n {
            return Err(LabError::InvalidArgument(format!(
                "need 1 <= n <= N and d >= 1, got N={big_n} n={n} d={d}"
            )));
        }
        if big_n > 8 {
            return Err(LabError::InvalidArgument("N^N constants limited to N <= 8".into()));
        }
        Ok(())
    }

    pub fn p_relaxed(&self) -> bool {
        self.p <= (6 * self.big_n * self.d) as f64
    }

    /// With different current particle count (factor predicates).
    pub fn with_n(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.n = n;
        out
    }
}

/// m of the initial-scale theorem.
pub fn mass_paper(big_n: usize, d: usize, l0: i64) -> f64 {
    (14.0 * (big_n as f64).powi(big_n as i32) + (6 * big_n * d) as f64) / (l0 as f64).sqrt()
}

/// E* of the initial-scale theorem.
pub fn e_star_paper(big_n: usize, d: usize, m: f64) -> f64 {
    (12 * big_n * d) as f64 * 2f64.powi(big_n as i32 + 1) * m
}

/// C = 12 N d 2^{N+1} (14 N^N + 6Nd); E* = C L0^{-1/2}.
pub fn initial_scale_c(big_n: usize, d: usize) -> f64 {
    (12 * big_n * d) as f64
        * 2f64.powi(big_n as i32 + 1)
        * (14.0 * (big_n as f64).powi(big_n as i32) + (6 * big_n * d) as f64)
}

/// gamma(m, L, n) = m (1 + L^{-1/8})^{N-n+1}; always above m, below m 2^N.
pub fn gamma(m: f64, l: i64, n: usize, big_n: usize) -> f64 {
    debug_assert!(l >= 1 && n >= 1 && n <= big_n && m > 0.0);
    m * (1.0 + (l as f64).powf(-0.125)).powi((big_n - n + 1) as i32)
}

/// Eigen data of a restricted operator. `complete` distinguishes a full
/// dense decomposition from the iterative lowest-part result.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Mat<f64>>,
    pub residual_bound: f64,
    pub complete: bool,
}

impl SpectralData {
    pub fn lowest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// dist(E, sigma). For incomplete data this is only a valid distance
    /// when E lies below the computed lowest part.
    pub fn dist_to_spectrum(&self, e: f64) -> f64 {
        dist_to_sorted(&self.eigenvalues, e)
    }
}

/// Distance from `e` to a sorted list.
pub fn dist_to_sorted(sorted: &[f64], e: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    match sorted.binary_search_by(|v| v.partial_cmp(&e).expect("no NaN eigenvalues")) {
        Ok(_) => 0.0,
        Err(pos) => {
            let mut best = f64::INFINITY;
            if pos < sorted.len() {
                best = best.min((sorted[pos] - e).abs());
            }
            if pos > 0 {
                best = best.min((sorted[pos - 1] - e).abs());
            }
            best
        }
    }
}

/// Minimal distance between two sorted spectra.
pub fn spectral_gap(a: &[f64], b: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        best = best.min((a[i] - b[j]).abs());
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

/// Eigendecomposition: full and dense up to [`DENSE_THRESHOLD`], iterative
/// lowest-part beyond it (with a certified residual either way).
pub fn eig(op: &OperatorMatrix, want_vectors: bool) -> Result<SpectralData> {
    eig_with_threshold(op, want_vectors, DENSE_THRESHOLD)
}

pub fn eig_with_threshold(
    op: &OperatorMatrix,
    want_vectors: bool,
    dense_threshold: usize,
) -> Result<SpectralData> {
    init_deterministic_kernels();
    let dim = op.dim();
    if dim == 0 {
        return Err(LabError::InvalidArgument("empty operator".into()));
    }
    if dim <= dense_threshold {
        let dense = op.to_dense();
        if want_vectors {
            let evd = dense.selfadjoint_eigendecomposition(Side::Lower);
            let (values, vectors) = sorted_eigenpairs(evd.s().column_vector(), evd.u());
            let residual_bound = eig_residual(op, &values, &vectors);
            Ok(SpectralData {
                eigenvalues: values,
                eigenvectors: Some(vectors),
                residual_bound,
                complete: true,
            })
        } else {
            let mut values: Vec<f64> = dense.selfadjoint_eigenvalues(Side::Lower);
            values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN eigenvalues"));
            Ok(SpectralData {
                eigenvalues: values,
                eigenvectors: None,
                residual_bound: 0.0,
                complete: true,
            })
        }
    } else {
        let low = lowest_eigenpair(op, 1e-10, 60)?;
        Ok(SpectralData {
            eigenvalues: vec![low.value],
            eigenvectors: if want_vectors {
                let mut m = Mat::<f64>::zeros(dim, 1);
                for (i, &v) in low.vector.iter().enumerate() {
                    m[(i, 0)] = v;
                }
                Some(m)
            } else {
                None
            },
            residual_bound: low.residual,
            complete: false,
        })
    }
}

fn sorted_eigenpairs(values: faer::ColRef<'_, f64>, vectors: faer::MatRef<'_, f64>) -> (Vec<f64>, Mat<f64>) {
    let n = values.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN eigenvalues"));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_vecs = Mat::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            sorted_vecs[(row, col)] = vectors[(row, src)];
        }
    }
    (sorted_vals, sorted_vecs)
}

fn eig_residual(op: &OperatorMatrix, values: &[f64], vectors: &Mat<f64>) -> f64 {
    let dim = op.dim();
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut worst = 0.0f64;
    for (k, &lam) in values.iter().enumerate() {
        for i in 0..dim {
            x[i] = vectors[(i, k)];
        }
        op.matvec(&x, &mut y);
        let r2: f64 = y.iter().zip(&x).map(|(hy, vx)| (hy - lam * vx).powi(2)).sum();
        worst = worst.max(r2.sqrt());
    }
    worst
}

/// E-resonance verdict for a rectangle: dist(E, sigma) < e^{-L^beta} with
/// L the minimal radius.
#[derive(Clone, Debug, Serialize)]
pub struct EResonanceVerdict {
    pub resonant: bool,
    pub dist: f64,
    pub threshold: f64,
    /// dist - threshold; negative means resonant.
    pub margin: f64,
}

pub fn is_e_resonant(spectrum: &[f64], rect: &Rectangle, e: f64, beta: f64) -> EResonanceVerdict {
    let l = rect.radius_min();
    let threshold = (-(l as f64).powf(beta)).exp();
    let dist = dist_to_sorted(spectrum, e);
    EResonanceVerdict {
        resonant: dist < threshold,
        dist,
        threshold,
        margin: dist - threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{full_projection, Config, Rectangle};
    use crate::operator::{assemble, assemble_sampled, DisorderEnsemble, InteractionSpec, PotentialSample};

    fn free_cube_1d(l: i64) -> OperatorMatrix {
        let r = Rectangle::cube(Config::line(&[0]), l).unwrap();
        let pot = PotentialSample::zero(full_projection(&r));
        assemble(&r, &pot, &InteractionSpec::none()).unwrap()
    }

    #[test]
    fn paper_constants_example() {
        let p = ModelParams::paper(2, 2, 1, 13.0, 100).unwrap();
        assert!((p.m - 6.8).abs() < 1e-12);
        assert!((p.e_star - 1305.6).abs() < 1e-9);
        assert!((initial_scale_c(2, 1) - 13056.0).abs() < 1e-9);
        assert!(!p.p_relaxed());
        assert!(ModelParams::paper(2, 2, 1, 12.0, 100).is_err(), "p = 6Nd rejected");
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma(1.0, 256, 2, 3) - 2.25).abs() < 1e-12);
        assert!((gamma(2.0, 6561, 2, 2) - 8.0 / 3.0).abs() < 1e-12);
        // monotone in n, and always in (m, m 2^N) for L >= 2
        for &l in &[2i64, 5, 30, 1000] {
            for big_n in 1..=4usize {
                for n in 1..=big_n {
                    let g = gamma(1.5, l, n, big_n);
                    assert!(g > 1.5);
                    assert!(g < 1.5 * 2f64.powi(big_n as i32));
                    if n > 1 {
                        assert!(gamma(1.5, l, n - 1, big_n) > g);
                    }
                }
            }
        }
    }

    #[test]
    fn free_chain_spectrum() {
        let op = free_cube_1d(1);
        let s = eig(&op, true).unwrap();
        let sqrt2 = 2f64.sqrt();
        let expect = [2.0 - sqrt2, 2.0, 2.0 + sqrt2];
        for (got, want) in s.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(s.residual_bound < 1e-12);
        // Dirichlet-chain closed form for a larger cube
        let l = 6i64;
        let op = free_cube_1d(l);
        let s = eig(&op, false).unwrap();
        let count = 2 * l + 1;
        for (k, &lam) in s.eigenvalues.iter().enumerate() {
            let theta = std::f64::consts::PI * (k as f64 + 1.0) / (count as f64 + 1.0);
            let expect = 2.0 - 2.0 * theta.cos();
            assert!((lam - expect).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn diagonal_shift_covariance() {
        let r = Rectangle::cube(Config::line(&[0, 5]), 1).unwrap();
        let ens = DisorderEnsemble::uniform01(5);
        let (op, pot) = assemble_sampled(&r, &ens, 3, &InteractionSpec::none()).unwrap();
        let s = eig(&op, false).unwrap();
        let c = 0.37;
        let shifted = assemble(&r, &pot.shifted(c), &InteractionSpec::none()).unwrap();
        let s2 = eig(&shifted, false).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((b - a - 2.0 * c).abs() < 1e-10, "n=2 particles see 2c");
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let r = Rectangle::cube(Config::line(&[0, 4]), 2).unwrap();
        let ens = DisorderEnsemble::uniform01(1);
        let (op, _) = assemble_sampled(&r, &ens, 0, &InteractionSpec::new(vec![1.0, 0.5]).unwrap())
            .unwrap();
        let s = eig(&op, true).unwrap();
        let v = s.eigenvectors.as_ref().unwrap();
        let n = op.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|r| v[(r, i)] * v[(r, j)]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        assert!(worst <= 1e-10, "orthonormality defect {worst}");
    }

    #[test]
    fn psd_with_nonnegative_potential() {
        let ens = DisorderEnsemble::uniform01(77);
        for (nn, l) in [(1usize, 8i64), (2, 3)] {
            let r = Rectangle::cube(Config::new(nn, 1, vec![0; nn]).unwrap(), l).unwrap();
            let inter = InteractionSpec::new(vec![1.0, 0.3]).unwrap();
            for real in 0..5 {
                let (op, _) = assemble_sampled(&r, &ens, real, &inter).unwrap();
                let s = eig(&op, false).unwrap();
                assert!(s.lowest() >= -1e-9, "lowest {}", s.lowest());
            }
        }
    }

    #[test]
    fn resonance_examples() {
        let op = free_cube_1d(4);
        let s = eig(&op, false).unwrap();
        let rect = Rectangle::cube(Config::line(&[0]), 4).unwrap();
        // E an exact eigenvalue -> resonant
        let v = is_e_resonant(&s.eigenvalues, &rect, s.eigenvalues[0], 0.5);
        assert!(v.resonant);
        assert_eq!(v.dist, 0.0);
        // E = -1: dist >= 1 > e^{-2}
        let v = is_e_resonant(&s.eigenvalues, &rect, -1.0, 0.5);
        assert!(!v.resonant);
        assert!(v.dist >= 1.0);
        assert!((v.threshold - (-2.0f64).exp()).abs() < 1e-15);
        // threshold at L = 9
        let rect9 = Rectangle::cube(Config::line(&[0]), 9).unwrap();
        let v = is_e_resonant(&[100.0], &rect9, 0.0, 0.5);
        assert!((v.threshold - 0.049787).abs() < 1e-6);
    }

    #[test]
    fn dist_to_sorted_basics() {
        let s = [1.0, 2.0, 5.0];
        assert_eq!(dist_to_sorted(&s, 2.0), 0.0);
        assert_eq!(dist_to_sorted(&s, 3.0), 1.0);
        assert_eq!(dist_to_sorted(&s, 0.0), 1.0);
        assert_eq!(dist_to_sorted(&s, 9.0), 4.0);
        assert!((spectral_gap(&s, &[2.4, 7.0]) - 0.4).abs() < 1e-12);
    }
}
