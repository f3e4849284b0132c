//! The random n-particle Hamiltonian and its restrictions.
//!
//! `H = -Delta + sum_j V(x_j, w) + U(x)` on a rectangle, with simple
//! boundary conditions read entrywise: matrix elements inside the rectangle
//! keep their ambient values (diagonal `2dn + ...`), couplings across the
//! boundary are zero. Off-diagonal entries are exactly -1 between
//! l1-distance-1 configurations, so only the neighbour structure is stored.

use crate::error::{LabError, Result};
use crate::geometry::{
    classify_interactivity, full_projection, Config, IndexMap, Interactivity, Rectangle,
    ScaleLadder,
};
use crate::rng::site_unit;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Finite-range pair interaction given by its table `phi[r] = Phi(r)`,
/// `r = 0..=r_0`; zero beyond the table by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub phi_table: Vec<f64>,
}

impl InteractionSpec {
    pub fn new(phi_table: Vec<f64>) -> Result<Self> {
        if phi_table.is_empty() {
            return Err(LabError::InvalidArgument("phi table must cover r = 0".into()));
        }
        if phi_table.iter().any(|&v| !(v >= 0.0)) {
            return Err(LabError::InvalidArgument("phi values must be non-negative".into()));
        }
        Ok(InteractionSpec { phi_table })
    }

    /// No interaction (r_0 = 0, Phi(0) = 0).
    pub fn none() -> Self {
        InteractionSpec { phi_table: vec![0.0] }
    }

    pub fn r0(&self) -> i64 {
        self.phi_table.len() as i64 - 1
    }

    pub fn value(&self, r: i64) -> f64 {
        if r < 0 || r as usize >= self.phi_table.len() {
            0.0
        } else {
            self.phi_table[r as usize]
        }
    }

    /// U(x) = sum over unordered pairs of Phi at the max-norm distance.
    pub fn energy(&self, x: &Config) -> f64 {
        self.energy_flat(x.flat(), x.n(), x.d())
    }

    pub(crate) fn energy_flat(&self, flat: &[i64], n: usize, d: usize) -> f64 {
        let mut u = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dist = flat[i * d..(i + 1) * d]
                    .iter()
                    .zip(&flat[j * d..(j + 1) * d])
                    .map(|(a, b)| (a - b).abs())
                    .max()
                    .unwrap_or(0);
                u += self.value(dist);
            }
        }
        u
    }
}

/// Single-site distribution kinds. All are supported on [0, inf) with 0 in
/// the support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    Uniform01,
    ScaledUniform { a: f64 },
    /// V = exp(-u^{-1/(2A)}) with u uniform; log-Hoelder with modulus
    /// ~ C / |ln eps|^{2A}.
    SmoothedLogHolder { c: f64, a: f64 },
}

/// A disorder ensemble: a single-site law plus the root seed of the
/// counter-based sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderEnsemble {
    #[serde(flatten)]
    pub kind: EnsembleKind,
    pub seed_root: u64,
}

impl DisorderEnsemble {
    pub fn new(kind: EnsembleKind, seed_root: u64) -> Self {
        DisorderEnsemble { kind, seed_root }
    }

    pub fn uniform01(seed_root: u64) -> Self {
        Self::new(EnsembleKind::Uniform01, seed_root)
    }

    /// The site value: a pure function of (seed_root, realization, site).
    pub fn site_value(&self, realization: u64, site: &[i64]) -> f64 {
        let u = site_unit(self.seed_root, realization, site);
        match self.kind {
            EnsembleKind::Uniform01 => u,
            EnsembleKind::ScaledUniform { a } => a * u,
            EnsembleKind::SmoothedLogHolder { a, .. } => {
                // u = 0 maps to V = 0 (the essential infimum)
                if u == 0.0 {
                    0.0
                } else {
                    (-u.powf(-1.0 / (2.0 * a))).exp()
                }
            }
        }
    }

    /// Analytic continuity modulus s(F_V, eps) = sup_a [F(a+eps) - F(a)].
    pub fn continuity_modulus(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(LabError::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        let s = match self.kind {
            EnsembleKind::Uniform01 => eps.min(1.0),
            EnsembleKind::ScaledUniform { a } => (eps / a).min(1.0),
            EnsembleKind::SmoothedLogHolder { .. } if eps >= 1.0 => 1.0,
            EnsembleKind::SmoothedLogHolder { c, a } => (c / eps.ln().abs().powf(2.0 * a)).min(1.0),
        };
        Ok(s)
    }
}

/// Advisory check of the log-Hoelder assumption against the model
/// parameters: the exponent requirement and the per-level inequality
/// `s(F_V, e^{-L^beta}) <= C L^{-A}`.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionPReport {
    /// 3/2 * 4^N p + 9 N d; the ensemble's A must exceed this.
    pub required_a: f64,
    /// The configured (C, A) when the ensemble is log-Hoelder.
    pub configured: Option<(f64, f64)>,
    pub exponent_satisfied: Option<bool>,
    /// Uniform-type moduli decay faster than any log power.
    pub satisfied_asymptotically: bool,
    /// (L, s(F, e^{-L^beta}), C L^{-A}, holds) per ladder level.
    pub per_level: Vec<(i64, f64, f64, bool)>,
}

pub fn assumption_p_check(
    ensemble: &DisorderEnsemble,
    big_n: usize,
    d: usize,
    p: f64,
    beta: f64,
    ladder: &ScaleLadder,
) -> AssumptionPReport {
    let required_a = 1.5 * 4f64.powi(big_n as i32) * p + 9.0 * (big_n * d) as f64;
    let configured = match ensemble.kind {
        EnsembleKind::SmoothedLogHolder { c, a } => Some((c, a)),
        _ => None,
    };
    let exponent_satisfied = configured.map(|(_, a)| a > required_a);
    let satisfied_asymptotically = matches!(
        ensemble.kind,
        EnsembleKind::Uniform01 | EnsembleKind::ScaledUniform { .. }
    );
    let (c_cmp, a_cmp) = configured.unwrap_or((1.0, required_a));
    let per_level = ladder
        .levels
        .iter()
        .map(|&l| {
            let eps = (-(l as f64).powf(beta)).exp();
            let s = ensemble.continuity_modulus(eps).expect("eps > 0");
            let threshold = c_cmp * (l as f64).powf(-a_cmp);
            (l, s, threshold, s <= threshold)
        })
        .collect();
    AssumptionPReport {
        required_a,
        configured,
        exponent_satisfied,
        satisfied_asymptotically,
        per_level,
    }
}

/// A realized potential on an explicit window of single-particle sites.
#[derive(Clone, Debug, Default)]
pub struct PotentialSample {
    values: HashMap<Vec<i64>, f64>,
}

impl PotentialSample {
    /// Draw i.i.d. values on `window`; the draw per site is counter-based so
    /// overlapping or merged windows reproduce identical values.
    pub fn from_window<I>(ensemble: &DisorderEnsemble, realization: u64, window: I) -> Self
    where
        I: IntoIterator<Item = Vec<i64>>,
    {
        let values = window
            .into_iter()
            .map(|site| {
                let v = ensemble.site_value(realization, &site);
                (site, v)
            })
            .collect();
        PotentialSample { values }
    }

    /// Identically-zero potential on the window.
    pub fn zero<I>(window: I) -> Self
    where
        I: IntoIterator<Item = Vec<i64>>,
    {
        PotentialSample {
            values: window.into_iter().map(|s| (s, 0.0)).collect(),
        }
    }

    pub fn value(&self, site: &[i64]) -> Option<f64> {
        self.values.get(site).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn set(&mut self, site: Vec<i64>, value: f64) {
        self.values.insert(site, value);
    }

    /// Add `c` to every site of the window.
    pub fn shifted(&self, c: f64) -> Self {
        PotentialSample {
            values: self.values.iter().map(|(k, v)| (k.clone(), v + c)).collect(),
        }
    }

    /// Add `t` on the listed sites (diagonal-monotonicity experiments).
    pub fn raised_on(&self, sites: &BTreeSet<Vec<i64>>, t: f64) -> Self {
        let mut out = self.clone();
        for s in sites {
            if let Some(v) = out.values.get_mut(s) {
                *v += t;
            }
        }
        out
    }

    /// Deterministic CSV dump (sites sorted lexicographically).
    pub fn to_csv(&self) -> String {
        let sorted: BTreeMap<&Vec<i64>, f64> = self.values.iter().map(|(k, &v)| (k, v)).collect();
        let mut out = String::from("site,value\n");
        for (site, v) in sorted {
            let coords: Vec<String> = site.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{},{}\n", coords.join(" "), v));
        }
        out
    }
}

/// Sparse symmetric restriction of the Hamiltonian to a rectangle.
///
/// Off-diagonals are implicit (-1 on the stored neighbour lists); the
/// diagonal is `2dn + sum_j V(x_j) + U(x)`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub rectangle: Rectangle,
    index_map: IndexMap,
    diag: Vec<f64>,
    row_ptr: Vec<u32>,
    nbr: Vec<u32>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.index_map
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Index of the rectangle's center configuration.
    pub fn center_index(&self) -> usize {
        self.index_map
            .index_of(self.rectangle.center.flat())
            .expect("center lies in its own rectangle")
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.nbr[self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize]
    }

    /// y = H x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        for i in 0..self.dim() {
            let mut acc = self.diag[i] * x[i];
            for &j in self.neighbors(i) {
                acc -= x[j as usize];
            }
            y[i] = acc;
        }
    }

    /// Matrix element (i, j).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if self.neighbors(i).contains(&(j as u32)) {
            -1.0
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let n = self.dim();
        let mut m = faer::Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &j in self.neighbors(i) {
                m[(i, j as usize)] = -1.0;
            }
        }
        m
    }

    /// Number of stored off-diagonal entries.
    pub fn offdiag_count(&self) -> usize {
        self.nbr.len()
    }
}

/// Assemble the restricted operator. The window of `pot` must cover the
/// rectangle's full projection.
pub fn assemble(
    r: &Rectangle,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
) -> Result<OperatorMatrix> {
    let map = r.index_map();
    let dim = map.dim();
    if dim > u32::MAX as usize {
        return Err(LabError::InvalidArgument("rectangle too large to index with u32".into()));
    }
    let n = r.n();
    let d = r.d();
    let nd = n * d;
    let diag_free = (2 * d * n) as f64;

    let mut diag = vec![0.0; dim];
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut nbr = Vec::with_capacity(dim * 2 * nd);
    row_ptr.push(0u32);

    let extents = map.extents().to_vec();
    let mut strides = vec![1usize; nd];
    for a in (0..nd.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * extents[a + 1];
    }

    let mut buf = vec![0i64; nd];
    for idx in 0..dim {
        map.config_at(idx, &mut buf);
        let mut v_sum = 0.0;
        for i in 0..n {
            let site = &buf[i * d..(i + 1) * d];
            v_sum += pot.value(site).ok_or_else(|| {
                LabError::WindowTooSmall(format!("site {site:?} of particle {i}"))
            })?;
        }
        diag[idx] = diag_free + v_sum + interaction.energy_flat(&buf, n, d);

        let mut rem = idx;
        for a in 0..nd {
            let off = rem / strides[a];
            rem %= strides[a];
            if off > 0 {
                nbr.push((idx - strides[a]) as u32);
            }
            if off + 1 < extents[a] {
                nbr.push((idx + strides[a]) as u32);
            }
        }
        row_ptr.push(nbr.len() as u32);
    }

    Ok(OperatorMatrix {
        rectangle: r.clone(),
        index_map: map,
        diag,
        row_ptr,
        nbr,
    })
}

/// Sample a potential on the full projection of `r` and assemble.
pub fn assemble_sampled(
    r: &Rectangle,
    ensemble: &DisorderEnsemble,
    realization: u64,
    interaction: &InteractionSpec,
) -> Result<(OperatorMatrix, PotentialSample)> {
    let window = full_projection(r);
    let pot = PotentialSample::from_window(ensemble, realization, window);
    let op = assemble(r, &pot, interaction)?;
    Ok((op, pot))
}

/// The 0-based split of a partially interactive cube.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiSplit {
    pub j: Vec<usize>,
    pub jc: Vec<usize>,
}

impl PiSplit {
    /// Project a flat n-particle configuration onto the (J, J^c) factors.
    pub fn project(&self, flat: &[i64], d: usize) -> (Vec<i64>, Vec<i64>) {
        let take = |idx: &[usize]| -> Vec<i64> {
            idx.iter().flat_map(|&i| flat[i * d..(i + 1) * d].iter().copied()).collect()
        };
        (take(&self.j), take(&self.jc))
    }
}

/// Split a PI cube into its two non-interacting factor operators,
/// `H = H' (x) I + I (x) H''`. Errors on fully interactive cubes.
pub fn tensor_split(
    r: &Rectangle,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
) -> Result<(OperatorMatrix, OperatorMatrix, PiSplit)> {
    let verdict = classify_interactivity(r, interaction.r0())?;
    if verdict.kind == Interactivity::Fully {
        return Err(LabError::FullyInteractive);
    }
    let (j1, j1c) = verdict.split.expect("PI verdict carries a split");
    let split = PiSplit {
        j: j1.iter().map(|&i| i - 1).collect(),
        jc: j1c.iter().map(|&i| i - 1).collect(),
    };
    let l = r.equal_radius().expect("classification required equal radii");
    let sub_center = |idx: &[usize]| -> Config {
        let pts: Vec<Vec<i64>> = idx.iter().map(|&i| r.center.particle(i).to_vec()).collect();
        Config::from_points(&pts).expect("nonempty factor")
    };
    let left_rect = Rectangle::cube(sub_center(&split.j), l)?;
    let right_rect = Rectangle::cube(sub_center(&split.jc), l)?;
    let left = assemble(&left_rect, pot, interaction)?;
    let right = assemble(&right_rect, pot, interaction)?;
    Ok((left, right, split))
}

/// A finitely supported vector on Z^{nd}, keyed by flat configurations.
pub type SupportedVector = BTreeMap<Vec<i64>, f64>;

/// Apply the ambient (unrestricted) operator to a finitely supported vector.
/// Support grows by l1 distance 1. The potential window only needs to cover
/// the projection of the input support: output sites outside it receive pure
/// hopping terms.
pub fn apply_ambient(
    vec: &SupportedVector,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
    n: usize,
    d: usize,
) -> Result<SupportedVector> {
    let nd = n * d;
    let diag_free = (2 * d * n) as f64;
    let mut out: SupportedVector = BTreeMap::new();
    for (x, &v) in vec {
        if x.len() != nd {
            return Err(LabError::Shape(format!("support vector has {} coords", x.len())));
        }
        let mut v_sum = 0.0;
        for i in 0..n {
            let site = &x[i * d..(i + 1) * d];
            v_sum += pot
                .value(site)
                .ok_or_else(|| LabError::WindowTooSmall(format!("site {site:?}")))?;
        }
        let diag = diag_free + v_sum + interaction.energy_flat(x, n, d);
        *out.entry(x.clone()).or_insert(0.0) += diag * v;
        let mut y = x.clone();
        for a in 0..nd {
            for step in [-1i64, 1] {
                y[a] += step;
                *out.entry(y.clone()).or_insert(0.0) += -v;
                y[a] -= step;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rectangle;

    fn cube1(center: i64, l: i64) -> Rectangle {
        Rectangle::cube(Config::line(&[center]), l).unwrap()
    }

    #[test]
    fn interaction_examples() {
        let spec = InteractionSpec::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(spec.r0(), 1);
        assert_eq!(spec.energy(&Config::line(&[7])), 0.0, "no pairs for n=1");
        assert_eq!(spec.energy(&Config::line(&[0, 1])), 1.0);
        assert_eq!(spec.energy(&Config::line(&[0, 3])), 0.0);
        let spec = InteractionSpec::new(vec![2.0]).unwrap();
        assert_eq!(spec.energy(&Config::line(&[0, 0, 0])), 6.0, "3 pairs x 2");
        assert!(InteractionSpec::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn sampling_is_window_extension_invariant() {
        let ens = DisorderEnsemble::uniform01(42);
        let w1: Vec<Vec<i64>> = (0..5).map(|i| vec![i]).collect();
        let w2: Vec<Vec<i64>> = (3..10).map(|i| vec![i]).collect();
        let union: Vec<Vec<i64>> = (0..10).map(|i| vec![i]).collect();
        let p1 = PotentialSample::from_window(&ens, 7, w1);
        let p2 = PotentialSample::from_window(&ens, 7, w2);
        let pu = PotentialSample::from_window(&ens, 7, union);
        for i in 0..10i64 {
            let expect = pu.value(&[i]).unwrap();
            if i < 5 {
                assert_eq!(p1.value(&[i]).unwrap(), expect);
            }
            if i >= 3 {
                assert_eq!(p2.value(&[i]).unwrap(), expect);
            }
        }
        // and re-sampling reproduces bit-exactly
        let again = PotentialSample::from_window(&ens, 7, (0..10).map(|i| vec![i]));
        for i in 0..10i64 {
            assert_eq!(again.value(&[i]), pu.value(&[i]));
        }
    }

    #[test]
    fn uniform_mean_monte_carlo() {
        let ens = DisorderEnsemble::uniform01(0xA11CE);
        let n = 100_000i64;
        let mean: f64 = (0..n).map(|i| ens.site_value(0, &[i])).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn continuity_modulus_values() {
        let u = DisorderEnsemble::uniform01(0);
        assert_eq!(u.continuity_modulus(0.01).unwrap(), 0.01);
        assert_eq!(u.continuity_modulus(2.0).unwrap(), 1.0);
        let s = DisorderEnsemble::new(EnsembleKind::ScaledUniform { a: 4.0 }, 0);
        assert_eq!(s.continuity_modulus(0.02).unwrap(), 0.005);
        let lh = DisorderEnsemble::new(EnsembleKind::SmoothedLogHolder { c: 1.0, a: 1.0 }, 0);
        let eps = (-10.0f64).exp();
        assert!((lh.continuity_modulus(eps).unwrap() - 0.01).abs() < 1e-15);
        assert!(u.continuity_modulus(0.0).is_err());
    }

    #[test]
    fn smoothed_log_holder_empirical_modulus() {
        // empirical CDF increments stay within a small factor of the
        // analytic modulus at a few scales
        let ens = DisorderEnsemble::new(EnsembleKind::SmoothedLogHolder { c: 1.0, a: 1.0 }, 5);
        let n = 200_000;
        let mut vals: Vec<f64> = (0..n).map(|i| ens.site_value(0, &[i])).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &eps in &[1e-3, 1e-2] {
            let analytic = ens.continuity_modulus(eps).unwrap();
            // worst empirical increment over a coarse grid of anchors
            let mut worst = 0.0f64;
            for anchor in (0..100).map(|k| k as f64 / 100.0) {
                let lo = vals.partition_point(|&v| v <= anchor);
                let hi = vals.partition_point(|&v| v <= anchor + eps);
                worst = worst.max((hi - lo) as f64 / n as f64);
            }
            assert!(
                worst <= 3.0 * analytic + 5e-3,
                "eps={eps}: empirical {worst} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn assumption_p_exponent_arithmetic() {
        let ladder = ScaleLadder::new(9, 1).unwrap();
        let ens = DisorderEnsemble::uniform01(0);
        let rep = assumption_p_check(&ens, 2, 1, 13.0, 0.5, &ladder);
        assert_eq!(rep.required_a, 330.0);
        assert!(rep.satisfied_asymptotically);
        // threshold at L=9, beta=1/2: eps = e^{-3}
        let (l, s, _, _) = rep.per_level[0];
        assert_eq!(l, 9);
        assert!((s - (-3.0f64).exp()).abs() < 1e-12);
        assert!((s - 0.049787).abs() < 1e-5);
    }

    #[test]
    fn free_operator_is_tridiagonal() {
        let r = cube1(0, 1);
        let pot = PotentialSample::zero(full_projection(&r));
        let op = assemble(&r, &pot, &InteractionSpec::none()).unwrap();
        assert_eq!(op.dim(), 3);
        let expect = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(op.entry(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn constant_shift_moves_diagonal_by_n_c() {
        let r = Rectangle::cube(Config::line(&[0, 10]), 1).unwrap();
        let ens = DisorderEnsemble::uniform01(3);
        let pot = PotentialSample::from_window(&ens, 0, full_projection(&r));
        let inter = InteractionSpec::new(vec![0.5, 0.25]).unwrap();
        let op = assemble(&r, &pot, &inter).unwrap();
        let op_shifted = assemble(&r, &pot.shifted(0.75), &inter).unwrap();
        for i in 0..op.dim() {
            assert!((op_shifted.diag()[i] - op.diag()[i] - 2.0 * 0.75).abs() < 1e-12);
        }
        assert_eq!(op.offdiag_count(), op_shifted.offdiag_count());
    }

    #[test]
    fn assembly_symmetric_and_row_degree_bounded() {
        let r = Rectangle::cube(Config::line(&[0, 4]), 2).unwrap();
        let ens = DisorderEnsemble::uniform01(9);
        let (op, _) = assemble_sampled(&r, &ens, 1, &InteractionSpec::new(vec![1.0, 0.5]).unwrap())
            .unwrap();
        let nd = 2;
        for i in 0..op.dim() {
            assert!(op.neighbors(i).len() <= 2 * nd);
            for &j in op.neighbors(i) {
                assert!(op.neighbors(j as usize).contains(&(i as u32)), "asymmetric at ({i},{j})");
            }
        }
    }

    #[test]
    fn window_too_small_is_reported() {
        let r = cube1(0, 2);
        let pot = PotentialSample::zero([vec![0i64]]);
        assert!(matches!(
            assemble(&r, &pot, &InteractionSpec::none()),
            Err(LabError::WindowTooSmall(_))
        ));
    }

    #[test]
    fn tensor_split_rejects_fi() {
        let r = Rectangle::cube(Config::line(&[0, 3]), 2).unwrap();
        let pot = PotentialSample::zero(full_projection(&r));
        let inter = InteractionSpec::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            tensor_split(&r, &pot, &inter),
            Err(LabError::FullyInteractive)
        ));
    }

    #[test]
    fn ambient_delta_action() {
        let pot = PotentialSample::zero([vec![0i64, 0]]);
        let mut delta: SupportedVector = BTreeMap::new();
        delta.insert(vec![0i64, 0], 1.0);
        let out = apply_ambient(&delta, &pot, &InteractionSpec::none(), 1, 2).unwrap();
        assert_eq!(out[&vec![0, 0]], 4.0, "2dn with d=2, n=1");
        for site in [vec![1i64, 0], vec![-1, 0], vec![0, 1], vec![0, -1]] {
            assert_eq!(out[&site], -1.0);
        }
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn ambient_linear_on_random_vectors() {
        let ens = DisorderEnsemble::uniform01(11);
        let window: Vec<Vec<i64>> = (-4..=4).map(|i| vec![i]).collect();
        let pot = PotentialSample::from_window(&ens, 2, window);
        let inter = InteractionSpec::new(vec![1.0]).unwrap();
        let mut rng = crate::rng::Stream::new(1, 9, 0);
        let mut a: SupportedVector = BTreeMap::new();
        let mut b: SupportedVector = BTreeMap::new();
        for p in -3..=3i64 {
            for q in -3..=3i64 {
                a.insert(vec![p, q], rng.unit() - 0.5);
                b.insert(vec![p, q], rng.unit() - 0.5);
            }
        }
        let sum: SupportedVector = a.iter().map(|(k, v)| (k.clone(), v + b[k])).collect();
        let ha = apply_ambient(&a, &pot, &inter, 2, 1).unwrap();
        let hb = apply_ambient(&b, &pot, &inter, 2, 1).unwrap();
        let hsum = apply_ambient(&sum, &pot, &inter, 2, 1).unwrap();
        for (k, v) in &hsum {
            let parts = ha.get(k).unwrap_or(&0.0) + hb.get(k).unwrap_or(&0.0);
            assert!((v - parts).abs() < 1e-12);
        }
    }

    #[test]
    fn ambient_matches_restriction_in_the_interior() {
        let r = cube1(0, 4);
        let ens = DisorderEnsemble::uniform01(21);
        let (op, pot) = assemble_sampled(&r, &ens, 5, &InteractionSpec::none()).unwrap();
        // vector supported at distance >= 2 from the boundary
        let mut v: SupportedVector = BTreeMap::new();
        let mut rng = crate::rng::Stream::new(2, 10, 0);
        for x in -2..=2i64 {
            v.insert(vec![x], rng.unit());
        }
        let ambient = apply_ambient(&v, &pot, &InteractionSpec::none(), 1, 1).unwrap();
        let map = op.index_map();
        let mut dense_in = vec![0.0; op.dim()];
        for (k, &val) in &v {
            dense_in[map.index_of(k).unwrap()] = val;
        }
        let mut dense_out = vec![0.0; op.dim()];
        op.matvec(&dense_in, &mut dense_out);
        for (k, &val) in &ambient {
            let idx = map.index_of(k).expect("support stays inside");
            assert!((dense_out[idx] - val).abs() < 1e-12);
        }
    }
}
