//! Green (resolvent) columns and the Combes-Thomas deterministic bound.

use crate::error::{LabError, Result};
use crate::geometry::Config;
use crate::operator::OperatorMatrix;
use crate::rng::Stream;
use crate::solver::{dist_to_sorted, eig, init_deterministic_kernels, SpectralData};
use faer::prelude::SpSolver;
use faer::Mat;
use serde::Serialize;
use std::collections::BTreeMap;

/// One column of `(H - E)^{-1}`, solved directly and residual-checked.
#[derive(Clone, Debug, Serialize)]
pub struct GreenColumn {
    pub e: f64,
    pub source: Config,
    #[serde(serialize_with = "crate::solver::green::serialize_values")]
    pub values: BTreeMap<Vec<i64>, f64>,
    /// dist(E, sigma(H)).
    pub eta: f64,
}

pub(crate) fn serialize_values<S: serde::Serializer>(
    values: &BTreeMap<Vec<i64>, f64>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = ser.serialize_map(Some(values.len()))?;
    for (k, v) in values {
        let key: Vec<String> = k.iter().map(|c| c.to_string()).collect();
        map.serialize_entry(&key.join(" "), v)?;
    }
    map.end()
}

/// Solve `(H - E) g = delta_source` by dense LU; records eta and verifies
/// the linear system to `1e-8 (1 + ||g||)`.
pub fn green_column(op: &OperatorMatrix, e: f64, source: &Config) -> Result<GreenColumn> {
    let spectrum = eig(op, false)?;
    green_column_with(op, &spectrum, e, source)
}

/// Same, reusing a precomputed spectrum for the eta / resonance guard.
pub fn green_column_with(
    op: &OperatorMatrix,
    spectrum: &SpectralData,
    e: f64,
    source: &Config,
) -> Result<GreenColumn> {
    init_deterministic_kernels();
    let eta = spectrum.dist_to_spectrum(e);
    if eta < 1e-12 {
        return Err(LabError::ResonantEnergy { energy: e, dist: eta });
    }
    let dim = op.dim();
    let src_idx = op
        .index_map()
        .index_of(source.flat())
        .ok_or_else(|| LabError::InvalidArgument("source outside the rectangle".into()))?;

    let mut shifted = op.to_dense();
    for i in 0..dim {
        shifted[(i, i)] -= e;
    }
    let lu = shifted.partial_piv_lu();
    let mut rhs = Mat::<f64>::zeros(dim, 1);
    rhs[(src_idx, 0)] = 1.0;
    let sol = lu.solve(&rhs);

    let g: Vec<f64> = (0..dim).map(|i| sol[(i, 0)]).collect();
    let mut hg = vec![0.0; dim];
    op.matvec(&g, &mut hg);
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut residual = 0.0f64;
    for i in 0..dim {
        let want = if i == src_idx { 1.0 } else { 0.0 };
        residual += (hg[i] - e * g[i] - want).powi(2);
    }
    let residual = residual.sqrt();
    if residual > 1e-8 * (1.0 + norm) {
        return Err(LabError::NoConvergence { residual, iterations: 1 });
    }

    let map = op.index_map();
    let mut buf = vec![0i64; map.axes()];
    let mut values = BTreeMap::new();
    for (i, &v) in g.iter().enumerate() {
        map.config_at(i, &mut buf);
        values.insert(buf.clone(), v);
    }
    Ok(GreenColumn {
        e,
        source: source.clone(),
        values,
        eta,
    })
}

/// Precomputed spectral weights for scanning `|G(u, v; E)|` over the inner
/// boundary at many energies: `G(u, b; E) = sum_k w_k(b) / (lambda_k - E)`.
pub struct BoundaryGreenScan {
    lambda: Vec<f64>,
    /// row-major |boundary| x dim
    weights: Vec<f64>,
    dim: usize,
    pub boundary: Vec<usize>,
}

impl BoundaryGreenScan {
    pub fn new(op: &OperatorMatrix, spec: &SpectralData) -> Result<Self> {
        let v = spec
            .eigenvectors
            .as_ref()
            .ok_or_else(|| LabError::InvalidArgument("boundary scan needs eigenvectors".into()))?;
        if !spec.complete {
            return Err(LabError::InvalidArgument("boundary scan needs a complete decomposition".into()));
        }
        let dim = op.dim();
        let center = op.center_index();
        let boundary = op.index_map().inner_boundary_indices();
        let mut weights = vec![0.0; boundary.len() * dim];
        for (row, &b) in boundary.iter().enumerate() {
            for k in 0..dim {
                weights[row * dim + k] = v[(center, k)] * v[(b, k)];
            }
        }
        Ok(BoundaryGreenScan {
            lambda: spec.eigenvalues.clone(),
            weights,
            dim,
            boundary,
        })
    }

    /// max over the inner boundary of |G(center, v; E)|.
    pub fn max_abs(&self, e: f64) -> f64 {
        let mut worst = 0.0f64;
        for row in 0..self.boundary.len() {
            let w = &self.weights[row * self.dim..(row + 1) * self.dim];
            let mut g = 0.0;
            for k in 0..self.dim {
                g += w[k] / (self.lambda[k] - e);
            }
            worst = worst.max(g.abs());
        }
        worst
    }

    pub fn dist_to_spectrum(&self, e: f64) -> f64 {
        dist_to_sorted(&self.lambda, e)
    }
}

/// Which Green entries a Combes-Thomas sweep inspects.
#[derive(Clone, Copy, Debug)]
pub enum CtPairs {
    /// All ordered pairs (x, y).
    Exact,
    /// A deterministic sample of pairs.
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CtReport {
    pub holds: bool,
    pub worst_ratio: f64,
    /// dist(E, sigma), before clamping into (0, 1].
    pub eta_raw: f64,
    /// The eta the bound is evaluated with.
    pub eta: f64,
    pub pairs_checked: usize,
}

/// Check `|G(x,y;E)| <= 2 eta^{-1} exp(-eta |x-y| / (12 nd))` over pairs of
/// sites. `eta` is clamped to 1 (the bound's regime); an energy on the
/// spectrum is an error.
pub fn combes_thomas_check(
    op: &OperatorMatrix,
    spec: &SpectralData,
    e: f64,
    pairs: CtPairs,
) -> Result<CtReport> {
    let v = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| LabError::InvalidArgument("Combes-Thomas check needs eigenvectors".into()))?;
    let eta_raw = spec.dist_to_spectrum(e);
    if eta_raw <= 0.0 {
        return Err(LabError::ResonantEnergy { energy: e, dist: eta_raw });
    }
    let eta = eta_raw.min(1.0);
    let dim = op.dim();
    let nu = (op.rectangle.n() * op.rectangle.d()) as f64;
    let rate = eta / (12.0 * nu);
    let map = op.index_map();
    let mut bx = vec![0i64; map.axes()];
    let mut by = vec![0i64; map.axes()];

    let green_entry = |x: usize, y: usize| -> f64 {
        let mut g = 0.0;
        for k in 0..dim {
            g += v[(x, k)] * v[(y, k)] / (spec.eigenvalues[k] - e);
        }
        g
    };

    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut inspect = |x: usize, y: usize, worst: &mut f64, checked: &mut usize| {
        map.config_at(x, &mut bx);
        map.config_at(y, &mut by);
        let dist = bx.iter().zip(&by).map(|(a, b)| (a - b).abs()).max().unwrap_or(0);
        let bound = 2.0 / eta * (-rate * dist as f64).exp();
        let ratio = green_entry(x, y).abs() / bound;
        *worst = worst.max(ratio);
        *checked += 1;
    };

    match pairs {
        CtPairs::Exact => {
            for x in 0..dim {
                for y in x..dim {
                    inspect(x, y, &mut worst, &mut checked);
                }
            }
        }
        CtPairs::Sampled { count, seed } => {
            let mut rng = Stream::new(seed, 0x4354, 0);
            for _ in 0..count {
                let x = rng.index(dim);
                let y = rng.index(dim);
                inspect(x, y, &mut worst, &mut checked);
            }
        }
    }

    Ok(CtReport {
        holds: worst <= 1.0,
        worst_ratio: worst,
        eta_raw,
        eta,
        pairs_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{full_projection, Rectangle};
    use crate::operator::{assemble, assemble_sampled, DisorderEnsemble, InteractionSpec, PotentialSample};

    #[test]
    fn one_by_one_system() {
        let r = Rectangle::cube(Config::line(&[0]), 0).unwrap();
        let mut pot = PotentialSample::zero(full_projection(&r));
        pot.set(vec![0], 0.7);
        let op = assemble(&r, &pot, &InteractionSpec::none()).unwrap();
        let g = green_column(&op, 1.3, &Config::line(&[0])).unwrap();
        // H = [2 + 0.7], G = 1/(2.7 - 1.3)
        assert!((g.values[&vec![0]] - 1.0 / 1.4).abs() < 1e-12);
        assert!((g.eta - 1.4).abs() < 1e-12);
    }

    #[test]
    fn resonant_energy_rejected() {
        let r = Rectangle::cube(Config::line(&[0]), 1).unwrap();
        let pot = PotentialSample::zero(full_projection(&r));
        let op = assemble(&r, &pot, &InteractionSpec::none()).unwrap();
        assert!(matches!(
            green_column(&op, 2.0, &Config::line(&[0])),
            Err(LabError::ResonantEnergy { .. })
        ));
    }

    #[test]
    fn symmetry_and_spectral_form() {
        let r = Rectangle::cube(Config::line(&[0, 6]), 2).unwrap();
        let ens = DisorderEnsemble::uniform01(17);
        let (op, _) = assemble_sampled(&r, &ens, 4, &InteractionSpec::new(vec![0.5, 0.5]).unwrap())
            .unwrap();
        let spec = eig(&op, true).unwrap();
        let e = -0.5;
        // two solves from different sources agree transposed
        let u = Config::line(&[0, 6]);
        let w = Config::line(&[1, 5]);
        let gu = green_column_with(&op, &spec, e, &u).unwrap();
        let gw = green_column_with(&op, &spec, e, &w).unwrap();
        assert!((gu.values[w.flat()] - gw.values[u.flat()]).abs() < 1e-10);

        // spectral form matches the direct solve
        let v = spec.eigenvectors.as_ref().unwrap();
        let map = op.index_map();
        let ui = map.index_of(u.flat()).unwrap();
        let mut buf = vec![0i64; map.axes()];
        for idx in 0..op.dim() {
            map.config_at(idx, &mut buf);
            let direct = gu.values[&buf];
            let mut form = 0.0;
            for k in 0..op.dim() {
                form += v[(ui, k)] * v[(idx, k)] / (spec.eigenvalues[k] - e);
            }
            assert!((direct - form).abs() < 1e-8, "at {buf:?}");
        }
    }

    #[test]
    fn boundary_scan_agrees_with_direct_column() {
        let r = Rectangle::cube(Config::line(&[0]), 5).unwrap();
        let ens = DisorderEnsemble::uniform01(8);
        let (op, _) = assemble_sampled(&r, &ens, 1, &InteractionSpec::none()).unwrap();
        let spec = eig(&op, true).unwrap();
        let scan = BoundaryGreenScan::new(&op, &spec).unwrap();
        let e = -0.3;
        let g = green_column_with(&op, &spec, e, &op.rectangle.center).unwrap();
        let direct_max = [vec![-5i64], vec![5]]
            .iter()
            .map(|s| g.values[s].abs())
            .fold(0.0f64, f64::max);
        assert!((scan.max_abs(e) - direct_max).abs() < 1e-10);
    }

    #[test]
    fn ct_bound_on_free_cube() {
        let r = Rectangle::cube(Config::line(&[0]), 10).unwrap();
        let pot = PotentialSample::zero(full_projection(&r));
        let op = assemble(&r, &pot, &InteractionSpec::none()).unwrap();
        let spec = eig(&op, true).unwrap();
        let rep = combes_thomas_check(&op, &spec, -1.0, CtPairs::Exact).unwrap();
        assert!(rep.holds, "worst ratio {}", rep.worst_ratio);
        assert_eq!(rep.eta, 1.0, "raw eta {} clamps to 1", rep.eta_raw);

        // true decay rate of the free resolvent at E = -1 is arccosh(3/2),
        // much steeper than the bound's 1/12
        let g = green_column_with(&op, &spec, -1.0, &op.rectangle.center).unwrap();
        let v1 = g.values[&vec![5]].abs();
        let v2 = g.values[&vec![9]].abs();
        let rate = (v1.ln() - v2.ln()) / 4.0;
        let expect = 1.5f64.acosh();
        assert!((rate - expect).abs() < 0.05, "rate {rate} vs {expect}");
    }

    #[test]
    fn ct_diagonal_entries_within_spectral_bound() {
        let r = Rectangle::cube(Config::line(&[0, 7]), 2).unwrap();
        let ens = DisorderEnsemble::uniform01(29);
        let (op, _) = assemble_sampled(&r, &ens, 0, &InteractionSpec::none()).unwrap();
        let spec = eig(&op, true).unwrap();
        let e = spec.lowest() - 0.4;
        let v = spec.eigenvectors.as_ref().unwrap();
        let eta = spec.dist_to_spectrum(e);
        for x in 0..op.dim() {
            let mut g = 0.0;
            for k in 0..op.dim() {
                g += v[(x, k)].powi(2) / (spec.eigenvalues[k] - e);
            }
            assert!(g.abs() <= 1.0 / eta + 1e-12);
        }
    }
}
