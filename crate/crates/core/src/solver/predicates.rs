//! Resonance, complete non-resonance, singularity, HNR and tunnelling.

use crate::error::{LabError, Result};
use crate::geometry::{is_separable, Config, Rectangle, ScaleLadder};
use crate::operator::{assemble, tensor_split, InteractionSpec, OperatorMatrix, PiSplit, PotentialSample};
use crate::rng::Stream;
use crate::solver::{
    dist_to_sorted, eig, gamma, BoundaryGreenScan, EResonanceVerdict, ModelParams, SpectralData,
};
use serde::Serialize;

/// Below this distance to the spectrum the resolvent is treated as blown
/// up: the cube is classified singular without solving.
pub const RESONANCE_SOLVER_TOL: f64 = 1e-12;

/// Default work budget for exact sub-cube enumeration.
pub const CNR_BUDGET: u64 = 1_000_000;

/// (E, m)-singularity verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SingularityVerdict {
    pub singular: bool,
    /// max over the inner boundary of |G(center, v; E)|; infinite when the
    /// resonance guard fired.
    pub max_boundary_green: f64,
    pub threshold: f64,
    pub gamma: f64,
    /// Classification came from the resonance guard, not the Green scan.
    pub resonant: bool,
    pub dist_to_spectrum: f64,
}

/// Reusable singularity scanner for one cube across many energies.
pub struct EmSingularityScan {
    scan: BoundaryGreenScan,
    pub gamma: f64,
    pub threshold: f64,
    pub l: i64,
}

impl EmSingularityScan {
    pub fn new(op: &OperatorMatrix, spec: &SpectralData, params: &ModelParams) -> Result<Self> {
        let l = op.rectangle.radius_min();
        let n = op.rectangle.n();
        let g = gamma(params.m, l, n, params.big_n);
        let threshold = (-g * l as f64).exp();
        Ok(EmSingularityScan {
            scan: BoundaryGreenScan::new(op, spec)?,
            gamma: g,
            threshold,
            l,
        })
    }

    pub fn verdict(&self, e: f64) -> SingularityVerdict {
        let dist = self.scan.dist_to_spectrum(e);
        if dist < RESONANCE_SOLVER_TOL {
            return SingularityVerdict {
                singular: true,
                max_boundary_green: f64::INFINITY,
                threshold: self.threshold,
                gamma: self.gamma,
                resonant: true,
                dist_to_spectrum: dist,
            };
        }
        let max_g = self.scan.max_abs(e);
        SingularityVerdict {
            singular: max_g > self.threshold,
            max_boundary_green: max_g,
            threshold: self.threshold,
            gamma: self.gamma,
            resonant: false,
            dist_to_spectrum: dist,
        }
    }
}

/// One-shot singularity test.
pub fn is_em_singular(
    op: &OperatorMatrix,
    spec: &SpectralData,
    params: &ModelParams,
    e: f64,
) -> Result<SingularityVerdict> {
    Ok(EmSingularityScan::new(op, spec, params)?.verdict(e))
}

/// A sub-cube of a host cube, with its spectrum.
#[derive(Clone, Debug)]
pub struct SubCube {
    pub center: Vec<i64>,
    pub radius: i64,
    pub spectrum: Vec<f64>,
}

/// All (or a stratified sample of) sub-cubes with radius in
/// `[ceil(L^{2/3}), L]` fully contained in a host cube.
#[derive(Clone, Debug)]
pub struct SubCubeFamily {
    pub entries: Vec<SubCube>,
    pub exact: bool,
    pub total_count: u64,
    pub host_radius: i64,
}

#[derive(Clone, Copy, Debug)]
pub enum CnrEnumeration {
    Exact,
    Sampled { count: usize, seed: u64 },
}

/// Smallest integer radius with ell^3 >= L^2, i.e. ell >= L^{1/alpha} for
/// alpha = 3/2, computed exactly.
pub fn min_subcube_radius(l: i64) -> i64 {
    let mut ell = 1i64;
    while (ell as i128).pow(3) < (l as i128).pow(2) {
        ell += 1;
    }
    ell
}

pub fn sub_cube_family(
    cube: &Rectangle,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
    enumeration: CnrEnumeration,
    budget: u64,
) -> Result<SubCubeFamily> {
    let l = cube
        .equal_radius()
        .ok_or_else(|| LabError::InvalidArgument("CNR is defined for cubes".into()))?;
    if l < 2 {
        return Err(LabError::InvalidArgument("CNR needs cube radius >= 2".into()));
    }
    let nd = (cube.n() * cube.d()) as u32;
    let ell_min = min_subcube_radius(l);
    let count_for = |ell: i64| -> u64 { (2 * (l - ell) as u64 + 1).pow(nd) };
    let total_count: u64 = (ell_min..=l).map(count_for).sum();

    let mut entries = Vec::new();
    let mut push_cube = |center_flat: &[i64], ell: i64| -> Result<()> {
        let center = Config::new(cube.n(), cube.d(), center_flat.to_vec())?;
        let sub = Rectangle::cube(center, ell)?;
        let op = assemble(&sub, pot, interaction)?;
        let spec = eig(&op, false)?;
        entries.push(SubCube {
            center: center_flat.to_vec(),
            radius: ell,
            spectrum: spec.eigenvalues,
        });
        Ok(())
    };

    match enumeration {
        CnrEnumeration::Exact => {
            if total_count > budget {
                return Err(LabError::EnumerationBudget { count: total_count, budget });
            }
            let nd = cube.n() * cube.d();
            for ell in ell_min..=l {
                let reach = l - ell;
                let lo: Vec<i64> = cube.center.flat().iter().map(|&c| c - reach).collect();
                let hi: Vec<i64> = cube.center.flat().iter().map(|&c| c + reach).collect();
                let mut cur = lo.clone();
                'odometer: loop {
                    push_cube(&cur, ell)?;
                    for a in (0..nd).rev() {
                        cur[a] += 1;
                        if cur[a] <= hi[a] {
                            continue 'odometer;
                        }
                        cur[a] = lo[a];
                    }
                    break;
                }
            }
            Ok(SubCubeFamily {
                entries,
                exact: true,
                total_count,
                host_radius: l,
            })
        }
        CnrEnumeration::Sampled { count, seed } => {
            // stratified by radius, proportional allocation
            let mut rng = Stream::new(seed, 0x434E52, 0);
            for ell in ell_min..=l {
                let share = (count as f64 * count_for(ell) as f64 / total_count as f64).ceil() as usize;
                let reach = l - ell;
                for _ in 0..share.max(1) {
                    let center: Vec<i64> = cube
                        .center
                        .flat()
                        .iter()
                        .map(|&c| rng.range_i64(c - reach, c + reach))
                        .collect();
                    push_cube(&center, ell)?;
                }
            }
            Ok(SubCubeFamily {
                entries,
                exact: false,
                total_count,
                host_radius: l,
            })
        }
    }
}

/// E-CNR verdict; `witness` is the worst offending sub-cube
/// (center, radius, dist, threshold) when not completely non-resonant.
#[derive(Clone, Debug, Serialize)]
pub struct CnrVerdict {
    pub cnr: bool,
    /// Sampled enumeration can only certify failure, not success.
    pub one_sided: bool,
    pub witness: Option<(Vec<i64>, i64, f64, f64)>,
}

/// A cube is E-CNR when no contained sub-cube of radius >= L^{1/alpha} is
/// E-resonant at its own scale.
pub fn is_e_cnr(family: &SubCubeFamily, e: f64, beta: f64) -> CnrVerdict {
    let mut worst: Option<(Vec<i64>, i64, f64, f64)> = None;
    let mut worst_margin = f64::INFINITY;
    for sub in &family.entries {
        let threshold = (-(sub.radius as f64).powf(beta)).exp();
        let dist = dist_to_sorted(&sub.spectrum, e);
        let margin = dist - threshold;
        if margin < 0.0 && margin < worst_margin {
            worst_margin = margin;
            worst = Some((sub.center.clone(), sub.radius, dist, threshold));
        }
    }
    CnrVerdict {
        cnr: worst.is_none(),
        one_sided: !family.exact,
        witness: worst,
    }
}

/// A partially interactive cube with its factor operators and spectra.
pub struct PiCube {
    pub rect: Rectangle,
    pub split: PiSplit,
    pub left: FactorData,
    pub right: FactorData,
}

pub struct FactorData {
    pub op: OperatorMatrix,
    pub spec: SpectralData,
}

impl PiCube {
    /// Decompose a PI cube and diagonalize both factors (with vectors).
    pub fn build(rect: &Rectangle, pot: &PotentialSample, interaction: &InteractionSpec) -> Result<Self> {
        let (left_op, right_op, split) = tensor_split(rect, pot, interaction)?;
        let left_spec = eig(&left_op, true)?;
        let right_spec = eig(&right_op, true)?;
        Ok(PiCube {
            rect: rect.clone(),
            split,
            left: FactorData { op: left_op, spec: left_spec },
            right: FactorData { op: right_op, spec: right_spec },
        })
    }

    /// Sorted pairwise sums {lambda_i + mu_j}: the full-cube spectrum.
    pub fn tensor_spectrum(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.left.spec.eigenvalues.len() * self.right.spec.eigenvalues.len());
        for &a in &self.left.spec.eigenvalues {
            for &b in &self.right.spec.eigenvalues {
                out.push(a + b);
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).expect("no NaN eigenvalues"));
        out
    }

    /// Green function of the full cube through the left eigenbasis:
    /// `G(x, y; E) = sum_i phi_i(x') phi_i(y') G''(x'', y''; E - lambda_i)`.
    pub fn green_by_expansion(&self, x: &[i64], y: &[i64], e: f64) -> Result<f64> {
        let d = self.rect.d();
        let (x1, x2) = self.split.project(x, d);
        let (y1, y2) = self.split.project(y, d);
        let li = self.left.op.index_map().index_of(&x1).ok_or_else(|| {
            LabError::InvalidArgument("x outside the left factor".into())
        })?;
        let lj = self.left.op.index_map().index_of(&y1).ok_or_else(|| {
            LabError::InvalidArgument("y outside the left factor".into())
        })?;
        let ri = self.right.op.index_map().index_of(&x2).ok_or_else(|| {
            LabError::InvalidArgument("x outside the right factor".into())
        })?;
        let rj = self.right.op.index_map().index_of(&y2).ok_or_else(|| {
            LabError::InvalidArgument("y outside the right factor".into())
        })?;
        let lv = self.left.spec.eigenvectors.as_ref().expect("built with vectors");
        let rv = self.right.spec.eigenvectors.as_ref().expect("built with vectors");
        let mut g = 0.0;
        for i in 0..self.left.op.dim() {
            let w = lv[(li, i)] * lv[(lj, i)];
            if w == 0.0 {
                continue;
            }
            let shifted = e - self.left.spec.eigenvalues[i];
            let mut g2 = 0.0;
            for j in 0..self.right.op.dim() {
                g2 += rv[(ri, j)] * rv[(rj, j)] / (self.right.spec.eigenvalues[j] - shifted);
            }
            g += w * g2;
        }
        Ok(g)
    }
}

/// E-HNR: every right eigenvalue shift leaves the left factor CNR and vice
/// versa.
pub fn is_hnr(
    pi: &PiCube,
    left_family: &SubCubeFamily,
    right_family: &SubCubeFamily,
    e: f64,
    beta: f64,
) -> bool {
    for &mu in &pi.right.spec.eigenvalues {
        if !is_e_cnr(left_family, e - mu, beta).cnr {
            return false;
        }
    }
    for &lam in &pi.left.spec.eigenvalues {
        if !is_e_cnr(right_family, e - lam, beta).cnr {
            return false;
        }
    }
    true
}

/// When not HNR, produce the resonant product rectangle the failure
/// implies: a factor sub-cube times the full other factor, E-resonant at
/// the sub-cube's scale.
#[derive(Clone, Debug, Serialize)]
pub struct HnrWitness {
    pub on_left_factor: bool,
    pub sub_center: Vec<i64>,
    pub sub_radius: i64,
    pub dist: f64,
    pub threshold: f64,
}

pub fn hnr_witness(
    pi: &PiCube,
    left_family: &SubCubeFamily,
    right_family: &SubCubeFamily,
    e: f64,
    beta: f64,
) -> Option<HnrWitness> {
    for &mu in &pi.right.spec.eigenvalues {
        let v = is_e_cnr(left_family, e - mu, beta);
        if let Some((center, radius, _, _)) = v.witness {
            // product rectangle spectrum = sigma(sub) + sigma(right factor)
            let sub_spec: Vec<f64> = left_family
                .entries
                .iter()
                .find(|s| s.center == center && s.radius == radius)
                .expect("witness comes from the family")
                .spectrum
                .clone();
            let mut sums: Vec<f64> = sub_spec
                .iter()
                .flat_map(|&a| pi.right.spec.eigenvalues.iter().map(move |&b| a + b))
                .collect();
            sums.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
            let dist = dist_to_sorted(&sums, e);
            let threshold = (-(radius as f64).powf(beta)).exp();
            return Some(HnrWitness {
                on_left_factor: true,
                sub_center: center,
                sub_radius: radius,
                dist,
                threshold,
            });
        }
    }
    for &lam in &pi.left.spec.eigenvalues {
        let v = is_e_cnr(right_family, e - lam, beta);
        if let Some((center, radius, _, _)) = v.witness {
            let sub_spec: Vec<f64> = right_family
                .entries
                .iter()
                .find(|s| s.center == center && s.radius == radius)
                .expect("witness comes from the family")
                .spectrum
                .clone();
            let mut sums: Vec<f64> = sub_spec
                .iter()
                .flat_map(|&a| pi.left.spec.eigenvalues.iter().map(move |&b| a + b))
                .collect();
            sums.sort_by(|x, y| x.partial_cmp(y).expect("no NaN"));
            let dist = dist_to_sorted(&sums, e);
            let threshold = (-(radius as f64).powf(beta)).exp();
            return Some(HnrWitness {
                on_left_factor: false,
                sub_center: center,
                sub_radius: radius,
                dist,
                threshold,
            });
        }
    }
    None
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TunnellingVerdict {
    pub t: bool,
    pub lt: bool,
    pub rt: bool,
}

/// Per-factor sub-cube scanners plus their pairwise separability, built
/// once and reused across energies.
pub struct TunnellingContext {
    left: SideScans,
    right: SideScans,
    pub l_sub: i64,
}

struct SideScans {
    scans: Vec<EmSingularityScan>,
    separable: Vec<Vec<bool>>,
    any_separable_pair: bool,
}

impl SideScans {
    fn build(
        factor: &Rectangle,
        pot: &PotentialSample,
        interaction: &InteractionSpec,
        params: &ModelParams,
        l_sub: i64,
        budget: u64,
    ) -> Result<Self> {
        let l = factor.equal_radius().expect("factors are cubes");
        let n_factor = factor.n();
        let nd = n_factor * factor.d();
        let reach = l - l_sub;
        let mut rects: Vec<Rectangle> = Vec::new();
        if reach >= 0 {
            let exact_count = (2 * reach as u64 + 1).pow(nd as u32);
            let step = if exact_count <= budget { 1 } else { (l_sub / 4).max(1) };
            let lo: Vec<i64> = factor.center.flat().iter().map(|&c| c - reach).collect();
            let hi: Vec<i64> = factor.center.flat().iter().map(|&c| c + reach).collect();
            let mut cur = lo.clone();
            'odometer: loop {
                rects.push(Rectangle::cube(
                    Config::new(n_factor, factor.d(), cur.clone())?,
                    l_sub,
                )?);
                for a in (0..nd).rev() {
                    cur[a] += step;
                    if cur[a] <= hi[a] {
                        continue 'odometer;
                    }
                    cur[a] = lo[a];
                }
                break;
            }
        }
        let mut separable = vec![vec![false; rects.len()]; rects.len()];
        let mut any = false;
        for i in 0..rects.len() {
            for j in (i + 1)..rects.len() {
                let sep = is_separable(&rects[i], &rects[j], params.big_n)?.separable;
                separable[i][j] = sep;
                separable[j][i] = sep;
                any |= sep;
            }
        }
        let factor_params = params.with_n(n_factor);
        let mut scans = Vec::with_capacity(rects.len());
        for rect in &rects {
            let op = assemble(rect, pot, interaction)?;
            let spec = eig(&op, true)?;
            scans.push(EmSingularityScan::new(&op, &spec, &factor_params)?);
        }
        Ok(SideScans {
            scans,
            separable,
            any_separable_pair: any,
        })
    }

    /// Two separable singular sub-cubes at any of the shifted energies?
    fn tunnels(&self, e: f64, other_spectrum: &[f64]) -> bool {
        if !self.any_separable_pair {
            return false;
        }
        let mut singular: Vec<usize> = Vec::new();
        for &shift in other_spectrum {
            let shifted = e - shift;
            singular.clear();
            for (i, scan) in self.scans.iter().enumerate() {
                if scan.verdict(shifted).singular {
                    singular.push(i);
                }
            }
            for (a, &i) in singular.iter().enumerate() {
                for &j in &singular[a + 1..] {
                    if self.separable[i][j] {
                        return true;
                    }
                }
            }
        }
        false
    }
}

impl TunnellingContext {
    pub fn build(
        pi: &PiCube,
        pot: &PotentialSample,
        interaction: &InteractionSpec,
        params: &ModelParams,
        ladder: &ScaleLadder,
        budget: u64,
    ) -> Result<Self> {
        let l = pi
            .rect
            .equal_radius()
            .ok_or_else(|| LabError::InvalidArgument("tunnelling needs a cube".into()))?;
        let l_sub = ladder.predecessor(l)?;
        Ok(TunnellingContext {
            left: SideScans::build(&pi.left.op.rectangle, pot, interaction, params, l_sub, budget)?,
            right: SideScans::build(&pi.right.op.rectangle, pot, interaction, params, l_sub, budget)?,
            l_sub,
        })
    }

    pub fn verdict(&self, pi: &PiCube, e: f64) -> TunnellingVerdict {
        let lt = self.left.tunnels(e, &pi.right.spec.eigenvalues);
        let rt = self.right.tunnels(e, &pi.left.spec.eigenvalues);
        TunnellingVerdict { t: lt || rt, lt, rt }
    }
}

/// (E, m)-tunnelling: some eigenvalue of one factor shifts the energy so
/// that the other factor contains two separable singular sub-cubes at the
/// previous ladder scale.
pub fn is_tunnelling(
    pi: &PiCube,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
    e: f64,
    params: &ModelParams,
    ladder: &ScaleLadder,
    budget: u64,
) -> Result<TunnellingVerdict> {
    let ctx = TunnellingContext::build(pi, pot, interaction, params, ladder, budget)?;
    Ok(ctx.verdict(pi, e))
}

/// Outcome of replaying the NT & HNR => NS implication on one instance.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma46Report {
    pub hnr: bool,
    pub tunnelling: TunnellingVerdict,
    pub singular: SingularityVerdict,
    /// False only if the premises held and the cube was still singular.
    pub implication_holds: bool,
    /// max |direct - expansion| of the full-cube Green function over the
    /// inner boundary, at an off-spectrum probe energy.
    pub expansion_max_err: f64,
}

/// Check the tensor Green expansion and the NT & HNR => NS implication on
/// a PI cube. The full cube is diagonalized densely for the direct route.
#[allow(clippy::too_many_arguments)]
pub fn lemma46_implication_check(
    pi: &PiCube,
    pot: &PotentialSample,
    interaction: &InteractionSpec,
    e: f64,
    params: &ModelParams,
    ladder: &ScaleLadder,
    budget: u64,
) -> Result<Lemma46Report> {
    let full_op = assemble(&pi.rect, pot, interaction)?;
    let full_spec = eig(&full_op, true)?;
    let scan = EmSingularityScan::new(&full_op, &full_spec, params)?;
    let singular = scan.verdict(e);

    let left_family = sub_cube_family(&pi.left.op.rectangle, pot, interaction, CnrEnumeration::Exact, budget)?;
    let right_family = sub_cube_family(&pi.right.op.rectangle, pot, interaction, CnrEnumeration::Exact, budget)?;
    let hnr = is_hnr(pi, &left_family, &right_family, e, params.beta);
    let tunnelling = is_tunnelling(pi, pot, interaction, e, params, ladder, budget)?;
    let implication_holds = !(hnr && !tunnelling.t) || !singular.singular;

    // expansion identity at a probe energy away from the spectrum
    let probe = {
        let mut probe = e;
        if full_spec.dist_to_spectrum(probe) < 1e-6 {
            probe = full_spec.lowest() - 0.5;
        }
        probe
    };
    let v = full_spec.eigenvectors.as_ref().expect("dense path");
    let map = full_op.index_map();
    let center_idx = full_op.center_index();
    let mut buf = vec![0i64; map.axes()];
    let mut center_buf = vec![0i64; map.axes()];
    map.config_at(center_idx, &mut center_buf);
    let mut expansion_max_err = 0.0f64;
    for b in map.inner_boundary_indices() {
        map.config_at(b, &mut buf);
        let mut direct = 0.0;
        for k in 0..full_op.dim() {
            direct += v[(center_idx, k)] * v[(b, k)] / (full_spec.eigenvalues[k] - probe);
        }
        let expansion = pi.green_by_expansion(&center_buf, &buf, probe)?;
        expansion_max_err = expansion_max_err.max((direct - expansion).abs());
    }

    Ok(Lemma46Report {
        hnr,
        tunnelling,
        singular,
        implication_holds,
        expansion_max_err,
    })
}

/// The evaluated predicate record for one (cube, energy) pair; the unit of
/// Monte Carlo aggregation, serializable for report dumps.
#[derive(Clone, Debug, Serialize, Default)]
pub struct PredicateReport {
    pub e_resonant: Option<EResonanceVerdict>,
    pub e_cnr: Option<CnrVerdict>,
    pub em_singular: Option<SingularityVerdict>,
    pub hnr: Option<bool>,
    pub tunnelling: Option<TunnellingVerdict>,
}
