//! Scale-ladder events: two-cube singularity, tunnelling probability,
//! singular-count statistics and the CNR-and-count implication audit.

use super::{energy_grid, run_trials, ExperimentPlan, MonteCarloEstimate};
use crate::error::{LabError, Result};
use crate::geometry::{
    classify_interactivity, count_singular, full_projection, is_separable, kappa, Config,
    Interactivity, Rectangle, ScaleLadder,
};
use crate::operator::{assemble, PotentialSample};
use crate::solver::{
    eig, is_e_cnr, sub_cube_family, CnrEnumeration, EmSingularityScan, PiCube, TunnellingContext,
    CNR_BUDGET,
};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Debug, Serialize)]
pub struct DsEstimateResult {
    pub k: usize,
    pub l_k: i64,
    pub estimate: MonteCarloEstimate,
    /// Mean number of grid energies at which the first cube was singular.
    pub singular_grid_mean_a: f64,
    /// Mean number of grid energies at which both cubes were singular.
    pub joint_grid_mean: f64,
}

/// Estimate `P{ exists E on the grid over I: both cubes are (E,m)-S }` for
/// a separable pair of cubes at ladder scale `L_k`, against
/// `L_k^{-2p 4^{N-n}}`.
pub fn ds_estimate(
    plan: &ExperimentPlan,
    ladder: &ScaleLadder,
    k: usize,
    center_a: &Config,
    center_b: &Config,
) -> Result<DsEstimateResult> {
    let l_k = ladder.level(k);
    let cube_a = Rectangle::cube(center_a.clone(), l_k)?;
    let cube_b = Rectangle::cube(center_b.clone(), l_k)?;
    if !is_separable(&cube_a, &cube_b, plan.params.big_n)?.separable {
        return Err(LabError::InvalidArgument(format!(
            "ds_estimate requires separable cubes at L_k = {l_k}"
        )));
    }
    let mut window: BTreeSet<Vec<i64>> = full_projection(&cube_a);
    window.extend(full_projection(&cube_b));
    let params = &plan.params;
    let step = plan.grid_step();

    let rows = run_trials(plan.trials, plan.workers, |trial| {
        let pot = PotentialSample::from_window(&plan.ensemble, trial, window.iter().cloned());
        let op_a = assemble(&cube_a, &pot, &plan.interaction)?;
        let op_b = assemble(&cube_b, &pot, &plan.interaction)?;
        let spec_a = eig(&op_a, true)?;
        let spec_b = eig(&op_b, true)?;
        let scan_a = EmSingularityScan::new(&op_a, &spec_a, params)?;
        let scan_b = EmSingularityScan::new(&op_b, &spec_b, params)?;
        let grid = energy_grid(
            params.e_star,
            step,
            &[&spec_a.eigenvalues, &spec_b.eigenvalues],
            l_k,
            params.beta,
        );
        let mut singular_a = 0u64;
        let mut joint = 0u64;
        for &e in &grid {
            if scan_a.verdict(e).singular {
                singular_a += 1;
                if scan_b.verdict(e).singular {
                    joint += 1;
                }
            }
        }
        Ok((joint > 0, singular_a, joint))
    })?;

    let hits = rows.iter().filter(|(h, _, _)| *h).count() as u64;
    let trials = plan.trials;
    let exponent = 2.0 * params.p * 4f64.powi((params.big_n - params.n) as i32);
    let bound_log10 = -exponent * (l_k as f64).log10();
    let estimate = MonteCarloEstimate::new(
        hits,
        trials,
        bound_log10,
        "two-cube singularity: P{exists E in I: both separable cubes (E,m)-S} <= L_k^{-2p 4^(N-n)}",
    );
    Ok(DsEstimateResult {
        k,
        l_k,
        estimate,
        singular_grid_mean_a: rows.iter().map(|(_, a, _)| *a as f64).sum::<f64>() / trials as f64,
        joint_grid_mean: rows.iter().map(|(_, _, j)| *j as f64).sum::<f64>() / trials as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TunnellingProbability {
    pub l: i64,
    pub l_sub: i64,
    pub estimate: MonteCarloEstimate,
    pub lt_hits: u64,
    pub rt_hits: u64,
}

/// Estimate `P{ exists E on the grid: the PI cube is (E,m)-T }` against
/// `(1/2) L_{k+1}^{-4p 4^(N-n)}`.
pub fn tunnelling_probability(
    plan: &ExperimentPlan,
    ladder: &ScaleLadder,
    center: &Config,
    l: i64,
) -> Result<TunnellingProbability> {
    let rect = Rectangle::cube(center.clone(), l)?;
    let verdict = classify_interactivity(&rect, plan.interaction.r0())?;
    if verdict.kind != Interactivity::Partially {
        return Err(LabError::FullyInteractive);
    }
    let l_sub = ladder.predecessor(l)?;
    let params = &plan.params;
    let step = plan.grid_step();

    let rows = run_trials(plan.trials, plan.workers, |trial| {
        let pot =
            PotentialSample::from_window(&plan.ensemble, trial, full_projection(&rect));
        let pi = PiCube::build(&rect, &pot, &plan.interaction)?;
        let ctx = TunnellingContext::build(&pi, &pot, &plan.interaction, params, ladder, CNR_BUDGET)?;
        let tensor = pi.tensor_spectrum();
        let grid = energy_grid(params.e_star, step, &[&tensor], l, params.beta);
        let mut lt = false;
        let mut rt = false;
        for &e in &grid {
            let v = ctx.verdict(&pi, e);
            lt |= v.lt;
            rt |= v.rt;
            if lt && rt {
                break;
            }
        }
        Ok((lt, rt))
    })?;

    let lt_hits = rows.iter().filter(|(lt, _)| *lt).count() as u64;
    let rt_hits = rows.iter().filter(|(_, rt)| *rt).count() as u64;
    let hits = rows.iter().filter(|(lt, rt)| *lt || *rt).count() as u64;
    let exponent = 4.0 * params.p * 4f64.powi((params.big_n - params.n) as i32);
    let bound_log10 = 0.5f64.log10() - exponent * (l as f64).log10();
    let estimate = MonteCarloEstimate::new(
        hits,
        plan.trials,
        bound_log10,
        "tunnelling: P{exists E in I: PI cube is (E,m)-T} <= (1/2) L_{k+1}^{-4p 4^(N-n)}",
    );
    Ok(TunnellingProbability {
        l,
        l_sub,
        estimate,
        lt_hits,
        rt_hits,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountStatistics {
    pub l: i64,
    pub l_sub: i64,
    pub scan_step: i64,
    pub scanned_centers: u64,
    /// Per-trial maxima over the grid energies of (M, M_sep, M_PI, M_FI).
    pub per_trial: Vec<(usize, usize, usize, usize)>,
    /// P{M_PI >= kappa(n) + 2} against the pair-count bound.
    pub mpi_estimate: MonteCarloEstimate,
    /// P{M_FI >= 2 ell}.
    pub mfi_estimate: MonteCarloEstimate,
    pub ell: u32,
    pub kappa_threshold: u64,
    /// Lemma `M >= kappa+2 => M_sep >= 2` held on every exact evaluation.
    pub count_lemma_ok: bool,
}

/// Scan sub-cubes of scale `L_k` on a center grid inside a cube of scale
/// `L_{k+1}`, classify each as singular per grid energy, and aggregate the
/// four maximal counts.
pub fn count_statistics(
    plan: &ExperimentPlan,
    ladder: &ScaleLadder,
    center: &Config,
    l: i64,
    ell: u32,
) -> Result<CountStatistics> {
    let rect = Rectangle::cube(center.clone(), l)?;
    let l_sub = ladder.predecessor(l)?;
    let params = &plan.params;
    let nd = (rect.n() * rect.d()) as u32;
    let reach = l - l_sub;
    let exact_count = (2 * reach as u64 + 1).pow(nd);
    let scan_step = if exact_count <= 4096 { 1 } else { (l_sub / 4).max(1) };

    // sub-cube centers on the grid
    let lo: Vec<i64> = center.flat().iter().map(|&c| c - reach).collect();
    let hi: Vec<i64> = center.flat().iter().map(|&c| c + reach).collect();
    let mut centers: Vec<Config> = Vec::new();
    let mut cur = lo.clone();
    'odometer: loop {
        centers.push(Config::new(rect.n(), rect.d(), cur.clone())?);
        for a in (0..nd as usize).rev() {
            cur[a] += scan_step;
            if cur[a] <= hi[a] {
                continue 'odometer;
            }
            cur[a] = lo[a];
        }
        break;
    }
    let kinds: Vec<Interactivity> = centers
        .iter()
        .map(|c| {
            classify_interactivity(&Rectangle::cube(c.clone(), l_sub).expect("radius ok"), plan.interaction.r0())
                .map(|v| v.kind)
        })
        .collect::<Result<_>>()?;
    let step = plan.grid_step();

    let per_trial = run_trials(plan.trials, plan.workers, |trial| {
        let pot =
            PotentialSample::from_window(&plan.ensemble, trial, full_projection(&rect));
        let mut scans = Vec::with_capacity(centers.len());
        let mut spectra_store: Vec<Vec<f64>> = Vec::with_capacity(centers.len());
        for c in &centers {
            let sub = Rectangle::cube(c.clone(), l_sub)?;
            let op = assemble(&sub, &pot, &plan.interaction)?;
            let spec = eig(&op, true)?;
            spectra_store.push(spec.eigenvalues.clone());
            scans.push(EmSingularityScan::new(&op, &spec, params)?);
        }
        let spectra_refs: Vec<&[f64]> = spectra_store.iter().map(|s| s.as_slice()).collect();
        let grid = energy_grid(params.e_star, step, &spectra_refs, l_sub, params.beta);
        let mut best = (0usize, 0usize, 0usize, 0usize);
        let mut lemma_ok = true;
        for &e in &grid {
            let singular: Vec<bool> = scans.iter().map(|s| s.verdict(e).singular).collect();
            if !singular.iter().any(|&s| s) {
                continue;
            }
            let counts = count_singular(&centers, &singular, &kinds, l_sub, params.big_n)?;
            lemma_ok &= counts.lemma43_ok;
            best.0 = best.0.max(counts.m);
            best.1 = best.1.max(counts.m_sep);
            best.2 = best.2.max(counts.m_pi);
            best.3 = best.3.max(counts.m_fi);
        }
        Ok((best, lemma_ok))
    })?;

    let kappa_threshold = kappa(rect.n()) + 2;
    let mpi_hits = per_trial
        .iter()
        .filter(|((_, _, m_pi, _), _)| *m_pi as u64 >= kappa_threshold)
        .count() as u64;
    let mfi_hits = per_trial
        .iter()
        .filter(|((_, _, _, m_fi), _)| *m_fi as u64 >= 2 * ell as u64)
        .count() as u64;
    let count_lemma_ok = per_trial.iter().all(|(_, ok)| *ok);

    let n = params.n;
    let big_n = params.big_n;
    let p = params.p;
    let l_f = l as f64;
    let l_sub_f = l_sub as f64;
    // pair-count bound: (3^{2nd}/2) L_{k+1}^{2nd} (L_k^{-4^N p} + L_k^{-4p 4^{N-n}})
    let term1 = -(4f64.powi(big_n as i32) * p) * l_sub_f.log10();
    let term2 = -(4.0 * p * 4f64.powi((big_n - n) as i32)) * l_sub_f.log10();
    let log_sum = log10_add(term1, term2);
    let mpi_bound_log10 = (2 * n * params.d) as f64 * (3f64.log10() + l_f.log10())
        - 2f64.log10()
        + log_sum;
    // FI family bound: (3^{2 ell n d}/(2 ell)!) L_k^{2 ell d n alpha - 2 ell p 4^{N-n}}
    let ell_f = ell as f64;
    let mfi_bound_log10 = 2.0 * ell_f * (n * params.d) as f64 * 3f64.log10()
        - log10_factorial(2 * ell as u64)
        + (2.0 * ell_f * (params.d * n) as f64 * params.alpha
            - 2.0 * ell_f * p * 4f64.powi((big_n - n) as i32))
            * l_sub_f.log10();

    Ok(CountStatistics {
        l,
        l_sub,
        scan_step,
        scanned_centers: centers.len() as u64,
        mpi_estimate: MonteCarloEstimate::new(
            mpi_hits,
            plan.trials,
            mpi_bound_log10,
            "PI count: P{M_PI >= kappa(n)+2} <= (3^{2nd}/2) L_{k+1}^{2nd} (L_k^{-4^N p} + L_k^{-4p 4^(N-n)})",
        ),
        mfi_estimate: MonteCarloEstimate::new(
            mfi_hits,
            plan.trials,
            mfi_bound_log10,
            "FI count: P{M_FI >= 2 ell} <= (3^{2 ell n d}/(2 ell)!) L_k^{2 ell d n alpha - 2 ell p 4^(N-n)}",
        ),
        per_trial: per_trial.into_iter().map(|(b, _)| b).collect(),
        ell,
        kappa_threshold,
        count_lemma_ok,
    })
}

fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

fn log10_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).log10()).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma44Audit {
    pub l: i64,
    pub l_sub: i64,
    pub j_threshold: u64,
    pub trials: u64,
    /// (realization, E) pairs where the premises held.
    pub premise_count: u64,
    /// Premise-held pairs where the host was nevertheless singular.
    pub violations: u64,
    /// Grid energies skipped because the host was not E-CNR.
    pub cnr_vacuous: u64,
    pub witnesses: Vec<String>,
}

/// Audit `E-CNR and M <= kappa(n)+5 => (E,m)-NS` over sampled
/// realizations and grid energies. Violations are reported, not asserted.
pub fn lemma44_implication_audit(
    plan: &ExperimentPlan,
    ladder: &ScaleLadder,
    center: &Config,
    l: i64,
) -> Result<Lemma44Audit> {
    let rect = Rectangle::cube(center.clone(), l)?;
    let l_sub = ladder.predecessor(l)?;
    let params = &plan.params;
    let j_threshold = kappa(rect.n()) + 5;
    let nd = (rect.n() * rect.d()) as u32;
    let reach = l - l_sub;
    let exact_count = (2 * reach as u64 + 1).pow(nd);
    let scan_step = if exact_count <= 4096 { 1 } else { (l_sub / 4).max(1) };
    let lo: Vec<i64> = center.flat().iter().map(|&c| c - reach).collect();
    let hi: Vec<i64> = center.flat().iter().map(|&c| c + reach).collect();
    let mut centers: Vec<Config> = Vec::new();
    let mut cur = lo.clone();
    'odometer: loop {
        centers.push(Config::new(rect.n(), rect.d(), cur.clone())?);
        for a in (0..nd as usize).rev() {
            cur[a] += scan_step;
            if cur[a] <= hi[a] {
                continue 'odometer;
            }
            cur[a] = lo[a];
        }
        break;
    }
    let kinds: Vec<Interactivity> = centers
        .iter()
        .map(|c| {
            classify_interactivity(&Rectangle::cube(c.clone(), l_sub).expect("radius ok"), plan.interaction.r0())
                .map(|v| v.kind)
        })
        .collect::<Result<_>>()?;
    let step = plan.grid_step();

    let rows = run_trials(plan.trials, plan.workers, |trial| {
        let pot =
            PotentialSample::from_window(&plan.ensemble, trial, full_projection(&rect));
        let host_op = assemble(&rect, &pot, &plan.interaction)?;
        let host_spec = eig(&host_op, true)?;
        let host_scan = EmSingularityScan::new(&host_op, &host_spec, params)?;
        let family =
            sub_cube_family(&rect, &pot, &plan.interaction, CnrEnumeration::Exact, CNR_BUDGET)?;
        let mut scans = Vec::with_capacity(centers.len());
        for c in &centers {
            let sub = Rectangle::cube(c.clone(), l_sub)?;
            let op = assemble(&sub, &pot, &plan.interaction)?;
            let spec = eig(&op, true)?;
            scans.push(EmSingularityScan::new(&op, &spec, params)?);
        }
        let grid = energy_grid(params.e_star, step, &[&host_spec.eigenvalues], l, params.beta);
        let mut premise = 0u64;
        let mut violations = 0u64;
        let mut vacuous = 0u64;
        let mut witnesses = Vec::new();
        for &e in &grid {
            if !is_e_cnr(&family, e, params.beta).cnr {
                vacuous += 1;
                continue;
            }
            let singular: Vec<bool> = scans.iter().map(|s| s.verdict(e).singular).collect();
            let counts = count_singular(&centers, &singular, &kinds, l_sub, params.big_n)?;
            if counts.m as u64 <= j_threshold {
                premise += 1;
                let host = host_scan.verdict(e);
                if host.singular {
                    violations += 1;
                    if witnesses.len() < 8 {
                        witnesses.push(format!(
                            "trial={trial} E={e:.6} M={} maxG={:.3e} threshold={:.3e}",
                            counts.m, host.max_boundary_green, host.threshold
                        ));
                    }
                }
            }
        }
        Ok((premise, violations, vacuous, witnesses))
    })?;

    Ok(Lemma44Audit {
        l,
        l_sub,
        j_threshold,
        trials: plan.trials,
        premise_count: rows.iter().map(|(p, _, _, _)| *p).sum(),
        violations: rows.iter().map(|(_, v, _, _)| *v).sum(),
        cnr_vacuous: rows.iter().map(|(_, _, c, _)| *c).sum(),
        witnesses: rows.into_iter().flat_map(|(_, _, _, w)| w).take(16).collect(),
    })
}
