//! Eigenvalue-concentration experiments: the two-volume Wegner-type bound
//! and the two-cube complete-non-resonance event.

use super::{energy_grid, run_trials, ExperimentPlan, MonteCarloEstimate};
use crate::error::{LabError, Result};
use crate::geometry::{full_projection, is_separable, Rectangle};
use crate::operator::{assemble, PotentialSample};
use crate::solver::{eig, is_e_cnr, spectral_gap, sub_cube_family, CnrEnumeration, CNR_BUDGET};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Debug, Serialize)]
pub struct WegnerPoint {
    pub eps: f64,
    pub estimate: MonteCarloEstimate,
    /// Empirical P(eps)/eps.
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WegnerResult {
    pub points: Vec<WegnerPoint>,
    /// max/min of the nonzero slopes (flatness of P(eps)/eps).
    pub slope_spread: f64,
    pub all_within_bound: bool,
}

/// Estimate `P{ dist(sigma, sigma') <= eps }` for each eps against the
/// two-volume bound `|C'| |C| max_i |Pi_i| s(F_V, 2 eps)`. The rectangles
/// must be pre-separable.
pub fn wegner_experiment(
    plan: &ExperimentPlan,
    rect_a: &Rectangle,
    rect_b: &Rectangle,
    eps_list: &[f64],
) -> Result<WegnerResult> {
    let verdict = is_separable(rect_a, rect_b, plan.params.big_n)?;
    if verdict.witness_subset.is_none() {
        return Err(LabError::InvalidArgument(
            "Wegner experiment requires pre-separable rectangles".into(),
        ));
    }
    if eps_list.is_empty() {
        return Err(LabError::InvalidArgument("empty eps list".into()));
    }

    let mut window: BTreeSet<Vec<i64>> = full_projection(rect_a);
    window.extend(full_projection(rect_b));

    let dists = run_trials(plan.trials, plan.workers, |trial| {
        let pot = PotentialSample::from_window(&plan.ensemble, trial, window.iter().cloned());
        let op_a = assemble(rect_a, &pot, &plan.interaction)?;
        let op_b = assemble(rect_b, &pot, &plan.interaction)?;
        let sa = eig(&op_a, false)?;
        let sb = eig(&op_b, false)?;
        Ok(spectral_gap(&sa.eigenvalues, &sb.eigenvalues))
    })?;

    let card_a = rect_a.cardinality() as f64;
    let card_b = rect_b.cardinality() as f64;
    let max_pi = rect_a
        .radii
        .iter()
        .chain(rect_b.radii.iter())
        .map(|&l| (2 * l + 1).pow(rect_a.d() as u32))
        .max()
        .expect("nonempty radii") as f64;

    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let hits = dists.iter().filter(|&&d| d <= eps).count() as u64;
        let s = plan.ensemble.continuity_modulus(2.0 * eps)?;
        let bound_log10 = (card_a * card_b * max_pi).log10() + s.log10();
        let estimate = MonteCarloEstimate::new(
            hits,
            plan.trials,
            bound_log10,
            "two-box spectral distance: P{dist(sigma, sigma') <= eps} <= |C||C'| max|Pi_i| s(F_V, 2 eps)",
        );
        let slope = estimate.point / eps;
        points.push(WegnerPoint { eps, estimate, slope });
    }

    let nonzero: Vec<f64> = points.iter().map(|p| p.slope).filter(|&s| s > 0.0).collect();
    let slope_spread = if nonzero.len() >= 2 {
        let max = nonzero.iter().cloned().fold(f64::MIN, f64::max);
        let min = nonzero.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    } else {
        f64::INFINITY
    };
    let all_within_bound = points.iter().all(|p| p.estimate.within_bound());
    Ok(WegnerResult {
        points,
        slope_spread,
        all_within_bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CnrPairResult {
    pub estimate: MonteCarloEstimate,
    pub grid_size_mean: f64,
    /// Potential on the second cube copied from the first (control runs).
    pub mirrored: bool,
}

/// Estimate `P{ exists E on the grid: neither cube is E-CNR }` for a
/// separable pair, against `L^{-4^N p}`.
pub fn cnr_pair_experiment(
    plan: &ExperimentPlan,
    cube_a: &Rectangle,
    cube_b: &Rectangle,
    mirror_potential: bool,
) -> Result<CnrPairResult> {
    let verdict = is_separable(cube_a, cube_b, plan.params.big_n)?;
    if !verdict.separable {
        return Err(LabError::InvalidArgument(
            "CNR pair experiment requires separable cubes".into(),
        ));
    }
    let l = cube_a
        .equal_radius()
        .ok_or_else(|| LabError::InvalidArgument("CNR needs cubes".into()))?;
    if cube_b.equal_radius() != Some(l) {
        return Err(LabError::InvalidArgument("cubes must share one radius".into()));
    }

    let mut window: BTreeSet<Vec<i64>> = full_projection(cube_a);
    window.extend(full_projection(cube_b));
    let beta = plan.params.beta;
    let e_star = plan.params.e_star;
    let step = plan.grid_step();

    let outcomes = run_trials(plan.trials, plan.workers, |trial| {
        let mut pot = PotentialSample::from_window(&plan.ensemble, trial, window.iter().cloned());
        if mirror_potential {
            // same per-particle pattern on both cubes: the planted-resonance
            // control that inflates the failure rate
            let d = cube_a.d();
            for i in 0..cube_a.n() {
                let (lo_a, hi_a) = cube_a.particle_box(i);
                let (lo_b, _) = cube_b.particle_box(i);
                let mut site = lo_a.clone();
                'odometer: loop {
                    let shifted: Vec<i64> =
                        site.iter().zip(&lo_a).zip(&lo_b).map(|((s, a), b)| s - a + b).collect();
                    let v = pot.value(&site).expect("window covers cube a");
                    pot.set(shifted, v);
                    for axis in (0..d).rev() {
                        site[axis] += 1;
                        if site[axis] <= hi_a[axis] {
                            continue 'odometer;
                        }
                        site[axis] = lo_a[axis];
                    }
                    break;
                }
            }
        }
        let fam_a = sub_cube_family(cube_a, &pot, &plan.interaction, CnrEnumeration::Exact, CNR_BUDGET)?;
        let fam_b = sub_cube_family(cube_b, &pot, &plan.interaction, CnrEnumeration::Exact, CNR_BUDGET)?;
        let host_a = eig(&assemble(cube_a, &pot, &plan.interaction)?, false)?;
        let host_b = eig(&assemble(cube_b, &pot, &plan.interaction)?, false)?;
        let grid = energy_grid(
            e_star,
            step,
            &[&host_a.eigenvalues, &host_b.eigenvalues],
            l,
            beta,
        );
        let hit = grid
            .iter()
            .any(|&e| !is_e_cnr(&fam_a, e, beta).cnr && !is_e_cnr(&fam_b, e, beta).cnr);
        Ok((hit, grid.len()))
    })?;

    let hits = outcomes.iter().filter(|(h, _)| *h).count() as u64;
    let grid_size_mean =
        outcomes.iter().map(|(_, g)| *g as f64).sum::<f64>() / outcomes.len().max(1) as f64;
    let bound_log10 = -(4f64.powi(plan.params.big_n as i32) * plan.params.p) * (l as f64).log10();
    let estimate = MonteCarloEstimate::new(
        hits,
        plan.trials,
        bound_log10,
        "two-cube complete non-resonance: P{exists E: neither cube E-CNR} < L^{-4^N p}",
    );
    Ok(CnrPairResult {
        estimate,
        grid_size_mean,
        mirrored: mirror_potential,
    })
}
