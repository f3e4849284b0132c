//! Seeded Monte Carlo experiments over the disorder, estimating the event
//! probabilities the multi-scale analysis bounds.
//!
//! Trials are independent tasks keyed by the realization index; results are
//! reduced in trial order, so numeric output does not depend on the worker
//! count. Existential energy events are evaluated on the eigenvalue-
//! augmented grid over `I = [0, E*]` (a computable lower bound for the
//! continuum event).

mod estimate;
mod initial;
mod ladder_events;
mod wegner;

pub use estimate::{clopper_pearson, MonteCarloEstimate};
pub use initial::{
    initial_ds_check, initial_scale_experiment, InitialDsReport, InitialScalePoint,
    InitialScaleResult,
};
pub use ladder_events::{
    count_statistics, ds_estimate, lemma44_implication_audit, tunnelling_probability,
    CountStatistics, DsEstimateResult, Lemma44Audit, TunnellingProbability,
};
pub use wegner::{cnr_pair_experiment, wegner_experiment, CnrPairResult, WegnerPoint, WegnerResult};

use crate::error::{LabError, Result};
use crate::operator::{DisorderEnsemble, InteractionSpec};
use crate::solver::ModelParams;
use rayon::prelude::*;
use serde::Serialize;

/// Common experiment knobs; geometry is supplied per experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentPlan {
    pub params: ModelParams,
    pub ensemble: DisorderEnsemble,
    pub interaction: InteractionSpec,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    /// Uniform grid step over I; defaults to E*/200.
    pub grid_step: Option<f64>,
}

impl ExperimentPlan {
    pub fn new(
        params: ModelParams,
        ensemble: DisorderEnsemble,
        interaction: InteractionSpec,
        trials: u64,
        seed: u64,
    ) -> Self {
        ExperimentPlan {
            params,
            ensemble,
            interaction,
            trials,
            seed,
            workers: 1,
            grid_step: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step.unwrap_or(self.params.e_star / 200.0)
    }
}

/// The eigenvalue-augmented energy grid over [0, E*]: a uniform sweep plus
/// every supplied eigenvalue in the window and resonance-width offsets
/// `lambda +- e^{-L^beta}/2` around them.
pub fn energy_grid(
    e_star: f64,
    step: f64,
    spectra: &[&[f64]],
    l: i64,
    beta: f64,
) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut e = 0.0;
    while e <= e_star {
        grid.push(e);
        e += step;
    }
    grid.push(e_star);
    let offset = (-(l as f64).powf(beta)).exp() / 2.0;
    for spectrum in spectra {
        for &lam in *spectrum {
            if lam > e_star {
                break;
            }
            if lam >= 0.0 {
                grid.push(lam);
            }
            for cand in [lam - offset, lam + offset] {
                if (0.0..=e_star).contains(&cand) {
                    grid.push(cand);
                }
            }
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    grid.dedup();
    grid
}

/// Run independent trials on a dedicated pool, reducing by trial index.
pub fn run_trials<T, F>(trials: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    crate::solver::init_deterministic_kernels();
    if workers <= 1 {
        (0..trials).map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| LabError::Other(format!("thread pool: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(|i| f(i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_uniform_and_eigenvalues() {
        let spec = vec![0.5, 1.7, 9.9];
        let grid = energy_grid(2.0, 0.5, &[&spec], 4, 0.5);
        assert!(grid.windows(2).all(|w| w[0] < w[1]), "sorted strictly");
        assert!(grid.contains(&0.0) && grid.contains(&2.0));
        assert!(grid.contains(&0.5) && grid.contains(&1.7));
        assert!(!grid.iter().any(|&e| e > 2.0), "9.9 excluded");
        let off = (-(4f64).powf(0.5)).exp() / 2.0;
        assert!(grid.iter().any(|&e| (e - (1.7 - off)).abs() < 1e-15));
    }

    #[test]
    fn run_trials_is_order_stable() {
        let single = run_trials(64, 1, |i| Ok(i * i)).unwrap();
        let multi = run_trials(64, 4, |i| Ok(i * i)).unwrap();
        assert_eq!(single, multi);
    }
}
