use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heuristics::{h1_assign, l1_lambda};
use super::{SolveOutcome, SolveStats, SolverParams};
use crate::error::Result;
use crate::instance::Instance;
use crate::schedule::Evaluator;

/// Uniform random codings. Runs `ps` samples per generation so that
/// generation limits are comparable with the co-evolution search.
pub fn random_search(inst: &Instance, params: &SolverParams) -> Result<SolveOutcome> {
    params.validate()?;
    let started = Instant::now();
    let deadline = params.budget_ms.map(|ms| started + Duration::from_millis(ms));
    let evaluator = Evaluator::new(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut lambda: Vec<usize> = (0..inst.jobs()).collect();
    let mut best = None::<crate::schedule::EvalResult>;
    let mut generations = 0u64;
    let mut evaluations = 0u64;
    loop {
        for _ in 0..params.ps {
            lambda.shuffle(&mut rng);
            let mu: Vec<usize> = (0..inst.jobs()).map(|_| rng.gen_range(0..inst.factories())).collect();
            let eval = evaluator.evaluate_amended(evaluator.amend(&lambda)?, &mu);
            evaluations += 1;
            if best.as_ref().is_none_or(|b| eval.ca_max < b.ca_max) {
                best = Some(eval);
            }
        }
        generations += 1;
        let out_of_time = deadline.is_some_and(|d| Instant::now() >= d);
        if out_of_time || params.max_generations.is_some_and(|g| generations >= g) {
            break;
        }
    }
    let eval = best.expect("at least one sample");
    Ok(SolveOutcome {
        coding: eval.coding(),
        eval,
        stats: SolveStats {
            generations,
            evaluations,
            restarts: 0,
            elapsed_ms: started.elapsed().as_millis() as u64,
        },
    })
}

/// Single constructive solution: jobs by descending workload, greedy
/// factory assignment.
pub fn greedy_l1(inst: &Instance) -> Result<SolveOutcome> {
    let started = Instant::now();
    let evaluator = Evaluator::new(inst);
    let lambda = evaluator.amend(&l1_lambda(inst))?;
    let mu = h1_assign(inst, &lambda);
    let eval = evaluator.evaluate_amended(lambda, &mu);
    Ok(SolveOutcome {
        coding: eval.coding(),
        eval,
        stats: SolveStats {
            generations: 0,
            evaluations: 1,
            restarts: 0,
            elapsed_ms: started.elapsed().as_millis() as u64,
        },
    })
}
