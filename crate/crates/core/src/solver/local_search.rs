use rand::seq::index::sample;

use super::state::{Elite, Solver};
use crate::error::Result;
use crate::instance::{Instance, Time};
use crate::schedule::EvalResult;

/// Factories targeted by the critical-factory moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalInfo {
    /// Last product whose assembly does not follow its predecessor back to
    /// back; the last product when assembly never idles.
    pub critical_product: usize,
    /// Factory of the critical product's last finishing job.
    pub critical_factory: usize,
    /// Factory whose first job starts latest; empty factories count as
    /// starting last.
    pub min_factory: usize,
    /// Jobs of the critical factory in entry order.
    pub removed_jobs: Vec<usize>,
}

pub fn critical_min_factory(inst: &Instance, eval: &EvalResult) -> CriticalInfo {
    let sched = &eval.schedule;
    let sigma = &sched.sigma;
    let asm = &sched.assembly;
    let critical_product = (0..sigma.len().saturating_sub(1))
        .rev()
        .find(|&j| asm.start[sigma[j + 1]] > asm.completion[sigma[j]])
        .map_or(sigma[sigma.len() - 1], |j| sigma[j]);

    let mut position = vec![0; inst.jobs()];
    for (pos, &job) in eval.lambda_prime.iter().enumerate() {
        position[job] = pos;
    }
    let last_job = *inst
        .members(critical_product)
        .iter()
        .max_by_key(|&&i| (sched.times.finish(i), position[i]))
        .expect("products are nonempty");
    let critical_factory = sched.mu[last_job];

    let mut first_start = vec![Time::MAX; inst.factories()];
    for job in 0..inst.jobs() {
        let c = sched.mu[job];
        first_start[c] = first_start[c].min(sched.start(job, 0));
    }
    let mut min_factory = 0;
    for (c, &s) in first_start.iter().enumerate() {
        if s > first_start[min_factory] {
            min_factory = c;
        }
    }

    let removed_jobs =
        eval.lambda_prime.iter().copied().filter(|&j| sched.mu[j] == critical_factory).collect();
    CriticalInfo { critical_product, critical_factory, min_factory, removed_jobs }
}

impl Solver<'_> {
    /// Runs the four improvement moves on every archived elite in turn.
    pub fn local_search(&mut self) -> Result<()> {
        for n in 0..self.state.archive.len() {
            if self.expired() {
                break;
            }
            self.product_reinsertion(n)?;
            self.critical_reinsertion(n)?;
            self.critical_reassignment(n)?;
            self.guided_destruction(n)?;
        }
        Ok(())
    }

    /// Replaces elite `n` when the candidate is strictly better.
    fn offer(&mut self, n: usize, lambda: Vec<usize>, mu: Vec<usize>, ca_max: Time) -> bool {
        if ca_max < self.state.archive[n].ca_max {
            self.state.archive[n] = Elite { lambda, mu, ca_max };
            true
        } else {
            false
        }
    }

    /// Leftmost position in `partial` whose insertion of `job` minimizes the
    /// system makespan. Not-yet-placed jobs (`pending`) ride at the tail so
    /// that every candidate is a complete order.
    fn best_insertion(
        &mut self,
        partial: &[usize],
        job: usize,
        pending: &[usize],
        mu: &[usize],
    ) -> Result<usize> {
        let mut candidate = Vec::with_capacity(partial.len() + 1 + pending.len());
        let mut best = (Time::MAX, 0);
        for pos in 0..=partial.len() {
            candidate.clear();
            candidate.extend_from_slice(&partial[..pos]);
            candidate.push(job);
            candidate.extend_from_slice(&partial[pos..]);
            candidate.extend_from_slice(pending);
            let (_, ca) = self.amended_fitness(&candidate, mu)?;
            if ca < best.0 {
                best = (ca, pos);
            }
        }
        Ok(best.1)
    }

    /// Pulls out `removed` and reinserts each job greedily.
    fn reinsert(&mut self, lambda: &[usize], removed: &[usize], mu: &[usize]) -> Result<Vec<usize>> {
        let mut partial: Vec<usize> =
            lambda.iter().copied().filter(|j| !removed.contains(j)).collect();
        for (k, &job) in removed.iter().enumerate() {
            let pos = self.best_insertion(&partial, job, &removed[k + 1..], mu)?;
            partial.insert(pos, job);
        }
        Ok(partial)
    }

    /// For every product: reinsert its jobs one by one at their best
    /// positions, then move all of them to the single best factory.
    pub(super) fn product_reinsertion(&mut self, n: usize) -> Result<bool> {
        let Elite { mut lambda, mut mu, .. } = self.state.archive[n].clone();
        for q in 0..self.inst.products() {
            if self.expired() {
                return Ok(false);
            }
            let members: Vec<usize> =
                lambda.iter().copied().filter(|&j| self.inst.product_of(j) == q).collect();
            lambda = self.reinsert(&lambda, &members, &mu)?;
            let amended = self.evaluator.amend(&lambda)?;
            let mut best = (Time::MAX, 0);
            let mut candidate = mu.clone();
            for factory in 0..self.inst.factories() {
                for &j in &members {
                    candidate[j] = factory;
                }
                let ca = self.fitness(&amended, &candidate);
                if ca < best.0 {
                    best = (ca, factory);
                }
            }
            for &j in &members {
                mu[j] = best.1;
            }
        }
        let (amended, ca) = self.amended_fitness(&lambda, &mu)?;
        Ok(self.offer(n, amended, mu, ca))
    }

    fn elite_eval(&self, n: usize) -> EvalResult {
        let elite = &self.state.archive[n];
        self.evaluator.evaluate_amended(elite.lambda.clone(), &elite.mu)
    }

    /// Reinserts every job of the critical factory.
    pub(super) fn critical_reinsertion(&mut self, n: usize) -> Result<bool> {
        if self.expired() {
            return Ok(false);
        }
        let info = critical_min_factory(self.inst, &self.elite_eval(n));
        let Elite { lambda, mu, .. } = self.state.archive[n].clone();
        let rebuilt = self.reinsert(&lambda, &info.removed_jobs, &mu)?;
        let (amended, ca) = self.amended_fitness(&rebuilt, &mu)?;
        Ok(self.offer(n, amended, mu, ca))
    }

    /// Moves every job of the critical factory to the min-factory.
    pub(super) fn critical_reassignment(&mut self, n: usize) -> Result<bool> {
        if self.expired() {
            return Ok(false);
        }
        let info = critical_min_factory(self.inst, &self.elite_eval(n));
        if info.critical_factory == info.min_factory {
            return Ok(false);
        }
        let Elite { lambda, mut mu, .. } = self.state.archive[n].clone();
        for &j in &info.removed_jobs {
            mu[j] = info.min_factory;
        }
        let ca = self.fitness(&lambda, &mu);
        Ok(self.offer(n, lambda, mu, ca))
    }

    /// Removes a random subset of jobs and puts them back into their own
    /// slots in the order, and onto the factories, of the best elite.
    pub(super) fn guided_destruction(&mut self, n: usize) -> Result<bool> {
        if self.expired() {
            return Ok(false);
        }
        let u = self.inst.jobs();
        let d = self.params.destruction_count(u);
        let mut slots = sample(&mut self.state.rng, u, d).into_vec();
        slots.sort_unstable();

        let archive = &self.state.archive;
        let best = (0..archive.len()).min_by_key(|&k| (archive[k].ca_max, k)).unwrap_or(0);
        let Elite { lambda: lambda_best, mu: mu_best, .. } = archive[best].clone();
        let Elite { mut lambda, mut mu, .. } = archive[n].clone();

        let mut rank = vec![0; u];
        for (pos, &job) in lambda_best.iter().enumerate() {
            rank[job] = pos;
        }
        let mut removed: Vec<usize> = slots.iter().map(|&s| lambda[s]).collect();
        removed.sort_by_key(|&j| rank[j]);
        for (&slot, &job) in slots.iter().zip(&removed) {
            lambda[slot] = job;
            mu[job] = mu_best[job];
        }
        let (amended, ca) = self.amended_fitness(&lambda, &mu)?;
        Ok(self.offer(n, amended, mu, ca))
    }
}
