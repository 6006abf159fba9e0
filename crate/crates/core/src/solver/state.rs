use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heuristics::{h1_with, h2_with, l1_lambda, l2_lambda};
use super::{SolverParams, Variant};
use crate::error::Result;
use crate::instance::{totals, Instance, JobTotals, Time};
use crate::schedule::{Backward, EvalResult, Evaluator};

/// Cached pairings before the fitness cache is flushed.
const CACHE_LIMIT: usize = 1 << 16;

/// A subpopulation member: a job order (first subpopulation) or a factory
/// map (second), plus the index of its partner in the other subpopulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub perm: Vec<usize>,
    /// 0-based collaborator index.
    pub col: usize,
    /// Changed since the other subpopulation last looked at it.
    pub dirty: bool,
    /// Makespan of this entity paired with its collaborator, as of the last
    /// comparison.
    pub fitness: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elite {
    pub lambda: Vec<usize>,
    pub mu: Vec<usize>,
    pub ca_max: Time,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub pop1: Vec<Entity>,
    pub pop2: Vec<Entity>,
    pub archive: Vec<Elite>,
    pub best_ever: EvalResult,
    /// Generations since `best_ever` last improved.
    pub stagnation: usize,
    pub rng: ChaCha8Rng,
    /// Schedules computed so far (cache hits excluded).
    pub eval_count: u64,
}

/// Search driver; owns the state plus per-instance scratch data.
pub struct Solver<'a> {
    pub(super) inst: &'a Instance,
    pub(super) params: SolverParams,
    pub(super) evaluator: Evaluator<'a>,
    pub(super) totals: JobTotals,
    pub(super) scratch: Backward,
    cache: HashMap<Vec<usize>, Time>,
    key: Vec<usize>,
    deadline: Option<Instant>,
    pub(super) state: SolverState,
}

impl<'a> Solver<'a> {
    /// Builds both subpopulations and the elite archive.
    ///
    /// The first four individuals come from the construction heuristics
    /// (sorted jobs, sorted products, random order, random factories), the
    /// rest are random. Every job order is amended before use.
    pub fn initialize(
        inst: &'a Instance,
        params: SolverParams,
        deadline: Option<Instant>,
    ) -> Result<Self> {
        let evaluator = Evaluator::new(inst);
        // Slot 0 is deterministic, so it doubles as the starting incumbent.
        let l1 = evaluator.amend(&l1_lambda(inst))?;
        let l1_mu = h1_with(inst, &mut Backward::new(inst), &l1);
        let seed_eval = evaluator.evaluate_amended(l1, &l1_mu);
        let mut solver = Solver {
            inst,
            evaluator,
            totals: totals(inst),
            scratch: Backward::new(inst),
            cache: HashMap::new(),
            key: Vec::with_capacity(2 * inst.jobs()),
            deadline,
            state: SolverState {
                pop1: Vec::new(),
                pop2: Vec::new(),
                archive: Vec::new(),
                best_ever: seed_eval,
                stagnation: 0,
                rng: ChaCha8Rng::seed_from_u64(params.seed),
                eval_count: 1,
            },
            params,
        };
        let individuals = solver.fill_population()?;
        solver.install(&individuals);

        let mut ranked: Vec<(Time, usize)> =
            solver.state.pop1.iter().enumerate().map(|(n, e)| (e.fitness, n)).collect();
        ranked.sort_unstable();
        solver.state.archive = ranked
            .iter()
            .take(solver.params.archive_size())
            .map(|&(ca_max, n)| Elite {
                lambda: individuals[n].0.clone(),
                mu: individuals[n].1.clone(),
                ca_max,
            })
            .collect();
        Ok(solver)
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SolverState {
        &mut self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Reinitializes both subpopulations; the archive and best solution
    /// survive.
    pub fn restart(&mut self) -> Result<()> {
        let individuals = self.fill_population()?;
        self.install(&individuals);
        self.state.stagnation = 0;
        Ok(())
    }

    /// One generation of the configured variant.
    pub fn generation(&mut self) -> Result<()> {
        match self.params.variant {
            Variant::Full => {
                self.global_evolve()?;
                self.itm();
                self.local_search()
            }
            Variant::NoLocalSearch => {
                self.global_evolve()?;
                self.itm();
                Ok(())
            }
            Variant::NoCooperation => self.plain_evolve(),
        }
    }

    fn fill_population(&mut self) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        let inst = self.inst;
        let (u, f) = (inst.jobs(), inst.factories());
        let ps = self.params.ps;
        let mut out = Vec::with_capacity(ps);
        for slot in 0..ps {
            let (lambda, mu) = match slot {
                0 => {
                    let lambda = self.evaluator.amend(&l1_lambda(inst))?;
                    let mu = h1_with(inst, &mut self.scratch, &lambda);
                    (lambda, mu)
                }
                1 => {
                    let lambda = self.evaluator.amend(&l2_lambda(inst))?;
                    let mu = h1_with(inst, &mut self.scratch, &lambda);
                    (lambda, mu)
                }
                2 => {
                    let mut lambda: Vec<usize> = (0..u).collect();
                    lambda.shuffle(&mut self.state.rng);
                    let lambda = self.evaluator.amend(&lambda)?;
                    let mu = h1_with(inst, &mut self.scratch, &lambda);
                    (lambda, mu)
                }
                3 => {
                    let mu: Vec<usize> =
                        (0..u).map(|_| self.state.rng.gen_range(0..f)).collect();
                    let lambda = h2_with(inst, &self.totals, &mut self.scratch, &mu);
                    (self.evaluator.amend(&lambda)?, mu)
                }
                _ => {
                    let mut lambda: Vec<usize> = (0..u).collect();
                    lambda.shuffle(&mut self.state.rng);
                    let mu: Vec<usize> =
                        (0..u).map(|_| self.state.rng.gen_range(0..f)).collect();
                    (self.evaluator.amend(&lambda)?, mu)
                }
            };
            out.push((lambda, mu));
        }
        Ok(out)
    }

    fn install(&mut self, individuals: &[(Vec<usize>, Vec<usize>)]) {
        let mut pop1 = Vec::with_capacity(individuals.len());
        let mut pop2 = Vec::with_capacity(individuals.len());
        for (n, (lambda, mu)) in individuals.iter().enumerate() {
            let fitness = self.fitness(lambda, mu);
            pop1.push(Entity { perm: lambda.clone(), col: n, dirty: false, fitness });
            pop2.push(Entity { perm: mu.clone(), col: n, dirty: false, fitness });
        }
        self.state.pop1 = pop1;
        self.state.pop2 = pop2;
    }

    /// System makespan of a deadlock-free order with a factory map. Tracks
    /// the best solution seen.
    pub(super) fn fitness(&mut self, lambda: &[usize], mu: &[usize]) -> Time {
        self.key.clear();
        self.key.extend_from_slice(lambda);
        self.key.extend_from_slice(mu);
        if let Some(&ca) = self.cache.get(self.key.as_slice()) {
            return ca;
        }
        let eval = self.evaluator.evaluate_amended(lambda.to_vec(), mu);
        self.state.eval_count += 1;
        let ca = eval.ca_max;
        if ca < self.state.best_ever.ca_max {
            self.state.best_ever = eval;
        }
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(self.key.clone(), ca);
        ca
    }

    /// Amends `lambda` and returns the amended order with its makespan.
    pub(super) fn amended_fitness(&mut self, lambda: &[usize], mu: &[usize]) -> Result<(Vec<usize>, Time)> {
        let amended = self.evaluator.amend(lambda)?;
        let ca = self.fitness(&amended, mu);
        Ok((amended, ca))
    }

    fn pair1(&mut self, n: usize) -> Time {
        let lambda = std::mem::take(&mut self.state.pop1[n].perm);
        let col = self.state.pop1[n].col;
        let mu = std::mem::take(&mut self.state.pop2[col].perm);
        let ca = self.fitness(&lambda, &mu);
        self.state.pop1[n].perm = lambda;
        self.state.pop2[col].perm = mu;
        self.state.pop1[n].fitness = ca;
        ca
    }

    fn pair2(&mut self, n: usize) -> Time {
        let mu = std::mem::take(&mut self.state.pop2[n].perm);
        let col = self.state.pop2[n].col;
        let lambda = std::mem::take(&mut self.state.pop1[col].perm);
        let ca = self.fitness(&lambda, &mu);
        self.state.pop2[n].perm = mu;
        self.state.pop1[col].perm = lambda;
        self.state.pop2[n].fitness = ca;
        ca
    }

    /// Both co-evolution passes.
    pub fn global_evolve(&mut self) -> Result<()> {
        self.evolve_lambdas()?;
        self.evolve_mus();
        Ok(())
    }

    /// Each job order is challenged by the insertion construction applied
    /// to a random factory map. The winner replaces the incumbent if it is
    /// strictly better or the incumbent's collaborator has changed.
    pub fn evolve_lambdas(&mut self) -> Result<()> {
        let ps = self.state.pop1.len();
        for n in 0..ps {
            if self.expired() {
                break;
            }
            let r = self.state.rng.gen_range(0..ps);
            let mu_r = self.state.pop2[r].perm.clone();
            let built = h2_with(self.inst, &self.totals, &mut self.scratch, &mu_r);
            let (lambda, ca) = self.amended_fitness(&built, &mu_r)?;
            let incumbent = self.pair1(n);
            let partner_changed = self.state.pop2[self.state.pop1[n].col].dirty;
            let rival = self.pair2(r);
            if ca < incumbent || partner_changed {
                let e = &mut self.state.pop1[n];
                e.perm = lambda;
                e.col = r;
                e.dirty = true;
                e.fitness = ca;
            }
            if ca < rival {
                self.state.pop2[r].col = n;
            }
        }
        self.state.pop2.iter_mut().for_each(|e| e.dirty = false);
        Ok(())
    }

    /// Mirror of [`Solver::evolve_lambdas`] for factory maps, built by the
    /// greedy assignment applied to a random job order.
    pub fn evolve_mus(&mut self) {
        let ps = self.state.pop2.len();
        for n in 0..ps {
            if self.expired() {
                break;
            }
            let r = self.state.rng.gen_range(0..ps);
            let lambda_r = self.state.pop1[r].perm.clone();
            let mu = h1_with(self.inst, &mut self.scratch, &lambda_r);
            let ca = self.fitness(&lambda_r, &mu);
            let incumbent = self.pair2(n);
            let partner_changed = self.state.pop1[self.state.pop2[n].col].dirty;
            let rival = self.pair1(r);
            if ca < incumbent || partner_changed {
                let e = &mut self.state.pop2[n];
                e.perm = mu;
                e.col = r;
                e.dirty = true;
                e.fitness = ca;
            }
            if ca < rival {
                self.state.pop1[r].col = n;
            }
        }
        self.state.pop1.iter_mut().for_each(|e| e.dirty = false);
    }

    /// Co-evolution without collaborator exchange: an entity only adopts a
    /// new partner when that strictly improves its own pairing.
    fn plain_evolve(&mut self) -> Result<()> {
        let ps = self.state.pop1.len();
        for n in 0..ps {
            if self.expired() {
                return Ok(());
            }
            let r = self.state.rng.gen_range(0..ps);
            let mu_r = self.state.pop2[r].perm.clone();
            let built = h2_with(self.inst, &self.totals, &mut self.scratch, &mu_r);
            let (lambda, ca) = self.amended_fitness(&built, &mu_r)?;
            if ca < self.pair1(n) {
                let e = &mut self.state.pop1[n];
                e.perm = lambda;
                e.col = r;
                e.fitness = ca;
            }
        }
        for n in 0..ps {
            if self.expired() {
                return Ok(());
            }
            let r = self.state.rng.gen_range(0..ps);
            let lambda_r = self.state.pop1[r].perm.clone();
            let mu = h1_with(self.inst, &mut self.scratch, &lambda_r);
            let ca = self.fitness(&lambda_r, &mu);
            if ca < self.pair2(n) {
                let e = &mut self.state.pop2[n];
                e.perm = mu;
                e.col = r;
                e.fitness = ca;
            }
        }
        Ok(())
    }

    /// Information transfer between the subpopulations and the archive.
    ///
    /// The best pairings of each subpopulation are copied into random slots
    /// of the other subpopulation and of the archive, and the worst entities
    /// take over archived material. All sources are read before any write.
    pub fn itm(&mut self) {
        let ps = self.state.pop1.len();
        let archive_len = self.state.archive.len();
        let f1: Vec<Time> = (0..ps).map(|n| self.pair1(n)).collect();
        let f2: Vec<Time> = (0..ps).map(|n| self.pair2(n)).collect();
        let (b1, w1) = extremes(&f1);
        let (b2, w2) = extremes(&f2);

        let rng = &mut self.state.rng;
        let r1 = rng.gen_range(0..ps);
        let r2 = rng.gen_range(0..ps);
        let r3 = rng.gen_range(0..archive_len);
        let r4 = rng.gen_range(0..archive_len);

        let s = &mut self.state;
        let lambda_b = s.pop1[b1].perm.clone();
        let mu_of_b1 = s.pop2[s.pop1[b1].col].perm.clone();
        let lambda_of_b2 = s.pop1[s.pop2[b2].col].perm.clone();
        let mu_b = s.pop2[b2].perm.clone();
        let elite_lambda = s.archive[r3].lambda.clone();
        let elite_mu = s.archive[r4].mu.clone();

        s.pop1[r1].perm = lambda_of_b2.clone();
        s.pop1[r1].dirty = true;
        s.pop2[r2].perm = mu_of_b1.clone();
        s.pop2[r2].dirty = true;
        s.archive[r3] = Elite { lambda: lambda_b, mu: mu_of_b1, ca_max: f1[b1] };
        s.archive[r4] = Elite { lambda: lambda_of_b2, mu: mu_b, ca_max: f2[b2] };
        s.pop1[w1].perm = elite_lambda;
        s.pop1[w1].dirty = true;
        s.pop2[w2].perm = elite_mu;
        s.pop2[w2].dirty = true;

        for n in 0..ps {
            self.pair1(n);
            self.pair2(n);
        }
    }
}

/// Indices of the first minimum and first maximum.
fn extremes(values: &[Time]) -> (usize, usize) {
    let mut best = 0;
    let mut worst = 0;
    for (n, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = n;
        }
        if v > values[worst] {
            worst = n;
        }
    }
    (best, worst)
}
