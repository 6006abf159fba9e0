use std::cmp::Reverse;

use crate::instance::{totals, Instance, JobTotals};
use crate::schedule::Backward;

/// Greedy factory assignment: walks `lambda` and puts each job into the
/// factory giving the lowest manufacturing makespan of the prefix assigned
/// so far (lowest factory id on ties).
pub fn h1_assign(inst: &Instance, lambda: &[usize]) -> Vec<usize> {
    h1_with(inst, &mut Backward::new(inst), lambda)
}

pub(crate) fn h1_with(inst: &Instance, scratch: &mut Backward, lambda: &[usize]) -> Vec<usize> {
    let mut mu = vec![0; inst.jobs()];
    for n in 0..lambda.len() {
        let job = lambda[n];
        let mut best = (i64::MAX, 0);
        for factory in 0..inst.factories() {
            mu[job] = factory;
            let cm = scratch.cm_max(inst, &lambda[..=n], &mu);
            if cm < best.0 {
                best = (cm, factory);
            }
        }
        mu[job] = best.1;
    }
    mu
}

/// Insertion construction: jobs in descending total processing time, each
/// inserted at the leftmost position minimizing the manufacturing makespan.
/// The result is not amended for deadlock.
pub fn h2_insert(inst: &Instance, mu: &[usize]) -> Vec<usize> {
    h2_with(inst, &totals(inst), &mut Backward::new(inst), mu)
}

pub(crate) fn h2_with(
    inst: &Instance,
    totals: &JobTotals,
    scratch: &mut Backward,
    mu: &[usize],
) -> Vec<usize> {
    let mut lambda: Vec<usize> = Vec::with_capacity(inst.jobs());
    let mut candidate = Vec::with_capacity(inst.jobs());
    for job in l1_order(totals) {
        let mut best = (i64::MAX, 0);
        for pos in 0..=lambda.len() {
            candidate.clear();
            candidate.extend_from_slice(&lambda[..pos]);
            candidate.push(job);
            candidate.extend_from_slice(&lambda[pos..]);
            let cm = scratch.cm_max(inst, &candidate, mu);
            if cm < best.0 {
                best = (cm, pos);
            }
        }
        lambda.insert(best.1, job);
    }
    lambda
}

/// Jobs by descending total processing time, lower id first on ties.
fn l1_order(totals: &JobTotals) -> Vec<usize> {
    let mut order: Vec<usize> = (0..totals.job.len()).collect();
    order.sort_by_key(|&i| (Reverse(totals.job[i]), i));
    order
}

pub fn l1_lambda(inst: &Instance) -> Vec<usize> {
    l1_order(&totals(inst))
}

/// Products by descending workload, each contributing its jobs by
/// descending total processing time.
pub fn l2_lambda(inst: &Instance) -> Vec<usize> {
    let t = totals(inst);
    let mut products: Vec<usize> = (0..inst.products()).collect();
    products.sort_by_key(|&q| (Reverse(t.product[q]), q));
    products
        .into_iter()
        .flat_map(|q| {
            let mut jobs = inst.members(q).to_vec();
            jobs.sort_by_key(|&i| (Reverse(t.job[i]), i));
            jobs
        })
        .collect()
}
