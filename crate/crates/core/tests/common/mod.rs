#![allow(dead_code)]

use std::collections::HashMap;

use dafsp::instance::{Coding, Instance, Time};
use dafsp::petri::{build_app, fire_job_and_settle, iba_safe, AppNet, Marking};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EXAMPLE: &str = include_str!("../data/example.json");

pub fn example() -> Instance {
    Instance::from_json(EXAMPLE).unwrap()
}

/// λ = (1,4,5,3,2), μ = (2,2,1,1,2) in 0-based form.
pub fn example_coding() -> Coding {
    Coding::new(vec![0, 3, 4, 2, 1], vec![1, 1, 0, 0, 1])
}

pub struct Shape {
    pub max_jobs: usize,
    pub max_factories: usize,
    pub max_machines: usize,
    pub max_products: usize,
    /// Buffer drawn from [largest product, jobs] when true, else [1, jobs].
    pub feasible: bool,
}

pub fn random_instance(seed: u64, shape: &Shape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = rng.gen_range(1..=shape.max_jobs);
    let f = rng.gen_range(1..=shape.max_factories);
    let m = rng.gen_range(1..=shape.max_machines);
    let l = rng.gen_range(1..=shape.max_products.min(u));
    let processing: Vec<Vec<Time>> =
        (0..u).map(|_| (0..m).map(|_| rng.gen_range(1..=20)).collect()).collect();
    let assembly: Vec<Time> = (0..l).map(|_| rng.gen_range(1..=15)).collect();
    let mut jobs: Vec<usize> = (0..u).collect();
    jobs.shuffle(&mut rng);
    let mut plan = vec![Vec::new(); l];
    for (k, &j) in jobs.iter().enumerate() {
        let q = if k < l { k } else { rng.gen_range(0..l) };
        plan[q].push(j);
    }
    for p in &mut plan {
        p.sort_unstable();
    }
    let largest = plan.iter().map(Vec::len).max().unwrap();
    let low = if shape.feasible { largest } else { 1 };
    let buffer = rng.gen_range(low..=u.max(low));
    Instance::new(f, processing, assembly, plan, buffer).unwrap()
}

pub fn random_coding(inst: &Instance, seed: u64) -> Coding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda: Vec<usize> = (0..inst.jobs()).collect();
    lambda.shuffle(&mut rng);
    let mu = (0..inst.jobs()).map(|_| rng.gen_range(0..inst.factories())).collect();
    Coding::new(lambda, mu)
}

/// Buffer model over sets of entered jobs, independent of the net code.
/// A product leaves the buffer the moment its last member enters.
pub struct SetModel {
    pub jobs: usize,
    pub buffer: usize,
    product_mask: Vec<u32>,
    product_of: Vec<usize>,
    memo: Vec<Option<bool>>,
}

impl SetModel {
    pub fn new(inst: &Instance) -> Self {
        let product_mask = (0..inst.products())
            .map(|q| inst.members(q).iter().fold(0u32, |m, &j| m | 1 << j))
            .collect();
        Self {
            jobs: inst.jobs(),
            buffer: inst.buffer(),
            product_mask,
            product_of: (0..inst.jobs()).map(|j| inst.product_of(j)).collect(),
            memo: vec![None; 1 << inst.jobs()],
        }
    }

    pub fn full(&self) -> u32 {
        ((1u64 << self.jobs) - 1) as u32
    }

    /// Jobs sitting in the buffer once every complete product has left.
    pub fn occupancy(&self, entered: u32) -> usize {
        self.product_mask
            .iter()
            .filter(|&&pm| entered & pm != pm)
            .map(|&pm| (entered & pm).count_ones() as usize)
            .sum()
    }

    pub fn can_enter(&self, entered: u32, job: usize) -> bool {
        entered & (1 << job) == 0 && self.occupancy(entered) < self.buffer
    }

    /// True iff all jobs can still enter from this set.
    pub fn completable(&mut self, entered: u32) -> bool {
        if entered == self.full() {
            return true;
        }
        if let Some(v) = self.memo[entered as usize] {
            return v;
        }
        let v = (0..self.jobs)
            .any(|j| self.can_enter(entered, j) && self.completable(entered | 1 << j));
        self.memo[entered as usize] = Some(v);
        v
    }

    pub fn product_done(&self, entered: u32, job: usize) -> bool {
        let pm = self.product_mask[self.product_of[job]];
        entered & pm == pm
    }

    /// Deferral amendment driven by [`Self::completable`]; `None` when stuck.
    pub fn amend(&mut self, lambda: &[usize]) -> Option<Vec<usize>> {
        let u = lambda.len();
        let mut gamma = lambda.to_vec();
        let mut entered = 0u32;
        for r in 0..u {
            let mut ok = false;
            for _ in r..u {
                let j = gamma[r];
                if self.can_enter(entered, j) && self.completable(entered | 1 << j) {
                    entered |= 1 << j;
                    ok = true;
                    break;
                }
                gamma[r..].rotate_left(1);
            }
            if !ok {
                return None;
            }
        }
        Some(gamma)
    }

    /// True iff `order` enters every job without ever hitting a full buffer.
    pub fn replays(&self, order: &[usize]) -> bool {
        let mut entered = 0u32;
        for &j in order {
            if !self.can_enter(entered, j) {
                return false;
            }
            entered |= 1 << j;
        }
        entered == self.full()
    }
}

/// Up to eight jobs, any buffer size.
pub const SMALL: Shape =
    Shape { max_jobs: 8, max_factories: 2, max_machines: 2, max_products: 4, feasible: false };

pub struct Audit {
    pub markings: usize,
    pub disagreements: usize,
}

fn check_tokens(inst: &Instance, net: &AppNet, m: &Marking, entered: u32, model: &SetModel) {
    let mut in_buffer = 0;
    for j in 0..inst.jobs() {
        let q = inst.product_of(j);
        let (waiting, staged, done) =
            (m.tokens(net.job_place(j)), m.tokens(net.buffered_place(j)), m.tokens(net.product_place(q)));
        assert_eq!(waiting + staged + done, 1, "job {j}");
        let is_in = entered & (1 << j) != 0;
        assert_eq!(waiting == 0, is_in);
        assert_eq!(done == 1, model.product_done(entered, j));
        in_buffer += staged as usize;
    }
    assert_eq!(in_buffer, model.occupancy(entered));
    assert_eq!(m.tokens(net.buffer_place()) as usize, inst.buffer() - in_buffer);
}

/// Walks every settled marking reachable from the initial one and compares
/// the safety test with the set model.
fn audit(inst: &Instance) -> Audit {
    let net = build_app(inst);
    let mut model = SetModel::new(inst);
    let mut seen: HashMap<u32, Marking> = HashMap::new();
    let mut stack = vec![(0u32, net.initial_marking())];
    let mut disagreements = 0;
    while let Some((entered, m)) = stack.pop() {
        if seen.contains_key(&entered) {
            continue;
        }
        check_tokens(inst, &net, &m, entered, &model);
        if iba_safe(&net, &m) != model.completable(entered) {
            disagreements += 1;
        }
        for j in 0..inst.jobs() {
            let fired = fire_job_and_settle(&net, &m, j);
            assert_eq!(fired.is_ok(), model.can_enter(entered, j));
            if let Ok(next) = fired {
                stack.push((entered | 1 << j, next));
            }
        }
        seen.insert(entered, m);
    }
    Audit { markings: seen.len(), disagreements }
}

pub fn equivalence_over(instances: u64) -> (usize, usize) {
    let mut total = (0, 0);
    for seed in 0..instances {
        let a = audit(&random_instance(seed, &SMALL));
        total.0 += a.markings;
        total.1 += a.disagreements;
    }
    total
}


/// Textbook backward recursion over the amended order. Returns start and
/// completion matrices (job-major) after shifting the earliest start to 0.
pub fn backward_oracle(inst: &Instance, order: &[usize], mu: &[usize]) -> (Vec<Vec<Time>>, Vec<Vec<Time>>) {
    let (u, m) = (order.len(), inst.machines());
    let last = m - 1;
    let mut c = vec![vec![0; m]; inst.jobs()];
    let mut s = vec![vec![0; m]; inst.jobs()];
    let succ = |h: usize| (h + 1..u).map(|g| order[g]).find(|&j| mu[j] == mu[order[h]]);
    for h in (0..u).rev() {
        let i = order[h];
        let mut ci = if h + 1 == u {
            0
        } else {
            let next = order[h + 1];
            if mu[next] == mu[i] { s[next][last] } else { c[next][last] - 1 }
        };
        if let Some(n) = succ(h) {
            ci = ci.min(s[n][last]);
        }
        c[i][last] = ci;
        s[i][last] = ci - inst.processing(i, last);
    }
    for k in (0..last).rev() {
        for h in (0..u).rev() {
            let i = order[h];
            let mut ci = s[i][k + 1];
            if let Some(n) = succ(h) {
                ci = ci.min(s[n][k]);
            }
            c[i][k] = ci;
            s[i][k] = ci - inst.processing(i, k);
        }
    }
    let shift = -order.iter().flat_map(|&i| s[i].iter().copied()).min().unwrap_or(0);
    for &i in order {
        for k in 0..m {
            s[i][k] += shift;
            c[i][k] += shift;
        }
    }
    (s, c)
}

/// Event-driven replay of the assembly machine given buffer entry times.
/// Returns (assembly starts, assembly completions, makespan).
pub fn assembly_replay(inst: &Instance, entry: &[Time], sigma: &[usize]) -> (Vec<Time>, Vec<Time>, Time) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    // Events: (time, kind, id); kind 0 = job arrives, 1 = assembly done.
    let mut events: BinaryHeap<Reverse<(Time, u8, usize)>> =
        entry.iter().enumerate().map(|(j, &t)| Reverse((t, 0, j))).collect();
    let mut arrived = vec![false; inst.jobs()];
    let mut busy = false;
    let mut next = 0;
    let mut start = vec![0; inst.products()];
    let mut done = vec![0; inst.products()];
    let mut makespan = 0;
    while let Some(Reverse((t, kind, id))) = events.pop() {
        match kind {
            0 => arrived[id] = true,
            _ => {
                busy = false;
                done[id] = t;
                makespan = t;
            }
        }
        if !busy && next < sigma.len() && inst.members(sigma[next]).iter().all(|&j| arrived[j]) {
            // Hold off while more arrivals share this instant.
            if events.peek().is_some_and(|Reverse((t2, k, _))| *t2 == t && *k == 0) {
                continue;
            }
            let q = sigma[next];
            next += 1;
            busy = true;
            start[q] = t;
            events.push(Reverse((t + inst.assembly_time(q), 1, q)));
        }
    }
    (start, done, makespan)
}

/// Jobs present in the buffer at each instant when entries precede the
/// removal of a product that becomes complete at that same instant.
pub fn buffer_peak_by_scan(inst: &Instance, entry: &[Time], asm_start: &[Time]) -> usize {
    let mut instants: Vec<Time> = entry.iter().chain(asm_start).copied().collect();
    instants.sort_unstable();
    instants.dedup();
    let mut peak = 0;
    for &t in &instants {
        let mut count = 0;
        for j in 0..inst.jobs() {
            let q = inst.product_of(j);
            let ready = inst.members(q).iter().map(|&i| entry[i]).max().unwrap();
            let sa = asm_start[q];
            let present = entry[j] <= t && (t < sa || (t == sa && ready == sa));
            count += present as usize;
        }
        peak = peak.max(count);
    }
    peak
}

/// Fraction of random codings whose timed buffer peak stays within capacity,
/// plus a description of each violating case.
pub fn buffer_compliance(cases: u64) -> (usize, usize, Vec<String>) {
    let shape =
        Shape { max_jobs: 10, max_factories: 3, max_machines: 4, max_products: 4, feasible: true };
    let mut within = 0;
    let mut violations = Vec::new();
    for seed in 0..cases {
        let inst = random_instance(seed, &shape);
        let coding = random_coding(&inst, seed + 77);
        let eval = dafsp::evaluate(&inst, &coding).unwrap();
        if eval.max_buffer_occupancy <= inst.buffer() {
            within += 1;
        } else {
            violations.push(format!(
                "seed {seed}: peak {} > buffer {} (u={}, f={}, l={})",
                eval.max_buffer_occupancy,
                inst.buffer(),
                inst.jobs(),
                inst.factories(),
                inst.products()
            ));
        }
    }
    (within, cases as usize, violations)
}

/// Lowest system makespan over every (order, factory map) coding.
pub fn brute_force_optimum(inst: &Instance) -> Time {
    let u = inst.jobs();
    let f = inst.factories();
    let evaluator = dafsp::Evaluator::new(inst);
    let mut perms = Vec::new();
    permutations(&mut (0..u).collect(), 0, &mut perms);
    let mut best = Time::MAX;
    let mut mu = vec![0; u];
    for code in 0..f.pow(u as u32) {
        let mut c = code;
        for slot in mu.iter_mut() {
            *slot = c % f;
            c /= f;
        }
        for lambda in &perms {
            let Ok(amended) = evaluator.amend(lambda) else { continue };
            best = best.min(evaluator.evaluate_amended(amended, &mu).ca_max);
        }
    }
    best
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Toy instance for optimality checks: 5 or 6 jobs, two factories.
pub fn toy_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = rng.gen_range(5..=6);
    let l = rng.gen_range(1..=3);
    let cfg = dafsp::bench::GeneratorConfig::new(u, 2, rng.gen_range(2..=3), l, seed);
    dafsp::bench::generate_instance(&cfg).unwrap()
}

/// Every broken schedule rule, as text; empty when the schedule is sound.
pub fn schedule_violations(inst: &Instance, e: &dafsp::EvalResult) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            out.push(what);
        }
    };
    let s = &e.schedule;
    let m = inst.machines();
    for i in 0..inst.jobs() {
        for k in 0..m {
            check(s.completion(i, k) == s.start(i, k) + inst.processing(i, k), format!("duration of job {i} on {k}"));
            if k + 1 < m {
                check(s.start(i, k + 1) >= s.completion(i, k), format!("route order of job {i} at {k}"));
            }
        }
    }
    for seq in dafsp::instance::factory_sequences(inst.factories(), &e.lambda_prime, &s.mu) {
        for w in seq.windows(2) {
            for k in 0..m {
                check(s.completion(w[0], k) <= s.start(w[1], k), format!("jobs {} and {} overlap on {k}", w[0], w[1]));
            }
        }
    }
    for q in 0..inst.products() {
        let ready = inst.members(q).iter().map(|&i| s.completion(i, m - 1)).max().unwrap();
        check(s.assembly.start[q] >= ready, format!("product {q} assembled before its parts"));
        check(
            s.assembly.completion[q] == s.assembly.start[q] + inst.assembly_time(q),
            format!("assembly duration of {q}"),
        );
    }
    for w in s.sigma.windows(2) {
        check(s.assembly.start[w[1]] >= s.assembly.completion[w[0]], format!("assembly overlap {} {}", w[0], w[1]));
    }
    let min_start = (0..inst.jobs()).flat_map(|i| (0..m).map(move |k| (i, k))).map(|(i, k)| s.start(i, k)).min();
    check(min_start == Some(0), format!("earliest start {min_start:?}"));
    for w in e.lambda_prime.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ok = if s.mu[a] == s.mu[b] {
            s.completion(a, m - 1) <= s.start(b, m - 1)
        } else {
            s.completion(a, m - 1) < s.completion(b, m - 1)
        };
        check(ok, format!("entry order of {a} and {b}"));
    }
    let longest = (0..inst.jobs()).map(|i| inst.job_times(i).iter().sum::<i64>()).max().unwrap();
    let assembly_total: i64 = (0..inst.products()).map(|q| inst.assembly_time(q)).sum();
    check(e.ca_max >= e.cm_max && e.cm_max >= longest, "makespan bounds".into());
    check(e.ca_max >= assembly_total, "assembly total bound".into());
    out
}
