//! Assembly-procedure Petri net.
//!
//! Every job `i` owns a path `p_i -> t_i -> p_i^e`; every product `q` owns
//! `t_q -> p_q^e`. Firing `t_i` moves a finished job into the assembly buffer
//! and consumes one token of the buffer place `p_B`; firing `t_q` consumes the
//! `p_i^e` tokens of all its members and returns `|AP_q|` tokens to `p_B`.
//!
//! Place layout: `p_i` at `i`, `p_i^e` at `u + i`, `p_q^e` at `2u + q`,
//! `p_B` at `2u + l`. Transitions: `t_i` at `i`, `t_q` at `u + q`.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default job count limit of the exhaustive reachability oracle.
pub const ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub input: Vec<(usize, u32)>,
    pub output: Vec<(usize, u32)>,
}

#[derive(Debug, Clone)]
pub struct AppNet {
    jobs: usize,
    products: usize,
    capacity: u32,
    members: Vec<Vec<usize>>,
    product_of: Vec<usize>,
    places: Vec<String>,
    transitions: Vec<Transition>,
}

/// Token count per place.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn set(&mut self, place: usize, tokens: u32) {
        self.0[place] = tokens;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

pub fn build_app(inst: &Instance) -> AppNet {
    let u = inst.jobs();
    let l = inst.products();
    let mut places = Vec::with_capacity(2 * u + l + 1);
    places.extend((1..=u).map(|i| format!("p_i{i}")));
    places.extend((1..=u).map(|i| format!("p_i{i}^e")));
    places.extend((1..=l).map(|q| format!("p_q{q}^e")));
    places.push("p_B".to_string());
    let buffer = 2 * u + l;

    let mut transitions = Vec::with_capacity(u + l);
    for i in 0..u {
        transitions.push(Transition {
            name: format!("t_i{}", i + 1),
            input: vec![(i, 1), (buffer, 1)],
            output: vec![(u + i, 1)],
        });
    }
    for q in 0..l {
        let members = inst.members(q);
        transitions.push(Transition {
            name: format!("t_q{}", q + 1),
            input: members.iter().map(|&i| (u + i, 1)).collect(),
            output: vec![(2 * u + q, 1), (buffer, members.len() as u32)],
        });
    }

    AppNet {
        jobs: u,
        products: l,
        capacity: inst.buffer() as u32,
        members: inst.plan().to_vec(),
        product_of: (0..u).map(|i| inst.product_of(i)).collect(),
        places,
        transitions,
    }
}

impl AppNet {
    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn products(&self) -> usize {
        self.products
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn job_place(&self, job: usize) -> usize {
        job
    }

    pub fn buffered_place(&self, job: usize) -> usize {
        self.jobs + job
    }

    pub fn product_place(&self, product: usize) -> usize {
        2 * self.jobs + product
    }

    pub fn buffer_place(&self) -> usize {
        2 * self.jobs + self.products
    }

    pub fn job_transition(&self, job: usize) -> usize {
        job
    }

    pub fn assembly_transition(&self, product: usize) -> usize {
        self.jobs + product
    }

    pub fn members(&self, product: usize) -> &[usize] {
        &self.members[product]
    }

    pub fn product_of(&self, job: usize) -> usize {
        self.product_of[job]
    }

    pub fn initial_marking(&self) -> Marking {
        let mut m = vec![0; self.places.len()];
        m[..self.jobs].fill(1);
        m[self.buffer_place()] = self.capacity;
        Marking(m)
    }

    pub fn final_marking(&self) -> Marking {
        let mut m = vec![0; self.places.len()];
        for q in 0..self.products {
            m[self.product_place(q)] = 1;
        }
        m[self.buffer_place()] = self.capacity;
        Marking(m)
    }

    /// Same net with `p_B` initially holding `capacity` tokens.
    pub fn with_capacity(&self, capacity: u32) -> AppNet {
        let mut net = self.clone();
        net.capacity = capacity;
        net
    }

    /// First input place of `transition` lacking tokens, if any.
    pub fn blocking_place(&self, m: &Marking, transition: usize) -> Option<usize> {
        self.transitions[transition]
            .input
            .iter()
            .find(|&&(p, w)| m.0[p] < w)
            .map(|&(p, _)| p)
    }

    pub fn is_enabled(&self, m: &Marking, transition: usize) -> bool {
        self.blocking_place(m, transition).is_none()
    }

    /// Plain firing rule, no settling. Caller guarantees enabledness.
    fn fire_unchecked(&self, m: &mut Marking, transition: usize) {
        let t = &self.transitions[transition];
        for &(p, w) in &t.input {
            m.0[p] -= w;
        }
        for &(p, w) in &t.output {
            m.0[p] += w;
        }
    }

    /// Fires every enabled assembly transition, lowest product first, until
    /// none is enabled.
    pub fn settle(&self, m: &mut Marking) {
        loop {
            let mut fired = false;
            for q in 0..self.products {
                let t = self.assembly_transition(q);
                if self.is_enabled(m, t) {
                    self.fire_unchecked(m, t);
                    fired = true;
                }
            }
            if !fired {
                return;
            }
        }
    }

    /// Human-readable `place<TAB>tokens` listing of a marking.
    pub fn dump_marking(&self, m: &Marking) -> String {
        let mut out = String::new();
        for (name, tokens) in self.places.iter().zip(&m.0) {
            let _ = writeln!(out, "{name}\t{tokens}");
        }
        out
    }

    /// Structure listing: one line per transition with its weighted arcs.
    pub fn dump_structure(&self) -> String {
        let arcs = |list: &[(usize, u32)]| {
            list.iter()
                .map(|&(p, w)| {
                    if w == 1 {
                        self.places[p].clone()
                    } else {
                        format!("{w}*{}", self.places[p])
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let mut out = String::new();
        for t in &self.transitions {
            let _ = writeln!(out, "{}\t{} -> {}", t.name, arcs(&t.input), arcs(&t.output));
        }
        out
    }
}

/// Fires `t_job` at `m`, then settles every assembly transition it enables.
pub fn fire_job_and_settle(net: &AppNet, m: &Marking, job: usize) -> Result<Marking> {
    let t = net.job_transition(job);
    if let Some(p) = net.blocking_place(m, t) {
        return Err(Error::TransitionDisabled { job: job + 1, place: net.places[p].clone() });
    }
    let mut next = m.clone();
    net.fire_unchecked(&mut next, t);
    net.settle(&mut next);
    Ok(next)
}

/// Working state of the banker's-style safety test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IbaWork {
    /// Unfinished products, ascending.
    pub omega: Vec<usize>,
    /// Members of each product that have not yet entered the buffer.
    pub theta: Vec<u32>,
    /// Unfinished products whose missing members fit in the free buffer.
    pub feasible: Vec<usize>,
    /// Current working marking.
    pub m_cu: Marking,
    /// Products virtually assembled so far, in selection order.
    pub assembled: Vec<usize>,
    pub safe: bool,
}

/// Runs the safety test to completion and returns its final working state.
///
/// Each round picks the lowest-id unfinished product whose missing members
/// fit into the free buffer and virtually assembles it, which only ever
/// returns tokens to `p_B`. The marking is safe iff every product gets
/// assembled this way.
pub fn iba_trace(net: &AppNet, m: &Marking) -> IbaWork {
    let theta: Vec<u32> = (0..net.products)
        .map(|q| {
            let inside: u32 = net.members[q].iter().map(|&i| m.0[net.buffered_place(i)]).sum();
            net.members[q].len() as u32 - inside
        })
        .collect();
    let mut work = IbaWork {
        omega: (0..net.products).filter(|&q| m.0[net.product_place(q)] == 0).collect(),
        theta,
        feasible: Vec::new(),
        m_cu: m.clone(),
        assembled: Vec::new(),
        safe: false,
    };
    let pb = net.buffer_place();
    loop {
        if work.omega.is_empty() {
            work.feasible.clear();
            work.safe = true;
            return work;
        }
        let free = work.m_cu.0[pb];
        work.feasible = work.omega.iter().copied().filter(|&q| free >= work.theta[q]).collect();
        let Some(&q) = work.feasible.first() else {
            work.safe = false;
            return work;
        };
        work.omega.retain(|&p| p != q);
        let released = net.members[q].len() as u32 - work.theta[q];
        work.m_cu.0[net.product_place(q)] = 1;
        work.m_cu.0[pb] += released;
        for &i in &net.members[q] {
            work.m_cu.0[net.job_place(i)] = 0;
            work.m_cu.0[net.buffered_place(i)] = 0;
        }
        work.assembled.push(q);
    }
}

/// Whether the final marking is reachable from the settled marking `m`.
pub fn iba_safe(net: &AppNet, m: &Marking) -> bool {
    iba_trace(net, m).safe
}

/// One attempt of the amending loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmendStep {
    /// 0-based position in the output sequence being filled.
    pub position: usize,
    pub job: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amended {
    pub lambda: Vec<usize>,
    pub steps: Vec<AmendStep>,
}

impl Amended {
    /// Jobs that were deferred to the end of the sequence, in order.
    pub fn deferred(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| !s.accepted).map(|s| s.job).collect()
    }
}

/// Reorders `lambda` so that firing its jobs in order never leaves a safe
/// marking. Jobs whose entry would be unsafe are moved to the end of the
/// working sequence and retried.
pub fn idam(net: &AppNet, lambda: &[usize]) -> Result<Vec<usize>> {
    amend(net, lambda, false).map(|a| a.lambda)
}

/// Like [`idam`], also recording every accept/defer decision.
pub fn idam_traced(net: &AppNet, lambda: &[usize]) -> Result<Amended> {
    amend(net, lambda, true)
}

fn amend(net: &AppNet, lambda: &[usize], record: bool) -> Result<Amended> {
    let u = lambda.len();
    let mut gamma = lambda.to_vec();
    let mut m_cu = net.initial_marking();
    let mut steps = Vec::new();
    for r in 0..u {
        let mut accepted = false;
        // Each remaining job gets one try at this position.
        for _ in r..u {
            let job = gamma[r];
            let next = fire_job_and_settle(net, &m_cu, job).ok().filter(|m| iba_safe(net, m));
            if record {
                steps.push(AmendStep { position: r, job, accepted: next.is_some() });
            }
            if let Some(m) = next {
                m_cu = m;
                accepted = true;
                break;
            }
            gamma[r..].rotate_left(1);
        }
        if !accepted {
            return Err(Error::Infeasible { position: r + 1, jobs: u });
        }
    }
    Ok(Amended { lambda: gamma, steps })
}

/// Replays `lambda` from the initial marking; true iff every job can fire
/// and the final marking is reached.
pub fn replays_to_final(net: &AppNet, lambda: &[usize]) -> bool {
    let mut m = net.initial_marking();
    for &job in lambda {
        match fire_job_and_settle(net, &m, job) {
            Ok(next) => m = next,
            Err(_) => return false,
        }
    }
    m == net.final_marking()
}

/// Exhaustive search over settled markings reachable from `m` by job
/// firings. Independent of [`iba_safe`]; meant as a test oracle.
pub fn reach_safe_oracle(net: &AppNet, m: &Marking) -> Result<bool> {
    reach_safe_oracle_capped(net, m, ORACLE_CAP)
}

pub fn reach_safe_oracle_capped(net: &AppNet, m: &Marking, cap: usize) -> Result<bool> {
    if net.jobs > cap {
        return Err(Error::OracleCap { jobs: net.jobs, cap });
    }
    let target = net.final_marking();
    let mut seen = HashSet::new();
    let mut stack = vec![m.clone()];
    seen.insert(m.clone());
    while let Some(cur) = stack.pop() {
        if cur == target {
            return Ok(true);
        }
        for job in 0..net.jobs {
            if let Ok(next) = fire_job_and_settle(net, &cur, job) {
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    Ok(false)
}

/// All settled markings reachable from the initial marking.
pub fn reachable_markings(net: &AppNet, cap: usize) -> Result<Vec<Marking>> {
    if net.jobs > cap {
        return Err(Error::OracleCap { jobs: net.jobs, cap });
    }
    let mut start = net.initial_marking();
    net.settle(&mut start);
    let mut seen = HashSet::new();
    let mut order = vec![start.clone()];
    seen.insert(start);
    let mut head = 0;
    while head < order.len() {
        let cur = order[head].clone();
        head += 1;
        for job in 0..net.jobs {
            if let Ok(next) = fire_job_and_settle(net, &cur, job) {
                if seen.insert(next.clone()) {
                    order.push(next);
                }
            }
        }
    }
    Ok(order)
}
