//! Timed schedules by backward construction.
//!
//! The last job of the amended entry order is anchored at a symbolic time
//! on the last machine, every other time is derived backwards from it, and
//! finally everything is shifted so the earliest start is zero. Assembly
//! then runs forwards over the product order.

use std::fmt::Write as _;

use crate::error::Result;
use crate::instance::{product_order, Coding, Instance, Time};
use crate::petri::{build_app, idam, AppNet};

/// Start and completion times of a set of jobs on every machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobTimes {
    machines: usize,
    start: Vec<Time>,
    completion: Vec<Time>,
    /// Maximum completion on the last machine minus minimum start.
    pub cm_max: Time,
    /// Offset added to every time so that the earliest start is zero.
    pub anchor_shift: Time,
}

impl JobTimes {
    fn new(jobs: usize, machines: usize) -> Self {
        Self {
            machines,
            start: vec![0; jobs * machines],
            completion: vec![0; jobs * machines],
            cm_max: 0,
            anchor_shift: 0,
        }
    }

    #[inline]
    pub fn start(&self, job: usize, machine: usize) -> Time {
        self.start[job * self.machines + machine]
    }

    #[inline]
    pub fn completion(&self, job: usize, machine: usize) -> Time {
        self.completion[job * self.machines + machine]
    }

    /// Completion on the last machine, i.e. the buffer entry time.
    #[inline]
    pub fn finish(&self, job: usize) -> Time {
        self.completion(job, self.machines - 1)
    }
}

/// Reusable scratch space for repeated backward passes over job subsets.
#[derive(Debug, Clone)]
pub struct Backward {
    times: JobTimes,
    successor: Vec<usize>,
    last_in_factory: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Backward {
    pub fn new(inst: &Instance) -> Self {
        Self {
            times: JobTimes::new(inst.jobs(), inst.machines()),
            successor: vec![NONE; inst.jobs()],
            last_in_factory: vec![NONE; inst.factories()],
        }
    }

    /// Schedules the jobs of `seq` (a permutation of any subset of jobs) in
    /// that entry order. Times of jobs outside `seq` are left stale.
    pub fn run(&mut self, inst: &Instance, seq: &[usize], mu: &[usize]) -> &JobTimes {
        let m = inst.machines();
        let t = &mut self.times;
        if seq.is_empty() {
            t.cm_max = 0;
            t.anchor_shift = 0;
            return t;
        }

        self.last_in_factory.fill(NONE);
        for &job in seq.iter().rev() {
            self.successor[job] = self.last_in_factory[mu[job]];
            self.last_in_factory[mu[job]] = job;
        }

        let last = m - 1;
        let idx = |job: usize, k: usize| job * m + k;

        let tail = seq[seq.len() - 1];
        t.completion[idx(tail, last)] = 0;
        t.start[idx(tail, last)] = -inst.processing(tail, last);
        for h in (0..seq.len() - 1).rev() {
            let (a, b) = (seq[h], seq[h + 1]);
            let mut c = if mu[a] == mu[b] {
                t.start[idx(b, last)]
            } else {
                t.completion[idx(b, last)] - 1
            };
            let s = self.successor[a];
            if s != NONE {
                c = c.min(t.start[idx(s, last)]);
            }
            t.completion[idx(a, last)] = c;
            t.start[idx(a, last)] = c - inst.processing(a, last);
        }

        let mut earliest = Time::MAX;
        for k in (0..last).rev() {
            // Factory successors sit later in `seq`, so a reverse scan sees them first.
            for &a in seq.iter().rev() {
                let mut c = t.start[idx(a, k + 1)];
                let s = self.successor[a];
                if s != NONE {
                    c = c.min(t.start[idx(s, k)]);
                }
                t.completion[idx(a, k)] = c;
                t.start[idx(a, k)] = c - inst.processing(a, k);
            }
        }
        for &a in seq {
            earliest = earliest.min(t.start[idx(a, 0)]);
        }

        let shift = -earliest;
        for &a in seq {
            for k in 0..m {
                t.start[idx(a, k)] += shift;
                t.completion[idx(a, k)] += shift;
            }
        }
        t.anchor_shift = shift;
        t.cm_max = shift;
        t
    }

    pub fn cm_max(&mut self, inst: &Instance, seq: &[usize], mu: &[usize]) -> Time {
        self.run(inst, seq, mu).cm_max
    }
}

/// Backward construction of the manufacturing stage for a complete entry
/// order `lambda_prime` and job-indexed factory map `mu`.
pub fn backward_schedule(inst: &Instance, lambda_prime: &[usize], mu: &[usize]) -> JobTimes {
    let mut scratch = Backward::new(inst);
    scratch.run(inst, lambda_prime, mu);
    scratch.times
}

/// Assembly start/completion per product, processing products in `sigma`
/// order on the single assembly machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyTimes {
    pub start: Vec<Time>,
    pub completion: Vec<Time>,
    pub ca_max: Time,
}

pub fn assembly_pass(inst: &Instance, times: &JobTimes, sigma: &[usize]) -> AssemblyTimes {
    let l = inst.products();
    let mut start = vec![0; l];
    let mut completion = vec![0; l];
    let mut machine_free = Time::MIN;
    for &q in sigma {
        let ready = inst.members(q).iter().map(|&i| times.finish(i)).max().unwrap_or(0);
        start[q] = ready.max(machine_free);
        completion[q] = start[q] + inst.assembly_time(q);
        machine_free = completion[q];
    }
    let ca_max = sigma.last().map_or(0, |&q| completion[q]);
    AssemblyTimes { start, completion, ca_max }
}

/// Complete timed schedule of one coding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub times: JobTimes,
    pub assembly: AssemblyTimes,
    pub mu: Vec<usize>,
    pub sigma: Vec<usize>,
    pub cm_max: Time,
    pub ca_max: Time,
}

impl Schedule {
    pub fn start(&self, job: usize, machine: usize) -> Time {
        self.times.start(job, machine)
    }

    pub fn completion(&self, job: usize, machine: usize) -> Time {
        self.times.completion(job, machine)
    }

    pub fn anchor_shift(&self) -> Time {
        self.times.anchor_shift
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalResult {
    pub lambda_prime: Vec<usize>,
    pub schedule: Schedule,
    pub cm_max: Time,
    pub ca_max: Time,
    pub max_buffer_occupancy: usize,
    pub buffer_violation: bool,
}

impl EvalResult {
    pub fn coding(&self) -> Coding {
        Coding::new(self.lambda_prime.clone(), self.schedule.mu.clone())
    }
}

/// Amends, decodes and schedules codings of one instance.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    inst: &'a Instance,
    net: AppNet,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self { inst, net: build_app(inst) }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn net(&self) -> &AppNet {
        &self.net
    }

    pub fn amend(&self, lambda: &[usize]) -> Result<Vec<usize>> {
        idam(&self.net, lambda)
    }

    pub fn evaluate(&self, coding: &Coding) -> Result<EvalResult> {
        let violations = crate::instance::validate_coding(self.inst, coding);
        if !violations.is_empty() {
            return Err(crate::error::Error::InvalidCoding(violations));
        }
        let lambda_prime = self.amend(&coding.lambda)?;
        Ok(self.evaluate_amended(lambda_prime, &coding.mu))
    }

    /// Evaluates an entry order that is already deadlock-free.
    pub fn evaluate_amended(&self, lambda_prime: Vec<usize>, mu: &[usize]) -> EvalResult {
        let schedule = schedule_amended(self.inst, &lambda_prime, mu);
        let trace = buffer_trace(self.inst, &schedule);
        EvalResult {
            lambda_prime,
            cm_max: schedule.cm_max,
            ca_max: schedule.ca_max,
            schedule,
            max_buffer_occupancy: trace.peak,
            buffer_violation: trace.violation,
        }
    }
}

/// Schedule of a deadlock-free entry order, without amending or auditing.
pub fn schedule_amended(inst: &Instance, lambda_prime: &[usize], mu: &[usize]) -> Schedule {
    let times = backward_schedule(inst, lambda_prime, mu);
    let sigma = product_order(inst, lambda_prime);
    let assembly = assembly_pass(inst, &times, &sigma);
    Schedule {
        cm_max: times.cm_max,
        ca_max: assembly.ca_max,
        times,
        assembly,
        mu: mu.to_vec(),
        sigma,
    }
}

pub fn evaluate(inst: &Instance, coding: &Coding) -> Result<EvalResult> {
    Evaluator::new(inst).evaluate(coding)
}

/// Assembly-buffer occupancy over time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferTrace {
    /// Occupancy after all events at each event time.
    pub levels: Vec<(Time, usize)>,
    pub peak: usize,
    pub violation: bool,
}

/// Replays buffer entries (`C_{i,m}`) and exits (assembly start of the
/// job's product). At equal timestamps, products whose members were all
/// present beforehand leave first, then jobs enter, then the products
/// completed by those entries leave.
pub fn buffer_trace(inst: &Instance, sched: &Schedule) -> BufferTrace {
    let mut events: Vec<(Time, u8, usize)> = Vec::with_capacity(inst.jobs() + inst.products());
    for job in 0..inst.jobs() {
        events.push((sched.times.finish(job), 1, job));
    }
    for q in 0..inst.products() {
        let sa = sched.assembly.start[q];
        let ready = inst.members(q).iter().map(|&i| sched.times.finish(i)).max().unwrap_or(sa);
        events.push((sa, if ready < sa { 0 } else { 2 }, q));
    }
    events.sort_unstable();

    let mut level = 0usize;
    let mut peak = 0usize;
    let mut levels: Vec<(Time, usize)> = Vec::new();
    for &(time, phase, id) in &events {
        match phase {
            1 => level += 1,
            _ => level -= inst.members(id).len(),
        }
        peak = peak.max(level);
        match levels.last_mut() {
            Some((t, l)) if *t == time => *l = level,
            _ => levels.push((time, level)),
        }
    }
    BufferTrace { levels, peak, violation: peak > inst.buffer() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GanttRow {
    Job { factory: usize, machine: usize, job: usize, start: Time, end: Time },
    Assembly { product: usize, start: Time, end: Time },
}

/// Gantt bars, sorted by factory, machine and start; assembly bars last.
pub fn export_gantt(sched: &Schedule, inst: &Instance) -> Vec<GanttRow> {
    let mut jobs = Vec::with_capacity(inst.jobs() * inst.machines());
    for job in 0..inst.jobs() {
        for machine in 0..inst.machines() {
            jobs.push(GanttRow::Job {
                factory: sched.mu[job],
                machine,
                job,
                start: sched.start(job, machine),
                end: sched.completion(job, machine),
            });
        }
    }
    jobs.sort_by_key(|row| match *row {
        GanttRow::Job { factory, machine, start, job, .. } => (factory, machine, start, job),
        GanttRow::Assembly { .. } => unreachable!(),
    });
    let mut products: Vec<GanttRow> = sched
        .sigma
        .iter()
        .map(|&q| GanttRow::Assembly {
            product: q,
            start: sched.assembly.start[q],
            end: sched.assembly.completion[q],
        })
        .collect();
    jobs.append(&mut products);
    jobs
}

/// Tab-separated rendering with a header line; ids are 1-based.
pub fn gantt_tsv(rows: &[GanttRow]) -> String {
    let mut out = String::from("factory\tmachine\tjob\tstart\tend\n");
    for row in rows {
        let _ = match *row {
            GanttRow::Job { factory, machine, job, start, end } => {
                writeln!(out, "{}\t{}\t{}\t{start}\t{end}", factory + 1, machine + 1, job + 1)
            }
            GanttRow::Assembly { product, start, end } => {
                writeln!(out, "A\t-\t{}\t{start}\t{end}", product + 1)
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{example, example_coding};

    #[test]
    fn backward_pass_on_example() {
        let inst = example();
        let times = backward_schedule(&inst, &[0, 3, 2, 1, 4], &[1, 1, 0, 0, 1]);
        assert_eq!(times.cm_max, 25);
        assert_eq!(times.finish(2), 20);
        assert_eq!(times.finish(0), 15);
        assert_eq!(times.finish(4), 25);
        assert_eq!(times.finish(3), 16);
        assert_eq!(times.finish(1), 21);
        assert_eq!(times.start(3, 0), 0);
        assert_eq!(times.start(0, 0), 1);
    }

    #[test]
    fn single_job_runs_back_to_back() {
        let inst = Instance::new(1, vec![vec![3, 4, 5]], vec![2], vec![vec![0]], 1).unwrap();
        let times = backward_schedule(&inst, &[0], &[0]);
        assert_eq!(times.cm_max, 12);
        assert_eq!(times.start(0, 0), 0);
        assert_eq!(times.start(0, 2), 7);
    }

    #[test]
    fn assembly_on_example() {
        let inst = example();
        let times = backward_schedule(&inst, &[0, 3, 2, 1, 4], &[1, 1, 0, 0, 1]);
        let asm = assembly_pass(&inst, &times, &[0, 1]);
        assert_eq!(asm.start, vec![20, 25]);
        assert_eq!(asm.completion, vec![24, 30]);
        assert_eq!(asm.ca_max, 30);
    }

    #[test]
    fn single_product_assembles_after_last_job() {
        let inst = Instance::new(
            2,
            vec![vec![2, 2], vec![3, 1], vec![1, 4]],
            vec![6],
            vec![vec![0, 1, 2]],
            3,
        )
        .unwrap();
        let times = backward_schedule(&inst, &[2, 0, 1], &[0, 1, 0]);
        let asm = assembly_pass(&inst, &times, &[0]);
        let last = (0..3).map(|i| times.finish(i)).max().unwrap();
        assert_eq!(asm.ca_max, last + 6);
    }

    #[test]
    fn idle_assembly_machine_waits_for_jobs() {
        // q1 finishes assembly long before the jobs of q2 are done.
        let inst =
            Instance::new(1, vec![vec![1], vec![20]], vec![1, 3], vec![vec![0], vec![1]], 2)
                .unwrap();
        let times = backward_schedule(&inst, &[0, 1], &[0, 0]);
        let asm = assembly_pass(&inst, &times, &[0, 1]);
        assert!(asm.completion[0] < times.finish(1));
        assert_eq!(asm.start[1], times.finish(1));
    }

    #[test]
    fn evaluate_example() {
        let inst = example();
        let eval = evaluate(&inst, &example_coding()).unwrap();
        assert_eq!(eval.lambda_prime, vec![0, 3, 2, 1, 4]);
        assert_eq!(eval.cm_max, 25);
        assert_eq!(eval.ca_max, 30);
        assert_eq!(eval.schedule.sigma, vec![0, 1]);
        assert_eq!(eval.max_buffer_occupancy, 3);
        assert!(!eval.buffer_violation);
    }

    #[test]
    fn feasible_lambda_is_kept() {
        let inst = example();
        let coding = Coding::new(vec![0, 3, 2, 1, 4], vec![1, 1, 0, 0, 1]);
        assert_eq!(evaluate(&inst, &coding).unwrap().lambda_prime, coding.lambda);
    }

    #[test]
    fn buffer_trace_of_example() {
        let inst = example();
        let eval = evaluate(&inst, &example_coding()).unwrap();
        let trace = buffer_trace(&inst, &eval.schedule);
        assert_eq!(trace.peak, 3);
        assert!(!trace.violation);
        assert_eq!(trace.levels, vec![(15, 1), (16, 2), (20, 1), (21, 2), (25, 0)]);
    }

    #[test]
    fn delayed_assembly_flags_violation() {
        let inst = example();
        let eval = evaluate(&inst, &example_coding()).unwrap();
        let mut sched = eval.schedule.clone();
        // Hold q1 in the buffer until everything else has arrived.
        sched.assembly.start[0] = 26;
        let trace = buffer_trace(&inst, &sched);
        assert_eq!(trace.peak, 5);
        assert!(trace.violation);
    }

    #[test]
    fn gantt_rows() {
        let inst = example();
        let eval = evaluate(&inst, &example_coding()).unwrap();
        let rows = export_gantt(&eval.schedule, &inst);
        assert_eq!(rows.len(), 17);
        assert_eq!(
            rows[0],
            GanttRow::Job { factory: 0, machine: 0, job: 3, start: 0, end: 6 }
        );
        assert_eq!(rows[16], GanttRow::Assembly { product: 1, start: 25, end: 30 });
        let tsv = gantt_tsv(&rows);
        assert_eq!(tsv.lines().count(), 18);
        assert!(tsv.ends_with("A\t-\t2\t25\t30\n"));

        let tiny = Instance::new(1, vec![vec![4]], vec![2], vec![vec![0]], 1).unwrap();
        let eval = evaluate(&tiny, &Coding::new(vec![0], vec![0])).unwrap();
        assert_eq!(export_gantt(&eval.schedule, &tiny).len(), 2);
    }
}
