//! Statevector simulation and the randomized subroutines that decide the
//! chains handed over by [`crate::analyzer`].
//!
//! Randomness comes from ChaCha8. A decision with master seed `s` gives task
//! `i` the generator `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`, so
//! tasks can run in parallel and still produce identical traces.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analyzer::{analyze, InitKind, Rule, StructuralVerdict, Tacc};
use crate::clauses::{classical_gate, gate_matrix};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector, ONE};
use crate::model::{Gate, Instance, Variant};

/// Amplitudes over a register of qubits, qubit 0 most significant.
pub type Statevector = Vector;

/// Default number of repetitions per task.
pub const DEFAULT_REPS: usize = 32;

/// Probabilities below this are treated as exactly zero when sampling, so
/// rounding noise cannot make a satisfiable instance reject.
const PROB_FLOOR: f64 = 1e-12;

/// `|bits⟩` on `bits.len()` qubits.
pub fn basis_state(bits: &[bool]) -> Statevector {
    let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let mut v = Vector::zeros(1 << bits.len());
    v[idx] = ONE;
    v
}

fn num_qubits(psi: &Statevector) -> usize {
    psi.len().trailing_zeros() as usize
}

/// Applies a unitary on the given qubits of a state.
pub fn apply_unitary(psi: &mut Statevector, u: &Mat, targets: &[usize]) -> Result<()> {
    let n = num_qubits(psi);
    for &t in targets {
        if t >= n {
            return Err(Error::TargetOutOfRange { target: t, num_qubits: n });
        }
    }
    let k = targets.len();
    let shift = |q: usize| n - 1 - q;
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|r| {
            (0..k).filter(|&j| r >> (k - 1 - j) & 1 == 1).map(|j| 1 << shift(targets[j])).sum()
        })
        .collect();
    let mask: usize = targets.iter().map(|&t| 1 << shift(t)).sum();
    let mut block = Vector::zeros(1 << k);
    for base in (0..psi.len()).filter(|b| b & mask == 0) {
        for (r, &o) in offsets.iter().enumerate() {
            block[r] = psi[base + o];
        }
        let out = u * &block;
        for (r, &o) in offsets.iter().enumerate() {
            psi[base + o] = out[r];
        }
    }
    Ok(())
}

/// Applies the gates in order.
pub fn simulate(gates: &[(Gate, Vec<usize>)], init: &Statevector) -> Result<Statevector> {
    let mut psi = init.clone();
    for (g, targets) in gates {
        apply_unitary(&mut psi, &gate_matrix(*g), targets)?;
    }
    Ok(psi)
}

/// Rejection probability of one simultaneous-propagation check:
/// `½ − ½·Re⟨U_j φ|U_0 φ⟩`.
pub fn simprop_outcome_prob(
    phi: &Statevector,
    u0: (Gate, &[usize]),
    uj: (Gate, &[usize]),
) -> Result<f64> {
    let mut a = phi.clone();
    apply_unitary(&mut a, &gate_matrix(u0.0), u0.1)?;
    let mut b = phi.clone();
    apply_unitary(&mut b, &gate_matrix(uj.0), uj.1)?;
    Ok((0.5 - 0.5 * b.dotc(&a).re).clamp(0.0, 1.0))
}

/// Probability that measuring `qubit` yields 0.
pub fn prob_zero(psi: &Statevector, qubit: usize) -> f64 {
    let n = num_qubits(psi);
    let bit = 1 << (n - 1 - qubit);
    psi.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, a)| a.norm_sqr()).sum()
}

/// What a trace entry checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// The structural analysis rejected the instance.
    Structural,
    SimultaneousPropagation,
    Out,
}

/// One performed check and its outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub task: usize,
    pub rep: usize,
    pub kind: CheckKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    /// Probability with which this check rejects.
    pub probability: f64,
    pub passed: bool,
}

/// Outcome of a decision procedure together with its full trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub accept: bool,
    /// Structural verdict class that led to this decision.
    pub verdict: &'static str,
    pub repetitions: usize,
    pub trace: Vec<Check>,
}

impl Decision {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decisions always serialize")
    }
}

/// The generator used for task `task` under master seed `seed`.
pub fn task_rng(seed: u64, task: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task as u64);
    rng
}

type Step = Vec<(usize, Gate, Vec<usize>)>;

fn register_steps(t: &Tacc) -> Vec<Step> {
    t.steps
        .iter()
        .map(|s| {
            s.iter()
                .map(|g| {
                    let pos = g.logicals.iter().map(|&l| t.position(l).expect("logical in register"));
                    (g.clause, g.gate, pos.collect())
                })
                .collect()
        })
        .collect()
}

fn sample(rng: &mut ChaCha8Rng, p: f64) -> bool {
    let p = if p < PROB_FLOOR { 0.0 } else { p };
    rng.random::<f64>() < p
}

/// One run of the quantum subroutine on a chain.
///
/// The data register holds the chain's logicals in ascending order, all in
/// |0⟩ except witness copies, which start in their witness bit. Each run
/// replays the chain from the start and performs the first pending check: at
/// the earliest step with two or more pending Prop clauses it compares the
/// first clause with the lowest other pending one; once every step is down
/// to a single clause, the Out clauses are checked one at a time. A passed
/// check is removed and the run restarts.
pub fn run_quantum_task(t: &Tacc, task: usize, rep: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
    let bits: Vec<bool> = t
        .register
        .iter()
        .map(|&l| {
            t.inits.iter().any(|i| i.logical == l && matches!(i.kind, InitKind::Copy { bit: true, .. }))
        })
        .collect();
    let init = basis_state(&bits);
    let steps = register_steps(t);
    let mut pending: Vec<Vec<usize>> = steps.iter().map(|s| (0..s.len()).collect()).collect();
    let mut outs: VecDeque<usize> = (0..t.outs.len()).collect();
    let mut trace = Vec::new();
    let done = |trace: Vec<Check>, accept: bool| Decision {
        accept,
        verdict: "needs_subroutine",
        repetitions: 1,
        trace,
    };
    'restart: loop {
        let mut phi = init.clone();
        for (s, step) in steps.iter().enumerate() {
            if pending[s].len() > 1 {
                let (_, g0, ref t0) = step[pending[s][0]];
                let (clause, gj, ref tj) = step[pending[s][1]];
                let p = simprop_outcome_prob(&phi, (g0, t0), (gj, tj))?;
                let passed = !sample(rng, p);
                trace.push(Check {
                    task,
                    rep,
                    kind: CheckKind::SimultaneousPropagation,
                    step: Some(s),
                    clause: Some(clause),
                    rule: None,
                    probability: p,
                    passed,
                });
                if !passed {
                    return Ok(done(trace, false));
                }
                pending[s].remove(1);
                continue 'restart;
            }
            let (_, g, ref targets) = step[pending[s][0]];
            apply_unitary(&mut phi, &gate_matrix(g), targets)?;
        }
        let Some(o) = outs.pop_front() else {
            return Ok(done(trace, true));
        };
        let out = &t.outs[o];
        // A logical the chain never initializes is free to be |1⟩.
        let p = t.position(out.logical).map_or(0.0, |q| prob_zero(&phi, q));
        let passed = !sample(rng, p);
        trace.push(Check {
            task,
            rep,
            kind: CheckKind::Out,
            step: None,
            clause: Some(out.clause),
            rule: None,
            probability: p,
            passed,
        });
        if !passed {
            return Ok(done(trace, false));
        }
    }
}

/// One run of the randomized classical subroutine on a chain.
///
/// Pair-initialized bits are drawn uniformly at every restart and the other
/// bits start at 0. At a step with two or more pending clauses the first
/// clause and the lowest other pending one are applied to the current bits;
/// if the results differ the run rejects on a fair coin. After all steps are
/// single, the run rejects iff an Out-designated bit is 0.
pub fn run_classical_task(t: &Tacc, task: usize, rep: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
    let paired: Vec<bool> = t
        .register
        .iter()
        .map(|&l| t.inits.iter().any(|i| i.logical == l && matches!(i.kind, InitKind::Pair { .. })))
        .collect();
    let steps = register_steps(t);
    let mut pending: Vec<Vec<usize>> = steps.iter().map(|s| (0..s.len()).collect()).collect();
    let mut trace = Vec::new();
    let apply = |bits: &mut Vec<bool>, g: Gate, targets: &[usize]| {
        let input: Vec<bool> = targets.iter().map(|&q| bits[q]).collect();
        for (&q, b) in targets.iter().zip(classical_gate(g, &input)) {
            bits[q] = b;
        }
    };
    'restart: loop {
        let mut bits: Vec<bool> =
            paired.iter().map(|&p| if p { rng.random::<bool>() } else { false }).collect();
        for (s, step) in steps.iter().enumerate() {
            if pending[s].len() > 1 {
                let (_, g0, ref t0) = step[pending[s][0]];
                let (clause, gj, ref tj) = step[pending[s][1]];
                let (mut a, mut b) = (bits.clone(), bits.clone());
                apply(&mut a, g0, t0);
                apply(&mut b, gj, tj);
                let p = if a != b { 0.5 } else { 0.0 };
                let heads = rng.random::<bool>();
                let passed = !(a != b && heads);
                trace.push(Check {
                    task,
                    rep,
                    kind: CheckKind::SimultaneousPropagation,
                    step: Some(s),
                    clause: Some(clause),
                    rule: None,
                    probability: p,
                    passed,
                });
                if !passed {
                    return Ok(Decision { accept: false, verdict: "needs_subroutine", repetitions: 1, trace });
                }
                pending[s].remove(1);
                continue 'restart;
            }
            let (_, g, ref targets) = step[pending[s][0]];
            apply(&mut bits, g, targets);
        }
        let mut accept = true;
        for out in &t.outs {
            let zero = t.position(out.logical).is_some_and(|q| !bits[q]);
            accept &= !zero;
            trace.push(Check {
                task,
                rep,
                kind: CheckKind::Out,
                step: None,
                clause: Some(out.clause),
                rule: None,
                probability: if zero { 1.0 } else { 0.0 },
                passed: !zero,
            });
        }
        return Ok(Decision { accept, verdict: "needs_subroutine", repetitions: 1, trace });
    }
}

/// Runs the subroutine matching the chain's variant.
pub fn run_task(t: &Tacc, task: usize, rep: usize, rng: &mut ChaCha8Rng) -> Result<Decision> {
    if t.variant == Variant::ClassicalSlct {
        run_classical_task(t, task, rep, rng)
    } else {
        run_quantum_task(t, task, rep, rng)
    }
}

/// Full decision: structural analysis, then `reps` runs of every task. The
/// instance is accepted iff every run of every task accepts.
pub fn decide(inst: &Instance, witness: Option<&[bool]>, reps: usize, seed: u64) -> Result<Decision> {
    let reps = reps.max(1);
    let verdict = analyze(inst, witness)?;
    let tasks = match verdict {
        StructuralVerdict::Unsat { rule, evidence } => {
            let clause = evidence.iter().find_map(|e| match e {
                crate::analyzer::Evidence::Clause(c) => Some(*c),
                _ => None,
            });
            return Ok(Decision {
                accept: false,
                verdict: "unsat",
                repetitions: 0,
                trace: vec![Check {
                    task: 0,
                    rep: 0,
                    kind: CheckKind::Structural,
                    step: None,
                    clause,
                    rule: Some(rule),
                    probability: 1.0,
                    passed: false,
                }],
            });
        }
        StructuralVerdict::TriviallySat => {
            return Ok(Decision { accept: true, verdict: "trivially_sat", repetitions: 0, trace: Vec::new() })
        }
        StructuralVerdict::NeedsSubroutine { tasks } => tasks,
    };
    let runs: Vec<Result<(bool, Vec<Check>)>> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut rng = task_rng(seed, i);
            let mut trace = Vec::new();
            for rep in 0..reps {
                let d = run_task(t, i, rep, &mut rng)?;
                trace.extend(d.trace);
                if !d.accept {
                    return Ok((false, trace));
                }
            }
            Ok((true, trace))
        })
        .collect();
    let mut accept = true;
    let mut trace = Vec::new();
    for r in runs {
        let (ok, t) = r?;
        accept &= ok;
        trace.extend(t);
    }
    Ok(Decision { accept, verdict: "needs_subroutine", repetitions: reps, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{re, C64};
    use crate::model::Clause;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn simulate_basics() {
        let zero = basis_state(&[false]);
        assert_eq!(simulate(&[], &zero).unwrap(), zero);
        let plus = simulate(&[(Gate::H, vec![0])], &zero).unwrap();
        assert_abs_diff_eq!(plus[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(plus[1].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(simulate(&[(Gate::X, vec![0])], &zero).unwrap(), basis_state(&[true]));
        assert_eq!(
            simulate(&[(Gate::X, vec![1])], &zero),
            Err(Error::TargetOutOfRange { target: 1, num_qubits: 1 })
        );
    }

    #[test]
    fn big_endian_targets() {
        let psi = simulate(&[(Gate::X, vec![1])], &basis_state(&[false, false])).unwrap();
        assert_eq!(psi, basis_state(&[false, true]));
    }

    #[test]
    fn identical_unitaries_never_reject() {
        let phi = simulate(&[(Gate::H, vec![0])], &basis_state(&[false, false])).unwrap();
        let p = simprop_outcome_prob(&phi, (Gate::HT, &[1]), (Gate::HT, &[1])).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
    }

    fn chain(gates: &[(Gate, usize)], q: usize, ans: usize) -> Instance {
        let l = gates.len();
        let clock = |t: usize| q + t;
        let mut cs: Vec<Clause> = (0..q).map(|i| Clause::init(i, clock(0))).collect();
        for (t, (g, target)) in gates.iter().enumerate() {
            cs.push(Clause::prop(*g, &[*target], clock(t), clock(t + 1)));
        }
        cs.push(Clause::out(ans, clock(l)));
        Instance::new(Variant::Slct, q + l + 1, cs).unwrap()
    }

    #[test]
    fn x_equivalent_chain_accepts_for_every_seed() {
        // Applying HT and then H gives T, so this sequence is H·T⁴·H = X.
        let mut gates = vec![(Gate::H, 0)];
        gates.extend([(Gate::HT, 0), (Gate::H, 0)].repeat(4));
        gates.push((Gate::H, 0));
        let inst = chain(&gates, 1, 0);
        let mut psi = basis_state(&[false]);
        for (g, t) in &gates {
            apply_unitary(&mut psi, &gate_matrix(*g), &[*t]).unwrap();
        }
        assert_abs_diff_eq!(psi[1].norm_sqr(), 1.0, epsilon = 1e-12);
        for seed in 0..20 {
            assert!(decide(&inst, None, 4, seed).unwrap().accept);
        }
    }

    #[test]
    fn untouched_out_rejects() {
        let inst = chain(&[(Gate::H, 1)], 2, 0);
        let d = decide(&inst, None, 1, 7).unwrap();
        assert!(!d.accept);
        assert!(d.trace.iter().any(|c| !c.passed && c.kind == CheckKind::Out));
    }

    #[test]
    fn structural_reject_has_failed_check() {
        let inst = Instance::new(Variant::Slct, 3, vec![Clause::init(0, 1), Clause::out(1, 2)]).unwrap();
        let d = decide(&inst, None, 3, 0).unwrap();
        assert!(!d.accept);
        assert_eq!(d.trace[0].rule, Some(Rule::SingleTypeQudits));
    }

    #[test]
    fn classical_x_accepts() {
        let inst = Instance::new(
            Variant::ClassicalSlct,
            3,
            vec![Clause::init(0, 1), Clause::prop(Gate::X, &[0], 1, 2), Clause::out(0, 2)],
        )
        .unwrap();
        for seed in 0..50 {
            assert!(decide(&inst, None, 8, seed).unwrap().accept);
        }
    }

    #[test]
    fn traces_are_reproducible() {
        let inst = Instance::new(
            Variant::Slct,
            4,
            vec![
                Clause::init(0, 2),
                Clause::init(1, 2),
                Clause::prop(Gate::H, &[0], 2, 3),
                Clause::prop(Gate::HT, &[0], 2, 3),
                Clause::out(1, 3),
            ],
        )
        .unwrap();
        let a = decide(&inst, None, 16, 3).unwrap();
        let b = decide(&inst, None, 16, 3).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn simprop_matches_overlap(re_parts in proptest::collection::vec(-1.0f64..1.0, 8),
                                   g0 in 0usize..3, gj in 0usize..3) {
            let mut phi = Vector::from_iterator(4, (0..4).map(|i| C64::new(re_parts[2 * i], re_parts[2 * i + 1])));
            prop_assume!(phi.norm() > 1e-3);
            phi /= re(phi.norm());
            let gates = [(Gate::H, vec![0]), (Gate::HT, vec![1]), (Gate::HHCNOT, vec![0, 1])];
            let (a, ta) = &gates[g0];
            let (b, tb) = &gates[gj];
            let p = simprop_outcome_prob(&phi, (*a, ta), (*b, tb)).unwrap();
            let ua = simulate(&[(*a, ta.clone())], &phi).unwrap();
            let ub = simulate(&[(*b, tb.clone())], &phi).unwrap();
            // ‖U_0φ − U_jφ‖² / 4 = ½ − ½ Re⟨U_jφ|U_0φ⟩.
            prop_assert!((p - (ua - ub).norm_squared() / 4.0).abs() < 1e-12);
        }

        #[test]
        fn simulation_preserves_norm(bits in proptest::collection::vec(any::<bool>(), 3),
                                     ops in proptest::collection::vec((0usize..3, 0usize..3), 0..10)) {
            let mut gates = Vec::new();
            for (g, t) in ops {
                match g {
                    0 => gates.push((Gate::H, vec![t])),
                    1 => gates.push((Gate::HT, vec![t])),
                    _ => gates.push((Gate::HHCNOT, vec![t, (t + 1) % 3])),
                }
            }
            let psi = simulate(&gates, &basis_state(&bits)).unwrap();
            prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

}
