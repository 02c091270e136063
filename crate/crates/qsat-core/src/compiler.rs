//! Circuit-to-instance reductions and history states.
//!
//! Qudit layout of a compiled instance with `q` data qubits, `p` witness or
//! pair qubits and `L` gates:
//!
//! | qudits                      | role                         |
//! |-----------------------------|------------------------------|
//! | `0 .. q+p`                  | logicals (data, then copies) |
//! | `q+p .. q+2p`               | witness or auxiliary qudits  |
//! | `q+2p .. q+2p+L+1`          | clocks `c₀ .. c_L`           |
//! | last two (LCT only)         | endpoints `e₀, e₁`           |
//!
//! [`compile_truncated`] appends one more logical that no clause initializes.

use serde::{Deserialize, Serialize};

use crate::clauses::{LocalBasis, ACTIVE, DEAD, QMARK, READY};
use crate::deciders::{basis_state, simulate, Statevector};
use crate::error::{Error, Result};
use crate::linalg::re;
use crate::model::{Clause, Gate, Instance, Variant};
use crate::oracle::SparseState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    Quantum,
    Classical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitGate {
    pub gate: Gate,
    pub targets: Vec<usize>,
}

/// A circuit on `q` data qubits and `p` witness or pair qubits. The answer
/// qubit `ans` must end in |1⟩ for the circuit to accept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub kind: CircuitKind,
    pub q: usize,
    #[serde(default)]
    pub p: usize,
    pub ans: usize,
    pub gates: Vec<CircuitGate>,
}

/// Which history state to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryKind {
    Full,
    /// Coincides with `Full` for a compiled circuit, whose only chain starts
    /// at the Init clock.
    Privileged,
    /// The first `T + 1` terms, for the instance of [`compile_truncated`].
    Truncated(usize),
}

impl Circuit {
    pub fn new(kind: CircuitKind, q: usize, p: usize, ans: usize, gates: &[(Gate, &[usize])]) -> Self {
        Circuit {
            kind,
            q,
            p,
            ans,
            gates: gates.iter().map(|(g, t)| CircuitGate { gate: *g, targets: t.to_vec() }).collect(),
        }
    }

    /// Number of gates L.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn width(&self) -> usize {
        self.q + self.p
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.width();
        if self.ans >= n {
            return Err(Error::TargetOutOfRange { target: self.ans, num_qubits: n });
        }
        for g in &self.gates {
            if g.gate.is_quantum() != (self.kind == CircuitKind::Quantum) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {} does not belong to a {:?} circuit",
                    g.gate, self.kind
                )));
            }
            if g.targets.len() != g.gate.arity() {
                return Err(Error::InvalidCircuit(format!("gate {} needs {} targets", g.gate, g.gate.arity())));
            }
            for (i, &t) in g.targets.iter().enumerate() {
                if t >= n {
                    return Err(Error::TargetOutOfRange { target: t, num_qubits: n });
                }
                if g.targets[..i].contains(&t) {
                    return Err(Error::InvalidCircuit(format!("gate {} repeats target {t}", g.gate)));
                }
            }
        }
        Ok(())
    }

    /// The gate list in simulator form.
    pub fn gate_list(&self) -> Vec<(Gate, Vec<usize>)> {
        self.gates.iter().map(|g| (g.gate, g.targets.clone())).collect()
    }

    /// Final register state from the given input bits.
    pub fn run(&self, input: &[bool]) -> Result<Statevector> {
        simulate(&self.gate_list(), &basis_state(input))
    }

    /// Initial register bits: data qubits at 0 followed by `extra`.
    fn input(&self, extra: &[bool]) -> Vec<bool> {
        let mut bits = vec![false; self.q];
        bits.extend_from_slice(extra);
        bits
    }

    /// Acceptance probability for a given assignment of the `p` extra bits.
    pub fn acceptance_probability(&self, extra: &[bool]) -> Result<f64> {
        let psi = self.run(&self.input(extra))?;
        Ok(1.0 - crate::deciders::prob_zero(&psi, self.ans))
    }
}

/// Parses and validates a circuit from JSON text.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let c: Circuit = serde_json::from_str(text).map_err(|e| Error::MalformedJson(e.to_string()))?;
    c.validate()?;
    Ok(c)
}

/// Qudit ids of a compiled instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub q: usize,
    pub p: usize,
    pub len: usize,
    pub lct: bool,
}

impl Layout {
    pub fn of(c: &Circuit, target: Variant) -> Self {
        Layout { q: c.q, p: c.p, len: c.len(), lct: target == Variant::Lct }
    }

    pub fn logical(&self, i: usize) -> usize {
        i
    }

    /// Witness or auxiliary qudit paired with logical `q + j`.
    pub fn partner(&self, j: usize) -> usize {
        self.q + self.p + j
    }

    pub fn clock(&self, t: usize) -> usize {
        self.q + 2 * self.p + t
    }

    /// Endpoint `e₀` (`which = 0`) or `e₁` (`which = 1`); LCT only.
    pub fn endpoint(&self, which: usize) -> usize {
        self.clock(self.len + 1) + which
    }

    pub fn num_qudits(&self) -> usize {
        self.clock(self.len + 1) + if self.lct { 2 } else { 0 }
    }
}

fn check_target(c: &Circuit, target: Variant) -> Result<()> {
    c.validate()?;
    let ok = match c.kind {
        CircuitKind::Quantum => {
            matches!(target, Variant::Lct | Variant::Slct | Variant::WitnessedSlct)
        }
        CircuitKind::Classical => target == Variant::ClassicalSlct,
    };
    if !ok {
        let gate = c.gates.first().map_or_else(|| format!("{:?}", c.kind).to_lowercase(), |g| g.gate.to_string());
        return Err(Error::GateSetMismatch { gate, target: target.to_string() });
    }
    if c.p > 0 && matches!(target, Variant::Lct | Variant::Slct) {
        return Err(Error::InvalidCircuit(format!("{target} instances take no witness or pair qubits")));
    }
    Ok(())
}

/// Compiles a circuit into an instance whose single chain carries the
/// circuit's history state.
pub fn compile(c: &Circuit, target: Variant) -> Result<Instance> {
    check_target(c, target)?;
    let lay = Layout::of(c, target);
    let e = |w: usize| lay.lct.then(|| lay.endpoint(w));
    let c0 = lay.clock(0);
    let mut clauses = Vec::new();
    for i in 0..c.q {
        clauses.push(Clause::Init { logical: lay.logical(i), clock: c0, endpoint: e(0) });
    }
    for j in 0..c.p {
        let logical = lay.logical(c.q + j);
        clauses.push(match target {
            Variant::WitnessedSlct => Clause::InitCopy { logical, witness: lay.partner(j), clock: c0 },
            _ => Clause::InitPair { logical, aux: lay.partner(j), clock: c0 },
        });
    }
    for (t, g) in c.gates.iter().enumerate() {
        let logicals: Vec<usize> = g.targets.iter().map(|&x| lay.logical(x)).collect();
        clauses.push(Clause::prop(g.gate, &logicals, lay.clock(t), lay.clock(t + 1)));
    }
    clauses.push(Clause::Out { logical: lay.logical(c.ans), clock: lay.clock(c.len()), endpoint: e(1) });
    Instance::new(target, lay.num_qudits(), clauses)
}

/// Like [`compile`], but the Prop clause of gate `t` (from `c_t` to
/// `c_{t+1}`) has its first logical replaced by a fresh, never initialized
/// logical appended as the last qudit. The chain is then cut at `c_t`.
pub fn compile_truncated(c: &Circuit, target: Variant, t: usize) -> Result<Instance> {
    if t >= c.len() {
        return Err(Error::InvalidCircuit(format!("truncation step {t} needs at least {} gates", t + 1)));
    }
    let mut inst = compile(c, target)?;
    let fresh = inst.num_qudits;
    inst.num_qudits += 1;
    let idx = c.q + c.p + t;
    if let Clause::Prop { logicals, .. } = &mut inst.clauses[idx] {
        logicals[0] = fresh;
    }
    inst.validate()?;
    Ok(inst)
}

/// The history state of a circuit on its compiled (or truncated) instance.
///
/// `witness` supplies the `p` copy bits for WitnessedSLCT targets. For
/// ClassicalSLCT targets every pair starts in (|00⟩ + |11⟩)/√2. LCT states
/// carry Bell pairs linking `e₀` to `c₀`, each clock to the next and `c_L`
/// to `e₁`.
pub fn history_state(
    c: &Circuit,
    kind: HistoryKind,
    target: Variant,
    witness: Option<&[bool]>,
) -> Result<SparseState> {
    check_target(c, target)?;
    let lay = Layout::of(c, target);
    let basis = LocalBasis::new(target);
    let (last, extra_site) = match kind {
        HistoryKind::Full | HistoryKind::Privileged => (c.len(), false),
        HistoryKind::Truncated(t) => {
            if t >= c.len() {
                return Err(Error::InvalidCircuit(format!("truncation step {t} needs at least {} gates", t + 1)));
            }
            (t, true)
        }
    };
    let n = lay.num_qudits() + extra_site as usize;
    let branches: Vec<(Vec<bool>, f64)> = match target {
        Variant::WitnessedSlct => {
            let w = witness.unwrap_or(&[]);
            if w.len() != c.p {
                return Err(Error::WitnessLengthMismatch { expected: c.p, found: w.len() });
            }
            vec![(w.to_vec(), 1.0)]
        }
        Variant::ClassicalSlct => {
            let amp = (0.5f64).powi(c.p as i32).sqrt();
            (0..1usize << c.p)
                .map(|b| ((0..c.p).map(|j| b >> (c.p - 1 - j) & 1 == 1).collect(), amp))
                .collect()
        }
        _ => vec![(Vec::new(), 1.0)],
    };
    let gates = c.gate_list();
    let time_amp = 1.0 / ((last + 1) as f64).sqrt();
    let pairs = if lay.lct { c.len() + 2 } else { 0 };
    let bell_amp = (0.5f64).powi(pairs as i32).sqrt();
    let width = c.width();
    let mut state = SparseState::new(target.local_dim(), n);
    for (extra, branch_amp) in &branches {
        let mut phi = basis_state(&c.input(extra));
        for t in 0..=last {
            if t > 0 {
                phi = simulate(&gates[t - 1..t], &phi)?;
            }
            for (idx, amp) in phi.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let mut cfg = vec![0usize; n];
                for i in 0..width {
                    cfg[lay.logical(i)] = idx >> (width - 1 - i) & 1;
                }
                for (j, &b) in extra.iter().enumerate() {
                    cfg[lay.partner(j)] = 3 + b as usize;
                }
                if extra_site {
                    cfg[n - 1] = QMARK;
                }
                let phase = |s: usize| match s.cmp(&t) {
                    std::cmp::Ordering::Less => DEAD,
                    std::cmp::Ordering::Equal => ACTIVE,
                    std::cmp::Ordering::Greater => READY,
                };
                let base = *amp * re(branch_amp * time_amp * bell_amp);
                for bell in 0..1usize << pairs {
                    // Pair k is bit k of `bell`: pair 0 = (e₀, c₀.A),
                    // pair s+1 = (c_s.B, c_{s+1}.A), pair L+1 = (c_L.B, e₁).
                    let bit = |k: usize| bell >> k & 1;
                    for s in 0..=c.len() {
                        let (ca, cb) = if lay.lct { (bit(s), bit(s + 1)) } else { (0, 0) };
                        cfg[lay.clock(s)] = basis.clock(phase(s), ca, cb);
                    }
                    if lay.lct {
                        cfg[lay.endpoint(0)] = 3 + bit(0);
                        cfg[lay.endpoint(1)] = 3 + bit(c.len() + 1);
                    }
                    state.add(cfg.clone(), base);
                }
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::analyze;
    use crate::oracle::{residual, LocalHamiltonian};
    use approx::assert_abs_diff_eq;

    fn x_via_h() -> Vec<(Gate, &'static [usize])> {
        let mut g: Vec<(Gate, &'static [usize])> = vec![(Gate::H, &[0])];
        for _ in 0..4 {
            g.push((Gate::HT, &[0]));
            g.push((Gate::H, &[0]));
        }
        g.push((Gate::H, &[0]));
        g
    }

    #[test]
    fn layout_counts() {
        let c = Circuit::new(CircuitKind::Quantum, 2, 0, 0, &[(Gate::H, &[0])]);
        assert_eq!(compile(&c, Variant::Slct).unwrap().num_qudits, 4);
        assert_eq!(compile(&c, Variant::Lct).unwrap().num_qudits, 2 + 2 + 2);
        let inst = compile(&c, Variant::Slct).unwrap();
        let kinds: Vec<_> = inst.clauses.iter().map(Clause::kind).collect();
        assert_eq!(kinds, vec!["init", "init", "prop", "out"]);
    }

    #[test]
    fn gate_set_mismatch() {
        let c = Circuit::new(CircuitKind::Classical, 1, 0, 0, &[(Gate::X, &[0])]);
        assert!(matches!(compile(&c, Variant::Slct), Err(Error::GateSetMismatch { .. })));
        let c = Circuit::new(CircuitKind::Quantum, 1, 0, 0, &[(Gate::H, &[0])]);
        assert!(matches!(compile(&c, Variant::ClassicalSlct), Err(Error::GateSetMismatch { .. })));
    }

    #[test]
    fn pair_clauses() {
        let c = Circuit::new(CircuitKind::Classical, 1, 2, 0, &[(Gate::X, &[0])]);
        let inst = compile(&c, Variant::ClassicalSlct).unwrap();
        assert_eq!(inst.clauses.iter().filter(|c| c.kind() == "init_pair").count(), 2);
    }

    #[test]
    fn one_gate_history() {
        let c = Circuit::new(CircuitKind::Quantum, 1, 0, 0, &[(Gate::H, &[0])]);
        let s = history_state(&c, HistoryKind::Full, Variant::Slct, None).unwrap();
        // (|0⟩|a r⟩ + |+⟩|d a⟩)/√2 in SLCT local indices.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.entries[&vec![0, 4, 3]].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.entries[&vec![0, 5, 4]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.entries[&vec![1, 5, 4]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yes_circuit_history_satisfies_every_target() {
        let c = Circuit::new(CircuitKind::Quantum, 1, 0, 0, &x_via_h());
        for target in [Variant::Slct, Variant::Lct, Variant::WitnessedSlct] {
            let inst = compile(&c, target).unwrap();
            let h = LocalHamiltonian::from_instance(&inst).unwrap();
            let s = history_state(&c, HistoryKind::Full, target, Some(&[])).unwrap();
            assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
            assert!(residual(&h, &s).unwrap() <= 1e-9, "{target}");
            assert_eq!(analyze(&inst, Some(&[])).unwrap().tasks().len(), 1);
        }
    }

    #[test]
    fn truncated_history_satisfies_truncated_instance() {
        // The data stays at 0, so the full history would violate the Out clause.
        let c = Circuit::new(CircuitKind::Quantum, 2, 0, 0, &[(Gate::H, &[1]), (Gate::HHCNOT, &[0, 1]), (Gate::H, &[1])]);
        for target in [Variant::Slct, Variant::Lct] {
            for t in 0..c.len() {
                let inst = compile_truncated(&c, target, t).unwrap();
                let h = LocalHamiltonian::from_instance(&inst).unwrap();
                let s = history_state(&c, HistoryKind::Truncated(t), target, None).unwrap();
                assert!(residual(&h, &s).unwrap() <= 1e-9, "{target} T={t}");
            }
        }
    }

    #[test]
    fn pair_history_satisfies_classical_yes_instance() {
        // X on ans, and the pair bit is flipped twice.
        let c = Circuit::new(CircuitKind::Classical, 1, 1, 0, &[(Gate::X, &[0]), (Gate::X, &[1]), (Gate::X, &[1])]);
        let inst = compile(&c, Variant::ClassicalSlct).unwrap();
        let h = LocalHamiltonian::from_instance(&inst).unwrap();
        let s = history_state(&c, HistoryKind::Full, Variant::ClassicalSlct, None).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
        assert!(residual(&h, &s).unwrap() <= 1e-9);
    }

    #[test]
    fn circuit_json_round_trip() {
        let text = r#"{"kind":"quantum","q":2,"p":0,"ans":1,"gates":[{"gate":"HHCNOT","targets":[0,1]}]}"#;
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(parse_circuit(&serde_json::to_string(&c).unwrap()).unwrap(), c);
        assert!(matches!(
            parse_circuit(r#"{"kind":"quantum","q":1,"ans":0,"gates":[{"gate":"H","targets":[3]}]}"#),
            Err(Error::TargetOutOfRange { .. })
        ));
    }
}
