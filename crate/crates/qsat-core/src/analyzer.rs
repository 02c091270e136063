//! Classical structural analysis of clock-based instances.
//!
//! [`analyze`] applies the rejection rules in a fixed order, discards
//! sub-instances that are satisfiable for structural reasons, and hands the
//! remaining truly active clock chains ([`Tacc`]) to the subroutines in
//! [`crate::deciders`].
//!
//! Rule order (the first violation wins):
//!
//! 1. `single-type-qudits`
//! 2. LCT only, per component: `clock-qudit-two-neighbor-maximum`,
//!    `unique-direction-of-a-clock-chain`, `unique-endpoint-qudit`,
//!    `unique-clock-qudit`; components lacking an Init or an Out clause are
//!    then dropped.
//! 3. SLCT family: components lacking an Init or an Out clause are dropped.
//! 4. WitnessedSLCT: `witness-states-differ`, then
//!    `init-and-copy-with-witness-one`. ClassicalSLCT:
//!    `init-and-pair-on-shared-logical`, then `pair-monogamy`.
//! 5. Undefined Prop clauses are marked (over the kept components).
//! 6. Chain extraction, per component. LCT: the chain is cut at the first
//!    step holding an undefined Prop clause. SLCT family:
//!    `prop-clauses-on-c0-point-outward`, `one-well-defined-prop-clause-maximum`,
//!    then a walk per Init clock (`neighboring-clauses-of-a-nonzero-length-tacc`,
//!    `no-forks-in-a-tacc`, `unique-direction-of-a-tacc`), then
//!    `neighboring-clauses-of-an-active-dot`.
//! 7. Across chains: `no-prop-clause-on-shared-qudit`, then
//!    `no-init-and-out-clauses-on-shared-qudit`.
//! 8. Truncated chains without simultaneous propagation are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{assign_roles, components, Clause, ClockComponent, Gate, Instance, Role, Variant};

/// Identifier of a structural rejection rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    SingleTypeQudits,
    ClockQuditTwoNeighborMaximum,
    UniqueDirectionOfAClockChain,
    UniqueEndpointQudit,
    UniqueClockQudit,
    WitnessStatesDiffer,
    InitAndCopyWithWitnessOne,
    InitAndPairOnSharedLogical,
    PairMonogamy,
    PropClausesOnC0PointOutward,
    OneWellDefinedPropClauseMaximum,
    NoForksInATacc,
    UniqueDirectionOfATacc,
    NeighboringClausesOfANonzeroLengthTacc,
    NeighboringClausesOfAnActiveDot,
    NoPropClauseOnSharedQudit,
    NoInitAndOutClausesOnSharedQudit,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::SingleTypeQudits => "single-type-qudits",
            Rule::ClockQuditTwoNeighborMaximum => "clock-qudit-two-neighbor-maximum",
            Rule::UniqueDirectionOfAClockChain => "unique-direction-of-a-clock-chain",
            Rule::UniqueEndpointQudit => "unique-endpoint-qudit",
            Rule::UniqueClockQudit => "unique-clock-qudit",
            Rule::WitnessStatesDiffer => "witness-states-differ",
            Rule::InitAndCopyWithWitnessOne => "init-and-copy-with-witness-one",
            Rule::InitAndPairOnSharedLogical => "init-and-pair-on-shared-logical",
            Rule::PairMonogamy => "pair-monogamy",
            Rule::PropClausesOnC0PointOutward => "prop-clauses-on-c0-point-outward",
            Rule::OneWellDefinedPropClauseMaximum => "one-well-defined-prop-clause-maximum",
            Rule::NoForksInATacc => "no-forks-in-a-tacc",
            Rule::UniqueDirectionOfATacc => "unique-direction-of-a-tacc",
            Rule::NeighboringClausesOfANonzeroLengthTacc => {
                "neighboring-clauses-of-a-nonzero-length-tacc"
            }
            Rule::NeighboringClausesOfAnActiveDot => "neighboring-clauses-of-an-active-dot",
            Rule::NoPropClauseOnSharedQudit => "no-prop-clause-on-shared-qudit",
            Rule::NoInitAndOutClausesOnSharedQudit => "no-init-and-out-clauses-on-shared-qudit",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// A qudit or clause index backing an Unsat verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Qudit(usize),
    Clause(usize),
}

/// One Prop clause of a chain step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaccGate {
    pub clause: usize,
    pub gate: Gate,
    pub logicals: Vec<usize>,
}

/// How an initialized logical starts out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitKind {
    /// Fixed to |0⟩.
    Zero,
    /// Copies a classical witness bit.
    Copy { witness: usize, bit: bool },
    /// Half of a maximally entangled pair with an auxiliary qudit.
    Pair { aux: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaccInit {
    pub clause: usize,
    pub logical: usize,
    #[serde(flatten)]
    pub kind: InitKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaccOut {
    pub clause: usize,
    pub logical: usize,
}

/// A truly active clock chain c₀ → … → c_T.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tacc {
    pub variant: Variant,
    pub clocks: Vec<usize>,
    /// `steps[t]` holds the Prop clauses from `clocks[t]` to `clocks[t + 1]`.
    pub steps: Vec<Vec<TaccGate>>,
    pub inits: Vec<TaccInit>,
    /// Out clauses on the last clock; empty for truncated chains.
    pub outs: Vec<TaccOut>,
    /// The chain ends at an artificial stop or a dead end instead of an Out.
    pub truncated: bool,
    /// Data-register order of the logical qudits (ascending ids).
    pub register: Vec<usize>,
}

impl Tacc {
    /// Number of propagation steps T.
    pub fn length(&self) -> usize {
        self.steps.len()
    }

    pub fn has_simultaneous_propagation(&self) -> bool {
        self.steps.iter().any(|s| s.len() > 1)
    }

    /// Number of logicals initialized by a witness copy or an entangled pair.
    pub fn num_pairs(&self) -> usize {
        let ls: BTreeSet<_> = self
            .inits
            .iter()
            .filter(|i| !matches!(i.kind, InitKind::Zero))
            .map(|i| i.logical)
            .collect();
        ls.len()
    }

    /// Register position of a logical qudit.
    pub fn position(&self, logical: usize) -> Option<usize> {
        self.register.binary_search(&logical).ok()
    }

    /// Every logical qudit touched by a clause of the chain.
    pub fn logicals(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.register.iter().copied().collect();
        s.extend(self.outs.iter().map(|o| o.logical));
        s
    }

    fn prop_logicals(&self) -> BTreeSet<usize> {
        self.steps.iter().flatten().flat_map(|g| g.logicals.iter().copied()).collect()
    }

    fn init_logicals(&self) -> BTreeSet<usize> {
        self.inits.iter().map(|i| i.logical).collect()
    }

    fn out_logicals(&self) -> BTreeSet<usize> {
        self.outs.iter().map(|o| o.logical).collect()
    }
}

/// Result of the structural analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructuralVerdict {
    Unsat { rule: Rule, evidence: Vec<Evidence> },
    TriviallySat,
    NeedsSubroutine { tasks: Vec<Tacc> },
}

impl StructuralVerdict {
    pub fn decision(&self) -> &'static str {
        match self {
            StructuralVerdict::Unsat { .. } => "unsat",
            StructuralVerdict::TriviallySat => "trivially_sat",
            StructuralVerdict::NeedsSubroutine { .. } => "needs_subroutine",
        }
    }

    pub fn rule(&self) -> Option<Rule> {
        match self {
            StructuralVerdict::Unsat { rule, .. } => Some(*rule),
            _ => None,
        }
    }

    pub fn tasks(&self) -> &[Tacc] {
        match self {
            StructuralVerdict::NeedsSubroutine { tasks } => tasks,
            _ => &[],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts always serialize")
    }
}

impl Serialize for StructuralVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            decision: &'static str,
            rule: Option<Rule>,
            evidence: &'a [Evidence],
            tasks: &'a [Tacc],
        }
        let evidence = match self {
            StructuralVerdict::Unsat { evidence, .. } => evidence.as_slice(),
            _ => &[],
        };
        Repr { decision: self.decision(), rule: self.rule(), evidence, tasks: self.tasks() }
            .serialize(s)
    }
}

type Reject = (Rule, Vec<Evidence>);

fn reject<T>(rule: Rule, evidence: Vec<Evidence>) -> std::result::Result<T, Reject> {
    Err((rule, evidence))
}

/// Prop clauses with at least one logical that no Init, InitCopy or InitPair
/// clause of the instance touches.
pub fn mark_undefined(inst: &Instance) -> BTreeSet<usize> {
    mark_undefined_among(inst, &(0..inst.clauses.len()).collect::<Vec<_>>())
}

fn mark_undefined_among(inst: &Instance, clauses: &[usize]) -> BTreeSet<usize> {
    let initialized: BTreeSet<usize> = clauses
        .iter()
        .map(|&i| &inst.clauses[i])
        .filter(|c| c.is_init_like())
        .map(|c| c.logicals()[0])
        .collect();
    clauses
        .iter()
        .copied()
        .filter(|&i| match &inst.clauses[i] {
            Clause::Prop { logicals, .. } => logicals.iter().any(|l| !initialized.contains(l)),
            _ => false,
        })
        .collect()
}

/// Maps each witness qudit to its bit. Bits are indexed by the witness qudits
/// in ascending order.
pub fn resolve_witness(inst: &Instance, witness: Option<&[bool]>) -> Result<BTreeMap<usize, bool>> {
    let roles = assign_roles(inst)?;
    let qudits = roles.qudits_with(Role::Witness);
    let expected = if inst.variant == Variant::WitnessedSlct { qudits.len() } else { 0 };
    match witness {
        None if expected > 0 => Err(Error::WitnessMissing),
        None => Ok(BTreeMap::new()),
        Some(bits) if bits.len() != expected => {
            Err(Error::WitnessLengthMismatch { expected, found: bits.len() })
        }
        Some(bits) => Ok(qudits.into_iter().zip(bits.iter().copied()).collect()),
    }
}

/// Clock-level view of one component.
struct ClockGraph<'a> {
    inst: &'a Instance,
    clocks: BTreeSet<usize>,
    succ: BTreeMap<usize, BTreeSet<usize>>,
    pred: BTreeMap<usize, BTreeSet<usize>>,
    /// Prop clauses touching each clock, in clause order.
    props_at: BTreeMap<usize, Vec<usize>>,
    inits: BTreeMap<usize, Vec<usize>>,
    outs: BTreeMap<usize, Vec<usize>>,
}

impl<'a> ClockGraph<'a> {
    fn new(inst: &'a Instance, comp: &ClockComponent) -> Self {
        let mut g = ClockGraph {
            inst,
            clocks: comp.clocks.iter().copied().collect(),
            succ: BTreeMap::new(),
            pred: BTreeMap::new(),
            props_at: BTreeMap::new(),
            inits: BTreeMap::new(),
            outs: BTreeMap::new(),
        };
        for &c in &comp.clocks {
            g.succ.insert(c, BTreeSet::new());
            g.pred.insert(c, BTreeSet::new());
            g.props_at.insert(c, Vec::new());
            g.inits.insert(c, Vec::new());
            g.outs.insert(c, Vec::new());
        }
        for &i in &comp.clauses {
            match &inst.clauses[i] {
                Clause::Prop { clock_pred, clock_succ, .. } => {
                    g.succ.get_mut(clock_pred).unwrap().insert(*clock_succ);
                    g.pred.get_mut(clock_succ).unwrap().insert(*clock_pred);
                    g.props_at.get_mut(clock_pred).unwrap().push(i);
                    g.props_at.get_mut(clock_succ).unwrap().push(i);
                }
                Clause::Out { clock, .. } => g.outs.get_mut(clock).unwrap().push(i),
                c if c.is_init_like() => g.inits.get_mut(&c.clocks()[0]).unwrap().push(i),
                _ => {}
            }
        }
        g
    }

    fn has_init_and_out(&self) -> bool {
        self.inits.values().any(|v| !v.is_empty()) && self.outs.values().any(|v| !v.is_empty())
    }

    fn ends(&self, i: usize) -> (usize, usize) {
        match &self.inst.clauses[i] {
            Clause::Prop { clock_pred, clock_succ, .. } => (*clock_pred, *clock_succ),
            _ => unreachable!("only prop clauses have two clocks"),
        }
    }

    /// Prop clauses from `a` to `b`, in clause order.
    fn props_between(&self, a: usize, b: usize) -> Vec<usize> {
        self.props_at[&a].iter().copied().filter(|&i| self.ends(i) == (a, b)).collect()
    }

    fn neighbors(&self, c: usize) -> BTreeSet<usize> {
        self.succ[&c].union(&self.pred[&c]).copied().collect()
    }
}

/// Structural analysis of an instance. `witness` is required for
/// WitnessedSLCT instances with witness qudits and must be absent or empty
/// otherwise. Qubit instances are mapped back to qudits first.
pub fn analyze(inst: &Instance, witness: Option<&[bool]>) -> Result<StructuralVerdict> {
    if inst.variant == Variant::Qubit {
        return analyze(&crate::qubitize::dequbitize(inst), witness);
    }
    inst.validate()?;
    let roles = match assign_roles(inst) {
        Ok(r) => r,
        Err(Error::RoleConflict { qudit, .. }) => {
            if inst.variant != Variant::WitnessedSlct {
                if let Some(bits) = witness.filter(|b| !b.is_empty()) {
                    return Err(Error::WitnessLengthMismatch { expected: 0, found: bits.len() });
                }
            }
            return Ok(StructuralVerdict::Unsat {
                rule: Rule::SingleTypeQudits,
                evidence: vec![Evidence::Qudit(qudit)],
            });
        }
        Err(e) => return Err(e),
    };
    let bits = resolve_witness(inst, witness)?;
    let comps = components(inst, &roles);
    match structural(inst, &comps, &bits) {
        Ok(tasks) if tasks.is_empty() => Ok(StructuralVerdict::TriviallySat),
        Ok(tasks) => Ok(StructuralVerdict::NeedsSubroutine { tasks }),
        Err((rule, evidence)) => Ok(StructuralVerdict::Unsat { rule, evidence }),
    }
}

fn structural(
    inst: &Instance,
    comps: &[ClockComponent],
    bits: &BTreeMap<usize, bool>,
) -> std::result::Result<Vec<Tacc>, Reject> {
    let mut kept = Vec::new();
    for comp in comps {
        let g = ClockGraph::new(inst, comp);
        if inst.variant == Variant::Lct {
            lct_shape(&g, comp)?;
        }
        if g.has_init_and_out() {
            kept.push((comp, g));
        }
    }
    let kept_clauses: Vec<usize> = {
        let mut v: Vec<usize> = kept.iter().flat_map(|(c, _)| c.clauses.iter().copied()).collect();
        v.sort_unstable();
        v
    };
    match inst.variant {
        Variant::WitnessedSlct => witness_checks(inst, &kept_clauses, bits)?,
        Variant::ClassicalSlct => pair_checks(inst, &kept_clauses)?,
        _ => {}
    }
    let undefined = mark_undefined_among(inst, &kept_clauses);
    let mut taccs = Vec::new();
    for (_, g) in &kept {
        let chains = if inst.variant == Variant::Lct {
            lct_chain(g, &undefined)?
        } else {
            slct_chains(g, &undefined)?
        };
        taccs.extend(chains.into_iter().map(|ch| ch.into_tacc(inst, bits)));
    }
    shared_checks(&taccs)?;
    Ok(taccs.into_iter().filter(|t| !t.truncated || t.has_simultaneous_propagation()).collect())
}

fn lct_shape(g: &ClockGraph, comp: &ClockComponent) -> std::result::Result<(), Reject> {
    let endpoint_links = |c: usize| -> BTreeSet<usize> {
        g.inits[&c]
            .iter()
            .chain(&g.outs[&c])
            .filter_map(|&i| match &g.inst.clauses[i] {
                Clause::Init { endpoint, .. } | Clause::Out { endpoint, .. } => *endpoint,
                _ => None,
            })
            .collect()
    };
    for &c in &g.clocks {
        if g.neighbors(c).len() + endpoint_links(c).len() > 2 {
            return reject(Rule::ClockQuditTwoNeighborMaximum, vec![Evidence::Qudit(c)]);
        }
    }
    for &c in &g.clocks {
        if g.succ[&c].len() > 1 || g.pred[&c].len() > 1 {
            return reject(Rule::UniqueDirectionOfAClockChain, vec![Evidence::Qudit(c)]);
        }
    }
    for &e in &comp.endpoints {
        let mut clocks = BTreeSet::new();
        let (mut by_init, mut by_out) = (false, false);
        for &c in &g.clocks {
            for &i in g.inits[&c].iter().chain(&g.outs[&c]) {
                match &g.inst.clauses[i] {
                    Clause::Init { endpoint: Some(x), clock, .. } if *x == e => {
                        clocks.insert(*clock);
                        by_init = true;
                    }
                    Clause::Out { endpoint: Some(x), clock, .. } if *x == e => {
                        clocks.insert(*clock);
                        by_out = true;
                    }
                    _ => {}
                }
            }
        }
        if clocks.len() > 1 || (by_init && by_out) {
            return reject(Rule::UniqueEndpointQudit, vec![Evidence::Qudit(e)]);
        }
    }
    let start = g.clocks.iter().copied().find(|c| g.pred[c].is_empty());
    let end = g.clocks.iter().copied().find(|c| g.succ[c].is_empty());
    for &c in &g.clocks {
        if let Some(&i) = g.inits[&c].first() {
            if start != Some(c) {
                return reject(Rule::UniqueClockQudit, vec![Evidence::Clause(i)]);
            }
        }
        if let Some(&i) = g.outs[&c].first() {
            if end != Some(c) {
                return reject(Rule::UniqueClockQudit, vec![Evidence::Clause(i)]);
            }
        }
    }
    Ok(())
}

fn witness_checks(
    inst: &Instance,
    clauses: &[usize],
    bits: &BTreeMap<usize, bool>,
) -> std::result::Result<(), Reject> {
    let mut copies: BTreeMap<usize, BTreeSet<bool>> = BTreeMap::new();
    let mut zeros = BTreeSet::new();
    for &i in clauses {
        match &inst.clauses[i] {
            Clause::InitCopy { logical, witness, .. } => {
                copies.entry(*logical).or_default().insert(bits[witness]);
            }
            Clause::Init { logical, .. } => {
                zeros.insert(*logical);
            }
            _ => {}
        }
    }
    if let Some((&l, _)) = copies.iter().find(|(_, b)| b.len() > 1) {
        return reject(Rule::WitnessStatesDiffer, vec![Evidence::Qudit(l)]);
    }
    if let Some((&l, _)) = copies.iter().find(|(l, b)| zeros.contains(l) && b.contains(&true)) {
        return reject(Rule::InitAndCopyWithWitnessOne, vec![Evidence::Qudit(l)]);
    }
    Ok(())
}

fn pair_checks(inst: &Instance, clauses: &[usize]) -> std::result::Result<(), Reject> {
    let mut auxes_of: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut logicals_of: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut zeros = BTreeSet::new();
    for &i in clauses {
        match &inst.clauses[i] {
            Clause::InitPair { logical, aux, .. } => {
                auxes_of.entry(*logical).or_default().insert(*aux);
                logicals_of.entry(*aux).or_default().insert(*logical);
            }
            Clause::Init { logical, .. } => {
                zeros.insert(*logical);
            }
            _ => {}
        }
    }
    if let Some(&l) = auxes_of.keys().find(|l| zeros.contains(l)) {
        return reject(Rule::InitAndPairOnSharedLogical, vec![Evidence::Qudit(l)]);
    }
    if let Some((&l, _)) = auxes_of.iter().find(|(_, a)| a.len() > 1) {
        return reject(Rule::PairMonogamy, vec![Evidence::Qudit(l)]);
    }
    if let Some((&a, _)) = logicals_of.iter().find(|(_, l)| l.len() > 1) {
        return reject(Rule::PairMonogamy, vec![Evidence::Qudit(a)]);
    }
    Ok(())
}

/// A chain before it is resolved into a [`Tacc`].
struct Chain {
    clocks: Vec<usize>,
    steps: Vec<Vec<usize>>,
    inits: Vec<usize>,
    outs: Vec<usize>,
    truncated: bool,
}

impl Chain {
    fn into_tacc(self, inst: &Instance, bits: &BTreeMap<usize, bool>) -> Tacc {
        let steps: Vec<Vec<TaccGate>> = self
            .steps
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&i| match &inst.clauses[i] {
                        Clause::Prop { gate, logicals, .. } => {
                            TaccGate { clause: i, gate: *gate, logicals: logicals.clone() }
                        }
                        _ => unreachable!("chain steps hold prop clauses"),
                    })
                    .collect()
            })
            .collect();
        let inits: Vec<TaccInit> = self
            .inits
            .iter()
            .map(|&i| {
                let c = &inst.clauses[i];
                let kind = match c {
                    Clause::InitCopy { witness, .. } => {
                        InitKind::Copy { witness: *witness, bit: bits[witness] }
                    }
                    Clause::InitPair { aux, .. } => InitKind::Pair { aux: *aux },
                    _ => InitKind::Zero,
                };
                TaccInit { clause: i, logical: c.logicals()[0], kind }
            })
            .collect();
        let outs: Vec<TaccOut> = self
            .outs
            .iter()
            .map(|&i| TaccOut { clause: i, logical: inst.clauses[i].logicals()[0] })
            .collect();
        let mut register: BTreeSet<usize> = inits.iter().map(|i| i.logical).collect();
        register.extend(steps.iter().flatten().flat_map(|g| g.logicals.iter().copied()));
        Tacc {
            variant: inst.variant,
            clocks: self.clocks,
            steps,
            inits,
            outs,
            truncated: self.truncated,
            register: register.into_iter().collect(),
        }
    }
}

fn lct_chain(g: &ClockGraph, undefined: &BTreeSet<usize>) -> std::result::Result<Vec<Chain>, Reject> {
    // The shape checks guarantee a simple path whose first clock carries the
    // Init clauses and whose last clock carries the Out clauses.
    let start = g.clocks.iter().copied().find(|c| g.pred[c].is_empty()).expect("path has a start");
    let mut chain =
        Chain { clocks: vec![start], steps: Vec::new(), inits: g.inits[&start].clone(), outs: Vec::new(), truncated: false };
    let mut cur = start;
    while let Some(&next) = g.succ[&cur].iter().next() {
        let props = g.props_between(cur, next);
        if props.iter().any(|i| undefined.contains(i)) {
            if let Some(&i) = props.iter().find(|i| !undefined.contains(i)) {
                let rule = if chain.steps.is_empty() {
                    Rule::NeighboringClausesOfAnActiveDot
                } else {
                    Rule::NeighboringClausesOfANonzeroLengthTacc
                };
                return reject(rule, vec![Evidence::Clause(i)]);
            }
            chain.truncated = true;
            return Ok(vec![chain]);
        }
        chain.steps.push(props);
        chain.clocks.push(next);
        cur = next;
    }
    chain.outs = g.outs[&cur].clone();
    Ok(vec![chain])
}

fn slct_chains(g: &ClockGraph, undefined: &BTreeSet<usize>) -> std::result::Result<Vec<Chain>, Reject> {
    let defined = |i: &usize| !undefined.contains(i);
    // An Out clause or an undefined outgoing Prop clause stops the clock.
    let stop: BTreeMap<usize, bool> = g
        .clocks
        .iter()
        .map(|&c| {
            let undefined_out =
                g.props_at[&c].iter().any(|&i| g.ends(i).0 == c && undefined.contains(&i));
            (c, !g.outs[&c].is_empty() || undefined_out)
        })
        .collect();
    let init_clocks: Vec<usize> =
        g.clocks.iter().copied().filter(|c| !g.inits[c].is_empty()).collect();

    for &c in init_clocks.iter().filter(|c| !stop[*c]) {
        if let Some(&i) = g.props_at[&c].iter().find(|&&i| g.ends(i).1 == c) {
            return reject(Rule::PropClausesOnC0PointOutward, vec![Evidence::Clause(i)]);
        }
    }
    for &c in init_clocks.iter().filter(|c| !stop[*c]) {
        if g.succ[&c].len() > 1 && g.props_at[&c].iter().any(defined) {
            return reject(Rule::OneWellDefinedPropClauseMaximum, vec![Evidence::Qudit(c)]);
        }
    }

    let mut chains = Vec::new();
    for &c0 in init_clocks.iter().filter(|c| !stop[*c]) {
        let mut chain = Chain {
            clocks: vec![c0],
            steps: Vec::new(),
            inits: g.inits[&c0].clone(),
            outs: Vec::new(),
            truncated: true,
        };
        let Some(&first) = g.succ[&c0].iter().next() else {
            chains.push(chain);
            continue;
        };
        chain.steps.push(g.props_between(c0, first));
        chain.clocks.push(first);
        let (mut prev, mut cur) = (c0, first);
        loop {
            if stop[&cur] {
                for &i in &g.props_at[&cur] {
                    let (a, b) = g.ends(i);
                    if (a, b) == (prev, cur) {
                        continue;
                    }
                    if b == cur || defined(&i) {
                        return reject(
                            Rule::NeighboringClausesOfANonzeroLengthTacc,
                            vec![Evidence::Clause(i)],
                        );
                    }
                }
                chain.outs = g.outs[&cur].clone();
                chain.truncated = chain.outs.is_empty();
                break;
            }
            let nb = g.neighbors(cur);
            if nb.len() > 2 {
                return reject(Rule::NoForksInATacc, vec![Evidence::Qudit(cur)]);
            }
            if let Some(&i) = g.props_at[&cur].iter().find(|&&i| g.ends(i) == (cur, prev)) {
                return reject(Rule::UniqueDirectionOfATacc, vec![Evidence::Clause(i)]);
            }
            let Some(&next) = nb.iter().find(|&&n| n != prev) else {
                break;
            };
            if let Some(&i) = g.props_at[&cur].iter().find(|&&i| g.ends(i) == (next, cur)) {
                return reject(Rule::UniqueDirectionOfATacc, vec![Evidence::Clause(i)]);
            }
            if chain.clocks.contains(&next) {
                return reject(Rule::UniqueDirectionOfATacc, vec![Evidence::Qudit(next)]);
            }
            chain.steps.push(g.props_between(cur, next));
            chain.clocks.push(next);
            prev = cur;
            cur = next;
        }
        chains.push(chain);
    }

    for &c in init_clocks.iter().filter(|c| stop[*c]) {
        for &i in &g.props_at[&c] {
            if g.ends(i).1 == c || defined(&i) {
                return reject(Rule::NeighboringClausesOfAnActiveDot, vec![Evidence::Clause(i)]);
            }
        }
        let outs = g.outs[&c].clone();
        chains.push(Chain {
            clocks: vec![c],
            steps: Vec::new(),
            inits: g.inits[&c].clone(),
            truncated: outs.is_empty(),
            outs,
        });
    }
    Ok(chains)
}

fn shared_checks(taccs: &[Tacc]) -> std::result::Result<(), Reject> {
    let pairs = || {
        (0..taccs.len()).flat_map(move |a| (0..taccs.len()).filter(move |&b| b != a).map(move |b| (a, b)))
    };
    for (a, b) in pairs() {
        let props = taccs[a].prop_logicals();
        let other = taccs[b].logicals();
        if let Some(&l) = props.intersection(&other).next() {
            return reject(Rule::NoPropClauseOnSharedQudit, vec![Evidence::Qudit(l)]);
        }
    }
    for (a, b) in pairs() {
        let inits = taccs[a].init_logicals();
        let outs = taccs[b].out_logicals();
        if let Some(&l) = inits.intersection(&outs).next() {
            return reject(Rule::NoInitAndOutClausesOnSharedQudit, vec![Evidence::Qudit(l)]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gate::*;

    fn slct(n: usize, clauses: Vec<Clause>) -> Instance {
        Instance::new(Variant::Slct, n, clauses).unwrap()
    }

    fn rule_of(v: &StructuralVerdict) -> Option<&'static str> {
        v.rule().map(Rule::as_str)
    }

    #[test]
    fn init_without_out_is_ignored() {
        let inst = slct(3, vec![Clause::init(0, 1), Clause::prop(H, &[0], 1, 2)]);
        assert_eq!(analyze(&inst, None).unwrap(), StructuralVerdict::TriviallySat);
    }

    #[test]
    fn linear_chain_is_one_task() {
        let inst = slct(
            4,
            vec![
                Clause::init(0, 1),
                Clause::prop(H, &[0], 1, 2),
                Clause::prop(HT, &[0], 2, 3),
                Clause::out(0, 3),
            ],
        );
        let v = analyze(&inst, None).unwrap();
        let tasks = v.tasks();
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].clocks, vec![1, 2, 3]);
        assert_eq!(tasks[0].length(), 2);
        assert!(!tasks[0].truncated);
        assert_eq!(tasks[0].register, vec![0]);
    }

    #[test]
    fn undefined_marking_is_global() {
        // Logical 0 is only initialized in the second component.
        let inst = slct(
            6,
            vec![
                Clause::prop(H, &[0], 1, 2),
                Clause::init(0, 3),
                Clause::prop(H, &[5], 3, 4),
            ],
        );
        assert_eq!(mark_undefined(&inst), [2].into_iter().collect());
    }

    #[test]
    fn fork_is_rejected() {
        let inst = slct(
            6,
            vec![
                Clause::init(0, 1),
                Clause::prop(H, &[0], 1, 2),
                Clause::prop(H, &[0], 2, 3),
                Clause::prop(H, &[0], 2, 4),
                Clause::out(0, 3),
                Clause::out(0, 4),
            ],
        );
        let v = analyze(&inst, None).unwrap();
        assert_eq!(rule_of(&v), Some("no-forks-in-a-tacc"));
    }

    #[test]
    fn two_successors_at_init_clock() {
        let inst = slct(
            5,
            vec![
                Clause::init(0, 1),
                Clause::prop(H, &[0], 1, 2),
                Clause::prop(H, &[0], 1, 3),
                Clause::out(0, 3),
            ],
        );
        let v = analyze(&inst, None).unwrap();
        assert_eq!(rule_of(&v), Some("one-well-defined-prop-clause-maximum"));
    }

    #[test]
    fn truncated_chain_without_simultaneous_props_is_trivial() {
        // Logical 4 is never initialized, so the second step is undefined.
        let inst = slct(
            5,
            vec![
                Clause::init(0, 1),
                Clause::prop(H, &[0], 1, 2),
                Clause::prop(H, &[4], 2, 3),
                Clause::out(0, 3),
            ],
        );
        assert_eq!(analyze(&inst, None).unwrap(), StructuralVerdict::TriviallySat);
    }

    #[test]
    fn truncated_chain_with_simultaneous_props_needs_subroutine() {
        let inst = slct(
            6,
            vec![
                Clause::init(0, 1),
                Clause::init(5, 1),
                Clause::prop(H, &[0], 1, 2),
                Clause::prop(HHCNOT, &[0, 5], 1, 2),
                Clause::prop(H, &[4], 2, 3),
                Clause::out(0, 3),
            ],
        );
        let v = analyze(&inst, None).unwrap();
        assert_eq!(v.tasks().len(), 1);
        assert!(v.tasks()[0].truncated);
        assert_eq!(v.tasks()[0].steps[0].len(), 2);
    }

    #[test]
    fn active_dot_with_out() {
        let inst = slct(2, vec![Clause::init(0, 1), Clause::out(0, 1)]);
        let v = analyze(&inst, None).unwrap();
        assert_eq!(v.tasks().len(), 1);
        assert_eq!(v.tasks()[0].length(), 0);
        assert_eq!(v.tasks()[0].outs.len(), 1);
    }

    #[test]
    fn role_conflict() {
        let inst = slct(3, vec![Clause::init(0, 1), Clause::out(1, 2)]);
        let v = analyze(&inst, None).unwrap();
        assert_eq!(rule_of(&v), Some("single-type-qudits"));
        assert_eq!(
            v,
            StructuralVerdict::Unsat { rule: Rule::SingleTypeQudits, evidence: vec![Evidence::Qudit(1)] }
        );
    }

    #[test]
    fn witness_rules() {
        let inst = Instance::new(
            Variant::WitnessedSlct,
            4,
            vec![
                Clause::InitCopy { logical: 0, witness: 1, clock: 3 },
                Clause::InitCopy { logical: 0, witness: 2, clock: 3 },
                Clause::out(0, 3),
            ],
        )
        .unwrap();
        assert_eq!(analyze(&inst, None), Err(Error::WitnessMissing));
        assert_eq!(
            analyze(&inst, Some(&[true])),
            Err(Error::WitnessLengthMismatch { expected: 2, found: 1 })
        );
        let v = analyze(&inst, Some(&[true, false])).unwrap();
        assert_eq!(rule_of(&v), Some("witness-states-differ"));
        let v = analyze(&inst, Some(&[true, true])).unwrap();
        assert!(matches!(v, StructuralVerdict::NeedsSubroutine { .. }));

        let mixed = Instance::new(
            Variant::WitnessedSlct,
            3,
            vec![
                Clause::init(0, 2),
                Clause::InitCopy { logical: 0, witness: 1, clock: 2 },
                Clause::out(0, 2),
            ],
        )
        .unwrap();
        let v = analyze(&mixed, Some(&[true])).unwrap();
        assert_eq!(rule_of(&v), Some("init-and-copy-with-witness-one"));
        assert!(analyze(&mixed, Some(&[false])).unwrap().rule().is_none());
    }

    #[test]
    fn pair_rules() {
        let mixed = Instance::new(
            Variant::ClassicalSlct,
            3,
            vec![
                Clause::init(0, 2),
                Clause::InitPair { logical: 0, aux: 1, clock: 2 },
                Clause::out(0, 2),
            ],
        )
        .unwrap();
        assert_eq!(rule_of(&analyze(&mixed, None).unwrap()), Some("init-and-pair-on-shared-logical"));
        let fanout = Instance::new(
            Variant::ClassicalSlct,
            4,
            vec![
                Clause::InitPair { logical: 0, aux: 1, clock: 3 },
                Clause::InitPair { logical: 0, aux: 2, clock: 3 },
                Clause::out(0, 3),
            ],
        )
        .unwrap();
        assert_eq!(rule_of(&analyze(&fanout, None).unwrap()), Some("pair-monogamy"));
    }

    #[test]
    fn shared_prop_logical_across_chains() {
        let inst = slct(
            6,
            vec![
                Clause::init(0, 2),
                Clause::prop(H, &[0], 2, 3),
                Clause::out(0, 3),
                Clause::init(0, 4),
                Clause::prop(H, &[1], 4, 5),
                Clause::init(1, 4),
                Clause::out(1, 5),
            ],
        );
        let v = analyze(&inst, None).unwrap();
        assert_eq!(rule_of(&v), Some("no-prop-clause-on-shared-qudit"));
    }

    #[test]
    fn lct_rules() {
        let lct = |n, cs| Instance::new(Variant::Lct, n, cs).unwrap();
        let chain = lct(
            5,
            vec![
                Clause::Init { logical: 0, clock: 1, endpoint: Some(3) },
                Clause::prop(H, &[0], 1, 2),
                Clause::Out { logical: 0, clock: 2, endpoint: Some(4) },
            ],
        );
        assert_eq!(analyze(&chain, None).unwrap().tasks().len(), 1);
        let shared_endpoint = lct(
            4,
            vec![
                Clause::Init { logical: 0, clock: 1, endpoint: Some(3) },
                Clause::prop(H, &[0], 1, 2),
                Clause::Out { logical: 0, clock: 2, endpoint: Some(3) },
            ],
        );
        assert_eq!(rule_of(&analyze(&shared_endpoint, None).unwrap()), Some("unique-endpoint-qudit"));
        let init_at_end = lct(
            5,
            vec![
                Clause::prop(H, &[0], 1, 2),
                Clause::Init { logical: 0, clock: 2, endpoint: Some(3) },
                Clause::Out { logical: 0, clock: 1, endpoint: Some(4) },
            ],
        );
        assert_eq!(rule_of(&analyze(&init_at_end, None).unwrap()), Some("unique-clock-qudit"));
    }

    #[test]
    fn verdict_json_shape() {
        let inst = slct(2, vec![Clause::init(0, 1), Clause::out(0, 1)]);
        let json: serde_json::Value =
            serde_json::from_str(&analyze(&inst, None).unwrap().to_json()).unwrap();
        assert_eq!(json["decision"], "needs_subroutine");
        assert!(json["rule"].is_null());
        assert_eq!(json["tasks"][0]["inits"][0]["kind"], "zero");
    }
}
