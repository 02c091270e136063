//! Instances, clauses, qudit roles and clock components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem variant; fixes the local qudit dimension and the gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "LCT")]
    Lct,
    #[serde(rename = "SLCT")]
    Slct,
    #[serde(rename = "WitnessedSLCT")]
    WitnessedSlct,
    #[serde(rename = "ClassicalSLCT")]
    ClassicalSlct,
    #[serde(rename = "Qubit")]
    Qubit,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Lct,
        Variant::Slct,
        Variant::WitnessedSlct,
        Variant::ClassicalSlct,
        Variant::Qubit,
    ];

    pub fn local_dim(self) -> usize {
        match self {
            Variant::Lct => 17,
            Variant::Slct => 6,
            Variant::WitnessedSlct | Variant::ClassicalSlct => 8,
            Variant::Qubit => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lct => "LCT",
            Variant::Slct => "SLCT",
            Variant::WitnessedSlct => "WitnessedSLCT",
            Variant::ClassicalSlct => "ClassicalSLCT",
            Variant::Qubit => "Qubit",
        }
    }

    /// Whether `gate` may appear in a Prop clause of this variant.
    pub fn allows_gate(self, gate: Gate) -> bool {
        match self {
            Variant::Lct | Variant::Slct | Variant::WitnessedSlct => gate.is_quantum(),
            Variant::ClassicalSlct => !gate.is_quantum(),
            Variant::Qubit => false,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Propagation gates. `HT` is the product H·T, `HHCNOT` is (H⊗H)·CNOT and
/// `XXXTOFFOLI` is (X⊗X⊗X)·Toffoli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    H,
    HT,
    HHCNOT,
    X,
    XXXTOFFOLI,
}

impl Gate {
    pub const QUANTUM: [Gate; 3] = [Gate::H, Gate::HT, Gate::HHCNOT];
    pub const CLASSICAL: [Gate; 2] = [Gate::X, Gate::XXXTOFFOLI];

    pub fn arity(self) -> usize {
        match self {
            Gate::H | Gate::HT | Gate::X => 1,
            Gate::HHCNOT => 2,
            Gate::XXXTOFFOLI => 3,
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, Gate::H | Gate::HT | Gate::HHCNOT)
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::HT => "HT",
            Gate::HHCNOT => "HHCNOT",
            Gate::X => "X",
            Gate::XXXTOFFOLI => "XXXTOFFOLI",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The role a qudit plays in an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Logical,
    Clock,
    Endpoint,
    Witness,
    Aux,
    Unused,
}

/// One clause of an instance.
///
/// The first five kinds are qudit clauses. The last four only appear in
/// `Qubit` instances produced by [`crate::qubitize::qubitize_instance`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Clause {
    Init {
        logical: usize,
        clock: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<usize>,
    },
    InitCopy {
        logical: usize,
        witness: usize,
        clock: usize,
    },
    InitPair {
        logical: usize,
        aux: usize,
        clock: usize,
    },
    Prop {
        gate: Gate,
        logicals: Vec<usize>,
        clock_pred: usize,
        clock_succ: usize,
    },
    Out {
        logical: usize,
        clock: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<usize>,
    },
    /// A qudit clause acting on the data bits of qubit blocks.
    Lifted {
        origin: Variant,
        clause: Box<Clause>,
        blocks: Vec<Vec<usize>>,
    },
    /// Penalizes data values `>= dim` inside a block.
    T1 { dim: usize, block: Vec<usize> },
    /// Binds the entanglement bits of a block to a fixed multi-qubit state.
    T2 { block: Vec<usize> },
    /// Restricts four qubits of a block to the four-dimensional code space.
    H4to2 { block: Vec<usize>, group: usize },
}

impl Clause {
    pub fn init(logical: usize, clock: usize) -> Self {
        Clause::Init { logical, clock, endpoint: None }
    }

    pub fn out(logical: usize, clock: usize) -> Self {
        Clause::Out { logical, clock, endpoint: None }
    }

    pub fn prop(gate: Gate, logicals: &[usize], clock_pred: usize, clock_succ: usize) -> Self {
        Clause::Prop { gate, logicals: logicals.to_vec(), clock_pred, clock_succ }
    }

    /// Short kind name, matching the JSON `type` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Clause::Init { .. } => "init",
            Clause::InitCopy { .. } => "init_copy",
            Clause::InitPair { .. } => "init_pair",
            Clause::Prop { .. } => "prop",
            Clause::Out { .. } => "out",
            Clause::Lifted { .. } => "lifted",
            Clause::T1 { .. } => "t1",
            Clause::T2 { .. } => "t2",
            Clause::H4to2 { .. } => "h4to2",
        }
    }

    pub fn is_init_like(&self) -> bool {
        matches!(self, Clause::Init { .. } | Clause::InitCopy { .. } | Clause::InitPair { .. })
    }

    pub fn is_qubit_clause(&self) -> bool {
        matches!(
            self,
            Clause::Lifted { .. } | Clause::T1 { .. } | Clause::T2 { .. } | Clause::H4to2 { .. }
        )
    }

    /// Qudits the clause acts on, in operator order.
    pub fn sites(&self) -> Vec<usize> {
        self.sites_with_roles().into_iter().map(|(q, _)| q).collect()
    }

    /// Qudits with the role each one plays in this clause, in operator order.
    /// Qubit clauses report their qubits with role `Unused`.
    pub fn sites_with_roles(&self) -> Vec<(usize, Role)> {
        use Role::*;
        match self {
            Clause::Init { logical, clock, endpoint } | Clause::Out { logical, clock, endpoint } => {
                let mut v = vec![(*logical, Logical), (*clock, Clock)];
                if let Some(e) = endpoint {
                    v.push((*e, Endpoint));
                }
                v
            }
            Clause::InitCopy { logical, witness, clock } => {
                vec![(*logical, Logical), (*witness, Witness), (*clock, Clock)]
            }
            Clause::InitPair { logical, aux, clock } => {
                vec![(*logical, Logical), (*aux, Aux), (*clock, Clock)]
            }
            Clause::Prop { logicals, clock_pred, clock_succ, .. } => {
                let mut v: Vec<_> = logicals.iter().map(|&l| (l, Logical)).collect();
                v.push((*clock_pred, Clock));
                v.push((*clock_succ, Clock));
                v
            }
            Clause::Lifted { blocks, .. } => {
                blocks.iter().flatten().map(|&q| (q, Unused)).collect()
            }
            Clause::T1 { block, .. } | Clause::T2 { block } => {
                block.iter().map(|&q| (q, Unused)).collect()
            }
            Clause::H4to2 { block, group } => {
                block.iter().skip(4 * group).take(4).map(|&q| (q, Unused)).collect()
            }
        }
    }

    /// Logical qudits touched by the clause.
    pub fn logicals(&self) -> Vec<usize> {
        match self {
            Clause::Init { logical, .. }
            | Clause::InitCopy { logical, .. }
            | Clause::InitPair { logical, .. }
            | Clause::Out { logical, .. } => vec![*logical],
            Clause::Prop { logicals, .. } => logicals.clone(),
            _ => Vec::new(),
        }
    }

    /// Clock qudits touched by the clause.
    pub fn clocks(&self) -> Vec<usize> {
        match self {
            Clause::Init { clock, .. }
            | Clause::InitCopy { clock, .. }
            | Clause::InitPair { clock, .. }
            | Clause::Out { clock, .. } => vec![*clock],
            Clause::Prop { clock_pred, clock_succ, .. } => vec![*clock_pred, *clock_succ],
            _ => Vec::new(),
        }
    }

    /// The same clause with every qudit index passed through `f`.
    pub fn relabel(&self, f: &impl Fn(usize) -> usize) -> Clause {
        let fb = |b: &Vec<usize>| b.iter().map(|&q| f(q)).collect::<Vec<_>>();
        match self {
            Clause::Init { logical, clock, endpoint } => Clause::Init {
                logical: f(*logical),
                clock: f(*clock),
                endpoint: endpoint.map(f),
            },
            Clause::Out { logical, clock, endpoint } => Clause::Out {
                logical: f(*logical),
                clock: f(*clock),
                endpoint: endpoint.map(f),
            },
            Clause::InitCopy { logical, witness, clock } => Clause::InitCopy {
                logical: f(*logical),
                witness: f(*witness),
                clock: f(*clock),
            },
            Clause::InitPair { logical, aux, clock } => Clause::InitPair {
                logical: f(*logical),
                aux: f(*aux),
                clock: f(*clock),
            },
            Clause::Prop { gate, logicals, clock_pred, clock_succ } => Clause::Prop {
                gate: *gate,
                logicals: fb(logicals),
                clock_pred: f(*clock_pred),
                clock_succ: f(*clock_succ),
            },
            Clause::Lifted { origin, clause, blocks } => Clause::Lifted {
                origin: *origin,
                clause: clause.clone(),
                blocks: blocks.iter().map(fb).collect(),
            },
            Clause::T1 { dim, block } => Clause::T1 { dim: *dim, block: fb(block) },
            Clause::T2 { block } => Clause::T2 { block: fb(block) },
            Clause::H4to2 { block, group } => Clause::H4to2 { block: fb(block), group: *group },
        }
    }

    /// Checks the clause against a variant and qudit count.
    pub fn validate(&self, variant: Variant, num_qudits: usize, index: usize) -> Result<()> {
        let bad = |reason: &str| Error::InvalidClause { clause: index, reason: reason.to_string() };
        for q in self.sites() {
            if q >= num_qudits {
                return Err(Error::IndexOutOfRange { index: q, num_qudits });
            }
        }
        if variant == Variant::Qubit {
            return self.validate_qubit(index);
        }
        match self {
            Clause::Init { endpoint, .. } | Clause::Out { endpoint, .. } => {
                if endpoint.is_some() != (variant == Variant::Lct) {
                    return Err(bad("an endpoint is required exactly for LCT instances"));
                }
            }
            Clause::InitCopy { .. } if variant != Variant::WitnessedSlct => {
                return Err(bad("init_copy clauses require a WitnessedSLCT instance"));
            }
            Clause::InitPair { .. } if variant != Variant::ClassicalSlct => {
                return Err(bad("init_pair clauses require a ClassicalSLCT instance"));
            }
            Clause::Prop { gate, logicals, clock_pred, clock_succ } => {
                if !variant.allows_gate(*gate) {
                    return Err(Error::GateVariantMismatch {
                        gate: gate.to_string(),
                        variant: variant.to_string(),
                    });
                }
                if logicals.len() != gate.arity() {
                    return Err(bad("number of logicals does not match the gate arity"));
                }
                let distinct: BTreeSet<_> = logicals.iter().collect();
                if distinct.len() != logicals.len() {
                    return Err(bad("logicals of a prop clause must be distinct"));
                }
                if clock_pred == clock_succ {
                    return Err(bad("clock_pred and clock_succ must differ"));
                }
            }
            Clause::Lifted { .. } | Clause::T1 { .. } | Clause::T2 { .. } | Clause::H4to2 { .. } => {
                return Err(bad("qubit gadget clauses require a Qubit instance"));
            }
            _ => {}
        }
        let sites = self.sites();
        let distinct: BTreeSet<_> = sites.iter().collect();
        if distinct.len() != sites.len() {
            return Err(bad("a clause may not act twice on the same qudit"));
        }
        Ok(())
    }

    fn validate_qubit(&self, index: usize) -> Result<()> {
        let bad = |reason: &str| Error::InvalidClause { clause: index, reason: reason.to_string() };
        let check_block = |b: &Vec<usize>| -> Result<()> {
            if b.is_empty() || !b.len().is_multiple_of(4) {
                return Err(bad("qubit blocks must have a positive length divisible by four"));
            }
            Ok(())
        };
        match self {
            Clause::Lifted { origin, clause, blocks } => {
                if *origin == Variant::Qubit {
                    return Err(bad("lifted clauses must originate from a qudit variant"));
                }
                if clause.is_qubit_clause() {
                    return Err(bad("lifted clauses must wrap a qudit clause"));
                }
                // Qudit ids inside the wrapped clause are informational only.
                clause.validate(*origin, usize::MAX, index)?;
                if blocks.len() != clause.sites().len() {
                    return Err(bad("one block per site of the wrapped clause is required"));
                }
                blocks.iter().try_for_each(check_block)
            }
            Clause::T1 { dim, block } => {
                check_block(block)?;
                if *dim == 0 {
                    return Err(bad("t1 dimension must be positive"));
                }
                Ok(())
            }
            Clause::T2 { block } => check_block(block),
            Clause::H4to2 { block, group } => {
                check_block(block)?;
                if 4 * group >= block.len() {
                    return Err(bad("h4to2 group outside its block"));
                }
                Ok(())
            }
            _ => Err(bad("Qubit instances only contain qubit gadget clauses")),
        }
    }
}

/// A QSAT instance: a variant, a qudit count and an ordered clause list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub variant: Variant,
    pub num_qudits: usize,
    pub clauses: Vec<Clause>,
}

impl Instance {
    pub fn new(variant: Variant, num_qudits: usize, clauses: Vec<Clause>) -> Result<Self> {
        let inst = Instance { variant, num_qudits, clauses };
        inst.validate()?;
        Ok(inst)
    }

    pub fn empty(variant: Variant, num_qudits: usize) -> Self {
        Instance { variant, num_qudits, clauses: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.clauses.iter().enumerate() {
            c.validate(self.variant, self.num_qudits, i)?;
        }
        Ok(())
    }

    pub fn local_dim(&self) -> usize {
        self.variant.local_dim()
    }

    /// Same instance restricted to the clauses whose indices satisfy `keep`.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> Instance {
        Instance {
            variant: self.variant,
            num_qudits: self.num_qudits,
            clauses: self
                .clauses
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, c)| c.clone())
                .collect(),
        }
    }

    /// Renumbers the used qudits to `0..k` preserving their order.
    pub fn compacted(&self) -> Instance {
        let used: BTreeSet<usize> = self.clauses.iter().flat_map(|c| c.sites()).collect();
        let map: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        Instance {
            variant: self.variant,
            num_qudits: used.len(),
            clauses: self.clauses.iter().map(|c| c.relabel(&|q| map[&q])).collect(),
        }
    }
}

/// Parses and validates an instance from JSON text.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let inst: Instance =
        serde_json::from_str(text).map_err(|e| Error::MalformedJson(e.to_string()))?;
    inst.validate()?;
    Ok(inst)
}

/// Serializes an instance to pretty-printed JSON.
pub fn serialize(inst: &Instance) -> String {
    serde_json::to_string_pretty(inst).expect("instances always serialize")
}

/// Per-qudit role assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleMap {
    pub roles: Vec<Role>,
}

impl RoleMap {
    pub fn role(&self, q: usize) -> Role {
        self.roles[q]
    }

    pub fn qudits_with(&self, role: Role) -> Vec<usize> {
        (0..self.roles.len()).filter(|&q| self.roles[q] == role).collect()
    }
}

/// Assigns one role per touched qudit, or reports the first qudit (in
/// clause order) that is used in two roles.
pub fn assign_roles(inst: &Instance) -> Result<RoleMap> {
    let mut roles = vec![Role::Unused; inst.num_qudits];
    for c in &inst.clauses {
        for (q, r) in c.sites_with_roles() {
            if r == Role::Unused {
                continue;
            }
            match roles[q] {
                Role::Unused => roles[q] = r,
                prev if prev != r => {
                    let mut rs = vec![prev, r];
                    rs.sort();
                    return Err(Error::RoleConflict { qudit: q, roles: rs });
                }
                _ => {}
            }
        }
    }
    Ok(RoleMap { roles })
}

/// A connected set of clock qudits together with what hangs off them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClockComponent {
    pub clocks: Vec<usize>,
    pub endpoints: Vec<usize>,
    /// Indices of clauses acting on a clock of the component.
    pub clauses: Vec<usize>,
    pub logicals: Vec<usize>,
    pub witnesses: Vec<usize>,
    pub auxes: Vec<usize>,
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Splits the clock qudits into connected components, ordered by their
/// smallest clock index. Prop clauses join their two clocks; for LCT the
/// endpoint of an Init or Out clause also joins its clock.
pub fn components(inst: &Instance, roles: &RoleMap) -> Vec<ClockComponent> {
    let n = inst.num_qudits;
    let mut uf = UnionFind::new(n);
    for c in &inst.clauses {
        match c {
            Clause::Prop { clock_pred, clock_succ, .. } => uf.union(*clock_pred, *clock_succ),
            Clause::Init { clock, endpoint: Some(e), .. }
            | Clause::Out { clock, endpoint: Some(e), .. }
                if inst.variant == Variant::Lct =>
            {
                uf.union(*clock, *e)
            }
            _ => {}
        }
    }
    let mut by_root: BTreeMap<usize, ClockComponent> = BTreeMap::new();
    for q in roles.qudits_with(Role::Clock) {
        by_root.entry(uf.find(q)).or_default().clocks.push(q);
    }
    for q in roles.qudits_with(Role::Endpoint) {
        if let Some(comp) = by_root.get_mut(&uf.find(q)) {
            comp.endpoints.push(q);
        }
    }
    for (i, c) in inst.clauses.iter().enumerate() {
        let Some(&clock) = c.clocks().first() else { continue };
        let comp = by_root.get_mut(&uf.find(clock)).expect("clock belongs to a component");
        comp.clauses.push(i);
        for (q, r) in c.sites_with_roles() {
            match r {
                Role::Logical => comp.logicals.push(q),
                Role::Witness => comp.witnesses.push(q),
                Role::Aux => comp.auxes.push(q),
                _ => {}
            }
        }
    }
    let mut comps: Vec<ClockComponent> = by_root.into_values().collect();
    for comp in &mut comps {
        for v in [&mut comp.logicals, &mut comp.witnesses, &mut comp.auxes] {
            v.sort_unstable();
            v.dedup();
        }
    }
    comps.sort_by_key(|c| c.clocks[0]);
    comps
}

/// Renders the instance graph in Graphviz DOT. Prop clauses become directed
/// clock edges; every other qudit link is drawn undirected.
pub fn export_dot(inst: &Instance) -> String {
    let roles = assign_roles(inst).ok();
    let mut out = String::from("digraph instance {\n  node [style=filled];\n");
    for q in 0..inst.num_qudits {
        let role = roles.as_ref().map_or(Role::Unused, |r| r.role(q));
        let color = match role {
            Role::Logical => "lightblue",
            Role::Clock => "orange",
            Role::Endpoint => "palegreen",
            Role::Witness => "plum",
            Role::Aux => "khaki",
            Role::Unused => "white",
        };
        out.push_str(&format!("  q{q} [label=\"{q}\", fillcolor={color}];\n"));
    }
    for (i, c) in inst.clauses.iter().enumerate() {
        match c {
            Clause::Prop { gate, logicals, clock_pred, clock_succ } => {
                out.push_str(&format!(
                    "  q{clock_pred} -> q{clock_succ} [label=\"#{i} {gate}\"];\n"
                ));
                for l in logicals {
                    out.push_str(&format!(
                        "  q{clock_pred} -> q{l} [dir=none, style=dashed, label=\"#{i}\"];\n"
                    ));
                }
            }
            Clause::Lifted { .. } | Clause::T1 { .. } | Clause::T2 { .. } | Clause::H4to2 { .. } => {
                let sites = c.sites();
                for w in sites.windows(2) {
                    out.push_str(&format!(
                        "  q{} -> q{} [dir=none, label=\"#{i} {}\"];\n",
                        w[0],
                        w[1],
                        c.kind()
                    ));
                }
            }
            _ => {
                let clock = c.clocks()[0];
                for q in c.sites().into_iter().filter(|&q| q != clock) {
                    out.push_str(&format!(
                        "  q{clock} -> q{q} [dir=none, label=\"#{i} {}\"];\n",
                        c.kind()
                    ));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
