//! Direct products and direct sums of instances.
//!
//! Both sides are padded to the same qudit count. In a product every combined
//! qudit has local space `D₁ ⊗ D₂` (index `a·d₂ + b`); in a sum it has
//! `D₁ ⊕ D₂` (left states first, right states shifted by `d₁`).
//!
//! A product lift of a clause projector `P` is `P ⊗ I`. A sum lift of a
//! left clause acts as `P` when all of its sites sit in `D₁`, as 0 when all
//! sit in `D₂`, and as the identity on mixed sectors, so its null space is
//! `ker P ⊕ D₂^{⊗k}` on the clause's support (and symmetrically on the right).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clauses::{build_projector, op_from_fn, LocalProjector};
use crate::deciders::{decide, Decision};
use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::model::{Instance, UnionFind};
use crate::oracle::LocalHamiltonian;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComboOp {
    Product,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Two instances combined symbolically; clause matrices are built on demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComboInstance {
    pub op: ComboOp,
    pub left: Instance,
    pub right: Instance,
}

fn pad(inst: &Instance, n: usize) -> Instance {
    Instance { num_qudits: n, ..inst.clone() }
}

fn combine(op: ComboOp, a: &Instance, b: &Instance) -> ComboInstance {
    let n = a.num_qudits.max(b.num_qudits);
    ComboInstance { op, left: pad(a, n), right: pad(b, n) }
}

/// Clauses of `a` become `P ⊗ I`, clauses of `b` become `I ⊗ P`.
pub fn direct_product(a: &Instance, b: &Instance) -> ComboInstance {
    combine(ComboOp::Product, a, b)
}

/// Clauses of `a` become `P ⊕ 0`, clauses of `b` become `0 ⊕ P`.
pub fn direct_sum(a: &Instance, b: &Instance) -> ComboInstance {
    combine(ComboOp::Sum, a, b)
}

/// Recovers one factor of a product (padded to the common qudit count).
pub fn project(c: &ComboInstance, side: Side) -> Result<Instance> {
    if c.op != ComboOp::Product {
        return Err(Error::NotAProduct);
    }
    Ok(match side {
        Side::Left => c.left.clone(),
        Side::Right => c.right.clone(),
    })
}

/// Parses, validates and pads a combination from JSON text.
pub fn parse_combo(text: &str) -> Result<ComboInstance> {
    let c: ComboInstance = serde_json::from_str(text).map_err(|e| Error::MalformedJson(e.to_string()))?;
    c.left.validate()?;
    c.right.validate()?;
    Ok(combine(c.op, &c.left, &c.right))
}

impl ComboInstance {
    pub fn num_qudits(&self) -> usize {
        self.left.num_qudits
    }

    pub fn local_dim(&self) -> usize {
        let (d1, d2) = (self.left.local_dim(), self.right.local_dim());
        match self.op {
            ComboOp::Product => d1 * d2,
            ComboOp::Sum => d1 + d2,
        }
    }

    /// Every clause tagged with its side, left clauses first.
    pub fn clauses(&self) -> impl Iterator<Item = (Side, &crate::model::Clause)> {
        self.left
            .clauses
            .iter()
            .map(|c| (Side::Left, c))
            .chain(self.right.clauses.iter().map(|c| (Side::Right, c)))
    }

    /// Lifts a projector of one side onto the combined local space.
    pub fn lift(&self, side: Side, p: &LocalProjector) -> LocalProjector {
        let l = Lifter::new(self.op, side, self.left.local_dim(), self.right.local_dim(), p);
        let keep: Vec<Vec<usize>> = (0..p.sites.len()).map(|j| l.active(j)).collect();
        l.build(&keep)
    }

    fn side_projectors(&self) -> Result<Vec<(Side, LocalProjector)>> {
        self.clauses()
            .map(|(side, c)| {
                let inst = if side == Side::Left { &self.left } else { &self.right };
                Ok((side, build_projector(c, inst.variant)?))
            })
            .collect()
    }

    /// A Hamiltonian with the same null space as [`Self::to_hamiltonian`],
    /// small enough for the oracle, together with a multiplicity: the null
    /// space dimension of the combination is the reduced one times the
    /// multiplicity.
    ///
    /// Every lifted term is compressed to the local states that lie in the
    /// active set of every term touching the site; null vectors have no
    /// weight elsewhere. In a product, a site touched by one side only
    /// leaves the other factor free, so that factor is pinned to one state
    /// and accounted for in the multiplicity.
    pub fn null_space_hamiltonian(&self) -> Result<(LocalHamiltonian, u128)> {
        let (d1, d2) = (self.left.local_dim(), self.right.local_dim());
        let n = self.num_qudits();
        let projectors = self.side_projectors()?;
        let lifters: Vec<Lifter> = projectors.iter().map(|(s, p)| Lifter::new(self.op, *s, d1, d2, p)).collect();
        let mut allowed: Vec<Option<BTreeSet<usize>>> = vec![None; n];
        let mut touched = vec![[false; 2]; n];
        for l in &lifters {
            for (j, &site) in l.p.sites.iter().enumerate() {
                touched[site][(l.side == Side::Right) as usize] = true;
                let act: BTreeSet<usize> = l.active(j).into_iter().collect();
                allowed[site] = Some(match allowed[site].take() {
                    None => act,
                    Some(prev) => prev.intersection(&act).copied().collect(),
                });
            }
        }
        let mut multiplicity: u128 = 1;
        if self.op == ComboOp::Product {
            for site in 0..n {
                match touched[site] {
                    [true, false] => {
                        allowed[site] = allowed[site].take().map(|s| s.into_iter().filter(|x| x % d2 == 0).collect());
                        multiplicity *= d2 as u128;
                    }
                    [false, true] => {
                        allowed[site] = allowed[site].take().map(|s| s.into_iter().filter(|x| x / d2 == 0).collect());
                        multiplicity *= d1 as u128;
                    }
                    _ => {}
                }
            }
        }
        let terms = lifters
            .iter()
            .map(|l| {
                let keep: Vec<Vec<usize>> =
                    l.p.sites.iter().map(|&s| allowed[s].as_ref().unwrap().iter().copied().collect()).collect();
                l.build(&keep)
            })
            .collect();
        Ok((LocalHamiltonian::new(self.local_dim(), n, terms), multiplicity))
    }

    /// Null space dimension of the combined Hamiltonian.
    pub fn nullspace_dim(&self, cfg: &crate::oracle::OracleConfig) -> Result<u128> {
        let (h, m) = self.null_space_hamiltonian()?;
        Ok(crate::oracle::nullspace_dim(&h, cfg)?.0.saturating_mul(m))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("combinations always serialize")
    }

    /// All lifted clause projectors as one Hamiltonian.
    pub fn to_hamiltonian(&self) -> Result<LocalHamiltonian> {
        let terms = self.side_projectors()?.iter().map(|(side, p)| self.lift(*side, p)).collect();
        Ok(LocalHamiltonian::new(self.local_dim(), self.num_qudits(), terms))
    }
}

/// Position of a combined local state inside a lifted term: the core
/// position of the lifted side's state (if it belongs to the lifted side's
/// active set) and the state of the other side.
#[derive(Clone, Copy)]
struct Decoded {
    own: Option<usize>,
    other: usize,
}

struct Lifter<'a> {
    op: ComboOp,
    side: Side,
    d1: usize,
    d2: usize,
    p: &'a LocalProjector,
    own_pos: Vec<BTreeMap<usize, usize>>,
}

impl<'a> Lifter<'a> {
    fn new(op: ComboOp, side: Side, d1: usize, d2: usize, p: &'a LocalProjector) -> Self {
        let own_pos =
            p.active.iter().map(|own| own.iter().enumerate().map(|(i, &s)| (s, i)).collect()).collect();
        Lifter { op, side, d1, d2, p, own_pos }
    }

    /// Combined local index of (left state, right state) for products, or
    /// of a one-sided state for sums.
    fn decode(&self, j: usize, x: usize) -> Decoded {
        let (own, other) = match (self.op, self.side) {
            (ComboOp::Product, Side::Left) => (Some(x / self.d2), x % self.d2),
            (ComboOp::Product, Side::Right) => (Some(x % self.d2), x / self.d2),
            (ComboOp::Sum, Side::Left) if x < self.d1 => (Some(x), 0),
            (ComboOp::Sum, Side::Right) if x >= self.d1 => (Some(x - self.d1), 0),
            (ComboOp::Sum, _) => (None, x),
        };
        Decoded { own: own.and_then(|s| self.own_pos[j].get(&s).copied()), other }
    }

    /// Full lifted active set of site `j`.
    fn active(&self, j: usize) -> Vec<usize> {
        let own = &self.p.active[j];
        let mut v: Vec<usize> = match (self.op, self.side) {
            (ComboOp::Product, Side::Left) => {
                own.iter().flat_map(|&a| (0..self.d2).map(move |b| a * self.d2 + b)).collect()
            }
            (ComboOp::Product, Side::Right) => {
                (0..self.d1).flat_map(|a| own.iter().map(move |&b| a * self.d2 + b)).collect()
            }
            (ComboOp::Sum, Side::Left) => own.iter().copied().chain(self.d1..self.d1 + self.d2).collect(),
            (ComboOp::Sum, Side::Right) => (0..self.d1).chain(own.iter().map(|&b| self.d1 + b)).collect(),
        };
        v.sort_unstable();
        v
    }

    /// The lifted projector compressed to the given subsets of its active
    /// local states.
    fn build(&self, keep: &[Vec<usize>]) -> LocalProjector {
        let decoded: Vec<Vec<Decoded>> = keep
            .iter()
            .enumerate()
            .map(|(j, states)| states.iter().map(|&x| self.decode(j, x)).collect())
            .collect();
        let strides = crate::linalg::strides(&self.p.active.iter().map(Vec::len).collect::<Vec<_>>());
        let own_index = |x: &[usize]| -> Option<usize> {
            x.iter().enumerate().try_fold(0, |acc, (j, &i)| decoded[j][i].own.map(|p| acc + p * strides[j]))
        };
        let dims: Vec<usize> = keep.iter().map(Vec::len).collect();
        let core = match self.op {
            ComboOp::Product => op_from_fn(&dims, |r, c| {
                if (0..r.len()).any(|j| decoded[j][r[j]].other != decoded[j][c[j]].other) {
                    return ZERO;
                }
                match (own_index(r), own_index(c)) {
                    (Some(a), Some(b)) => self.p.core[(a, b)],
                    _ => unreachable!("kept states lie in the lifted active set"),
                }
            }),
            ComboOp::Sum => op_from_fn(&dims, |r, c| match (own_index(r), own_index(c)) {
                (Some(a), Some(b)) => self.p.core[(a, b)],
                _ if r != c => ZERO,
                // The all-other sector is the zero block; mixed sectors are penalized.
                _ if (0..r.len()).all(|j| decoded[j][r[j]].own.is_none()) => ZERO,
                _ => ONE,
            }),
        };
        LocalProjector {
            sites: self.p.sites.clone(),
            local_dim: match self.op {
                ComboOp::Product => self.d1 * self.d2,
                ComboOp::Sum => self.d1 + self.d2,
            },
            active: keep.to_vec(),
            core: Arc::new(core),
        }
    }
}

/// Groups of qudits connected by a clause of either side, with the clause
/// indices of each side inside the group.
fn sum_components(c: &ComboInstance) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut uf = UnionFind::new(c.num_qudits());
    for (_, clause) in c.clauses() {
        let sites = clause.sites();
        for w in sites.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, clause) in c.left.clauses.iter().enumerate() {
        groups.entry(uf.find(clause.sites()[0])).or_default().0.push(i);
    }
    for (i, clause) in c.right.clauses.iter().enumerate() {
        groups.entry(uf.find(clause.sites()[0])).or_default().1.push(i);
    }
    groups.into_values().collect()
}

fn sub_witness(inst: &Instance, keep: &[usize], witness: Option<&[bool]>) -> Result<Option<Vec<bool>>> {
    let Some(bits) = witness else { return Ok(None) };
    let map = crate::analyzer::resolve_witness(inst, Some(bits))?;
    let sub = inst.filtered(|i| keep.contains(&i));
    let roles = crate::model::assign_roles(&sub)?;
    Ok(Some(roles.qudits_with(crate::model::Role::Witness).iter().map(|w| map[w]).collect()))
}

/// Decides a combination. A product is accepted iff both sides are. A sum is
/// accepted iff, on every group of qudits connected by clauses, the left or
/// the right clauses of that group are accepted.
pub fn decide_combo(
    c: &ComboInstance,
    witness_left: Option<&[bool]>,
    witness_right: Option<&[bool]>,
    reps: usize,
    seed: u64,
) -> Result<Decision> {
    let mut trace = Vec::new();
    let mut accept = true;
    let mut repetitions = 0;
    let mut run = |inst: &Instance, w: Option<&[bool]>| -> Result<bool> {
        let d = decide(inst, w, reps, seed)?;
        repetitions = repetitions.max(d.repetitions);
        trace.extend(d.trace);
        Ok(d.accept)
    };
    match c.op {
        ComboOp::Product => {
            accept &= run(&c.left, witness_left)?;
            accept &= run(&c.right, witness_right)?;
        }
        ComboOp::Sum => {
            for (left, right) in sum_components(c) {
                let wl = sub_witness(&c.left, &left, witness_left)?;
                let wr = sub_witness(&c.right, &right, witness_right)?;
                let l = run(&c.left.filtered(|i| left.contains(&i)), wl.as_deref())?;
                let r = l || run(&c.right.filtered(|i| right.contains(&i)), wr.as_deref())?;
                accept &= r;
            }
        }
    }
    let verdict = match c.op {
        ComboOp::Product => "product",
        ComboOp::Sum => "sum",
    };
    Ok(Decision { accept, verdict, repetitions, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, identity, kron, max_abs, projector_defects, Mat};
    use crate::model::{Clause, Variant};
    use crate::oracle::{nullspace_dim, OracleConfig};

    fn sat() -> Instance {
        Instance::new(Variant::Slct, 2, vec![Clause::init(0, 1)]).unwrap()
    }

    fn unsat() -> Instance {
        Instance::new(Variant::Slct, 3, vec![Clause::init(0, 1), Clause::out(1, 2)]).unwrap()
    }

    /// Reorders `(a₁..a_k, b₁..b_k)` into `(a₁b₁, …, a_kb_k)`.
    fn interleave(m: &Mat, d1: usize, d2: usize, k: usize) -> Mat {
        let n = (d1 * d2).pow(k as u32);
        let split = |mut x: usize| {
            let mut a = 0;
            let mut b = 0;
            let mut pa = 1;
            let mut pb = 1;
            for _ in 0..k {
                let s = x % (d1 * d2);
                x /= d1 * d2;
                a += (s / d2) * pa;
                b += (s % d2) * pb;
                pa *= d1;
                pb *= d2;
            }
            a * d2.pow(k as u32) + b
        };
        Mat::from_fn(n, n, |r, c| m[(split(r), split(c))])
    }

    #[test]
    fn product_lift_is_kron_with_identity() {
        let c = direct_product(&sat(), &Instance::empty(Variant::Slct, 2));
        let p = build_projector(&c.left.clauses[0], Variant::Slct).unwrap();
        let lifted = c.lift(Side::Left, &p).to_dense();
        let expect = interleave(&kron(&p.to_dense(), &identity(36)), 6, 6, 2);
        assert!(max_abs(&(lifted - expect)) < 1e-12);

        let q = build_projector(&Clause::out(0, 1), Variant::Slct).unwrap();
        let lifted = c.lift(Side::Right, &q);
        let (e, h) = projector_defects(&lifted.core);
        assert!(e < 1e-9 && h < 1e-12);
    }

    #[test]
    fn sum_lift_null_space() {
        let c = direct_sum(&sat(), &sat());
        let p = build_projector(&c.left.clauses[0], Variant::Slct).unwrap();
        let lifted = c.lift(Side::Left, &p).to_dense();
        let (e, h) = projector_defects(&lifted);
        assert!(e < 1e-9 && h < 1e-12);
        let zeros = eigvalsh(&lifted).iter().filter(|&&v| v < 1e-9).count();
        // ker P on D₁⊗D₁ plus all of D₂⊗D₂.
        let ker = eigvalsh(&p.to_dense()).iter().filter(|&&v| v < 1e-9).count();
        assert_eq!(zeros, ker + 36);
    }

    #[test]
    fn laws_on_tiny_instances() {
        let cfg = OracleConfig::default();
        let ff = |c: &ComboInstance| c.nullspace_dim(&cfg).unwrap() > 0;
        assert!(ff(&direct_product(&sat(), &sat())));
        assert!(!ff(&direct_product(&sat(), &unsat())));
        assert!(ff(&direct_sum(&unsat(), &sat())));
        assert!(!ff(&direct_sum(&unsat(), &unsat())));
        assert!(ff(&direct_sum(&Instance::empty(Variant::Slct, 0), &Instance::empty(Variant::Slct, 0))));
    }

    #[test]
    fn reduced_null_space_matches_full_lift() {
        let cfg = OracleConfig::default();
        let a = Instance::new(Variant::Slct, 3, vec![Clause::init(0, 1), Clause::out(2, 1)]).unwrap();
        let b = Instance::new(Variant::Slct, 2, vec![Clause::out(0, 1)]).unwrap();
        for c in [direct_product(&a, &b), direct_sum(&a, &b), direct_sum(&b, &a)] {
            let full = nullspace_dim(&c.to_hamiltonian().unwrap(), &cfg).unwrap().0;
            assert_eq!(c.nullspace_dim(&cfg).unwrap(), full, "{:?}", c.op);
        }
        let (na, nb) = (
            nullspace_dim(&LocalHamiltonian::from_instance(&a).unwrap(), &cfg).unwrap().0,
            nullspace_dim(&LocalHamiltonian::from_instance(&direct_product(&a, &b).right).unwrap(), &cfg).unwrap().0,
        );
        assert_eq!(direct_product(&a, &b).nullspace_dim(&cfg).unwrap(), na * nb);
    }

    #[test]
    fn projection() {
        let c = direct_product(&sat(), &unsat());
        assert_eq!(project(&c, Side::Left).unwrap().clauses, sat().clauses);
        assert_eq!(project(&c, Side::Right).unwrap(), unsat());
        assert_eq!(project(&direct_sum(&sat(), &sat()), Side::Left), Err(Error::NotAProduct));
    }

    #[test]
    fn combo_decisions() {
        assert!(!decide_combo(&direct_product(&sat(), &unsat()), None, None, 4, 0).unwrap().accept);
        assert!(decide_combo(&direct_sum(&sat(), &unsat()), None, None, 4, 0).unwrap().accept);
        let json = direct_sum(&sat(), &unsat()).to_json();
        assert_eq!(parse_combo(&json).unwrap(), direct_sum(&sat(), &unsat()));
    }
}
