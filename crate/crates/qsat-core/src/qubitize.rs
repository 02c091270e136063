//! Qudit-to-qubit reduction and its inverse.
//!
//! A `d`-qudit becomes `n` four-qubit groups. Each group encodes a data bit
//! and an entanglement bit in the span of four fixed states `ψ₁..ψ₄`
//! (index `2·data + ent`). Data bits are big-endian across the groups.
//! Gadget clauses bind the qubits of a block together: `h4to2` pins each
//! group to the code space, `t1` forbids data values `>= d` and `t2` fixes
//! the entanglement bits to a rotated GHZ state.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::clauses::{build_projector, op_from_fn, LocalProjector};
use crate::error::{Error, Result};
use crate::linalg::{self, eigvalsh, identity, Mat, Vector, C64, ONE, ZERO};
use crate::model::{Clause, Instance, Variant};

/// Largest number of qubits a single gadget clause may be materialized on.
pub const MAX_GADGET_QUBITS: usize = 12;

/// How many four-qubit groups encode one qudit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// `⌈log₂ d⌉` groups.
    #[default]
    Minimal,
    /// `⌈log₂ d⌉` rounded up to a power of two.
    PowerOfTwo,
}

fn ceil_log2(x: usize) -> usize {
    let mut n = 0;
    while (1usize << n) < x {
        n += 1;
    }
    n
}

/// Number of data bits (= four-qubit groups) used per qudit.
pub fn data_bits(d: usize, padding: Padding) -> usize {
    let n = ceil_log2(d).max(1);
    match padding {
        Padding::Minimal => n,
        Padding::PowerOfTwo => 1 << ceil_log2(n),
    }
}

/// Qubits per qudit block.
pub fn expansion_factor(d: usize, padding: Padding) -> usize {
    4 * data_bits(d, padding)
}

/// The four code states on four qubits, as exact rationals.
pub fn code_states() -> [Vector; 4] {
    let table: [&[(usize, f64)]; 4] = [
        &[(0b0000, 3.0 / 5.0), (0b0001, -4.0 / 5.0), (0b0100, 1.0), (0b1010, 1.0), (0b1100, 8.0 / 17.0), (0b1111, 15.0 / 17.0)],
        &[(0b0000, 4.0 / 5.0), (0b0001, 3.0 / 5.0), (0b0110, -1.0), (0b1001, 1.0), (0b1101, 20.0 / 29.0), (0b1110, 21.0 / 29.0)],
        &[(0b0010, 5.0 / 13.0), (0b0011, 12.0 / 13.0), (0b0111, -1.0), (0b1000, 1.0), (0b1101, -21.0 / 29.0), (0b1110, 20.0 / 29.0)],
        &[(0b0010, -12.0 / 13.0), (0b0011, 5.0 / 13.0), (0b0101, -1.0), (0b1011, 1.0), (0b1100, -15.0 / 17.0), (0b1111, 8.0 / 17.0)],
    ];
    table.map(|entries| {
        let mut v = Vector::zeros(16);
        for &(i, a) in entries {
            v[i] = C64::new(a / 2.0, 0.0);
        }
        v
    })
}

/// The 16×4 isometry whose columns are the code states.
pub fn code_isometry() -> Mat {
    let psi = code_states();
    Mat::from_fn(16, 4, |r, c| psi[c][r])
}

/// `1 − Σ|ψᵢ⟩⟨ψᵢ|` on four qubits.
pub fn h4to2() -> Mat {
    let v = code_isometry();
    identity(16) - &v * v.adjoint()
}

fn rx(phi: f64) -> Mat {
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    Mat::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)])
}

/// `[1 ⊗ R_X(θ) ⊗ … ⊗ R_X((n−1)θ)] (|0ⁿ⟩ + |1ⁿ⟩)/√2` with `θ = π/(2n)`.
pub fn t2_nullstate(n: usize) -> Vector {
    assert!(n >= 1, "t2 needs at least one qubit");
    let dim = 1usize << n;
    let mut ghz = Vector::zeros(dim);
    ghz[0] = linalg::re(std::f64::consts::FRAC_1_SQRT_2);
    ghz[dim - 1] += linalg::re(std::f64::consts::FRAC_1_SQRT_2);
    let theta = PI / (2.0 * n as f64);
    let rot: Vec<Mat> = (0..n).map(|k| rx(k as f64 * theta)).collect();
    linalg::kron_all(&rot) * ghz
}

/// `1 − |v⟩⟨v|` with `v` the [`t2_nullstate`].
pub fn t2(n: usize) -> Mat {
    let v = t2_nullstate(n);
    identity(1 << n) - linalg::outer(&v, &v)
}

/// `1 − Σ_{s<d} |s⟩⟨s|` on `n` data bits.
pub fn t1(d: usize, n: usize) -> Mat {
    let dim = 1usize << n;
    Mat::from_fn(dim, dim, |r, c| if r == c && r >= d { ONE } else { ZERO })
}

/// Encodes an operator on `m` data bits and `m` entanglement bits (given as
/// separate data and entanglement factors) into the qubit code space of `m`
/// four-qubit groups: `V (A_data ⊗ A_ent) V†` with `V = Ψ^{⊗m}`.
pub fn encode(data_op: &Mat, ent_op: &Mat, m: usize) -> Mat {
    let interleaved = op_from_fn(&vec![2; 2 * m], |r, c| {
        let bits = |x: &[usize], off: usize| (0..m).fold(0usize, |acc, j| acc * 2 + x[2 * j + off]);
        data_op[(bits(r, 0), bits(c, 0))] * ent_op[(bits(r, 1), bits(c, 1))]
    });
    let psi = code_isometry();
    let v = (1..m).fold(psi.clone(), |acc, _| linalg::kron(&acc, &psi));
    &v * interleaved * v.adjoint()
}

/// The projector of a qubit clause on its own qubits.
pub fn gadget_projector(c: &Clause) -> Result<LocalProjector> {
    let qubits = c.sites();
    if qubits.len() > MAX_GADGET_QUBITS {
        return Err(Error::DimensionBudgetExceeded {
            dimension: 1u128 << qubits.len().min(127),
            budget: 1 << MAX_GADGET_QUBITS,
        });
    }
    let matrix = match c {
        Clause::H4to2 { .. } => h4to2(),
        Clause::T1 { dim, block } => {
            let n = block.len() / 4;
            encode(&t1(*dim, n), &identity(1 << n), n)
        }
        Clause::T2 { block } => {
            let n = block.len() / 4;
            encode(&identity(1 << n), &t2(n), n)
        }
        Clause::Lifted { origin, clause, blocks } => {
            let d = origin.local_dim();
            let k = blocks.len();
            let n = blocks[0].len() / 4;
            if blocks.iter().any(|b| b.len() != 4 * n) || (1usize << n) < d {
                return Err(Error::InvalidClause {
                    clause: 0,
                    reason: "lifted blocks are too short for the qudit dimension".into(),
                });
            }
            let p = build_projector(clause, *origin)?.to_dense();
            // Pad the d^k projector to 2^(nk) data states with zeros.
            let to_data = |x: usize| -> Option<usize> {
                let mut digits = vec![0; k];
                let mut y = x;
                for j in (0..k).rev() {
                    digits[j] = y % (1 << n);
                    y >>= n;
                }
                digits.iter().try_fold(0, |acc, &s| (s < d).then_some(acc * d + s))
            };
            let dim = 1usize << (n * k);
            let data_op = Mat::from_fn(dim, dim, |r, col| match (to_data(r), to_data(col)) {
                (Some(a), Some(b)) => p[(a, b)],
                _ => ZERO,
            });
            encode(&data_op, &identity(dim), n * k)
        }
        _ => {
            return Err(Error::InvalidClause { clause: 0, reason: "not a qubit clause".into() })
        }
    };
    Ok(LocalProjector { sites: qubits, local_dim: 2, active: vec![vec![0, 1]; c.sites().len()], core: Arc::new(matrix) })
}

/// The reduction `f`: lifts every clause onto qubit blocks and adds the
/// binding gadgets once per touched qudit.
pub fn qubitize_instance(inst: &Instance, padding: Padding) -> Result<Instance> {
    if inst.variant == Variant::Qubit {
        return Err(Error::InvalidCircuit("instance is already on qubits".into()));
    }
    let d = inst.local_dim();
    let n = data_bits(d, padding);
    let x = 4 * n;
    let block = |q: usize| (x * q..x * q + x).collect::<Vec<_>>();
    let mut seen = vec![false; inst.num_qudits];
    let mut clauses = Vec::new();
    for c in &inst.clauses {
        let sites = c.sites();
        clauses.push(Clause::Lifted {
            origin: inst.variant,
            clause: Box::new(c.clone()),
            blocks: sites.iter().map(|&q| block(q)).collect(),
        });
        for q in sites {
            if std::mem::replace(&mut seen[q], true) {
                continue;
            }
            clauses.push(Clause::T1 { dim: d, block: block(q) });
            clauses.push(Clause::T2 { block: block(q) });
            for g in 0..n {
                clauses.push(Clause::H4to2 { block: block(q), group: g });
            }
        }
    }
    Instance::new(Variant::Qubit, x * inst.num_qudits, clauses)
}

/// Qubit block of each qudit recovered from a consistent qubit instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QubitGrouping {
    pub origin: Option<Variant>,
    /// Block per qudit id (the block's first qubit).
    pub blocks: BTreeMap<usize, Vec<usize>>,
}

/// Why a qubit instance cannot be mapped back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Inconsistency {
    pub clauses: Vec<usize>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Consistency {
    Consistent(QubitGrouping),
    Inconsistent(Inconsistency),
}

fn clause_blocks(c: &Clause) -> Vec<&Vec<usize>> {
    match c {
        Clause::Lifted { blocks, .. } => blocks.iter().collect(),
        Clause::T1 { block, .. } | Clause::T2 { block } | Clause::H4to2 { block, .. } => vec![block],
        _ => Vec::new(),
    }
}

/// Checks that every two blocks are either identical or disjoint, that all
/// blocks have the length required by a single origin variant and that the
/// gadgets agree with it.
pub fn check_consistency(inst: &Instance) -> Consistency {
    let fail = |clauses: Vec<usize>, reason: &str| {
        Consistency::Inconsistent(Inconsistency { clauses, reason: reason.to_string() })
    };
    if inst.variant != Variant::Qubit {
        return fail(Vec::new(), "not a qubit instance");
    }
    let mut origin: Option<(Variant, usize)> = None;
    for (i, c) in inst.clauses.iter().enumerate() {
        if let Clause::Lifted { origin: o, .. } = c {
            match origin {
                None => origin = Some((*o, i)),
                Some((prev, j)) if prev != *o => return fail(vec![j, i], "mixed origin variants"),
                _ => {}
            }
        }
    }
    let block_len = clause_blocks_len(inst);
    let mut owner: HashMap<usize, (usize, usize, usize)> = HashMap::new();
    let mut blocks = BTreeMap::new();
    for (i, c) in inst.clauses.iter().enumerate() {
        for b in clause_blocks(c) {
            if let Some(len) = block_len {
                if b.len() != len {
                    return fail(vec![i], "block length differs from the other blocks");
                }
            }
            for (pos, &q) in b.iter().enumerate() {
                match owner.get(&q) {
                    None => {
                        owner.insert(q, (b[0], pos, i));
                    }
                    Some(&(first, p, j)) => {
                        if p != pos || first != b[0] || blocks.get(&first) != Some(b) {
                            return fail(vec![j, i], &format!("qubit {q} is used inconsistently"));
                        }
                    }
                }
            }
            blocks.entry(b[0]).or_insert_with(|| b.clone());
        }
        if let Some((o, _)) = origin {
            let d = o.local_dim();
            match c {
                Clause::T1 { dim, .. } if *dim != d => {
                    return fail(vec![i], "t1 dimension differs from the origin variant")
                }
                Clause::Lifted { blocks, .. } if (1usize << (blocks[0].len() / 4)) < d => {
                    return fail(vec![i], "blocks too short for the origin variant")
                }
                _ => {}
            }
        }
    }
    Consistency::Consistent(QubitGrouping { origin: origin.map(|(o, _)| o), blocks })
}

fn clause_blocks_len(inst: &Instance) -> Option<usize> {
    inst.clauses.iter().flat_map(clause_blocks).map(Vec::len).next()
}

/// A fixed unsatisfiable instance: qudit 0 is both logical and clock.
pub fn canonical_unsat(variant: Variant) -> Instance {
    let variant = if variant == Variant::Qubit { Variant::Slct } else { variant };
    let (e0, e1, n) = if variant == Variant::Lct { (Some(2), Some(2), 3) } else { (None, None, 2) };
    Instance {
        variant,
        num_qudits: n,
        clauses: vec![
            Clause::Init { logical: 0, clock: 1, endpoint: e0 },
            Clause::Init { logical: 1, clock: 0, endpoint: e1 },
        ],
    }
}

/// The reduction `g`: maps each block to the qudit numbered by its first
/// qubit and drops the gadgets, or returns [`canonical_unsat`] when the
/// blocks are used inconsistently.
pub fn dequbitize(inst: &Instance) -> Instance {
    match check_consistency(inst) {
        Consistency::Inconsistent(_) => {
            let origin = inst.clauses.iter().find_map(|c| match c {
                Clause::Lifted { origin, .. } => Some(*origin),
                _ => None,
            });
            canonical_unsat(origin.unwrap_or(Variant::Slct))
        }
        Consistency::Consistent(grouping) => {
            let variant = grouping.origin.unwrap_or(Variant::Slct);
            let clauses = inst
                .clauses
                .iter()
                .filter_map(|c| match c {
                    Clause::Lifted { clause, blocks, .. } => {
                        let sites = clause.sites();
                        let map: HashMap<usize, usize> =
                            sites.iter().zip(blocks).map(|(&s, b)| (s, b[0])).collect();
                        Some(clause.relabel(&|q| map[&q]))
                    }
                    _ => None,
                })
                .collect();
            Instance { variant, num_qudits: inst.num_qudits, clauses }
        }
    }
}

/// Minimum eigenvalue of `H₄→₂` on qubits 0..3 plus a second copy placed on
/// every ordered choice of four of seven qubits. Returns `(placement, λ_min)`
/// for all 840 placements.
pub fn h4to2_pair_scan() -> Vec<([usize; 4], f64)> {
    let mut placements = Vec::with_capacity(840);
    for a in 0..7 {
        for b in 0..7 {
            for c in 0..7 {
                for d in 0..7 {
                    let p = [a, b, c, d];
                    let mut s = p.to_vec();
                    s.sort_unstable();
                    s.dedup();
                    if s.len() == 4 {
                        placements.push(p);
                    }
                }
            }
        }
    }
    let h = Arc::new(h4to2());
    let first = place(&h, &[0, 1, 2, 3], 7);
    placements
        .into_par_iter()
        .map(|p| {
            let total = &first + place(&h, &p, 7);
            (p, eigvalsh(&total)[0])
        })
        .collect()
}

/// Embeds an operator on `sites.len()` qubits into `n` qubits.
pub fn place(op: &Mat, sites: &[usize], n: usize) -> Mat {
    let mut m = identity(1 << n);
    let emb = linalg::Embedding::new(&vec![2; n], sites, &vec![vec![0, 1]; sites.len()]);
    // Build column by column: x = I, then replace blocks by op · block.
    emb.apply_in_place(op, &mut m);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_amplitude_is_three_tenths() {
        assert!((code_states()[0][0] - C64::new(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expansion_factors() {
        assert_eq!(expansion_factor(6, Padding::Minimal), 12);
        assert_eq!(expansion_factor(6, Padding::PowerOfTwo), 16);
        assert_eq!(expansion_factor(8, Padding::Minimal), 12);
        assert_eq!(expansion_factor(17, Padding::Minimal), 20);
        assert_eq!(expansion_factor(17, Padding::PowerOfTwo), 32);
        assert_eq!(expansion_factor(2, Padding::Minimal), 4);
    }

    #[test]
    fn t1_kernel_is_first_states() {
        let m = t1(3, 2);
        let k = linalg::kernel(&m, 1e-9);
        assert_eq!(k.ncols(), 3);
        assert_eq!(m[(3, 3)], ONE);
    }

    #[test]
    fn encoded_identity_is_code_projector() {
        let e = encode(&identity(2), &identity(2), 1);
        let v = code_isometry();
        assert!(linalg::max_abs(&(e - &v * v.adjoint())) < 1e-12);
    }
}
