//! Gate matrices, local bases and clause operators.
//!
//! Every qudit clause operator is a sum of diagonal role penalties plus a
//! term supported on the product of the sites' role subspaces. Operators are
//! therefore stored as a dense *core* on that product, which keeps even the
//! 17-dimensional four-site clauses small. [`ClauseOperator::to_dense`] and
//! [`LocalProjector::to_dense`] materialize the full matrices when needed.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{self, identity, kernel, Mat, Vector, C64, ONE, ZERO};
use crate::model::{Clause, Gate, Role, Variant};

/// Eigenvalue cutoff used to extract clause null spaces.
pub const KERNEL_CUTOFF: f64 = 1e-9;

/// Index of `|?⟩` among the logical states.
pub const QMARK: usize = 2;
/// Clock phases in the `(r, a, d)` factor.
pub const READY: usize = 0;
pub const ACTIVE: usize = 1;
pub const DEAD: usize = 2;

/// Index conventions of a variant's local qudit space.
///
/// * SLCT (6): `0,1,? | r,a,d`.
/// * WitnessedSLCT and ClassicalSLCT (8): `0,1,? | w0,w1 | r,a,d`.
/// * LCT (17): `0,1,? | e0,e1 | (r,a,d)⊗CA⊗CB`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalBasis {
    pub variant: Variant,
}

impl LocalBasis {
    pub fn new(variant: Variant) -> Self {
        LocalBasis { variant }
    }

    pub fn dim(&self) -> usize {
        self.variant.local_dim()
    }

    fn clock_offset(&self) -> usize {
        match self.variant {
            Variant::Slct => 3,
            _ => 5,
        }
    }

    /// Whether clock qudits carry the two extra Bell-pair qubits.
    pub fn has_clock_aux(&self) -> bool {
        self.variant == Variant::Lct
    }

    /// Number of states in the clock role subspace.
    pub fn clock_dim(&self) -> usize {
        if self.has_clock_aux() {
            12
        } else {
            3
        }
    }

    /// Local index of a clock state; `ca`/`cb` are ignored outside LCT.
    pub fn clock(&self, phase: usize, ca: usize, cb: usize) -> usize {
        if self.has_clock_aux() {
            self.clock_offset() + phase * 4 + ca * 2 + cb
        } else {
            self.clock_offset() + phase
        }
    }

    /// Local indices spanning the subspace of `role`, in core order.
    pub fn role_states(&self, role: Role) -> Vec<usize> {
        match role {
            Role::Logical => vec![0, 1, 2],
            Role::Clock => (0..self.clock_dim()).map(|i| self.clock_offset() + i).collect(),
            Role::Endpoint | Role::Witness | Role::Aux => vec![3, 4],
            Role::Unused => (0..self.dim()).collect(),
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unitary of a gate, on `2^arity` dimensions, qubit 0 most significant.
pub fn gate_matrix(g: Gate) -> Mat {
    let s = FRAC_1_SQRT_2;
    let h = Mat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
    let x = Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    match g {
        Gate::H => h,
        Gate::HT => {
            let t = Mat::from_diagonal(&Vector::from_vec(vec![ONE, C64::from_polar(1.0, PI / 4.0)]));
            h * t
        }
        Gate::HHCNOT => {
            let mut cnot = Mat::zeros(4, 4);
            for (r, col) in [(0, 0), (1, 1), (3, 2), (2, 3)] {
                cnot[(r, col)] = ONE;
            }
            linalg::kron(&h, &h) * cnot
        }
        Gate::X => x,
        Gate::XXXTOFFOLI => {
            let mut toff = Mat::zeros(8, 8);
            for i in 0..8 {
                let j = if i >= 6 { i ^ 1 } else { i };
                toff[(j, i)] = ONE;
            }
            linalg::kron_all(&[x.clone(), x.clone(), x]) * toff
        }
    }
}

/// Action of a classical gate on a bit tuple (as a permutation).
pub fn classical_gate(g: Gate, bits: &[bool]) -> Vec<bool> {
    match g {
        Gate::X => vec![!bits[0]],
        Gate::XXXTOFFOLI => vec![!bits[0], !bits[1], !(bits[2] ^ (bits[0] && bits[1]))],
        _ => panic!("{g} is not a classical gate"),
    }
}

/// Builds an operator on a product space from an entry function of the
/// per-factor row and column indices.
pub(crate) fn op_from_fn(dims: &[usize], f: impl Fn(&[usize], &[usize]) -> C64) -> Mat {
    let n: usize = dims.iter().product();
    let unflat = |mut i: usize| {
        let mut v = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            v[k] = i % dims[k];
            i /= dims[k];
        }
        v
    };
    let idx: Vec<Vec<usize>> = (0..n).map(unflat).collect();
    Mat::from_fn(n, n, |r, col| f(&idx[r], &idx[col]))
}

/// Shape of a clause, which alone determines its core operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Shape {
    Init,
    InitCopy,
    InitPair,
    Prop(Gate),
    Out,
}

fn shape_of(clause: &Clause) -> Option<Shape> {
    Some(match clause {
        Clause::Init { .. } => Shape::Init,
        Clause::InitCopy { .. } => Shape::InitCopy,
        Clause::InitPair { .. } => Shape::InitPair,
        Clause::Prop { gate, .. } => Shape::Prop(*gate),
        Clause::Out { .. } => Shape::Out,
        _ => return None,
    })
}

/// Core data shared by every clause of one shape.
#[derive(Debug)]
pub struct ClauseCore {
    /// Local states of each site's role subspace.
    pub role_states: Vec<Vec<usize>>,
    /// The semidefinite operator restricted to the role subspaces.
    pub semidefinite: Arc<Mat>,
    /// The projector onto the complement of its kernel, same restriction.
    pub projector: Arc<Mat>,
    /// Orthonormal kernel basis (columns) in core coordinates.
    pub kernel: Arc<Mat>,
}

fn roles_for(shape: Shape, variant: Variant) -> Vec<Role> {
    use Role::*;
    let lct = variant == Variant::Lct;
    match shape {
        Shape::Init | Shape::Out if lct => vec![Logical, Clock, Endpoint],
        Shape::Init | Shape::Out => vec![Logical, Clock],
        Shape::InitCopy => vec![Logical, Witness, Clock],
        Shape::InitPair => vec![Logical, Aux, Clock],
        Shape::Prop(g) => {
            let mut v = vec![Logical; g.arity()];
            v.extend([Clock, Clock]);
            v
        }
    }
}

/// Clock-state helpers on core indices of a clock factor.
struct ClockIdx {
    aux: bool,
}

impl ClockIdx {
    fn phase(&self, i: usize) -> usize {
        if self.aux {
            i / 4
        } else {
            i
        }
    }
    fn ca(&self, i: usize) -> usize {
        (i / 2) % 2
    }
    fn cb(&self, i: usize) -> usize {
        i % 2
    }
    /// Entry of `|p⟩⟨p'| ⊗ I_aux` between core indices.
    fn ket_bra(&self, r: usize, col: usize, p: usize, pp: usize) -> bool {
        let same_aux = !self.aux || r % 4 == col % 4;
        same_aux && self.phase(r) == p && self.phase(col) == pp
    }
}

/// Entry of `I − |Φ⁺⟩⟨Φ⁺|` on a qubit pair.
fn bell_penalty(a: usize, b: usize, ap: usize, bp: usize) -> C64 {
    let id = if a == ap && b == bp { 1.0 } else { 0.0 };
    let phi = if a == b && ap == bp { 0.5 } else { 0.0 };
    C64::new(id - phi, 0.0)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn build_core_semidefinite(shape: Shape, variant: Variant) -> (Vec<Vec<usize>>, Mat) {
    let basis = LocalBasis::new(variant);
    let roles = roles_for(shape, variant);
    let role_states: Vec<Vec<usize>> = roles.iter().map(|&r| basis.role_states(r)).collect();
    let dims: Vec<usize> = role_states.iter().map(Vec::len).collect();
    let ck = ClockIdx { aux: basis.has_clock_aux() };
    let lct = variant == Variant::Lct;
    let diag = |r: &[usize], col: &[usize]| r == col;

    let core = match shape {
        Shape::Init | Shape::Out => {
            let init = shape == Shape::Init;
            op_from_fn(&dims, |r, col| {
                let (l, cl) = (r[0], r[1]);
                let mut v = ZERO;
                if diag(r, col) {
                    let phase = ck.phase(cl);
                    if init {
                        if phase == READY {
                            v += ONE;
                        }
                        if l != 0 && phase == ACTIVE {
                            v += ONE;
                        }
                    } else {
                        if phase == DEAD {
                            v += ONE;
                        }
                        if l == 0 && phase == ACTIVE {
                            v += ONE;
                        }
                    }
                }
                if lct && r[0] == col[0] && ck.phase(r[1]) == ck.phase(col[1]) {
                    // Bell pair between the clock's CA (init) or CB (out) and the endpoint.
                    let (a, ap, other, otherp) = if init {
                        (ck.ca(r[1]), ck.ca(col[1]), ck.cb(r[1]), ck.cb(col[1]))
                    } else {
                        (ck.cb(r[1]), ck.cb(col[1]), ck.ca(r[1]), ck.ca(col[1]))
                    };
                    if other == otherp {
                        v += bell_penalty(a, r[2], ap, col[2]);
                    }
                }
                v
            })
        }
        Shape::InitCopy | Shape::InitPair => op_from_fn(&dims, |r, col| {
            let (l, w, cl) = (r[0], r[1], r[2]);
            let mut v = ZERO;
            if diag(r, col) {
                if ck.phase(cl) == READY {
                    v += ONE;
                }
                if l == QMARK && ck.phase(cl) == ACTIVE {
                    v += ONE;
                }
            }
            if r[2] == col[2] && ck.phase(cl) == ACTIVE {
                let (lp, wp) = (col[0], col[1]);
                v += match shape {
                    Shape::InitCopy => {
                        // I − |00⟩⟨00| − |11⟩⟨11| on the logical and witness.
                        let keep = l == w && l < 2;
                        C64::new(delta(l, lp) * delta(w, wp) * if keep { 0.0 } else { 1.0 }, 0.0)
                    }
                    _ => {
                        // I − |Φ⁺⟩⟨Φ⁺| with Φ⁺ on the logical {0,1} and aux bits.
                        let id = delta(l, lp) * delta(w, wp);
                        let phi = if l == w && lp == wp && l < 2 && lp < 2 { 0.5 } else { 0.0 };
                        C64::new(id - phi, 0.0)
                    }
                };
            }
            v
        }),
        Shape::Prop(gate) => {
            let m = gate.arity();
            let u = gate_matrix(gate);
            let defined = |x: &[usize]| x.iter().all(|&s| s < 2);
            let bits = |x: &[usize]| x.iter().fold(0usize, |acc, &s| acc * 2 + s);
            op_from_fn(&dims, |r, col| {
                let (lr, lc) = (&r[..m], &col[..m]);
                let (pr, sr, pc, sc) = (r[m], r[m + 1], col[m], col[m + 1]);
                let mut v = ZERO;
                let same_logicals = lr == lc;
                let same_clocks = pr == pc && sr == sc;
                if same_logicals && same_clocks {
                    let (p, s) = (ck.phase(pr), ck.phase(sr));
                    if defined(lr) {
                        // Π_clock,D.
                        if (p == READY || p == ACTIVE) && s != READY {
                            v += ONE;
                        }
                        if p == DEAD && s == READY {
                            v += ONE;
                        }
                    } else {
                        // Π_clock,?.
                        if (p == READY || p == ACTIVE) && s != READY {
                            v += ONE;
                        }
                        if p == DEAD {
                            v += ONE;
                        }
                    }
                }
                if defined(lr) && defined(lc) {
                    // Π_work,U restricted to defined logicals.
                    let ar = |a: usize, b: usize| ck.ket_bra(pr, pc, a, b);
                    let cl = |a: usize, b: usize| ck.ket_bra(sr, sc, a, b);
                    if same_logicals && ar(ACTIVE, ACTIVE) && cl(READY, READY) {
                        v += C64::new(0.5, 0.0);
                    }
                    if same_logicals && ar(DEAD, DEAD) && cl(ACTIVE, ACTIVE) {
                        v += C64::new(0.5, 0.0);
                    }
                    if ar(DEAD, ACTIVE) && cl(ACTIVE, READY) {
                        v -= 0.5 * u[(bits(lr), bits(lc))];
                    }
                    if ar(ACTIVE, DEAD) && cl(READY, ACTIVE) {
                        v -= 0.5 * u[(bits(lc), bits(lr))].conj();
                    }
                }
                if lct && same_logicals && ck.phase(pr) == ck.phase(pc) && ck.phase(sr) == ck.phase(sc)
                    && ck.ca(pr) == ck.ca(pc) && ck.cb(sr) == ck.cb(sc)
                {
                    // Bell pair between CB of the predecessor and CA of the successor.
                    v += bell_penalty(ck.cb(pr), ck.ca(sr), ck.cb(pc), ck.ca(sc));
                }
                v
            })
        }
    };
    (role_states, core)
}

type CoreKey = (Variant, Shape);

fn core_cache() -> &'static Mutex<HashMap<CoreKey, Arc<ClauseCore>>> {
    static CACHE: OnceLock<Mutex<HashMap<CoreKey, Arc<ClauseCore>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn clause_core(shape: Shape, variant: Variant) -> Arc<ClauseCore> {
    let key = (variant, shape);
    if let Some(core) = core_cache().lock().unwrap().get(&key) {
        return core.clone();
    }
    let (role_states, o) = build_core_semidefinite(shape, variant);
    let k = kernel(&o, KERNEL_CUTOFF);
    let p = identity(o.nrows()) - &k * k.adjoint();
    let core = Arc::new(ClauseCore {
        role_states,
        semidefinite: Arc::new(o),
        projector: Arc::new(p),
        kernel: Arc::new(k),
    });
    core_cache().lock().unwrap().entry(key).or_insert(core).clone()
}

/// The semidefinite clause operator: role penalties on every site plus a
/// core term on the product of the role subspaces.
#[derive(Clone, Debug)]
pub struct ClauseOperator {
    pub sites: Vec<usize>,
    pub local_dim: usize,
    pub role_states: Vec<Vec<usize>>,
    pub core: Arc<Mat>,
}

impl ClauseOperator {
    /// Dense matrix on `local_dim^k` dimensions.
    pub fn to_dense(&self) -> Mat {
        let d = self.local_dim;
        let k = self.sites.len();
        let dims = vec![d; k];
        let pos: Vec<Vec<Option<usize>>> = self
            .role_states
            .iter()
            .map(|rs| (0..d).map(|s| rs.iter().position(|&x| x == s)).collect())
            .collect();
        let strides = linalg::strides(&self.role_states.iter().map(Vec::len).collect::<Vec<_>>());
        let core_index = |x: &[usize]| -> Option<usize> {
            x.iter().enumerate().try_fold(0, |acc, (j, &s)| pos[j][s].map(|p| acc + p * strides[j]))
        };
        op_from_fn(&dims, |r, col| match (core_index(r), core_index(col)) {
            (Some(a), Some(b)) => self.core[(a, b)],
            _ if r == col => {
                let outside = (0..k).filter(|&j| pos[j][r[j]].is_none()).count();
                C64::new(outside as f64, 0.0)
            }
            _ => ZERO,
        })
    }
}

/// An orthogonal projector that is the identity except on the product of the
/// `active` local states of its sites, where it equals `core`.
#[derive(Clone, Debug)]
pub struct LocalProjector {
    pub sites: Vec<usize>,
    pub local_dim: usize,
    pub active: Vec<Vec<usize>>,
    pub core: Arc<Mat>,
}

impl LocalProjector {
    /// A projector given densely on all `local_dim^k` states.
    pub fn dense(sites: Vec<usize>, local_dim: usize, matrix: Mat) -> Self {
        let active = vec![(0..local_dim).collect(); sites.len()];
        LocalProjector { sites, local_dim, active, core: Arc::new(matrix) }
    }

    pub fn core_dim(&self) -> usize {
        self.core.nrows()
    }

    /// Dense matrix on `local_dim^k` dimensions.
    pub fn to_dense(&self) -> Mat {
        let k = self.sites.len();
        let n = self.local_dim.pow(k as u32);
        let mut m = identity(n);
        let emb = linalg::Embedding::new(&vec![self.local_dim; k], &(0..k).collect::<Vec<_>>(), &self.active);
        for (i, &ri) in emb.rel.iter().enumerate() {
            for (j, &rj) in emb.rel.iter().enumerate() {
                m[(ri, rj)] = self.core[(i, j)];
            }
        }
        m
    }
}

/// Null space of a clause: orthonormal columns in core coordinates, embedded
/// through the clause's active local states.
#[derive(Clone, Debug)]
pub struct ClauseKernel {
    pub sites: Vec<usize>,
    pub local_dim: usize,
    pub active: Vec<Vec<usize>>,
    pub basis: Arc<Mat>,
}

impl ClauseKernel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Core coordinates of a product of local states, if all are active.
    pub fn core_index(&self, local: &[usize]) -> Option<usize> {
        let mut idx = 0;
        for (j, &s) in local.iter().enumerate() {
            let p = self.active[j].iter().position(|&x| x == s)?;
            idx = idx * self.active[j].len() + p;
        }
        Some(idx)
    }

    /// Full `local_dim^k` vector of the i-th basis element.
    pub fn embedded(&self, i: usize) -> Vector {
        let k = self.sites.len();
        let emb = linalg::Embedding::new(&vec![self.local_dim; k], &(0..k).collect::<Vec<_>>(), &self.active);
        let mut v = Vector::zeros(self.local_dim.pow(k as u32));
        for (j, &r) in emb.rel.iter().enumerate() {
            v[r] = self.basis[(j, i)];
        }
        v
    }

    /// Orthogonal projector onto the kernel, in core coordinates.
    pub fn core_projector(&self) -> Mat {
        &*self.basis * self.basis.adjoint()
    }
}

fn check_variant(c: &Clause, v: Variant) -> Result<()> {
    c.validate(v, usize::MAX, 0).map_err(|_| Error::DimensionMismatch {
        expected: v.local_dim(),
        found: c.sites().len(),
    })
}

/// The semidefinite operator of a clause on its own sites.
pub fn build_semidefinite(c: &Clause, v: Variant) -> Result<ClauseOperator> {
    if v == Variant::Qubit {
        let p = crate::qubitize::gadget_projector(c)?;
        return Ok(ClauseOperator {
            sites: p.sites,
            local_dim: 2,
            role_states: p.active,
            core: p.core,
        });
    }
    check_variant(c, v)?;
    let shape = shape_of(c).expect("qudit clause");
    let core = clause_core(shape, v);
    Ok(ClauseOperator {
        sites: c.sites(),
        local_dim: v.local_dim(),
        role_states: core.role_states.clone(),
        core: core.semidefinite.clone(),
    })
}

/// The projector onto the complement of the clause's null space.
pub fn build_projector(c: &Clause, v: Variant) -> Result<LocalProjector> {
    if v == Variant::Qubit {
        return crate::qubitize::gadget_projector(c);
    }
    check_variant(c, v)?;
    let core = clause_core(shape_of(c).expect("qudit clause"), v);
    Ok(LocalProjector {
        sites: c.sites(),
        local_dim: v.local_dim(),
        active: core.role_states.clone(),
        core: core.projector.clone(),
    })
}

/// Orthonormal basis of the clause's null space.
pub fn clause_nullspace(c: &Clause, v: Variant) -> Result<ClauseKernel> {
    if v == Variant::Qubit {
        let p = crate::qubitize::gadget_projector(c)?;
        let k = kernel(&p.core, KERNEL_CUTOFF);
        return Ok(ClauseKernel { sites: p.sites, local_dim: 2, active: p.active, basis: Arc::new(k) });
    }
    check_variant(c, v)?;
    let core = clause_core(shape_of(c).expect("qudit clause"), v);
    Ok(ClauseKernel {
        sites: c.sites(),
        local_dim: v.local_dim(),
        active: core.role_states.clone(),
        basis: core.kernel.clone(),
    })
}

/// The building-block projectors of the clause operators, at the level of
/// role subspaces: clock phases are 3-dimensional, logicals 3-dimensional
/// and work projectors act on `2^m` defined logical states.
pub fn reference_projectors(v: Variant) -> Vec<(String, Mat)> {
    use crate::linalg::{basis_proj, diag_proj, kron};
    let mut out = vec![
        ("start".to_string(), basis_proj(3, READY)),
        ("stop".to_string(), basis_proj(3, DEAD)),
        ("data".to_string(), diag_proj(3, &[0, 1])),
    ];
    let d = v.local_dim();
    let basis = LocalBasis::new(v);
    for (name, role) in [("role_logical", Role::Logical), ("role_clock", Role::Clock)] {
        let keep = basis.role_states(role);
        out.push((name.to_string(), identity(d) - diag_proj(d, &keep)));
    }
    let not_r = identity(3) - basis_proj(3, READY);
    let clock_d = kron(&basis_proj(3, READY), &not_r)
        + kron(&basis_proj(3, ACTIVE), &not_r)
        + kron(&basis_proj(3, DEAD), &basis_proj(3, READY));
    let clock_q = kron(&basis_proj(3, READY), &not_r)
        + kron(&basis_proj(3, ACTIVE), &not_r)
        + kron(&basis_proj(3, DEAD), &identity(3));
    out.push(("clock_defined".to_string(), clock_d));
    out.push(("clock_undefined".to_string(), clock_q));
    let phi = (linalg::ket(4, 0) + linalg::ket(4, 3)) * linalg::re(FRAC_1_SQRT_2);
    out.push(("bell_penalty".to_string(), identity(4) - linalg::outer(&phi, &phi)));
    let gates: &[Gate] = if v == Variant::ClassicalSlct { &Gate::CLASSICAL } else { &Gate::QUANTUM };
    for &g in gates {
        out.push((format!("work_{g}"), work_projector(g)));
    }
    out
}

/// Π_work,U on `2^m ⊗ 3 ⊗ 3` (defined logicals ⊗ predecessor ⊗ successor phase).
pub fn work_projector(g: Gate) -> Mat {
    use crate::linalg::{kron, outer};
    let u = gate_matrix(g);
    let n = u.nrows();
    let k = |a: usize, b: usize| linalg::ket(9, 3 * a + b);
    let ar = k(ACTIVE, READY);
    let da = k(DEAD, ACTIVE);
    let half = linalg::re(0.5);
    (kron(&identity(n), &outer(&ar, &ar)) + kron(&identity(n), &outer(&da, &da))
        - kron(&u, &outer(&da, &ar))
        - kron(&u.adjoint(), &outer(&ar, &da)))
        * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gate;

    fn slct() -> LocalBasis {
        LocalBasis::new(Variant::Slct)
    }

    #[test]
    fn gates_are_unitary() {
        for g in Gate::QUANTUM.into_iter().chain(Gate::CLASSICAL) {
            let u = gate_matrix(g);
            let n = u.nrows();
            assert_eq!(n, 1 << g.arity());
            assert!(linalg::max_abs(&(u.adjoint() * &u - identity(n))) <= 1e-12, "{g}");
        }
    }

    #[test]
    fn hhcnot_on_zero_is_uniform() {
        let v = gate_matrix(Gate::HHCNOT) * linalg::ket(4, 0);
        for z in v.iter() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn classical_gates_match_matrices() {
        for g in Gate::CLASSICAL {
            let u = gate_matrix(g);
            let m = g.arity();
            for i in 0..(1usize << m) {
                let bits: Vec<bool> = (0..m).map(|k| (i >> (m - 1 - k)) & 1 == 1).collect();
                let out = classical_gate(g, &bits);
                let j = out.iter().fold(0, |acc, &b| acc * 2 + b as usize);
                assert_eq!(u[(j, i)], ONE);
            }
        }
    }

    #[test]
    fn slct_init_kernel_is_four_dimensional() {
        let k = clause_nullspace(&Clause::init(0, 1), Variant::Slct).unwrap();
        assert_eq!(k.dim(), 4);
        let proj = k.core_projector();
        let b = slct();
        for x in 0..3 {
            let idx = k.core_index(&[x, b.clock(DEAD, 0, 0)]).unwrap();
            assert!((proj[(idx, idx)] - ONE).norm() < 1e-9);
        }
        let idx = k.core_index(&[0, b.clock(ACTIVE, 0, 0)]).unwrap();
        assert!((proj[(idx, idx)] - ONE).norm() < 1e-9);
    }

    #[test]
    fn dense_semidefinite_counts_role_violations() {
        let op = build_semidefinite(&Clause::init(0, 1), Variant::Slct).unwrap();
        let m = op.to_dense();
        // |r⟩ on the logical site and |0⟩ on the clock site: both roles violated.
        let i = 3 * 6;
        assert!((m[(i, i)] - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(linalg::max_abs(&(&m - m.adjoint())) < 1e-12);
    }
}
