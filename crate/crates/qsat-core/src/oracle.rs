//! Brute-force spectral ground truth for small instances.
//!
//! A Hamiltonian is a sum of [`LocalProjector`]s. Each projector is the
//! identity except on the product of its active local states, which lets the
//! oracle shrink the space before doing any linear algebra:
//!
//! * null vectors live in the product, over sites, of the *intersection* of
//!   the active sets of the terms touching that site;
//! * the product of the *unions* of the active sets is an invariant subspace,
//!   and its complement has energy at least one.
//!
//! Disconnected groups of sites are handled independently.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clauses::{build_projector, LocalProjector};
use crate::error::{Error, Result};
use crate::linalg::{self, eigh, eigvalsh, kernel, Mat, Vector, C64, ZERO};
use crate::model::{Instance, UnionFind};

/// Budgets and tolerances of the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Largest working dimension handled by dense eigensolves.
    pub dense_budget: usize,
    /// Largest working dimension handled at all.
    pub budget: usize,
    /// Eigenvalues of compressed projectors below this count as zero.
    pub kernel_tol: f64,
    /// Residual norm at which a Lanczos Ritz pair is accepted.
    pub lanczos_tol: f64,
    pub max_restarts: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            dense_budget: 4096,
            budget: 1 << 14,
            kernel_tol: 1e-8,
            lanczos_tol: 1e-9,
            max_restarts: 200,
        }
    }
}

/// A sum of local projectors on `num_sites` sites of dimension `local_dim`.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    pub local_dim: usize,
    pub num_sites: usize,
    pub terms: Vec<LocalProjector>,
}

impl LocalHamiltonian {
    pub fn new(local_dim: usize, num_sites: usize, terms: Vec<LocalProjector>) -> Self {
        LocalHamiltonian { local_dim, num_sites, terms }
    }

    /// One projector per clause.
    pub fn from_instance(inst: &Instance) -> Result<Self> {
        let terms = inst
            .clauses
            .iter()
            .map(|c| build_projector(c, inst.variant))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalHamiltonian::new(inst.local_dim(), inst.num_qudits, terms))
    }

    /// `local_dim^num_sites`, saturating.
    pub fn total_dim(&self) -> u128 {
        let mut total: u128 = 1;
        for _ in 0..self.num_sites {
            total = total.saturating_mul(self.local_dim as u128);
        }
        total
    }

    /// Groups of sites connected by terms, each with its term indices.
    fn site_components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut uf = UnionFind::new(self.num_sites);
        for t in &self.terms {
            for w in t.sites.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            if let Some(&s) = t.sites.first() {
                groups.entry(uf.find(s)).or_default().1.push(i);
            }
        }
        for s in 0..self.num_sites {
            let root = uf.find(s);
            if let Some(g) = groups.get_mut(&root) {
                g.0.push(s);
            }
        }
        groups.into_values().collect()
    }

    fn untouched_sites(&self) -> usize {
        let mut touched = vec![false; self.num_sites];
        for t in &self.terms {
            for &s in &t.sites {
                touched[s] = true;
            }
        }
        touched.iter().filter(|&&t| !t).count()
    }

    /// Applies the Hamiltonian to a vector on the full space.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        let sites: Vec<usize> = (0..self.num_sites).collect();
        let full: Vec<Vec<usize>> = sites.iter().map(|_| (0..self.local_dim).collect()).collect();
        if v.len() as u128 != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim() as usize, found: v.len() });
        }
        let all: Vec<usize> = (0..self.terms.len()).collect();
        Ok(Reduced::build(self, &sites, &full, &all).apply(v))
    }
}

/// A term expressed on a reduced product space.
#[derive(Clone, Debug)]
struct ReducedTerm {
    /// Positions of the term's sites in the reduced site order.
    positions: Vec<usize>,
    /// Reduced local indices of the active states kept, per site, in core order.
    states: Vec<Vec<usize>>,
    /// `core − 1` on the kept active states.
    core_minus_id: Mat,
    embedding: linalg::Embedding,
}

/// Sites restricted to subsets of their local states, with the terms
/// compressed accordingly. Each projector becomes `1 + E (core − 1) E`.
#[derive(Clone, Debug)]
struct Reduced {
    dims: Vec<usize>,
    terms: Vec<ReducedTerm>,
}

impl Reduced {
    /// `sites` lists global site ids, `kept[j]` the local states kept on
    /// `sites[j]`, and `terms` the term indices to compress.
    fn build(h: &LocalHamiltonian, sites: &[usize], kept: &[Vec<usize>], terms: &[usize]) -> Reduced {
        let dims: Vec<usize> = kept.iter().map(Vec::len).collect();
        let pos_of: BTreeMap<usize, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let terms = terms
            .iter()
            .map(|&ti| {
                let t = &h.terms[ti];
                let positions: Vec<usize> = t.sites.iter().map(|s| pos_of[s]).collect();
                // Per site: (index in active order, reduced index) of kept active states.
                let per_site: Vec<Vec<(usize, usize)>> = t
                    .active
                    .iter()
                    .zip(&positions)
                    .map(|(act, &p)| {
                        act.iter()
                            .enumerate()
                            .filter_map(|(ai, s)| kept[p].iter().position(|k| k == s).map(|ri| (ai, ri)))
                            .collect()
                    })
                    .collect();
                let act_dims: Vec<usize> = t.active.iter().map(Vec::len).collect();
                let strides = linalg::strides(&act_dims);
                let mut core_idx = vec![0usize];
                for (j, ps) in per_site.iter().enumerate() {
                    core_idx = core_idx
                        .iter()
                        .flat_map(|&c| {
                            let sj = strides[j];
                            ps.iter().map(move |&(ai, _)| c + ai * sj)
                        })
                        .collect();
                }
                let k = core_idx.len();
                let core_minus_id = Mat::from_fn(k, k, |r, c| {
                    let v = t.core[(core_idx[r], core_idx[c])];
                    if r == c {
                        v - C64::new(1.0, 0.0)
                    } else {
                        v
                    }
                });
                let states: Vec<Vec<usize>> =
                    per_site.iter().map(|ps| ps.iter().map(|&(_, ri)| ri).collect()).collect();
                let embedding = linalg::Embedding::new(&dims, &positions, &states);
                ReducedTerm { positions, states, core_minus_id, embedding }
            })
            .collect();
        Reduced { dims, terms }
    }

    fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let mut out = v * C64::new(self.terms.len() as f64, 0.0);
        for t in &self.terms {
            let k = t.embedding.rel.len();
            if k == 0 {
                continue;
            }
            let mut g = Vector::zeros(k);
            for &b in &t.embedding.bases {
                for (i, &r) in t.embedding.rel.iter().enumerate() {
                    g[i] = v[b + r];
                }
                let y = &t.core_minus_id * &g;
                for (i, &r) in t.embedding.rel.iter().enumerate() {
                    out[b + r] += y[i];
                }
            }
        }
        out
    }

    fn dense(&self) -> Mat {
        let n = self.dim();
        let mut m = Mat::identity(n, n) * C64::new(self.terms.len() as f64, 0.0);
        for t in &self.terms {
            let rel = &t.embedding.rel;
            for &b in &t.embedding.bases {
                for (i, &ri) in rel.iter().enumerate() {
                    for (j, &rj) in rel.iter().enumerate() {
                        m[(b + ri, b + rj)] += t.core_minus_id[(i, j)];
                    }
                }
            }
        }
        m
    }
}

/// How the spectrum was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Iterative,
}

/// Spectral summary of a Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub total_dim: u128,
    /// Largest reduced dimension actually worked on.
    pub working_dim: usize,
    pub nullspace_dim: u128,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue above the kernel tolerance, when it was resolved.
    pub gamma: Option<f64>,
    pub method: Method,
    /// Set when `min_eigenvalue` is only a lower bound (clamped at one).
    pub min_eigenvalue_is_bound: bool,
}

impl SpectralReport {
    pub fn frustration_free(&self) -> bool {
        self.nullspace_dim > 0
    }
}

fn intersect_sets(h: &LocalHamiltonian, sites: &[usize], terms: &[usize]) -> Vec<Vec<usize>> {
    sites
        .iter()
        .map(|&s| {
            let mut set: Option<Vec<usize>> = None;
            for &ti in terms {
                let t = &h.terms[ti];
                if let Some(j) = t.sites.iter().position(|&x| x == s) {
                    set = Some(match set {
                        None => t.active[j].clone(),
                        Some(prev) => prev.into_iter().filter(|x| t.active[j].contains(x)).collect(),
                    });
                }
            }
            let mut v = set.unwrap_or_else(|| (0..h.local_dim).collect());
            v.sort_unstable();
            v
        })
        .collect()
}

fn union_sets(h: &LocalHamiltonian, sites: &[usize], terms: &[usize]) -> Vec<Vec<usize>> {
    sites
        .iter()
        .map(|&s| {
            let mut set = std::collections::BTreeSet::new();
            let mut touched = false;
            for &ti in terms {
                let t = &h.terms[ti];
                if let Some(j) = t.sites.iter().position(|&x| x == s) {
                    touched = true;
                    set.extend(t.active[j].iter().copied());
                }
            }
            if touched {
                set.into_iter().collect()
            } else {
                (0..h.local_dim).collect()
            }
        })
        .collect()
}

fn product_dim(sets: &[Vec<usize>]) -> u128 {
    sets.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
}

/// Null space of one connected component by clause-wise intersection.
/// Returns the orthonormal basis and the largest working dimension seen.
fn component_nullspace(
    h: &LocalHamiltonian,
    sites: &[usize],
    terms: &[usize],
    cfg: &OracleConfig,
) -> Result<(usize, usize)> {
    let kept = intersect_sets(h, sites, terms);
    if kept.iter().any(Vec::is_empty) {
        return Ok((0, 0));
    }
    let red = Reduced::build(h, sites, &kept, terms);
    let dims = &red.dims;

    let mut remaining: Vec<usize> = (0..red.terms.len()).collect();
    let mut order: Vec<usize> = Vec::new(); // reduced site positions, in working order
    let mut q: Option<Mat> = None;
    let mut working = 0usize;

    while !remaining.is_empty() {
        // Next term: connected to the covered sites (if any), fewest new dimensions.
        let cost = |ti: usize| -> Option<usize> {
            let t = &red.terms[ti];
            let connected = order.is_empty() || t.positions.iter().any(|p| order.contains(p));
            connected.then(|| t.positions.iter().filter(|p| !order.contains(p)).map(|&p| dims[p]).product())
        };
        let (slot, &ti) = remaining
            .iter()
            .enumerate()
            .filter_map(|(slot, ti)| cost(*ti).map(|c| (c, slot, ti)))
            .min_by_key(|&(c, slot, _)| (c, slot))
            .map(|(_, slot, ti)| (slot, ti))
            .expect("terms of a component are connected");
        remaining.remove(slot);
        let t = &red.terms[ti];
        let new_sites: Vec<usize> = t.positions.iter().copied().filter(|p| !order.contains(p)).collect();
        let new_dim: usize = new_sites.iter().map(|&p| dims[p]).product();
        order.extend(&new_sites);
        let rows: u128 = order.iter().fold(1u128, |a, &p| a * dims[p] as u128);
        if rows > cfg.budget as u128 {
            return Err(Error::DimensionBudgetExceeded { dimension: rows, budget: cfg.budget });
        }
        let rows = rows as usize;
        working = working.max(rows);

        let expanded = match q.take() {
            None => Mat::identity(rows, rows),
            Some(prev) if new_dim == 1 => prev,
            Some(prev) => prev.kronecker(&Mat::identity(new_dim, new_dim)),
        };
        if expanded.ncols() == 0 {
            return Ok((0, working));
        }
        let order_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
        let positions: Vec<usize> =
            t.positions.iter().map(|p| order.iter().position(|x| x == p).unwrap()).collect();
        let emb = linalg::Embedding::new(&order_dims, &positions, &t.states);
        let core = &t.core_minus_id + Mat::identity(t.core_minus_id.nrows(), t.core_minus_id.nrows());
        let mut pq = expanded.clone();
        emb.apply_in_place(&core, &mut pq);
        let g = expanded.adjoint() * pq;
        let k = kernel(&g, cfg.kernel_tol);
        let next = &expanded * k;
        if next.ncols() == 0 {
            return Ok((0, working));
        }
        q = Some(next);
    }
    let q = q.expect("component has at least one term");
    Ok((q.ncols(), working))
}

/// Dimension of the common null space of all terms.
pub fn nullspace_dim(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<(u128, usize)> {
    let mut total: u128 = 1;
    let mut working = 0;
    for _ in 0..h.untouched_sites() {
        total = total.saturating_mul(h.local_dim as u128);
    }
    for (sites, terms) in h.site_components() {
        let (k, w) = component_nullspace(h, &sites, &terms, cfg)?;
        working = working.max(w);
        if k == 0 {
            return Ok((0, working));
        }
        total = total.saturating_mul(k as u128);
    }
    Ok((total, working))
}

/// Lowest eigenvalue and smallest eigenvalue above `tol` of one component.
struct ComponentSpectrum {
    lowest: f64,
    gamma: Option<f64>,
    method: Method,
    working: usize,
    bound: bool,
}

fn reduced_spectrum(red: &Reduced, cfg: &OracleConfig) -> Result<(f64, Option<f64>, Method)> {
    let n = red.dim();
    if n <= cfg.dense_budget {
        let vals = eigvalsh(&red.dense());
        let gamma = vals.iter().copied().find(|&v| v > cfg.kernel_tol);
        return Ok((vals[0], gamma, Method::Dense));
    }
    let apply = |v: &Vector| red.apply(v);
    let mut deflate: Vec<Vector> = Vec::new();
    let (lowest, x) = lanczos_lowest(&apply, n, &deflate, cfg)?;
    if lowest > cfg.kernel_tol {
        return Ok((lowest, Some(lowest), Method::Iterative));
    }
    deflate.push(x);
    let mut gamma = None;
    while deflate.len() < 32.min(n) {
        let (val, x) = lanczos_lowest(&apply, n, &deflate, cfg)?;
        if val > cfg.kernel_tol {
            gamma = Some(val);
            break;
        }
        deflate.push(x);
    }
    Ok((lowest, gamma, Method::Iterative))
}

fn component_spectrum(
    h: &LocalHamiltonian,
    sites: &[usize],
    terms: &[usize],
    cfg: &OracleConfig,
) -> Result<ComponentSpectrum> {
    let kept = union_sets(h, sites, terms);
    let full: Vec<Vec<usize>> = sites.iter().map(|_| (0..h.local_dim).collect()).collect();
    let reduced_dim = product_dim(&kept);
    let full_dim = product_dim(&full);
    let within = |d: u128| d <= cfg.budget as u128;
    if !within(reduced_dim) {
        return Err(Error::DimensionBudgetExceeded { dimension: reduced_dim, budget: cfg.budget });
    }
    let red = Reduced::build(h, sites, &kept, terms);
    let (lowest, gamma, method) = reduced_spectrum(&red, cfg)?;
    let complete = reduced_dim == full_dim;
    let resolved = |x: f64| complete || x < 1.0 - 1e-9;
    if resolved(lowest) && gamma.is_none_or(resolved) {
        return Ok(ComponentSpectrum { lowest, gamma, method, working: red.dim(), bound: false });
    }
    // The complement of the reduced space has energy at least one.
    if within(full_dim) {
        let red = Reduced::build(h, sites, &full, terms);
        let (lowest, gamma, method) = reduced_spectrum(&red, cfg)?;
        return Ok(ComponentSpectrum { lowest, gamma, method, working: red.dim(), bound: false });
    }
    let bound = !resolved(lowest);
    Ok(ComponentSpectrum {
        lowest: lowest.min(1.0),
        gamma: gamma.filter(|&g| resolved(g)),
        method,
        working: red.dim(),
        bound,
    })
}

/// Smallest eigenvalue of the Hamiltonian.
pub fn min_eigenvalue(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<f64> {
    Ok(spectrum(h, cfg)?.0.lowest)
}

fn spectrum(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<(ComponentSpectrum, usize)> {
    let mut acc = ComponentSpectrum { lowest: 0.0, gamma: None, method: Method::Dense, working: 0, bound: false };
    let mut comps = 0;
    for (sites, terms) in h.site_components() {
        let c = component_spectrum(h, &sites, &terms, cfg)?;
        comps += 1;
        acc.lowest += c.lowest;
        acc.working = acc.working.max(c.working);
        acc.bound |= c.bound;
        if c.method == Method::Iterative {
            acc.method = Method::Iterative;
        }
        acc.gamma = match (acc.gamma, c.gamma) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    if acc.lowest > cfg.kernel_tol {
        acc.gamma = Some(acc.lowest);
    }
    Ok((acc, comps))
}

/// Full spectral report: null-space dimension, lowest eigenvalue and gap.
pub fn analyze_spectrum(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<SpectralReport> {
    let (nullspace_dim, w1) = nullspace_dim(h, cfg)?;
    let (summary, _) = spectrum(h, cfg)?;
    Ok(SpectralReport {
        total_dim: h.total_dim(),
        working_dim: w1.max(summary.working),
        nullspace_dim,
        min_eigenvalue: summary.lowest,
        gamma: summary.gamma,
        method: summary.method,
        min_eigenvalue_is_bound: summary.bound,
    })
}

/// [`analyze_spectrum`] on the projectors of an instance.
pub fn report(inst: &Instance, cfg: &OracleConfig) -> Result<SpectralReport> {
    analyze_spectrum(&LocalHamiltonian::from_instance(inst)?, cfg)
}

/// Dense matrix of the Hamiltonian on the full space.
pub fn full_hamiltonian(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<Mat> {
    let total = h.total_dim();
    if total > cfg.dense_budget as u128 {
        return Err(Error::DimensionBudgetExceeded { dimension: total, budget: cfg.dense_budget });
    }
    let sites: Vec<usize> = (0..h.num_sites).collect();
    let full: Vec<Vec<usize>> = sites.iter().map(|_| (0..h.local_dim).collect()).collect();
    let terms: Vec<usize> = (0..h.terms.len()).collect();
    Ok(Reduced::build(h, &sites, &full, &terms).dense())
}

/// Lowest eigenpair by Lanczos with full reorthogonalization and restarts,
/// orthogonal to the vectors in `deflate`.
fn lanczos_lowest(
    apply: &dyn Fn(&Vector) -> Vector,
    dim: usize,
    deflate: &[Vector],
    cfg: &OracleConfig,
) -> Result<(f64, Vector)> {
    let krylov = dim.saturating_sub(deflate.len()).clamp(1, 80);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ deflate.len() as u64);
    let mut start = Vector::from_fn(dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let project_out = |v: &mut Vector, basis: &[Vector]| {
        for _ in 0..2 {
            for b in basis {
                let c = b.dotc(v);
                v.axpy(-c, b, C64::new(1.0, 0.0));
            }
        }
    };
    let mut iterations = 0;
    for _ in 0..cfg.max_restarts {
        project_out(&mut start, deflate);
        let norm = start.norm();
        if norm < 1e-300 {
            return Err(Error::NoConvergence(iterations));
        }
        let mut basis: Vec<Vector> = vec![start.unscale(norm)];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        loop {
            let j = basis.len() - 1;
            let mut w = apply(&basis[j]);
            iterations += 1;
            let alpha = basis[j].dotc(&w).re;
            alphas.push(alpha);
            project_out(&mut w, deflate);
            project_out(&mut w, &basis);
            let beta = w.norm();
            if basis.len() >= krylov || beta < 1e-12 {
                break;
            }
            betas.push(beta);
            basis.push(w.unscale(beta));
        }
        let m = alphas.len();
        let t = DMatrix::<f64>::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        let mut x = Vector::zeros(dim);
        for (k, b) in basis.iter().enumerate() {
            x.axpy(C64::new(eig.eigenvectors[(k, imin)], 0.0), b, C64::new(1.0, 0.0));
        }
        let x = x.normalize();
        let r = apply(&x) - &x * C64::new(theta, 0.0);
        let mut r = r;
        project_out(&mut r, deflate);
        if r.norm() <= cfg.lanczos_tol {
            return Ok((theta, x));
        }
        start = x;
    }
    Err(Error::NoConvergence(iterations))
}

/// A sparse state on `num_sites` sites of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    pub local_dim: usize,
    pub num_sites: usize,
    /// Basis configurations with their amplitudes; configurations are unique.
    pub entries: BTreeMap<Vec<usize>, C64>,
}

impl SparseState {
    pub fn new(local_dim: usize, num_sites: usize) -> Self {
        SparseState { local_dim, num_sites, entries: BTreeMap::new() }
    }

    /// Adds `amp` to the amplitude of `config`.
    pub fn add(&mut self, config: Vec<usize>, amp: C64) {
        *self.entries.entry(config).or_insert(ZERO) += amp;
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The state from a dense vector over `local_dim^num_sites` entries.
    pub fn from_dense(local_dim: usize, num_sites: usize, v: &Vector) -> Self {
        let mut s = SparseState::new(local_dim, num_sites);
        for (i, &a) in v.iter().enumerate() {
            if a != ZERO {
                let mut cfg = vec![0; num_sites];
                let mut x = i;
                for k in (0..num_sites).rev() {
                    cfg[k] = x % local_dim;
                    x /= local_dim;
                }
                s.add(cfg, a);
            }
        }
        s
    }

    /// Dense vector, if `local_dim^num_sites` stays below `limit`.
    pub fn to_dense(&self, limit: usize) -> Result<Vector> {
        let total = (self.local_dim as u128).saturating_pow(self.num_sites as u32);
        if total > limit as u128 {
            return Err(Error::DimensionBudgetExceeded { dimension: total, budget: limit });
        }
        let mut v = Vector::zeros(total as usize);
        for (cfg, &a) in &self.entries {
            let i = cfg.iter().fold(0, |acc, &s| acc * self.local_dim + s);
            v[i] += a;
        }
        Ok(v)
    }
}

/// `Σᵢ ⟨ψ|Πᵢ|ψ⟩` over all terms.
pub fn residual(h: &LocalHamiltonian, psi: &SparseState) -> Result<f64> {
    if psi.local_dim != h.local_dim {
        return Err(Error::DimensionMismatch { expected: h.local_dim, found: psi.local_dim });
    }
    if psi.num_sites != h.num_sites {
        return Err(Error::DimensionMismatch { expected: h.num_sites, found: psi.num_sites });
    }
    let mut total = 0.0;
    for t in &h.terms {
        let strides = linalg::strides(&t.active.iter().map(Vec::len).collect::<Vec<_>>());
        // Environment configuration -> active components (core index, amplitude).
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, C64)>> = BTreeMap::new();
        let mut inactive = 0.0;
        for (cfg, &a) in &psi.entries {
            let idx = t.sites.iter().enumerate().try_fold(0usize, |acc, (j, &s)| {
                t.active[j].iter().position(|&x| x == cfg[s]).map(|p| acc + p * strides[j])
            });
            match idx {
                None => inactive += a.norm_sqr(),
                Some(ci) => {
                    let mut env = cfg.clone();
                    for &s in &t.sites {
                        env[s] = usize::MAX;
                    }
                    groups.entry(env).or_default().push((ci, a));
                }
            }
        }
        let mut active = 0.0;
        for g in groups.values() {
            for &(i, ai) in g {
                for &(j, aj) in g {
                    active += (ai.conj() * t.core[(i, j)] * aj).re;
                }
            }
        }
        total += inactive + active;
    }
    Ok(total)
}

/// [`residual`] of a dense state against the projectors of an instance.
pub fn residual_dense(inst: &Instance, psi: &Vector) -> Result<f64> {
    let h = LocalHamiltonian::from_instance(inst)?;
    let expected = h.total_dim();
    if psi.len() as u128 != expected {
        return Err(Error::DimensionMismatch { expected: expected as usize, found: psi.len() });
    }
    residual(&h, &SparseState::from_dense(h.local_dim, h.num_sites, psi))
}

/// Eigen-decomposition of the dense Hamiltonian (small cases only).
pub fn dense_ground_space(h: &LocalHamiltonian, cfg: &OracleConfig) -> Result<(Vec<f64>, Mat)> {
    let m = full_hamiltonian(h, cfg)?;
    Ok(eigh(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Clause, Gate, Variant};
    use approx::assert_abs_diff_eq;

    fn slct(n: usize, clauses: Vec<Clause>) -> Instance {
        Instance::new(Variant::Slct, n, clauses).unwrap()
    }

    #[test]
    fn empty_instance_has_full_nullspace() {
        let r = report(&Instance::empty(Variant::Slct, 1), &OracleConfig::default()).unwrap();
        assert_eq!(r.nullspace_dim, 6);
        assert_eq!(r.min_eigenvalue, 0.0);
    }

    #[test]
    fn single_init_matches_dense() {
        let inst = slct(2, vec![Clause::init(0, 1)]);
        let h = LocalHamiltonian::from_instance(&inst).unwrap();
        let dense = full_hamiltonian(&h, &OracleConfig::default()).unwrap();
        let p = build_projector(&inst.clauses[0], Variant::Slct).unwrap().to_dense();
        assert!(linalg::max_abs(&(dense - p)) < 1e-12);
        assert_eq!(nullspace_dim(&h, &OracleConfig::default()).unwrap().0, 4);
    }

    #[test]
    fn role_conflict_is_frustrated() {
        let inst = slct(3, vec![Clause::init(0, 1), Clause::prop(Gate::H, &[2], 0, 1)]);
        let r = report(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(r.nullspace_dim, 0);
        assert!(r.min_eigenvalue > 1e-3);
    }

    #[test]
    fn reductions_agree_with_dense_spectrum() {
        let inst = slct(
            4,
            vec![Clause::init(0, 1), Clause::prop(Gate::H, &[0], 1, 2), Clause::out(0, 2), Clause::init(3, 2)],
        );
        let h = LocalHamiltonian::from_instance(&inst).unwrap();
        let cfg = OracleConfig::default();
        let (vals, _) = {
            let cfg = OracleConfig { dense_budget: 1296, ..cfg };
            dense_ground_space(&h, &cfg).unwrap()
        };
        let r = analyze_spectrum(&h, &cfg).unwrap();
        assert_abs_diff_eq!(r.min_eigenvalue, vals[0], epsilon = 1e-9);
        let zero = vals.iter().filter(|&&v| v < 1e-8).count() as u128;
        assert_eq!(r.nullspace_dim, zero);
    }

    #[test]
    fn lanczos_matches_dense() {
        let inst = slct(4, vec![Clause::init(0, 1), Clause::prop(Gate::HT, &[0], 1, 2), Clause::out(0, 2)]);
        let h = LocalHamiltonian::from_instance(&inst).unwrap();
        let dense = analyze_spectrum(&h, &OracleConfig::default()).unwrap();
        let iter = analyze_spectrum(&h, &OracleConfig { dense_budget: 1, ..Default::default() }).unwrap();
        assert_eq!(iter.method, Method::Iterative);
        assert_abs_diff_eq!(dense.min_eigenvalue, iter.min_eigenvalue, epsilon = 1e-7);
    }

    #[test]
    fn residual_of_dense_state() {
        let inst = slct(2, vec![Clause::init(0, 1)]);
        // |0⟩|a⟩ satisfies Init; |1⟩|a⟩ violates it.
        let good = SparseState { local_dim: 6, num_sites: 2, entries: [(vec![0, 4], C64::new(1.0, 0.0))].into() };
        let bad = SparseState { local_dim: 6, num_sites: 2, entries: [(vec![1, 4], C64::new(1.0, 0.0))].into() };
        let h = LocalHamiltonian::from_instance(&inst).unwrap();
        assert!(residual(&h, &good).unwrap() < 1e-12);
        assert!(residual(&h, &bad).unwrap() > 0.5);
    }
}
