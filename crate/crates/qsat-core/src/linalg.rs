//! Small dense linear-algebra helpers over complex doubles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn ket(dim: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[i] = ONE;
    v
}

/// |i⟩⟨i| on a `dim`-dimensional space.
pub fn basis_proj(dim: usize, i: usize) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    m[(i, i)] = ONE;
    m
}

/// Diagonal projector onto the listed basis states.
pub fn diag_proj(dim: usize, states: &[usize]) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    for &i in states {
        m[(i, i)] = ONE;
    }
    m
}

pub fn outer(a: &Vector, b: &Vector) -> Mat {
    a * b.adjoint()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn kron_all(ms: &[Mat]) -> Mat {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

pub fn kron_vec(a: &Vector, b: &Vector) -> Vector {
    a.kronecker(b)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn eigh(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * re(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let herm = (m + m.adjoint()) * re(0.5);
    let mut v: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Orthonormal basis (as columns) of the eigenvectors with eigenvalue below `tol`.
pub fn kernel(m: &Mat, tol: f64) -> Mat {
    let (vals, vecs) = eigh(m);
    let k = vals.iter().take_while(|&&v| v < tol).count();
    vecs.columns(0, k).into_owned()
}

/// Orthogonal projector onto the complement of the kernel of a PSD matrix.
pub fn range_projector(m: &Mat, tol: f64) -> Mat {
    let k = kernel(m, tol);
    identity(m.nrows()) - &k * k.adjoint()
}

/// `‖P² − P‖_max` and `‖P − P†‖_max`.
pub fn projector_defects(p: &Mat) -> (f64, f64) {
    (max_abs(&(p * p - p)), max_abs(&(p - p.adjoint())))
}

/// Row-major strides of a big-endian multi-index with the given dimensions.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets used to apply an operator on a few tensor factors of a larger
/// space. `rel` enumerates the chosen local states of the acted-on factors and
/// `bases` enumerates every configuration of the remaining factors.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub rel: Vec<usize>,
    pub bases: Vec<usize>,
}

impl Embedding {
    /// `positions[j]` is the layout slot of the j-th acted-on factor and
    /// `states[j]` lists the local indices it may take, in core order.
    pub fn new(dims: &[usize], positions: &[usize], states: &[Vec<usize>]) -> Self {
        let st = strides(dims);
        let mut rel = vec![0usize];
        for (j, &p) in positions.iter().enumerate() {
            rel = rel
                .iter()
                .flat_map(|&r| {
                    let stp = st[p];
                    states[j].iter().map(move |&s| r + s * stp)
                })
                .collect();
        }
        let mut bases = vec![0usize];
        for (p, &d) in dims.iter().enumerate() {
            if positions.contains(&p) {
                continue;
            }
            let stp = st[p];
            bases = bases.iter().flat_map(|&b| (0..d).map(move |s| b + s * stp)).collect();
        }
        Embedding { rel, bases }
    }

    /// Replaces the block of `x` selected by this embedding with `core · block`
    /// for every column, leaving all other entries untouched.
    pub fn apply_in_place(&self, core: &Mat, x: &mut Mat) {
        let k = self.rel.len();
        let m = x.ncols();
        let nb = self.bases.len();
        let mut g = Mat::zeros(k, nb * m);
        for (bi, &b) in self.bases.iter().enumerate() {
            for c in 0..m {
                for (i, &r) in self.rel.iter().enumerate() {
                    g[(i, bi * m + c)] = x[(b + r, c)];
                }
            }
        }
        let y = core * g;
        for (bi, &b) in self.bases.iter().enumerate() {
            for c in 0..m {
                for (i, &r) in self.rel.iter().enumerate() {
                    x[(b + r, c)] = y[(i, bi * m + c)];
                }
            }
        }
    }

    /// `Σ_blocks ⟨x_block| core |x_block⟩` for a single vector.
    pub fn expectation(&self, core: &Mat, x: &Vector) -> f64 {
        let k = self.rel.len();
        let mut total = 0.0;
        let mut g = Vector::zeros(k);
        for &b in &self.bases {
            for (i, &r) in self.rel.iter().enumerate() {
                g[i] = x[b + r];
            }
            total += g.dotc(&(core * &g)).re;
        }
        total
    }
}
