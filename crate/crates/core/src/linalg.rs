//! Thin wrappers around the dense eigensolvers and a few matrix utilities
//! shared by the physics modules.

use faer::{Mat, Side};
pub use faer::c64;

/// Result of a Hermitian eigendecomposition, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as matrix columns, orthonormal.
    pub vectors: Mat<c64>,
}

/// Diagonalize a Hermitian matrix, returning all eigenpairs sorted ascending.
pub fn hermitian_eigen(h: &Mat<c64>) -> Result<HermitianEigen, LinalgError> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| LinalgError::NoConvergence)?;
    let n = h.nrows();
    let values: Vec<f64> = (0..n).map(|k| evd.S()[k].re).collect();
    Ok(HermitianEigen { values, vectors: evd.U().to_owned() })
}

/// Eigendecomposition of a unitary (normal) complex matrix.
pub struct GeneralEigen {
    pub values: Vec<c64>,
    pub vectors: Mat<c64>,
}

/// Diagonalize a unitary matrix through its Hermitian parts.
///
/// A general eigensolver loses the eigenvectors of nearly degenerate pairs
/// (error ∝ ε/gap, and unit-circle gaps here reach 1e−13 for high rotor
/// doublets). Since U is normal, its Hermitian and anti-Hermitian parts
/// commute: diagonalizing M = (U+U†)/2 + γ(U−U†)/2i yields an exactly
/// orthonormal eigenbasis; clusters that remain unresolved in M are fixed
/// by re-diagonalizing the small block with a second slope.
pub fn unitary_eigen(u: &Mat<c64>) -> Result<GeneralEigen, LinalgError> {
    const GAMMA_1: f64 = 0.618_033_988_749_894_9;
    const GAMMA_2: f64 = -1.324_717_957_244_746;
    const CLUSTER_TOL: f64 = 1e-8;

    let n = u.nrows();
    let udag = u.adjoint().to_owned();
    let combo = |g: f64, a: &Mat<c64>, ad: &Mat<c64>| -> Mat<c64> {
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
            let sym = (a[(i, j)] + ad[(i, j)]) * 0.5;
            let asym = (a[(i, j)] - ad[(i, j)]) * c64::new(0.0, -0.5);
            sym + asym * g
        })
    };
    let m = combo(GAMMA_1, u, &udag);
    let me = hermitian_eigen(&m)?;
    let mut vectors = me.vectors;
    // resolve clusters the first slope left degenerate
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && me.values[end] - me.values[end - 1] < CLUSTER_TOL {
            end += 1;
        }
        let width = end - k;
        if width > 1 {
            // project U onto the cluster and rediagonalize with the other slope
            let mut ublock = Mat::<c64>::zeros(width, width);
            for a in 0..width {
                for b in 0..width {
                    let mut s = c64::new(0.0, 0.0);
                    for r in 0..n {
                        let mut uv = c64::new(0.0, 0.0);
                        for c in 0..n {
                            uv += u[(r, c)] * vectors[(c, k + b)];
                        }
                        s += vectors[(r, k + a)].conj() * uv;
                    }
                    ublock[(a, b)] = s;
                }
            }
            let ublock_dag = ublock.adjoint().to_owned();
            let mb = combo(GAMMA_2, &ublock, &ublock_dag);
            let be = hermitian_eigen(&mb)?;
            let old: Vec<Vec<c64>> = (0..width)
                .map(|a| (0..n).map(|r| vectors[(r, k + a)]).collect())
                .collect();
            for b in 0..width {
                for r in 0..n {
                    let mut s = c64::new(0.0, 0.0);
                    for a in 0..width {
                        s += be.vectors[(a, b)] * old[a][r];
                    }
                    vectors[(r, k + b)] = s;
                }
            }
        }
        k = end;
    }
    // Rayleigh quotients of the final vectors
    let uv = u * &vectors;
    let values: Vec<c64> = (0..n)
        .map(|j| {
            let mut s = c64::new(0.0, 0.0);
            for r in 0..n {
                s += vectors[(r, j)].conj() * uv[(r, j)];
            }
            s
        })
        .collect();
    Ok(GeneralEigen { values, vectors })
}

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("eigensolver failed to converge")]
    NoConvergence,
}

/// max |(A†A − I)_ij|; for rectangular A this measures column
/// orthonormality.
pub fn unitarity_defect(a: &Mat<c64>) -> f64 {
    let n = a.ncols();
    let g = a.adjoint() * a;
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[(i, j)] - c64::new(id, 0.0)).norm());
        }
    }
    d
}

/// max |H_ij − conj(H_ji)|
pub fn hermiticity_defect(h: &Mat<c64>) -> f64 {
    let n = h.nrows();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            d = d.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    d
}

/// ⟨a|b⟩ for two column vectors given as slices.
pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// |⟨a|b⟩|²
pub fn overlap_sq(a: &[c64], b: &[c64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// Fix the global phase of a vector so its largest-magnitude component is
/// real and positive. Makes eigenvector output reproducible across runs.
pub fn fix_phase(v: &mut [c64]) {
    let mut imax = 0;
    let mut best = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best {
            best = m;
            imax = i;
        }
    }
    if best == 0.0 {
        return;
    }
    let ph = v[imax] / c64::new(v[imax].norm(), 0.0);
    let corr = ph.conj();
    for z in v.iter_mut() {
        *z *= corr;
    }
}

/// Improve the unitarity of a nearly-unitary matrix by one Newton–Schulz
/// polar step: W ← W(3I − W†W)/2. Cuts the orthonormality defect of
/// eigenvector matrices to machine level before they are used millions of
/// times inside the propagator.
pub fn polar_correct(w: &Mat<c64>) -> Mat<c64> {
    let n = w.nrows();
    let g = w.adjoint() * w;
    let mut m = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 3.0 } else { 0.0 };
            m[(i, j)] = (c64::new(id, 0.0) - g[(i, j)]) * 0.5;
        }
    }
    w * m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_hermitian(n: usize) -> Mat<c64> {
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(i as f64, 0.0)
            } else {
                let s = ((i * 7 + j * 3) % 5) as f64 * 0.1;
                if i < j { c64::new(0.2, s) } else { c64::new(0.2, -(((j * 7 + i * 3) % 5) as f64) * 0.1) }
            }
        })
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let h = test_hermitian(8);
        let e = hermitian_eigen(&h).unwrap();
        for k in 0..8 {
            let v: Vec<c64> = (0..8).map(|r| e.vectors[(r, k)]).collect();
            let hv: Vec<c64> = (0..8)
                .map(|r| (0..8).map(|c| h[(r, c)] * v[c]).sum())
                .collect();
            for r in 0..8 {
                assert!((hv[r] - v[r] * e.values[k]).norm() < 1e-10);
            }
        }
        for k in 1..8 {
            assert!(e.values[k] >= e.values[k - 1]);
        }
    }

    #[test]
    fn unitarity_defect_of_identity_is_zero() {
        let i = Mat::<c64>::identity(5, 5);
        assert!(unitarity_defect(&i) < 1e-15);
    }

    #[test]
    fn phase_fix_is_idempotent() {
        let mut v = vec![c64::new(0.3, 0.4), c64::new(-0.5, 0.2), c64::new(0.1, -0.6)];
        fix_phase(&mut v);
        let w = v.clone();
        fix_phase(&mut v);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).norm() < 1e-14);
        }
        let mut imax = 0;
        let mut best = 0.0;
        for (i, z) in v.iter().enumerate() {
            if z.norm_sqr() > best {
                best = z.norm_sqr();
                imax = i;
            }
        }
        assert!(v[imax].im.abs() < 1e-14 && v[imax].re > 0.0);
    }

    #[test]
    fn polar_correct_tightens_orthonormality() {
        let h = test_hermitian(10);
        let e = hermitian_eigen(&h).unwrap();
        let before = unitarity_defect(&e.vectors);
        let after = unitarity_defect(&polar_correct(&e.vectors));
        assert!(after <= before.max(1e-15));
        assert!(after < 1e-14);
    }
}
