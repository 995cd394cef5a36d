use kraussim::{CMatrix, CVector, C64};

fn main() {
    // Hermitian matrix with a 4-fold degenerate eigenvalue 1 and one 0.97:
    // I - s^2 w w^† for a random-ish complex unit vector w.
    let n = 5;
    let mut w = CVector::zeros(n);
    let vals = [(0.2, 0.1), (0.5, -0.3), (0.1, 0.4), (-0.6, 0.2), (0.05, -0.15)];
    for (i, (re, im)) in vals.iter().enumerate() {
        w[i] = C64::new(*re, *im);
    }
    let w = w.clone().unscale(w.norm());
    let m = CMatrix::identity(n, n) - (&w * w.adjoint()).scale(0.03);
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let orth = (v.adjoint() * v - CMatrix::identity(n, n)).norm();
    println!("eigenvalues: {:?}", eig.eigenvalues.as_slice());
    println!("eigenvector orthonormality defect: {orth:.3e}");
    let lam = CMatrix::from_diagonal(&CVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| C64::new(l, 0.0))));
    let rec = v * lam * v.adjoint();
    println!("reconstruction defect: {:.3e}", (rec - &m).norm());
}
