//! Finite-difference Jacobians and small dense eigenvalue problems.

use alloc::vec;
use alloc::vec::Vec;

use crate::system::{DynamicalSystem, Regime};

/// An eigenvalue `re + i im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl Eigenvalue {
    fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    fn dist(&self, other: &Eigenvalue) -> f64 {
        libm::hypot(self.re - other.re, self.im - other.im)
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Builds a matrix from rows.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    /// Order.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// All eigenvalues. Orders up to 3 use the characteristic polynomial in
    /// closed form; larger ones go through a real Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<Eigenvalue> {
        let a = |i, j| self.get(i, j);
        match self.n {
            0 => Vec::new(),
            1 => vec![Eigenvalue::real(a(0, 0))],
            2 => {
                let tr = a(0, 0) + a(1, 1);
                let det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
                quadratic_roots(-tr, det).to_vec()
            }
            3 => {
                let tr = a(0, 0) + a(1, 1) + a(2, 2);
                let minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)
                    + a(1, 1) * a(2, 2)
                    - a(1, 2) * a(2, 1);
                let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
                cubic_roots(-tr, minors, -det).to_vec()
            }
            n => {
                let m = nalgebra::DMatrix::from_row_slice(n, n, &self.data);
                m.complex_eigenvalues().iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect()
            }
        }
    }
}

/// Roots of `x^2 + p x + q`.
pub fn quadratic_roots(p: f64, q: f64) -> [Eigenvalue; 2] {
    let half = -0.5 * p;
    let disc = half * half - q;
    if disc >= 0.0 {
        let s = libm::sqrt(disc);
        // Avoid cancellation: compute the larger-magnitude root first.
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { q / big } else { 0.0 };
        let (lo, hi) = if big < small { (big, small) } else { (small, big) };
        [Eigenvalue::real(hi), Eigenvalue::real(lo)]
    } else {
        let s = libm::sqrt(-disc);
        [Eigenvalue { re: half, im: s }, Eigenvalue { re: half, im: -s }]
    }
}

/// Roots of `x^3 + a x^2 + b x + c`.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Eigenvalue; 3] {
    let poly = |x: f64| ((x + a) * x + b) * x + c;
    let dpoly = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    // Depressed cubic s^3 + p s + q with x = s - a/3.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let mut r = if disc > 0.0 {
        let sd = libm::sqrt(disc);
        libm::cbrt(-0.5 * q + sd) + libm::cbrt(-0.5 * q - sd) - shift
    } else if p == 0.0 {
        -shift
    } else {
        // Three real roots: take the largest.
        let m = 2.0 * libm::sqrt(-p / 3.0);
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        m * libm::cos(libm::acos(arg) / 3.0) - shift
    };
    for _ in 0..4 {
        let d = dpoly(r);
        if d == 0.0 {
            break;
        }
        let next = r - poly(r) / d;
        if !next.is_finite() {
            break;
        }
        r = next;
    }
    // Deflate: x^3 + a x^2 + b x + c = (x - r)(x^2 + (a + r) x + (b + (a + r) r)).
    let [q1, q2] = quadratic_roots(a + r, b + (a + r) * r);
    [Eigenvalue::real(r), q1, q2]
}

/// Jacobian of `sys` at `x` (initial regime) by central differences with step
/// `h_scale * (1 + |x_i|)` in component `i`.
pub fn jacobian<S: DynamicalSystem + ?Sized>(sys: &S, x: &[f64], h_scale: f64) -> Matrix {
    let n = sys.dim();
    let mut jac = Matrix::zeros(n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = h_scale * (1.0 + libm::fabs(x[j]));
        xp[j] = x[j] + h;
        sys.rhs(0.0, &xp, Regime::INITIAL, &mut fp);
        xp[j] = x[j] - h;
        sys.rhs(0.0, &xp, Regime::INITIAL, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
        }
    }
    jac
}

/// Whether two eigenvalues are so close that the matrix may be defective.
pub fn nearly_repeated(eigs: &[Eigenvalue]) -> bool {
    let scale = eigs.iter().map(|e| libm::hypot(e.re, e.im)).fold(1.0f64, f64::max);
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            if eigs[i].dist(&eigs[j]) < 1e-4 * scale {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut e: Vec<Eigenvalue>) -> Vec<f64> {
        e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        e.iter().map(|z| z.re).collect()
    }

    #[test]
    fn two_by_two_repeated() {
        // companion of l^2 + l + 0.25
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[-0.25, -1.0]]);
        let e = m.eigenvalues();
        for z in &e {
            assert!((z.re + 0.5).abs() < 1e-7 && z.im.abs() < 1e-7, "{z:?}");
        }
        assert!(nearly_repeated(&e));
    }

    #[test]
    fn cubic_matches_schur_route() {
        let m3 = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[-3.0, 0.5, 1.0], &[0.2, 0.0, -2.0]]);
        let closed = m3.eigenvalues();
        let schur = nalgebra::DMatrix::from_row_slice(3, 3, &m3.data).complex_eigenvalues();
        let mut a: Vec<(f64, f64)> = closed.iter().map(|z| (z.re, z.im)).collect();
        let mut b: Vec<(f64, f64)> = schur.iter().map(|z| (z.re, z.im)).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.0 - y.0).abs() < 1e-10 && (x.1 - y.1).abs() < 1e-10, "{x:?} {y:?}");
        }
    }

    #[test]
    fn triangular_four_by_four() {
        let m = Matrix::from_rows(&[
            &[-1.0, 3.0, 0.0, 2.0],
            &[0.0, -2.0, 5.0, 1.0],
            &[0.0, 0.0, 0.5, 7.0],
            &[0.0, 0.0, 0.0, -4.0],
        ]);
        let re = sorted_re(m.eigenvalues());
        let expect = [-4.0, -2.0, -1.0, 0.5];
        for (a, b) in re.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn three_real_roots() {
        // (x - 1)(x + 2)(x + 3) = x^3 + 4x^2 + x - 6
        let re = sorted_re(cubic_roots(4.0, 1.0, -6.0).to_vec());
        for (a, b) in re.iter().zip([-3.0, -2.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
