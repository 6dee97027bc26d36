//! Dense nonsymmetric eigenvalues: balancing, Hessenberg reduction by
//! stabilized elementary similarities, then the Francis implicit double-shift
//! QR iteration. The iteration runs in real arithmetic; complex pairs come out
//! of the 2×2 deflation blocks as explicit (re, im) pairs.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

const RADIX: f64 = 2.0;
const ITERATION_BUDGET_PER_ROW: usize = 30;

/// Eigenvalues or polynomial roots, sorted by descending real part (ties by
/// descending imaginary part).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<Complex64>);

impl Spectrum {
    pub fn new(mut values: Vec<Complex64>) -> Self {
        values.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap_or(Ordering::Equal)
                .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
        });
        Self(values)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }

    /// Largest real part, or `-inf` for an empty spectrum.
    pub fn max_real(&self) -> f64 {
        self.0.first().map_or(f64::NEG_INFINITY, |z| z.re)
    }

    /// Entries whose imaginary part is within `tol·(1 + |re|)` of zero, as
    /// real numbers in ascending order.
    pub fn real_values(&self, tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .0
            .iter()
            .filter(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        out
    }

    /// Checks that non-real entries pair up with their conjugates.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        self.0.iter().all(|z| {
            let scale = tol * (1.0 + z.norm());
            z.im.abs() <= scale || self.0.iter().any(|w| (w - z.conj()).norm() <= scale)
        })
    }
}

impl IntoIterator for Spectrum {
    type Item = Complex64;
    type IntoIter = std::vec::IntoIter<Complex64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues need a non-empty square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entries"));
    }
    let mut h = OneBased::from_matrix(m);
    balance(&mut h);
    reduce_to_hessenberg(&mut h);
    hessenberg_qr(&mut h).map(Spectrum::new)
}

/// Square matrix with 1-based indexing; row/column 0 is padding. Keeps the
/// index arithmetic of the classic formulations of these algorithms intact.
struct OneBased {
    n: usize,
    a: Vec<f64>,
}

impl OneBased {
    fn from_matrix(m: &Matrix) -> Self {
        let n = m.rows();
        let mut a = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.a[i * (n + 1) + j] = v;
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.a[i * (n + 1) + j] += v;
    }

    fn swap(&mut self, (i1, j1): (usize, usize), (i2, j2): (usize, usize)) {
        let n = self.n;
        self.a.swap(i1 * (n + 1) + j1, i2 * (n + 1) + j2);
    }
}

/// Diagonal similarity by powers of the radix so row and column norms match.
fn balance(h: &mut OneBased) {
    let n = h.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += h.get(j, i).abs();
                    r += h.get(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        h.set(i, j, h.get(i, j) * g);
                    }
                    for j in 1..=n {
                        h.set(j, i, h.get(j, i) * f);
                    }
                }
            }
        }
    }
}

/// Upper Hessenberg form by Gaussian elimination with pivoting.
fn reduce_to_hessenberg(h: &mut OneBased) {
    let n = h.n;
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if h.get(j, m - 1).abs() > x.abs() {
                x = h.get(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                h.swap((i, j), (m, j));
            }
            for j in 1..=n {
                h.swap((j, i), (j, m));
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = h.get(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    h.set(i, m - 1, y);
                    for j in m..=n {
                        h.add(i, j, -y * h.get(m, j));
                    }
                    for j in 1..=n {
                        h.add(j, m, y * h.get(j, i));
                    }
                }
            }
        }
    }
    for i in 3..=n {
        for j in 1..i - 1 {
            h.set(i, j, 0.0);
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `h`).
fn hessenberg_qr(h: &mut OneBased) -> Result<Vec<Complex64>> {
    let n = h.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += h.get(i, j).abs();
        }
    }

    let budget = ITERATION_BUDGET_PER_ROW * n.max(10);
    let mut total = 0;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                let mut s = h.get(l - 1, l - 1).abs() + h.get(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h.get(l, l - 1).abs() + s == s {
                    h.set(l, l - 1, 0.0);
                    break;
                }
                l -= 1;
            }
            let l = l.max(1);

            let mut x = h.get(nn, nn);
            if l == nn {
                // One root found.
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h.get(nn - 1, nn - 1);
            let mut w = h.get(nn, nn - 1) * h.get(nn - 1, nn);
            if l == nn - 1 {
                // Two roots found.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }

            if total == budget {
                return Err(Error::NumericFailure(format!(
                    "QR iteration did not converge for eigenvalue {nn} of {n}"
                )));
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift, alternating between the bottom and the
                // top of the active block.
                t += x;
                for i in 1..=nn {
                    h.add(i, i, -x);
                }
                let s = if (its / 10) % 2 == 1 {
                    h.get(nn, nn - 1).abs() + h.get(nn - 1, nn - 2).abs()
                } else {
                    h.get(l + 1, l).abs() + h.get(l + 2, l + 1).abs()
                };
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // Form the shift and look for two consecutive small subdiagonal
            // elements.
            let (mut p, mut q, mut r): (f64, f64, f64);
            let mut m = nn - 2;
            loop {
                let z = h.get(m, m);
                let rr = x - z;
                let s = y - z;
                p = (rr * s - w) / h.get(m + 1, m) + h.get(m, m + 1);
                q = h.get(m + 1, m + 1) - z - rr - s;
                r = h.get(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h.get(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (h.get(m - 1, m - 1).abs() + z.abs() + h.get(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                h.set(i, i - 2, 0.0);
                if i != m + 2 {
                    h.set(i, i - 3, 0.0);
                }
            }

            // Double QR step on rows l..nn and columns m..nn.
            let mut k = m;
            while k < nn {
                if k != m {
                    p = h.get(k, k - 1);
                    q = h.get(k + 1, k - 1);
                    r = if k != nn - 1 { h.get(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            h.set(k, k - 1, -h.get(k, k - 1));
                        }
                    } else {
                        h.set(k, k - 1, -s * x);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = h.get(k, j) + q * h.get(k + 1, j);
                        if k != nn - 1 {
                            pp += r * h.get(k + 2, j);
                            h.add(k + 2, j, -pp * z);
                        }
                        h.add(k + 1, j, -pp * y);
                        h.add(k, j, -pp * x);
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * h.get(i, k) + y * h.get(i, k + 1);
                        if k != nn - 1 {
                            pp += z * h.get(i, k + 2);
                            h.add(i, k + 2, -pp * r);
                        }
                        h.add(i, k + 1, -pp * q);
                        h.add(i, k, -pp);
                    }
                }
                k += 1;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(spec: &Spectrum, want: &[Complex64], tol: f64) {
        let want = Spectrum::new(want.to_vec());
        assert_eq!(spec.len(), want.len());
        for (a, b) in spec.iter().zip(want.iter()) {
            assert!((a - b).norm() <= tol * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn diagonal_matrix_returns_its_diagonal() {
        let m = Matrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.5]]);
        let s = eigenvalues(&m).unwrap();
        assert_close(
            &s,
            &[3.0, -1.0, 2.5].map(|v| Complex64::new(v, 0.0)),
            1e-14,
        );
    }

    #[test]
    fn rotation_scaled_block() {
        let m = Matrix::from_rows(&[[-1.0, -5.0], [5.0, -1.0]]);
        let s = eigenvalues(&m).unwrap();
        assert_close(
            &s,
            &[Complex64::new(-1.0, 5.0), Complex64::new(-1.0, -5.0)],
            1e-14,
        );
    }

    #[test]
    fn one_by_one() {
        let s = eigenvalues(&Matrix::from_rows(&[[4.0]])).unwrap();
        assert_eq!(s.values(), &[Complex64::new(4.0, 0.0)]);
    }

    #[test]
    fn companion_of_known_cubic() {
        // x³ − 9x² + 17x − 9 = (x − 1)(x² − 8x + 9)
        let m = Matrix::from_rows(&[[9.0, -17.0, 9.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let s = eigenvalues(&m).unwrap();
        let r7 = 7f64.sqrt();
        assert_close(
            &s,
            &[1.0, 4.0 - r7, 4.0 + r7].map(|v| Complex64::new(v, 0.0)),
            1e-12,
        );
    }

    #[test]
    fn badly_scaled_matrix_benefits_from_balancing() {
        let m = Matrix::from_rows(&[
            [1.0, 1e10, 0.0],
            [1e-10, 2.0, 1e8],
            [0.0, 1e-8, 3.0],
        ]);
        let s = eigenvalues(&m).unwrap();
        // Similar (by diagonal scaling) to [[1,1,0],[1,2,1],[0,1,3]].
        let sym = Matrix::from_rows(&[[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 3.0]]);
        let want = eigenvalues(&sym).unwrap();
        assert_close(&s, want.values(), 1e-12);
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(eigenvalues(&Matrix::zeros(2, 3)).is_err());
        let m = Matrix::from_rows(&[[f64::NAN]]);
        assert!(matches!(eigenvalues(&m), Err(Error::NonFinite(_))));
    }

    /// Characteristic-polynomial coefficients of a small matrix via
    /// Faddeev–LeVerrier, used as an independent oracle.
    fn char_poly(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        let mut mk = Matrix::zeros(n, n);
        for k in 1..=n {
            let mut next = m * &mk;
            for i in 0..n {
                next[(i, i)] += coeffs[n - k + 1];
            }
            mk = next;
            let amk = m * &mk;
            coeffs[n - k] = -amk.trace() / k as f64;
        }
        coeffs
    }

    fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
        coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    proptest! {
        #[test]
        fn eigenvalues_are_roots_of_characteristic_polynomial(
            n in 1usize..=4,
            entries in proptest::collection::vec(-3.0f64..3.0, 16),
        ) {
            let m = Matrix::from_fn(n, n, |i, j| entries[i * 4 + j]);
            let s = eigenvalues(&m).unwrap();
            let cp = char_poly(&m);
            let deriv: Vec<f64> = cp.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
            for z in s.iter() {
                // Newton-step size as a root-distance estimate.
                let d = eval(&deriv, *z);
                let v = eval(&cp, *z);
                let dist = if d.norm() > 1e-6 { (v / d).norm() } else { v.norm().powf(1.0 / n as f64) };
                prop_assert!(dist < 1e-8 || v.norm() < 1e-10, "z={z} p(z)={v}");
            }
            prop_assert!(s.is_conjugate_closed(1e-8));
        }

        #[test]
        fn transpose_has_same_spectrum(
            n in 1usize..=6,
            entries in proptest::collection::vec(-2.0f64..2.0, 36),
        ) {
            let m = Matrix::from_fn(n, n, |i, j| entries[i * 6 + j]);
            let a = eigenvalues(&m).unwrap();
            let b = eigenvalues(&m.transpose()).unwrap();
            // Match as multisets (ordering is sensitive to ties).
            let mut used = vec![false; b.len()];
            for z in a.iter() {
                let k = (0..b.len())
                    .filter(|&k| !used[k])
                    .min_by(|&i, &j| (b.values()[i] - z).norm().partial_cmp(&(b.values()[j] - z).norm()).unwrap())
                    .unwrap();
                used[k] = true;
                prop_assert!((b.values()[k] - z).norm() < 1e-6 * (1.0 + z.norm()));
            }
        }
    }
}
