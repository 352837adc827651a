//! Eigenvalues by balancing, Householder reduction to Hessenberg form and the
//! Francis double-shift QR iteration; eigenvector residuals by complex inverse
//! iteration on the original matrix.

use num_complex::Complex64;
use serde::Serialize;

use super::Matrix5;
use crate::error::{Error, Result};

const N: usize = 5;
const MAX_ITS: usize = 60;

/// Eigenvalues sorted by decreasing real part (ties: decreasing imaginary
/// part), with the residual `‖Mz − λz‖₂` of a unit eigenvector for each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spectrum {
    pub values: [Complex64; 5],
    pub residuals: [f64; 5],
}

impl Spectrum {
    /// Largest real part.
    pub fn abscissa(&self) -> f64 {
        self.values[0].re
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

pub fn eigenvalues(m: &Matrix5) -> Result<Spectrum> {
    if !m.is_finite() {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let mut a = m.0;
    balance(&mut a);
    hessenberg(&mut a);
    let mut values = hqr(&mut a).ok_or(Error::EigenNonConvergence { matrix: Box::new(*m) })?;
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let mut residuals = [0.0; 5];
    for (r, &lambda) in residuals.iter_mut().zip(&values) {
        *r = inverse_iteration_residual(m, lambda);
    }
    Ok(Spectrum { values, residuals })
}

/// Coefficients `[k1, …, k5]` of `det(τI − M) = τ⁵ + k1 τ⁴ + … + k5`, by the
/// Faddeev–LeVerrier recursion.
pub fn char_poly(m: &Matrix5) -> [f64; 5] {
    let mut c = [0.0; 5];
    let mut mk = Matrix5::identity();
    for k in 1..=N {
        let am = *m * mk;
        let ck = -am.trace() / k as f64;
        c[k - 1] = ck;
        mk = am;
        for i in 0..N {
            mk.0[i][i] += ck;
        }
    }
    c
}

/// Diagonal similarity by powers of two so rows and columns have comparable
/// norms.
fn balance(a: &mut [[f64; N]; N]) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..N {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..N {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
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
                for j in 0..N {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

fn hessenberg(a: &mut [[f64; N]; N]) {
    for k in 0..N - 2 {
        let norm: f64 = (k + 1..N).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; N];
        for i in k + 1..N {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        // A ← H A
        for j in 0..N {
            let dot: f64 = (k + 1..N).map(|i| v[i] * a[i][j]).sum();
            let f = 2.0 * dot / vn;
            for i in k + 1..N {
                a[i][j] -= f * v[i];
            }
        }
        // A ← A H
        for row in a.iter_mut() {
            let dot: f64 = (k + 1..N).map(|j| row[j] * v[j]).sum();
            let f = 2.0 * dot / vn;
            for j in k + 1..N {
                row[j] -= f * v[j];
            }
        }
        for i in k + 2..N {
            a[i][k] = 0.0;
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

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hqr(a: &mut [[f64; N]; N]) -> Option<[Complex64; N]> {
    let mut wr = [0.0; N];
    let mut wi = [0.0; N];
    let mut anorm = 0.0;
    for i in 0..N {
        for j in i.saturating_sub(1)..N {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = N as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let n = nn as usize;
            // Look for a negligible subdiagonal element.
            let mut l = n;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[n][n];
            if l == n {
                wr[n] = x + t;
                wi[n] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[n - 1][n - 1];
            let mut w = a[n][n - 1] * a[n - 1][n];
            if l == n - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[n - 1] = x + z;
                    wr[n] = if z != 0.0 { x - w / z } else { x + z };
                    wi[n - 1] = 0.0;
                    wi[n] = 0.0;
                } else {
                    wr[n - 1] = x + p;
                    wr[n] = x + p;
                    wi[n - 1] = -z;
                    wi[n] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return None;
            }
            if its == 10 || its == 20 || its == 40 {
                // Exceptional shift.
                t += x;
                for i in 0..=n {
                    a[i][i] -= x;
                }
                let s = a[n][n - 1].abs() + a[n - 1][n - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Two consecutive small subdiagonal elements.
            let mut m = n - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < n {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != n - 1 { a[k + 2][k - 1] } else { 0.0 };
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
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=n {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != n - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if n < k + 3 { n } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != n - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    let mut out = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        out[i] = Complex64::new(wr[i], wi[i]);
    }
    Some(out)
}

/// Solves `(M − λI) z = b` in complex arithmetic with partial pivoting.
/// Tiny pivots are replaced by `floor` so an exact eigenvalue shift still
/// yields a usable direction.
fn shifted_solve(m: &Matrix5, lambda: Complex64, b: &[Complex64; N], floor: f64) -> [Complex64; N] {
    let mut a = [[Complex64::new(0.0, 0.0); N]; N];
    for i in 0..N {
        for j in 0..N {
            a[i][j] = Complex64::new(m.0[i][j], 0.0);
        }
        a[i][i] -= lambda;
    }
    let mut x = *b;
    for k in 0..N {
        let piv = (k..N).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        a.swap(k, piv);
        x.swap(k, piv);
        if a[k][k].norm() < floor {
            a[k][k] = Complex64::new(floor, 0.0);
        }
        for i in k + 1..N {
            let f = a[i][k] / a[k][k];
            for j in k..N {
                let akj = a[k][j];
                a[i][j] -= f * akj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..N).rev() {
        let mut s = x[k];
        for j in k + 1..N {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    x
}

fn unit(z: &mut [Complex64; N]) -> bool {
    let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    for c in z.iter_mut() {
        *c /= n;
    }
    true
}

fn inverse_iteration_residual(m: &Matrix5, lambda: Complex64) -> f64 {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;
    // Fixed, non-symmetric start vector.
    let mut z = [
        Complex64::new(1.0, 0.3),
        Complex64::new(0.7, -0.2),
        Complex64::new(-0.4, 0.9),
        Complex64::new(0.5, 0.5),
        Complex64::new(-0.8, 0.1),
    ];
    unit(&mut z);
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let mut next = shifted_solve(m, lambda, &z, floor);
        if !unit(&mut next) {
            break;
        }
        z = next;
        let mut res = 0.0;
        for i in 0..N {
            let mut acc = -lambda * z[i];
            for j in 0..N {
                acc += m.0[i][j] * z[j];
            }
            res += acc.norm_sqr();
        }
        best = f64::min(best, res.sqrt());
    }
    best
}
