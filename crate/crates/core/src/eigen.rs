//! Dense eigenvalue routines: cyclic Jacobi for symmetric matrices and
//! balancing + Hessenberg reduction + Francis double-shift QR for general real ones.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, ascending. Only the upper triangle's symmetry is assumed.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape { what: "symmetric matrix columns", got: a.ncols(), expected: n });
    }
    let mut m = a.clone();
    let scale = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_sweeps = 100;
    let off_norm = |m: &DMatrix<f64>| {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        f64::sqrt(off)
    };
    let diagonal = |m: &DMatrix<f64>| {
        let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    };
    for _ in 0..max_sweeps {
        if off_norm(&m) <= 1e-3 * f64::EPSILON * scale {
            return Ok(diagonal(&m));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (kp, kq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * kp - s * kq;
                    m[(k, q)] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * pk - s * qk;
                    m[(q, k)] = s * pk + c * qk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
    }
    if off_norm(&m) <= f64::EPSILON * scale {
        return Ok(diagonal(&m));
    }
    Err(Error::NoConvergence { size: n, iterations: max_sweeps })
}

/// Radix-2 diagonal similarity that evens out row and column norms.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| a[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(k + 1 + r, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= f * vr;
            }
        }
        for i in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(i, k + 1 + r)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vr) in v.iter().enumerate() {
                a[(i, k + 1 + r)] -= f * vr;
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
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

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let cap = 100 * n.max(1);
    let mut total = 0usize;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                break;
            }
            if total >= cap {
                return Err(Error::NoConvergence { size: n, iterations: total });
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;
            let mut m = nu - 2;
            let (mut p, mut q, mut r, mut z);
            loop {
                z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k + 1 != nu { a[(k + 2, k - 1)] } else { 0.0 };
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
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k + 1 != nu {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let mmin = nu.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k + 1 != nu {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex::new(re, im)).collect())
}

/// All eigenvalues of a general real square matrix, sorted by real part then imaginary part.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape { what: "square matrix columns", got: a.ncols(), expected: n });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence { size: n, iterations: 0 });
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut eig = hqr(&mut h)?;
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn matched(ours: &[Complex<f64>], reference: &[Complex<f64>], tol: f64) -> bool {
        let mut used = vec![false; reference.len()];
        ours.iter().all(|z| {
            let best = (0..reference.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| (reference[a] - z).norm().total_cmp(&(reference[b] - z).norm()));
            match best {
                Some(j) if (reference[j] - z).norm() <= tol => {
                    used[j] = true;
                    true
                }
                _ => false,
            }
        })
    }

    #[test]
    fn jacobi_on_known_matrices() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(symmetric_eigenvalues(&id).unwrap(), vec![1.0; 3]);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = symmetric_eigenvalues(&a).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_matches_library_on_random_symmetric() {
        for seed in 0..5 {
            let r = random(7, seed);
            let s = &r + r.transpose();
            let mut reference: Vec<f64> = s.clone().symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let ours = symmetric_eigenvalues(&s).unwrap();
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn qr_handles_rotation_and_triangular() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = general_eigenvalues(&rot).unwrap();
        assert!((e[0] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        assert!((e[1] - Complex::new(0.0, 1.0)).norm() < 1e-14);

        let tri = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 4.0, 0.0, -1.0, 5.0, 0.0, 0.0, 2.0]);
        let e: Vec<f64> = general_eigenvalues(&tri).unwrap().iter().map(|z| z.re).collect();
        assert_eq!(e, vec![-1.0, 2.0, 3.0]);
        assert_eq!(general_eigenvalues(&DMatrix::from_element(1, 1, 7.0)).unwrap()[0].re, 7.0);
    }

    #[test]
    fn qr_matches_library_on_random_general() {
        for (n, seed) in [(5, 1), (12, 2), (30, 3), (60, 4)] {
            let a = random(n, seed);
            let reference: Vec<Complex<f64>> = a.clone().complex_eigenvalues().iter().copied().collect();
            let ours = general_eigenvalues(&a).unwrap();
            assert_eq!(ours.len(), n);
            assert!(matched(&ours, &reference, 1e-9), "n = {n}");
        }
    }

    #[test]
    fn badly_scaled_matrix_converges() {
        let mut a = random(20, 9);
        for i in 0..20 {
            for j in 0..20 {
                a[(i, j)] *= 10f64.powi(i as i32 - j as i32);
            }
        }
        let ours = general_eigenvalues(&a).unwrap();
        let trace: f64 = (0..20).map(|i| a[(i, i)]).sum();
        let sum: f64 = ours.iter().map(|z| z.re).sum();
        assert!((trace - sum).abs() < 1e-9 * trace.abs().max(1.0));
    }
}
