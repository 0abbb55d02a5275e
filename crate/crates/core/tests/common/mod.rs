//! Exact-arithmetic and quadrature oracles shared by the integration tests.
#![allow(dead_code)]

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub mod levels;
pub mod waves;

thread_local! {
    static FACTORIALS: Vec<BigInt> = (1..=200i64)
        .scan(BigInt::one(), |acc, k| {
            *acc *= BigInt::from(k);
            Some(acc.clone())
        })
        .fold(vec![BigInt::one()], |mut v, f| {
            v.push(f);
            v
        });
}

fn fact(n: i64) -> BigInt {
    FACTORIALS.with(|f| f[n as usize].clone())
}

fn ratio(num: &[i64], den: &[i64]) -> BigRational {
    let n = num.iter().fold(BigInt::one(), |a, &k| a * fact(k));
    let d = den.iter().fold(BigInt::one(), |a, &k| a * fact(k));
    BigRational::new(n, d)
}

/// A number of the form s·√p with s, p rational and p ≥ 0.
#[derive(Clone, Debug)]
pub struct Surd {
    pub s: BigRational,
    pub p: BigRational,
}

impl Surd {
    pub fn zero() -> Self {
        Surd { s: BigRational::zero(), p: BigRational::one() }
    }

    pub fn to_f64(&self) -> f64 {
        self.s.to_f64().unwrap() * self.p.to_f64().unwrap().sqrt()
    }
}

fn triangle2(a: i64, b: i64, c: i64) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Δ(abc)² for doubled arguments.
fn delta2(a: i64, b: i64, c: i64) -> BigRational {
    ratio(&[(a + b - c) / 2, (a - b + c) / 2, (-a + b + c) / 2], &[(a + b + c) / 2 + 1])
}

fn sign(k: i64) -> BigRational {
    if k.rem_euclid(2) == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// 3j symbol with doubled arguments, exactly.
pub fn three_j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> Surd {
    let proj = |j: i64, m: i64| m.abs() <= j && (j - m) % 2 == 0;
    if !triangle2(j1, j2, j3) || m1 + m2 + m3 != 0 || !proj(j1, m1) || !proj(j2, m2) || !proj(j3, m3) {
        return Surd::zero();
    }
    let p = delta2(j1, j2, j3)
        * ratio(&[(j1 + m1) / 2, (j1 - m1) / 2, (j2 + m2) / 2, (j2 - m2) / 2, (j3 + m3) / 2, (j3 - m3) / 2], &[]);
    let mut s = BigRational::zero();
    for k in 0..=(j1 + j2 + j3) {
        let den = [k, (j3 - j2 + m1) / 2 + k, (j3 - j1 - m2) / 2 + k, (j1 + j2 - j3) / 2 - k, (j1 - m1) / 2 - k, (j2 + m2) / 2 - k];
        if den.iter().any(|&d| d < 0) {
            continue;
        }
        s += sign(k) * ratio(&[], &den);
    }
    Surd { s: sign((j1 - j2 - m3) / 2) * s, p }
}

/// Racah sum of a 6j symbol without its Δ factors.
fn six_j_sum(a: [i64; 6]) -> BigRational {
    let [j1, j2, j3, j4, j5, j6] = a;
    let t = [(j1 + j2 + j3) / 2, (j1 + j5 + j6) / 2, (j4 + j2 + j6) / 2, (j4 + j5 + j3) / 2];
    let u = [(j1 + j2 + j4 + j5) / 2, (j2 + j3 + j5 + j6) / 2, (j3 + j1 + j6 + j4) / 2];
    let mut s = BigRational::zero();
    for k in *t.iter().max().unwrap()..=*u.iter().min().unwrap() {
        let den: Vec<i64> = t.iter().map(|x| k - x).chain(u.iter().map(|x| x - k)).collect();
        s += sign(k) * ratio(&[k + 1], &den);
    }
    s
}

fn six_j_triads(a: [i64; 6]) -> [(i64, i64, i64); 4] {
    let [j1, j2, j3, j4, j5, j6] = a;
    [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)]
}

/// 6j symbol with doubled arguments, exactly.
pub fn six_j(a: [i64; 6]) -> Surd {
    let triads = six_j_triads(a);
    if !triads.iter().all(|&(x, y, z)| triangle2(x, y, z)) {
        return Surd::zero();
    }
    let p = triads.iter().fold(BigRational::one(), |acc, &(x, y, z)| acc * delta2(x, y, z));
    Surd { s: six_j_sum(a), p }
}

/// 9j symbol with doubled arguments, exactly. The Δ factors that depend on
/// the summation index appear squared and are absorbed into the rational part.
pub fn nine_j(a: [i64; 9]) -> Surd {
    let [j1, j2, j3, j4, j5, j6, j7, j8, j9] = a;
    let rows = [(j1, j2, j3), (j4, j5, j6), (j7, j8, j9), (j1, j4, j7), (j2, j5, j8), (j3, j6, j9)];
    if !rows.iter().all(|&(x, y, z)| triangle2(x, y, z)) {
        return Surd::zero();
    }
    let p = rows.iter().fold(BigRational::one(), |acc, &(x, y, z)| acc * delta2(x, y, z));
    let mut s = BigRational::zero();
    let lo = (j1 - j9).abs().max((j4 - j8).abs()).max((j2 - j6).abs());
    let hi = (j1 + j9).min(j4 + j8).min(j2 + j6);
    let mut x = lo;
    while x <= hi {
        let w = six_j_sum([j1, j4, j7, j8, j9, x]) * six_j_sum([j2, j5, j8, j4, x, j6]) * six_j_sum([j3, j6, j9, x, j1, j2]);
        let d = delta2(j1, j9, x) * delta2(j8, j4, x) * delta2(j2, x, j6);
        s += sign(x) * BigRational::from_integer(BigInt::from(x + 1)) * d * w;
        x += 2;
    }
    Surd { s, p }
}

pub fn is_zero(s: &Surd) -> bool {
    s.s.is_zero() || s.p.is_zero() || s.s.abs().is_zero()
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Normalized θ part of Y_lm (Condon–Shortley phase) at x = cos θ, such that
/// Y_lm = Θ_lm(θ) e^{imφ} / √(2π).
pub fn theta_lm(l: i64, m: i64, x: f64) -> f64 {
    if m < 0 {
        let v = theta_lm(l, -m, x);
        return if m % 2 == 0 { v } else { -v };
    }
    if m > l {
        return 0.0;
    }
    // P_m^m then upward in l
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    let p = if l == m {
        pmm
    } else {
        let mut a = pmm;
        let mut b = x * (2 * m + 1) as f64 * pmm;
        for ll in (m + 2)..=l {
            let c = ((2 * ll - 1) as f64 * x * b - (ll + m - 1) as f64 * a) / (ll - m) as f64;
            a = b;
            b = c;
        }
        b
    };
    let mut norm = (2 * l + 1) as f64 / 2.0;
    for k in (l - m + 1)..=(l + m) {
        norm /= k as f64;
    }
    norm.sqrt() * p
}
