use std::sync::OnceLock;

use super::HalfInt;

const FACTORIAL_TABLE_LEN: usize = 171;

fn factorial_table() -> &'static [f64; FACTORIAL_TABLE_LEN] {
    static TABLE: OnceLock<[f64; FACTORIAL_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [1.0; FACTORIAL_TABLE_LEN];
        for n in 1..FACTORIAL_TABLE_LEN {
            table[n] = table[n - 1] * n as f64;
        }
        table
    })
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![0.0; 4096];
        for n in 1..table.len() {
            table[n] = table[n - 1] + (n as f64).ln();
        }
        table
    })
}

/// Ratio of products of factorials, Π num! / Π den!.
///
/// Uses exact-as-f64 factorials while every argument fits the table and
/// falls back to log-factorials for large arguments.
fn factorial_ratio(num: &[i32], den: &[i32]) -> f64 {
    let small = num.iter().chain(den).all(|&n| (n as usize) < FACTORIAL_TABLE_LEN);
    if small {
        let table = factorial_table();
        let mut value = 1.0;
        // interleave to keep intermediate magnitudes moderate
        let longest = num.len().max(den.len());
        for i in 0..longest {
            if let Some(&n) = num.get(i) {
                value *= table[n as usize];
            }
            if let Some(&d) = den.get(i) {
                value /= table[d as usize];
            }
        }
        value
    } else {
        let table = ln_factorial_table();
        let ln: f64 = num.iter().map(|&n| table[n as usize]).sum::<f64>()
            - den.iter().map(|&d| table[d as usize]).sum::<f64>();
        ln.exp()
    }
}

fn phase(twice_exponent: i32) -> f64 {
    debug_assert!(twice_exponent % 2 == 0);
    if (twice_exponent / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Triangle rule |a−b| ≤ c ≤ a+b together with integer a+b+c.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Δ(abc)² as the factorial ratio (a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!.
fn delta_args(a: i32, b: i32, c: i32) -> ([i32; 3], i32) {
    ([(a + b - c) / 2, (a - b + c) / 2, (-a + b + c) / 2], (a + b + c) / 2 + 1)
}

fn valid_projection(j: HalfInt, m: HalfInt) -> bool {
    m.twice().abs() <= j.twice() && (j.twice() - m.twice()) % 2 == 0
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) from the Racah sum.
///
/// Selection-rule violations (triangle, Σm ≠ 0, |m| > j) give 0.
pub fn wigner3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    if !triangle(j1, j2, j3)
        || m1.twice() + m2.twice() + m3.twice() != 0
        || !valid_projection(j1, m1)
        || !valid_projection(j2, m2)
        || !valid_projection(j3, m3)
    {
        return 0.0;
    }
    let (tj1, tj2, tj3) = (j1.twice(), j2.twice(), j3.twice());
    let (tm1, tm2, tm3) = (m1.twice(), m2.twice(), m3.twice());

    // integer combinations entering the sum
    let a1 = (tj3 - tj2 + tm1) / 2;
    let a2 = (tj3 - tj1 - tm2) / 2;
    let b1 = (tj1 + tj2 - tj3) / 2;
    let b2 = (tj1 - tm1) / 2;
    let b3 = (tj2 + tm2) / 2;

    let k_min = 0.max(-a1).max(-a2);
    let k_max = b1.min(b2).min(b3);
    if k_min > k_max {
        return 0.0;
    }

    let (delta_num, delta_den) = delta_args(tj1, tj2, tj3);
    let prefactor_sq = factorial_ratio(
        &[
            delta_num[0],
            delta_num[1],
            delta_num[2],
            (tj1 + tm1) / 2,
            (tj1 - tm1) / 2,
            (tj2 + tm2) / 2,
            (tj2 - tm2) / 2,
            (tj3 + tm3) / 2,
            (tj3 - tm3) / 2,
        ],
        &[delta_den],
    );

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let term = factorial_ratio(&[], &[k, a1 + k, a2 + k, b1 - k, b2 - k, b3 - k]);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    phase(tj1 - tj2 - tm3) * prefactor_sq.sqrt() * sum
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6} from the Racah formula.
pub fn wigner6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let t = |x: HalfInt| x.twice();
    let sums = triads.map(|(a, b, c)| (t(a) + t(b) + t(c)) / 2);
    let bounds = [
        (t(j1) + t(j2) + t(j4) + t(j5)) / 2,
        (t(j2) + t(j3) + t(j5) + t(j6)) / 2,
        (t(j3) + t(j1) + t(j6) + t(j4)) / 2,
    ];
    let k_min = *sums.iter().max().unwrap();
    let k_max = *bounds.iter().min().unwrap();
    if k_min > k_max {
        return 0.0;
    }

    let mut prefactor_sq = 1.0;
    for (a, b, c) in triads {
        let (num, den) = delta_args(t(a), t(b), t(c));
        prefactor_sq *= factorial_ratio(&num, &[den]);
    }

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let term = factorial_ratio(
            &[k + 1],
            &[
                k - sums[0],
                k - sums[1],
                k - sums[2],
                k - sums[3],
                bounds[0] - k,
                bounds[1] - k,
                bounds[2] - k,
            ],
        );
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    prefactor_sq.sqrt() * sum
}

/// Wigner 9j symbol
/// {j1 j2 j3;
///  j4 j5 j6;
///  j7 j8 j9}
/// as a sum over products of three 6j symbols.
#[allow(clippy::too_many_arguments)]
pub fn wigner9j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
    j7: HalfInt,
    j8: HalfInt,
    j9: HalfInt,
) -> f64 {
    let rows = [(j1, j2, j3), (j4, j5, j6), (j7, j8, j9)];
    let cols = [(j1, j4, j7), (j2, j5, j8), (j3, j6, j9)];
    if !rows.iter().chain(&cols).all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let t = |x: HalfInt| x.twice();
    let x_min = (t(j1) - t(j9)).abs().max((t(j4) - t(j8)).abs()).max((t(j2) - t(j6)).abs());
    let x_max = (t(j1) + t(j9)).min(t(j4) + t(j8)).min(t(j2) + t(j6));

    let mut sum = 0.0;
    let mut x = x_min;
    while x <= x_max {
        let hx = HalfInt::new(x);
        let product = wigner6j(j1, j4, j7, j8, j9, hx)
            * wigner6j(j2, j5, j8, j4, hx, j6)
            * wigner6j(j3, j6, j9, hx, j1, j2);
        // (−1)^{2x} is −1 for half-integer x
        let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (x as f64 + 1.0) * product;
        x += 2;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(j: i32) -> HalfInt {
        HalfInt::int(j)
    }

    #[test]
    fn three_j_examples() {
        assert_eq!(wigner3j(h(0), h(0), h(0), h(0), h(0), h(0)), 1.0);
        let v = wigner3j(h(1), h(1), h(0), h(0), h(0), h(0));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let v = wigner3j(h(2), h(2), h(2), h(0), h(0), h(0));
        assert!((v + (2.0f64 / 35.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_j_selection_rules() {
        assert_eq!(wigner3j(h(1), h(1), h(3), h(0), h(0), h(0)), 0.0);
        assert_eq!(wigner3j(h(1), h(1), h(1), h(1), h(0), h(0)), 0.0);
        assert_eq!(wigner3j(h(1), h(1), h(1), h(0), h(0), h(0)), 0.0);
        assert_eq!(wigner3j(h(1), h(1), h(2), h(2), h(-2), h(0)), 0.0);
    }

    #[test]
    fn half_integer_three_j() {
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/√6
        let half = HalfInt::new(1);
        let v = wigner3j(half, half, h(1), half, HalfInt::new(-1), h(0));
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn six_j_examples() {
        let v = wigner6j(h(1), h(1), h(1), h(0), h(1), h(1));
        assert!((v + 1.0 / 3.0).abs() < 1e-15);
        let v = wigner6j(h(1), h(1), h(1), h(1), h(1), h(1));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(wigner6j(h(1), h(2), h(4), h(2), h(1), h(2)), 0.0);
    }

    #[test]
    fn nine_j_with_zero_reduces_to_six_j() {
        // {a b e; c d e; f f 0} = (−1)^{b+c+e+f} {a b e; d c f} / √((2e+1)(2f+1))
        for (a, b, c, d, e, f) in [(1, 2, 2, 1, 2, 2), (2, 2, 1, 3, 3, 3), (1, 1, 1, 1, 1, 0), (2, 3, 4, 3, 2, 2)] {
            let nine = wigner9j(h(a), h(b), h(e), h(c), h(d), h(e), h(f), h(f), h(0));
            let sign = if (b + c + e + f) % 2 == 0 { 1.0 } else { -1.0 };
            let six = sign * wigner6j(h(a), h(b), h(e), h(d), h(c), h(f))
                / (((2 * e + 1) * (2 * f + 1)) as f64).sqrt();
            assert!((nine - six).abs() < 1e-14, "{nine} vs {six}");
        }
    }

    #[test]
    fn nine_j_row_triangle_violation() {
        assert_eq!(wigner9j(h(1), h(1), h(3), h(1), h(1), h(2), h(2), h(2), h(4)), 0.0);
    }
}
