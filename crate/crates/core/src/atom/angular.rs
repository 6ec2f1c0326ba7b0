//! Wigner 3j / 6j symbols and Clebsch-Gordan coefficients.
//!
//! Angular momenta are passed doubled (`2j`, `2m`) so half-integers stay exact.
//! The values needed here are tiny (j ≤ 4), so the Racah sums are evaluated
//! directly in f64.

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Returns `x/2` if `x` is even, otherwise `None`.
fn half(x: i32) -> Option<i32> {
    (x % 2 == 0).then_some(x / 2)
}

fn triangle_ok(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Δ(abc) with doubled arguments.
fn triangle_coeff(a: i32, b: i32, c: i32) -> f64 {
    let s = |x: i32| factorial(half(x).expect("triangle parity"));
    (s(a + b - c) * s(a - b + c) * s(-a + b + c) / s(a + b + c + 2)).sqrt()
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3), all arguments doubled.
pub fn wigner_3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| half(x).expect("3j parity");
    let pre = triangle_coeff(j1, j2, j3)
        * (factorial(h(j1 + m1))
            * factorial(h(j1 - m1))
            * factorial(h(j2 + m2))
            * factorial(h(j2 - m2))
            * factorial(h(j3 + m3))
            * factorial(h(j3 - m3)))
        .sqrt();

    let t_min = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let t_max = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let denom = factorial(t)
            * factorial(h(j3 - j2 + m1) + t)
            * factorial(h(j3 - j1 - m2) + t)
            * factorial(h(j1 + j2 - j3) - t)
            * factorial(h(j1 - m1) - t)
            * factorial(h(j2 + m2) - t);
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    let phase = h(j1 - j2 - m3);
    let phase = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}, all arguments doubled.
pub fn wigner_6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    if !triangle_ok(j1, j2, j3)
        || !triangle_ok(j1, j5, j6)
        || !triangle_ok(j4, j2, j6)
        || !triangle_ok(j4, j5, j3)
    {
        return 0.0;
    }
    let h = |x: i32| half(x).expect("6j parity");
    let pre = triangle_coeff(j1, j2, j3)
        * triangle_coeff(j1, j5, j6)
        * triangle_coeff(j4, j2, j6)
        * triangle_coeff(j4, j5, j3);

    let a = [
        h(j1 + j2 + j3),
        h(j1 + j5 + j6),
        h(j4 + j2 + j6),
        h(j4 + j5 + j3),
    ];
    let b = [h(j1 + j2 + j4 + j5), h(j2 + j3 + j5 + j6), h(j3 + j1 + j6 + j4)];
    let t_min = *a.iter().max().unwrap();
    let t_max = *b.iter().min().unwrap();
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let mut denom = 1.0;
        for &ai in &a {
            denom *= factorial(t - ai);
        }
        for &bi in &b {
            denom *= factorial(bi - t);
        }
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * factorial(t + 1) / denom;
    }
    pre * sum
}

/// Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩, all arguments doubled.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let three_j = wigner_3j(j1, j2, j, m1, m2, -m);
    if three_j == 0.0 {
        return 0.0;
    }
    let phase = half(j1 - j2 + m).expect("CG parity");
    let phase = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * ((j + 1) as f64).sqrt() * three_j
}
