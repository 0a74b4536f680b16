//! Independent re-implementation of the factor and class rules, written
//! straight from the rule tables over raw indicator numbers `x[1..=17]`.
//! Shares nothing with the library beyond the record accessors.

use cardioprev::intake::{HealthIndicators, Indicator};

/// `x[j]` for j in 1..=17; `x[0]` unused.
#[allow(clippy::needless_range_loop)]
pub fn raw(ind: &HealthIndicators) -> [f64; 18] {
    let mut x = [0.0; 18];
    for j in 1..=17 {
        x[j] = ind.get(Indicator::from_number(j).unwrap());
    }
    x
}

/// Returns `f[1..=13]` (index 0 unused).
pub fn factors(x: &[f64; 18]) -> [u8; 14] {
    let b = |v: f64| u8::from(v == 1.0);
    let gt = |v: f64, p: f64| u8::from(v > p);
    let mut f = [0u8; 14];
    f[1] = b(x[17]);
    f[2] = b(x[6]) | b(x[8]);
    f[3] = b(x[7]);
    f[4] = b(x[9]);
    f[5] = b(x[5]);
    // unanswered height leaves the factor at 0
    f[6] = if x[3] == 0.0 {
        0
    } else {
        u8::from(10_000.0 * x[4] / (x[3] * x[3]) >= 24.0)
    };
    f[7] = gt(x[10], 5.0);
    f[8] = gt(x[11], 3.0);
    f[9] = gt(x[12], 140.0);
    f[10] = gt(x[13], 7.0);
    f[11] = b(x[15]);
    f[12] = b(x[14]);
    f[13] = b(x[16]);
    f
}

/// Returns `class[1..=5]` (index 0 unused).
pub fn classes(f: &[u8; 14]) -> [u8; 6] {
    let max = |lo: usize, hi: usize| (lo..=hi).map(|i| f[i]).max().unwrap();
    let mut c = [0u8; 6];
    if max(1, 13) == 0 {
        c[1] = 1;
    }
    if max(11, 13) == 1 {
        c[2] = 1;
    }
    if max(6, 10) == 1 {
        c[3] = 1;
    }
    if max(2, 5) == 1 {
        c[4] = 1;
    }
    if f[1] == 1 {
        c[5] = 1;
    }
    c
}
