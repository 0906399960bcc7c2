//! Independent reference implementations, written without reusing library code.

use std::f64::consts::PI;

/// Average ranks by counting: rank_i = 1 + #{x_j < x_i} + (#{x_j == x_i} - 1) / 2.
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            let less = x.iter().filter(|&&v| v < xi).count() as f64;
            let equal = x.iter().filter(|&&v| v == xi).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson correlation via the sum-of-products formula.
pub fn pearson_textbook(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    pearson_textbook(&ranks_by_counting(a), &ranks_by_counting(b))
}

/// Exact Wilcoxon signed-rank test by visiting all 2^n sign patterns of the
/// nonzero differences `b - a`. Returns (W, p) with W = min(W+, W-) and
/// p = #{patterns with min(S, T - S) <= W} / 2^n.
pub fn wilcoxon_enumeration(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).filter(|v| *v != 0.0).collect();
    let n = d.len();
    assert!(n <= 20, "enumeration oracle limited to n <= 20");
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let r = ranks_by_counting(&abs);
    let total: f64 = r.iter().sum();
    let w_plus: f64 = r.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let w = w_plus.min(total - w_plus);
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
        if s.min(total - s) <= w + 1e-9 {
            hits += 1;
        }
    }
    (w, hits as f64 / (1u64 << n) as f64)
}

/// Two-sided Student-t p-value by quadrature. With x = sqrt(df) tan(theta)
/// the density becomes proportional to cos(theta)^(df - 1) on (-pi/2, pi/2),
/// so p = 2 * int_{theta0}^{pi/2} cos^(df-1) / int_{-pi/2}^{pi/2} cos^(df-1).
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    let theta0 = (t.abs() / df.sqrt()).atan();
    let f = |th: f64| th.cos().powf(df - 1.0);
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    let tail = simpson(theta0, PI / 2.0, 200_000);
    let total = 2.0 * simpson(0.0, PI / 2.0, 200_000);
    2.0 * tail / total
}

/// Plain trapezoid of |q| on a periodic grid (mL when q is mL/s, rr in ms).
pub fn periodic_trapezoid_lobes(q: &[f64], rr: f64) -> (f64, f64) {
    let n = q.len();
    let dt = rr / 1000.0 / n as f64;
    let mut plus = 0.0;
    let mut minus = 0.0;
    for k in 0..n {
        let (a, b) = (q[k], q[(k + 1) % n]);
        plus += 0.5 * (a.max(0.0) + b.max(0.0)) * dt;
        minus += 0.5 * ((-a).max(0.0) + (-b).max(0.0)) * dt;
    }
    (plus, minus)
}
