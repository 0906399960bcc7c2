//! Small 1-D signal helpers shared by the gating stages.

/// Centered moving average over `window` samples (forced odd), truncated at the edges.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let half = window.max(1) / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Window length in samples for a duration, rounded and forced odd.
pub fn window_samples(duration_ms: f64, dt_ms: f64) -> usize {
    let w = (duration_ms / dt_ms).round().max(1.0) as usize;
    w | 1
}

/// Linear-interpolated percentile, `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let pos = p / 100.0 * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= n {
        v[n - 1]
    } else {
        v[i] + frac * (v[i + 1] - v[i])
    }
}

pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Indices of local maxima; a plateau reports its first sample.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of the peak at `i`.
pub fn prominence(x: &[f64], i: usize) -> f64 {
    let peak = x[i];
    let mut left_min = peak;
    for j in (0..i).rev() {
        if x[j] > peak {
            break;
        }
        left_min = left_min.min(x[j]);
    }
    let mut right_min = peak;
    for &v in &x[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Robust white-noise sd estimate from second differences.
pub fn noise_floor(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let d2: Vec<f64> = x
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .collect();
    median(&d2) / (0.674_489_75 * 6f64.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_constant_and_edges() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = moving_average(&x, 3);
        assert_eq!(m, vec![1.5, 2.0, 3.0, 4.0, 4.5]);
    }

    #[test]
    fn percentiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 75.0), 3.25);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn maxima_and_prominence() {
        let x = [0.0, 2.0, 1.0, 1.0, 3.0, 3.0, 0.0, 1.0, 0.5];
        assert_eq!(local_maxima(&x), vec![1, 4, 7]);
        assert_eq!(prominence(&x, 4), 3.0);
        assert_eq!(prominence(&x, 1), 1.0);
        assert_eq!(prominence(&x, 7), 0.5);
    }

    #[test]
    fn window_is_odd() {
        assert_eq!(window_samples(2000.0, 88.0), 23);
        assert_eq!(window_samples(500.0, 10.0), 51);
        assert_eq!(window_samples(1.0, 88.0), 1);
    }
}
