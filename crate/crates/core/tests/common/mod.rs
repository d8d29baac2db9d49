//! Oracles shared by the integration tests.
#![allow(dead_code)]

/// Max absolute difference relative to the largest magnitude in `b`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Sweeps window starts on a grid of step `t1 / 100` plus the points just
/// past every segment end, where coverage is most fragile.
pub fn covers_all(starts: &[f64], t1: f64, t2: f64, t3: f64) -> bool {
    let eps = 1e-9 * t3.max(1.0);
    let inside = |q: f64| starts.iter().any(|&s| s <= q + eps && q + t1 <= s + t2 + eps);
    let last = t3 - t1;
    let steps = (last / (t1 / 100.0)).ceil() as usize;
    let grid = (0..=steps).map(|i| (i as f64 * t1 / 100.0).min(last));
    let critical = starts
        .iter()
        .flat_map(|&s| [s + t2 - t1 + 2.0 * eps, s - 2.0 * eps])
        .filter(|&q| (0.0..=last).contains(&q));
    grid.chain(critical).chain([last]).all(inside)
}

/// Smallest `n` for which `n` evenly spaced segments of length `t2` cover
/// every window, found by trying `n = 1, 2, ...`.
pub fn minimal_uniform_count(t1: f64, t2: f64, t3: f64) -> usize {
    (1..)
        .find(|&n| {
            let starts: Vec<f64> = if n == 1 {
                vec![0.0]
            } else {
                (0..n).map(|i| i as f64 * (t3 - t2) / (n - 1) as f64).collect()
            };
            (n > 1 || t2 >= t3) && covers_all(&starts, t1, t2, t3)
        })
        .unwrap()
}
