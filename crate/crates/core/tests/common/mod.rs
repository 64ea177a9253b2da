#![allow(dead_code)]

use pourcause::nade::{HeadKind, LayerJson, Mechanism, Mlp, Standardization, SIGMA_FLOOR};

pub fn layer(w: Vec<Vec<f64>>, b: Vec<f64>) -> LayerJson {
    LayerJson { w, b }
}

/// Raw head output that maps to scale `sigma`.
pub fn raw_sigma(sigma: f64) -> f64 {
    ((sigma - SIGMA_FLOOR).exp() - 1.0).ln()
}

/// Root Gaussian with exact mean `mu` and scale `sigma`.
pub fn gaussian_root(name: &str, mu: f64, sigma: f64) -> Mechanism {
    Mechanism {
        node: name.into(),
        parents: vec![],
        head: HeadKind::Gaussian,
        standardization: Standardization::identity(0),
        net: Mlp::from_layers(&[
            layer(vec![vec![0.0]], vec![0.0]),
            layer(vec![vec![0.0], vec![0.0]], vec![mu, raw_sigma(sigma)]),
        ])
        .unwrap(),
    }
}

/// One tanh unit: head output `a * tanh(k * x + c) + d` on the single parent.
pub fn one_unit(name: &str, parent: &str, head: HeadKind, (k, c): (f64, f64), out: Vec<(f64, f64)>) -> Mechanism {
    let (w, b): (Vec<_>, Vec<_>) = out.into_iter().map(|(a, d)| (vec![a], d)).unzip();
    Mechanism {
        node: name.into(),
        parents: vec![parent.into()],
        head,
        standardization: Standardization::identity(1),
        net: Mlp::from_layers(&[layer(vec![vec![k]], vec![c]), layer(w, b)]).unwrap(),
    }
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Trapezoid rule for `f` on `[lo, hi]` with `n` points.
pub fn trapezoid(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| f(lo + i as f64 * h) * if i == 0 || i == n - 1 { 0.5 } else { 1.0 }).sum::<f64>() * h
}
