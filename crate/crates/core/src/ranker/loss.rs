//! RankNet pairwise loss.

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `L = ln(1 + exp(−σ(s_pos − s_neg)))`.
pub fn ranknet_loss(s_pos: f64, s_neg: f64, sigma: f64) -> f64 {
    softplus(-sigma * (s_pos - s_neg))
}

/// `∂L/∂s_pos = −σ / (1 + exp(σ(s_pos − s_neg)))`; `∂L/∂s_neg` is its
/// negation.
pub fn ranknet_grad(s_pos: f64, s_neg: f64, sigma: f64) -> f64 {
    let x = sigma * (s_pos - s_neg);
    // −σ·sigmoid(−x), evaluated on the stable branch
    let sig = if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    };
    -sigma * sig
}
