use super::SvmHyperparams;

/// Smoothed hinge loss of a signed margin `theta`: linear with slope
/// `-gamma` below `1 - mu gamma`, quadratic `(1 - theta)^2 / (2 mu)` up to 1,
/// and zero beyond.
pub fn psi(theta: f64, hp: &SvmHyperparams) -> f64 {
    let (gamma, mu) = (hp.gamma, hp.mu);
    if theta >= 1.0 {
        0.0
    } else if theta >= hp.linear_breakpoint() {
        (1.0 - theta).powi(2) / (2.0 * mu)
    } else {
        -0.5 * mu * gamma * gamma + gamma * (1.0 - theta)
    }
}

pub fn psi_prime(theta: f64, hp: &SvmHyperparams) -> f64 {
    if theta >= 1.0 {
        0.0
    } else if theta >= hp.linear_breakpoint() {
        (theta - 1.0) / hp.mu
    } else {
        -hp.gamma
    }
}
