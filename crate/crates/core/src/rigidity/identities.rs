//! Pointwise algebraic identities behind the rigidity inequality.

/// Coefficient of the cross term in the φ-derivative identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossTermSign {
    /// sin(ω₁ − ω₂), the sign for which the identity holds.
    Corrected,
    /// sin(ω₂ − ω₁).
    AsPrinted,
}

fn sides(w1: f64, w2: f64, d1: f64, d2: f64, sign: CrossTermSign) -> (f64, f64) {
    let (s1, c1) = w1.sin_cos();
    let (s2, c2) = w2.sin_cos();
    let cross = match sign {
        CrossTermSign::Corrected => (w1 - w2).sin(),
        CrossTermSign::AsPrinted => (w2 - w1).sin(),
    };
    let lhs = (w1 - w2).cos() * (d1 + d2) / (c1 * c2)
        + cross * (c2 * s1 * d1 - c1 * s2 * d2) / (c1 * c1 * c2 * c2);
    let rhs = d1 / (c1 * c1) + d2 / (c2 * c2);
    (lhs, rhs)
}

/// |LHS − RHS| of
///
/// cos(ω₁−ω₂)(ω₁′+ω₂′)/(cos ω₁ cos ω₂)
///   + sin(ω₁−ω₂)(cos ω₂ sin ω₁ ω₁′ − cos ω₁ sin ω₂ ω₂′)/(cos²ω₁ cos²ω₂)
///   = ω₁′/cos²ω₁ + ω₂′/cos²ω₂,
///
/// where primes are φ-derivatives. Requires ω₁, ω₂ ∈ (−π/2, π/2).
pub fn lemma_phi_identity_residual(w1: f64, w2: f64, d1: f64, d2: f64) -> f64 {
    lemma_phi_identity_residual_with(w1, w2, d1, d2, CrossTermSign::Corrected)
}

pub fn lemma_phi_identity_residual_with(
    w1: f64,
    w2: f64,
    d1: f64,
    d2: f64,
    sign: CrossTermSign,
) -> f64 {
    let (l, r) = sides(w1, w2, d1, d2, sign);
    (l - r).abs()
}

/// (n₂/cos ω₂)² + (n₁/cos ω₁)² − 2 cos(ω₁−ω₂) n₁n₂/(cos ω₁ cos ω₂).
pub fn rnn_bracket(n1: f64, n2: f64, w1: f64, w2: f64) -> f64 {
    let a = n1 / w1.cos();
    let b = n2 / w2.cos();
    a * a + b * b - 2.0 * (w1 - w2).cos() * a * b
}

/// (n₂/cos ω₂ − n₁/cos ω₁)², the integrand of the inequality's left side.
pub fn squared_difference(n1: f64, n2: f64, w1: f64, w2: f64) -> f64 {
    let d = n2 / w2.cos() - n1 / w1.cos();
    d * d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        assert_eq!(lemma_phi_identity_residual(0.3, 0.3, 2.0, -5.0), 0.0);
        assert_eq!(lemma_phi_identity_residual(0.3, -1.1, 0.0, 0.0), 0.0);
        assert_eq!(rnn_bracket(1.3, 1.3, 0.4, 0.4), 0.0);
        let w: f64 = 0.7;
        let v = rnn_bracket(1.0, 1.5, w, w);
        assert!((v - 0.25 / (w.cos() * w.cos())).abs() < 1e-14);
    }

    #[test]
    fn printed_sign_fails_off_diagonal() {
        let r = lemma_phi_identity_residual_with(0.5, -0.3, 1.0, 2.0, CrossTermSign::AsPrinted);
        assert!(r > 0.1);
        assert!(lemma_phi_identity_residual(0.5, -0.3, 1.0, 2.0) < 1e-14);
    }
}
