//! Gamma function via the Lanczos approximation (g = 7, 9 terms), with
//! reflection for the left half-line. Relative error is far below 1e-10
//! over the range needed by the normalization constants.

use std::f64::consts::PI;

// Coefficients from the GNU Scientific Library's Lanczos expansion.
const LANCZOS_P: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma(x) for real x excluding the poles 0, -1, -2, ...
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut t = LANCZOS_P[0];
        for (i, p) in LANCZOS_P.iter().enumerate().skip(1) {
            t += p / (x + i as f64);
        }
        let w = x + 7.5;
        (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // anchors: integers, half-integers, and two table values used by the
        // sharp operator identities elsewhere in the test suite
        let cases = [
            (1.0, 1.0),
            (2.0, 1.0),
            (3.0, 2.0),
            (6.0, 120.0),
            (0.5, PI.sqrt()),
            (1.5, 0.5 * PI.sqrt()),
            (2.5, 0.75 * PI.sqrt()),
            (1.8, 0.9313837709802427),
            (1.2, 0.9181687423997607),
            (1.7, 0.9086387328532904),
            (1.3, 0.8974706963062772),
        ];
        for (x, want) in cases {
            let got = gamma(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs(),
                "Gamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn reflection_negative_half() {
        // Gamma(-1/2) = -2 sqrt(pi)
        let got = gamma(-0.5);
        let want = -2.0 * PI.sqrt();
        assert!((got - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn recurrence_property() {
        for &x in &[0.1, 0.37, 0.9, 1.6, 3.3, 7.7] {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "x={x}");
        }
    }
}
