//! Quadrature primitives: Gauss-Legendre nodes, panel integration and an
//! adaptive Gauss-Kronrod (G7,K15) rule for cumulative moments.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes by Newton iteration on the Legendre polynomial; standard
    /// Golub-Welsch-free construction, accurate to machine precision for the
    /// orders used here (<= 128).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Integrate `f` over [a, b] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over a list of contiguous panel edges with a fixed rule,
/// returning the value and a crude error estimate (difference against the
/// half-order rule on the same panels).
pub fn panels_integrate<F: FnMut(f64) -> f64>(
    edges: &[f64],
    rule: &GaussRule,
    half: &GaussRule,
    f: &mut F,
) -> (f64, f64) {
    let mut total = 0.0;
    let mut err = 0.0;
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b <= a {
            continue;
        }
        let hi = rule.integrate(a, b, &mut *f);
        let lo = half.integrate(a, b, &mut *f);
        total += hi;
        err += (hi - lo).abs();
    }
    (total, err)
}

/// Edges of `n` log-spaced panels covering [a, b], 0 < a < b.
pub fn log_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 1);
    let la = a.ln();
    let lb = b.ln();
    let mut edges = Vec::with_capacity(n + 1);
    for i in 0..=n {
        edges.push((la + (lb - la) * i as f64 / n as f64).exp());
    }
    edges[0] = a;
    edges[n] = b;
    edges
}

/// Edges of `n` linear panels covering [a, b].
pub fn lin_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(b > a && n >= 1);
    (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .collect()
}

/// Panels graded geometrically toward `sing` on one side: covers the interval
/// between `near` (distance `d_min` from the singular point) and `far`,
/// with edges at distances d_min * g^k. `near` and `far` are the actual
/// coordinates; `sing` may sit below or above them.
pub fn graded_edges_toward(sing: f64, d_min: f64, d_max: f64, n: usize, above: bool) -> Vec<f64> {
    assert!(d_min > 0.0 && d_max > d_min && n >= 1);
    let dists = log_edges(d_min, d_max, n);
    let mut edges: Vec<f64> = dists
        .iter()
        .map(|d| if above { sing + d } else { sing - d })
        .collect();
    if !above {
        edges.reverse();
    }
    edges
}

// G7,K15 nodes and weights (positive half; symmetric rule). Standard values.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 7-15 application on [a, b]: returns (K15 value, |K15-G7|).
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fk = 0.0;
    let mut fg = 0.0;
    for i in 0..8 {
        let x = h * XGK[i];
        let (f1, f2) = if i == 7 {
            let v = f(c);
            (v, v)
        } else {
            (f(c - x), f(c + x))
        };
        let s = if i == 7 { f1 } else { f1 + f2 };
        fk += WGK[i] * s;
        if i % 2 == 1 {
            fg += WG[i / 2] * s;
        }
    }
    (fk * h, (fk - fg).abs() * h)
}

/// Adaptive G7-K15 integration to a relative tolerance (with an absolute
/// floor). Bisects the worst panel first; panics are avoided by a hard cap on
/// subdivisions, after which the best estimate is returned.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(a: f64, b: f64, rel_tol: f64, f: &mut F) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v0, e0) = gk15(a, b, f);
    let mut segments = vec![(a, b, v0, e0)];
    let abs_floor = 1e-300;
    for _ in 0..4000 {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= rel_tol * total.abs().max(abs_floor) || err < 1e-305 {
            return total;
        }
        // split the worst segment
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (sa, sb, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (sa + sb);
        let (v1, e1) = gk15(sa, mid, f);
        let (v2, e2) = gk15(mid, sb, f);
        segments.push((sa, mid, v1, e1));
        segments.push((mid, sb, v2, e2));
    }
    segments.iter().map(|s| s.2).sum()
}

/// Stable power-difference moment: ∫_l^u m^(e-1) dm for e = k+1-p/2 shifted,
/// i.e. evaluates (u^e - l^e)/e with the log limit at e = 0. `ratio_m1`
/// must equal u/l - 1 computed stably by the caller.
pub fn power_moment(l: f64, e: f64, ratio_m1: f64) -> f64 {
    let lr = ratio_m1.ln_1p();
    if e.abs() < 1e-12 {
        l.powf(e) * lr * (1.0 + 0.5 * e * lr)
    } else {
        l.powf(e) * (e * lr).exp_m1() / e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness_on_polynomials() {
        let rule = GaussRule::new(8);
        // degree 15 polynomial integrated exactly
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(14));
        assert!((v - 2.0 / 15.0).abs() < 1e-14, "got {v}");
        let v = rule.integrate(0.0, 2.0, |x| 3.0 * x * x);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gk15_smooth() {
        let (v, e) = gk15(0.0, PI, &mut |x: f64| x.sin());
        assert!((v - 2.0).abs() < 1e-12);
        assert!(e < 1e-6);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // integrable power singularity at 0
        let v = adaptive_gk(0.0, 1.0, 1e-12, &mut |x: f64| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn power_moment_matches_direct() {
        let l = 2.0_f64;
        let u = 7.0_f64;
        for &e in &[0.7_f64, -0.3, 1.4, 1e-14] {
            let direct = if e.abs() < 1e-13 {
                (u / l).ln()
            } else {
                (u.powf(e) - l.powf(e)) / e
            };
            let stable = power_moment(l, e, u / l - 1.0);
            assert!(
                (stable - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "e={e}: {stable} vs {direct}"
            );
        }
    }

    #[test]
    fn graded_edges_ordering() {
        let e = graded_edges_toward(4.0, 1e-3, 2.0, 10, true);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert!((e[0] - 4.001).abs() < 1e-12);
        let e = graded_edges_toward(4.0, 1e-3, 2.0, 10, false);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert!((e.last().unwrap() - 3.999).abs() < 1e-12);
    }
}
