//! Monotone cubic (Fritsch-Carlson) interpolation for tabulated radial
//! profiles. Shape-preserving: no spurious oscillation on monotone data,
//! which keeps log-log decay fits of tabulated operators clean.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("need at least two strictly increasing abscissae")]
    BadGrid,
    #[error("evaluation point {0} outside table range [{1}, {2}]")]
    OutOfRange(f64, f64, f64),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, InterpError> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(InterpError::BadGrid);
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            if slope[i - 1] * slope[i] <= 0.0 {
                ds[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
            }
        }
        ds[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), slope[0], slope.get(1).copied().unwrap_or(slope[0]));
        ds[n - 1] = endpoint_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            slope[n - 2],
            if n >= 3 { slope[n - 3] } else { slope[n - 2] },
        );
        Ok(Pchip { xs, ys, ds })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return Err(InterpError::OutOfRange(x, lo, hi));
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        Ok(h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1)
    }

    pub fn deriv(&self, x: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return Err(InterpError::OutOfRange(x, lo, hi));
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -6.0 * t * t + 6.0 * t;
        let dh11 = 3.0 * t * t - 2.0 * t;
        Ok(dh00 * y0 / h + dh10 * d0 + dh01 * y1 / h + dh11 * d1)
    }
}

// Shape-preserving one-sided endpoint slope (Fritsch-Carlson / Moler).
fn endpoint_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_interpolates_smoothly() {
        let xs: Vec<f64> = (0..40).map(|i| 0.5 + i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (1.0 + x * x).powf(-1.0)).collect();
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x).unwrap() - y).abs() < 1e-14);
        }
        let x = 3.123_f64;
        let exact = (1.0 + x * x).powf(-1.0);
        assert!((p.eval(x).unwrap() - exact).abs() < 1e-4);
    }

    #[test]
    fn preserves_monotonicity() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-x).exp()).collect();
        let p = Pchip::new(xs, ys).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..290 {
            let v = p.eval(i as f64 * 0.1).unwrap();
            assert!(v <= prev + 1e-15, "not monotone at {}", i);
            prev = v;
        }
    }

    #[test]
    fn out_of_range_is_an_error() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(p.eval(2.5), Err(InterpError::OutOfRange(..))));
    }
}
