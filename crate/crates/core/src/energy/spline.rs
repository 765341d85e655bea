/// Cubic spline with prescribed end slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampedSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>, slope_start: f64, slope_end: f64) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "spline needs at least two knots");
        assert!(x.windows(2).all(|w| w[0] < w[1]), "knots must increase");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for the second derivatives (Thomas algorithm)
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * ((y[1] - y[0]) / h[0] - slope_start);
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope_end - (y[n - 1] - y[n - 2]) / h[n - 2]);
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        ClampedSpline { x, y, m }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Value and first derivative at `t`, clamped to the knot range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let value = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (self.y[i + 1] - self.y[i]) / h
            + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (value, slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let df = |t: f64| -2.0 + t + 9.0 * t * t;
        let x: Vec<f64> = (0..9).map(|i| (i as f64 / 8.0).powi(2)).collect();
        let y = x.iter().map(|&t| f(t)).collect();
        let s = ClampedSpline::new(x, y, df(0.0), df(1.0));
        for k in 0..50 {
            let t = k as f64 / 49.0;
            let (v, d) = s.eval(t);
            assert!((v - f(t)).abs() < 1e-12, "t={t}");
            assert!((d - df(t)).abs() < 1e-10, "t={t}");
        }
    }
}
