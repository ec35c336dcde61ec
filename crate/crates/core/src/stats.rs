//! Small statistics helpers shared by the analysis modules.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Ordinary least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation coefficient.
    pub r: f64,
}

impl LinearFit {
    pub fn r_squared(&self) -> f64 {
        self.r * self.r
    }
}

/// Least-squares fit; `None` with fewer than two points or constant `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r,
    })
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).map(|f| f.slope)
}

/// Indices of local extrema, ignoring wiggles smaller than `min_prominence`.
///
/// A turning point is confirmed only once the series has moved more than
/// `min_prominence` back from it, so numerical jitter on a flat series
/// produces no extrema.
pub fn local_extrema(ys: &[f64], min_prominence: f64) -> Vec<usize> {
    let mut out = Vec::new();
    if ys.len() < 3 {
        return out;
    }
    // direction: +1 rising, -1 falling, 0 not yet established.
    let mut direction = 0i8;
    let mut candidate = 0usize;
    let (mut lo, mut hi) = (ys[0], ys[0]);
    for (i, &y) in ys.iter().enumerate().skip(1) {
        match direction {
            0 => {
                lo = lo.min(y);
                hi = hi.max(y);
                if y - lo > min_prominence {
                    direction = 1;
                    candidate = i;
                } else if hi - y > min_prominence {
                    direction = -1;
                    candidate = i;
                }
            }
            1 => {
                if y >= ys[candidate] {
                    candidate = i;
                } else if ys[candidate] - y > min_prominence {
                    out.push(candidate);
                    direction = -1;
                    candidate = i;
                }
            }
            _ => {
                if y <= ys[candidate] {
                    candidate = i;
                } else if y - ys[candidate] > min_prominence {
                    out.push(candidate);
                    direction = 1;
                    candidate = i;
                }
            }
        }
    }
    out
}
