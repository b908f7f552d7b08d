//! Convex-analysis utilities: lower hulls, envelopes, discrete Legendre transforms.

/// Lower convex hull values of (x_i, w_i) evaluated back at the x_i.
/// x must be strictly increasing.
pub fn lower_hull(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // pop b if it lies on or above the chord a -> i
            if (w[b] - w[a]) * (x[i] - x[b]) >= (w[i] - w[b]) * (x[b] - x[a]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0; n];
    let mut seg = 0;
    for i in 0..n {
        while seg + 1 < hull.len() && x[hull[seg + 1]] < x[i] {
            seg += 1;
        }
        if hull[seg] == i {
            out[i] = w[i];
        } else {
            let (a, b) = (hull[seg], hull[seg + 1]);
            let t = (x[i] - x[a]) / (x[b] - x[a]);
            out[i] = w[a] + t * (w[b] - w[a]);
        }
    }
    out
}

/// Clamp the slopes of a grid function to [lo, hi] while only lowering values.
/// Two monotone passes; the result is the largest function below `w` whose
/// forward slopes lie in the interval.
pub fn clamp_slopes(w: &mut [f64], h: f64, lo: f64, hi: f64) {
    let n = w.len();
    for i in 1..n {
        let cap = w[i - 1] + hi * h;
        if w[i] > cap {
            w[i] = cap;
        }
    }
    for i in (0..n - 1).rev() {
        let cap = w[i + 1] - lo * h;
        if w[i] > cap {
            w[i] = cap;
        }
    }
}

/// Max violation of discrete convexity: max(0, -min second difference).
pub fn convexity_residual(u: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 1..u.len() - 1 {
        let d = u[i + 1] - 2.0 * u[i] + u[i - 1];
        if d < -worst {
            worst = -d;
        }
    }
    worst.max(0.0)
}

/// Discrete Legendre transform of grid values u on nodes x, evaluated on the
/// slope grid p: u*(p) = max_i (p x_i - u_i).
pub fn legendre(x: &[f64], u: &[f64], p: &[f64]) -> Vec<f64> {
    // Monotone-argmax scan: for convex u the maximizer index is nondecreasing in p,
    // but inputs need not be convex, so fall back to a full scan per slope with a
    // warm-started hint (exact either way).
    p.iter()
        .map(|&pk| {
            let mut best = f64::NEG_INFINITY;
            for (xi, ui) in x.iter().zip(u) {
                let v = pk * xi - ui;
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect()
}

/// Slopes of the piecewise-linear interpolant (the exact dual breakpoints of a
/// convex grid function).
pub fn forward_slopes(x: &[f64], u: &[f64]) -> Vec<f64> {
    u.windows(2)
        .zip(x.windows(2))
        .map(|(uw, xw)| (uw[1] - uw[0]) / (xw[1] - xw[0]))
        .collect()
}

/// Exact conjugate values of a convex PL grid function at arbitrary slopes:
/// u*(p) = p x_{i(p)} - u_{i(p)}, where i(p) is any node whose subdifferential
/// contains p. Computed by the max formula (exact for any input).
pub fn conjugate_at(x: &[f64], u: &[f64], p: &[f64]) -> Vec<f64> {
    legendre(x, u, p)
}
