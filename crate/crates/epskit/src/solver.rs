//! Small deterministic numerics: bracketing scan, bisection, 2-D quadrature,
//! and least-squares line fit. No adaptive step sizes, no RNG: identical
//! inputs give bit-identical outputs on every run.

/// Outcome of a uniform scan for a sign change of `f`.
pub struct ScanResult {
    /// Interval `(a, b)` with `f(a) * f(b) <= 0`, if one was found.
    pub bracket: Option<(f64, f64)>,
    /// Smallest function value seen over the scan (for diagnostics).
    pub min_value: f64,
    /// Largest function value seen over the scan.
    pub max_value: f64,
}

/// Scan `[lo, hi]` in steps of `step` looking for a sign change of `f`.
/// Points where `f` returns `None` (out of domain) are skipped; a bracket is
/// only reported between two consecutive *evaluable* points.
pub fn scan_bracket(
    lo: f64,
    hi: f64,
    step: f64,
    mut f: impl FnMut(f64) -> Option<f64>,
) -> ScanResult {
    assert!(step > 0.0 && hi > lo);
    let n = ((hi - lo) / step).ceil() as usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    let mut bracket = None;
    for k in 0..=n {
        let x = (lo + step * k as f64).min(hi);
        let Some(y) = f(x) else {
            prev = None;
            continue;
        };
        min_value = min_value.min(y);
        max_value = max_value.max(y);
        if let Some((px, py)) = prev {
            if bracket.is_none() && py * y <= 0.0 {
                bracket = Some((px, x));
            }
        }
        prev = Some((x, y));
    }
    ScanResult {
        bracket,
        min_value,
        max_value,
    }
}

/// Bisect `f` on a bracketing interval for a fixed number of iterations.
/// The caller guarantees `f(a) * f(b) <= 0`; panics otherwise.
pub fn bisect(mut a: f64, mut b: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    assert!(fa * fb <= 0.0, "bisect: interval does not bracket a root");
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break; // interval below f64 resolution
        }
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Composite Simpson quadrature of `f` over `[ax, bx] x [ay, by]` with
/// `nx` x `ny` panels (both forced even).
pub fn simpson_2d(
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    nx: usize,
    ny: usize,
    mut f: impl FnMut(f64, f64) -> f64,
) -> f64 {
    let nx = if nx.is_multiple_of(2) { nx } else { nx + 1 };
    let ny = if ny.is_multiple_of(2) { ny } else { ny + 1 };
    let hx = (bx - ax) / nx as f64;
    let hy = (by - ay) / ny as f64;
    let wx = |i: usize| -> f64 {
        if i == 0 || i == nx {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let wy = |j: usize| -> f64 {
        if j == 0 || j == ny {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut acc = 0.0;
    for i in 0..=nx {
        let x = ax + hx * i as f64;
        let wxi = wx(i);
        for j in 0..=ny {
            let y = ay + hy * j as f64;
            acc += wxi * wy(j) * f(x, y);
        }
    }
    acc * hx * hy / 9.0
}

/// Inverse of a 3x3 matrix by cofactors; `None` when singular.
pub fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let cof =
        |r1: usize, r2: usize, c1: usize, c2: usize| m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for (i, row) in adj.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[i][j] = v / det;
        }
    }
    Some(out)
}

/// Least-squares straight line `y = slope * x + intercept` with the
/// coefficient of determination R^2.
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}
