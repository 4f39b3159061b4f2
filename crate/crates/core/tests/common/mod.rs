//! Independent oracles for the acceptance suite. Nothing here calls into the
//! library's numerical routines.

#![allow(dead_code)]

/// Result line for one criterion; returns `ok` so callers can assert on it.
pub fn report(id: u32, title: &str, ok: bool, detail: &str) -> bool {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[criterion {id:>2}] {tag} {title}: {detail}");
    ok
}

/// Dormand–Prince 5(4) with adaptive steps for a system `y' = f(x, y)`.
/// Integrates from `x0` to `x1` (either direction).
pub fn dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x1: f64,
    rtol: f64,
    atol: f64,
) -> [f64; N] {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let dir = (x1 - x0).signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = dir * (x1 - x0).abs() * 1e-3;
    let mut k = [[0.0; N]; 7];
    for _ in 0..1_000_000 {
        if (x1 - x) * dir <= 0.0 {
            return y;
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            x += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    panic!("dopri5 did not reach the end point");
}

/// Plain bisection on a sign change of `f` over `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if (f(mid) < 0.0) == (fa < 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `q^{k/3}` with the real cube root, so negative `q` keeps its sign for odd `k`.
fn third_power(q: f64, k: i32) -> f64 {
    q.cbrt().powi(k)
}

/// Printed first coefficients `[1, 2, 3]` (powers of `lambda^{1/3}`) of `s_bar`.
pub fn s_bar_first_terms(theta: f64) -> [f64; 3] {
    let q = 6.0 / (theta * (1.0 - theta));
    [
        third_power(q, 1),
        0.5 * third_power(q, 2),
        (4.0 - theta) * (theta + 3.0) / 60.0 * q,
    ]
}

/// Printed first coefficients `[1, 2, 3]` of `c`.
pub fn c_first_terms(theta: f64) -> [f64; 3] {
    let q = 6.0 / (theta * (1.0 - theta));
    [
        (1.0 - theta) / (2.0 * theta) * third_power(q, 1),
        (1.0 - theta).powi(2) / (4.0 * theta) * third_power(q, 2),
        -(theta - 2.0) * (theta - 1.0) * (3.0 * theta - 2.0) / (40.0 * theta) * q,
    ]
}

fn p2(theta: f64) -> f64 {
    theta * theta * (1.0 - theta) * (1.0 - theta)
}

/// Printed coefficients `[1, 2, 3]` of the ask-price boundaries and width.
pub fn boundary_first_terms(theta: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let a = (0.75 * p2(theta)).cbrt();
    let lo = [-a, 0.0, 0.15 * (2.0 * theta * theta - 2.0 * theta + 1.0)];
    let hi = [a, 0.0, -(26.0 * theta * theta - 26.0 * theta + 3.0) / 20.0];
    let width = [
        (6.0 * p2(theta)).cbrt(),
        0.0,
        -(4.0 * theta - 3.0) * (4.0 * theta - 1.0) / 10.0,
    ];
    (lo, hi, width)
}

/// Printed coefficients `[1, 2, 3]` of the mid-price boundaries and width in
/// powers of `lambda_mid^{1/3}`.
pub fn midprice_first_terms(theta: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let a = (1.5 * p2(theta)).cbrt();
    let lo = [-a, 0.0, (3.0 - 11.0 * theta + 11.0 * theta * theta) / 10.0];
    let hi = [a, 0.0, -0.3 * (1.0 - 7.0 * theta + 7.0 * theta * theta)];
    let width = [
        (12.0 * p2(theta)).cbrt(),
        0.0,
        -(4.0 * theta - 1.0) * (4.0 * theta - 3.0) / 5.0,
    ];
    (lo, hi, width)
}

/// Leading growth-rate correction coefficient of `lambda^{2/3}`.
pub fn growth_leading(theta: f64, sigma: f64) -> f64 {
    -(3.0 * sigma.powi(3) / 128f64.sqrt() * p2(theta)).powf(2.0 / 3.0)
}

/// Relative comparison with an absolute floor for vanishing coefficients.
pub fn close(x: f64, expected: f64, rel: f64, zero_abs: f64) -> bool {
    if expected == 0.0 {
        x.abs() <= zero_abs
    } else {
        (x - expected).abs() <= rel * expected.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dopri_exponential() {
        let y = dopri5(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, 1e-12, 1e-14);
        assert!((y[0] - std::f64::consts::E).abs() < 1e-10);
        let y = dopri5(|_, y: &[f64; 1]| [y[0]], 1.0, [1.0], 0.0, 1e-12, 1e-14);
        assert!((y[0] - (-1f64).exp()).abs() < 1e-10);
    }
}
