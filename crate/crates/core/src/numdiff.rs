//! Finite-difference derivatives used by the audits.

/// Central difference of `f` at 0 with step `h`, using the representable step.
pub fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let (a, b) = (h, -h);
    (f(a) - f(b)) / (a - b)
}

/// Ridders' extrapolated central difference of `f` at 0.
///
/// Starts from step `h0` and shrinks it by 1.4 per level while building a
/// Neville tableau; returns the estimate with the smallest error estimate,
/// together with that estimate.
pub fn ridders(f: impl Fn(f64) -> f64, h0: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;

    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = central(&f, h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = central(&f, h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    (best, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_on_cubic() {
        // d/dx (1 + x)^3 at 0 = 3, central error h²
        let d = central(|x| (1.0 + x).powi(3), 1e-3);
        assert!((d - 3.0).abs() < 2e-6);
    }

    #[test]
    fn ridders_reaches_near_machine_precision() {
        let (d, err) = ridders(|x| (0.7 + x).sin() * (0.7 + x).exp(), 0.1);
        let exact = 0.7f64.exp() * (0.7f64.sin() + 0.7f64.cos());
        assert!((d - exact).abs() < 1e-12, "{d} vs {exact}");
        assert!(err < 1e-10);
    }
}
