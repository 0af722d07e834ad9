//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_SEGMENTS: usize = 10_000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Integral estimate.
    pub value: f64,
    /// Sum of per-segment Kronrod-minus-Gauss error estimates.
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, libm::fabs((kron - gauss) * half))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Segments are bisected worst-first until the summed error estimate drops
/// below the tolerance. Reversed limits give the negated integral.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    if b < a {
        let q = integrate(f, b, a, abs_tol);
        return Quadrature { value: -q.value, error: q.error };
    }
    let (v, e) = kronrod(&f, a, b);
    let mut segments: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    loop {
        let total_err: f64 = segments.iter().map(|s| s.3).sum();
        if total_err <= abs_tol || segments.len() >= MAX_SEGMENTS {
            break;
        }
        let (worst, _) =
            segments
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, whole, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Segment cannot be split further in floating point.
            segments.push((lo, hi, whole, 0.0));
            continue;
        }
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
    segments.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut value = 0.0;
    let mut error = 0.0;
    for s in &segments {
        value += s.2;
        error += s.3;
    }
    Quadrature { value, error }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((q.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_converges() {
        // |x - 1/3| on [0, 1] = (1/9 + 4/9) / 2
        let q = integrate(|x| (x - 1.0 / 3.0).abs(), 0.0, 1.0, 1e-11);
        assert!((q.value - 5.0 / 18.0).abs() < 1e-10, "{}", q.value);
    }

    #[test]
    fn reversed_limits_negate() {
        let a = integrate(libm::exp, 0.0, 1.0, 1e-12).value;
        let b = integrate(libm::exp, 1.0, 0.0, 1e-12).value;
        assert_eq!(a, -b);
        assert!((a - (core::f64::consts::E - 1.0)).abs() < 1e-12);
    }
}
