//! Closed-form integrals over `w in [0, L]` of affine and affine-over-affine
//! functions, written in stable forms for small relative slopes.

const SERIES_CUTOFF: f64 = 0.1;
const SERIES_TERMS: usize = 24;

/// `sum_j (-1)^j c(j) z^j`.
fn alternating_series(z: f64, c: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for j in 0..SERIES_TERMS {
        let term = c(j as f64) * pow;
        acc += if j % 2 == 0 { term } else { -term };
        pow *= z;
    }
    acc
}

/// `ln(1 + z) / z`.
fn phi1(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        alternating_series(z, |j| 1.0 / (j + 1.0))
    } else {
        z.ln_1p() / z
    }
}

/// `(z - ln(1 + z)) / z^2`.
fn phi2(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        alternating_series(z, |j| 1.0 / (j + 2.0))
    } else {
        (z - z.ln_1p()) / (z * z)
    }
}

/// `(ln(1 + z) - z / (1 + z)) / z^2`.
fn phi3(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        alternating_series(z, |j| (j + 1.0) / (j + 2.0))
    } else {
        (z.ln_1p() - z / (1.0 + z)) / (z * z)
    }
}

/// `(z - 2 ln(1 + z) + z / (1 + z)) / z^3`.
fn phi4(z: f64) -> f64 {
    if z.abs() < SERIES_CUTOFF {
        alternating_series(z, |j| (j + 1.0) / (j + 3.0))
    } else {
        (z - 2.0 * z.ln_1p() + z / (1.0 + z)) / (z * z * z)
    }
}

/// `int_0^L (c0 + c1 w) dw`.
pub fn affine(c0: f64, c1: f64, len: f64) -> f64 {
    len * (c0 + 0.5 * c1 * len)
}

/// `int_0^L (c0 + c1 w)^2 dw`.
pub fn affine_sq(c0: f64, c1: f64, len: f64) -> f64 {
    len * (c0 * c0 + c0 * c1 * len + c1 * c1 * len * len / 3.0)
}

/// `int_0^L (b0 + b1 w) / (a0 + a1 w) dw`, with `a0 > 0` and `a0 + a1 L > 0`.
pub fn ratio(b0: f64, b1: f64, a0: f64, a1: f64, len: f64) -> f64 {
    let z = a1 / a0 * len;
    (b0 * len * phi1(z) + b1 * len * len * phi2(z)) / a0
}

/// `int_0^L ((b0 + b1 w) / (a0 + a1 w))^2 dw`.
pub fn ratio_sq(b0: f64, b1: f64, a0: f64, a1: f64, len: f64) -> f64 {
    let z = a1 / a0 * len;
    let l2 = len * len;
    (b0 * b0 * len / (1.0 + z) + 2.0 * b0 * b1 * l2 * phi3(z) + b1 * b1 * l2 * len * phi4(z)) / (a0 * a0)
}

/// Real roots of `c0 + c1 w + c2 w^2` strictly inside `(0, L)`.
pub fn quadratic_roots_in(c0: f64, c1: f64, c2: f64, len: f64) -> Vec<f64> {
    let scale = c0.abs().max(c1.abs() * len).max(c2.abs() * len * len);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    if c2.abs() * len * len <= 1e-14 * scale {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let sign = if c1 >= 0.0 { 1.0 } else { -1.0 };
            let q = -0.5 * (c1 + sign * disc.sqrt());
            if q != 0.0 {
                roots.push(q / c2);
                roots.push(c0 / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots.retain(|&w| w > 0.0 && w < len);
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, len: f64) -> f64 {
        let n = 20_000;
        let h = len / n as f64;
        let mut s = f(0.0) + f(len);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn ratio_forms_match_quadrature() {
        for &(b0, b1, a0, a1, len) in &[
            (1.0, 0.5, 1.0, 0.5, 1.0),
            (2.0, -1.0, 1.5, 1e-9, 0.3),
            (0.3, 2.0, 1.0, -0.5, 1.0),
            (1.0, 1.0, 1.0, 0.05, 0.7),
            (1.0, 0.0, 2.0, 3.0, 1.0),
        ] {
            let f = |w: f64| (b0 + b1 * w) / (a0 + a1 * w);
            let r = ratio(b0, b1, a0, a1, len);
            let q = simpson(f, len);
            assert!((r - q).abs() < 1e-12 * (1.0 + q.abs()), "{r} vs {q}");
            let r2 = ratio_sq(b0, b1, a0, a1, len);
            let q2 = simpson(|w| f(w) * f(w), len);
            assert!((r2 - q2).abs() < 1e-12 * (1.0 + q2.abs()), "{r2} vs {q2}");
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        for phi in [phi1, phi2, phi3, phi4] {
            let below = phi(SERIES_CUTOFF * (1.0 - 1e-15));
            let above = phi(SERIES_CUTOFF * (1.0 + 1e-15));
            assert!((below - above).abs() < 1e-13);
            let below = phi(-SERIES_CUTOFF * (1.0 - 1e-15));
            let above = phi(-SERIES_CUTOFF * (1.0 + 1e-15));
            assert!((below - above).abs() < 1e-13, "{below} {above}");
        }
    }

    #[test]
    fn affine_forms() {
        assert!((affine(1.0, 2.0, 3.0) - 12.0).abs() < 1e-15);
        assert!((affine_sq(1.0, 1.0, 1.0) - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn roots() {
        assert_eq!(quadratic_roots_in(-0.5, 1.0, 0.0, 1.0), vec![0.5]);
        let r = quadratic_roots_in(0.09, -1.0, 1.0, 1.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.1).abs() < 1e-14 && (r[1] - 0.9).abs() < 1e-14);
        assert!(quadratic_roots_in(1.0, 0.0, 1.0, 1.0).is_empty());
    }
}
