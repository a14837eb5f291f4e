//! Float helpers routed through `libm` so results do not depend on the
//! platform's math library.

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    if y == 2.0 {
        x * x
    } else if y == 1.0 {
        x
    } else {
        libm::pow(x, y)
    }
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Surface measure of the unit sphere in R^n (2 for n = 1).
pub(crate) fn sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * powf(core::f64::consts::PI, half) / libm::tgamma(half)
}

/// Volume of the unit ball in R^n.
pub(crate) fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_constants() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * core::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * core::f64::consts::PI).abs() < 1e-13);
        assert!((ball_volume(2) - core::f64::consts::PI).abs() < 1e-13);
    }
}
