//! Periodization maps `φ: [0,1] → [α,β]` with `φ(0) = α`, `φ(1/2) = β`,
//! symmetric about `1/2` and strictly increasing on `(0, 1/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PeriodizationError {
    #[error("point {x} outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("degenerate interval [{alpha}, {beta}]")]
    Interval { alpha: f64, beta: f64 },
    #[error("unknown periodization kind '{0}' (expected tent, spline4 or cosine)")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PeriodizationKind {
    /// Mirror-and-dilate, piecewise linear.
    #[default]
    Tent,
    /// Piecewise cubic, twice continuously differentiable.
    Spline4,
    /// Shifted cosine, infinitely differentiable.
    Cosine,
}

impl fmt::Display for PeriodizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodizationKind::Tent => "tent",
            PeriodizationKind::Spline4 => "spline4",
            PeriodizationKind::Cosine => "cosine",
        })
    }
}

impl FromStr for PeriodizationKind {
    type Err = PeriodizationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tent" => Ok(PeriodizationKind::Tent),
            "spline4" => Ok(PeriodizationKind::Spline4),
            "cosine" => Ok(PeriodizationKind::Cosine),
            other => Err(PeriodizationError::UnknownKind(other.to_string())),
        }
    }
}

/// Reflects `x ∈ [0,1]` onto `[0, 1/2]`: `φ⁻¹(φ(x))` for every symmetric map.
#[inline]
pub fn reflect(x: f64) -> f64 {
    if x <= 0.5 {
        x
    } else {
        1.0 - x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodizationMap {
    kind: PeriodizationKind,
    alpha: f64,
    beta: f64,
}

impl PeriodizationMap {
    pub fn new(kind: PeriodizationKind, alpha: f64, beta: f64) -> Result<Self, PeriodizationError> {
        if !(alpha < beta) || !alpha.is_finite() || !beta.is_finite() {
            return Err(PeriodizationError::Interval { alpha, beta });
        }
        Ok(PeriodizationMap { kind, alpha, beta })
    }

    pub fn tent(alpha: f64, beta: f64) -> Result<Self, PeriodizationError> {
        Self::new(PeriodizationKind::Tent, alpha, beta)
    }

    pub fn kind(&self) -> PeriodizationKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    fn check_unit(x: f64) -> Result<(), PeriodizationError> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(PeriodizationError::Domain { x, lo: 0.0, hi: 1.0 })
        }
    }

    /// `φ(x)` for `x ∈ [0,1]`.
    pub fn forward(&self, x: f64) -> Result<f64, PeriodizationError> {
        Self::check_unit(x)?;
        Ok(self.apply(x))
    }

    /// `φ(x)` without the domain check; `x` must lie in `[0,1]`.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let d = self.width();
        match self.kind {
            PeriodizationKind::Tent => self.beta - (2.0 * d * (0.5 - x)).abs(),
            PeriodizationKind::Spline4 => {
                let h = reflect(x);
                d * h * h * (12.0 - 16.0 * h) + self.alpha
            }
            PeriodizationKind::Cosine => {
                0.5 * (self.alpha - self.beta) * (2.0 * PI * x).cos() + 0.5 * (self.alpha + self.beta)
            }
        }
    }

    /// `φ'(x)`. The tent map is not differentiable at `0`, `1/2` and `1`;
    /// there it returns the one-sided slope of the branch starting at that
    /// point (`+2(β−α)` at `0` and `1`, `−2(β−α)` at `1/2`).
    pub fn derivative(&self, x: f64) -> Result<f64, PeriodizationError> {
        Self::check_unit(x)?;
        Ok(self.slope(x))
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        let d = self.width();
        match self.kind {
            PeriodizationKind::Tent => {
                if x < 0.5 || x >= 1.0 {
                    2.0 * d
                } else {
                    -2.0 * d
                }
            }
            PeriodizationKind::Spline4 => {
                let g = |h: f64| d * h * (24.0 - 48.0 * h);
                if x <= 0.5 {
                    g(x)
                } else {
                    -g(1.0 - x)
                }
            }
            PeriodizationKind::Cosine => PI * d * (2.0 * PI * x).sin(),
        }
    }

    /// Second derivative, away from the tent kinks.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let d = self.width();
        match self.kind {
            PeriodizationKind::Tent => 0.0,
            PeriodizationKind::Spline4 => d * (24.0 - 96.0 * reflect(x)),
            PeriodizationKind::Cosine => 2.0 * PI * PI * d * (2.0 * PI * x).cos(),
        }
    }

    /// Weight multiplying the periodized integrand when integrating over
    /// `[0, 1/2]`. For the tent map this is the constant slope `2(β−α)` on
    /// the whole torus, which keeps the weighted integrand continuous; for
    /// the smooth maps it is `φ'`.
    #[inline]
    pub fn integration_weight(&self, x: f64) -> f64 {
        match self.kind {
            PeriodizationKind::Tent => 2.0 * self.width(),
            _ => self.slope(x),
        }
    }

    /// `φ⁻¹(t) ∈ [0, 1/2]` for `t ∈ [α, β]`.
    pub fn inverse(&self, t: f64) -> Result<f64, PeriodizationError> {
        if !(self.alpha..=self.beta).contains(&t) {
            return Err(PeriodizationError::Domain {
                x: t,
                lo: self.alpha,
                hi: self.beta,
            });
        }
        Ok(self.invert(t))
    }

    #[inline]
    pub fn invert(&self, t: f64) -> f64 {
        let d = self.width();
        match self.kind {
            PeriodizationKind::Tent => ((t - self.alpha) / (2.0 * d)).clamp(0.0, 0.5),
            PeriodizationKind::Cosine => {
                let c = ((2.0 * t - self.alpha - self.beta) / (self.alpha - self.beta)).clamp(-1.0, 1.0);
                c.acos() / (2.0 * PI)
            }
            PeriodizationKind::Spline4 => self.invert_spline((t - self.alpha) / d),
        }
    }

    /// Solves `h²(12 − 16h) = s` for `h ∈ [0, 1/2]` by Newton's method,
    /// falling back to bisection whenever a step leaves the bracket.
    fn invert_spline(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        if s == 0.0 {
            return 0.0;
        }
        if s == 1.0 {
            return 0.5;
        }
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        // cubic is close to 12h² near 0 and to 1 − 12(1/2−h)² near 1/2
        let mut h = if s < 0.5 {
            (s / 12.0).sqrt()
        } else {
            0.5 - ((1.0 - s) / 12.0).sqrt()
        };
        for _ in 0..100 {
            let g = h * h * (12.0 - 16.0 * h) - s;
            if g > 0.0 {
                hi = h;
            } else {
                lo = h;
            }
            let dg = h * (24.0 - 48.0 * h);
            let mut next = if dg > 0.0 { h - g / dg } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - h).abs() <= 1e-16 || hi - lo <= 1e-15 {
                return next;
            }
            h = next;
        }
        h
    }
}

/// Componentwise product of one-dimensional periodizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPeriodization {
    maps: Vec<PeriodizationMap>,
}

impl ProductPeriodization {
    pub fn new(maps: Vec<PeriodizationMap>) -> Self {
        ProductPeriodization { maps }
    }

    pub fn uniform(kind: PeriodizationKind, bounds: &[(f64, f64)]) -> Result<Self, PeriodizationError> {
        Ok(ProductPeriodization {
            maps: bounds
                .iter()
                .map(|&(a, b)| PeriodizationMap::new(kind, a, b))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn maps(&self) -> &[PeriodizationMap] {
        &self.maps
    }

    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>, PeriodizationError> {
        self.maps.iter().zip(y).map(|(m, &v)| m.forward(v)).collect()
    }

    pub fn forward_into(&self, y: &[f64], out: &mut [f64]) {
        for ((m, &v), o) in self.maps.iter().zip(y).zip(out.iter_mut()) {
            *o = m.apply(v);
        }
    }

    pub fn inverse(&self, xi: &[f64]) -> Result<Vec<f64>, PeriodizationError> {
        self.maps.iter().zip(xi).map(|(m, &v)| m.inverse(v)).collect()
    }

    /// `∏ |φ_j'(y_j)|`, the Jacobian determinant of the product map.
    pub fn jacobian(&self, y: &[f64]) -> f64 {
        self.maps
            .iter()
            .zip(y)
            .map(|(m, &v)| m.slope(v).abs())
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [PeriodizationKind; 3] = [
        PeriodizationKind::Tent,
        PeriodizationKind::Spline4,
        PeriodizationKind::Cosine,
    ];

    #[test]
    fn endpoints() {
        for kind in KINDS {
            let m = PeriodizationMap::new(kind, -0.7, 2.3).unwrap();
            assert!((m.forward(0.0).unwrap() + 0.7).abs() < 1e-15);
            assert!((m.forward(0.5).unwrap() - 2.3).abs() < 1e-15);
            assert!((m.forward(1.0).unwrap() + 0.7).abs() < 1e-14);
            assert_eq!(m.inverse(-0.7).unwrap(), 0.0);
            assert!((m.inverse(2.3).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_values() {
        let cos = PeriodizationMap::new(PeriodizationKind::Cosine, -1.0, 1.0).unwrap();
        assert!(cos.forward(0.25).unwrap().abs() < 1e-15);
        assert!((cos.derivative(0.25).unwrap() - 2.0 * PI).abs() < 1e-14);
        let spl = PeriodizationMap::new(PeriodizationKind::Spline4, -1.0, 1.0).unwrap();
        let x: f64 = 0.25;
        let want = -32.0 * x.powi(3) + 24.0 * x * x - 1.0;
        assert!((spl.forward(x).unwrap() - want).abs() < 1e-15);
        // upper branch as printed: 16Dx³ − 36Dx² + 24Dx + 5α − 4β
        let x: f64 = 0.8;
        let want = 32.0 * x.powi(3) - 72.0 * x * x + 48.0 * x - 9.0;
        assert!((spl.forward(x).unwrap() - want).abs() < 1e-14);
        let tent = PeriodizationMap::tent(0.0, 1.0).unwrap();
        assert_eq!(tent.derivative(0.3).unwrap(), 2.0);
        let tent = PeriodizationMap::tent(-1.0, 1.0).unwrap();
        assert_eq!(tent.derivative(0.3).unwrap(), 4.0);
        assert_eq!(tent.inverse(0.0).unwrap(), 0.25);
    }

    #[test]
    fn tent_kinks_are_total() {
        let tent = PeriodizationMap::tent(-1.0, 1.0).unwrap();
        assert_eq!(tent.derivative(0.0).unwrap(), 4.0);
        assert_eq!(tent.derivative(0.5).unwrap(), -4.0);
        assert_eq!(tent.derivative(1.0).unwrap(), 4.0);
    }

    #[test]
    fn domain_violations() {
        let m = PeriodizationMap::tent(0.0, 1.0).unwrap();
        assert!(m.forward(1.5).is_err());
        assert!(m.forward(-0.1).is_err());
        assert!(m.inverse(1.1).is_err());
        assert!(PeriodizationMap::tent(1.0, 1.0).is_err());
        assert!("hat".parse::<PeriodizationKind>().is_err());
        assert_eq!("spline4".parse::<PeriodizationKind>(), Ok(PeriodizationKind::Spline4));
    }

    #[test]
    fn jacobian_of_uniform_tent() {
        let p = ProductPeriodization::uniform(PeriodizationKind::Tent, &[(-1.0, 1.0); 3]).unwrap();
        assert_eq!(p.jacobian(&[0.1, 0.7, 0.3]), 64.0);
    }
}
