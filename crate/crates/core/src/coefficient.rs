//! Scalar coefficient functions of the factor state.
//!
//! Coefficients are restricted to a small set of named analytic forms plus
//! tabulated data, so every problem definition can be validated by sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued function of the factor state `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `w . y + offset`, unbounded; only useful wrapped in a clip.
    Affine {
        weights: Vec<f64>,
        offset: f64,
    },
    /// `sum_k c_k y[axis]^k`, unbounded; only useful wrapped in a clip.
    Polynomial {
        #[serde(default)]
        axis: usize,
        coefficients: Vec<f64>,
    },
    /// Smoothly clamped affine function, e.g. a mean-reverting drift.
    AffineClipped {
        weights: Vec<f64>,
        offset: f64,
        floor: f64,
        cap: f64,
        #[serde(default)]
        width: f64,
    },
    /// `low + (high - low) / (1 + exp(-(w . y + offset)))`.
    Logistic {
        weights: Vec<f64>,
        offset: f64,
        low: f64,
        high: f64,
    },
    /// Piecewise-linear interpolation along one axis, flat outside the table.
    Tabulated {
        #[serde(default)]
        axis: usize,
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
    /// Any other form passed through [`smooth_clamp`].
    Clipped {
        raw: Box<Coefficient>,
        floor: f64,
        cap: f64,
        #[serde(default)]
        width: f64,
    },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Affine { weights, offset } => dot(weights, y) + offset,
            Coefficient::Polynomial { axis, coefficients } => {
                let x = y[*axis];
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Coefficient::AffineClipped {
                weights,
                offset,
                floor,
                cap,
                width,
            } => smooth_clamp(dot(weights, y) + offset, *floor, *cap, *width),
            Coefficient::Logistic {
                weights,
                offset,
                low,
                high,
            } => {
                let s = dot(weights, y) + offset;
                low + (high - low) / (1.0 + (-s).exp())
            }
            Coefficient::Tabulated { axis, nodes, values } => interp_table(nodes, values, y[*axis]),
            Coefficient::Clipped {
                raw,
                floor,
                cap,
                width,
            } => smooth_clamp(raw.eval(y), *floor, *cap, *width),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant { .. })
    }

    /// Structural checks against the factor dimension.
    pub fn check_shape(&self, dim: usize) -> Result<()> {
        let axis_ok = |axis: usize| {
            if axis < dim {
                Ok(())
            } else {
                Err(Error::Config(format!("coefficient axis {axis} out of range for dimension {dim}")))
            }
        };
        let weights_ok = |w: &[f64]| {
            if w.len() == dim {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "coefficient has {} weights, factor dimension is {dim}",
                    w.len()
                )))
            }
        };
        let band_ok = |floor: f64, cap: f64, width: f64| {
            if floor < cap && width >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "clip band requires floor < cap and width >= 0 (floor={floor}, cap={cap}, width={width})"
                )))
            }
        };
        match self {
            Coefficient::Constant { .. } => Ok(()),
            Coefficient::Affine { weights, .. } | Coefficient::Logistic { weights, .. } => weights_ok(weights),
            Coefficient::Polynomial { axis, .. } => axis_ok(*axis),
            Coefficient::AffineClipped {
                weights,
                floor,
                cap,
                width,
                ..
            } => {
                weights_ok(weights)?;
                band_ok(*floor, *cap, *width)
            }
            Coefficient::Tabulated { axis, nodes, values } => {
                axis_ok(*axis)?;
                if nodes.is_empty() || nodes.len() != values.len() {
                    return Err(Error::Config("tabulated coefficient needs equal, nonempty node/value lists".into()));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("tabulated nodes must be strictly increasing".into()));
                }
                Ok(())
            }
            Coefficient::Clipped {
                raw,
                floor,
                cap,
                width,
            } => {
                band_ok(*floor, *cap, *width)?;
                raw.check_shape(dim)
            }
        }
    }
}

/// Wraps `raw` so that its values are confined to `[floor, cap]`.
///
/// With `width == 0` this is a hard clamp. A positive `width` replaces the
/// kinks at the band edges by quadratic blends on `[edge - width, edge + width]`,
/// making the result C^1 with slope at most that of `raw`.
pub fn clip_coefficient(raw: Coefficient, floor: f64, cap: f64, width: f64) -> Result<Coefficient> {
    if !(floor < cap) {
        return Err(Error::invalid(format!("clip requires floor < cap, got [{floor}, {cap}]")));
    }
    if !(width >= 0.0) {
        return Err(Error::invalid(format!("clip width must be nonnegative, got {width}")));
    }
    Ok(Coefficient::Clipped {
        raw: Box::new(raw),
        floor,
        cap,
        width,
    })
}

/// C^1 clamp of `x` into `[floor, cap]` with transition half-width `width`.
pub fn smooth_clamp(x: f64, floor: f64, cap: f64, width: f64) -> f64 {
    let w = width.min(0.5 * (cap - floor));
    if w <= 0.0 {
        return x.clamp(floor, cap);
    }
    if x >= cap + w {
        cap
    } else if x > cap - w {
        let d = x - cap + w;
        x - d * d / (4.0 * w)
    } else if x <= floor - w {
        floor
    } else if x < floor + w {
        let d = floor + w - x;
        x + d * d / (4.0 * w)
    } else {
        x
    }
}

fn dot(w: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn interp_table(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0];
    }
    if x >= nodes[n - 1] {
        return values[n - 1];
    }
    let k = nodes.partition_point(|&t| t <= x) - 1;
    let w = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] * (1.0 - w) + values[k + 1] * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn identity() -> Coefficient {
        Coefficient::Affine {
            weights: vec![1.0],
            offset: 0.0,
        }
    }

    #[test]
    fn clamp_above_cap() {
        let c = clip_coefficient(identity(), -1.0, 1.0, 0.0).unwrap();
        assert_eq!(c.eval(&[5.0]), 1.0);
    }

    #[test]
    fn identity_inside_band() {
        let c = clip_coefficient(identity(), -1.0, 1.0, 0.2).unwrap();
        assert_eq!(c.eval(&[0.0]), 0.0);
        assert_eq!(c.eval(&[0.5]), 0.5);
    }

    #[test]
    fn square_clamped_to_floor() {
        let sq = Coefficient::Polynomial {
            axis: 0,
            coefficients: vec![0.0, 0.0, 1.0],
        };
        let c = clip_coefficient(sq, 0.1, 10.0, 0.0).unwrap();
        assert_eq!(c.eval(&[0.0]), 0.1);
        let c = clip_coefficient(
            Coefficient::Polynomial {
                axis: 0,
                coefficients: vec![0.0, 0.0, 1.0],
            },
            0.1,
            10.0,
            0.05,
        )
        .unwrap();
        assert_eq!(c.eval(&[0.0]), 0.1);
    }

    #[test]
    fn rejects_inverted_band() {
        assert!(clip_coefficient(identity(), 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn smooth_clamp_is_c1_at_blend_edges() {
        let (f, c, w) = (-1.0, 1.0, 0.25);
        let h = 1e-7;
        for edge in [c - w, c + w, f - w, f + w] {
            let left = (smooth_clamp(edge, f, c, w) - smooth_clamp(edge - h, f, c, w)) / h;
            let right = (smooth_clamp(edge + h, f, c, w) - smooth_clamp(edge, f, c, w)) / h;
            assert!((left - right).abs() < 1e-5, "kink at {edge}: {left} vs {right}");
        }
    }

    #[test]
    fn table_interpolates_and_extrapolates_flat() {
        let t = Coefficient::Tabulated {
            axis: 0,
            nodes: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 2.0],
        };
        assert_eq!(t.eval(&[-4.0]), 1.0);
        assert_eq!(t.eval(&[0.5]), 2.0);
        assert_eq!(t.eval(&[1.5]), 2.5);
        assert_eq!(t.eval(&[9.0]), 2.0);
    }

    #[test]
    fn serde_tags() {
        let c: Coefficient = toml::from_str("kind = \"logistic\"\nweights = [2.0]\noffset = 0.0\nlow = 1.0\nhigh = 2.0").unwrap();
        assert_eq!(c.eval(&[0.0]), 1.5);
    }

    proptest! {
        #[test]
        fn clip_bounded_and_lipschitz(
            slope in -5.0f64..5.0,
            floor in -3.0f64..0.0,
            span in 0.1f64..4.0,
            width in 0.0f64..1.0,
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let cap = floor + span;
            let raw = Coefficient::Affine { weights: vec![slope], offset: 0.3 };
            let c = clip_coefficient(raw, floor, cap, width).unwrap();
            let (ca, cb) = (c.eval(&[a]), c.eval(&[b]));
            prop_assert!(ca >= floor && ca <= cap);
            prop_assert!((ca - cb).abs() <= slope.abs() * (a - b).abs() + 1e-12);
        }
    }
}
