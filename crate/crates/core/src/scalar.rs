//! Scalar abstraction for probabilities.
//!
//! All numeric analyses are generic over [`Probability`], which is implemented
//! for `f32` and `f64`. Models carry their declared probabilities as `f64`;
//! they are converted to the analysis scalar when a state space is built.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as a probability value.
pub trait Probability:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a model-level `f64` probability.
    fn from_model(p: f64) -> Self {
        Self::from_f64(p).expect("probability representable in target scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Probability for f32 {}
impl Probability for f64 {}

/// Kahan-Babuska (Neumaier) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<P> {
    sum: P,
    compensation: P,
}

impl<P: Probability> CompensatedSum<P> {
    pub fn new() -> Self {
        Self {
            sum: P::zero(),
            compensation: P::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: P) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> P {
        self.sum + self.compensation
    }
}

/// Compensated dot product of `weights[i] * values[index[i]]`.
pub fn compensated_sum<P: Probability, I: IntoIterator<Item = P>>(items: I) -> P {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// Formats a value with 17 significant digits, like C's `%.17g`.
pub fn format_g17(value: f64) -> String {
    if value == 0.0 {
        return if value.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    // the exponent after rounding to 17 digits decides the style
    let sci = format!("{value:.16e}");
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let exp10: i32 = e.parse().expect("integer exponent");
    if !(-4..17).contains(&exp10) {
        let sign = if exp10 < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp10.abs())
    } else {
        trim_fraction(&format!("{:.*}", (16 - exp10) as usize, value)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-14).abs() < 1e-25, "{}", acc.value());
    }

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(0.75), "0.75");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(2.964375e-17), "2.9643750000000002e-17");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-4), "0.0001");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(1e20), "1e+20");
    }
}
