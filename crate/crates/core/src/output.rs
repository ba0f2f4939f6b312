//! Number formatting and JSON helpers shared by the report writers.

use serde::{Deserialize, Serialize};

use crate::linalg::{PureState, C64};

/// Shortest decimal that round-trips the value rounded to 12 significant digits;
/// exponent form outside `[1e-4, 1e15)`.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if (1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Amplitudes as `[re, im]` pairs.
pub fn complex_pairs(state: &PureState) -> Vec<[f64; 2]> {
    state.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_complex_pairs(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|p| C64::new(p[0], p[1])).collect()
}

/// Class of states a classical ceiling ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    Incoherent,
    FullySeparable,
    Biseparable,
}

impl std::fmt::Display for StateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StateClass::Incoherent => "incoherent",
            StateClass::FullySeparable => "fully_separable",
            StateClass::Biseparable => "biseparable",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(std::f64::consts::FRAC_PI_4), "0.785398163397");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-1234567.891234567), "-1234567.89123");
        assert_eq!(fmt_sig(2.5e-20), "2.5e-20");
        assert_eq!(fmt_sig(1.76038469785123e-12), "1.76038469785e-12");
        assert_eq!(fmt_sig(1e16), "1e16");
    }
}
