//! Angular-momentum algebra: Wigner 3j/6j/9j symbols and the angular
//! weights of the bispherical potential terms between coupled channels.

mod coupling;
mod wigner;

pub use coupling::{coupling_coefficient, AngularLabels, LambdaTriple};
pub use wigner::{triangle, wigner3j, wigner6j, wigner9j};

/// An angular-momentum quantum number stored as twice its value, so that
/// half-integers are represented exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn new(twice_value: i32) -> Self {
        HalfInt(twice_value)
    }

    pub const fn int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl From<u32> for HalfInt {
    fn from(value: u32) -> Self {
        HalfInt::int(value as i32)
    }
}

impl From<i32> for HalfInt {
    fn from(value: i32) -> Self {
        HalfInt::int(value)
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}
