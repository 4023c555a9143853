use std::ops::AddAssign;

use num_traits::Float;

/// Neumaier's variant of Kahan summation.
///
/// Terms must be added in a fixed order for results to be reproducible.
#[derive(Debug, Clone, Copy)]
pub struct NeumaierSum<T> {
    s: T,
    c: T,
}

impl<T: Float> Default for NeumaierSum<T> {
    fn default() -> Self {
        Self {
            s: T::zero(),
            c: T::zero(),
        }
    }
}

impl<T: Float> NeumaierSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sum(&self) -> T {
        self.s + self.c
    }
}

impl<T: Float> AddAssign<T> for NeumaierSum<T> {
    fn add_assign(&mut self, x: T) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c = self.c + ((self.s - t) + x);
        } else {
            self.c = self.c + ((x - t) + self.s);
        }
        self.s = t;
    }
}

impl<T: Float> FromIterator<T> for NeumaierSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc += x;
        }
        acc
    }
}
