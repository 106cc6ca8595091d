//! Small numerical helpers shared across modules.

use crate::vector::Vec3;

/// Neumaier (improved Kahan–Babuška) accumulator.
///
/// Terms are added in the caller's order; the running compensation holds the
/// low-order bits lost by each addition.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Component-wise [`CompensatedSum`] for vectors.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedVec {
    x: CompensatedSum,
    y: CompensatedSum,
    z: CompensatedSum,
}

impl CompensatedVec {
    pub(crate) const fn new() -> Self {
        Self {
            x: CompensatedSum::new(),
            y: CompensatedSum::new(),
            z: CompensatedSum::new(),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, v: Vec3) {
        self.x.add(v.x);
        self.y.add(v.y);
        self.z.add(v.z);
    }

    #[inline]
    pub(crate) fn value(&self) -> Vec3 {
        Vec3::new(self.x.value(), self.y.value(), self.z.value())
    }
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
