//! Published optimized two-qubit parameters for the realigned paradoxes.

use nlwb_core::QubitModel;

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedRow {
    pub n: u16,
    pub theta: f64,
    pub alpha: &'static [f64],
    pub beta: &'static [f64],
    /// Reported Hardy value at these angles.
    pub hardy_value: f64,
}

impl PublishedRow {
    pub fn model(&self) -> QubitModel {
        QubitModel::new(self.theta, self.alpha.to_vec(), self.beta.to_vec())
            .expect("published angles are finite and sized")
    }
}

pub const ROWS: [PublishedRow; 2] = [
    PublishedRow {
        n: 2,
        theta: 0.7968,
        alpha: &[-0.1996, 0.5901],
        beta: &[0.1996, -0.5901],
        hardy_value: 0.4140,
    },
    PublishedRow {
        n: 4,
        theta: 1.0793,
        alpha: &[-1.5309, 1.3084, 2.1179, 0.9181],
        beta: &[-1.6107, -1.3084, -2.1179, -0.9181],
        hardy_value: 0.7734,
    },
];
