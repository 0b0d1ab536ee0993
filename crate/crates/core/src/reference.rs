//! Published misclassification rates (in percent) of other motion
//! segmentation methods on the 155-sequence benchmark, for side-by-side
//! reports. These are data only; none of the methods is implemented here.

use crate::evaluation::{Category, Group};

/// `(mean, median)` per group, in the order checkerboard, traffic, other, all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub method: &'static str,
    pub motions: usize,
    pub values: [(f64, f64); 4],
}

impl ReferenceRow {
    pub fn get(&self, group: Group) -> Option<(f64, f64)> {
        match group {
            Group::Category(Category::Checkerboard) => Some(self.values[0]),
            Group::Category(Category::Traffic) => Some(self.values[1]),
            Group::Category(Category::Other) => Some(self.values[2]),
            Group::All => Some(self.values[3]),
            Group::Category(Category::Synthetic) => None,
        }
    }
}

const fn row(method: &'static str, motions: usize, values: [(f64, f64); 4]) -> ReferenceRow {
    ReferenceRow { method, motions, values }
}

#[allow(clippy::approx_constant)]
pub const REFERENCE_ROWS: [ReferenceRow; 16] = [
    row("ALC 5", 2, [(2.66, 0.00), (2.58, 0.25), (6.90, 0.88), (3.03, 0.00)]),
    row("ALC sp", 2, [(1.55, 0.29), (1.59, 1.17), (10.70, 0.95), (2.40, 0.43)]),
    row("GPCA", 2, [(6.09, 1.03), (1.41, 0.00), (2.88, 0.00), (4.59, 0.38)]),
    row("LSA 5", 2, [(8.84, 3.43), (2.15, 1.00), (4.66, 1.28), (6.73, 1.99)]),
    row("LSA 4K", 2, [(2.57, 0.27), (5.43, 1.48), (4.10, 1.22), (3.45, 0.59)]),
    row("MSL", 2, [(4.46, 0.00), (2.23, 0.00), (7.23, 0.00), (4.14, 0.00)]),
    row("RANSAC", 2, [(6.52, 1.75), (2.55, 0.21), (7.25, 2.64), (5.56, 1.18)]),
    row("REF", 2, [(2.76, 0.49), (0.30, 0.00), (1.71, 0.00), (2.03, 0.00)]),
    row("ALC 5", 3, [(7.05, 1.02), (3.52, 1.15), (7.25, 7.25), (6.26, 1.02)]),
    row("ALC sp", 3, [(5.20, 0.67), (7.75, 0.49), (21.08, 21.08), (6.69, 0.67)]),
    row("GPCA", 3, [(31.95, 32.93), (19.83, 19.55), (16.85, 16.85), (28.66, 28.26)]),
    row("LSA 5", 3, [(30.37, 31.98), (27.02, 34.01), (23.11, 23.11), (29.28, 31.63)]),
    row("LSA 4K", 3, [(5.80, 1.77), (25.07, 23.79), (7.25, 7.25), (9.73, 2.33)]),
    row("MSL", 3, [(10.38, 4.61), (1.80, 0.00), (2.71, 2.71), (8.23, 1.76)]),
    row("RANSAC", 3, [(25.78, 26.01), (12.83, 11.45), (21.38, 21.38), (22.94, 22.03)]),
    row("REF", 3, [(6.28, 5.06), (1.30, 0.00), (2.66, 2.66), (5.08, 2.40)]),
];

/// Reference rows for the given number of motions.
pub fn reference_rows(motions: usize) -> impl Iterator<Item = &'static ReferenceRow> {
    REFERENCE_ROWS.iter().filter(move |r| r.motions == motions)
}
