//! The 8-dimensional regression input.
//!
//! Order is fixed: translator position in the metrology frame (x, y),
//! followed by the six coil-to-metrology frame offset coordinates
//! (x, y, z translations in meters, then three rotations in radians).

/// Number of input coordinates.
pub const INPUT_DIM: usize = 8;

/// CSV column names, in canonical coordinate order.
pub const INPUT_COLUMNS: [&str; INPUT_DIM] = [
    "x_tm", "y_tm", "x_mc", "y_mc", "z_mc", "chi_mc", "psi_mc", "zeta_mc",
];

/// Regression input: translator (x, y) plus the frame-offset coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputVector(pub [f64; INPUT_DIM]);

impl InputVector {
    pub fn new(coords: [f64; INPUT_DIM]) -> Self {
        InputVector(coords)
    }

    /// Assemble from translator position and a frame offset snapshot.
    pub fn from_parts(x_tm: f64, y_tm: f64, offset: [f64; 6]) -> Self {
        InputVector([
            x_tm, y_tm, offset[0], offset[1], offset[2], offset[3], offset[4], offset[5],
        ])
    }

    pub fn x_tm(&self) -> f64 {
        self.0[0]
    }

    pub fn y_tm(&self) -> f64 {
        self.0[1]
    }

    /// The six frame-offset coordinates.
    pub fn offset(&self) -> [f64; 6] {
        [
            self.0[2], self.0[3], self.0[4], self.0[5], self.0[6], self.0[7],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl AsRef<[f64; INPUT_DIM]> for InputVector {
    fn as_ref(&self) -> &[f64; INPUT_DIM] {
        &self.0
    }
}
