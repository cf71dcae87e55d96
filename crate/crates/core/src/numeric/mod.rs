//! Small numerical kernels shared by the theory and analysis layers.

pub mod fft;
pub mod linalg;
pub mod optimize;
pub mod quad;
pub mod special;
pub mod stats;
