//! Numerical laboratory for parabolic implosion in the quadratic complex
//! Hénon family `F(x, y) = ((1+a)x - ay + x^2 + eps^2, x + eps^2)`.

pub mod almost_fatou;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod escape;
pub mod export;
pub mod fatou;
pub mod geometry;
pub mod lavaurs;
pub mod periodic;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Mat2, Point2};
pub use scalar::C64;
