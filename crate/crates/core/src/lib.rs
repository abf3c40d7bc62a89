pub mod dynamics;
pub mod ellipsoid;
pub mod error;
pub mod constraint;
pub mod weights;
pub mod reconstruct;
pub mod verify;
pub mod cli;
