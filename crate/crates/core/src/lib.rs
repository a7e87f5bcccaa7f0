pub mod beliefs;
pub mod centering;
pub mod compound;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod scenario;

pub use error::{GameError, Result};
pub use game::*;
