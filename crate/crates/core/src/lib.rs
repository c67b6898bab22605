//! Waste-minimizing design engine for laser-cut plank furniture.

pub mod constraints;
pub mod design;
pub mod linalg;
pub mod fem;
pub mod effectiveness;
pub mod fixtures;
pub mod layout;
pub mod optimizer;
pub mod io;
pub mod protocol;
