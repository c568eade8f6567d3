//! The sample systems shipped in `fixtures/`.

pub const EX1: &str = include_str!("../../../fixtures/ex1.json");
pub const GRID1: &str = include_str!("../../../fixtures/grid1.json");
pub const BAD1: &str = include_str!("../../../fixtures/bad1.json");
