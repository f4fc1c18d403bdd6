pub mod kuratowski;
pub mod matrixkit;
pub mod quatgeom;
pub mod series;
pub mod slog;
pub mod spaces;
pub mod tropical;
