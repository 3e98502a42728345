pub mod cost;
pub mod cover;
pub mod cutting_plane;
pub mod driver;
pub mod error;
pub mod lp;
pub mod marginals;
pub mod oracle;
pub mod reassembly;
