pub mod bjorling;
pub mod cli;
pub mod ck_solver;
pub mod expr;
pub mod models;
pub mod stencil;
pub mod surface;
pub mod verify;
pub mod weierstrass;
