//! Type checking: definite assignment, linearity and operator resolution.

mod checker;
pub mod py;
pub mod resolve;
pub mod tast;

pub use checker::{check_module, join_types};
pub use py::ConstBindings;
pub use tast::TModule;
