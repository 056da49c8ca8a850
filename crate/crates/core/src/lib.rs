pub mod constant;
pub mod diagnostic;
pub mod frontend;
pub mod ir;
pub mod lower;
pub mod ops;
pub mod pipeline;
pub mod random_program;
pub mod rewrite;
pub mod sim;
pub mod typecheck;
pub mod types;
