//! SQL subset: lexer, parser, AST and query validation.

pub mod ast;
pub mod functions;
pub mod lexer;
pub mod parser;
pub mod validate;

pub use parser::parse;
