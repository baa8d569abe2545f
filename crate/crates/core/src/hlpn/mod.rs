//! High-level Petri nets.

mod expr;
mod multiset;
mod net;
mod value;

pub use expr::{evaluate, BinOp, Binding, EvalError, Expr, Functions, HostFn};
pub use multiset::{MultisetError, TokenMultiset};
pub use net::{
    Annotation, ArcDecl, Direction, Firing, Hlpn, HlpnBuilder, Marking, NetError, PlaceDecl,
    Policy, TransitionDecl,
};
pub use value::{Minutes, ParseTimeError, PlaceType, Shape, Symbol, Time, Value};
