//! Purpose tags for deriving RNG stream ids. Every consumer of randomness
//! derives its stream from `(seed, [purpose, ...indices])`, so work can be
//! split across threads without changing any draw.

pub const INIT: u64 = 1;
pub const TRAIN: u64 = 2;
pub const DEMOS: u64 = 3;
pub const PROPOSE: u64 = 4;
pub const SELECT: u64 = 5;
pub const MUTATE: u64 = 6;
pub const EPISODE: u64 = 7;
pub const TARGET: u64 = 8;
