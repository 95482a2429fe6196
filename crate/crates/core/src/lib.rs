#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmap;
pub mod eval;
pub mod geometry;
pub mod hdmap;
pub mod initializer;
pub mod pipeline;
pub mod posegraph;
pub mod sim;
pub mod tracker;
