#![allow(dead_code)]

pub mod cli;
pub mod datasets;
pub mod fixture;
pub mod gradcheck;
