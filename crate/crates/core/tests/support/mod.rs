#![allow(dead_code)]

pub mod exhaustive;
pub mod newton;
pub mod six_bus;
