#![allow(dead_code)]
pub mod langevin;
