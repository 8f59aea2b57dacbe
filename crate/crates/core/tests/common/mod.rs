#![allow(dead_code)]

pub mod ignition;
pub mod oracle;
pub mod programs;
