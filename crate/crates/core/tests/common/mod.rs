#![allow(dead_code)]

pub mod instances;
pub mod linearization;
pub mod textbook;
