#![allow(dead_code)]

pub mod micro;
pub mod sha256_ref;
