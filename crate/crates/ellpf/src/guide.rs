//! Keeps the guide honest: every chapter of the book under `book/` is
//! included here as documentation, so `cargo test --doc` compiles and runs
//! each of its code samples. A chapter whose snippet drifts away from the
//! library breaks the build instead of the reader.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/theta-functions.md")]
pub mod theta_functions {}

#[doc = include_str!("../../../book/src/pfaffians.md")]
pub mod pfaffians {}

#[doc = include_str!("../../../book/src/face-model.md")]
pub mod face_model {}

#[doc = include_str!("../../../book/src/partition-functions.md")]
pub mod partition_functions {}

#[doc = include_str!("../../../book/src/closed-forms.md")]
pub mod closed_forms {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
