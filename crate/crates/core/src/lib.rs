//! Simulated pick-and-drop pipeline: randomized scene sampling, scripted
//! demonstrations, a software renderer, a recurrent convolutional controller
//! trained by behavioral cloning, and a grid-based evaluation harness.

pub mod control;
pub mod dataset;
pub mod evalharness;
pub mod mathkin;
pub mod net;
pub mod render;
pub mod scene;
pub mod seed;
