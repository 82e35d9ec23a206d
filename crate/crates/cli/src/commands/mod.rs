pub mod bench;
pub mod color;
pub mod dist;
pub mod extensions;
pub mod kernels;
pub mod plan;
pub mod sketch;
pub mod variational;
