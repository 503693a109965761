pub mod bounds;
pub mod deblur;
pub mod synth;
pub mod tensor;
pub mod theory;

use tensor_fsd::generators::SystemSpec;

/// The system actually generated for repeat `r` under the run seed.
pub fn derived_system(spec: &SystemSpec, run_seed: u64, r: usize) -> SystemSpec {
    let mut s = spec.clone();
    s.seed = spec.seed ^ run_seed ^ r as u64;
    s
}

/// Per-cell seed `seed ⊕ cell`.
pub fn cell_seed(run_seed: u64, cell: usize) -> u64 {
    run_seed ^ cell as u64
}
