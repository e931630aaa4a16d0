//! Learning Parity with Noise solver.
//!
//! Samples `(<g, x> + e, g)` with uniform `g` and noise `Pr(e = 1) = 1/2 - eps`
//! are combined `w` at a time so that their last `b` coordinates cancel,
//! the remaining `n - b` key bits are found by a Walsh–Hadamard search over
//! all candidates, and the cancelled bits are recovered by back-substitution.
//! [`planner`] chooses `w` and `b` for a given sample budget.
//!
//! ```
//! use lpn_core::{make_plan, solve, Bias, LpnInstance, PlanOverrides, SolverConfig};
//!
//! let eps = Bias::new(1, 2).unwrap();
//! let inst = LpnInstance::generate(16, eps, 64, 1).unwrap();
//! let over = PlanOverrides { w_int: Some(2), b_int: Some(4), l_prime: Some(0) };
//! let plan = make_plan(16, eps, 6.0, over).unwrap();
//! let result = solve(&inst, &plan, &SolverConfig::default()).unwrap();
//! assert_eq!(Some(&result.key_hat), inst.key.as_ref());
//! ```

pub mod bias;
pub mod bitvec;
pub mod combiner;
mod error;
pub mod instance_file;
pub mod oracle;
pub mod planner;
pub mod solver;
pub mod walsh;

pub use bias::{piling_up_bias, required_samples, Bias};
pub use bitvec::BitVec;
pub use combiner::{
    bucket_and_pair, combine, enumerate_halves, Combination, CombinedEquation, HalfCombination,
};
pub use error::{LpnError, Result};
pub use oracle::{oracle_sample, seeded_rng, Equation, LpnInstance, Sample};
pub use planner::{
    choose_b, choose_w, complexity_estimates, compute_t, cube_root_sample_bound, decimation_plan,
    desk_plan, emit_table, format_table, make_plan, minimum_samples, round_params, Plan,
    PlanOverrides, TableRow,
};
pub use solver::{
    decimate, recover_suffix, solve, verify_key, SolveResult, SolverConfig, StageReport,
};
pub use walsh::{
    best_candidate, brute_force_spectrum, build_spectrum, fwht_in_place, WalshSpectrum,
};
