//! Dyadic weighted-operator laboratory.
//!
//! Finite dyadic trees on `[0,1)`, Haar transforms, weights and their
//! characteristics, t-Haar multipliers and related operators, the conditions
//! controlling their two-weight boundedness, and weighted operator norms.

pub mod conditions;
pub mod dyadic;
pub mod error;
pub mod io;
pub mod normest;
pub mod operators;
pub mod weights;

pub use conditions::{
    carleson_intensity, condition_c1, condition_c2, condition_c2_sequence, condition_c3, condition_c3_sequence,
    condition_c4, lambda_sequence, sawyer_testing, C4Method, CarlesonSequence, ConditionReport, SawyerConstants,
    SpecializationFlags, Witnessed,
};
pub use dyadic::{haar_transform, inverse_haar, Averages, DyadicInterval, Grid, HaarExpansion, StepFunction, MAX_DEPTH};
pub use error::{Error, Result};
pub use normest::{
    bilinear_decomposition, exact_operator_norm, exhaustive_sup_sigma, khintchine_enumeration, khintchine_expectation,
    khintchine_monte_carlo, positive_bilinear_form, FLIP_MAX_DEPTH, power_iteration_norm, sup_sigma_norm, sup_sigma_norm_with,
    weighted_operator_norm, BilinearTerms, BoundKind, LinearOperator, NormEstimate, NormMethod, PowerOptions,
    PowerResult, SigmaOptions, SigmaSearch,
};
pub use operators::{
    apply_adjoint_t_haar, apply_constant_haar, apply_positive, apply_t_haar, assemble_matrix, haar_split,
    haar_split_table, maximal, weighted_haar, ConstantHaarMultiplier, HaarSplit, OperatorDescriptor, OperatorMatrix,
    PositiveOperator, SignPattern, THaarMultiplier,
};
pub use weights::{
    ap_constant, ap_packing, buckley_packing, c2t_constant, cascade_weight, dual_ap_packing, packing_constant,
    power_weight, rh1_constant, rhp_constant, rhp_packing, CharacteristicKind, PackingForm, Weight,
    WeightCharacteristic, WEIGHT_FLOOR,
};
