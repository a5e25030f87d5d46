//! Weighted `L²` operator norms, the supremum over sign patterns, the
//! Khintchine expectation identity and the four-term bilinear decomposition.
//!
//! A norm from `L²(u)` to `L²(v)` is the plain `L²` norm of
//! `B = M_{v^{1/2}} T M_{u^{-1/2}}`, where `M_g` is multiplication by `g`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::CarlesonSequence;
use crate::dyadic::{dot, haar_transform, Grid, StepFunction};
use crate::error::{invalid, Error, Result};
use crate::operators::{
    assemble_matrix, haar_split_table, ConstantHaarMultiplier, OperatorDescriptor, OperatorMatrix, PositiveOperator,
    SignPattern, THaarMultiplier,
};
use crate::weights::Weight;

/// Largest depth at which norms are computed by dense SVD by default.
pub const EXACT_MAX_DEPTH: u32 = 10;

/// Default largest depth at which the sign search also tries single flips.
pub const FLIP_MAX_DEPTH: u32 = 6;

/// Largest depth at which every sign pattern can be enumerated.
pub const ENUMERATION_MAX_DEPTH: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    ExactSpectral,
    PowerIteration,
    SigmaAlternation,
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactSpectral => "exact-spectral",
            Self::PowerIteration => "power-iteration",
            Self::SigmaAlternation => "sigma-alternation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Exact,
    LowerBound,
    UpperBound,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::LowerBound => "lower-bound",
            Self::UpperBound => "upper-bound",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    /// `‖B^*B x - λ x‖ / λ` at the returned vector; 0 for the exact path.
    pub residual: f64,
    pub bound: BoundKind,
}

/// A linear map on step functions of one grid, with its adjoint for the
/// unweighted pairing `∫ f g`.
pub trait LinearOperator {
    fn grid(&self) -> Grid;
    fn apply(&self, f: &StepFunction) -> Result<StepFunction>;
    fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction>;
}

impl LinearOperator for THaarMultiplier {
    fn grid(&self) -> Grid {
        THaarMultiplier::grid(self)
    }
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        THaarMultiplier::apply(self, f)
    }
    fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        THaarMultiplier::apply_adjoint(self, g)
    }
}

impl LinearOperator for ConstantHaarMultiplier {
    fn grid(&self) -> Grid {
        ConstantHaarMultiplier::grid(self)
    }
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        ConstantHaarMultiplier::apply(self, f)
    }
    fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        ConstantHaarMultiplier::apply(self, g)
    }
}

impl LinearOperator for PositiveOperator {
    fn grid(&self) -> Grid {
        PositiveOperator::grid(self)
    }
    fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        PositiveOperator::apply(self, f)
    }
    fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        PositiveOperator::apply_adjoint(self, g)
    }
}

/// `‖diag(√(v w)) M diag(1/√(u w))‖₂` with `w` the cell width and `M` in the
/// mass-to-value convention of [`OperatorMatrix`]; equals
/// `sup ‖Tf‖_{L²(v)} / ‖f‖_{L²(u)}`.
pub fn weighted_operator_norm(m: &OperatorMatrix, u: &Weight, v: &Weight) -> Result<NormEstimate> {
    let n = u.values().len();
    for found in [v.values().len(), m.rows(), m.cols()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let width = 1.0 / n as f64;
    let left = DVector::from_iterator(n, v.values().iter().map(|x| (x * width).sqrt()));
    let right = DVector::from_iterator(n, u.values().iter().map(|x| (x * n as f64).sqrt().recip()));
    let mut b: DMatrix<f64> = m.matrix.clone();
    for (j, mut col) in b.column_iter_mut().enumerate() {
        col.component_mul_assign(&left);
        col *= right[j];
    }
    let value = b.singular_values().max();
    Ok(NormEstimate {
        value,
        method: NormMethod::ExactSpectral,
        iterations: 0,
        residual: 0.0,
        bound: BoundKind::Exact,
    })
}

/// Assembles `op` and returns its exact norm from `L²(u)` to `L²(v)`.
pub fn exact_operator_norm(op: &OperatorDescriptor<'_>, u: &Weight, v: &Weight) -> Result<NormEstimate> {
    let m = assemble_matrix(op, u.grid())?;
    weighted_operator_norm(&m, u, v)
}

#[derive(Clone, Debug)]
pub struct PowerOptions {
    /// Stop once the relative Rayleigh-quotient increment drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed for the random start vector when `start` is `None`.
    pub seed: u64,
    /// Warm start in the `L²(u)` picture, i.e. a candidate `f`.
    pub start: Option<StepFunction>,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            seed: 0,
            start: None,
        }
    }
}

/// Result of [`power_iteration_norm`].
#[derive(Clone, Debug)]
pub struct PowerResult {
    pub estimate: NormEstimate,
    /// Unit maximizer `f` in `L²(u)`.
    pub f: StepFunction,
    /// `Tf / ‖Tf‖_{L²(v)}`, or zero if `Tf = 0`.
    pub g: StepFunction,
}

fn mean_square(x: &[f64]) -> f64 {
    dot(x, x) / x.len() as f64
}

/// Power iteration on `B^*B`. The value never decreases across iterations and
/// is a lower bound on the norm.
pub fn power_iteration_norm(
    op: &dyn LinearOperator,
    u: &Weight,
    v: &Weight,
    options: &PowerOptions,
) -> Result<PowerResult> {
    let grid = op.grid();
    grid.ensure_same(u.grid())?;
    grid.ensure_same(v.grid())?;
    let n = grid.cells();
    let sqrt_u: Vec<f64> = u.values().iter().map(|x| x.sqrt()).collect();
    let sqrt_v: Vec<f64> = v.values().iter().map(|x| x.sqrt()).collect();

    // Iterate on x = u^{1/2} f so that ‖x‖_{L²} = ‖f‖_{L²(u)}.
    let mut x: Vec<f64> = match &options.start {
        Some(f) => {
            grid.ensure_same(f.grid())?;
            f.values().iter().zip(&sqrt_u).map(|(a, b)| a * b).collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    };
    let norm = mean_square(&x).sqrt();
    if !(norm > 0.0) {
        return Err(invalid("start", "start vector must be nonzero"));
    }
    x.iter_mut().for_each(|a| *a /= norm);

    let forward = |x: &[f64]| -> Result<Vec<f64>> {
        let f = StepFunction::from_raw(grid, x.iter().zip(&sqrt_u).map(|(a, b)| a / b).collect());
        let tf = op.apply(&f)?;
        Ok(tf.values().iter().zip(&sqrt_v).map(|(a, b)| a * b).collect())
    };
    let backward = |y: &[f64]| -> Result<Vec<f64>> {
        let g = StepFunction::from_raw(grid, y.iter().zip(&sqrt_v).map(|(a, b)| a * b).collect());
        let tg = op.apply_adjoint(&g)?;
        Ok(tg.values().iter().zip(&sqrt_u).map(|(a, b)| a / b).collect())
    };

    let mut lambda = 0.0;
    let mut residual = 0.0;
    let mut iterations = 0;
    let mut best_x = x.clone();
    let mut y = forward(&x)?;
    loop {
        let rayleigh = mean_square(&y);
        if rayleigh >= lambda {
            best_x.copy_from_slice(&x);
        }
        let increment = rayleigh - lambda;
        lambda = lambda.max(rayleigh);
        if lambda == 0.0 {
            break;
        }
        let z = backward(&y)?;
        residual = z
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt()
            / lambda;
        if iterations > 0 && increment <= options.tolerance * lambda {
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        let z_norm = mean_square(&z).sqrt();
        if !(z_norm > 0.0) {
            break;
        }
        x = z.into_iter().map(|a| a / z_norm).collect();
        y = forward(&x)?;
        iterations += 1;
    }

    let f = StepFunction::from_raw(grid, best_x.iter().zip(&sqrt_u).map(|(a, b)| a / b).collect());
    let tf = op.apply(&f)?;
    let tf_norm = tf.weighted_norm_sq(v.as_step())?.sqrt();
    let g = if tf_norm > 0.0 { tf.scaled(1.0 / tf_norm) } else { StepFunction::zeros(grid) };
    Ok(PowerResult {
        estimate: NormEstimate {
            value: tf_norm,
            method: NormMethod::PowerIteration,
            iterations,
            residual,
            bound: BoundKind::LowerBound,
        },
        f,
        g,
    })
}

#[derive(Clone, Debug)]
pub struct SigmaOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Cap on sign updates per restart.
    pub max_rounds: usize,
    pub power: PowerOptions,
    /// Extra restarts from `σ ≡ +1` with these start vectors, run before the
    /// random ones.
    pub warm_starts: Vec<StepFunction>,
    /// Up to this depth, fixed points of the sign update are refined by
    /// single sign flips.
    pub flip_max_depth: u32,
    /// How many of the best distinct fixed points are refined.
    pub refined: usize,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_rounds: 50,
            power: PowerOptions::default(),
            warm_starts: Vec::new(),
            flip_max_depth: FLIP_MAX_DEPTH,
            refined: 4,
        }
    }
}

/// Outcome of the alternating sign search.
#[derive(Clone, Debug)]
pub struct SigmaSearch {
    pub estimate: NormEstimate,
    pub sigma: SignPattern,
    /// Running maximum after every alternation step, over all restarts.
    pub history: Vec<f64>,
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Relative gain a single sign flip must achieve to be accepted.
const FLIP_GAIN: f64 = 1e-9;

/// `σ_I = sign(⟨f, h_I⟩ ⟨v w^t g, h_I⟩)` for the singular pair of `result`,
/// keeping the old sign where the product vanishes. `f` is the `L²(u)`
/// maximizer, so `u^{-1/2} (u^{1/2} f) = f`; likewise on the target side.
fn aligned_signs(result: &PowerResult, v: &Weight, w_t: &Weight, sigma: &SignPattern) -> Result<SignPattern> {
    let a = haar_transform(&result.f).coefficients;
    let target = result
        .g
        .zip_with(v.as_step(), |x, y| x * y)?
        .zip_with(w_t.as_step(), |x, y| x * y)?;
    let b = haar_transform(&target).coefficients;
    let signs = sigma
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &old)| {
            let p = a[i] * b[i];
            if p > 0.0 {
                1
            } else if p < 0.0 {
                -1
            } else {
                old
            }
        })
        .collect();
    SignPattern::new(sigma.grid(), signs)
}

/// Running state of the sign search: best value so far and its history.
struct Ascent<'a> {
    u: &'a Weight,
    v: &'a Weight,
    w: &'a Weight,
    t: f64,
    w_t: Weight,
    max_rounds: usize,
    best: Option<(f64, SignPattern, NormEstimate)>,
    history: Vec<f64>,
    iterations: usize,
}

impl Ascent<'_> {
    fn evaluate(&mut self, sigma: &SignPattern, power: &PowerOptions) -> Result<PowerResult> {
        let op = THaarMultiplier::new(self.w, self.t, sigma)?;
        let result = power_iteration_norm(&op, self.u, self.v, power)?;
        self.iterations += result.estimate.iterations + 1;
        let value = result.estimate.value;
        if self.best.as_ref().is_none_or(|(b, _, _)| value > *b) {
            self.best = Some((value, sigma.clone(), result.estimate));
        }
        self.history.push(self.best.as_ref().map_or(0.0, |b| b.0));
        Ok(result)
    }

    /// Alternates from `current` to a fixed point of the sign update; with
    /// `flips`, a fixed point is left through the first single sign flip that
    /// raises the norm.
    fn climb(
        &mut self,
        mut sigma: SignPattern,
        mut current: PowerResult,
        mut power: PowerOptions,
        flips: bool,
    ) -> Result<(SignPattern, PowerResult)> {
        for _ in 0..self.max_rounds {
            let next = aligned_signs(&current, self.v, &self.w_t, &sigma)?;
            if next != sigma {
                sigma = next;
                power.start = Some(current.f.clone());
                current = self.evaluate(&sigma, &power)?;
                continue;
            }
            if !flips {
                break;
            }
            let mut moved = false;
            for i in 0..sigma.len() {
                let mut signs = sigma.as_slice().to_vec();
                signs[i] = -signs[i];
                let flipped = SignPattern::new(sigma.grid(), signs)?;
                power.start = Some(current.f.clone());
                let trial = self.evaluate(&flipped, &power)?;
                if trial.estimate.value > current.estimate.value * (1.0 + FLIP_GAIN) {
                    sigma = flipped;
                    current = trial;
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        Ok((sigma, current))
    }
}

/// Lower bound on `sup_σ ‖T^t_{w,σ}‖_{L²(u)→L²(v)}` by alternating ascent:
/// for the current top singular pair `(f, g)` choose
/// `σ_I = sign(⟨u^{-1/2}f', h_I⟩ ⟨v^{1/2} w^t g', h_I⟩)` with `f' = u^{1/2} f`,
/// `g' = v^{1/2} g`, so every term of the bilinear form is nonnegative, then
/// recompute the singular pair warm-started from `f`. On grids up to
/// [`SigmaOptions::flip_max_depth`] the best fixed points are then refined by
/// single sign flips.
pub fn sup_sigma_norm(u: &Weight, v: &Weight, w: &Weight, t: f64, restarts: usize, seed: u64) -> Result<SigmaSearch> {
    sup_sigma_norm_with(
        u,
        v,
        w,
        t,
        &SigmaOptions {
            restarts,
            seed,
            ..SigmaOptions::default()
        },
    )
}

pub fn sup_sigma_norm_with(u: &Weight, v: &Weight, w: &Weight, t: f64, options: &SigmaOptions) -> Result<SigmaSearch> {
    let grid = u.grid();
    grid.ensure_same(v.grid())?;
    grid.ensure_same(w.grid())?;
    if options.restarts == 0 {
        return Err(invalid("restarts", "must be at least 1"));
    }
    let mut ascent = Ascent {
        u,
        v,
        w,
        t,
        w_t: w.pow(t)?,
        max_rounds: options.max_rounds,
        best: None,
        history: Vec::new(),
        iterations: 0,
    };

    let warm = options.warm_starts.len();
    let mut endpoints: Vec<(SignPattern, PowerResult, PowerOptions)> = Vec::new();
    for restart in 0..warm + options.restarts {
        let seed = restart_seed(options.seed, restart);
        let sigma = if restart <= warm {
            SignPattern::positive(grid)
        } else {
            SignPattern::random(grid, seed)
        };
        let power = PowerOptions {
            seed,
            start: options.warm_starts.get(restart).cloned(),
            ..options.power.clone()
        };
        let first = ascent.evaluate(&sigma, &power)?;
        let (sigma, end) = ascent.climb(sigma, first, power.clone(), false)?;
        if !endpoints.iter().any(|(s, _, _)| *s == sigma) {
            endpoints.push((sigma, end, power));
        }
    }

    // Single flips are costly, so only the best distinct fixed points get them.
    if grid.depth() <= options.flip_max_depth {
        endpoints.sort_by(|a, b| b.1.estimate.value.total_cmp(&a.1.estimate.value));
        for (sigma, end, power) in endpoints.into_iter().take(options.refined) {
            ascent.climb(sigma, end, power, true)?;
        }
    }

    let (value, sigma, last) = ascent.best.expect("at least one restart");
    Ok(SigmaSearch {
        estimate: NormEstimate {
            value,
            method: NormMethod::SigmaAlternation,
            iterations: ascent.iterations,
            residual: last.residual,
            bound: BoundKind::LowerBound,
        },
        sigma,
        history: ascent.history,
    })
}

/// `max_σ ‖T^t_{w,σ}‖_{L²(u)→L²(v)}` over every sign pattern, by dense SVD.
/// Limited to depth [`ENUMERATION_MAX_DEPTH`].
pub fn exhaustive_sup_sigma(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<(f64, SignPattern)> {
    let grid = u.grid();
    if grid.depth() > ENUMERATION_MAX_DEPTH {
        return Err(invalid(
            "grid",
            format!("enumeration needs depth ≤ {ENUMERATION_MAX_DEPTH}"),
        ));
    }
    let mut best = (f64::NEG_INFINITY, SignPattern::positive(grid));
    for bits in 0..1u64 << grid.non_leaf_count() {
        let sigma = SignPattern::from_bits(grid, bits)?;
        let value = exact_operator_norm(&OperatorDescriptor::THaar { w, t, sigma: &sigma }, u, v)?.value;
        if value > best.0 {
            best = (value, sigma);
        }
    }
    Ok(best)
}

/// `𝔼_σ ‖T_σ T_{w,t} f‖²_{L²(μ)} = ¼ Σ_I |I| |Δ_I f|² ⟨μ⟩_I / ⟨w⟩_I^{2t}`,
/// where `μ` plays the role of `v w^{2t}`.
pub fn khintchine_expectation(mu: &Weight, w: &Weight, t: f64, f: &StepFunction) -> Result<f64> {
    let grid = f.grid();
    grid.ensure_same(mu.grid())?;
    grid.ensure_same(w.grid())?;
    let (fa, ma, wa) = (f.averages(), mu.averages(), w.averages());
    Ok((0..grid.non_leaf_count())
        .map(|i| {
            let len = crate::dyadic::DyadicInterval::from_heap_index(i).length();
            let d = fa.delta_at(i);
            0.25 * len * d * d * ma.at(i) / wa.at(i).powf(2.0 * t)
        })
        .sum())
}

fn sigma_energy(mu: &Weight, w: &Weight, t: f64, f: &StepFunction, sigma: &SignPattern) -> Result<f64> {
    ConstantHaarMultiplier::new(w, t, sigma)?
        .apply(f)?
        .weighted_norm_sq(mu.as_step())
}

/// Average of `‖T_σ T_{w,t} f‖²_{L²(μ)}` over every sign pattern.
pub fn khintchine_enumeration(mu: &Weight, w: &Weight, t: f64, f: &StepFunction) -> Result<f64> {
    let grid = f.grid();
    if grid.depth() > ENUMERATION_MAX_DEPTH {
        return Err(invalid(
            "grid",
            format!("enumeration needs depth ≤ {ENUMERATION_MAX_DEPTH}"),
        ));
    }
    let count = 1u64 << grid.non_leaf_count();
    let mut total = 0.0;
    for bits in 0..count {
        total += sigma_energy(mu, w, t, f, &SignPattern::from_bits(grid, bits)?)?;
    }
    Ok(total / count as f64)
}

/// Monte-Carlo estimate of [`khintchine_expectation`] from `samples` random
/// sign patterns.
pub fn khintchine_monte_carlo(
    mu: &Weight,
    w: &Weight,
    t: f64,
    f: &StepFunction,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let grid = f.grid();
    let mut total = 0.0;
    for s in 0..samples {
        let sigma = SignPattern::random(grid, restart_seed(seed, s));
        total += sigma_energy(mu, w, t, f, &sigma)?;
    }
    Ok(total / samples as f64)
}

/// The sums `Σ₁..Σ₄` obtained by splitting each `h_I` into its `u^{-1}` and
/// `v w^{2t}` weighted Haar and mean parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BilinearTerms {
    pub sums: [f64; 4],
}

impl BilinearTerms {
    pub fn total(&self) -> f64 {
        self.sums.iter().sum()
    }
}

/// `⟨T^t_{w,σ}(f u^{-1}), g v⟩ = Σ₁ + Σ₂ + Σ₃ + Σ₄`.
pub fn bilinear_decomposition(
    f: &StepFunction,
    g: &StepFunction,
    u: &Weight,
    v: &Weight,
    w: &Weight,
    t: f64,
    sigma: &SignPattern,
) -> Result<BilinearTerms> {
    let grid = f.grid();
    for other in [g.grid(), u.grid(), v.grid(), w.grid(), sigma.grid()] {
        grid.ensure_same(other)?;
    }
    let u_inv = u.recip()?;
    let w_t = w.pow(t)?;
    let mu = v.mul(&w.pow(2.0 * t)?)?;
    let source = f.zip_with(u_inv.as_step(), |a, b| a * b)?;
    let target = g.zip_with(v.as_step(), |a, b| a * b)?.zip_with(w_t.as_step(), |a, b| a * b)?;
    let (src_avg, tgt_avg) = (source.averages(), target.averages());
    let (ua, ma, wa) = (u_inv.averages(), mu.averages(), w.averages());
    let (split_u, split_mu) = (haar_split_table(&u_inv), haar_split_table(&mu));

    // ⟨F, h_I^a⟩ for the density a: a(I)^{-1/2} (√(a₋/a₊) F₊ - √(a₊/a₋) F₋),
    // with masses over the children.
    let weighted = |fa: &crate::dyadic::Averages, aa: &crate::dyadic::Averages, i: usize, half: f64| {
        let (a_m, a_p) = (aa.at(2 * i + 1) * half, aa.at(2 * i + 2) * half);
        let (f_m, f_p) = (fa.at(2 * i + 1) * half, fa.at(2 * i + 2) * half);
        ((a_m / a_p).sqrt() * f_p - (a_p / a_m).sqrt() * f_m) / (a_m + a_p).sqrt()
    };
    let mut sums = [0.0; 4];
    for i in 0..grid.non_leaf_count() {
        let len = crate::dyadic::DyadicInterval::from_heap_index(i).length();
        let half = 0.5 * len;
        let scale = sigma.sign(i) / wa.at(i).powf(t);
        let f_h = split_u[i].alpha * weighted(&src_avg, &ua, i, half);
        let f_1 = split_u[i].beta * src_avg.at(i) * len.sqrt();
        let g_h = split_mu[i].alpha * weighted(&tgt_avg, &ma, i, half);
        let g_1 = split_mu[i].beta * tgt_avg.at(i) * len.sqrt();
        sums[0] += scale * f_h * g_h;
        sums[1] += scale * f_1 * g_h;
        sums[2] += scale * f_h * g_1;
        sums[3] += scale * f_1 * g_1;
    }
    Ok(BilinearTerms { sums })
}

/// `Σ_I λ_I ⟨u^{-1/2} f⟩_I ⟨v^{1/2} w^t g⟩_I`, the bilinear form of the positive
/// operator; bounded by `C₄ ‖f‖₂ ‖g‖₂`.
pub fn positive_bilinear_form(
    f: &StepFunction,
    g: &StepFunction,
    u: &Weight,
    v: &Weight,
    w: &Weight,
    t: f64,
    lambda: &CarlesonSequence,
) -> Result<f64> {
    let grid = f.grid();
    for other in [g.grid(), u.grid(), v.grid(), w.grid(), lambda.grid()] {
        grid.ensure_same(other)?;
    }
    let left = f.zip_with(u.pow(-0.5)?.as_step(), |a, b| a * b)?.averages();
    let right = g
        .zip_with(v.pow(0.5)?.as_step(), |a, b| a * b)?
        .zip_with(w.pow(t)?.as_step(), |a, b| a * b)?
        .averages();
    Ok(lambda
        .values()
        .iter()
        .enumerate()
        .map(|(i, l)| l * left.at(i) * right.at(i))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{condition_c1, condition_c2, condition_c3, condition_c4, lambda_sequence};
    use crate::operators::apply_t_haar;
    use crate::weights::cascade_weight;
    use approx::assert_relative_eq;

    fn grid(depth: u32) -> Grid {
        Grid::new(depth).unwrap()
    }

    fn w13() -> Weight {
        Weight::from_values(vec![1.0, 3.0]).unwrap()
    }

    #[test]
    fn exact_norm_examples() {
        let g = grid(3);
        let one = Weight::ones(g);
        let n = g.cells() as f64;
        let id = OperatorMatrix::new(DMatrix::identity(8, 8) * n, "u", "u");
        let u = cascade_weight(g, 0.5, 1).unwrap();
        assert_relative_eq!(weighted_operator_norm(&id, &u, &u).unwrap().value, 1.0, epsilon = 1e-12);

        let d = [0.5, -3.0, 2.0, 1.0, 0.0, -0.25, 2.5, 1.5];
        let diag = OperatorMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&d)) * n, "1", "1");
        assert_relative_eq!(weighted_operator_norm(&diag, &one, &one).unwrap().value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn depth_one_example() {
        let g = grid(1);
        let one = Weight::ones(g);
        let w = w13();
        let sigma = SignPattern::positive(g);
        let est = exact_operator_norm(&OperatorDescriptor::THaar { w: &w, t: 1.0, sigma: &sigma }, &one, &one).unwrap();
        // T f = ⟨f,h⟩ (w/2) h; the norm is ‖(w/2) h‖₂ = √5/2.
        assert_relative_eq!(est.value, 5f64.sqrt() / 2.0, epsilon = 1e-14);
        assert_eq!(est.bound, BoundKind::Exact);
    }

    #[test]
    fn power_iteration_matches_exact() {
        let g = grid(6);
        let u = cascade_weight(g, 0.6, 11).unwrap();
        let v = cascade_weight(g, 0.6, 12).unwrap();
        let w = cascade_weight(g, 0.6, 13).unwrap();
        let sigma = SignPattern::random(g, 14);
        let exact = exact_operator_norm(&OperatorDescriptor::THaar { w: &w, t: 1.0, sigma: &sigma }, &u, &v).unwrap();
        let op = THaarMultiplier::new(&w, 1.0, &sigma).unwrap();
        let power = power_iteration_norm(&op, &u, &v, &PowerOptions::default()).unwrap();
        assert!(power.estimate.value <= exact.value * (1.0 + 1e-12));
        assert_relative_eq!(power.estimate.value, exact.value, max_relative = 1e-4);
        assert_relative_eq!(power.f.weighted_norm_sq(u.as_step()).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sup_sigma_trivial_cases() {
        let g = grid(4);
        let one = Weight::ones(g);
        let s = sup_sigma_norm(&one, &one, &one, 1.0, 2, 0).unwrap();
        assert_relative_eq!(s.estimate.value, 1.0, epsilon = 1e-9);
        assert_eq!(s.estimate.method, NormMethod::SigmaAlternation);

        let g = grid(1);
        let one = Weight::ones(g);
        let s = sup_sigma_norm(&one, &one, &w13(), 1.0, 1, 0).unwrap();
        assert_relative_eq!(s.estimate.value, 5f64.sqrt() / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn sup_sigma_history_monotone() {
        let g = grid(5);
        let u = cascade_weight(g, 0.7, 1).unwrap();
        let v = cascade_weight(g, 0.7, 2).unwrap();
        let w = cascade_weight(g, 0.7, 3).unwrap();
        let s = sup_sigma_norm(&u, &v, &w, 2.0, 4, 9).unwrap();
        assert!(s.history.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(*s.history.last().unwrap(), s.estimate.value);
    }

    #[test]
    fn khintchine_depth_one() {
        let g = grid(1);
        let one = Weight::ones(g);
        let w = w13();
        let f = StepFunction::from_values(vec![-1.0, 1.0]).unwrap();
        assert_relative_eq!(khintchine_expectation(&one.mul(&w.pow(2.0).unwrap()).unwrap(), &w, 1.0, &f).unwrap(), 1.25);
        let mu = w.pow(2.0).unwrap();
        for bits in 0..2 {
            let sigma = SignPattern::from_bits(g, bits).unwrap();
            assert_relative_eq!(sigma_energy(&mu, &w, 1.0, &f, &sigma).unwrap(), 1.25, epsilon = 1e-14);
        }
        let c = StepFunction::constant(grid(3), 2.0);
        let w3 = cascade_weight(grid(3), 0.5, 0).unwrap();
        assert_eq!(khintchine_expectation(&w3, &w3, 1.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn khintchine_monte_carlo_converges() {
        let g = grid(4);
        let mu = cascade_weight(g, 0.5, 1).unwrap();
        let w = cascade_weight(g, 0.5, 2).unwrap();
        let f = StepFunction::from_fn(g, |i| (i as f64 * 0.7).sin()).unwrap();
        let exact = khintchine_expectation(&mu, &w, 0.5, &f).unwrap();
        let mc = khintchine_monte_carlo(&mu, &w, 0.5, &f, 4000, 3).unwrap();
        assert_relative_eq!(mc, exact, max_relative = 0.05);
    }

    #[test]
    fn bilinear_unweighted_case() {
        let g = grid(5);
        let one = Weight::ones(g);
        let w = cascade_weight(g, 0.5, 4).unwrap();
        let f = StepFunction::from_fn(g, |i| (i as f64).cos()).unwrap();
        let h = StepFunction::from_fn(g, |i| (i % 5) as f64).unwrap();
        let sigma = SignPattern::random(g, 2);
        let terms = bilinear_decomposition(&f, &h, &one, &one, &w, 1.0, &sigma).unwrap();
        assert_eq!(terms.sums[1], 0.0);
        assert_eq!(terms.sums[3], 0.0);
        let pairing = apply_t_haar(&f, &w, 1.0, &sigma).unwrap().inner(&h).unwrap();
        assert_relative_eq!(terms.sums[0] + terms.sums[2], pairing, epsilon = 1e-10);
    }

    #[test]
    fn bilinear_terms_sum_and_bounds() {
        let g = grid(5);
        for seed in 0..5u64 {
            let u = cascade_weight(g, 0.6, seed).unwrap();
            let v = cascade_weight(g, 0.6, seed + 10).unwrap();
            let w = cascade_weight(g, 0.6, seed + 20).unwrap();
            let t = 1.0;
            let sigma = SignPattern::random(g, seed);
            let f = StepFunction::from_fn(g, |i| ((i * 7 + seed as usize) % 13) as f64 - 6.0).unwrap();
            let h = StepFunction::from_fn(g, |i| ((i * 3) % 11) as f64 - 4.0).unwrap();
            let terms = bilinear_decomposition(&f, &h, &u, &v, &w, t, &sigma).unwrap();
            let u_inv = u.recip().unwrap();
            let lhs = apply_t_haar(&f.zip_with(u_inv.as_step(), |a, b| a * b).unwrap(), &w, t, &sigma)
                .unwrap()
                .inner(&h.zip_with(v.as_step(), |a, b| a * b).unwrap())
                .unwrap();
            assert_relative_eq!(terms.total(), lhs, epsilon = 1e-10);

            let norms = f.weighted_norm_sq(u_inv.as_step()).unwrap().sqrt() * h.weighted_norm_sq(v.as_step()).unwrap().sqrt();
            let c1 = condition_c1(&u, &v, &w, t).unwrap().value;
            let c2 = condition_c2(&u, &v, &w, t).unwrap().value;
            let c3 = condition_c3(&u, &v, &w, t).unwrap().value;
            let c4 = condition_c4(&u, &v, &w, t).unwrap().value;
            assert!(terms.sums[0].abs() <= c1.sqrt() * norms * (1.0 + 1e-12));
            assert!(terms.sums[1].abs() <= 2.0 * c2.sqrt() * norms * (1.0 + 1e-12));
            assert!(terms.sums[2].abs() <= 2.0 * c3.sqrt() * norms * (1.0 + 1e-12));
            assert!(terms.sums[3].abs() <= 0.25 * c4 * norms * (1.0 + 1e-12));

            let lambda = lambda_sequence(&u, &v, &w, t).unwrap();
            let fp = f.map(f64::abs).unwrap();
            let hp = h.map(f64::abs).unwrap();
            let form = positive_bilinear_form(&fp, &hp, &u, &v, &w, t, &lambda).unwrap();
            assert!(form <= c4 * fp.norm_sq().sqrt() * hp.norm_sq().sqrt() * (1.0 + 1e-12));
        }
    }
}
