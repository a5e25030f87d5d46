//! Conditions (i)-(iv) of the three-weight theorem, Carleson sequences and
//! their intensities, and Sawyer-type testing constants.
//!
//! Throughout, `u^{-1}` is the source measure and `μ = v w^{2t}` the target
//! measure of the constant Haar multiplier `T_σ T_{w,t}`.

use serde::Serialize;

use crate::dyadic::{check_non_leaf, haar_transform, Averages, DyadicInterval, Grid};
use crate::error::{Error, Result};
use crate::normest::{power_iteration_norm, weighted_operator_norm, NormEstimate, PowerOptions, EXACT_MAX_DEPTH};
use crate::operators::{assemble_matrix, OperatorDescriptor, PositiveOperator, SignPattern};
use crate::weights::{argmax, subtree_sums, Weight};

/// A supremum over dyadic intervals and an interval attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witnessed {
    pub value: f64,
    pub witness: DyadicInterval,
}

impl From<(f64, DyadicInterval)> for Witnessed {
    fn from((value, witness): (f64, DyadicInterval)) -> Self {
        Self { value, witness }
    }
}

/// Nonnegative numbers `λ_J` on the non-leaf intervals together with the
/// measure their subtree sums are compared against.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonSequence {
    values: Vec<f64>,
    measure: Weight,
}

impl CarlesonSequence {
    pub fn new(values: Vec<f64>, measure: Weight) -> Result<Self> {
        let expected = measure.grid().non_leaf_count();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { index, value });
            }
        }
        Ok(Self { values, measure })
    }

    /// Skips validation.
    pub(crate) fn from_raw(values: Vec<f64>, measure: Weight) -> Self {
        Self { values, measure }
    }

    pub fn grid(&self) -> Grid {
        self.measure.grid()
    }

    /// Heap-ordered values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measure(&self) -> &Weight {
        &self.measure
    }

    pub fn get(&self, interval: DyadicInterval) -> Result<f64> {
        check_non_leaf(self.grid(), interval)?;
        Ok(self.values[interval.heap_index()])
    }

    pub fn intensity(&self) -> Witnessed {
        carleson_intensity(self)
    }
}

/// `max_I (Σ_{J ⊆ I} λ_J) / μ(I)`, with `J` over non-leaf intervals.
pub fn carleson_intensity(seq: &CarlesonSequence) -> Witnessed {
    let grid = seq.grid();
    let sums = subtree_sums(grid, &seq.values);
    let avg = seq.measure.averages();
    argmax(grid.non_leaf_count(), |idx| {
        sums[idx] / (avg.at(idx) * DyadicInterval::from_heap_index(idx).length())
    })
    .into()
}

/// Heap tables shared by every condition.
struct Ingredients {
    grid: Grid,
    u_inv: Weight,
    mu: Weight,
    u_inv_avg: Averages,
    mu_avg: Averages,
    w_avg_t: Vec<f64>,
}

impl Ingredients {
    fn new(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<Self> {
        let grid = u.grid();
        grid.ensure_same(v.grid())?;
        grid.ensure_same(w.grid())?;
        if !t.is_finite() {
            return Err(crate::error::invalid("t", "must be finite"));
        }
        let u_inv = u.recip()?;
        let mu = v.mul(&w.pow(2.0 * t)?)?;
        let w_avg_t = w.averages().as_slice().iter().map(|a| a.powf(t)).collect();
        Ok(Self {
            grid,
            u_inv_avg: u_inv.averages(),
            mu_avg: mu.averages(),
            u_inv,
            mu,
            w_avg_t,
        })
    }

    fn non_leaf_terms(&self, term: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        (0..self.grid.non_leaf_count())
            .map(|idx| term(idx, DyadicInterval::from_heap_index(idx).length()))
            .collect()
    }

    fn c1(&self) -> Witnessed {
        argmax(self.grid.interval_count(), |i| {
            let wt = self.w_avg_t[i];
            self.u_inv_avg.at(i) * self.mu_avg.at(i) / (wt * wt)
        })
        .into()
    }

    fn c2_sequence(&self) -> CarlesonSequence {
        let values = self.non_leaf_terms(|i, len| {
            let d = self.u_inv_avg.delta_at(i);
            let wt = self.w_avg_t[i];
            len * d * d * self.mu_avg.at(i) / (wt * wt)
        });
        CarlesonSequence::from_raw(values, self.u_inv.clone())
    }

    fn c3_sequence(&self) -> CarlesonSequence {
        let values = self.non_leaf_terms(|i, len| {
            let d = self.mu_avg.delta_at(i);
            let wt = self.w_avg_t[i];
            len * d * d * self.u_inv_avg.at(i) / (wt * wt)
        });
        CarlesonSequence::from_raw(values, self.mu.clone())
    }

    fn lambda(&self) -> CarlesonSequence {
        let values = self.non_leaf_terms(|i, len| {
            let a = self.u_inv_avg.delta_at(i).abs() / self.u_inv_avg.at(i);
            let b = self.mu_avg.delta_at(i).abs() / self.mu_avg.at(i);
            a * b * len / self.w_avg_t[i]
        });
        CarlesonSequence::from_raw(values, Weight::ones(self.grid))
    }
}

/// Condition (i): `max_I ⟨u^{-1}⟩_I ⟨v w^{2t}⟩_I / ⟨w⟩_I^{2t}`.
pub fn condition_c1(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<Witnessed> {
    Ok(Ingredients::new(u, v, w, t)?.c1())
}

/// `μ_J = |J| |Δ_J u^{-1}|² ⟨v w^{2t}⟩_J / ⟨w⟩_J^{2t}` as a `u^{-1}`-Carleson
/// sequence.
pub fn condition_c2_sequence(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<CarlesonSequence> {
    Ok(Ingredients::new(u, v, w, t)?.c2_sequence())
}

/// `ρ_J = |J| |Δ_J (v w^{2t})|² ⟨u^{-1}⟩_J / ⟨w⟩_J^{2t}` as a `v w^{2t}`-Carleson
/// sequence.
pub fn condition_c3_sequence(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<CarlesonSequence> {
    Ok(Ingredients::new(u, v, w, t)?.c3_sequence())
}

pub fn condition_c2(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<Witnessed> {
    Ok(condition_c2_sequence(u, v, w, t)?.intensity())
}

pub fn condition_c3(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<Witnessed> {
    Ok(condition_c3_sequence(u, v, w, t)?.intensity())
}

/// `λ_I = (|Δ_I(v w^{2t})| / ⟨v w^{2t}⟩_I) (|Δ_I u^{-1}| / ⟨u^{-1}⟩_I) (|I| / ⟨w⟩_I^t)`,
/// carried with Lebesgue measure.
pub fn lambda_sequence(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<CarlesonSequence> {
    Ok(Ingredients::new(u, v, w, t)?.lambda())
}

/// How `C₄ = ‖P^t_{w,λ}‖_{L²(u)→L²(v)}` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum C4Method {
    /// Dense SVD up to [`EXACT_MAX_DEPTH`], power iteration beyond.
    #[default]
    Auto,
    Exact,
    Iterative,
}

/// Condition (iv).
pub fn condition_c4(u: &Weight, v: &Weight, w: &Weight, t: f64) -> Result<NormEstimate> {
    let lambda = lambda_sequence(u, v, w, t)?;
    positive_norm(u, v, w, t, &lambda, C4Method::Auto)
}

fn positive_norm(
    u: &Weight,
    v: &Weight,
    w: &Weight,
    t: f64,
    lambda: &CarlesonSequence,
    method: C4Method,
) -> Result<NormEstimate> {
    let exact = match method {
        C4Method::Auto => u.grid().depth() <= EXACT_MAX_DEPTH,
        C4Method::Exact => true,
        C4Method::Iterative => false,
    };
    if exact {
        let m = assemble_matrix(&OperatorDescriptor::Positive { w, t, lambda }, u.grid())?;
        weighted_operator_norm(&m, u, v)
    } else {
        let op = PositiveOperator::new(w, t, lambda)?;
        // P maps nonnegative functions to nonnegative functions, so a constant
        // start vector overlaps the top singular vector.
        let options = PowerOptions {
            start: Some(crate::dyadic::StepFunction::constant(u.grid(), 1.0)),
            ..PowerOptions::default()
        };
        Ok(power_iteration_norm(&op, u, v, &options)?.estimate)
    }
}

/// Which special cases an instance falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpecializationFlags {
    /// `u = v`.
    pub one_weight: bool,
    /// `u = v ≡ 1`.
    pub unweighted: bool,
    /// `w` constant, so the multiplier is a martingale transform.
    pub martingale: bool,
}

impl SpecializationFlags {
    pub fn detect(u: &Weight, v: &Weight, w: &Weight) -> Self {
        let is_one = |x: &Weight| x.values().iter().all(|&a| a == 1.0);
        Self {
            one_weight: u == v,
            unweighted: is_one(u) && is_one(v),
            martingale: w.is_constant(),
        }
    }
}

/// All four constants of the three-weight theorem for one `(u, v, w, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub t: f64,
    pub c1: Witnessed,
    pub c2: Witnessed,
    pub c3: Witnessed,
    pub c4: NormEstimate,
    pub lambda: CarlesonSequence,
    pub flags: SpecializationFlags,
}

impl ConditionReport {
    pub fn compute(u: &Weight, v: &Weight, w: &Weight, t: f64, c4: C4Method) -> Result<Self> {
        let ing = Ingredients::new(u, v, w, t)?;
        let lambda = ing.lambda();
        let c4 = positive_norm(u, v, w, t, &lambda, c4)?;
        Ok(Self {
            t,
            c1: ing.c1(),
            c2: ing.c2_sequence().intensity(),
            c3: ing.c3_sequence().intensity(),
            c4,
            lambda,
            flags: SpecializationFlags::detect(u, v, w),
        })
    }

    /// `√C₁ + √C₂ + √C₃ + C₄`.
    pub fn combined(&self) -> f64 {
        self.c1.value.sqrt() + self.c2.value.sqrt() + self.c3.value.sqrt() + self.c4.value
    }

    /// Flat JSON object; witnesses are `[level, position]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t": self.t,
            "c1": self.c1.value,
            "c1_witness": self.c1.witness,
            "c2": self.c2.value,
            "c2_witness": self.c2.witness,
            "c3": self.c3.value,
            "c3_witness": self.c3.witness,
            "c4": self.c4.value,
            "c4_method": self.c4.method,
            "c4_bound": self.c4.bound,
            "c4_iterations": self.c4.iterations,
            "c4_residual": self.c4.residual,
            "combined": self.combined(),
            "lambda": self.lambda.values(),
            "one_weight": self.flags.one_weight,
            "unweighted": self.flags.unweighted,
            "martingale": self.flags.martingale,
        })
    }
}

/// Testing constants of `S = T_σ T_{w,t}` from `L²(u)` to `L²(μ)`, `μ = v w^{2t}`.
/// Each is bounded by `‖S‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SawyerConstants {
    /// `max_I ∫ |S(1_I u^{-1})|² μ / u^{-1}(I)`.
    pub forward: Witnessed,
    /// `max_I ∫ |S(1_I μ)|² u^{-1} / μ(I)`.
    pub dual: Witnessed,
    /// As `forward` with the integral restricted to `I`.
    pub forward_local: Witnessed,
    /// As `dual` with the integral restricted to `I`.
    pub dual_local: Witnessed,
    /// `max_{|I|=|J|} |⟨S(1_I u^{-1}), 1_J μ⟩|² / (u^{-1}(I) μ(J))`, witnessed by `I`.
    pub pairing: Witnessed,
}

impl SawyerConstants {
    pub fn max(&self) -> f64 {
        [self.forward, self.dual, self.forward_local, self.dual_local, self.pairing]
            .iter()
            .map(|c| c.value)
            .fold(0.0, f64::max)
    }
}

pub fn sawyer_testing(u: &Weight, v: &Weight, w: &Weight, t: f64, sigma: &SignPattern) -> Result<SawyerConstants> {
    let ing = Ingredients::new(u, v, w, t)?;
    ing.grid.ensure_same(sigma.grid())?;
    let symbol: Vec<f64> = (0..ing.grid.non_leaf_count())
        .map(|i| sigma.sign(i) / ing.w_avg_t[i])
        .collect();
    let forward = TestingSweep::new(&symbol, &ing.u_inv, &ing.mu).run();
    let dual = TestingSweep::new(&symbol, &ing.mu, &ing.u_inv).run();
    Ok(SawyerConstants {
        forward: forward.full,
        dual: dual.full,
        forward_local: forward.local,
        dual_local: dual.local,
        pairing: forward.pairing,
    })
}

struct SweepResult {
    full: Witnessed,
    local: Witnessed,
    pairing: Witnessed,
}

/// Evaluates `S(1_I a)` against the measure `b` for every interval `I`.
///
/// Outside `I` the function `S(1_I a)` only sees the Haar coefficients of the
/// ancestors of `I`, so it is constant on the sibling of each interval of the
/// ancestor chain. Inside `I` it is a local inverse transform. Each interval
/// costs `O(level + |I| 2^D)`, so a sweep is `O(n D)`.
struct TestingSweep<'a> {
    grid: Grid,
    symbol: &'a [f64],
    a_mass: Vec<f64>,
    a_coeffs: Vec<f64>,
    b_cells: &'a [f64],
    b_mass: Vec<f64>,
    /// `max_mass[j][K]`: largest `b(J)` over level-`j` intervals `J ⊆ K`.
    max_mass: Vec<Vec<f64>>,
}

fn masses(avg: &Averages) -> Vec<f64> {
    avg.as_slice()
        .iter()
        .enumerate()
        .map(|(i, a)| a * DyadicInterval::from_heap_index(i).length())
        .collect()
}

impl<'a> TestingSweep<'a> {
    fn new(symbol: &'a [f64], a: &'a Weight, b: &'a Weight) -> Self {
        let grid = a.grid();
        let b_mass = masses(&b.averages());
        let max_mass = (0..=grid.depth())
            .map(|j| {
                let end = (1usize << (j + 1)) - 1;
                let mut table = b_mass[..end].to_vec();
                for idx in (0..(1usize << j) - 1).rev() {
                    table[idx] = table[2 * idx + 1].max(table[2 * idx + 2]);
                }
                table
            })
            .collect();
        Self {
            grid,
            symbol,
            a_mass: masses(&a.averages()),
            a_coeffs: haar_transform(a.as_step()).coefficients,
            b_cells: b.values(),
            b_mass,
            max_mass,
        }
    }

    fn run(&self) -> SweepResult {
        let count = self.grid.interval_count();
        let mut full = Vec::with_capacity(count);
        let mut local = Vec::with_capacity(count);
        let mut pairing = Vec::with_capacity(count);
        let (mut cur, mut next) = (Vec::new(), Vec::new());
        for idx in 0..count {
            let interval = DyadicInterval::from_heap_index(idx);
            let j = interval.level;
            let k = interval.position;
            let mass_a = self.a_mass[idx];

            let mut outside = 0.0;
            let mut pair = 0.0f64;
            let mut acc = 0.0;
            for i in 0..j {
                let anc = DyadicInterval::new(i, k >> (j - i));
                let step = self.symbol[anc.heap_index()] * mass_a / anc.length();
                let right = (k >> (j - i - 1)) & 1 == 1;
                let sibling = if right { anc.left() } else { anc.right() };
                let value = acc - step;
                outside += value * value * self.b_mass[sibling.heap_index()];
                pair = pair.max(value * value * self.max_mass[j as usize][sibling.heap_index()]);
                acc += step;
            }

            cur.clear();
            cur.push(acc);
            for level in j..self.grid.depth() {
                next.clear();
                let first = k << (level - j);
                let inv_sqrt = (1u64 << level) as f64;
                let inv_sqrt = inv_sqrt.sqrt();
                for (m, &value) in cur.iter().enumerate() {
                    let node = DyadicInterval::new(level, first + m).heap_index();
                    let c = self.symbol[node] * self.a_coeffs[node] * inv_sqrt;
                    next.push(value - c);
                    next.push(value + c);
                }
                std::mem::swap(&mut cur, &mut next);
            }
            let range = self.grid.cell_range(interval);
            let width = self.grid.cell_width();
            let (mut inside, mut first_moment) = (0.0, 0.0);
            for (g, b) in cur.iter().zip(&self.b_cells[range]) {
                inside += g * g * b * width;
                first_moment += g * b * width;
            }
            pair = pair.max(first_moment * first_moment / self.b_mass[idx]);

            full.push((inside + outside) / mass_a);
            local.push(inside / mass_a);
            pairing.push(pair / mass_a);
        }
        SweepResult {
            full: argmax(count, |i| full[i]).into(),
            local: argmax(count, |i| local[i]).into(),
            pairing: argmax(count, |i| pairing[i]).into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::StepFunction;
    use crate::operators::ConstantHaarMultiplier;
    use crate::weights::{c2t_constant, cascade_weight};
    use approx::assert_relative_eq;

    fn grid(depth: u32) -> Grid {
        Grid::new(depth).unwrap()
    }

    fn w(values: &[f64]) -> Weight {
        Weight::from_values(values.to_vec()).unwrap()
    }

    #[test]
    fn intensity_non_leaf_convention() {
        let g = grid(2);
        let values = g.non_leaf_intervals().map(|i| i.length()).collect();
        let seq = CarlesonSequence::new(values, Weight::ones(g)).unwrap();
        let b = carleson_intensity(&seq);
        assert_relative_eq!(b.value, 2.0, epsilon = 1e-15);
        assert_eq!(b.witness, DyadicInterval::ROOT);

        let zero = CarlesonSequence::new(vec![0.0; 7], Weight::ones(grid(3))).unwrap();
        assert_eq!(zero.intensity().value, 0.0);
    }

    #[test]
    fn carleson_validation() {
        let g = grid(2);
        assert!(matches!(
            CarlesonSequence::new(vec![1.0, -1.0, 0.0], Weight::ones(g)),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(CarlesonSequence::new(vec![1.0], Weight::ones(g)).is_err());
        assert!(CarlesonSequence::new(vec![f64::NAN, 0.0, 0.0], Weight::ones(g)).is_err());
    }

    #[test]
    fn c1_examples() {
        let g = grid(4);
        let one = Weight::ones(g);
        assert_relative_eq!(condition_c1(&one, &one, &one, 0.7).unwrap().value, 1.0);
        let ones1 = Weight::ones(grid(1));
        let c1 = condition_c1(&ones1, &ones1, &w(&[1.0, 3.0]), 1.0).unwrap();
        assert_relative_eq!(c1.value, 1.25, epsilon = 1e-14);

        let u = cascade_weight(g, 0.6, 1).unwrap();
        let v = cascade_weight(g, 0.6, 2).unwrap();
        let c1 = condition_c1(&u, &v, &one, 3.0).unwrap();
        let (ua, va) = (u.recip().unwrap().averages(), v.averages());
        let joint = g.intervals().map(|i| ua.get(i) * va.get(i)).fold(0.0, f64::max);
        assert_relative_eq!(c1.value, joint, epsilon = 1e-14);

        let w2 = cascade_weight(g, 0.6, 3).unwrap();
        let c2t = c2t_constant(&w2, 1.5).unwrap().value;
        assert_relative_eq!(condition_c1(&one, &one, &w2, 1.5).unwrap().value, c2t, epsilon = 1e-12);
    }

    #[test]
    fn c2_c3_examples() {
        let g = grid(1);
        let one = Weight::ones(g);
        let u = w(&[1.0, 3.0]);
        let mu = condition_c2_sequence(&u, &one, &one, 0.3).unwrap();
        assert_relative_eq!(mu.values()[0], 4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(mu.intensity().value, 2.0 / 3.0, epsilon = 1e-15);

        let g = grid(5);
        let one = Weight::ones(g);
        let wt = cascade_weight(g, 0.5, 8).unwrap();
        assert_eq!(condition_c2(&one, &wt, &wt, 1.0).unwrap().value, 0.0);

        let rho = condition_c3_sequence(&one, &one, &wt, 1.0).unwrap();
        let w2 = wt.pow(2.0).unwrap().averages();
        let wa = wt.averages();
        for i in g.non_leaf_intervals() {
            let expected = i.length() * w2.delta(i).powi(2) / wa.get(i).powi(2);
            assert_relative_eq!(rho.get(i).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn lambda_examples() {
        let g = grid(4);
        let one = Weight::ones(g);
        let x = cascade_weight(g, 0.5, 4).unwrap();
        assert!(lambda_sequence(&one, &x, &x, 1.0).unwrap().values().iter().all(|&l| l == 0.0));
        assert!(lambda_sequence(&x, &one, &one, 2.0).unwrap().values().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn c4_vanishes_with_lambda() {
        let g = grid(4);
        let one = Weight::ones(g);
        let w = cascade_weight(g, 0.5, 4).unwrap();
        assert_eq!(condition_c4(&one, &one, &w, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn report_combined_and_json() {
        let g = grid(4);
        let u = cascade_weight(g, 0.5, 1).unwrap();
        let v = cascade_weight(g, 0.5, 2).unwrap();
        let w = cascade_weight(g, 0.5, 3).unwrap();
        let r = ConditionReport::compute(&u, &v, &w, 2.0, C4Method::Auto).unwrap();
        let expected = r.c1.value.sqrt() + r.c2.value.sqrt() + r.c3.value.sqrt() + r.c4.value;
        assert_eq!(r.combined(), expected);
        assert_eq!(r.flags, SpecializationFlags { one_weight: false, unweighted: false, martingale: false });
        let json = r.to_json();
        assert_eq!(json["c1_witness"], serde_json::json!([r.c1.witness.level, r.c1.witness.position]));
        assert_eq!(json["c4_method"], "exact-spectral");
        assert_eq!(json["lambda"].as_array().unwrap().len(), 15);

        let one = Weight::ones(g);
        let flags = SpecializationFlags::detect(&one, &one, &one);
        assert!(flags.one_weight && flags.unweighted && flags.martingale);
    }

    fn brute_force_sawyer(u: &Weight, v: &Weight, w: &Weight, t: f64, sigma: &SignPattern) -> [f64; 5] {
        let g = u.grid();
        let u_inv = u.recip().unwrap();
        let mu = v.mul(&w.pow(2.0 * t).unwrap()).unwrap();
        let s = ConstantHaarMultiplier::new(w, t, sigma).unwrap();
        let restricted = |f: &StepFunction, i: DyadicInterval| {
            let mut vals = vec![0.0; g.cells()];
            vals[g.cell_range(i)].copy_from_slice(&f.values()[g.cell_range(i)]);
            StepFunction::new(g, vals).unwrap()
        };
        let mut out = [0.0f64; 5];
        for i in g.intervals() {
            let ind = StepFunction::indicator(g, i).unwrap();
            let fa = ind.zip_with(u_inv.as_step(), |x, y| x * y).unwrap();
            let fb = ind.zip_with(mu.as_step(), |x, y| x * y).unwrap();
            let (sa, sb) = (s.apply(&fa).unwrap(), s.apply(&fb).unwrap());
            let (ma, mb) = (u_inv.mass(i).unwrap(), mu.mass(i).unwrap());
            out[0] = out[0].max(sa.weighted_norm_sq(mu.as_step()).unwrap() / ma);
            out[1] = out[1].max(sb.weighted_norm_sq(u_inv.as_step()).unwrap() / mb);
            out[2] = out[2].max(restricted(&sa, i).weighted_norm_sq(mu.as_step()).unwrap() / ma);
            out[3] = out[3].max(restricted(&sb, i).weighted_norm_sq(u_inv.as_step()).unwrap() / mb);
            for j in g.intervals().filter(|j| j.level == i.level) {
                let fj = StepFunction::indicator(g, j).unwrap().zip_with(mu.as_step(), |x, y| x * y).unwrap();
                let p = sa.inner(&fj).unwrap();
                out[4] = out[4].max(p * p / (ma * mu.mass(j).unwrap()));
            }
        }
        out
    }

    #[test]
    fn sawyer_hand_example() {
        let g = grid(1);
        let one = Weight::ones(g);
        let s = sawyer_testing(&one, &one, &one, 1.0, &SignPattern::positive(g)).unwrap();
        // I = [0,½): S 1_I = -½ h, restricted integral ⅛ over u^{-1}(I) = ½.
        assert_relative_eq!(s.forward_local.value, 0.25, epsilon = 1e-15);
        assert_eq!(s.forward_local.witness, DyadicInterval::new(1, 0));
        assert_relative_eq!(s.forward.value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn sawyer_matches_brute_force() {
        for depth in [1, 3, 5] {
            let g = grid(depth);
            for seed in 0..4 {
                let u = cascade_weight(g, 0.6, seed).unwrap();
                let v = cascade_weight(g, 0.6, seed + 100).unwrap();
                let w = cascade_weight(g, 0.6, seed + 200).unwrap();
                let sigma = SignPattern::random(g, seed);
                let t = [-1.0, 0.5, 1.0, 2.0][seed as usize];
                let fast = sawyer_testing(&u, &v, &w, t, &sigma).unwrap();
                let slow = brute_force_sawyer(&u, &v, &w, t, &sigma);
                let got = [fast.forward, fast.dual, fast.forward_local, fast.dual_local, fast.pairing];
                for (a, b) in got.iter().zip(slow) {
                    assert_relative_eq!(a.value, b, max_relative = 1e-10);
                }
            }
        }
    }
}
