//! Operators acting on step functions: the t-Haar multiplier and its adjoint,
//! the constant Haar multiplier `T_σ T_{w,t}`, the positive operator
//! `P^t_{w,λ}`, the weighted dyadic maximal function, weighted Haar functions,
//! and dense matrix assembly.
//!
//! All multipliers share one O(n) kernel. `T_σ T_{w,t}` is diagonal in the
//! Haar basis with entries `σ_I ⟨w⟩_I^{-t}`, and
//! `T^t_{w,σ} f = w^t · T_σ T_{w,t} f`, `(T^t_{w,σ})^* g = T_σ T_{w,t}(w^t g)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::CarlesonSequence;
use crate::dyadic::{check_non_leaf, haar_transform, inverse_haar, DyadicInterval, Grid, HaarExpansion, StepFunction};
use crate::error::{invalid, Error, Result};
use crate::weights::Weight;

/// Largest depth for which dense matrices are assembled.
pub const MATRIX_MAX_DEPTH: u32 = 12;

/// One sign `σ_I = ±1` per non-leaf interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignPattern {
    grid: Grid,
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(grid: Grid, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != grid.non_leaf_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.non_leaf_count(),
                found: signs.len(),
            });
        }
        if let Some(i) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(invalid("signs", format!("entry {i} is {}, not ±1", signs[i])));
        }
        Ok(Self { grid, signs })
    }

    pub fn positive(grid: Grid) -> Self {
        Self {
            grid,
            signs: vec![1; grid.non_leaf_count()],
        }
    }

    /// Bit `i` of `bits` set means `σ = -1` at heap index `i`. Only usable
    /// when `2^D - 1 ≤ 64`.
    pub fn from_bits(grid: Grid, bits: u64) -> Result<Self> {
        let count = grid.non_leaf_count();
        if count > 64 {
            return Err(invalid("grid", "bit encoding needs at most 64 non-leaf intervals"));
        }
        let signs = (0..count)
            .map(|i| if bits >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        Ok(Self { grid, signs })
    }

    pub fn random(grid: Grid, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..grid.non_leaf_count())
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        Self { grid, signs }
    }

    pub fn from_fn(grid: Grid, mut sign: impl FnMut(DyadicInterval) -> bool) -> Self {
        let signs = grid
            .non_leaf_intervals()
            .map(|i| if sign(i) { 1 } else { -1 })
            .collect();
        Self { grid, signs }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn sign(&self, heap_index: usize) -> f64 {
        self.signs[heap_index] as f64
    }

    pub fn get(&self, interval: DyadicInterval) -> Result<i8> {
        check_non_leaf(self.grid, interval)?;
        Ok(self.signs[interval.heap_index()])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// `(α_I^v, β_I^v)` with `h_I = α h_I^v + β 1_I/√|I|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaarSplit {
    pub alpha: f64,
    pub beta: f64,
}

/// `α_I^v = √(⟨v⟩_{I₊}⟨v⟩_{I₋}/⟨v⟩_I)`, `β_I^v = Δ_I v / (2⟨v⟩_I)`.
pub fn haar_split(v: &Weight, interval: DyadicInterval) -> Result<HaarSplit> {
    check_non_leaf(v.grid(), interval)?;
    let avg = v.as_step();
    split_from_means(
        avg.average(interval.left())?,
        avg.average(interval.right())?,
        interval,
    )
}

/// [`haar_split`] for every non-leaf interval, heap ordered.
pub fn haar_split_table(v: &Weight) -> Vec<HaarSplit> {
    let avg = v.averages();
    (0..v.grid().non_leaf_count())
        .map(|idx| {
            let minus = avg.at(2 * idx + 1);
            let plus = avg.at(2 * idx + 2);
            let mean = 0.5 * (minus + plus);
            HaarSplit {
                alpha: (plus * minus / mean).sqrt(),
                beta: (plus - minus) / (2.0 * mean),
            }
        })
        .collect()
}

fn split_from_means(minus: f64, plus: f64, interval: DyadicInterval) -> Result<HaarSplit> {
    if !(minus > 0.0 && plus > 0.0) {
        return Err(Error::DegenerateMass {
            level: interval.level,
            position: interval.position,
        });
    }
    let mean = 0.5 * (minus + plus);
    Ok(HaarSplit {
        alpha: (plus * minus / mean).sqrt(),
        beta: (plus - minus) / (2.0 * mean),
    })
}

/// `h_I^v = v(I)^{-1/2} (√(v(I₋)/v(I₊)) 1_{I₊} - √(v(I₊)/v(I₋)) 1_{I₋})`.
pub fn weighted_haar(v: &Weight, interval: DyadicInterval) -> Result<StepFunction> {
    check_non_leaf(v.grid(), interval)?;
    let grid = v.grid();
    let minus = v.mass(interval.left())?;
    let plus = v.mass(interval.right())?;
    if !(minus > 0.0 && plus > 0.0) {
        return Err(Error::DegenerateMass {
            level: interval.level,
            position: interval.position,
        });
    }
    let norm = (minus + plus).sqrt();
    let mut values = vec![0.0; grid.cells()];
    values[grid.cell_range(interval.right())].fill((minus / plus).sqrt() / norm);
    values[grid.cell_range(interval.left())].fill(-(plus / minus).sqrt() / norm);
    StepFunction::new(grid, values)
}

/// The constant Haar multiplier `T_σ T_{w,t}`, stored as its Haar symbol
/// `σ_I ⟨w⟩_I^{-t}`.
#[derive(Clone, Debug)]
pub struct ConstantHaarMultiplier {
    grid: Grid,
    symbol: Vec<f64>,
}

impl ConstantHaarMultiplier {
    pub fn new(w: &Weight, t: f64, sigma: &SignPattern) -> Result<Self> {
        w.grid().ensure_same(sigma.grid())?;
        let avg = w.averages();
        let symbol = (0..w.grid().non_leaf_count())
            .map(|idx| sigma.sign(idx) * avg.at(idx).powf(-t))
            .collect();
        Ok(Self {
            grid: w.grid(),
            symbol,
        })
    }

    pub fn from_symbol(grid: Grid, symbol: Vec<f64>) -> Result<Self> {
        if symbol.len() != grid.non_leaf_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.non_leaf_count(),
                found: symbol.len(),
            });
        }
        Ok(Self { grid, symbol })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `σ_I ⟨w⟩_I^{-t}` in heap order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.grid.ensure_same(f.grid())?;
        let mut e = haar_transform(f);
        Ok(inverse_haar(&self.apply_coefficients(&mut e)))
    }

    fn apply_coefficients<'e>(&self, e: &'e mut HaarExpansion) -> &'e HaarExpansion {
        e.mean = 0.0;
        for (c, s) in e.coefficients.iter_mut().zip(&self.symbol) {
            *c *= s;
        }
        e
    }
}

/// `T^t_{w,σ}` prepared for repeated application.
#[derive(Clone, Debug)]
pub struct THaarMultiplier {
    constant: ConstantHaarMultiplier,
    w_t: Vec<f64>,
}

impl THaarMultiplier {
    pub fn new(w: &Weight, t: f64, sigma: &SignPattern) -> Result<Self> {
        Ok(Self {
            constant: ConstantHaarMultiplier::new(w, t, sigma)?,
            w_t: w.values().iter().map(|v| v.powf(t)).collect(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.constant.grid
    }

    pub fn constant_part(&self) -> &ConstantHaarMultiplier {
        &self.constant
    }

    /// `w^t` cell values.
    pub fn w_t(&self) -> &[f64] {
        &self.w_t
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let inner = self.constant.apply(f)?;
        Ok(scale_cells(inner, &self.w_t))
    }

    pub fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        self.constant.grid.ensure_same(g.grid())?;
        self.constant.apply(&scale_cells(g.clone(), &self.w_t))
    }
}

fn scale_cells(f: StepFunction, factors: &[f64]) -> StepFunction {
    let grid = f.grid();
    let mut values = f.into_values();
    for (v, s) in values.iter_mut().zip(factors) {
        *v *= s;
    }
    StepFunction::from_raw(grid, values)
}

/// `T^t_{w,σ} f = Σ_I σ_I (w/⟨w⟩_I)^t ⟨f, h_I⟩ h_I`.
pub fn apply_t_haar(f: &StepFunction, w: &Weight, t: f64, sigma: &SignPattern) -> Result<StepFunction> {
    f.grid().ensure_same(w.grid())?;
    THaarMultiplier::new(w, t, sigma)?.apply(f)
}

/// `(T^t_{w,σ})^* g = Σ_I σ_I ⟨w^t g, h_I⟩ ⟨w⟩_I^{-t} h_I`.
pub fn apply_adjoint_t_haar(g: &StepFunction, w: &Weight, t: f64, sigma: &SignPattern) -> Result<StepFunction> {
    g.grid().ensure_same(w.grid())?;
    THaarMultiplier::new(w, t, sigma)?.apply_adjoint(g)
}

/// `T_σ T_{w,t} f = Σ_I σ_I ⟨w⟩_I^{-t} ⟨f, h_I⟩ h_I`.
pub fn apply_constant_haar(f: &StepFunction, w: &Weight, t: f64, sigma: &SignPattern) -> Result<StepFunction> {
    f.grid().ensure_same(w.grid())?;
    ConstantHaarMultiplier::new(w, t, sigma)?.apply(f)
}

/// `P^t_{w,λ}` prepared for repeated application. `P = M_{w^t} Q` with
/// `Q f = Σ_I λ_I/|I| ⟨f⟩_I 1_I`, which is self-adjoint, so `P^* = Q M_{w^t}`.
#[derive(Clone, Debug)]
pub struct PositiveOperator {
    grid: Grid,
    lambda_over_len: Vec<f64>,
    w_t: Vec<f64>,
}

impl PositiveOperator {
    pub fn new(w: &Weight, t: f64, lambda: &CarlesonSequence) -> Result<Self> {
        let grid = w.grid();
        grid.ensure_same(lambda.grid())?;
        if let Some((index, &value)) = lambda.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativeEntry { index, value });
        }
        let lambda_over_len = lambda
            .values()
            .iter()
            .enumerate()
            .map(|(idx, l)| l / DyadicInterval::from_heap_index(idx).length())
            .collect();
        Ok(Self {
            grid,
            lambda_over_len,
            w_t: w.values().iter().map(|v| v.powf(t)).collect(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn averaging_part(&self, f: &[f64]) -> Vec<f64> {
        let f = StepFunction::from_raw(self.grid, f.to_vec());
        let avg = f.averages();
        let inner = self.grid.non_leaf_count();
        let mut acc = vec![0.0; self.grid.interval_count()];
        acc[0] = self.lambda_over_len[0] * avg.at(0);
        for idx in 1..acc.len() {
            let parent = (idx - 1) / 2;
            let own = if idx < inner {
                self.lambda_over_len[idx] * avg.at(idx)
            } else {
                0.0
            };
            acc[idx] = acc[parent] + own;
        }
        acc.split_off(inner)
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.grid.ensure_same(f.grid())?;
        let mut out = self.averaging_part(f.values());
        for (o, s) in out.iter_mut().zip(&self.w_t) {
            *o *= s;
        }
        Ok(StepFunction::from_raw(self.grid, out))
    }

    pub fn apply_adjoint(&self, g: &StepFunction) -> Result<StepFunction> {
        self.grid.ensure_same(g.grid())?;
        let weighted: Vec<f64> = g.values().iter().zip(&self.w_t).map(|(a, b)| a * b).collect();
        Ok(StepFunction::from_raw(self.grid, self.averaging_part(&weighted)))
    }
}

/// `P^t_{w,λ} f(x) = Σ_I (w^t(x)/|I|) λ_I ⟨f⟩_I 1_I(x)`.
pub fn apply_positive(f: &StepFunction, w: &Weight, t: f64, lambda: &CarlesonSequence) -> Result<StepFunction> {
    f.grid().ensure_same(w.grid())?;
    PositiveOperator::new(w, t, lambda)?.apply(f)
}

/// Weighted dyadic maximal function `M_u f(x) = max_{I ∋ x} ⟨|f|⟩^u_I`,
/// computed top-down.
pub fn maximal(f: &StepFunction, u: &Weight) -> Result<StepFunction> {
    let grid = f.grid();
    grid.ensure_same(u.grid())?;
    let abs_fu = StepFunction::from_raw(
        grid,
        f.values().iter().zip(u.values()).map(|(a, b)| a.abs() * b).collect(),
    )
    .averages();
    let u_avg = u.averages();
    let mut best = vec![0.0; grid.interval_count()];
    best[0] = abs_fu.at(0) / u_avg.at(0);
    for idx in 1..best.len() {
        best[idx] = best[(idx - 1) / 2].max(abs_fu.at(idx) / u_avg.at(idx));
    }
    Ok(StepFunction::from_raw(grid, best.split_off(grid.non_leaf_count())))
}

/// The operators that can be turned into dense matrices.
#[derive(Clone, Copy, Debug)]
pub enum OperatorDescriptor<'a> {
    THaar {
        w: &'a Weight,
        t: f64,
        sigma: &'a SignPattern,
    },
    AdjointTHaar {
        w: &'a Weight,
        t: f64,
        sigma: &'a SignPattern,
    },
    ConstantHaar {
        w: &'a Weight,
        t: f64,
        sigma: &'a SignPattern,
    },
    Positive {
        w: &'a Weight,
        t: f64,
        lambda: &'a CarlesonSequence,
    },
    Maximal {
        u: &'a Weight,
    },
}

impl OperatorDescriptor<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::THaar { .. } => "t-haar",
            Self::AdjointTHaar { .. } => "adjoint-t-haar",
            Self::ConstantHaar { .. } => "constant-haar",
            Self::Positive { .. } => "positive",
            Self::Maximal { .. } => "maximal",
        }
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        match *self {
            Self::THaar { w, t, sigma } => apply_t_haar(f, w, t, sigma),
            Self::AdjointTHaar { w, t, sigma } => apply_adjoint_t_haar(f, w, t, sigma),
            Self::ConstantHaar { w, t, sigma } => apply_constant_haar(f, w, t, sigma),
            Self::Positive { w, t, lambda } => apply_positive(f, w, t, lambda),
            Self::Maximal { u } => maximal(f, u),
        }
    }
}

/// Dense kernel of a linear operator on a grid: column `j` is the operator
/// applied to `2^D · 1_{cell j}` (the cell indicator with unit mass). The
/// matrix therefore maps cell masses `∫_{cell} f` to cell values of `Tf`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub source_weight: String,
    pub target_weight: String,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<f64>, source_weight: impl Into<String>, target_weight: impl Into<String>) -> Self {
        Self {
            matrix,
            source_weight: source_weight.into(),
            target_weight: target_weight.into(),
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let n = f.values().len();
        if n != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: n,
            });
        }
        let width = f.grid().cell_width();
        let masses = nalgebra::DVector::from_iterator(n, f.values().iter().map(|v| v * width));
        let out = &self.matrix * masses;
        StepFunction::from_values(out.iter().copied().collect())
    }
}

pub fn assemble_matrix(op: &OperatorDescriptor<'_>, grid: Grid) -> Result<OperatorMatrix> {
    if let OperatorDescriptor::Maximal { .. } = op {
        return Err(Error::Unsupported(op.name()));
    }
    if grid.depth() > MATRIX_MAX_DEPTH {
        return Err(invalid(
            "grid",
            format!("depth {} exceeds dense matrix limit {MATRIX_MAX_DEPTH}", grid.depth()),
        ));
    }
    let n = grid.cells();
    let mut matrix = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = n as f64;
        let column = op.apply(&StepFunction::from_raw(grid, unit.clone()))?;
        matrix.set_column(j, &nalgebra::DVector::from_column_slice(column.values()));
        unit[j] = 0.0;
    }
    Ok(OperatorMatrix::new(matrix, "lebesgue", "lebesgue"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::haar_transform;
    use crate::weights::cascade_weight;
    use approx::assert_relative_eq;

    fn grid(depth: u32) -> Grid {
        Grid::new(depth).unwrap()
    }

    fn w13() -> Weight {
        Weight::from_values(vec![1.0, 3.0]).unwrap()
    }

    fn assert_values(f: &StepFunction, expected: &[f64]) {
        assert_eq!(f.values().len(), expected.len());
        for (a, b) in f.values().iter().zip(expected) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn sign_pattern_validation() {
        let g = grid(2);
        assert!(SignPattern::new(g, vec![1, -1, 1]).is_ok());
        assert!(SignPattern::new(g, vec![1, 0, 1]).is_err());
        assert!(SignPattern::new(g, vec![1, 1]).is_err());
        let s = SignPattern::from_bits(g, 0b101).unwrap();
        assert_eq!(s.as_slice(), &[-1, 1, -1]);
        assert!(SignPattern::from_bits(grid(7), 0).is_err());
        let r = SignPattern::random(grid(5), 3);
        assert_eq!(r.len(), 31);
        assert_eq!(r, SignPattern::random(grid(5), 3));
    }

    #[test]
    fn weighted_haar_examples() {
        let root = DyadicInterval::ROOT;
        let h = weighted_haar(&w13(), root).unwrap();
        assert_values(&h, &[-(1.5f64).sqrt(), 1.0 / 6f64.sqrt()]);
        let v = w13();
        assert_relative_eq!(h.weighted_norm_sq(v.as_step()).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(h.inner(v.as_step()).unwrap(), 0.0, epsilon = 1e-14);

        let g = grid(4);
        let one = Weight::ones(g);
        for i in g.non_leaf_intervals() {
            assert_eq!(weighted_haar(&one, i).unwrap(), StepFunction::haar(g, i).unwrap());
        }
        assert!(matches!(
            weighted_haar(&w13(), root.left()),
            Err(Error::LeafInterval { .. })
        ));
    }

    #[test]
    fn weighted_haar_orthonormal() {
        let g = grid(3);
        let v = cascade_weight(g, 0.7, 5).unwrap();
        let hs: Vec<_> = g.non_leaf_intervals().map(|i| weighted_haar(&v, i).unwrap()).collect();
        for (a, ha) in hs.iter().enumerate() {
            for (b, hb) in hs.iter().enumerate() {
                let prod = ha.zip_with(hb, |x, y| x * y).unwrap();
                let gram = prod.inner(v.as_step()).unwrap();
                assert_relative_eq!(gram, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn haar_split_examples() {
        let s = haar_split(&w13(), DyadicInterval::ROOT).unwrap();
        assert_relative_eq!(s.alpha, 1.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.beta, 0.5, epsilon = 1e-15);
        let c = Weight::constant(grid(3), 4.0).unwrap();
        for i in grid(3).non_leaf_intervals() {
            let s = haar_split(&c, i).unwrap();
            assert_relative_eq!(s.alpha, 2.0, epsilon = 1e-15);
            assert_eq!(s.beta, 0.0);
        }
        let table = haar_split_table(&cascade_weight(grid(4), 0.5, 2).unwrap());
        let v = cascade_weight(grid(4), 0.5, 2).unwrap();
        for i in grid(4).non_leaf_intervals() {
            let s = haar_split(&v, i).unwrap();
            assert_relative_eq!(s.alpha, table[i.heap_index()].alpha, epsilon = 1e-14);
            assert_relative_eq!(s.beta, table[i.heap_index()].beta, epsilon = 1e-14);
        }
    }

    #[test]
    fn t_haar_examples() {
        let g = grid(4);
        let f = StepFunction::from_fn(g, |i| (i as f64).powi(2)).unwrap();
        let w = cascade_weight(g, 0.4, 1).unwrap();
        let plus = SignPattern::positive(g);
        let out = apply_t_haar(&f, &w, 0.0, &plus).unwrap();
        let mean = f.integral();
        let expected: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
        assert_values(&out, &expected);

        let h = StepFunction::from_values(vec![-1.0, 1.0]).unwrap();
        let out = apply_t_haar(&h, &w13(), 1.0, &SignPattern::positive(grid(1))).unwrap();
        assert_values(&out, &[-0.5, 1.5]);

        // w ≡ 1 is the martingale transform: coefficient-wise sign flips.
        let sigma = SignPattern::random(g, 9);
        let out = apply_t_haar(&f, &Weight::ones(g), 0.7, &sigma).unwrap();
        let (ef, eo) = (haar_transform(&f), haar_transform(&out));
        assert_relative_eq!(eo.mean, 0.0, epsilon = 1e-12);
        for idx in 0..g.non_leaf_count() {
            assert_relative_eq!(eo.coefficients[idx], sigma.sign(idx) * ef.coefficients[idx], epsilon = 1e-10);
        }
    }

    #[test]
    fn adjoint_examples() {
        let one = StepFunction::constant(grid(1), 1.0);
        let out = apply_adjoint_t_haar(&one, &w13(), 1.0, &SignPattern::positive(grid(1))).unwrap();
        assert_values(&out, &[-0.5, 0.5]);

        let g = grid(5);
        let f = StepFunction::from_fn(g, |i| (i as f64).cos()).unwrap();
        let sigma = SignPattern::random(g, 4);
        let a = apply_adjoint_t_haar(&f, &Weight::ones(g), 1.3, &sigma).unwrap();
        let b = apply_t_haar(&f, &Weight::ones(g), 1.3, &sigma).unwrap();
        assert_values(&a, b.values());
    }

    #[test]
    fn constant_haar_examples() {
        let h = StepFunction::from_values(vec![-1.0, 1.0]).unwrap();
        let out = apply_constant_haar(&h, &w13(), 1.0, &SignPattern::positive(grid(1))).unwrap();
        assert_values(&out, &[-0.5, 0.5]);

        let g = grid(4);
        let f = StepFunction::from_fn(g, |i| (i % 3) as f64).unwrap();
        let w = cascade_weight(g, 0.5, 3).unwrap();
        let sigma = SignPattern::random(g, 1);
        let martingale = apply_t_haar(&f, &Weight::ones(g), 0.0, &sigma).unwrap();
        assert_values(&apply_constant_haar(&f, &w, 0.0, &sigma).unwrap(), martingale.values());
        assert_values(
            &apply_constant_haar(&f, &Weight::ones(g), 2.0, &sigma).unwrap(),
            martingale.values(),
        );
    }

    #[test]
    fn positive_examples() {
        let g = grid(1);
        let zero = CarlesonSequence::new(vec![0.0], Weight::ones(g)).unwrap();
        let out = apply_positive(&StepFunction::constant(g, 3.0), &w13(), 1.0, &zero).unwrap();
        assert_values(&out, &[0.0, 0.0]);

        let root_only = CarlesonSequence::new(vec![1.0], Weight::ones(g)).unwrap();
        let out = apply_positive(&StepFunction::constant(g, 1.0), &Weight::ones(g), 1.0, &root_only).unwrap();
        assert_values(&out, &[1.0, 1.0]);

        let two = CarlesonSequence::new(vec![2.0], Weight::ones(g)).unwrap();
        let f = StepFunction::from_values(vec![2.0, 0.0]).unwrap();
        let out = apply_positive(&f, &w13(), 1.0, &two).unwrap();
        assert_values(&out, &[2.0, 6.0]);
    }

    #[test]
    fn positive_rejects_negative_lambda() {
        let g = grid(1);
        let bad = CarlesonSequence::from_raw(vec![-1.0], Weight::ones(g));
        assert!(matches!(
            apply_positive(&StepFunction::constant(g, 1.0), &Weight::ones(g), 1.0, &bad),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn maximal_examples() {
        let f = StepFunction::from_values(vec![1.0, 3.0]).unwrap();
        let m = maximal(&f, &Weight::ones(grid(1))).unwrap();
        assert_values(&m, &[2.0, 3.0]);
        let c = StepFunction::constant(grid(4), -2.5);
        let m = maximal(&c, &cascade_weight(grid(4), 0.5, 0).unwrap()).unwrap();
        assert_values(&m, &[2.5; 16]);
    }

    #[test]
    fn matrix_examples() {
        let g = grid(1);
        let w = w13();
        let sigma = SignPattern::positive(g);
        let m = assemble_matrix(&OperatorDescriptor::THaar { w: &w, t: 1.0, sigma: &sigma }, g).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -1.5, 1.5]);
        assert!((m.matrix - expected).abs().max() < 1e-12);

        // σ ≡ +1, t = 0: identity minus the mean projection, in mass coordinates.
        let g = grid(3);
        let n = g.cells() as f64;
        let sigma = SignPattern::positive(g);
        let ones = Weight::ones(g);
        let m = assemble_matrix(&OperatorDescriptor::THaar { w: &ones, t: 0.0, sigma: &sigma }, g).unwrap();
        let expected = DMatrix::from_fn(8, 8, |i, j| if i == j { n - 1.0 } else { -1.0 });
        assert!((m.matrix - expected).abs().max() < 1e-12);

        let u = Weight::ones(g);
        assert_eq!(
            assemble_matrix(&OperatorDescriptor::Maximal { u: &u }, g),
            Err(Error::Unsupported("maximal"))
        );
    }

    #[test]
    fn matrix_matches_streaming() {
        let g = grid(5);
        let w = cascade_weight(g, 0.5, 12).unwrap();
        let sigma = SignPattern::random(g, 2);
        let lambda = CarlesonSequence::new(vec![0.3; g.non_leaf_count()], Weight::ones(g)).unwrap();
        let ops = [
            OperatorDescriptor::THaar { w: &w, t: 0.8, sigma: &sigma },
            OperatorDescriptor::AdjointTHaar { w: &w, t: 0.8, sigma: &sigma },
            OperatorDescriptor::ConstantHaar { w: &w, t: 0.8, sigma: &sigma },
            OperatorDescriptor::Positive { w: &w, t: 0.8, lambda: &lambda },
        ];
        for op in &ops {
            let m = assemble_matrix(op, g).unwrap();
            for k in 0..5 {
                let f = StepFunction::from_fn(g, |i| ((i * 31 + k * 7) % 11) as f64 - 5.0).unwrap();
                let a = m.apply(&f).unwrap();
                let b = op.apply(&f).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() < 1e-10, "{}: {x} vs {y}", op.name());
                }
            }
        }
    }
}
