//! Weights on the dyadic grid and their scalar characteristics: the
//! Muckenhoupt, reverse-Hölder, entropy and `C₂ₜ` constants, and the
//! Buckley-type packing constants.
//!
//! Suprema over the dyadic family are maxima over grid intervals, leaves
//! included. For step weights this is exact: every sub-leaf interval sees a
//! constant weight and contributes the constant-weight value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{Averages, DyadicInterval, Grid, StepFunction};
use crate::error::{invalid, Error, Result};

/// Lower bound applied to every weight value at construction.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// A strictly positive step function. Weights built from data are floored at
/// [`WEIGHT_FLOOR`]; pointwise powers and products of weights are kept exact
/// and only required to stay positive and finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    inner: StepFunction,
}

impl Weight {
    /// Clamps values in `[0, floor)` up to [`WEIGHT_FLOOR`]; negative values are
    /// rejected.
    pub fn new(values: StepFunction) -> Result<Self> {
        if let Some((index, &value)) = values.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativeEntry { index, value });
        }
        Ok(Self::floored(values))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(StepFunction::from_values(values)?)
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(invalid("value", format!("{value} is not a finite non-negative number")));
        }
        Ok(Self::floored(StepFunction::constant(grid, value)))
    }

    pub fn ones(grid: Grid) -> Self {
        Self::floored(StepFunction::constant(grid, 1.0))
    }

    fn floored(values: StepFunction) -> Self {
        let grid = values.grid();
        let clamped = values
            .into_values()
            .into_iter()
            .map(|v| v.max(WEIGHT_FLOOR))
            .collect();
        Self {
            inner: StepFunction::from_raw(grid, clamped),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.inner.grid()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        self.inner.values()
    }

    #[inline]
    pub fn as_step(&self) -> &StepFunction {
        &self.inner
    }

    pub fn floor(&self) -> f64 {
        WEIGHT_FLOOR
    }

    fn derived(values: StepFunction) -> Result<Self> {
        if let Some(index) = values.values().iter().position(|&v| !(v > 0.0)) {
            return Err(invalid(
                "weight",
                format!("derived weight underflows to {} at cell {index}", values.values()[index]),
            ));
        }
        Ok(Self { inner: values })
    }

    /// Pointwise power `w^s`.
    pub fn pow(&self, exponent: f64) -> Result<Weight> {
        if exponent == 1.0 {
            return Ok(self.clone());
        }
        Self::derived(self.inner.map(|v| v.powf(exponent))?)
    }

    /// `w^{-1}`.
    pub fn recip(&self) -> Result<Weight> {
        Self::derived(self.inner.map(f64::recip)?)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Weight) -> Result<Weight> {
        Self::derived(self.inner.zip_with(&other.inner, |a, b| a * b)?)
    }

    /// `w(I) = ∫_I w`.
    pub fn mass(&self, interval: DyadicInterval) -> Result<f64> {
        Ok(self.inner.average(interval)? * interval.length())
    }

    pub fn averages(&self) -> Averages {
        self.inner.averages()
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values()[0];
        self.values().iter().all(|&v| v == first)
    }
}

/// Cell averages of `x^α` on the grid, computed from exact integrals.
pub fn power_weight(alpha: f64, grid: Grid) -> Result<Weight> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(invalid("alpha", format!("{alpha} ≤ -1 is not integrable near 0")));
    }
    let s = alpha + 1.0;
    let width = grid.cell_width();
    let values = (0..grid.cells())
        .map(|i| {
            let a = i as f64 * width;
            let b = a + width;
            if i == 0 {
                b.powf(s) / (s * width)
            } else {
                // b^s - a^s = a^s (exp(s log(b/a)) - 1), stable for fine cells.
                a.powf(s) * (s * (width / a).ln_1p()).exp_m1() / (s * width)
            }
        })
        .collect();
    Weight::new(StepFunction::new(grid, values)?)
}

/// Multiplicative dyadic cascade: the root carries 1 and each split multiplies
/// the children by `1 + δξ_I` (left) and `1 - δξ_I` (right) with `ξ_I` uniform
/// on `[-1, 1]`. Each interval draws from its own ChaCha stream, so the result
/// depends only on `(seed, grid, δ)`.
pub fn cascade_weight(grid: Grid, volatility: f64, seed: u64) -> Result<Weight> {
    if !(0.0..1.0).contains(&volatility) {
        return Err(invalid("volatility", format!("{volatility} outside [0, 1)")));
    }
    let n = grid.cells();
    let mut table = vec![0.0; grid.interval_count()];
    table[0] = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in 0..n - 1 {
        rng.set_stream(idx as u64);
        rng.set_word_pos(0);
        let xi: f64 = rng.gen_range(-1.0..=1.0);
        let parent = table[idx];
        table[2 * idx + 1] = parent * (1.0 + volatility * xi);
        table[2 * idx + 2] = parent * (1.0 - volatility * xi);
    }
    Weight::new(StepFunction::from_raw(grid, table.split_off(n - 1)))
}

/// Which quantity a [`WeightCharacteristic`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CharacteristicKind {
    Ap { p: f64 },
    RHp { p: f64 },
    RH1,
    C2t { t: f64 },
    Packing { form: PackingForm },
}

/// Named instances of [`packing_constant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum PackingForm {
    /// `g = base = m = v`, `s = 1`.
    Buckley,
    /// `g = m = w^p`, `base = w`, `s = p`.
    ReverseHolder { p: f64 },
    /// `g = m = w^{-1/(p-1)}`, `base = w`, `s = -1/(p-1)`.
    Muckenhoupt { p: f64 },
    /// `g = m = w`, `base = w^{-1/(p-1)}`, `s = -(p-1)`.
    DualMuckenhoupt { p: f64 },
    Custom { s: f64 },
}

/// Value of a supremum over dyadic intervals together with an interval that
/// attains it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightCharacteristic {
    pub value: f64,
    pub witness: DyadicInterval,
    pub kind: CharacteristicKind,
}

/// Maximum of `value(heap index)` over the first `count` intervals in heap
/// order. Ties go to the earliest index, i.e. the shallowest then leftmost
/// interval.
pub(crate) fn argmax(count: usize, value: impl Fn(usize) -> f64) -> (f64, DyadicInterval) {
    let mut best = value(0);
    let mut best_idx = 0;
    for idx in 1..count {
        let v = value(idx);
        if v > best {
            best = v;
            best_idx = idx;
        }
    }
    (best, DyadicInterval::from_heap_index(best_idx))
}

/// Post-order subtree sums of a non-leaf sequence: entry `I` holds
/// `Σ_{J ⊆ I, J non-leaf} terms[J]`.
pub(crate) fn subtree_sums(grid: Grid, terms: &[f64]) -> Vec<f64> {
    debug_assert_eq!(terms.len(), grid.non_leaf_count());
    let inner = grid.non_leaf_count();
    let mut acc = terms.to_vec();
    // Intervals one level above the leaves have no non-leaf children.
    let first_with_inner_children = (inner + 1) / 2 - 1;
    for idx in (0..first_with_inner_children).rev() {
        acc[idx] += acc[2 * idx + 1] + acc[2 * idx + 2];
    }
    acc
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(invalid("p", format!("{p} must be a finite number > 1")))
    }
}

/// `[w]_{A_p} = max_I ⟨w⟩_I ⟨w^{-1/(p-1)}⟩_I^{p-1}`.
pub fn ap_constant(w: &Weight, p: f64) -> Result<WeightCharacteristic> {
    check_exponent(p)?;
    let dual = w.pow(-1.0 / (p - 1.0))?.averages();
    let avg = w.averages();
    let (value, witness) = argmax(w.grid().interval_count(), |i| {
        avg.at(i) * dual.at(i).powf(p - 1.0)
    });
    Ok(WeightCharacteristic {
        value,
        witness,
        kind: CharacteristicKind::Ap { p },
    })
}

/// `[w]_{RH_p} = max_I ⟨w⟩_I^{-1} ⟨w^p⟩_I^{1/p}`.
pub fn rhp_constant(w: &Weight, p: f64) -> Result<WeightCharacteristic> {
    check_exponent(p)?;
    let powered = w.pow(p)?.averages();
    let avg = w.averages();
    let (value, witness) = argmax(w.grid().interval_count(), |i| {
        powered.at(i).powf(1.0 / p) / avg.at(i)
    });
    Ok(WeightCharacteristic {
        value,
        witness,
        kind: CharacteristicKind::RHp { p },
    })
}

/// `[w]_{RH_1} = max_I ⟨(w/⟨w⟩_I) log(w/⟨w⟩_I)⟩_I`.
pub fn rh1_constant(w: &Weight) -> WeightCharacteristic {
    let grid = w.grid();
    let avg = w.averages();
    let values = w.values();
    let entropy = |idx: usize| {
        let interval = DyadicInterval::from_heap_index(idx);
        let mean = avg.at(idx);
        let cells = &values[grid.cell_range(interval)];
        let sum: f64 = cells
            .iter()
            .map(|&v| {
                let x = v / mean;
                x * x.ln()
            })
            .sum();
        // Jensen gives ≥ 0; clip rounding noise.
        (sum / cells.len() as f64).max(0.0)
    };
    // Leaves are exactly 0; only non-leaf intervals need the O(|I|) sum.
    let (value, witness) = argmax(grid.non_leaf_count(), entropy);
    WeightCharacteristic {
        value,
        witness,
        kind: CharacteristicKind::RH1,
    }
}

/// `[w]_{C_{2t}} = max_I ⟨w^{2t}⟩_I ⟨w⟩_I^{-2t}`.
pub fn c2t_constant(w: &Weight, t: f64) -> Result<WeightCharacteristic> {
    if !t.is_finite() {
        return Err(invalid("t", "must be finite"));
    }
    let powered = w.pow(2.0 * t)?.averages();
    let avg = w.averages();
    let (value, witness) = argmax(w.grid().interval_count(), |i| {
        powered.at(i) / avg.at(i).powf(2.0 * t)
    });
    Ok(WeightCharacteristic {
        value,
        witness,
        kind: CharacteristicKind::C2t { t },
    })
}

/// `max_I (1/(|I|⟨m⟩_I)) Σ_{J ⊆ I} |J| |Δ_J g|² / ⟨base⟩_J^s` with `J` ranging
/// over non-leaf intervals, in one post-order pass.
pub fn packing_constant(g: &Weight, base: &Weight, s: f64, m: &Weight) -> Result<WeightCharacteristic> {
    packing_with_form(g, base, s, m, PackingForm::Custom { s })
}

fn packing_with_form(
    g: &Weight,
    base: &Weight,
    s: f64,
    m: &Weight,
    form: PackingForm,
) -> Result<WeightCharacteristic> {
    let grid = g.grid();
    grid.ensure_same(base.grid())?;
    grid.ensure_same(m.grid())?;
    if !s.is_finite() {
        return Err(invalid("s", "must be finite"));
    }
    let g_avg = g.averages();
    let base_avg = base.averages();
    let m_avg = m.averages();
    let terms: Vec<f64> = (0..grid.non_leaf_count())
        .map(|idx| {
            let len = DyadicInterval::from_heap_index(idx).length();
            let delta = g_avg.delta_at(idx);
            len * delta * delta / base_avg.at(idx).powf(s)
        })
        .collect();
    let sums = subtree_sums(grid, &terms);
    let (value, witness) = argmax(grid.non_leaf_count(), |idx| {
        sums[idx] / (DyadicInterval::from_heap_index(idx).length() * m_avg.at(idx))
    });
    Ok(WeightCharacteristic {
        value,
        witness,
        kind: CharacteristicKind::Packing { form },
    })
}

/// Buckley's packing sum for `v`.
pub fn buckley_packing(v: &Weight) -> WeightCharacteristic {
    packing_with_form(v, v, 1.0, v, PackingForm::Buckley).expect("same grid")
}

/// Packing condition equivalent to `w ∈ RH_p`.
pub fn rhp_packing(w: &Weight, p: f64) -> Result<WeightCharacteristic> {
    check_exponent(p)?;
    let wp = w.pow(p)?;
    packing_with_form(&wp, w, p, &wp, PackingForm::ReverseHolder { p })
}

/// Packing condition implied by `w ∈ A_p`.
pub fn ap_packing(w: &Weight, p: f64) -> Result<WeightCharacteristic> {
    check_exponent(p)?;
    let s = -1.0 / (p - 1.0);
    let dual = w.pow(s)?;
    packing_with_form(&dual, w, s, &dual, PackingForm::Muckenhoupt { p })
}

/// The `A_p` packing condition applied to the dual weight with `p'`.
pub fn dual_ap_packing(w: &Weight, p: f64) -> Result<WeightCharacteristic> {
    check_exponent(p)?;
    let dual = w.pow(-1.0 / (p - 1.0))?;
    packing_with_form(w, &dual, -(p - 1.0), w, PackingForm::DualMuckenhoupt { p })
}
