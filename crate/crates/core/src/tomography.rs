//! Two-qubit state tomography from the nine receiver-setting pairs.
//!
//! Each side measures X (overlap mode, θ = 0), Y (overlap mode, θ = π/2) or
//! Z (reverse mode, early or late arrival, both ports merged). The
//! reconstruction maximizes the multinomial likelihood over physical states
//! parametrized as `ρ = T†T / Tr[T†T]` with `T` lower triangular.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::device::{receiver_effects, Peak, ReceiverConfig, SwitchMode};
use crate::error::{invalid, Error, Result};
use crate::quantum::{born_probability, CMatrix, DensityMatrix, Effect, C64};
use crate::sim::{derive_seed, run_streaming, BasisPolicy, ExperimentPlan, Side, TagSink, TimeTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    X,
    Y,
    Z,
}

impl MeasurementBasis {
    pub const ALL: [MeasurementBasis; 3] = [Self::X, Self::Y, Self::Z];

    /// Receiver configuration realizing this basis, starting from `base`
    /// (losses, visibility and bin separation are kept).
    pub fn configure(self, base: &ReceiverConfig) -> ReceiverConfig {
        let mut r = base.clone();
        r.drive_voltage = 0.0;
        match self {
            Self::X => {
                r.mode = SwitchMode::Overlap;
                r.theta_tps = 0.0;
            }
            Self::Y => {
                r.mode = SwitchMode::Overlap;
                r.theta_tps = FRAC_PI_2;
            }
            Self::Z => {
                r.mode = SwitchMode::Reverse;
                r.theta_tps = 0.0;
            }
        }
        r
    }

    fn letter(self) -> char {
        match self {
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TomographySetting {
    pub basis_a: MeasurementBasis,
    pub basis_b: MeasurementBasis,
}

impl TomographySetting {
    /// The nine settings, Alice's basis major.
    pub fn all() -> [TomographySetting; 9] {
        let b = MeasurementBasis::ALL;
        std::array::from_fn(|i| TomographySetting {
            basis_a: b[i / 3],
            basis_b: b[i % 3],
        })
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.basis_a.letter(), self.basis_b.letter())
    }
}

/// Outcome of one side: port for X and Y, arrival bin for Z.
fn outcome_index(basis: MeasurementBasis, peak: Peak, port: crate::quantum::Port) -> usize {
    match basis {
        MeasurementBasis::Z => usize::from(peak == Peak::Late),
        _ => port.index(),
    }
}

/// The two single-side outcome effects of an ideal receiver in `basis`.
pub fn side_effects(basis: MeasurementBasis) -> [Effect; 2] {
    let config = basis.configure(&ReceiverConfig::ideal(SwitchMode::Overlap, 0.0));
    let effects = receiver_effects(&config).expect("ideal receiver is valid");
    let mut sums = [CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)];
    for e in &effects {
        sums[outcome_index(basis, e.peak, e.port)] += e.effect.matrix();
    }
    sums.map(Effect::from_matrix_unchecked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SettingEffects {
    pub setting: TomographySetting,
    /// Indexed `2·a + b` by the outcomes of Alice and Bob.
    pub effects: [Effect; 4],
}

/// The 36 joint effects, grouped by setting in [`TomographySetting::all`]
/// order. The effects of each setting sum to the identity.
pub fn measurement_set() -> Vec<SettingEffects> {
    TomographySetting::all()
        .into_iter()
        .map(|setting| {
            let a = side_effects(setting.basis_a);
            let b = side_effects(setting.basis_b);
            SettingEffects {
                setting,
                effects: std::array::from_fn(|k| a[k / 2].tensor(&b[k % 2])),
            }
        })
        .collect()
}

/// Coincidence counts of the nine settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TomographyData {
    /// `counts[s][2·a + b]` for setting `s` in [`TomographySetting::all`] order.
    pub counts: [[u64; 4]; 9],
    /// Acquisition time per setting (s); 0 for synthetic data.
    pub duration_s: f64,
    /// Singles of Alice and Bob summed over settings.
    pub singles: [u64; 2],
}

impl TomographyData {
    pub fn from_counts(counts: [[u64; 4]; 9]) -> Self {
        Self {
            counts,
            ..Self::default()
        }
    }

    pub fn setting_total(&self, s: usize) -> u64 {
        self.counts[s].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..9).map(|s| self.setting_total(s)).sum()
    }

    /// Every setting must have at least one count.
    pub fn validate(&self) -> Result<()> {
        for (s, setting) in TomographySetting::all().iter().enumerate() {
            if self.setting_total(s) == 0 {
                return Err(Error::EmptySetting(setting.label()));
            }
        }
        Ok(())
    }
}

/// Outcome probabilities of `rho` for every setting.
pub fn expected_probabilities(rho: &DensityMatrix) -> Result<[[f64; 4]; 9]> {
    let set = measurement_set();
    let mut p = [[0.0; 4]; 9];
    for (s, group) in set.iter().enumerate() {
        for (k, e) in group.effects.iter().enumerate() {
            p[s][k] = born_probability(rho, e)?;
        }
    }
    Ok(p)
}

/// Counts `round(n·p)` per outcome, `n` per setting.
pub fn exact_counts(rho: &DensityMatrix, per_setting: f64) -> Result<TomographyData> {
    let p = expected_probabilities(rho)?;
    Ok(TomographyData::from_counts(
        p.map(|row| row.map(|q| (q * per_setting).round() as u64)),
    ))
}

/// Independent Poisson counts with mean `n·p` per outcome.
pub fn poisson_counts<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    mean_per_setting: f64,
    rng: &mut R,
) -> Result<TomographyData> {
    let p = expected_probabilities(rho)?;
    let mut counts = [[0u64; 4]; 9];
    for s in 0..9 {
        for k in 0..4 {
            let mean = p[s][k] * mean_per_setting;
            if mean > 0.0 {
                let d = Poisson::new(mean).map_err(|e| invalid("mean", e.to_string()))?;
                counts[s][k] = d.sample(rng) as u64;
            }
        }
    }
    Ok(TomographyData::from_counts(counts))
}

/// Least-squares solution of the Born-rule system in the Pauli basis,
/// Hermitized and trace-normalized. May have negative eigenvalues.
pub fn linear_inversion(data: &TomographyData) -> Result<DensityMatrix> {
    data.validate()?;
    let paulis = pauli_products();
    let set = measurement_set();
    let mut design = DMatrix::<f64>::zeros(36, 16);
    let mut freq = DVector::<f64>::zeros(36);
    for (s, group) in set.iter().enumerate() {
        let total = data.setting_total(s) as f64;
        for (k, e) in group.effects.iter().enumerate() {
            let row = 4 * s + k;
            for (j, sigma) in paulis.iter().enumerate() {
                // Tr[E σ]/4 is real for Hermitian E and σ
                design[(row, j)] = (e.matrix() * sigma).trace().re / 4.0;
            }
            freq[row] = data.counts[s][k] as f64 / total;
        }
    }
    let svd = design.svd(true, true);
    let rank = svd.rank(1e-10);
    if rank < 16 {
        return Err(Error::RankDeficient(rank));
    }
    let coeffs = svd
        .solve(&freq, 1e-12)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let mut m = CMatrix::zeros(4, 4);
    for (j, sigma) in paulis.iter().enumerate() {
        m += sigma * C64::new(coeffs[j] / 4.0, 0.0);
    }
    Ok(DensityMatrix::from_raw_normalized(m))
}

fn pauli_products() -> Vec<CMatrix> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let single = [
        CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ];
    let mut out = Vec::with_capacity(16);
    for a in &single {
        for b in &single {
            out.push(a.kronecker(b));
        }
    }
    out
}

/// Probabilities below this are clamped before taking logarithms.
const MIN_PROBABILITY: f64 = 1e-300;

/// Multinomial log-likelihood `Σ n·ln p` with `0·ln p = 0`.
pub fn log_likelihood(data: &TomographyData, rho: &DensityMatrix) -> Result<f64> {
    let p = expected_probabilities(rho)?;
    let mut acc = 0.0;
    for s in 0..9 {
        for k in 0..4 {
            let n = data.counts[s][k];
            if n > 0 {
                acc += n as f64 * p[s][k].max(MIN_PROBABILITY).ln();
            }
        }
    }
    Ok(acc)
}

/// Number of real parameters of a lower-triangular 4×4 `T`: four real
/// diagonal entries, then real and imaginary parts below the diagonal.
pub const PARAMETER_COUNT: usize = 16;

fn lower_pairs() -> impl Iterator<Item = (usize, usize)> {
    (1..4).flat_map(|i| (0..i).map(move |j| (i, j)))
}

pub fn triangle_from_params(x: &[f64]) -> CMatrix {
    let mut t = CMatrix::zeros(4, 4);
    for i in 0..4 {
        t[(i, i)] = C64::new(x[i], 0.0);
    }
    for (k, (i, j)) in lower_pairs().enumerate() {
        t[(i, j)] = C64::new(x[4 + 2 * k], x[5 + 2 * k]);
    }
    t
}

/// `T†T / Tr[T†T]`.
pub fn density_from_params(x: &[f64]) -> DensityMatrix {
    let t = triangle_from_params(x);
    DensityMatrix::from_raw_normalized(t.adjoint() * t)
}

/// Parameters of a positive-definite `ρ`: with `J` the exchange matrix and
/// `JρJ = LL†` its Cholesky factorization, `T = J L† J` is lower triangular
/// and `T†T = ρ`.
pub fn params_from_density(rho: &CMatrix) -> Result<Vec<f64>> {
    let n = 4;
    let mut flipped = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            flipped[(i, j)] = rho[(n - 1 - i, n - 1 - j)];
        }
    }
    let chol = flipped
        .cholesky()
        .ok_or_else(|| invalid("rho", "must be positive definite"))?;
    let l = chol.l();
    let mut t = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = l[(n - 1 - j, n - 1 - i)].conj();
        }
    }
    let mut x = vec![0.0; PARAMETER_COUNT];
    for i in 0..n {
        x[i] = t[(i, i)].re;
    }
    for (k, (i, j)) in lower_pairs().enumerate() {
        x[4 + 2 * k] = t[(i, j)].re;
        x[5 + 2 * k] = t[(i, j)].im;
    }
    Ok(x)
}

/// Negative log-likelihood per count as a function of the triangle
/// parameters, with its analytic gradient.
pub struct Objective {
    effects: Vec<(f64, CMatrix)>,
}

impl Objective {
    pub fn new(data: &TomographyData) -> Result<Self> {
        data.validate()?;
        let total = data.total() as f64;
        let mut effects = Vec::new();
        for (s, group) in measurement_set().into_iter().enumerate() {
            for (k, e) in group.effects.into_iter().enumerate() {
                let n = data.counts[s][k];
                if n > 0 {
                    effects.push((n as f64 / total, e.matrix().clone()));
                }
            }
        }
        Ok(Self { effects })
    }

    /// Value and gradient at `x`.
    ///
    /// With `M = T†T`, `f = -Σ w·ln Tr[EM] + ln Tr[M]` (weights sum to 1), so
    /// `∂f/∂x = 2·Re Tr[G T† ∂T/∂x]` with `G = -Σ w·E/Tr[EM] + I/Tr[M]`.
    pub fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let t = triangle_from_params(x);
        let td = t.adjoint();
        let m = &td * &t;
        let trace = m.trace().re;
        let mut value = trace.ln();
        let mut g = CMatrix::identity(4, 4) * C64::new(1.0 / trace, 0.0);
        for (w, e) in &self.effects {
            let te = crate::quantum::trace_product(e, &m).max(MIN_PROBABILITY * trace);
            value -= w * te.ln();
            g -= e * C64::new(w / te, 0.0);
        }
        let r = g * td;
        let mut grad = vec![0.0; PARAMETER_COUNT];
        for i in 0..4 {
            grad[i] = 2.0 * r[(i, i)].re;
        }
        for (k, (i, j)) in lower_pairs().enumerate() {
            grad[4 + 2 * k] = 2.0 * r[(j, i)].re;
            grad[5 + 2 * k] = -2.0 * r[(j, i)].im;
        }
        (value, grad)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleOptions {
    /// Convergence when the per-count log-likelihood improves by less than
    /// this for `patience` successive iterations.
    pub tolerance: f64,
    pub patience: usize,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            patience: 5,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// Log-likelihood `Σ n·ln p` at `rho`.
    pub log_likelihood: f64,
}

/// Maximum-likelihood reconstruction with default options.
pub fn mle_reconstruct(data: &TomographyData) -> Result<DensityMatrix> {
    mle_reconstruct_with(data, &MleOptions::default()).map(|o| o.rho)
}

/// L-BFGS ascent on the triangle parameters, started from the linear
/// inversion clipped to a physical state and mixed slightly with `I/4` so
/// that its Cholesky factor exists.
pub fn mle_reconstruct_with(data: &TomographyData, opts: &MleOptions) -> Result<MleOutcome> {
    let objective = Objective::new(data)?;
    let start = DensityMatrix::project_physical(linear_inversion(data)?.matrix());
    let mixed = start.matrix() * C64::new(0.99, 0.0)
        + CMatrix::identity(4, 4) * C64::new(0.01 / 4.0, 0.0);
    let mut x = params_from_density(&mixed)?;
    let (mut f, mut g) = objective.evaluate(&x);
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut quiet = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut dir = two_loop(&g, &memory);
        if dot(&dir, &g) >= 0.0 {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
        }
        let step = line_search(&objective, &x, f, &g, &dir);
        let (x_new, f_new, g_new) = match step {
            Some(s) => s,
            None if !memory.is_empty() => {
                memory.clear();
                let sd: Vec<f64> = g.iter().map(|v| -v).collect();
                line_search(&objective, &x, f, &g, &sd).unwrap_or((x.clone(), f, g.clone()))
            }
            None => (x.clone(), f, g.clone()),
        };
        let improvement = f - f_new;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if memory.len() == 10 {
                memory.remove(0);
            }
            memory.push((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        if improvement < opts.tolerance {
            quiet += 1;
            if quiet >= opts.patience {
                let rho = density_from_params(&x);
                let log_likelihood = log_likelihood(data, &rho)?;
                return Ok(MleOutcome {
                    rho,
                    iterations,
                    log_likelihood,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NotConverged {
        iterations,
        best: Box::new(density_from_params(&x)),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_loop(g: &[f64], memory: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Backtracking search satisfying the Armijo condition.
fn line_search(
    objective: &Objective,
    x: &[f64],
    f: f64,
    g: &[f64],
    dir: &[f64],
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let slope = dot(g, dir);
    let mut alpha = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        let (ft, gt) = objective.evaluate(&trial);
        if ft.is_finite() && ft <= f + 1e-4 * alpha * slope {
            return Some((trial, ft, gt));
        }
        alpha *= 0.5;
    }
    None
}

/// Round counter for one setting: a cycle with exactly one click per side
/// is a coincidence, classified by port or by arrival bin.
struct SettingCounter {
    bases: [MeasurementBasis; 2],
    period_ps: f64,
    bin_ps: f64,
    current: Option<i64>,
    clicks: [Vec<(usize, f64)>; 2],
    counts: [u64; 4],
    singles: [u64; 2],
}

impl SettingCounter {
    fn close(&mut self) {
        let [a, b] = &mut self.clicks;
        if a.len() == 1 && b.len() == 1 {
            let oa = classify(self.bases[0], a[0], self.bin_ps);
            let ob = classify(self.bases[1], b[0], self.bin_ps);
            self.counts[2 * oa + ob] += 1;
        }
        a.clear();
        b.clear();
    }
}

/// `(port, phase)` to outcome. Z-basis bins sit at 0 and 2T, split at T.
fn classify(basis: MeasurementBasis, (port, phase): (usize, f64), bin_ps: f64) -> usize {
    match basis {
        MeasurementBasis::Z => usize::from(phase > bin_ps),
        _ => port,
    }
}

impl TagSink for SettingCounter {
    fn accept(&mut self, tags: &[TimeTag]) {
        for tag in tags {
            let t = tag.timestamp_ps as f64;
            let cycle = ((t - self.bin_ps) / self.period_ps).round() as i64;
            if self.current != Some(cycle) {
                self.close();
                self.current = Some(cycle);
            }
            let side = match tag.channel.side() {
                Side::A => 0,
                Side::B => 1,
            };
            self.singles[side] += 1;
            let port = tag.channel.index() % 3;
            self.clicks[side].push((port, t - cycle as f64 * self.period_ps));
        }
    }
}

/// Simulates all nine settings with the plan's source, channels and
/// detectors; the receivers keep their losses and visibility. Setting `s`
/// runs with seed `derive_seed(plan.seed, s)`.
pub fn simulate_tomography(template: &ExperimentPlan) -> Result<TomographyData> {
    if template.basis_policy != BasisPolicy::FixedPhase {
        return Err(invalid("basis_policy", "tomography needs fixed receivers"));
    }
    let mut data = TomographyData {
        duration_s: template.duration_s,
        ..TomographyData::default()
    };
    for (s, setting) in TomographySetting::all().into_iter().enumerate() {
        let mut plan = template.clone();
        plan.receiver_a = setting.basis_a.configure(&template.receiver_a);
        plan.receiver_b = setting.basis_b.configure(&template.receiver_b);
        plan.seed = derive_seed(template.seed, s as u64);
        let mut counter = SettingCounter {
            bases: [setting.basis_a, setting.basis_b],
            period_ps: plan.clock_period_ps(),
            bin_ps: plan.pump.bin_separation_ps,
            current: None,
            clicks: [Vec::new(), Vec::new()],
            counts: [0; 4],
            singles: [0; 2],
        };
        run_streaming(&plan, &mut counter)?;
        counter.close();
        data.counts[s] = counter.counts;
        data.singles[0] += counter.singles[0];
        data.singles[1] += counter.singles[1];
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        bell_phi_plus, concurrence, entanglement_metrics, max_abs_diff, trace_distance, CVector,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(amps: &[C64]) -> CMatrix {
        let v = CVector::from_column_slice(amps);
        &v * v.adjoint()
    }

    #[test]
    fn settings_are_complete() {
        let set = measurement_set();
        assert_eq!(set.len(), 9);
        let labels: std::collections::HashSet<_> =
            set.iter().map(|g| g.setting.label()).collect();
        assert_eq!(labels.len(), 9);
        for g in &set {
            let sum = Effect::sum(g.effects.iter(), 4);
            assert!(max_abs_diff(&sum, &CMatrix::identity(4, 4)) < 1e-12);
        }
    }

    #[test]
    fn xx_plus_plus_is_product_projector() {
        let h = C64::new(0.5, 0.0);
        let plus = ket(&[h * 2f64.sqrt(), h * 2f64.sqrt()]);
        let expected = plus.kronecker(&plus);
        let xx = &measurement_set()[0];
        assert_eq!(xx.setting.label(), "XX");
        assert!(max_abs_diff(xx.effects[0].matrix(), &expected) < 1e-12);
        // Y plus is |R⟩ = (|0⟩ + i|1⟩)/√2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = ket(&[C64::new(s, 0.0), C64::new(0.0, s)]);
        assert!(max_abs_diff(side_effects(MeasurementBasis::Y)[0].matrix(), &r) < 1e-12);
    }

    #[test]
    fn zz_is_computational() {
        let zz = &measurement_set()[8];
        for k in 0..4 {
            assert!(max_abs_diff(
                zz.effects[k].matrix(),
                Effect::basis_projector(4, k, 1.0).matrix()
            ) < 1e-12);
        }
    }

    #[test]
    fn exact_inversion() {
        let bell = bell_phi_plus().density();
        let probs = expected_probabilities(&bell).unwrap();
        // scale to large integer counts so rounding is exact
        let data = TomographyData::from_counts(probs.map(|r| r.map(|p| (p * 4e6).round() as u64)));
        let rho = linear_inversion(&data).unwrap();
        assert!(max_abs_diff(rho.matrix(), bell.matrix()) < 1e-10);

        let mixed = DensityMatrix::maximally_mixed(4);
        let rho = linear_inversion(&exact_counts(&mixed, 4e6).unwrap()).unwrap();
        assert!(max_abs_diff(rho.matrix(), mixed.matrix()) < 1e-10);
    }

    #[test]
    fn noisy_inversion_is_close() {
        let bell = bell_phi_plus().density();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = poisson_counts(&bell, 1e5, &mut rng).unwrap();
        let rho = DensityMatrix::project_physical(linear_inversion(&data).unwrap().matrix());
        assert!(trace_distance(&rho, &bell).unwrap() <= 0.02);
    }

    #[test]
    fn empty_setting_rejected() {
        let mut data = exact_counts(&bell_phi_plus().density(), 100.0).unwrap();
        data.counts[4] = [0; 4];
        assert!(matches!(linear_inversion(&data), Err(Error::EmptySetting(l)) if l == "YY"));
        assert!(matches!(mle_reconstruct(&data), Err(Error::EmptySetting(_))));
    }

    #[test]
    fn cholesky_round_trip() {
        let w = DensityMatrix::werner(0.7).unwrap();
        let x = params_from_density(w.matrix()).unwrap();
        let t = triangle_from_params(&x);
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(t[(i, j)], C64::new(0.0, 0.0));
            }
        }
        assert!(max_abs_diff(density_from_params(&x).matrix(), w.matrix()) < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = poisson_counts(&DensityMatrix::werner(0.8).unwrap(), 1e4, &mut rng).unwrap();
        let obj = Objective::new(&data).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..PARAMETER_COUNT).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = obj.evaluate(&x);
            for k in 0..PARAMETER_COUNT {
                // fourth-order central stencil
                let h = 1e-4;
                let at = |d: f64| {
                    let mut xs = x.clone();
                    xs[k] += d;
                    obj.evaluate(&xs).0
                };
                let fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
                let scale = g[k].abs().max(fd.abs()).max(1e-3);
                assert!((fd - g[k]).abs() / scale < 1e-6, "k={k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn mle_recovers_bell_state() {
        let bell = bell_phi_plus().density();
        let rho = mle_reconstruct(&exact_counts(&bell, 1e5).unwrap()).unwrap();
        let m = entanglement_metrics(&rho).unwrap();
        assert!(m.fidelity_to_phi_plus >= 0.9999, "{}", m.fidelity_to_phi_plus);
    }

    #[test]
    fn mle_werner_concurrence() {
        // analytic concurrence of a Werner state, max(0, (3p - 1)/2)
        let p = 0.9;
        let oracle = (3.0 * p - 1.0) / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = poisson_counts(&DensityMatrix::werner(p).unwrap(), 1e5, &mut rng).unwrap();
        let rho = mle_reconstruct(&data).unwrap();
        let c = concurrence(&rho).unwrap();
        assert!((c - oracle).abs() <= 0.02, "{c} vs {oracle}");
    }

    #[test]
    fn iteration_cap_returns_best() {
        let data = exact_counts(&DensityMatrix::werner(0.9).unwrap(), 1e4).unwrap();
        let opts = MleOptions {
            max_iterations: 2,
            ..MleOptions::default()
        };
        match mle_reconstruct_with(&data, &opts) {
            Err(Error::NotConverged { iterations, best }) => {
                assert_eq!(iterations, 2);
                DensityMatrix::new(best.matrix().clone()).unwrap();
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_shrinks_as_inverse_root() {
        let truth = DensityMatrix::werner(0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let levels = [1e3, 1e4, 1e5, 1e6];
        let mut pts = Vec::new();
        for &n in &levels {
            let mut acc = 0.0;
            for _ in 0..6 {
                let data = poisson_counts(&truth, n, &mut rng).unwrap();
                acc += trace_distance(&mle_reconstruct(&data).unwrap(), &truth).unwrap();
            }
            pts.push((n.log10(), (acc / 6.0).log10()));
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.12, "{slope}");
    }

    #[test]
    fn simulated_ideal_run() {
        let mut plan = ExperimentPlan::ideal(0.0, 0.0, 0.01, 2e-3, 5);
        plan.detector = crate::sim::DetectorModel::ideal();
        let data = simulate_tomography(&plan).unwrap();
        assert!(data.total() > 0);
        let rho = mle_reconstruct(&data).unwrap();
        let f = entanglement_metrics(&rho).unwrap().fidelity_to_phi_plus;
        assert!(f > 0.97, "{f}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn mle_beats_clipped_inversion(p in 0.0f64..1.0, seed in 0u64..1000, n in 200.0f64..20000.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = poisson_counts(&DensityMatrix::werner(p).unwrap(), n, &mut rng).unwrap();
            let clipped = DensityMatrix::project_physical(linear_inversion(&data).unwrap().matrix());
            let out = mle_reconstruct_with(&data, &MleOptions::default()).unwrap();
            DensityMatrix::new(out.rho.matrix().clone()).unwrap();
            prop_assert!(out.log_likelihood >= log_likelihood(&data, &clipped).unwrap() - 1e-6);
        }
    }
}
