//! Domany-Kinzel model: local operator, Monte Carlo evolution on the
//! integers, survival estimates and critical scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::local::LocalOperator;
use crate::matrix::C64;
use crate::spectrum::SpectrumMultiset;

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream = trial index)";

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DkParams {
    pub p: f64,
    pub q: f64,
}

impl DkParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParamOutOfRange(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(Self { p, q })
    }

    /// Oriented site percolation, `q = p`.
    pub fn site(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    /// Oriented bond percolation, `q = 1 - (1 - p)^2`.
    pub fn bond(p: f64) -> Result<Self> {
        Self::new(p, 1.0 - (1.0 - p) * (1.0 - p))
    }

    pub fn attractive(&self) -> bool {
        self.p <= self.q
    }

    /// Birth probability given the number of occupied parents.
    pub fn f(&self, count: u8) -> f64 {
        match count {
            0 => 0.0,
            1 => self.p,
            _ => self.q,
        }
    }
}

pub fn dk_local_operator(params: DkParams) -> LocalOperator {
    LocalOperator::dk_form(params.p, params.q)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeState {
    occupied: Vec<i64>,
    time: u64,
}

impl LatticeState {
    pub fn new(sites: impl IntoIterator<Item = i64>) -> Self {
        let mut occupied: Vec<i64> = sites.into_iter().collect();
        occupied.sort_unstable();
        occupied.dedup();
        Self { occupied, time: 0 }
    }

    pub fn occupied(&self) -> &[i64] {
        &self.occupied
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, x: i64) -> bool {
        self.occupied.binary_search(&x).is_ok()
    }
}

/// One synchronous update: site `x` is occupied at the next time with
/// probability `f(|xi ∩ {x, x+1}|)`, independently over `x`.
pub fn dk_step<R: Rng + ?Sized>(
    state: &LatticeState,
    params: DkParams,
    rng: &mut R,
) -> LatticeState {
    let occ = &state.occupied;
    let mut next = Vec::with_capacity(occ.len() + 1);
    let mut last: Option<i64> = None;
    for (idx, &y) in occ.iter().enumerate() {
        let left_occupied = idx > 0 && occ[idx - 1] == y - 1;
        let right_occupied = occ.get(idx + 1) == Some(&(y + 1));
        // candidate y-1 sees {y-1, y}; skip it if already emitted as the previous y
        if last != Some(y - 1) {
            let count = 1 + u8::from(left_occupied);
            if rng.gen::<f64>() < params.f(count) {
                next.push(y - 1);
            }
        }
        let count = 1 + u8::from(right_occupied);
        if rng.gen::<f64>() < params.f(count) {
            next.push(y);
        }
        last = Some(y);
    }
    LatticeState {
        occupied: next,
        time: state.time + 1,
    }
}

/// Per-trial generator: `seed` fixes the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Wilson score interval at 95 %.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // rounding can push the bounds past phat at s = 0 or s = n
    (
        (centre - half).clamp(0.0, phat),
        (centre + half).clamp(phat, 1.0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "A")]
    pub seed_set: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub survived: u64,
    pub estimate: f64,
    pub ci: [f64; 2],
}

impl SurvivalEstimate {
    /// Complementary extinction estimate `1 - sigma`.
    pub fn extinction(&self) -> f64 {
        1.0 - self.estimate
    }

    pub fn standard_error(&self) -> f64 {
        let n = self.trials.max(1) as f64;
        (self.estimate * (1.0 - self.estimate) / n).sqrt()
    }
}

/// Fraction of `trials` runs from `seed_set` still alive at `horizon`.
pub fn estimate_survival(
    params: DkParams,
    seed_set: &[i64],
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    if horizon == 0 || trials == 0 {
        return Err(Error::InvalidInput(
            "horizon and trials must be at least 1".into(),
        ));
    }
    let start = LatticeState::new(seed_set.iter().copied());
    let survived = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = trial_rng(seed, trial);
            let mut state = start.clone();
            for _ in 0..horizon {
                if state.is_empty() {
                    return false;
                }
                state = dk_step(&state, params, &mut rng);
            }
            !state.is_empty()
        })
        .count() as u64;
    let (lo, hi) = wilson_interval(survived, trials);
    Ok(SurvivalEstimate {
        p: params.p,
        q: params.q,
        seed_set: start.occupied,
        horizon,
        trials,
        seed,
        survived,
        estimate: survived as f64 / trials as f64,
        ci: [lo, hi],
    })
}

/// Survival probability at `q = 1`: `1 - (1-p)^2/p^2` for `p >= 1/2`,
/// zero below.
pub fn rho_q1_closed(p: f64) -> f64 {
    if p >= 0.5 {
        1.0 - (1.0 - p).powi(2) / (p * p)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Survival,
    Extinction,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Survival => "survival",
            Region::Extinction => "extinction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub p: f64,
    pub estimate: f64,
    pub ci: [f64; 2],
    pub label: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalScanResult {
    pub q: f64,
    pub horizon: u64,
    pub trials: u64,
    pub threshold: f64,
    pub seed: u64,
    pub points: Vec<ScanPoint>,
    pub bracket: (f64, f64),
}

/// Estimates survival along `p_grid` at fixed `q` and reports the first
/// adjacent pair whose estimates straddle `threshold`. Every grid point
/// uses the same trial streams.
pub fn scan_critical(
    q: f64,
    p_grid: &[f64],
    horizon: u64,
    trials: u64,
    threshold: f64,
    seed: u64,
) -> Result<CriticalScanResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "threshold {threshold} must lie in (0, 1)"
        )));
    }
    if p_grid.is_empty() || p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(
            "p grid must be non-empty and sorted".into(),
        ));
    }
    let points = p_grid
        .iter()
        .map(|&p| {
            let est = estimate_survival(DkParams::new(p, q)?, &[0], horizon, trials, seed)?;
            Ok(ScanPoint {
                p,
                estimate: est.estimate,
                ci: est.ci,
                label: if est.estimate < threshold {
                    Region::Extinction
                } else {
                    Region::Survival
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bracket = points
        .windows(2)
        .find(|w| w[0].label != w[1].label && w[0].p < w[1].p)
        .map(|w| (w[0].p, w[1].p));
    match bracket {
        Some(bracket) => Ok(CriticalScanResult {
            q,
            horizon,
            trials,
            threshold,
            seed,
            points,
            bracket,
        }),
        None => Err(Error::NoBracket { threshold, points }),
    }
}

/// Closed-form eigenvalues of `Q_3` for the DK operator:
/// `{1, 1, p, p, q-p, p(q-p), lambda_+, lambda_-}` with
/// `lambda_± = (-k ± sqrt(k^2 - 4p(p-q)^2)) / 2`, `k = p^2 - q^2 + pq - p`.
pub fn dk_reference_spectrum_n3(params: DkParams) -> SpectrumMultiset {
    let DkParams { p, q } = params;
    let k = p * p - q * q + p * q - p;
    let root = C64::new(k * k - 4.0 * p * (p - q).powi(2), 0.0).sqrt();
    let re = |x: f64| C64::new(x, 0.0);
    SpectrumMultiset::from_values([
        re(1.0),
        re(1.0),
        re(p),
        re(p),
        re(q - p),
        re(p * (q - p)),
        (re(-k) + root) / 2.0,
        (re(-k) - root) / 2.0,
    ])
}

/// One left-to-right sweep of pair updates on a path of `n` sites: site
/// `x` (for `x < n-1`) becomes occupied with probability
/// `f(count of {x, x+1})` using the not yet updated right neighbour; the
/// last site is unchanged. This is the stochastic process whose
/// transition matrix is the global DK operator.
pub fn sweep_sample<R: Rng + ?Sized>(
    params: DkParams,
    config: &Configuration,
    rng: &mut R,
) -> Result<Configuration> {
    let bits = config.bits();
    let mut out = bits.to_vec();
    for x in 0..bits.len().saturating_sub(1) {
        let count = bits[x] + bits[x + 1];
        out[x] = u8::from(rng.gen::<f64>() < params.f(count));
    }
    Configuration::from_bits(&out)
}
