//! Coded Monte-Carlo BLER sweeps.
//!
//! Every trial draws, per subcarrier, one B x U Rayleigh channel and one unit
//! noise vector, plus one info block per user. The same draws are reused at
//! every SNR point (noise is scaled by sqrt(N0)) and by every method in the
//! run, so comparisons between methods and SNRs are paired. Trial t uses
//! ChaCha8 stream t of the run seed, which makes the outcome independent of
//! thread scheduling.
//!
//! A block is one user's coded frame across all subcarriers of one OFDM
//! symbol; a block error is any info-bit mismatch after decoding.

use cgmimo::detect::{compute_llrs_into, Detector, FrontEnd, Link};
use cgmimo::linalg::{gram_regularized, ComplexMatrix, ComplexVector, Side, C64};
use cgmimo::opcount::OpCounter;
use cgmimo::phy::channel::complex_gaussian;
use cgmimo::phy::frame::{frame_assemble, frame_disassemble};
use cgmimo::phy::{rayleigh_channel, viterbi_decode_soft, Constellation, FrameError, FrameLayout, Interleaver, Modulation};
use cgmimo::precode::Precoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::stats::{wilson, Z95};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("{count} numerical breakdowns exceed the budget of {budget}")]
    BreakdownBudget { count: u64, budget: u64 },
}

/// Link geometry and Monte-Carlo settings shared by all methods in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: usize,
    pub users: usize,
    pub modulation: Modulation,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub subcarriers: usize,
    pub seed: u64,
    pub max_breakdowns: u64,
}

impl Scenario {
    fn layout(&self) -> Result<FrameLayout, SimError> {
        Ok(FrameLayout::new(self.subcarriers, self.modulation.bits_per_symbol())?)
    }

    /// One interleaver per run, from a stream no trial uses.
    fn interleaver(&self, layout: &FrameLayout) -> Interleaver {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        Interleaver::random(layout.slots, &mut rng)
    }

    fn trial_rng(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        rng
    }
}

/// Totals at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointStats {
    pub snr_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    /// trials discarded after a solver failure
    pub breakdowns: u64,
    pub mults: u64,
    /// detections (or precodings) the multiplications were spent on
    pub solves: u64,
}

impl PointStats {
    pub fn bler(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.block_errors as f64 / self.frames as f64
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson(self.block_errors, self.frames, Z95)
    }

    /// Mean real multiplications per detected (or precoded) vector.
    pub fn real_mults_mean(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.mults as f64 / self.solves as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub label: String,
    pub points: Vec<PointStats>,
    /// `trial_errors[point][trial]`: block errors of one trial, `None` when
    /// the trial was discarded after a breakdown
    pub trial_errors: Vec<Vec<Option<u64>>>,
}

impl SweepResult {
    pub fn breakdowns(&self) -> u64 {
        self.points.iter().map(|p| p.breakdowns).sum()
    }
}

/// Outcome of one trial for one method at one SNR point.
#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    errors: u64,
    mults: u64,
    failed: bool,
}

fn random_bits<R: Rng>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

struct Frames {
    info: Vec<Vec<u8>>,
    /// symbols[user][subcarrier]
    symbols: Vec<Vec<C64>>,
}

fn draw_frames<R: Rng>(
    users: usize,
    layout: &FrameLayout,
    il: &Interleaver,
    c: &Constellation,
    rng: &mut R,
) -> Result<Frames, SimError> {
    let mut info = Vec::with_capacity(users);
    let mut symbols = Vec::with_capacity(users);
    for _ in 0..users {
        let bits = random_bits(layout.info_bits, rng);
        symbols.push(frame_assemble(&bits, layout, il, c)?.symbols);
        info.push(bits);
    }
    Ok(Frames { info, symbols })
}

/// Decodes every user's slot LLRs and counts block errors.
fn count_errors(llrs: &[Vec<f64>], frames: &Frames, layout: &FrameLayout, il: &Interleaver) -> Result<u64, SimError> {
    let mut errors = 0;
    for (user_llrs, info) in llrs.iter().zip(&frames.info) {
        let coded = frame_disassemble(user_llrs, layout, il)?;
        let decoded = viterbi_decode_soft(&coded).map_err(FrameError::from)?;
        errors += (decoded != *info) as u64;
    }
    Ok(errors)
}

fn fold(
    scenario: &Scenario,
    labels: Vec<String>,
    trials: Vec<Vec<Vec<Cell>>>,
    users: u64,
    solves_per_trial: u64,
) -> Result<Vec<SweepResult>, SimError> {
    let mut results: Vec<SweepResult> = labels
        .into_iter()
        .map(|label| SweepResult {
            label,
            points: scenario.snr_db.iter().map(|&snr_db| PointStats { snr_db, ..Default::default() }).collect(),
            trial_errors: vec![Vec::with_capacity(trials.len()); scenario.snr_db.len()],
        })
        .collect();
    // trial-index order, whatever order the workers finished in
    for trial in &trials {
        for (res, cells) in results.iter_mut().zip(trial) {
            for ((p, errs), cell) in res.points.iter_mut().zip(&mut res.trial_errors).zip(cells) {
                if cell.failed {
                    p.breakdowns += 1;
                    errs.push(None);
                    continue;
                }
                errs.push(Some(cell.errors));
                p.frames += users;
                p.block_errors += cell.errors;
                p.mults += cell.mults;
                p.solves += solves_per_trial;
            }
        }
    }
    let count: u64 = results.iter().map(SweepResult::breakdowns).sum();
    if count > scenario.max_breakdowns {
        return Err(SimError::BreakdownBudget { count, budget: scenario.max_breakdowns });
    }
    Ok(results)
}

pub fn detector_label(d: &Detector) -> String {
    match d {
        Detector::Cholesky => "chol".into(),
        Detector::Cg { iters, .. } => format!("cg-k{iters}"),
        Detector::Cgls { iters } => format!("cgls-k{iters}"),
        Detector::Neumann { iters } => format!("neumann-k{iters}"),
    }
}

pub fn precoder_label(p: &Precoder) -> String {
    match p {
        Precoder::Cholesky => "chol".into(),
        Precoder::Cg { iters } => format!("cg-k{iters}"),
        Precoder::Cgls { iters } => format!("cgls-k{iters}"),
        Precoder::Neumann { iters } => format!("neumann-k{iters}"),
    }
}

/// Uplink sweep of several detectors over shared realizations.
///
/// Average SNR is U Es / N0 with Es = 1, so N0 = U / snr and the detector
/// regularizes with rho = Es / N0.
pub fn run_uplink(scenario: &Scenario, detectors: &[Detector]) -> Result<Vec<SweepResult>, SimError> {
    let layout = scenario.layout()?;
    let il = scenario.interleaver(&layout);
    let c = Constellation::new(scenario.modulation);
    let trials = (0..scenario.trials)
        .into_par_iter()
        .map(|t| uplink_trial(scenario, &layout, &il, &c, detectors, t))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = detectors.iter().map(detector_label).collect();
    fold(scenario, labels, trials, scenario.users as u64, scenario.subcarriers as u64)
}

fn uplink_trial(
    sc: &Scenario,
    layout: &FrameLayout,
    il: &Interleaver,
    c: &Constellation,
    detectors: &[Detector],
    t: usize,
) -> Result<Vec<Vec<Cell>>, SimError> {
    let (b, u, bps) = (sc.bs, sc.users, c.bits_per_symbol());
    let mut rng = sc.trial_rng(t);
    let frames = draw_frames(u, layout, il, c, &mut rng)?;
    let links: Vec<Link> = sc.snr_db.iter().map(|&db| Link::uplink(10f64.powf(db / 10.0), u)).collect();
    let n_snr = links.len();
    let mut cells = vec![vec![Cell::default(); n_snr]; detectors.len()];
    // llrs[method][snr][user][slot]
    let mut llrs = vec![vec![vec![vec![0.0; layout.slots]; u]; n_snr]; detectors.len()];
    let front_end: Vec<u64> = detectors.iter().map(|d| d.front_end_mults(b, u)).collect();

    for n in 0..sc.subcarriers {
        let h = rayleigh_channel(b, u, &mut rng);
        let noise = ComplexVector::from_fn(b, |_| complex_gaussian(&mut rng));
        let x = ComplexVector::from_fn(u, |i| frames.symbols[i][n]);
        let hx = h.matvec(&x).expect("conforming");
        let gram = gram_regularized(&h, 0.0, Side::Uplink);
        let mf_signal = h.adjoint_matvec(&hx).expect("conforming");
        let mf_noise = h.adjoint_matvec(&noise).expect("conforming");
        for (s, link) in links.iter().enumerate() {
            let sigma = link.n0.sqrt();
            let y = ComplexVector::from_fn(b, |i| hx[i] + noise[i] * sigma);
            let mf = ComplexVector::from_fn(u, |i| mf_signal[i] + mf_noise[i] * sigma);
            let fe = FrontEnd { h: &h, y: &y, gram: &gram, mf: &mf };
            for (m, det) in detectors.iter().enumerate() {
                let cell = &mut cells[m][s];
                if cell.failed {
                    continue;
                }
                let mut counter = OpCounter::new();
                match det.detect_front(&fe, link, c, &mut counter) {
                    Ok(out) => {
                        cell.mults += counter.total() + front_end[m];
                        for (i, user) in llrs[m][s].iter_mut().enumerate() {
                            user[n * bps..(n + 1) * bps].copy_from_slice(out.user_llrs(i));
                        }
                    }
                    Err(_) => cell.failed = true,
                }
            }
        }
    }

    for (m, per_snr) in llrs.iter().enumerate() {
        for (s, user_llrs) in per_snr.iter().enumerate() {
            if !cells[m][s].failed {
                cells[m][s].errors = count_errors(user_llrs, &frames, layout, il)?;
            }
        }
    }
    Ok(cells)
}

/// Downlink sweep of several precoders over shared realizations.
///
/// The precoded vector is normalized to unit power, so the per-user receive
/// SNR scale is 1 / N0 = snr; the precoder regularizes with rho = snr / U.
/// Users demap with a genie gain: gamma = Re(t^H r) / ||t||^2 for the
/// noiseless receive vector r = H_d s, and SINR gamma^2 / sigma^2 with
/// sigma^2 = ||r - gamma t||^2 / U + N0.
pub fn run_downlink(scenario: &Scenario, precoders: &[Precoder]) -> Result<Vec<SweepResult>, SimError> {
    let layout = scenario.layout()?;
    let il = scenario.interleaver(&layout);
    let c = Constellation::new(scenario.modulation);
    let trials = (0..scenario.trials)
        .into_par_iter()
        .map(|t| downlink_trial(scenario, &layout, &il, &c, precoders, t))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = precoders.iter().map(precoder_label).collect();
    fold(scenario, labels, trials, scenario.users as u64, scenario.subcarriers as u64)
}

fn genie_llrs(r: &ComplexVector, y: &ComplexVector, t: &ComplexVector, n0: f64, c: &Constellation, out: &mut [f64]) {
    let u = t.len();
    let tt = t.norm_sqr();
    let gamma = cgmimo::linalg::dot_h(t.as_slice(), r.as_slice()).re / tt;
    let distortion: f64 = (0..u).map(|i| (r[i] - t[i] * gamma).norm_sqr()).sum::<f64>() / u as f64;
    let rho = gamma * gamma / (distortion + n0);
    let bps = c.bits_per_symbol();
    for i in 0..u {
        compute_llrs_into(y[i], gamma, rho, c, &mut out[i * bps..(i + 1) * bps]);
    }
}

fn downlink_trial(
    sc: &Scenario,
    layout: &FrameLayout,
    il: &Interleaver,
    c: &Constellation,
    precoders: &[Precoder],
    t: usize,
) -> Result<Vec<Vec<Cell>>, SimError> {
    let (b, u, bps) = (sc.bs, sc.users, c.bits_per_symbol());
    let mut rng = sc.trial_rng(t);
    let frames = draw_frames(u, layout, il, c, &mut rng)?;
    let snrs: Vec<f64> = sc.snr_db.iter().map(|&db| 10f64.powf(db / 10.0)).collect();
    let n_snr = snrs.len();
    let mut cells = vec![vec![Cell::default(); n_snr]; precoders.len()];
    let mut llrs = vec![vec![vec![vec![0.0; layout.slots]; u]; n_snr]; precoders.len()];
    let mut sym_llrs = vec![0.0; u * bps];

    for n in 0..sc.subcarriers {
        let h_d: ComplexMatrix = rayleigh_channel(b, u, &mut rng).hermitian_of();
        let noise = ComplexVector::from_fn(u, |_| complex_gaussian(&mut rng));
        let tx = ComplexVector::from_fn(u, |i| frames.symbols[i][n]);
        for (s, &snr) in snrs.iter().enumerate() {
            let n0 = 1.0 / snr;
            let rho = snr / u as f64;
            for (m, p) in precoders.iter().enumerate() {
                let cell = &mut cells[m][s];
                if cell.failed {
                    continue;
                }
                let mut counter = OpCounter::new();
                let res = match p.precode(&h_d, &tx, rho, &mut counter) {
                    Ok(res) => res,
                    Err(_) => {
                        cell.failed = true;
                        continue;
                    }
                };
                cell.mults += counter.total();
                let Some(s_vec) = res.s else {
                    cell.failed = true;
                    continue;
                };
                let r = h_d.matvec(&s_vec).expect("conforming");
                let y = ComplexVector::from_fn(u, |i| r[i] + noise[i] * n0.sqrt());
                genie_llrs(&r, &y, &tx, n0, c, &mut sym_llrs);
                for (i, user) in llrs[m][s].iter_mut().enumerate() {
                    user[n * bps..(n + 1) * bps].copy_from_slice(&sym_llrs[i * bps..(i + 1) * bps]);
                }
            }
        }
    }

    for (m, per_snr) in llrs.iter().enumerate() {
        for (s, user_llrs) in per_snr.iter().enumerate() {
            if !cells[m][s].failed {
                cells[m][s].errors = count_errors(user_llrs, &frames, layout, il)?;
            }
        }
    }
    Ok(cells)
}
