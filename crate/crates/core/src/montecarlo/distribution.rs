//! Exact click-pattern probabilities of one trial.
//!
//! The post-readout state is never pushed through the interferometers in
//! Fock space. Instead every "no click on gate set G" probability is computed
//! as an expectation of a passive operator on the pre-interferometer modes:
//! for an isometry `V` onto the output modes and attenuation `D_G` on the
//! gated outputs, `<Gamma(D_G)>_out = <Gamma(V^dagger D_G V)>_in`, where
//! `Gamma` lifts a one-photon operator to Fock space. The probability of an
//! exact click set then follows from Moebius inversion over gate subsets.
//! Phase jitter is averaged exactly through the finite Fourier content of
//! each matrix element, and background photons and dark counts enter as
//! independent factors.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;

use super::pattern::{gate_index, ClickPattern, GATES, GATES_PER_ARM, PATTERNS};
use crate::error::{Error, Result};
use crate::interferometer::InterferometerSetting;
use crate::physics::register::expand_creation;
use crate::physics::{
    apply_readout, build_joint_state, overlap_efficiency, select_cutoff, squeezing_sqr, Arm, Bin,
    Channel, DephasingModel, ExperimentConfig, Mode, ModeRegister, Occupation,
};

type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Phase settings of both analysing interferometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSettings {
    pub write: InterferometerSetting,
    pub read: InterferometerSetting,
}

impl AnalyzerSettings {
    pub fn new(write_phase: f64, read_phase: f64, delay: f64) -> Self {
        Self {
            write: InterferometerSetting::new(write_phase, delay),
            read: InterferometerSetting::new(read_phase, delay),
        }
    }

    pub fn for_config(cfg: &ExperimentConfig, write_phase: f64, read_phase: f64) -> Self {
        Self::new(write_phase, read_phase, cfg.bin_separation)
    }

    fn for_arm(&self, arm: Arm) -> &InterferometerSetting {
        match arm {
            Arm::Write => &self.write,
            Arm::Read => &self.read,
        }
    }
}

/// Probability of every click pattern of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcomeDistribution {
    probs: Vec<f64>,
}

impl TrialOutcomeDistribution {
    /// Wraps a dense table indexed by pattern bits.
    pub fn from_dense(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != PATTERNS {
            return Err(Error::invalid(
                "probs",
                format!("expected {PATTERNS} entries"),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid(
                "probs",
                "probabilities must be non-negative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "probs",
                format!("probabilities sum to {total}"),
            ));
        }
        Ok(Self { probs })
    }

    pub fn probability(&self, pattern: ClickPattern) -> f64 {
        self.probs[pattern.bits() as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Patterns with non-zero probability, in pattern order.
    pub fn iter(&self) -> impl Iterator<Item = (ClickPattern, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (ClickPattern::from_bits(i as u16), p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that the given gate clicks, whatever else happens.
    pub fn gate_probability(&self, gate: usize) -> f64 {
        self.iter()
            .filter(|(p, _)| p.bits() & (1 << gate) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Expectation of an arbitrary function of the click pattern.
    pub fn expect(&self, mut f: impl FnMut(ClickPattern) -> f64) -> f64 {
        self.iter().map(|(pat, p)| p * f(pat)).sum()
    }
}

/// Pre-interferometer state of one trial together with the interferometer
/// and detector model; reusable across analyser settings.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    cfg: ExperimentConfig,
    blocks: Vec<Block>,
    write_configs: Vec<Vec<u8>>,
    read_configs: Vec<Vec<usize>>,
    /// Per read block, the distinct local occupations.
    read_block_configs: Vec<Vec<Vec<u8>>>,
    write_pairs: Vec<(usize, usize)>,
    read_pairs: Vec<(usize, usize)>,
    entries: Vec<(usize, usize, Complex64)>,
    max_photons: [usize; 2],
}

#[derive(Debug, Clone)]
struct Block {
    arm: Arm,
    bins: Vec<Bin>,
    indices: Vec<usize>,
}

impl OutcomeModel {
    pub fn new(cfg: &ExperimentConfig, model: &DephasingModel) -> Result<Self> {
        let reg = apply_readout(&build_joint_state(cfg)?, cfg, model)?;
        Self::from_register(cfg, &reg)
    }

    /// Builds the model from an arbitrary pre-interferometer register. Modes
    /// other than time-bin photons are traced out.
    pub fn from_register(cfg: &ExperimentConfig, reg: &ModeRegister) -> Result<Self> {
        cfg.validate()?;
        let mut grouped: BTreeMap<(Arm, Channel), Vec<(Bin, usize)>> = BTreeMap::new();
        for (i, m) in reg.modes().iter().enumerate() {
            if let Mode::Photon { arm, bin, channel } = *m {
                grouped.entry((arm, channel)).or_default().push((bin, i));
            }
        }
        let blocks: Vec<Block> = grouped
            .into_iter()
            .map(|((arm, _), mut v)| {
                v.sort();
                Block {
                    arm,
                    bins: v.iter().map(|x| x.0).collect(),
                    indices: v.iter().map(|x| x.1).collect(),
                }
            })
            .collect();
        if blocks.iter().filter(|b| b.arm == Arm::Write).count() > 1 {
            return Err(Error::invalid(
                "register",
                "write photons must form a single coherent block",
            ));
        }
        let block_mask: Vec<usize> = blocks
            .iter()
            .flat_map(|b| b.indices.iter().copied())
            .collect();
        let read_blocks: Vec<&Block> = blocks.iter().filter(|b| b.arm == Arm::Read).collect();

        let mut write_index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut read_block_index: Vec<BTreeMap<Vec<u8>, usize>> =
            vec![BTreeMap::new(); read_blocks.len()];
        let mut read_index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut by_rest: BTreeMap<Occupation, Vec<(usize, usize, Complex64)>> = BTreeMap::new();

        let write_block = blocks.iter().find(|b| b.arm == Arm::Write);
        for (key, amp) in reg.terms() {
            let w: Vec<u8> = write_block
                .map(|b| b.indices.iter().map(|&i| key.get(i)).collect())
                .unwrap_or_default();
            let next = write_index.len();
            let wi = *write_index.entry(w).or_insert(next);
            let mut r = Vec::with_capacity(read_blocks.len());
            for (bi, b) in read_blocks.iter().enumerate() {
                let local: Vec<u8> = b.indices.iter().map(|&i| key.get(i)).collect();
                let next = read_block_index[bi].len();
                r.push(*read_block_index[bi].entry(local).or_insert(next));
            }
            let next = read_index.len();
            let ri = *read_index.entry(r).or_insert(next);
            let rest = block_mask.iter().fold(key, |k, &i| k.with(i, 0));
            by_rest.entry(rest).or_default().push((wi, ri, amp));
        }

        let write_configs = invert(write_index);
        let read_configs = invert(read_index);
        let read_block_configs: Vec<Vec<Vec<u8>>> =
            read_block_index.into_iter().map(invert).collect();
        let total = |v: &[u8]| v.iter().map(|&n| n as usize).sum::<usize>();
        let read_totals = |r: &[usize]| -> Vec<usize> {
            r.iter()
                .enumerate()
                .map(|(bi, &c)| total(&read_block_configs[bi][c]))
                .collect()
        };

        // reduced density matrix of the photon blocks, restricted to the
        // photon-number sectors a passive operator can connect
        let mut rho: DetMap<(usize, usize, usize, usize), Complex64> = DetMap::default();
        for terms in by_rest.values() {
            for &(wa, ra, a) in terms {
                for &(wb, rb, b) in terms {
                    if total(&write_configs[wa]) != total(&write_configs[wb])
                        || read_totals(&read_configs[ra]) != read_totals(&read_configs[rb])
                    {
                        continue;
                    }
                    *rho.entry((wa, wb, ra, rb)).or_default() += a.conj() * b;
                }
            }
        }
        let mut rho: Vec<_> = rho.into_iter().collect();
        rho.sort_unstable_by_key(|(k, _)| *k);

        let mut write_pairs = BTreeMap::new();
        let mut read_pairs = BTreeMap::new();
        let mut entries = Vec::with_capacity(rho.len());
        for ((wa, wb, ra, rb), v) in rho {
            let n = write_pairs.len();
            let wp = *write_pairs.entry((wa, wb)).or_insert(n);
            let n = read_pairs.len();
            let rp = *read_pairs.entry((ra, rb)).or_insert(n);
            entries.push((wp, rp, v));
        }
        let max_write = write_configs.iter().map(|w| total(w)).max().unwrap_or(0);
        let max_read = read_configs
            .iter()
            .map(|r| read_totals(r).iter().sum())
            .max()
            .unwrap_or(0);

        Ok(Self {
            cfg: cfg.clone(),
            blocks,
            write_configs,
            read_configs,
            read_block_configs,
            write_pairs: invert_pairs(write_pairs),
            read_pairs: invert_pairs(read_pairs),
            entries,
            max_photons: [max_write, max_read],
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Probability of no click on every gate subset, indexed by gate mask.
    pub fn no_click_probabilities(&self, settings: &AnalyzerSettings) -> Result<Vec<f64>> {
        for arm in [Arm::Write, Arm::Read] {
            let s = settings.for_arm(arm);
            s.validate()?;
            s.check_delay(self.cfg.bin_separation)?;
        }
        let write = self.arm_factors(Arm::Write, settings.for_arm(Arm::Write));
        let read = self.arm_factors(Arm::Read, settings.for_arm(Arm::Read));

        let arm_masks = 1usize << GATES_PER_ARM;
        let mut partial = vec![Complex64::default(); arm_masks * self.write_pairs.len()];
        for gr in 0..arm_masks {
            let row = &mut partial[gr * self.write_pairs.len()..(gr + 1) * self.write_pairs.len()];
            for &(wp, rp, v) in &self.entries {
                row[wp] += read[gr][rp] * v;
            }
        }
        let keep = 1.0 - self.cfg.dark_count_prob;
        let mut q = vec![0.0; PATTERNS];
        for gr in 0..arm_masks {
            let row = &partial[gr * self.write_pairs.len()..(gr + 1) * self.write_pairs.len()];
            for (gw, wrow) in write.iter().enumerate().take(arm_masks) {
                let val: Complex64 = wrow.iter().zip(row).map(|(a, t)| a * t).sum();
                let mask = gw | (gr << GATES_PER_ARM);
                q[mask] = val.re * keep.powi(mask.count_ones() as i32);
            }
        }
        Ok(q)
    }

    pub fn distribution(&self, settings: &AnalyzerSettings) -> Result<TrialOutcomeDistribution> {
        let q = self.no_click_probabilities(settings)?;
        let full = PATTERNS - 1;
        let mut f: Vec<f64> = (0..PATTERNS).map(|h| q[!h & full]).collect();
        for bit in 0..GATES {
            let b = 1 << bit;
            for mask in 0..PATTERNS {
                if mask & b != 0 {
                    f[mask] -= f[mask ^ b];
                }
            }
        }
        for p in &mut f {
            if *p < 0.0 {
                debug_assert!(*p > -NEGATIVE_TOLERANCE, "negative probability {p}");
                *p = 0.0;
            }
        }
        TrialOutcomeDistribution::from_dense(f)
    }

    /// Jitter- and background-averaged no-click operator matrix elements for
    /// every gate subset of one arm, evaluated on that arm's config pairs.
    fn arm_factors(&self, arm: Arm, setting: &InterferometerSetting) -> Vec<Vec<Complex64>> {
        let (nodes, weights) =
            jitter_nodes(self.cfg.phase_jitter, self.max_photons[arm_slot(arm)] + 1);
        let eta = self.cfg.detector_efficiency;
        let arm_masks = 1usize << GATES_PER_ARM;
        let blocks: Vec<&Block> = self.blocks.iter().filter(|b| b.arm == arm).collect();
        let pairs = match arm {
            Arm::Write => &self.write_pairs,
            Arm::Read => &self.read_pairs,
        };
        let mut out = vec![vec![Complex64::default(); pairs.len()]; arm_masks];
        for (&delta, &weight) in nodes.iter().zip(&weights) {
            let s = setting.with_phase(setting.arm_phase + delta);
            let bg_probs = background_gate_probs(&s, self.cfg.background_coherence);
            for (g, row) in out.iter_mut().enumerate() {
                let atten: Vec<f64> = (0..GATES_PER_ARM)
                    .map(|i| if g & (1 << i) != 0 { 1.0 - eta } else { 1.0 })
                    .collect();
                let b = self.cfg.background_photon_prob;
                let bg =
                    (1.0 - b) + b * bg_probs.iter().zip(&atten).map(|(q, t)| q * t).sum::<f64>();
                let gammas: Vec<Vec<Vec<Complex64>>> = blocks
                    .iter()
                    .enumerate()
                    .map(|(bi, blk)| {
                        let m = passive_matrix(&s, &blk.bins, &atten);
                        let configs = match arm {
                            Arm::Write => &self.write_configs,
                            Arm::Read => &self.read_block_configs[bi],
                        };
                        gamma_matrix(&m, configs)
                    })
                    .collect();
                for (pi, &(a, b)) in pairs.iter().enumerate() {
                    let val = match arm {
                        Arm::Write => gammas.first().map_or(Complex64::new(1.0, 0.0), |g| g[a][b]),
                        Arm::Read => {
                            let (ra, rb) = (&self.read_configs[a], &self.read_configs[b]);
                            (0..gammas.len())
                                .map(|bi| gammas[bi][ra[bi]][rb[bi]])
                                .product()
                        }
                    };
                    row[pi] += val * (weight * bg);
                }
            }
        }
        out
    }
}

/// Exact click-pattern distribution for one trial.
pub fn outcome_distribution(
    cfg: &ExperimentConfig,
    model: &DephasingModel,
    settings: &AnalyzerSettings,
) -> Result<TrialOutcomeDistribution> {
    OutcomeModel::new(cfg, model)?.distribution(settings)
}

fn arm_slot(arm: Arm) -> usize {
    match arm {
        Arm::Write => 0,
        Arm::Read => 1,
    }
}

fn invert<K: Ord>(index: BTreeMap<K, usize>) -> Vec<K> {
    let mut v: Vec<(usize, K)> = index.into_iter().map(|(k, i)| (i, k)).collect();
    v.sort_by_key(|(i, _)| *i);
    v.into_iter().map(|(_, k)| k).collect()
}

fn invert_pairs(index: BTreeMap<(usize, usize), usize>) -> Vec<(usize, usize)> {
    invert(index)
}

/// Quadrature for the mean over a zero-mean Gaussian phase of a trigonometric
/// polynomial with harmonics up to `max_harmonic`; exact for such functions.
pub(crate) fn jitter_nodes(sigma: f64, max_harmonic: usize) -> (Vec<f64>, Vec<f64>) {
    if sigma == 0.0 {
        return (vec![0.0], vec![1.0]);
    }
    let n = 2 * max_harmonic + 1;
    let nodes: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let weights = nodes
        .iter()
        .map(|&d| {
            let s: f64 = (1..=max_harmonic)
                .map(|j| (-((j * j) as f64) * sigma * sigma / 2.0).exp() * (j as f64 * d).cos())
                .sum();
            (1.0 + 2.0 * s) / n as f64
        })
        .collect();
    (nodes, weights)
}

/// Isometry column of a time-bin input, as six gate amplitudes.
fn gate_amplitudes(setting: &InterferometerSetting, bin: Bin) -> [Complex64; GATES_PER_ARM] {
    let mut col = [Complex64::default(); GATES_PER_ARM];
    for (peak, port, c) in setting.output_amplitudes(bin) {
        col[gate_index(Arm::Write, peak, port)] = c;
    }
    col
}

/// `V^dagger D V` on the block's input bins.
fn passive_matrix(
    setting: &InterferometerSetting,
    bins: &[Bin],
    atten: &[f64],
) -> Vec<Vec<Complex64>> {
    let cols: Vec<_> = bins.iter().map(|&b| gate_amplitudes(setting, b)).collect();
    cols.iter()
        .map(|ci| {
            cols.iter()
                .map(|cj| {
                    (0..GATES_PER_ARM)
                        .map(|g| ci[g].conj() * atten[g] * cj[g])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Output-gate probabilities of a background photon spread evenly over both
/// bins with mutual coherence `beta`.
fn background_gate_probs(setting: &InterferometerSetting, beta: f64) -> [f64; GATES_PER_ARM] {
    let e = gate_amplitudes(setting, Bin::Early);
    let l = gate_amplitudes(setting, Bin::Late);
    let mut q = [0.0; GATES_PER_ARM];
    for g in 0..GATES_PER_ARM {
        q[g] = 0.5 * (e[g].norm_sqr() + l[g].norm_sqr()) + beta * (e[g] * l[g].conj()).re;
    }
    q
}

/// Matrix elements `<a| Gamma(M) |b>` over the listed occupation configs,
/// where `Gamma(M)` maps `a_i^dagger -> sum_j M[j][i] a_j^dagger`.
fn gamma_matrix(m: &[Vec<Complex64>], configs: &[Vec<u8>]) -> Vec<Vec<Complex64>> {
    let k = m.len();
    let index: HashMap<Occupation, usize> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (Occupation::from_slice(c), i))
        .collect();
    let mut scratch = vec![0u8; k.max(1)];
    let mut out = vec![vec![Complex64::default(); configs.len()]; configs.len()];
    for (b, cfg_b) in configs.iter().enumerate() {
        let mut terms: Vec<(Occupation, Complex64)> =
            vec![(Occupation::default(), Complex64::new(1.0, 0.0))];
        for (i, &n) in cfg_b.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let targets: Vec<(usize, Complex64)> = (0..k).map(|j| (j, m[j][i])).collect();
            let mut next: DetMap<Occupation, Complex64> = DetMap::default();
            for &(occ, amp) in &terms {
                // block photon numbers are far below the per-mode limit
                expand_creation(n, occ, &targets, &mut scratch, &mut |o, c| {
                    *next.entry(o).or_default() += amp * c;
                })
                .expect("occupation within limits");
            }
            terms = next.into_iter().collect();
        }
        for (occ, amp) in terms {
            if let Some(&a) = index.get(&occ) {
                out[a][b] += amp;
            }
        }
    }
    out
}

/// Click probabilities of the single-bin storage-and-retrieval measurement:
/// one write pulse, one full read pulse after `storage_time`, and a single
/// detector per arm without interferometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalOutcome {
    pub write_click: f64,
    pub read_click: f64,
    pub coincidence: f64,
}

impl RetrievalOutcome {
    /// Conditional retrieval probability corrected for read detection efficiency.
    pub fn conditional_retrieval(&self, detector_efficiency: f64) -> f64 {
        if self.write_click == 0.0 {
            return 0.0;
        }
        self.coincidence / self.write_click / detector_efficiency
    }
}

pub fn retrieval_outcome(
    cfg: &ExperimentConfig,
    model: &DephasingModel,
    storage_time: f64,
) -> Result<RetrievalOutcome> {
    cfg.validate()?;
    let (cutoff, leakage) = select_cutoff(cfg)?;
    let lambda_sqr = squeezing_sqr(cfg.mu);
    let write = Mode::photon(Arm::Write, Bin::Early);
    let atom = Mode::Atomic(Bin::Early);
    let read = Mode::photon(Arm::Read, Bin::Early);
    let lost = Mode::Lost(Bin::Early);
    let terms = (0..=cutoff).map(|n| {
        let a = ((1.0 - lambda_sqr) * lambda_sqr.powi(n as i32) / (1.0 - leakage)).sqrt();
        (vec![n, n], Complex64::new(a, 0.0))
    });
    let mut reg = ModeRegister::from_terms(vec![write, atom], terms)?;
    let eta = cfg.retrieval_efficiency * overlap_efficiency(model, storage_time)?;
    reg.substitute(
        atom,
        &[
            (read, Complex64::new(eta.sqrt(), 0.0)),
            (lost, Complex64::new((1.0 - eta).sqrt(), 0.0)),
        ],
    )?;

    let det = cfg.detector_efficiency;
    let dark = cfg.dark_count_prob;
    let bg = cfg.background_photon_prob;
    // no-click probability of a gate holding n signal photons
    let silent = |n: u8| (1.0 - dark) * (1.0 - det).powi(n as i32) * (1.0 - bg * det);
    let mut out = RetrievalOutcome {
        write_click: 0.0,
        read_click: 0.0,
        coincidence: 0.0,
    };
    for (counts, p) in reg.photon_count_distribution(&[vec![write], vec![read]]) {
        let (sw, sr) = (silent(counts[0]), silent(counts[1]));
        out.write_click += p * (1.0 - sw);
        out.read_click += p * (1.0 - sr);
        out.coincidence += p * (1.0 - sw) * (1.0 - sr);
    }
    Ok(out)
}
