//! Truncated Fock-space state over labelled bosonic modes.
//!
//! Amplitudes are stored sparsely, keyed by an occupation vector packed four
//! bits per mode. Linear optical elements are applied by substituting the
//! creation operator of an input mode with a linear combination of creation
//! operators of *other* modes; the input mode is consumed. Chaining such
//! substitutions implements any isometry onto fresh modes exactly, so the
//! only truncation happens when the source state is prepared.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 32;
pub const MAX_OCCUPATION: u8 = 15;

const NORM_TOLERANCE: f64 = 1e-9;

type DetMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Write,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bin {
    Early,
    Late,
}

/// Temporal peak at an interferometer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Peak {
    Early,
    Central,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    Plus,
    Minus,
}

/// Which coherent family a photon belongs to.
///
/// Read photons retrieved in the wrong bin are emitted into a mode orthogonal
/// to the directional one; the two stray modes never interfere with each
/// other or with the direct pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Direct,
    Stray(Bin),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKind {
    Write,
    Read,
    Atomic,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Atomic(Bin),
    /// Photon in a time bin before the analysing interferometer.
    Photon {
        arm: Arm,
        bin: Bin,
        channel: Channel,
    },
    /// Photon at an interferometer output peak and detector port.
    Detected {
        arm: Arm,
        peak: Peak,
        port: Port,
        channel: Channel,
    },
    /// Retrieval loss of the atomic excitation created in the given bin.
    Lost(Bin),
}

impl Mode {
    pub fn kind(&self) -> ModeKind {
        match self {
            Mode::Atomic(_) => ModeKind::Atomic,
            Mode::Lost(_) => ModeKind::Lost,
            Mode::Photon {
                arm: Arm::Write, ..
            }
            | Mode::Detected {
                arm: Arm::Write, ..
            } => ModeKind::Write,
            Mode::Photon { arm: Arm::Read, .. } | Mode::Detected { arm: Arm::Read, .. } => {
                ModeKind::Read
            }
        }
    }

    pub fn photon(arm: Arm, bin: Bin) -> Self {
        Mode::Photon {
            arm,
            bin,
            channel: Channel::Direct,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Packed occupation numbers, four bits per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Occupation(u128);

impl Occupation {
    #[inline]
    pub fn get(self, idx: usize) -> u8 {
        ((self.0 >> (4 * idx)) & 0xF) as u8
    }

    #[inline]
    pub(crate) fn with(self, idx: usize, n: u8) -> Self {
        let shift = 4 * idx;
        Occupation((self.0 & !(0xF << shift)) | ((n as u128) << shift))
    }

    fn without(self, idx: usize) -> Self {
        let shift = 4 * idx;
        let low = if shift == 0 {
            0
        } else {
            self.0 & ((1u128 << shift) - 1)
        };
        let high = if shift + 4 >= 128 {
            0
        } else {
            self.0 >> (shift + 4)
        };
        Occupation(low | (high << shift))
    }

    pub fn from_slice(ns: &[u8]) -> Self {
        ns.iter()
            .enumerate()
            .fold(Occupation(0), |o, (i, &n)| o.with(i, n))
    }
}

#[derive(Debug, Clone)]
pub struct ModeRegister {
    modes: Vec<Mode>,
    terms: Vec<(Occupation, Complex64)>,
    cutoff: u8,
    leakage: f64,
    bin_separation: Option<f64>,
}

impl ModeRegister {
    pub fn vacuum(modes: Vec<Mode>) -> Result<Self> {
        Self::from_terms(modes, [(vec![], Complex64::new(1.0, 0.0))])
    }

    /// Builds a register from explicit `(occupations, amplitude)` terms.
    /// Occupation slices shorter than the mode list are zero-padded.
    pub fn from_terms<I>(modes: Vec<Mode>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        check_modes(&modes)?;
        let mut acc: DetMap<Occupation, Complex64> = DetMap::default();
        let mut cutoff = 0u8;
        for (ns, amp) in terms {
            if ns.len() > modes.len() {
                return Err(Error::invalid(
                    "terms",
                    "occupation vector longer than mode list",
                ));
            }
            if let Some(&n) = ns.iter().find(|&&n| n > MAX_OCCUPATION) {
                return Err(Error::invalid(
                    "terms",
                    format!("occupation {n} exceeds {MAX_OCCUPATION}"),
                ));
            }
            cutoff = cutoff.max(ns.iter().copied().max().unwrap_or(0));
            *acc.entry(Occupation::from_slice(&ns)).or_default() += amp;
        }
        let reg = Self {
            modes,
            terms: sorted(acc),
            cutoff,
            leakage: 0.0,
            bin_separation: None,
        };
        Ok(reg)
    }

    pub(crate) fn with_source_metadata(
        mut self,
        cutoff: u8,
        leakage: f64,
        bin_separation: f64,
    ) -> Self {
        self.cutoff = cutoff;
        self.leakage = leakage;
        self.bin_separation = Some(bin_separation);
        self
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest occupation allowed per source mode when the state was prepared.
    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    /// Probability per bin discarded by the Fock truncation of the source.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn bin_separation(&self) -> Option<f64> {
        self.bin_separation
    }

    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.index_of(mode).is_some()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Occupation, Complex64)> + '_ {
        self.terms.iter().copied()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOLERANCE
    }

    /// Amplitude of the basis state with the listed occupations (others zero).
    pub fn amplitude(&self, occupied: &[(Mode, u8)]) -> Complex64 {
        let mut key = Occupation::default();
        for &(mode, n) in occupied {
            match self.index_of(mode) {
                Some(i) => key = key.with(i, n),
                None if n == 0 => {}
                None => return Complex64::new(0.0, 0.0),
            }
        }
        self.terms
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map(|i| self.terms[i].1)
            .unwrap_or_default()
    }

    /// Replaces `a_in^dagger -> sum_j c_j b_j^dagger`, consuming `input`.
    ///
    /// Output modes must differ from `input` and from any mode that is itself
    /// substituted later; otherwise the map is not the intended linear optics.
    pub fn substitute(&mut self, input: Mode, outputs: &[(Mode, Complex64)]) -> Result<()> {
        let src = self
            .index_of(input)
            .ok_or_else(|| Error::MissingMode(input.to_string()))?;
        if outputs.iter().any(|(m, _)| *m == input) {
            return Err(Error::invalid(
                "outputs",
                "a mode cannot be substituted into itself",
            ));
        }
        let mut targets = Vec::with_capacity(outputs.len());
        for &(mode, c) in outputs {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = match self.index_of(mode) {
                Some(i) => i,
                None => {
                    self.modes.push(mode);
                    self.modes.len() - 1
                }
            };
            targets.push((idx, c));
        }
        if self.modes.len() > MAX_MODES {
            return Err(Error::invalid(
                "modes",
                format!("more than {MAX_MODES} modes"),
            ));
        }

        let mut acc: DetMap<Occupation, Complex64> = DetMap::default();
        let mut parts = vec![0u8; targets.len()];
        for &(key, amp) in &self.terms {
            let n = key.get(src);
            let base = key.with(src, 0);
            expand_creation(n, base, &targets, &mut parts, &mut |out, coeff| {
                *acc.entry(out).or_default() += amp * coeff;
            })?;
        }
        self.terms = sorted(acc);
        self.remove_mode(src);
        Ok(())
    }

    /// Applies several substitutions as one isometry, checking that the images
    /// of the inputs are orthonormal.
    pub fn apply_isometry(&mut self, map: &[(Mode, Vec<(Mode, Complex64)>)]) -> Result<()> {
        for (i, (a, ca)) in map.iter().enumerate() {
            for (b, cb) in &map[i..] {
                let ip: Complex64 = ca
                    .iter()
                    .map(|(m, x)| {
                        let y: Complex64 = cb.iter().filter(|(n, _)| n == m).map(|(_, y)| *y).sum();
                        x.conj() * y
                    })
                    .sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                if (ip - expected).norm() > 1e-12 {
                    return Err(Error::invalid(
                        "isometry",
                        format!("images of {a} and {b} have inner product {ip}"),
                    ));
                }
            }
            if map.iter().any(|(inp, _)| ca.iter().any(|(m, _)| m == inp)) {
                return Err(Error::invalid("isometry", "outputs must be fresh modes"));
            }
        }
        for (input, outputs) in map {
            if self.contains(*input) {
                self.substitute(*input, outputs)?;
            }
        }
        Ok(())
    }

    /// Joint photon-number distribution of the given mode groups, tracing
    /// out every other mode. Modes absent from the register count as vacuum.
    pub fn photon_count_distribution(&self, groups: &[Vec<Mode>]) -> BTreeMap<Vec<u8>, f64> {
        let index: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| g.iter().filter_map(|&m| self.index_of(m)).collect())
            .collect();
        let mut out = BTreeMap::new();
        for &(key, amp) in &self.terms {
            let counts: Vec<u8> = index
                .iter()
                .map(|idx| idx.iter().map(|&i| key.get(i)).sum())
                .collect();
            *out.entry(counts).or_insert(0.0) += amp.norm_sqr();
        }
        out
    }

    fn remove_mode(&mut self, idx: usize) {
        self.modes.remove(idx);
        for (k, _) in &mut self.terms {
            *k = k.without(idx);
        }
        // removal of an all-zero nibble preserves relative key order
    }
}

fn check_modes(modes: &[Mode]) -> Result<()> {
    if modes.len() > MAX_MODES {
        return Err(Error::invalid(
            "modes",
            format!("more than {MAX_MODES} modes"),
        ));
    }
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::invalid("modes", format!("duplicate mode {m}")));
        }
    }
    Ok(())
}

fn sorted(acc: DetMap<Occupation, Complex64>) -> Vec<(Occupation, Complex64)> {
    let mut v: Vec<_> = acc
        .into_iter()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .collect();
    v.sort_unstable_by_key(|(k, _)| *k);
    v
}

/// Applies `(sum_j c_j b_j^dagger)^n / sqrt(n!)` to the normalised basis
/// state `base`, where `targets` pairs mode indices with coefficients, and
/// hands every resulting `(occupation, coefficient)` to `emit`.
pub(crate) fn expand_creation(
    n: u8,
    base: Occupation,
    targets: &[(usize, Complex64)],
    scratch: &mut [u8],
    emit: &mut impl FnMut(Occupation, Complex64),
) -> Result<()> {
    if n == 0 {
        emit(base, Complex64::new(1.0, 0.0));
        return Ok(());
    }
    let pref = factorial(n).sqrt();
    let mut overflow = false;
    for_each_composition(n, &mut scratch[..targets.len()], &mut |ks| {
        let mut coeff = Complex64::new(pref, 0.0);
        let mut out = base;
        for (&(idx, c), &k) in targets.iter().zip(ks) {
            if k == 0 {
                continue;
            }
            let m = out.get(idx);
            if m + k > MAX_OCCUPATION {
                overflow = true;
                return;
            }
            coeff *= c.powu(k as u32) / factorial(k);
            coeff *= (factorial(m + k) / factorial(m)).sqrt();
            out = out.with(idx, m + k);
        }
        emit(out, coeff);
    });
    if overflow {
        return Err(Error::invalid(
            "occupation",
            "photon number overflow in a single mode",
        ));
    }
    Ok(())
}

pub(crate) fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// Calls `f` with every way of writing `n` as an ordered sum of `parts.len()`
/// non-negative integers.
pub(crate) fn for_each_composition(n: u8, parts: &mut [u8], f: &mut impl FnMut(&[u8])) {
    fn rec(rem: u8, pos: usize, parts: &mut [u8], f: &mut impl FnMut(&[u8])) {
        if pos + 1 == parts.len() {
            parts[pos] = rem;
            f(parts);
            return;
        }
        for k in 0..=rem {
            parts[pos] = k;
            rec(rem - k, pos + 1, parts, f);
        }
    }
    if parts.is_empty() {
        if n == 0 {
            f(parts);
        }
        return;
    }
    rec(n, 0, parts, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn occupation_packing() {
        let o = Occupation::from_slice(&[1, 0, 3, 15]);
        assert_eq!((o.get(0), o.get(1), o.get(2), o.get(3)), (1, 0, 3, 15));
        let r = o.without(1);
        assert_eq!((r.get(0), r.get(1), r.get(2)), (1, 3, 15));
    }

    #[test]
    fn compositions_count() {
        let mut n = 0;
        let mut parts = [0u8; 3];
        for_each_composition(4, &mut parts, &mut |ks| {
            assert_eq!(ks.iter().map(|&k| k as u32).sum::<u32>(), 4);
            n += 1;
        });
        assert_eq!(n, 15);
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        // |1,1> through a balanced splitter never leaves one photon per output.
        let a = Mode::photon(Arm::Write, Bin::Early);
        let b = Mode::photon(Arm::Write, Bin::Late);
        let x = Mode::Lost(Bin::Early);
        let y = Mode::Lost(Bin::Late);
        let mut reg = ModeRegister::from_terms(vec![a, b], [(vec![1, 1], c(1.0))]).unwrap();
        reg.apply_isometry(&[
            (a, vec![(x, c(FRAC_1_SQRT_2)), (y, c(FRAC_1_SQRT_2))]),
            (b, vec![(x, c(FRAC_1_SQRT_2)), (y, c(-FRAC_1_SQRT_2))]),
        ])
        .unwrap();
        assert!(reg.is_normalized());
        assert!(reg.amplitude(&[(x, 1), (y, 1)]).norm() < 1e-15);
        assert!((reg.amplitude(&[(x, 2)]).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((reg.amplitude(&[(y, 2)]).norm_sqr() - 0.5).abs() < 1e-12);
        assert!(!reg.contains(a));
    }

    #[test]
    fn rejects_non_isometry() {
        let a = Mode::Atomic(Bin::Early);
        let mut reg = ModeRegister::from_terms(vec![a], [(vec![1], c(1.0))]).unwrap();
        let err = reg.apply_isometry(&[(a, vec![(Mode::Lost(Bin::Early), c(0.5))])]);
        assert!(err.is_err());
    }

    #[test]
    fn missing_mode_is_reported() {
        let mut reg = ModeRegister::vacuum(vec![Mode::Atomic(Bin::Early)]).unwrap();
        let err = reg.substitute(Mode::Atomic(Bin::Late), &[(Mode::Lost(Bin::Late), c(1.0))]);
        assert!(matches!(err, Err(Error::MissingMode(_))));
    }

    #[test]
    fn counts_trace_other_modes() {
        let a = Mode::Atomic(Bin::Early);
        let l = Mode::Lost(Bin::Early);
        let reg =
            ModeRegister::from_terms(vec![a, l], [(vec![1, 0], c(0.6)), (vec![0, 1], c(0.8))])
                .unwrap();
        let d = reg.photon_count_distribution(&[vec![a]]);
        assert!((d[&vec![1]] - 0.36).abs() < 1e-12);
        assert!((d[&vec![0]] - 0.64).abs() < 1e-12);
    }
}
