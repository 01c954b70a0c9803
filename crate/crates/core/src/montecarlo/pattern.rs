//! Detection gates, click patterns and click records.

use std::fmt;
use std::str::FromStr;

use crate::interferometer::{PEAKS, PORTS};
use crate::physics::{Arm, Peak, Port};

/// Number of detection gates per trial: 2 arms x 3 peaks x 2 detectors.
pub const GATES: usize = 12;
pub const GATES_PER_ARM: usize = 6;
pub const PATTERNS: usize = 1 << GATES;

pub fn gate_index(arm: Arm, peak: Peak, port: Port) -> usize {
    let a = match arm {
        Arm::Write => 0,
        Arm::Read => 1,
    };
    a * GATES_PER_ARM + peak_index(peak) * 2 + port_index(port)
}

pub fn gate_of(index: usize) -> (Arm, Peak, Port) {
    let arm = if index < GATES_PER_ARM {
        Arm::Write
    } else {
        Arm::Read
    };
    let local = index % GATES_PER_ARM;
    (arm, PEAKS[local / 2], PORTS[local % 2])
}

pub(crate) fn peak_index(peak: Peak) -> usize {
    match peak {
        Peak::Early => 0,
        Peak::Central => 1,
        Peak::Late => 2,
    }
}

pub(crate) fn port_index(port: Port) -> usize {
    match port {
        Port::Plus => 0,
        Port::Minus => 1,
    }
}

/// Set of gates that clicked in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClickPattern(u16);

impl ClickPattern {
    pub fn from_bits(bits: u16) -> Self {
        ClickPattern(bits & ((1 << GATES) - 1) as u16)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, arm: Arm, peak: Peak, port: Port) -> bool {
        self.0 & (1 << gate_index(arm, peak, port)) != 0
    }

    pub fn insert(&mut self, arm: Arm, peak: Peak, port: Port) {
        self.0 |= 1 << gate_index(arm, peak, port);
    }

    pub fn clicks(self) -> impl Iterator<Item = (Arm, Peak, Port)> {
        (0..GATES)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(gate_of)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    WritePlus,
    WriteMinus,
    ReadPlus,
    ReadMinus,
}

impl Detector {
    pub fn new(arm: Arm, port: Port) -> Self {
        match (arm, port) {
            (Arm::Write, Port::Plus) => Detector::WritePlus,
            (Arm::Write, Port::Minus) => Detector::WriteMinus,
            (Arm::Read, Port::Plus) => Detector::ReadPlus,
            (Arm::Read, Port::Minus) => Detector::ReadMinus,
        }
    }

    pub fn arm(self) -> Arm {
        match self {
            Detector::WritePlus | Detector::WriteMinus => Arm::Write,
            Detector::ReadPlus | Detector::ReadMinus => Arm::Read,
        }
    }

    pub fn port(self) -> Port {
        match self {
            Detector::WritePlus | Detector::ReadPlus => Port::Plus,
            Detector::WriteMinus | Detector::ReadMinus => Port::Minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Detector::WritePlus => "DW+",
            Detector::WriteMinus => "DW-",
            Detector::ReadPlus => "DR+",
            Detector::ReadMinus => "DR-",
        }
    }

    pub const ALL: [Detector; 4] = [
        Detector::WritePlus,
        Detector::WriteMinus,
        Detector::ReadPlus,
        Detector::ReadMinus,
    ];
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Detector::ALL
            .into_iter()
            .find(|d| d.label() == s)
            .ok_or_else(|| format!("unknown detector `{s}`"))
    }
}

pub fn peak_label(peak: Peak) -> &'static str {
    match peak {
        Peak::Early => "E",
        Peak::Central => "C",
        Peak::Late => "L",
    }
}

pub fn parse_peak(s: &str) -> Result<Peak, String> {
    match s {
        "E" => Ok(Peak::Early),
        "C" => Ok(Peak::Central),
        "L" => Ok(Peak::Late),
        _ => Err(format!("unknown peak `{s}`")),
    }
}

/// One detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectionRecord {
    pub trial_id: u64,
    pub detector: Detector,
    pub peak: Peak,
}

impl DetectionRecord {
    pub fn gate(&self) -> usize {
        gate_index(self.detector.arm(), self.peak, self.detector.port())
    }
}

/// Expands a pattern into records, ordered by gate index.
pub fn pattern_records(
    trial_id: u64,
    pattern: ClickPattern,
) -> impl Iterator<Item = DetectionRecord> {
    pattern
        .clicks()
        .map(move |(arm, peak, port)| DetectionRecord {
            trial_id,
            detector: Detector::new(arm, port),
            peak,
        })
}
