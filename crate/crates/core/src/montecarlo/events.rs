//! Event-stream file: a header carrying the run identity, then one click per
//! line as `trial_id,detector,peak`.
//!
//! ```text
//! # config_hash=3f9a0c1e22b7d410 seed=42 trials=100000
//! trial_id,detector,peak
//! 17,DW+,C
//! 17,DR-,C
//! ```

use std::io::{BufRead, Write};

use super::pattern::{parse_peak, peak_label, DetectionRecord};
use crate::error::{Error, Result};

pub const COLUMNS: &str = "trial_id,detector,peak";

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub config_hash: String,
    pub seed: u64,
    pub trials: u64,
    /// Write and read analyzer phases, when the stream was taken at fixed settings.
    pub settings: Option<(f64, f64)>,
    pub records: Vec<DetectionRecord>,
}

pub fn write_events<W: Write>(mut w: W, stream: &EventStream) -> Result<()> {
    write!(
        w,
        "# config_hash={} seed={} trials={}",
        stream.config_hash, stream.seed, stream.trials
    )?;
    if let Some((wp, rp)) = stream.settings {
        write!(w, " write_phase={wp:?} read_phase={rp:?}")?;
    }
    writeln!(w)?;
    writeln!(w, "{COLUMNS}")?;
    for r in &stream.records {
        writeln!(w, "{},{},{}", r.trial_id, r.detector, peak_label(r.peak))?;
    }
    w.flush()?;
    Ok(())
}

struct Header {
    hash: String,
    seed: u64,
    trials: u64,
    settings: Option<(f64, f64)>,
}

fn parse_header(line: &str, line_no: usize) -> Result<Header> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let body = line.trim_start_matches('#').trim();
    let (mut hash, mut seed, mut trials) = (None, None, None);
    let (mut wp, mut rp) = (None, None);
    let phase = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| err(format!("bad phase `{v}`")))
    };
    for field in body.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| err(format!("header field `{field}` is not key=value")))?;
        match k {
            "config_hash" => hash = Some(v.to_string()),
            "seed" => seed = Some(v.parse().map_err(|_| err(format!("bad seed `{v}`")))?),
            "trials" => {
                trials = Some(
                    v.parse()
                        .map_err(|_| err(format!("bad trial count `{v}`")))?,
                )
            }
            "write_phase" => wp = Some(phase(v)?),
            "read_phase" => rp = Some(phase(v)?),
            _ => {}
        }
    }
    Ok(Header {
        hash: hash.ok_or_else(|| err("header lacks config_hash".into()))?,
        seed: seed.ok_or_else(|| err("header lacks seed".into()))?,
        trials: trials.ok_or_else(|| err("header lacks trials".into()))?,
        settings: wp.zip(rp),
    })
}

pub fn read_events<R: BufRead>(r: R) -> Result<EventStream> {
    let mut header: Option<Header> = None;
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == COLUMNS {
            continue;
        }
        if line.starts_with('#') {
            let h = parse_header(line, line_no)?;
            match &header {
                Some(prev) if prev.hash != h.hash => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("config hash {} differs from {}", h.hash, prev.hash),
                    })
                }
                Some(_) => {}
                None => header = Some(h),
            }
            continue;
        }
        if header.is_none() {
            return Err(Error::Parse {
                line: line_no,
                message: "record before header".into(),
            });
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut fields = line.split(',');
        let (Some(t), Some(d), Some(p), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(err(format!("expected 3 fields in `{line}`")));
        };
        records.push(DetectionRecord {
            trial_id: t
                .trim()
                .parse()
                .map_err(|_| err(format!("bad trial id `{t}`")))?,
            detector: d.trim().parse().map_err(err)?,
            peak: parse_peak(p.trim()).map_err(err)?,
        });
    }
    let Header {
        hash: config_hash,
        seed,
        trials,
        settings,
    } = header.ok_or(Error::Parse {
        line: 0,
        message: "missing header".into(),
    })?;
    if let Some(r) = records.iter().find(|r| r.trial_id >= trials) {
        return Err(Error::Parse {
            line: 0,
            message: format!("trial id {} outside declared {trials} trials", r.trial_id),
        });
    }
    Ok(EventStream {
        config_hash,
        seed,
        trials,
        settings,
        records,
    })
}
