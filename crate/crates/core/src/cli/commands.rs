use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;

use super::config::ConfigFile;
use super::{Cli, Command};
use crate::analysis::{
    chsh, coincidences, correlation, expected_table, fit_visibility, fringe_offset, histogram,
    optimal_settings, point_seed, sampled_table, selectivity, simulated_fringe, write_bell_csv,
    write_histogram_csv, BellComponent, BellResult, CountingMode,
};
use crate::error::{Error, Result};
use crate::lockloop::{simulate_lock, write_trajectory_csv};
use crate::montecarlo::{
    read_events, retrieval_outcome, sample_retrieval, sample_trials, write_events,
    AnalyzerSettings, EventStream, OutcomeModel,
};
use crate::physics::{DephasingModel, ExperimentConfig};

const SWEEP_TRIALS: u64 = 100_000_000;
const RETRIEVAL_TRIALS: u64 = 1_000_000;
const BELL_TRIALS: u64 = 1_000_000;

/// One output file: a provenance header line and a CSV body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub header: String,
    pub body: String,
    /// Event streams carry their own header and are only written to files.
    pub is_events: bool,
}

impl Document {
    pub fn render(&self) -> String {
        if self.header.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n{}", self.header, self.body)
        }
    }
}

struct Run {
    command: &'static str,
    hash: String,
    seed: u64,
    trials: u64,
}

impl Run {
    fn doc(&self, name: &str, body: String) -> Document {
        self.doc_with(name, body, "")
    }

    fn doc_with(&self, name: &str, body: String, extra: &str) -> Document {
        Document {
            name: name.to_string(),
            header: format!(
                "# timebin {} config_hash={} seed={} trials={}{extra}",
                self.command, self.hash, self.seed, self.trials
            ),
            body,
            is_events: false,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn dephasing(cfg: &ExperimentConfig) -> Result<DephasingModel> {
    DephasingModel::two_path(cfg.rephasing_period)
}

pub fn execute(cli: &Cli) -> Result<Vec<Document>> {
    if let Command::Analyze { files } = &cli.command {
        return analyze(files);
    }
    let file = load_config(cli)?;
    let cfg = file.experiment();
    let run = |default: u64| Run {
        command: cli.command.name(),
        hash: file.hash(),
        seed: cli.seed,
        trials: cli.trials.unwrap_or(default),
    };
    match &cli.command {
        Command::RetrievalSweep => retrieval_sweep(&run(RETRIEVAL_TRIALS), &file, &cfg),
        Command::SelectivitySweep => selectivity_sweep(&run(SWEEP_TRIALS), &file, &cfg),
        Command::FringeScan => fringe_scans(&run(SWEEP_TRIALS), &file, &cfg),
        Command::VisibilitySweep => visibility_sweep(&run(SWEEP_TRIALS), &file, &cfg),
        Command::Bell { events } => bell(&run(BELL_TRIALS), &cfg, *events, cli.out.is_some()),
        Command::LockSim => lock_sim(&run(0), &file),
        Command::Analyze { .. } => unreachable!(),
    }
}

fn retrieval_sweep(run: &Run, file: &ConfigFile, cfg: &ExperimentConfig) -> Result<Vec<Document>> {
    let model = dephasing(cfg)?;
    let steps = (file.retrieval_t_max_ns / file.retrieval_step_ns).floor() as usize;
    let mut body = String::from("t_ns,model,mc,sigma_mc\n");
    for k in 0..=steps {
        let t_ns = k as f64 * file.retrieval_step_ns;
        let outcome = retrieval_outcome(cfg, &model, t_ns * 1e-9)?;
        let analytic = outcome.conditional_retrieval(cfg.detector_efficiency);
        let (writes, both) = sample_retrieval(&outcome, run.trials, point_seed(run.seed, k));
        let (mc, sigma) = if writes > 0 {
            let q = both as f64 / writes as f64;
            let eta = cfg.detector_efficiency;
            (q / eta, (q * (1.0 - q) / writes as f64).sqrt() / eta)
        } else {
            (f64::NAN, f64::NAN)
        };
        writeln!(body, "{t_ns:.3},{analytic:.6},{mc:.6},{sigma:.6}").unwrap();
    }
    Ok(vec![run.doc("retrieval.csv", body)])
}

fn selectivity_sweep(
    run: &Run,
    file: &ConfigFile,
    base: &ExperimentConfig,
) -> Result<Vec<Document>> {
    let mut body = String::from("mu,model,selectivity,sigma,coincidences\n");
    for (k, &mu) in file.mu_values.iter().enumerate() {
        let cfg = ExperimentConfig { mu, ..base.clone() };
        let om = OutcomeModel::new(&cfg, &dephasing(&cfg)?)?;
        let dist = om.distribution(&AnalyzerSettings::for_config(&cfg, 0.0, 0.0))?;
        let model = expected_table(&dist, CountingMode::SidePeaks).selectivity();
        let table = sampled_table(
            &dist,
            CountingMode::SidePeaks,
            run.trials,
            point_seed(run.seed, k),
        );
        let s = selectivity(&table)?;
        writeln!(
            body,
            "{mu},{model:.6},{:.6},{:.6},{}",
            s.value,
            s.sigma,
            table.total()
        )
        .unwrap();
    }
    Ok(vec![run.doc("selectivity.csv", body)])
}

fn fringe_scans(run: &Run, file: &ConfigFile, cfg: &ExperimentConfig) -> Result<Vec<Document>> {
    let om = OutcomeModel::new(cfg, &dephasing(cfg)?)?;
    let mut scans = String::from("write_phase,setting,E,sigma_E,model_E\n");
    let mut fits = String::from("write_phase,V,sigma_V,phi0,sigma_phi0\n");
    for (i, &wp) in file.scan_write_phases_rad.iter().enumerate() {
        let seed = point_seed(run.seed, 1000 * (i + 1));
        let res = simulated_fringe(&om, cfg, wp, file.scan_points, run.trials, seed)?;
        for (p, m) in res.scan.points.iter().zip(&res.model) {
            writeln!(
                scans,
                "{wp:.6},{:.6},{:.6},{:.6},{m:.6}",
                p.phase, p.e, p.sigma
            )
            .unwrap();
        }
        let fit = fit_visibility(&res.scan)?;
        writeln!(
            fits,
            "{wp:.6},{:.6},{:.6},{:.6},{:.6}",
            fit.visibility,
            fit.sigma_visibility(),
            fit.phi0,
            fit.sigma_phi0()
        )
        .unwrap();
    }
    Ok(vec![
        run.doc("fringe_scan.csv", scans),
        run.doc("fringe_fit.csv", fits),
    ])
}

fn visibility_sweep(
    run: &Run,
    file: &ConfigFile,
    base: &ExperimentConfig,
) -> Result<Vec<Document>> {
    let mut body = String::from("mu,V,sigma_V,model_V,coincidence_rate\n");
    for (k, &mu) in file.mu_values.iter().enumerate() {
        let cfg = ExperimentConfig { mu, ..base.clone() };
        let om = OutcomeModel::new(&cfg, &dephasing(&cfg)?)?;
        let res = simulated_fringe(
            &om,
            &cfg,
            0.0,
            file.scan_points,
            run.trials,
            point_seed(run.seed, 1000 * (k + 1)),
        )?;
        let fit = fit_visibility(&res.scan)?;
        let best = om.distribution(&AnalyzerSettings::for_config(
            &cfg,
            0.0,
            -fringe_offset(&cfg),
        ))?;
        let model_v = expected_table(&best, CountingMode::CentralPeak).correlation();
        let rate = res.coincidences as f64 / res.trials as f64;
        writeln!(
            body,
            "{mu},{:.6},{:.6},{model_v:.6},{rate:.6e}",
            fit.visibility,
            fit.sigma_visibility()
        )
        .unwrap();
    }
    Ok(vec![run.doc("visibility.csv", body)])
}

fn setting_label(w: f64, r: f64) -> String {
    format!("w={w:.6};r={r:.6}")
}

fn bell_documents(run: &Run, result: &BellResult) -> Result<Vec<Document>> {
    let mut comps = String::from("setting,E,sigma_E\n");
    for c in &result.components {
        writeln!(
            comps,
            "{},{:.6},{:.6}",
            setting_label(c.write_phase, c.read_phase),
            c.e,
            c.sigma
        )
        .unwrap();
    }
    let mut s = Vec::new();
    write_bell_csv(&mut s, result)?;
    Ok(vec![
        run.doc("bell_components.csv", comps),
        run.doc("bell.csv", String::from_utf8(s).expect("ascii csv")),
    ])
}

fn bell(
    run: &Run,
    cfg: &ExperimentConfig,
    with_events: bool,
    to_files: bool,
) -> Result<Vec<Document>> {
    if with_events && !to_files {
        return Err(Error::Config("--events needs an --out directory".into()));
    }
    let om = OutcomeModel::new(cfg, &dephasing(cfg)?)?;
    let mut components = Vec::new();
    let mut event_docs = Vec::new();
    for (k, &(w, r)) in optimal_settings(fringe_offset(cfg)).iter().enumerate() {
        let dist = om.distribution(&AnalyzerSettings::for_config(cfg, w, r))?;
        let seed = point_seed(run.seed, k);
        let records = sample_trials(&dist, run.trials, seed);
        let e = correlation(&coincidences(
            &records,
            CountingMode::CentralPeak,
            run.trials,
        ))?;
        components.push(BellComponent {
            write_phase: w,
            read_phase: r,
            e: e.value,
            sigma: e.sigma,
        });
        if with_events {
            let stream = EventStream {
                config_hash: run.hash.clone(),
                seed,
                trials: run.trials,
                settings: Some((w, r)),
                records,
            };
            let mut buf = Vec::new();
            write_events(&mut buf, &stream)?;
            event_docs.push(Document {
                name: format!("events_{k}.csv"),
                header: String::new(),
                body: String::from_utf8(buf).expect("ascii events"),
                is_events: true,
            });
        }
    }
    let mut docs = bell_documents(run, &chsh(&components)?)?;
    docs.extend(event_docs);
    Ok(docs)
}

fn lock_sim(run: &Run, file: &ConfigFile) -> Result<Vec<Document>> {
    let lock = file.lock();
    let res = simulate_lock(&lock, file.lock_total_time_ms * 1e-3, run.seed)?;
    let mut traj = Vec::new();
    write_trajectory_csv(&mut traj, &res.trajectory)?;
    let mut summary = String::from("hold_window,rms_rad\n");
    for (i, r) in res.summary.hold_rms.iter().enumerate() {
        writeln!(summary, "{i},{r:.9}").unwrap();
    }
    writeln!(summary, "all,{:.9}", res.summary.rms).unwrap();
    let extra = format!(" lock_failed={}", res.summary.failed);
    Ok(vec![
        run.doc_with(
            "lock_trajectory.csv",
            String::from_utf8(traj).expect("ascii csv"),
            &extra,
        ),
        run.doc_with("lock_summary.csv", summary, &extra),
    ])
}

fn analyze(files: &[std::path::PathBuf]) -> Result<Vec<Document>> {
    let mut streams = Vec::new();
    for path in files {
        let f = File::open(path)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        streams.push(read_events(BufReader::new(f))?);
    }
    let first = &streams[0];
    if let Some(s) = streams.iter().find(|s| s.config_hash != first.config_hash) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "event files mix config hashes {} and {}",
                first.config_hash, s.config_hash
            ),
        });
    }
    let run = Run {
        command: "analyze",
        hash: first.config_hash.clone(),
        seed: first.seed,
        trials: first.trials,
    };

    let all: Vec<_> = streams
        .iter()
        .flat_map(|s| s.records.iter().copied())
        .collect();
    let mut hist = Vec::new();
    write_histogram_csv(&mut hist, &histogram(&all))?;
    let mut docs = vec![run.doc("histogram.csv", String::from_utf8(hist).expect("ascii csv"))];

    let mut corr = String::from("setting,E,sigma_E\n");
    let mut components = Vec::new();
    for (i, s) in streams.iter().enumerate() {
        let e = correlation(&coincidences(
            &s.records,
            CountingMode::CentralPeak,
            s.trials,
        ))?;
        let label = s
            .settings
            .map_or_else(|| format!("file{i}"), |(w, r)| setting_label(w, r));
        writeln!(corr, "{label},{:.6},{:.6}", e.value, e.sigma).unwrap();
        if let Some((w, r)) = s.settings {
            components.push(BellComponent {
                write_phase: w,
                read_phase: r,
                e: e.value,
                sigma: e.sigma,
            });
        }
    }
    docs.push(run.doc("correlations.csv", corr));
    if streams.len() == 4 && components.len() == 4 {
        docs.extend(bell_documents(&run, &chsh(&components)?)?);
    }
    Ok(docs)
}
