//! `bnav`: run simulated painting sessions, inspect records and serve the
//! live protocol.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bnav_core::geometry::parse_marker_frames;
use bnav_core::io::{load_record, replay, reproduces, save_record, LiveConfig, LoadedRecord, Server};
use bnav_core::sim::{sweep, SweepEntry};
use bnav_core::tipdetect::parse_edge_chain;
use bnav_core::{register_board, run_session, tip_index, BoardRegistration, SessionConfig, DEFAULT_CANONICAL_SIZE};

#[derive(Parser)]
#[command(name = "bnav", version, about = "Painting navigation engine and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective session config as key=value lines.
    Config(ConfigArgs),
    /// Simulate one session.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the session record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate batches of sessions and print one CSV row per variant.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sessions per variant.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Vary one key, e.g. `period=1,2,3`. Repeatable; each value is a variant.
        #[arg(long = "vary", value_name = "KEY=V1,V2")]
        vary: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute a record's metrics and report disagreements.
    Replay {
        record: PathBuf,
        /// Also re-run the session from the stored config.
        #[arg(long)]
        reproduce: bool,
    },
    /// Per-target metrics of one or more records, as CSV.
    Metrics {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
    /// Tip-position heatmap of a record.
    Heatmap {
        record: PathBuf,
        /// `.pgm` writes an image, anything else CSV frequencies.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Board registration for every line of a marker-frame file, as CSV.
    Register { frames: PathBuf },
    /// Brush tip of an edge chain file.
    Tip {
        chain: PathBuf,
        #[arg(long, default_value_t = 5)]
        window: usize,
    },
    /// Serve the live protocol over TCP.
    Serve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Exit after this many connections have closed.
        #[arg(long)]
        connections: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key=value config file applied over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated target codes, e.g. `bc,eg`.
    #[arg(long)]
    targets: Option<String>,
    /// Prompt period in seconds.
    #[arg(long)]
    period: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SessionConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                SessionConfig::from_kv(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SessionConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got `{kv}`"))?;
            pairs.push((k.into(), v.into()));
        }
        if let Some(seed) = self.seed {
            pairs.push(("seed".into(), seed.to_string()));
        }
        if let Some(targets) = &self.targets {
            pairs.push(("targets".into(), targets.clone()));
        }
        if let Some(period) = self.period {
            pairs.push(("period".into(), period.to_string()));
        }
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Config(args) => print!("{}", args.resolve()?.to_kv()),
        Command::Run { config, out } => {
            let record = run_session(&config.resolve()?)?;
            let s = record.summary();
            println!(
                "status={} duration={:.2} o_c={} o_d={} r={} class={}",
                s.status.as_str(),
                s.duration,
                fmt_opt(s.completion),
                fmt_opt(s.overflow),
                fmt_opt(s.r),
                s.class.map(|c| c.as_str()).unwrap_or("")
            );
            if let Some(path) = out {
                save_record(&record, &path).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Sweep { config, runs, vary, out } => {
            let base = config.resolve()?;
            let entries = sweep_entries(&base, runs, &vary)?;
            write_output(out.as_deref(), &sweep(&entries)?.to_csv())?;
        }
        Command::Replay { record, reproduce } => return replay_cmd(&record, reproduce),
        Command::Metrics { records } => {
            let mut out = String::from(
                "file,seed,status,duration,target,code,started,arrived,filled,o_c,o_d,r,class\n",
            );
            for path in &records {
                let rec = load(path)?.record;
                for (i, t) in rec.targets.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{:.4},{},{},{:.4},{},{},{},{},{},{}\n",
                        path.display(),
                        rec.config.seed,
                        rec.status.as_str(),
                        rec.duration,
                        i,
                        t.code,
                        t.started_at,
                        fmt_opt(t.arrived_at),
                        fmt_opt(t.filled_at),
                        fmt_opt(t.fill.map(|f| f.completion)),
                        fmt_opt(t.fill.map(|f| f.overflow)),
                        fmt_opt(t.trajectory.map(|m| m.r)),
                        t.trajectory.map(|m| m.class.as_str()).unwrap_or(""),
                    ));
                }
            }
            print!("{out}");
        }
        Command::Heatmap { record, out } => {
            let map = load(&record)?.record.heatmap();
            let is_pgm = out.as_deref().and_then(Path::extension).is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            let text = if is_pgm { map.to_pgm() } else { map.to_csv() };
            write_output(out.as_deref(), &text)?;
        }
        Command::Register { frames } => {
            let text = read(&frames)?;
            let frames = parse_marker_frames(&text)?;
            let mut out = String::from("t,registered_at,h11,h12,h13,h21,h22,h23,h31,h32,h33\n");
            let mut current: Option<BoardRegistration> = None;
            for f in &frames {
                match register_board(current.as_ref(), &f.markers, DEFAULT_CANONICAL_SIZE, f.t) {
                    Ok(reg) => current = Some(reg),
                    Err(bnav_core::GeometryError::NoRegistration) => {}
                    Err(e) => bail!("frame at t={}: {e}", f.t),
                }
                out.push_str(&f.t.to_string());
                match &current {
                    Some(reg) => {
                        out.push_str(&format!(",{}", reg.updated_at));
                        for v in reg.to_canonical.matrix().iter().flatten() {
                            out.push_str(&format!(",{v}"));
                        }
                    }
                    None => out.push_str(&",".repeat(10)),
                }
                out.push('\n');
            }
            print!("{out}");
        }
        Command::Tip { chain, window } => {
            let chain = parse_edge_chain(&read(&chain)?)?;
            let i = tip_index(&chain, window)?;
            let p = chain.points()[i];
            println!("index={i} x={} y={}", p.x, p.y);
        }
        Command::Serve { config, bind, port, connections } => {
            let live = LiveConfig::from(&config.resolve()?);
            let server = Server::bind((bind.as_str(), port), live)?;
            println!("listening on {}", server.local_addr()?);
            io::stdout().flush()?;
            match connections {
                Some(n) => server.run_for(n)?,
                None => server.run()?,
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_entries(base: &SessionConfig, runs: usize, vary: &[String]) -> Result<Vec<SweepEntry>> {
    if vary.is_empty() {
        return Ok(vec![SweepEntry::new("base", base.clone(), runs)]);
    }
    let mut entries = Vec::new();
    for spec in vary {
        let (key, values) = spec.split_once('=').with_context(|| format!("expected KEY=V1,V2, got `{spec}`"))?;
        // Target lists contain commas themselves, so they are separated by `;`.
        let sep = if key.trim() == "targets" { ';' } else { ',' };
        for value in values.split(sep).filter(|v| !v.trim().is_empty()) {
            let mut cfg = base.clone();
            cfg.set(key, value)?;
            cfg.validate()?;
            entries.push(SweepEntry::new(format!("{}={}", key.trim(), value.trim()), cfg, runs));
        }
    }
    Ok(entries)
}

fn replay_cmd(path: &Path, reproduce: bool) -> Result<ExitCode> {
    let loaded = load(path)?;
    let report = replay(&loaded.record)?;
    for t in &report.targets {
        let fill = match &t.fill {
            Some(Ok(f)) => format!("o_c={:.4} o_d={:.4}", f.completion, f.overflow),
            Some(Err(e)) => format!("fill error: {e}"),
            None => "no paint".into(),
        };
        let traj = match &t.trajectory {
            Ok(m) => format!("r={:.4} class={}", m.r, m.class),
            Err(e) => format!("trajectory error: {e}"),
        };
        println!("target {} {}: {fill} {traj}", t.index, t.code);
    }
    for e in report.degenerate() {
        println!("degenerate: {e}");
    }
    for m in &report.mismatches {
        println!("mismatch: {m}");
    }
    let mut ok = report.is_consistent();
    if reproduce {
        let same = reproduces(&loaded.record)?;
        println!("reproduces: {same}");
        ok &= same;
    }
    println!("{}", if ok { "consistent" } else { "inconsistent" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn load(path: &Path) -> Result<LoadedRecord> {
    let loaded = load_record(path).with_context(|| format!("loading {}", path.display()))?;
    if loaded.partial {
        eprintln!("warning: {} is truncated; loaded the complete prefix", path.display());
    }
    Ok(loaded)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}
