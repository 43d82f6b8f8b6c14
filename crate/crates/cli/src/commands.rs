use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::Utc;
use lagscope::clusters::{cluster_changelog, write_clusters_jsonl, Window};
use lagscope::leadership::{follow_screen, CarriedItems};
use lagscope::panel::{extract_changes, ingest_observations, Category, CategorySet, PricePanel, StoreId};
use lagscope::report::{build_bundle, render, BundleOptions, Format, ReportBundle, Section};
use lagscope::synth::{confound_scenario, simulate, SimConfig};

use crate::collect::{self, CollectReport};
use crate::config::RunConfig;
use crate::log::ObservationLog;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_panel(path: &Path) -> Result<PricePanel> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ingest_observations(file).with_context(|| format!("{}", path.display()))
}

fn print_summary(panel: &PricePanel) {
    let s = panel.summary();
    println!(
        "stores={} items={} days={} observations={}",
        s.stores, s.items, s.days, s.observations
    );
}

/// Validates each file and appends it to the log as one segment.
pub fn ingest(config: &RunConfig, files: &[PathBuf], log_dir: &Path) -> Result<()> {
    let files = if files.is_empty() { &config.observations } else { files };
    if files.is_empty() {
        bail!("no observation files given");
    }
    // validate everything before touching the log
    let panels = files
        .iter()
        .map(|f| read_panel(f).map(|p| (f, p)))
        .collect::<Result<Vec<_>>>()?;
    let mut log = ObservationLog::open(log_dir)?;
    for (file, panel) in panels {
        let rec = log.append(&format!("file:{}", file.display()), Utc::now(), &panel)?;
        eprintln!("appended {} ({} observations)", rec.file, rec.observations);
    }
    print_summary(&log.replay()?);
    Ok(())
}

/// Collects every configured source once. Returns true if some source failed.
pub fn collect(config: &RunConfig, log_dir: &Path) -> Result<bool> {
    if config.sources.is_empty() {
        bail!("sources: no collector sources configured");
    }
    collect::check_sources(&config.sources)?;
    let mut log = ObservationLog::open(log_dir)?;
    let CollectReport { appended, empty, failed } = collect::collect(&mut log, &config.sources)?;
    for rec in &appended {
        println!("collected {}: {} observations -> {}", rec.source, rec.observations, rec.file);
    }
    for name in &empty {
        println!("collected {name}: nothing matched");
    }
    for (name, err) in &failed {
        eprintln!("failed {name}: {err}");
    }
    print_summary(&log.replay()?);
    Ok(!failed.is_empty())
}

pub enum SimSource<'a> {
    File(&'a Path),
    Preset(&'a str),
}

pub fn simulate_cmd(source: SimSource, seed: Option<u64>, out: &Path, confound: bool) -> Result<()> {
    let Some(seed) = seed else {
        bail!("--seed is required: simulations must be reproducible, so no default seed is chosen");
    };
    let config = match source {
        SimSource::File(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SimConfig::from_toml(&text).with_context(|| format!("{}", path.display()))?
        }
        SimSource::Preset("injection") => SimConfig::injection_preset(),
        SimSource::Preset("confound") => SimConfig::confound_preset(),
        SimSource::Preset(other) => bail!("unknown preset {other:?} (expected injection or confound)"),
    };
    let output = if confound {
        confound_scenario(&config, seed)?
    } else {
        simulate(&config, seed)?
    };

    write_file(&out.join("observations.csv"), &output.panel.to_csv_bytes())?;
    let mut cats = Vec::new();
    output.categories.write_csv(&mut cats)?;
    write_file(&out.join("categories.csv"), &cats)?;
    let mut truth = Vec::new();
    output.truth.write_jsonl(&mut truth)?;
    write_file(&out.join("ground_truth.jsonl"), &truth)?;
    write_file(&out.join("sim_config.toml"), config.to_toml().as_bytes())?;
    print_summary(&output.panel);
    Ok(())
}

pub struct AnalyzeArgs {
    pub observations: Vec<PathBuf>,
    pub log_dir: Option<PathBuf>,
    pub format: Format,
}

fn load_analysis_panel(config: &RunConfig, args: &AnalyzeArgs) -> Result<PricePanel> {
    let files = if args.observations.is_empty() && args.log_dir.is_none() {
        &config.observations
    } else {
        &args.observations
    };
    if !files.is_empty() {
        let mut panel = PricePanel::new();
        for f in files {
            panel.merge(&read_panel(f)?).with_context(|| format!("merging {}", f.display()))?;
        }
        return Ok(panel);
    }
    match args.log_dir.as_ref().or(config.log_dir.as_ref()) {
        Some(dir) => {
            if !dir.join("index.jsonl").exists() {
                bail!("no observation log at {}", dir.display());
            }
            ObservationLog::open(dir)?.replay()
        }
        None => bail!("no input: give --observations or --log-dir"),
    }
}

fn write_rendered(bundle: &ReportBundle, format: Format, dir: &Path) -> Result<usize> {
    let files = render(bundle, format)?;
    for (name, bytes) in &files {
        write_file(&dir.join(name), bytes)?;
    }
    Ok(files.len())
}

pub fn analyze(config: &RunConfig, args: &AnalyzeArgs) -> Result<()> {
    config.validate()?;
    let panel = load_analysis_panel(config, args)?;
    let categories = match &config.categories {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            CategorySet::read_csv(file).with_context(|| format!("{}", path.display()))?
        }
        None => CategorySet::from_records(panel.items().iter().cloned().map(Category::random))?,
    };
    let carried = match &config.carried {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            CarriedItems::read_csv(file).with_context(|| format!("{}", path.display()))?
        }
        None => CarriedItems::from_panel(&panel),
    };
    let windows = config
        .windows
        .iter()
        .map(|&n| Window::new(n))
        .collect::<Result<Vec<_>, _>>()?;
    let focal = config.focal_store.as_deref().map(StoreId::new).transpose()?;
    let options = BundleOptions {
        windows: windows.clone(),
        focal,
        radius: config.radius,
        ..BundleOptions::default()
    };
    let bundle = build_bundle(&panel, &categories, &carried, &options)?;

    let out = &config.output_dir;
    write_file(&out.join("bundle.json"), bundle.to_json().as_bytes())?;
    let n = write_rendered(&bundle, args.format, &out.join("tables"))?;

    let log = extract_changes(&panel);
    for &w in &windows {
        let mut buf = Vec::new();
        write_clusters_jsonl(&mut buf, &cluster_changelog(&log, w))?;
        write_file(&out.join(format!("clusters_{}day.jsonl", w.days())), &buf)?;
    }

    let mut screen = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    screen.write_record(["category", "store_id", "peak_day", "peak_fraction"])?;
    if let Section::Present(lags) = &bundle.lag_tables {
        for lag in lags {
            let Section::Present(table) = &lag.table else { continue };
            let category = lag.category.map_or("all", |c| c.as_str());
            for flag in follow_screen(table, config.screen_threshold) {
                println!(
                    "screen {category}: {} peaks at d={} with {:.3}",
                    flag.store_id, flag.peak_day, flag.peak_fraction
                );
                screen.write_record([
                    category.to_string(),
                    flag.store_id.to_string(),
                    flag.peak_day.to_string(),
                    format!("{:.6}", flag.peak_fraction),
                ])?;
            }
        }
    }
    write_file(&out.join("screen.csv"), &screen.into_inner()?)?;

    print_summary(&panel);
    eprintln!("wrote {n} tables to {}", out.join("tables").display());
    Ok(())
}

pub fn report(bundle_path: &Path, format: Format, out: &Path) -> Result<()> {
    let text = fs::read_to_string(bundle_path).with_context(|| format!("reading {}", bundle_path.display()))?;
    let bundle = ReportBundle::from_json(&text).with_context(|| format!("parsing {}", bundle_path.display()))?;
    let n = write_rendered(&bundle, format, out)?;
    let mut stdout = BufWriter::new(std::io::stdout());
    writeln!(stdout, "wrote {n} tables to {}", out.display())?;
    Ok(())
}
