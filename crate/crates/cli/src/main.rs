use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use molstore_core::chip::{layout_report, ChipLayout};
use molstore_core::codec::{decode_block, encode_bytes, format_sequence_file, parse_sequence_lines, BaseSequence};
use molstore_core::config::parse_kv;
use molstore_core::decoder::{annotate_event, detect_events, BlockadeEvent, ClassifierParams, DetectorParams};
use molstore_core::orchestrator::{run_with, RunOptions, Scenario};
use molstore_core::readout::{
    synthesize_trace, AcquisitionParams, CurrentTrace, EventAnnotation, PoreModel, ScheduledEvent,
    TranslocationDirection,
};
use molstore_core::transport::{access_time_report, FieldParams, FluidParams, ParticleModel};
use molstore_core::write::{
    activate_pattern, bases_to_bits, min_spacer_length, splice, ActivatorModel, ActivatorStep, LogEntry,
    PhotochemicalStation, PrecursorStrand, StationConfig,
};

#[derive(Parser)]
#[command(name = "molstore", version, about = "Molecular storage chip simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Photochemical,
    Activator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    FiveToThree,
    ThreeToFive,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode a binary file into a base sequence file.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a base sequence file back into bytes.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a chip layout and print its densities and line counts.
    Layout {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: bool,
    },
    /// Print the drag, charge, capacity and access-time chain.
    Physics {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: bool,
    },
    /// Synthesize a current trace for the strands in a sequence file.
    Synth {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        pore: Option<PathBuf>,
        #[arg(long)]
        acq: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Open-pore time before the first strand and between strands, µs.
        #[arg(long, default_value_t = 1000.0)]
        gap_us: f64,
        /// Fix the direction of every strand instead of drawing it.
        #[arg(long, value_enum)]
        direction: Option<Direction>,
    },
    /// Detect blockade events in a trace.
    Detect {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Classify each event as a homopolymer with this pore model.
        #[arg(long)]
        pore: Option<PathBuf>,
    },
    /// Simulate writing a sequence and log every action.
    WriteSim {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "photochemical")]
        scheme: Scheme,
        #[arg(long)]
        log: PathBuf,
        /// Station config for the photochemical scheme.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200.0)]
        wavelength_nm: f64,
        #[arg(long, default_value_t = 100.0)]
        spacer_nm: f64,
    },
    /// Run a store/fetch/erase scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Run stations one after another instead of in parallel.
        #[arg(long)]
        serial: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_kv<T: serde::de::DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => parse_kv(&read(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(T::default()),
    }
}

fn read_sequences(path: &Path) -> Result<Vec<BaseSequence>> {
    parse_sequence_lines(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn single_sequence(path: &Path) -> Result<BaseSequence> {
    let mut seqs = read_sequences(path)?;
    match seqs.len() {
        0 => Ok(BaseSequence::default()),
        1 => Ok(seqs.remove(0)),
        n => bail!("{} holds {n} sequences; expected one", path.display()),
    }
}

#[derive(Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct PhysicsConfig {
    fluid: FluidParams,
    particle: ParticleModel,
    field: FieldParams,
    path_length_m: Option<f64>,
    empirical_slowdown: Option<f64>,
}

#[derive(Serialize)]
struct DetectOutput {
    detector: DetectorParams,
    classifier: Option<ClassifierParams>,
    sample_interval_us: f64,
    events: Vec<BlockadeEvent>,
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    sample_interval_us: f64,
    sample_count: usize,
    events: &'a [EventAnnotation],
}

#[derive(Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
enum WriteLog {
    Photochemical { target: String, strand: String, elapsed_s: f64, actions: Vec<LogEntry> },
    Activator { spacer_nm: f64, min_spacer_nm: f64, bits: Vec<u8>, spliced: Vec<u8>, steps: Vec<ActivatorStep> },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Encode { input, out } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            fs::write(&out, format_sequence_file(&encode_bytes(&bytes)))
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Cmd::Decode { input, out } => {
            let block = decode_block(&single_sequence(&input)?)?;
            fs::write(&out, block.payload).with_context(|| format!("writing {}", out.display()))?;
        }
        Cmd::Layout { config, report } => {
            let layout: ChipLayout = load_kv(config.as_ref())?;
            let figures = layout_report(&layout)?;
            if report {
                print_json(&figures)?;
            }
        }
        Cmd::Physics { config, report } => {
            let cfg: PhysicsConfig = load_kv(config.as_ref())?;
            let path = cfg.path_length_m.unwrap_or(ChipLayout::default().transport_path_m());
            let figures =
                access_time_report(&cfg.fluid, &cfg.particle, &cfg.field, path, cfg.empirical_slowdown.unwrap_or(1e3))?;
            if report {
                print_json(&figures)?;
            }
        }
        Cmd::Synth { seq, pore, acq, out, gap_us, direction } => {
            let pore: PoreModel = load_kv(pore.as_ref())?;
            let acq: AcquisitionParams = load_kv(acq.as_ref())?;
            let direction = direction.map(|d| match d {
                Direction::FiveToThree => TranslocationDirection::FiveToThree,
                Direction::ThreeToFive => TranslocationDirection::ThreeToFive,
            });
            let mut start = gap_us;
            let mut events = Vec::new();
            for s in read_sequences(&seq)? {
                // Reserve the slower direction so strands never overlap.
                let longest = TranslocationDirection::BOTH
                    .iter()
                    .map(|&d| pore.translocation_time_us(&s, d))
                    .fold(0.0, f64::max);
                events.push(ScheduledEvent::new(s, direction, start));
                start += longest + gap_us;
            }
            let trace = synthesize_trace(&events, &pore, &acq)?;
            trace.save(&out)?;
            let sidecar = SynthSidecar {
                sample_interval_us: trace.sample_interval_us,
                sample_count: trace.len(),
                events: &trace.annotations,
            };
            write_json(&out.with_extension("json"), &sidecar)?;
        }
        Cmd::Detect { trace, out, config, pore } => {
            let params: DetectorParams = load_kv(config.as_ref())?;
            let file = fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let tr = CurrentTrace::read_csv(std::io::BufReader::new(file))?;
            let mut events = detect_events(&tr, &params)?;
            let classifier = match pore {
                Some(p) => {
                    let pore: PoreModel = parse_kv(&read(&p)?)?;
                    let cp = ClassifierParams::default();
                    for e in &mut events {
                        annotate_event(e, &pore, &cp);
                    }
                    Some(cp)
                }
                None => None,
            };
            write_json(
                &out,
                &DetectOutput { detector: params, classifier, sample_interval_us: tr.sample_interval_us, events },
            )?;
        }
        Cmd::WriteSim { target, scheme, log, config, wavelength_nm, spacer_nm } => {
            let target = single_sequence(&target)?;
            let entry = match scheme {
                Scheme::Photochemical => {
                    let cfg: StationConfig = load_kv(config.as_ref())?;
                    let mut station = PhotochemicalStation::new(BaseSequence::default(), cfg);
                    station.write_sequence(&target)?;
                    WriteLog::Photochemical {
                        strand: station.strand().to_string(),
                        elapsed_s: station.elapsed_s(),
                        actions: station.log().to_vec(),
                        target: target.to_string(),
                    }
                }
                Scheme::Activator => {
                    let activator = ActivatorModel::far_field(wavelength_nm);
                    let bits = bases_to_bits(&target);
                    let precursor = PrecursorStrand::new(bits.len(), spacer_nm);
                    let min = min_spacer_length(&activator, precursor.active_molecule_nm)?;
                    let (written, steps) = activate_pattern(&precursor, &bits, &activator)?;
                    WriteLog::Activator { spacer_nm, min_spacer_nm: min, spliced: splice(&written)?, bits, steps }
                }
            };
            write_json(&log, &entry)?;
        }
        Cmd::Run { scenario, report, traces, serial } => {
            let sc = Scenario::parse(&read(&scenario)?).with_context(|| format!("parsing {}", scenario.display()))?;
            let output = run_with(&sc, RunOptions { parallel: !serial, keep_traces: traces.is_some() })?;
            write_json(&report, &output.report)?;
            if let Some(dir) = traces {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (index, trace) in &output.traces {
                    trace.save(&dir.join(format!("fetch_{index:04}.csv")))?;
                }
            }
            if !output.report.all_payloads_ok() {
                eprintln!("{} payload check(s) failed", output.report.payload_checks_failed);
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
