//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 I/O error,
//! 3 format or decode error, 4 verification failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{self, DenoiseSpec, DiffMode};
use crate::codec::{self, BlurStack, ChannelMode, CodecChoice, EncoderConfig, Order, ScheduleSpec, SpreadChoice};
use crate::error::Error;
use crate::raster::{self, psnr, RasterImage, ResidualMode};
use crate::search::{self, StackIndex};
use crate::signal::{self, Signal1D, Stack1D};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "blurstack", version, about = "Gaussian blur stack image and signal codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a PGM/PPM image into a GBS1 container.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        flags: EncodeFlags,
    },
    /// Reconstruct the image stored in a container.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Partial reconstruction from K layers.
    Preview {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        layers: usize,
        #[arg(long, value_enum, default_value = "bottomup")]
        order: OrderArg,
    },
    /// Per-layer statistics.
    Inspect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Difference image of two PGM/PPM files.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "absolute")]
        mode: DiffArg,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Exit with status 4 when the images differ.
        #[arg(long)]
        fail_on_difference: bool,
    },
    /// Re-blur selected layers and optionally grey and blur the base.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',')]
        blur_layers: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        layer_sigma: f64,
        #[arg(long)]
        base_grey: bool,
        #[arg(long)]
        base_sigma: Option<f64>,
    },
    /// Reconstruct at an integer scale.
    Enlarge {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        scale: usize,
    },
    /// Encode a headerless 8-bit signal (with its sidecar) into a container.
    SignalEncode {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to INPUT.meta.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        flags: EncodeFlags,
    },
    /// Decode a signal container into raw samples plus OUTPUT.meta.
    SignalDecode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Coarse-to-fine search index.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
}

#[derive(Subcommand, Debug)]
enum IndexCommand {
    /// Add a container to an index directory (created if missing).
    Add {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        stack: PathBuf,
    },
    /// Rank indexed entries against a query container.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        max_results: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct EncodeFlags {
    #[arg(long, value_enum, conflicts_with_all = ["sigma0", "factor", "sigma_min"])]
    preset: Option<PresetArg>,
    /// Initial sigma, or `auto` for half the largest dimension.
    #[arg(long)]
    sigma0: Option<String>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long, conflicts_with = "spread_preset")]
    spread: Option<u16>,
    #[arg(long, value_enum)]
    spread_preset: Option<SpreadPresetArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "deflate")]
    layer_codec: CodecArg,
    #[arg(long, default_value_t = codec::DEFAULT_QUANT_BITS)]
    quant_bits: u8,
    /// Fixed downq factor; default depends on each layer's sigma.
    #[arg(long)]
    downsample: Option<u16>,
    #[arg(long)]
    per_channel: bool,
    #[arg(long, value_enum, default_value = "deflate")]
    base_codec: CodecArg,
    #[arg(long, value_enum, default_value = "wide16")]
    residual: ResidualArg,
    #[arg(long)]
    loss_tolerance: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Paper,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SpreadPresetArg {
    PaperSpread,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CodecArg {
    Raw,
    Deflate,
    Downq,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ResidualArg {
    Wide16,
    Clamp8,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OrderArg {
    Bottomup,
    Topdown,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DiffArg {
    Absolute,
    Grain,
}

enum Failure {
    Usage(String),
    Verify(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Parse { .. }
        | Error::UnsupportedDepth(_)
        | Error::BadMagic
        | Error::Version { .. }
        | Error::Truncated { .. }
        | Error::Crc { .. }
        | Error::Decode { .. } => EXIT_FORMAT,
        Error::Shape(_) | Error::Parameter(_) | Error::Index(_) | Error::Conflict(_) => EXIT_USAGE,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Verify(msg)) => {
            let _ = writeln!(stderr, "verification failed: {msg}");
            EXIT_VERIFY
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| {
        Failure::Lib(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

/// Writes through a sibling temporary file so a failed run never leaves a
/// partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn load_image(path: &Path) -> Result<RasterImage, Failure> {
    Ok(raster::load_pnm(&read(path)?)?)
}

fn load_stack(path: &Path) -> Result<BlurStack, Failure> {
    Ok(codec::deserialize(&read(path)?)?)
}

impl EncodeFlags {
    fn config(&self) -> Result<EncoderConfig, Failure> {
        let schedule = match self.preset {
            Some(PresetArg::Paper) => ScheduleSpec::paper(),
            None => {
                let sigma0 = match self.sigma0.as_deref() {
                    None | Some("auto") => None,
                    Some(s) => Some(
                        s.parse::<f64>()
                            .map_err(|_| Failure::Usage(format!("--sigma0 expects a number or `auto`, got `{s}`")))?,
                    ),
                };
                ScheduleSpec::Halving {
                    sigma0,
                    factor: self.factor.unwrap_or(2.0),
                    sigma_min: self.sigma_min.unwrap_or(1.0),
                }
            }
        };
        let spread = match (self.spread, self.spread_preset) {
            (Some(r), _) => SpreadChoice::Uniform(r),
            (None, Some(SpreadPresetArg::PaperSpread)) => SpreadChoice::PaperPreset,
            (None, None) => SpreadChoice::Disabled,
        };
        let choice = |c: CodecArg| match c {
            CodecArg::Raw => CodecChoice::Raw,
            CodecArg::Deflate => CodecChoice::Deflate,
            CodecArg::Downq => CodecChoice::DownQ {
                quant_bits: self.quant_bits,
                downsample: self.downsample,
            },
        };
        Ok(EncoderConfig {
            schedule,
            spread,
            seed: self.seed,
            layer_codec: choice(self.layer_codec),
            base_codec: match self.base_codec {
                CodecArg::Downq => CodecChoice::DownQ {
                    quant_bits: self.quant_bits,
                    downsample: None,
                },
                other => choice(other),
            },
            residual_mode: match self.residual {
                ResidualArg::Wide16 => ResidualMode::Wide16,
                ResidualArg::Clamp8 => ResidualMode::Clamp8,
            },
            channel_mode: if self.per_channel {
                ChannelMode::PerChannel
            } else {
                ChannelMode::Joint
            },
            loss_tolerance: self.loss_tolerance,
        })
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Encode { input, output, flags } => {
            let image = load_image(&input)?;
            let stack = codec::encode(&image, &flags.config()?)?;
            write_atomic(&output, &codec::serialize(&stack))?;
        }
        Command::Decode { input, output } => {
            let image = codec::decode(&load_stack(&input)?)?;
            write_atomic(&output, &raster::save_pnm(&image))?;
        }
        Command::Preview {
            input,
            output,
            layers,
            order,
        } => {
            let order = match order {
                OrderArg::Bottomup => Order::BottomUp,
                OrderArg::Topdown => Order::TopDown,
            };
            let image = codec::partial_reconstruct(&load_stack(&input)?, layers, order)?;
            write_atomic(&output, &raster::save_pnm(&image))?;
        }
        Command::Inspect { input, json } => {
            let reports = analysis::layer_report(&load_stack(&input)?)?;
            if json {
                writeln!(stdout, "{}", analysis::report_json(&reports))?;
            } else {
                write!(stdout, "{}", analysis::report_table(&reports))?;
            }
        }
        Command::Diff {
            a,
            b,
            mode,
            output,
            fail_on_difference,
        } => {
            let (a, b) = (load_image(&a)?, load_image(&b)?);
            let mode = match mode {
                DiffArg::Absolute => DiffMode::Absolute,
                DiffArg::Grain => DiffMode::Grain,
            };
            let diff = analysis::diff_image(&a, &b, mode)?;
            let max = analysis::diff_image(&a, &b, DiffMode::Absolute)?
                .planes()
                .iter()
                .flat_map(|p| p.samples().iter().copied())
                .max()
                .unwrap_or(0);
            let q = psnr(&a, &b)?;
            writeln!(stdout, "max_abs_diff {max}")?;
            writeln!(
                stdout,
                "psnr {}",
                if q.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{q:.3}")
                }
            )?;
            if let Some(out) = output {
                write_atomic(&out, &raster::save_pnm(&diff))?;
            }
            if fail_on_difference && max != 0 {
                return Err(Failure::Verify(format!("images differ by up to {max}")));
            }
        }
        Command::Denoise {
            input,
            output,
            blur_layers,
            layer_sigma,
            base_grey,
            base_sigma,
        } => {
            let spec = DenoiseSpec {
                layers: blur_layers,
                layer_sigma,
                base_grey,
                base_sigma,
            };
            let stack = analysis::denoise(&load_stack(&input)?, &spec)?;
            write_atomic(&output, &codec::serialize(&stack))?;
        }
        Command::Enlarge { input, output, scale } => {
            let image = codec::enlarge(&load_stack(&input)?, scale)?;
            write_atomic(&output, &raster::save_pnm(&image))?;
        }
        Command::SignalEncode {
            input,
            sidecar,
            output,
            flags,
        } => {
            let sidecar = sidecar.unwrap_or_else(|| with_suffix(&input, ".meta"));
            let meta = String::from_utf8(read(&sidecar)?).map_err(|_| {
                Failure::Lib(Error::Parse {
                    offset: 0,
                    message: "sidecar is not UTF-8".into(),
                })
            })?;
            let sig = Signal1D::from_files(&read(&input)?, &meta)?;
            let stack = signal::encode1d(&sig, &flags.config()?)?;
            write_atomic(&output, &codec::serialize(stack.stack()))?;
        }
        Command::SignalDecode { input, output } => {
            let stack = Stack1D::from_stack(load_stack(&input)?)?;
            let sig = signal::decode1d(&stack)?;
            let bytes = sig.to_bytes();
            let meta = sig.sidecar();
            write_atomic(&output, &bytes)?;
            write_atomic(&with_suffix(&output, ".meta"), meta.as_bytes())?;
        }
        Command::Index { command } => return index_command(command, stdout),
    }
    Ok(EXIT_OK)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn index_command(command: IndexCommand, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        IndexCommand::Add { index, id, stack: path } => {
            let stack = load_stack(&path)?;
            let mut idx = if index.join("manifest.txt").exists() {
                StackIndex::load(&index)?
            } else {
                StackIndex::for_stack(&stack)
            };
            idx.add(&id, &stack, Some(path))?;
            idx.save(&index)?;
            writeln!(stdout, "{} entries", idx.len())?;
        }
        IndexCommand::Search {
            index,
            query,
            thresholds,
            max_results,
            json,
        } => {
            let idx = StackIndex::load(&index)?;
            let results = search::coarse_to_fine_search(&idx, &load_stack(&query)?, &thresholds, max_results)?;
            if json {
                let doc = serde_json::to_string_pretty(&serde_json::json!({ "results": results }))
                    .expect("results are serializable");
                writeln!(stdout, "{doc}")?;
            } else {
                writeln!(stdout, "rank\tid\taccepted\tdepth\tscores")?;
                for (rank, r) in results.iter().enumerate() {
                    let scores: Vec<String> = r.per_level_scores.iter().map(|s| format!("{s:.4}")).collect();
                    writeln!(
                        stdout,
                        "{}\t{}\t{}\t{}\t{}",
                        rank + 1,
                        r.id,
                        if r.accepted { "yes" } else { "no" },
                        r.deepest_level_reached,
                        scores.join(",")
                    )?;
                }
            }
        }
    }
    Ok(EXIT_OK)
}
