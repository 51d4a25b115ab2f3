//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::cost::{compute_cost_volume_streaming, CostKind};
use crate::error::{Error, Result};
use crate::explorer::{
    pareto_front, parse_objectives, run_sweep, write_csv, Resolution, SweepSpec,
};
use crate::hwmodel::{estimate, PipelineConfig};
use crate::pipeline::{run_pipeline, run_pipeline_streamed};
use crate::pixelio::{
    load_disparity, load_mask, load_pgm, parse_config, save_disparity, StereoPair,
};
use crate::refine::{d1_error, LrMode};

#[derive(Debug, Parser)]
#[command(
    name = "sgmflow",
    version,
    about = "Streaming semi-global stereo matching and FPGA cost model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the disparity map of one stereo pair.
    Match(MatchArgs),
    /// Run a configuration grid over a dataset and write a CSV.
    Sweep(SweepArgs),
    /// Print the cycle, runtime and memory estimate of a configuration.
    Estimate(EstimateArgs),
    /// D1 error of a disparity map against ground truth.
    Eval(EvalArgs),
}

/// Single-configuration settings; flags override values from `--config`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    win: Option<String>,
    #[arg(long)]
    dmax: Option<String>,
    #[arg(long)]
    uf: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    /// nlr, lr1 or lr2.
    #[arg(long = "lr")]
    lr_mode: Option<String>,
    #[arg(long)]
    lr_threshold: Option<String>,
    /// on or off.
    #[arg(long)]
    median: Option<String>,
    #[arg(long)]
    median_win: Option<String>,
    #[arg(long)]
    freq_mhz: Option<String>,
    #[arg(long)]
    il: Option<String>,
    #[arg(long)]
    ii: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    /// L-R check overhead in cycles, or `auto`.
    #[arg(long)]
    lr_overhead: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("cost", &self.cost),
            ("win", &self.win),
            ("dmax", &self.dmax),
            ("uf", &self.uf),
            ("p1", &self.p1),
            ("p2", &self.p2),
            ("lr_mode", &self.lr_mode),
            ("lr_threshold", &self.lr_threshold),
            ("median", &self.median),
            ("median_win", &self.median_win),
            ("freq_mhz", &self.freq_mhz),
            ("il", &self.il),
            ("ii", &self.ii),
            ("width", &self.width),
            ("height", &self.height),
            ("lr_overhead", &self.lr_overhead),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    /// Loads `--config` and replaces the keys given on the command line. When
    /// `frame` is set it supplies width and height unless a flag overrides them.
    fn resolve(&self, frame: Option<(usize, usize)>) -> Result<PipelineConfig> {
        let file = match &self.config {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut overrides: Vec<(&str, String)> = self
            .overrides()
            .into_iter()
            .map(|(k, v)| (k, v.to_string()))
            .collect();
        if let Some((w, h)) = frame {
            for (key, v) in [("width", w), ("height", h)] {
                if !overrides.iter().any(|(k, _)| *k == key) {
                    overrides.push((key, v.to_string()));
                }
            }
        }
        parse_config(&merge_config(&file, &overrides))
    }
}

/// Drops the lines of `text` whose key is overridden and appends the overrides.
fn merge_config(text: &str, overrides: &[(&str, String)]) -> String {
    let mut out: String = text
        .lines()
        .filter(|line| {
            let content = line.split('#').next().unwrap_or("");
            let key = content.split_once('=').map(|(k, _)| k.trim());
            !key.is_some_and(|k| overrides.iter().any(|(o, _)| *o == k))
        })
        .flat_map(|l| [l, "\n"])
        .collect();
    for (k, v) in overrides {
        out.push_str(&format!("{k}={v}\n"));
    }
    out
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// Base (left) image, PGM.
    #[arg(long)]
    base: PathBuf,
    /// Match (right) image, PGM.
    #[arg(long = "match")]
    matching: PathBuf,
    /// Output disparity PGM (16-bit).
    #[arg(long)]
    out: PathBuf,
    /// Disparity scale of the output file.
    #[arg(long, default_value_t = 256)]
    scale: u32,
    /// Also write the base cost volume in binary dump format.
    #[arg(long)]
    dump_costs: Option<PathBuf>,
    /// Run the stages as a threaded dataflow.
    #[arg(long)]
    streamed: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Stereo pair as BASE:MATCH or BASE:MATCH:TRUTH; repeatable.
    #[arg(long = "pair", required = true)]
    pairs: Vec<String>,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated cost functions.
    #[arg(long, default_value = "census")]
    cost: String,
    /// Comma-separated window sizes.
    #[arg(long, default_value = "5")]
    win: String,
    #[arg(long, default_value = "64")]
    dmax: String,
    #[arg(long, default_value = "16")]
    uf: String,
    #[arg(long = "lr", default_value = "nlr")]
    lr_mode: String,
    /// Comma-separated on/off values.
    #[arg(long, default_value = "on")]
    median: String,
    /// Comma-separated `native` or WIDTHxHEIGHT targets.
    #[arg(long, default_value = "native")]
    resolution: String,
    /// Fixed penalties as P1,P2 instead of per-cost defaults.
    #[arg(long)]
    penalties: Option<String>,
    /// Disparity scale of ground-truth files.
    #[arg(long, default_value_t = 256)]
    gt_scale: u32,
    /// Fill the wall_time_s column.
    #[arg(long)]
    timings: bool,
    /// Print the Pareto front over these comma-separated objectives.
    #[arg(long)]
    pareto: Option<String>,
    /// Template for settings that are not sweep axes.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Estimated disparity PGM.
    estimate: PathBuf,
    /// Ground-truth disparity PGM.
    truth: PathBuf,
    /// Evaluation mask PGM; nonzero pixels are evaluated.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Disparity scale of both files.
    #[arg(long, default_value_t = 256)]
    scale: u32,
}

fn list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|v| v.trim().parse()).collect()
}

fn numbers(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("--{key}: '{v}' is not a number")))
        })
        .collect()
}

fn switches(s: &str) -> Result<Vec<bool>> {
    s.split(',')
        .map(|v| match v.trim().to_ascii_lowercase().as_str() {
            "on" | "true" => Ok(true),
            "off" | "false" => Ok(false),
            _ => Err(Error::invalid(format!("--median: '{v}' is not on or off"))),
        })
        .collect()
}

fn load_pair(spec: &str, gt_scale: u32) -> Result<StereoPair> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        [b, m] => StereoPair::new(load_pgm(b)?, load_pgm(m)?, None),
        [b, m, g] => StereoPair::new(
            load_pgm(b)?,
            load_pgm(m)?,
            Some(load_disparity(g, gt_scale)?),
        ),
        _ => Err(Error::invalid(format!(
            "--pair '{spec}' is not BASE:MATCH[:TRUTH]"
        ))),
    }
}

fn cmd_match(args: &MatchArgs, out: &mut dyn Write) -> Result<()> {
    let pair = StereoPair::new(load_pgm(&args.base)?, load_pgm(&args.matching)?, None)?;
    let cfg = args.config.resolve(Some((pair.width(), pair.height())))?;
    let map = if args.streamed {
        run_pipeline_streamed(&pair, &cfg)?
    } else {
        run_pipeline(&pair, &cfg)?
    };
    save_disparity(&map, &args.out, args.scale)?;
    if let Some(path) = &args.dump_costs {
        let vol = compute_cost_volume_streaming(&pair, &cfg.cost_fn, cfg.d_max)?;
        vol.write_dump(BufWriter::new(File::create(path)?))?;
    }
    writeln!(
        out,
        "wrote {} ({}x{}, {} valid pixels)",
        args.out.display(),
        map.width(),
        map.height(),
        map.valid_count()
    )?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let template = match &args.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => PipelineConfig::default(),
    };
    let penalties = match &args.penalties {
        Some(s) => {
            let v = numbers("penalties", s)?;
            let [p1, p2] = v[..] else {
                return Err(Error::invalid("--penalties takes P1,P2"));
            };
            Some(crate::aggregate::AggregationParams::new(
                p1 as u32, p2 as u32,
            )?)
        }
        None => None,
    };
    let spec = SweepSpec {
        cost_fns: list::<CostKind>(&args.cost)?,
        windows: numbers("win", &args.win)?,
        d_maxes: numbers("dmax", &args.dmax)?,
        ufs: numbers("uf", &args.uf)?,
        lr_modes: list::<LrMode>(&args.lr_mode)?,
        median: switches(&args.median)?,
        resolutions: list::<Resolution>(&args.resolution)?,
        template,
        penalties,
        record_wall_time: args.timings,
    };
    let objectives = args.pareto.as_deref().map(parse_objectives).transpose()?;
    let dataset = args
        .pairs
        .iter()
        .map(|p| load_pair(p, args.gt_scale))
        .collect::<Result<Vec<_>>>()?;
    let records = run_sweep(&spec, &dataset)?;
    write_csv(&records, BufWriter::new(File::create(&args.out)?))?;
    writeln!(
        out,
        "wrote {} records to {}",
        records.len(),
        args.out.display()
    )?;
    if let Some(objs) = objectives {
        let front = pareto_front(&records, &objs)?;
        let names: Vec<&str> = objs.iter().map(|o| o.name()).collect();
        writeln!(
            out,
            "pareto front over {}: {} of {}",
            names.join(", "),
            front.len(),
            records.len()
        )?;
        write_csv(&front, &mut *out)?;
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.config.resolve(None)?;
    let hw = estimate(&cfg)?;
    let w = hw.widths;
    writeln!(
        out,
        "config {} {}x{} dmax {} uf {} lr {} {}x{} @ {} MHz",
        cfg.cost_fn.kind,
        cfg.cost_fn.window,
        cfg.cost_fn.window,
        cfg.d_max,
        cfg.uf,
        cfg.refine.lr_mode,
        cfg.width,
        cfg.height,
        cfg.freq_mhz
    )?;
    writeln!(out, "cycles {}", hw.cycles.total())?;
    writeln!(out, "  pipeline {}", hw.cycles.pipeline)?;
    writeln!(out, "  lr_overhead {}", hw.cycles.lr_overhead)?;
    writeln!(
        out,
        "runtime {:.4} s ({:.3} ms)",
        hw.seconds,
        hw.seconds * 1e3
    )?;
    writeln!(out, "fps {}", hw.fps_floor())?;
    writeln!(out, "widths cost {} path {} sum {}", w.cost, w.path, w.sum)?;
    writeln!(out, "memory packed {} bits", hw.mem_bits_packed)?;
    writeln!(out, "memory partitioned {} bits", hw.mem_bits_partitioned)?;
    writeln!(
        out,
        "path buffer bram packed {} partitioned {}",
        hw.path_buffer_blocks.packed, hw.path_buffer_blocks.partitioned
    )?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let est = load_disparity(&args.estimate, args.scale)?;
    let gt = load_disparity(&args.truth, args.scale)?;
    let mask = match &args.mask {
        Some(p) => Some(read_mask(p, gt.width(), gt.height())?),
        None => None,
    };
    let r = d1_error(&est, &gt, mask.as_deref())?;
    writeln!(out, "d1_all {:.6}", r.d1_all)?;
    writeln!(out, "evaluated {}", r.evaluated_pixels)?;
    writeln!(out, "erroneous {}", r.erroneous_pixels)?;
    Ok(())
}

fn read_mask(path: &Path, width: usize, height: usize) -> Result<Vec<bool>> {
    let (w, h, mask) = load_mask(path)?;
    if (w, h) != (width, height) {
        return Err(Error::Dimension(format!(
            "mask is {w}x{h}, maps are {width}x{height}"
        )));
    }
    Ok(mask)
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Match(a) => cmd_match(a, &mut stdout),
        Command::Sweep(a) => cmd_sweep(a, &mut stdout),
        Command::Estimate(a) => cmd_estimate(a, &mut stdout),
        Command::Eval(a) => cmd_eval(a, &mut stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_replaces_overridden_keys() {
        let merged = merge_config("cost=sad # c\nwin=7\n", &[("cost", "rank".into())]);
        assert_eq!(merged, "win=7\ncost=rank\n");
        let cfg = parse_config(&merged).unwrap();
        assert_eq!((cfg.cost_fn.kind, cfg.cost_fn.window), (CostKind::Rank, 7));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(numbers("uf", "4, 8,16").unwrap(), vec![4, 8, 16]);
        assert!(numbers("uf", "4,x").is_err());
        assert_eq!(switches("on,off").unwrap(), vec![true, false]);
        assert!(list::<LrMode>("nlr,lr3").is_err());
    }
}
