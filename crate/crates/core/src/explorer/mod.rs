//! Design-space sweeps: every configuration of a grid is run on a dataset,
//! scored with D1 and paired with its hardware estimate.

mod pareto;
mod resample;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

pub use pareto::{dominates, pareto_front, parse_objectives, Objective};
pub use resample::{downscale_disparity, downscale_image, downscale_pair, Resolution};

use crate::aggregate::AggregationParams;
use crate::cost::{CostFunction, CostKind};
use crate::error::{Error, Result};
use crate::hwmodel::{estimate, PipelineConfig};
use crate::pipeline::run_pipeline;
use crate::pixelio::StereoPair;
use crate::refine::{d1_error, D1Report, LrMode};

pub const CSV_HEADER: [&str; 17] = [
    "cost",
    "win",
    "dmax",
    "uf",
    "lr",
    "median",
    "width",
    "height",
    "d1_all",
    "cycles",
    "runtime_s",
    "fps",
    "mem_bits_packed",
    "cost_width",
    "path_width",
    "sum_width",
    "wall_time_s",
];

/// Grid of configurations: the cartesian product of all axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub cost_fns: Vec<CostKind>,
    pub windows: Vec<usize>,
    pub d_maxes: Vec<usize>,
    pub ufs: Vec<usize>,
    pub lr_modes: Vec<LrMode>,
    pub median: Vec<bool>,
    pub resolutions: Vec<Resolution>,
    /// Source of every setting that is not an axis.
    pub template: PipelineConfig,
    /// Fixed penalties; `None` derives them from each cost function.
    pub penalties: Option<AggregationParams>,
    /// Fill the `wall_time_s` column. Off by default so repeated sweeps are byte-identical.
    pub record_wall_time: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let t = PipelineConfig::default();
        Self {
            cost_fns: vec![t.cost_fn.kind],
            windows: vec![t.cost_fn.window],
            d_maxes: vec![t.d_max],
            ufs: vec![t.uf],
            lr_modes: vec![t.refine.lr_mode],
            median: vec![t.refine.median],
            resolutions: vec![Resolution::Native],
            template: t,
            penalties: None,
            record_wall_time: false,
        }
    }
}

/// One grid point, ordered field by field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SweepPoint {
    pub cost: CostKind,
    pub window: usize,
    pub d_max: usize,
    pub uf: usize,
    pub lr_mode: LrMode,
    pub median: bool,
    pub resolution: Resolution,
}

impl SweepSpec {
    /// All grid points in sorted order, duplicates removed.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut pts = Vec::new();
        for &cost in &self.cost_fns {
            for &window in &self.windows {
                for &d_max in &self.d_maxes {
                    for &uf in &self.ufs {
                        for &lr_mode in &self.lr_modes {
                            for &median in &self.median {
                                for &resolution in &self.resolutions {
                                    pts.push(SweepPoint {
                                        cost,
                                        window,
                                        d_max,
                                        uf,
                                        lr_mode,
                                        median,
                                        resolution,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        pts.sort();
        pts.dedup();
        pts
    }

    /// Pipeline configuration of a grid point for a frame of `width × height`.
    pub fn config(&self, p: &SweepPoint, width: usize, height: usize) -> PipelineConfig {
        let mut cfg = self.template;
        cfg.cost_fn = CostFunction {
            kind: p.cost,
            window: p.window,
        };
        cfg.d_max = p.d_max;
        cfg.uf = p.uf;
        cfg.width = width;
        cfg.height = height;
        cfg.refine.lr_mode = p.lr_mode;
        cfg.refine.median = p.median;
        cfg.params = match self.penalties {
            Some(params) => params,
            None if cfg.cost_fn.violation().is_none() => {
                AggregationParams::default_for(&cfg.cost_fn)
            }
            None => cfg.params,
        };
        cfg
    }
}

/// Result of one configuration over the whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub point: SweepPoint,
    pub width: usize,
    pub height: usize,
    /// Pooled over all pairs with ground truth; `None` when no pair has any.
    pub d1_all: Option<f64>,
    pub cycles: u64,
    pub runtime_s: f64,
    pub fps: f64,
    pub mem_bits_packed: u64,
    pub cost_width: u32,
    pub path_width: u32,
    pub sum_width: u32,
    pub wall_time_s: Option<f64>,
}

impl SweepRecord {
    pub fn csv_fields(&self) -> [String; 17] {
        let p = &self.point;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        [
            p.cost.to_string(),
            p.window.to_string(),
            p.d_max.to_string(),
            p.uf.to_string(),
            p.lr_mode.to_string(),
            if p.median { "on" } else { "off" }.to_string(),
            self.width.to_string(),
            self.height.to_string(),
            opt(self.d1_all),
            self.cycles.to_string(),
            self.runtime_s.to_string(),
            self.fps.to_string(),
            self.mem_bits_packed.to_string(),
            self.cost_width.to_string(),
            self.path_width.to_string(),
            self.sum_width.to_string(),
            opt(self.wall_time_s),
        ]
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

fn evaluate(spec: &SweepSpec, point: &SweepPoint, dataset: &[StereoPair]) -> Result<SweepRecord> {
    let started = Instant::now();
    let (w, h) = (dataset[0].width(), dataset[0].height());
    let cfg = spec.config(point, w, h);
    let hw = estimate(&cfg)?;
    let mut report: Option<D1Report> = None;
    for pair in dataset {
        let map = run_pipeline(pair, &spec.config(point, pair.width(), pair.height()))?;
        if let Some(gt) = &pair.ground_truth {
            let r = d1_error(&map, gt, None)?;
            report = Some(report.map_or(r, |acc| acc.merge(r)));
        }
    }
    Ok(SweepRecord {
        point: *point,
        width: w,
        height: h,
        d1_all: report.map(|r| r.d1_all),
        cycles: hw.cycles.total(),
        runtime_s: hw.seconds,
        fps: hw.fps,
        mem_bits_packed: hw.mem_bits_packed,
        cost_width: hw.widths.cost,
        path_width: hw.widths.path,
        sum_width: hw.widths.sum,
        wall_time_s: spec
            .record_wall_time
            .then(|| started.elapsed().as_secs_f64()),
    })
}

/// Runs every valid grid point on every pair. Invalid points are skipped with
/// a warning. Records come back in grid order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec, dataset: &[StereoPair]) -> Result<Vec<SweepRecord>> {
    if dataset.is_empty() {
        return Err(Error::invalid("sweep dataset is empty"));
    }
    let mut jobs = Vec::new();
    let mut scaled: Vec<(Resolution, Vec<StereoPair>)> = Vec::new();
    for point in spec.points() {
        if !scaled.iter().any(|(r, _)| *r == point.resolution) {
            let pairs = dataset
                .iter()
                .map(|p| downscale_pair(p, point.resolution))
                .collect();
            scaled.push((point.resolution, pairs));
        }
        let pairs = &scaled
            .iter()
            .find(|(r, _)| *r == point.resolution)
            .unwrap()
            .1;
        let problems: Vec<String> = pairs
            .iter()
            .flat_map(|p| {
                let mut v = spec.config(&point, p.width(), p.height()).violations();
                if point.d_max >= p.width() {
                    v.push(format!(
                        "dmax={} is not below the image width {}",
                        point.d_max,
                        p.width()
                    ));
                }
                v
            })
            .collect();
        if problems.is_empty() {
            jobs.push(point);
        } else {
            warn!("skipping {point:?}: {}", problems.join("; "));
        }
    }
    if jobs.is_empty() {
        return Err(Error::invalid("no valid configuration in the sweep grid"));
    }
    info!(
        "sweeping {} configurations over {} pairs",
        jobs.len(),
        dataset.len()
    );
    jobs.par_iter()
        .map(|point| {
            let pairs = &scaled
                .iter()
                .find(|(r, _)| *r == point.resolution)
                .unwrap()
                .1;
            evaluate(spec, point, pairs)
        })
        .collect()
}

/// [`run_sweep`] followed by writing the records to `out` as CSV.
pub fn run_sweep_to_csv(
    spec: &SweepSpec,
    dataset: &[StereoPair],
    out: impl AsRef<Path>,
) -> Result<Vec<SweepRecord>> {
    let records = run_sweep(spec, dataset)?;
    let file = std::fs::File::create(out)?;
    write_csv(&records, std::io::BufWriter::new(file))?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixelio::{DisparityMap, GrayImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shifted_pair(w: usize, h: usize, s: usize, seed: u64) -> StereoPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = GrayImage::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap();
        let matching = GrayImage::from_fn(w, h, |x, y| base.get((x + s).min(w - 1), y));
        let gt = DisparityMap::filled(w, h, s as u16);
        StereoPair::new(base, matching, Some(gt)).unwrap()
    }

    fn small_spec() -> SweepSpec {
        SweepSpec {
            d_maxes: vec![16],
            ufs: vec![4],
            ..SweepSpec::default()
        }
    }

    #[test]
    fn full_axis_grid_has_768_points() {
        let spec = SweepSpec {
            cost_fns: CostKind::ALL.to_vec(),
            windows: vec![5, 7],
            d_maxes: vec![64, 128],
            ufs: vec![4, 8, 16, 32],
            lr_modes: LrMode::ALL.to_vec(),
            median: vec![false, true],
            resolutions: vec![
                Resolution::Native,
                Resolution::Target {
                    width: 900,
                    height: 260,
                },
            ],
            ..SweepSpec::default()
        };
        let pts = spec.points();
        assert_eq!(pts.len(), 768);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_uf_is_skipped() {
        let spec = SweepSpec {
            ufs: vec![4, 48],
            ..small_spec()
        };
        let records = run_sweep(&spec, &[shifted_pair(48, 20, 3, 1)]).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].point.uf, 4);
        let none = SweepSpec {
            ufs: vec![48],
            ..small_spec()
        };
        assert!(matches!(
            run_sweep(&none, &[shifted_pair(48, 20, 3, 1)]),
            Err(Error::Validation(_))
        ));
        assert!(run_sweep(&small_spec(), &[]).is_err());
    }

    #[test]
    fn record_carries_model_values() {
        let records = run_sweep(&small_spec(), &[shifted_pair(40, 16, 3, 2)]).unwrap();
        let r = &records[0];
        let cfg = small_spec().config(&r.point, 40, 16);
        let hw = estimate(&cfg).unwrap();
        assert_eq!(r.cycles, 100 + 40 * 16 * 4 - 1);
        assert_eq!(r.runtime_s, hw.seconds);
        assert_eq!((r.cost_width, r.path_width, r.sum_width), (5, 7, 9));
        assert!(r.d1_all.unwrap() < 0.5);
        assert!(r.wall_time_s.is_none());
    }

    #[test]
    fn missing_ground_truth_leaves_d1_empty() {
        let mut pair = shifted_pair(40, 16, 3, 3);
        pair.ground_truth = None;
        let records = run_sweep(&small_spec(), &[pair]).unwrap();
        assert_eq!(records[0].d1_all, None);
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 17);
        assert_eq!(row[8], "");
        assert_eq!(
            &row[..8],
            &["census", "5", "16", "4", "nlr", "on", "40", "16"]
        );
    }

    #[test]
    fn pareto_hand_cases() {
        let base = run_sweep(&small_spec(), &[shifted_pair(40, 16, 3, 4)])
            .unwrap()
            .remove(0);
        let rec = |e: f64, t: f64| SweepRecord {
            d1_all: Some(e),
            runtime_s: t,
            ..base.clone()
        };
        let objs = [Objective::D1All, Objective::Runtime];
        let records = vec![rec(1.0, 2.0), rec(2.0, 1.0), rec(2.0, 2.0)];
        let front = pareto_front(&records, &objs).unwrap();
        assert_eq!(front, vec![rec(1.0, 2.0), rec(2.0, 1.0)]);
        assert_eq!(
            pareto_front(&records[2..], &objs).unwrap(),
            vec![rec(2.0, 2.0)]
        );
        assert!(pareto_front(&records, &objs[..1]).is_err());
        assert!(pareto_front(&[], &objs).is_err());
        assert!(parse_objectives("d1_all,latency").is_err());
        assert_eq!(parse_objectives("d1,runtime,mem_bits").unwrap().len(), 3);
    }
}
