//! Analytical hardware cost model: pipeline cycles, data widths and on-chip memory.
//!
//! Every stage of the hardware pipeline is a loop over `height × width × d_max/uf`
//! iterations pipelined at initiation interval `ii`, so one frame costs
//! `il + ii × (height × width × d_max/uf − 1)` cycles. Data widths are derived
//! from closed-form bounds on the largest value each stage can produce. Memory is
//! counted in bits per buffer under two layouts: array partitioning (one
//! replicated buffer per parallel lane) and data packing (one buffer of
//! `uf`-element words). An optional block-RAM quantization models 18-bit wide,
//! 1024-deep blocks.

use crate::aggregate::AggregationParams;
use crate::cost::{CostFunction, CostKind};
use crate::error::{Error, Result};
use crate::refine::{LrMode, RefinementConfig};

/// Width of one block RAM in the quantized memory model.
pub const BRAM_WIDTH_BITS: u64 = 18;
/// Depth of one block RAM in the quantized memory model.
pub const BRAM_DEPTH: u64 = 1024;

/// Smallest number of bits that can hold every value in `0..=max_value`.
/// Zero-range values still take one bit.
pub fn bits_for(max_value: u64) -> u32 {
    (64 - max_value.leading_zeros()).max(1)
}

/// Largest matching cost a cost function can produce for a `window × window` window.
pub fn cost_max(kind: CostKind, window: usize) -> u32 {
    let area = (window * window) as u32;
    match kind {
        CostKind::Census | CostKind::Rank => area.saturating_sub(1),
        CostKind::Sad => 255 * area,
        CostKind::Zsad => 510 * area,
    }
}

pub fn cost_bit_width(cost_fn: &CostFunction) -> u32 {
    bits_for(cost_max(cost_fn.kind, cost_fn.window) as u64)
}

/// Bit widths of the three value streams of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitWidths {
    pub cost: u32,
    pub path: u32,
    pub sum: u32,
}

/// Cost, path-cost and summed-cost widths. A path cost never exceeds
/// `cost_max + p2`, and the sum of four paths never exceeds four times that.
pub fn bit_widths(cost_fn: &CostFunction, params: &AggregationParams) -> BitWidths {
    let cmax = cost_max(cost_fn.kind, cost_fn.window) as u64;
    let path_max = cmax + params.p2 as u64;
    BitWidths {
        cost: bits_for(cmax),
        path: bits_for(path_max),
        sum: bits_for(4 * path_max),
    }
}

/// Full algorithmic and hardware configuration of one pipeline instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub cost_fn: CostFunction,
    pub d_max: usize,
    /// Unroll factor in the disparity dimension; must divide `d_max`.
    pub uf: usize,
    pub width: usize,
    pub height: usize,
    pub params: AggregationParams,
    pub refine: RefinementConfig,
    pub freq_mhz: f64,
    /// Iteration latency in cycles.
    pub il: u64,
    /// Initiation interval in cycles.
    pub ii: u64,
    /// Extra cycles charged to L-R check configurations. `None` selects the
    /// built-in lag model, see [`lr_overhead_cycles`].
    pub lr_overhead: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cost_fn: CostFunction {
                kind: CostKind::Census,
                window: 5,
            },
            d_max: 64,
            uf: 16,
            width: 1242,
            height: 374,
            params: AggregationParams { p1: 7, p2: 86 },
            refine: RefinementConfig::default(),
            freq_mhz: 300.0,
            il: 100,
            ii: 1,
            lr_overhead: None,
        }
    }
}

impl PipelineConfig {
    /// Default configuration for a cost function, with penalties scaled to its
    /// cost range.
    pub fn for_cost(cost_fn: CostFunction) -> Self {
        Self {
            params: AggregationParams::default_for(&cost_fn),
            cost_fn,
            ..Self::default()
        }
    }

    /// Collects every violated constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        v.extend(self.cost_fn.violation());
        if self.d_max == 0 {
            v.push("dmax must be at least 1".into());
        }
        if self.uf == 0 {
            v.push("uf must be at least 1".into());
        } else if !self.d_max.is_multiple_of(self.uf) {
            v.push(format!(
                "uf={} does not divide dmax={}",
                self.uf, self.d_max
            ));
        }
        if self.width == 0 || self.height == 0 {
            v.push(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            ));
        }
        if self.params.p1 == 0 || self.params.p2 <= self.params.p1 {
            v.push(format!(
                "penalties must satisfy 0 < p1 < p2, got p1={} p2={}",
                self.params.p1, self.params.p2
            ));
        }
        v.extend(self.refine.violations());
        if !(self.freq_mhz.is_finite() && self.freq_mhz > 0.0) {
            v.push(format!("freq_mhz must be positive, got {}", self.freq_mhz));
        }
        if self.ii == 0 {
            v.push("ii must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn widths(&self) -> BitWidths {
        bit_widths(&self.cost_fn, &self.params)
    }

    /// Number of pipeline iterations per pixel, `d_max / uf`.
    pub fn iterations_per_pixel(&self) -> u64 {
        (self.d_max / self.uf) as u64
    }
}

/// Cycle count split into the per-module pipeline term and the L-R check lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleEstimate {
    pub pipeline: u64,
    pub lr_overhead: u64,
}

impl CycleEstimate {
    pub fn total(&self) -> u64 {
        self.pipeline + self.lr_overhead
    }
}

/// `il + ii × (height × width × d_max/uf − 1)`.
pub fn pipeline_cycles(il: u64, ii: u64, height: u64, width: u64, d_max: u64, uf: u64) -> u64 {
    il + ii * (height * width * (d_max / uf) - 1)
}

/// Default lag of L-R configurations: the match-side computation trails the
/// base side by one image row plus `d_max` pixels.
pub fn lr_overhead_cycles(config: &PipelineConfig) -> u64 {
    match config.refine.lr_mode {
        LrMode::Nlr => 0,
        LrMode::Lr1 | LrMode::Lr2 => config.lr_overhead.unwrap_or_else(|| {
            config.ii * (config.width + config.d_max) as u64 * config.iterations_per_pixel()
        }),
    }
}

pub fn estimate_cycles(config: &PipelineConfig) -> Result<CycleEstimate> {
    config.validate()?;
    Ok(CycleEstimate {
        pipeline: pipeline_cycles(
            config.il,
            config.ii,
            config.height as u64,
            config.width as u64,
            config.d_max as u64,
            config.uf as u64,
        ),
        lr_overhead: lr_overhead_cycles(config),
    })
}

/// One on-chip buffer of the memory model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBuffer {
    pub name: String,
    /// Number of elements.
    pub depth: u64,
    pub element_bits: u32,
    /// Elements accessed in parallel each cycle (`uf` for disparity-parallel
    /// buffers, 1 otherwise).
    pub lanes: u64,
}

impl MemoryBuffer {
    fn new(name: impl Into<String>, depth: u64, element_bits: u32, lanes: u64) -> Self {
        Self {
            name: name.into(),
            depth,
            element_bits,
            lanes,
        }
    }

    /// Array partitioning: each lane is its own buffer of full depth.
    pub fn partitioned_bits(&self) -> u64 {
        self.lanes * self.depth * self.element_bits as u64
    }

    /// Data packing: one buffer of `depth / lanes` words, each `lanes` elements wide.
    pub fn packed_bits(&self) -> u64 {
        self.depth.div_ceil(self.lanes) * self.lanes * self.element_bits as u64
    }
}

/// Block-RAM counts of one buffer under both layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BramBlocks {
    pub partitioned: u64,
    pub packed: u64,
}

impl BramBlocks {
    pub fn ratio(&self) -> f64 {
        self.packed as f64 / self.partitioned as f64
    }
}

/// Quantizes a buffer of `depth` elements accessed `lanes` at a time onto
/// 18-bit × 1024 blocks. Partitioned: each lane holds `depth / lanes` elements
/// in its own blocks. Packed: one array of `depth / lanes` words of
/// `lanes × element_bits` bits.
pub fn bram_blocks(depth: u64, element_bits: u32, lanes: u64) -> BramBlocks {
    let lane_depth = depth.div_ceil(lanes);
    let rows = lane_depth.div_ceil(BRAM_DEPTH);
    let ew = element_bits as u64;
    BramBlocks {
        partitioned: lanes * ew.div_ceil(BRAM_WIDTH_BITS) * rows,
        packed: (lanes * ew).div_ceil(BRAM_WIDTH_BITS) * rows,
    }
}

/// Itemized on-chip memory of a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryEstimate {
    pub buffers: Vec<MemoryBuffer>,
    pub partitioned_bits: u64,
    pub packed_bits: u64,
    /// Block counts of one path-cost row buffer.
    pub path_buffer_blocks: BramBlocks,
}

pub fn estimate_memory(config: &PipelineConfig) -> Result<MemoryEstimate> {
    config.validate()?;
    let widths = config.widths();
    let w = config.cost_fn.window as u64;
    let width = config.width as u64;
    let d = config.d_max as u64;
    let uf = config.uf as u64;
    let lr2 = config.refine.lr_mode == LrMode::Lr2;

    let mut buffers = Vec::new();
    for image in ["base", "match"] {
        buffers.push(MemoryBuffer::new(
            format!("cost.line_buffer.{image}"),
            (w - 1) * width,
            8,
            1,
        ));
    }
    match config.cost_fn.kind {
        CostKind::Sad | CostKind::Zsad => {
            buffers.push(MemoryBuffer::new("cost.window.base", w * w, 8, 1));
            buffers.push(MemoryBuffer::new(
                "cost.window.match",
                w * (d + w - 1),
                8,
                1,
            ));
            if lr2 {
                buffers.push(MemoryBuffer::new(
                    "cost.window.base_wide",
                    w * (d + w - 1),
                    8,
                    1,
                ));
            }
        }
        CostKind::Census | CostKind::Rank => {
            let tw = transform_bits(&config.cost_fn);
            buffers.push(MemoryBuffer::new("cost.window.base", w * w, 8, 1));
            buffers.push(MemoryBuffer::new("cost.window.match", w * w, 8, 1));
            buffers.push(MemoryBuffer::new("cost.transform_fifo.match", d, tw, 1));
            if lr2 {
                buffers.push(MemoryBuffer::new("cost.transform_fifo.base", d, tw, 1));
            }
        }
    }

    let copies: &[&str] = if lr2 { &["base", "match"] } else { &["base"] };
    for copy in copies {
        for dir in ["45", "90", "135"] {
            buffers.push(MemoryBuffer::new(
                format!("agg.{copy}.path_row.{dir}"),
                width * d,
                widths.path,
                uf,
            ));
        }
        buffers.push(MemoryBuffer::new(
            format!("agg.{copy}.interleave_fifos"),
            4 * width.div_ceil(2) * d,
            widths.sum,
            uf,
        ));
    }

    if config.refine.lr_mode == LrMode::Lr1 {
        buffers.push(MemoryBuffer::new(
            "refine.reuse_registers",
            d,
            widths.sum,
            1,
        ));
    }
    if config.refine.median {
        let mw = config.refine.median_window as u64;
        buffers.push(MemoryBuffer::new(
            "refine.median_line_buffer",
            (mw - 1) * width,
            bits_for(d),
            1,
        ));
    }

    let partitioned_bits = buffers.iter().map(MemoryBuffer::partitioned_bits).sum();
    let packed_bits = buffers.iter().map(MemoryBuffer::packed_bits).sum();
    Ok(MemoryEstimate {
        buffers,
        partitioned_bits,
        packed_bits,
        path_buffer_blocks: bram_blocks(width * d, widths.path, uf),
    })
}

/// Bits of one census string or rank value.
pub fn transform_bits(cost_fn: &CostFunction) -> u32 {
    let area = (cost_fn.window * cost_fn.window) as u64;
    match cost_fn.kind {
        CostKind::Census => (area - 1) as u32,
        CostKind::Rank => bits_for(area - 1),
        CostKind::Sad | CostKind::Zsad => 8,
    }
}

/// Combined latency, width and memory estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct HwEstimate {
    pub cycles: CycleEstimate,
    pub seconds: f64,
    pub fps: f64,
    pub mem_bits_partitioned: u64,
    pub mem_bits_packed: u64,
    pub widths: BitWidths,
    pub path_buffer_blocks: BramBlocks,
}

impl HwEstimate {
    /// Whole frames per second.
    pub fn fps_floor(&self) -> u64 {
        self.fps.floor() as u64
    }
}

pub fn estimate(config: &PipelineConfig) -> Result<HwEstimate> {
    let cycles = estimate_cycles(config)?;
    let memory = estimate_memory(config)?;
    let seconds = cycles.total() as f64 / (config.freq_mhz * 1e6);
    Ok(HwEstimate {
        cycles,
        seconds,
        fps: 1.0 / seconds,
        mem_bits_partitioned: memory.partitioned_bits,
        mem_bits_packed: memory.packed_bits,
        widths: config.widths(),
        path_buffer_blocks: memory.path_buffer_blocks,
    })
}
