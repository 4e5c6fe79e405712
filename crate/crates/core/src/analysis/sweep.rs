//! Parameter sweeps: every combination of axis values evaluated on every
//! dataset, one row per (dataset, config).

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::events::{parse_csv, EventStream, SensorGeometry};
use crate::filters::{required_banks, ClfConfig};
use crate::pipeline::{simulate, PipelineStats};
use crate::synth::SynthSpec;

use super::{compute_metrics, AnalysisError, MetricsReport};

pub const SWEEP_CSV_HEADER: &str =
    "dataset,N_RM,N_CM,s_RM,s_CM,D_th,T_th_us,N_CR,BW_T,precision,recall,accuracy,reads,cancelled,writes,cycles";

/// Values to try per parameter. An empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    /// `[s_RM, s_CM]` pairs.
    pub s: Vec<[u32; 2]>,
    /// `[N_RM, N_CM]` pairs. When empty, bank counts follow the window size.
    pub banks: Vec<[u32; 2]>,
    pub t_th: Vec<u64>,
    pub d_th: Vec<u32>,
    pub n_cr: Vec<u32>,
    pub bw_t: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    /// A labeled CSV file; relative paths resolve against the spec's
    /// directory.
    Csv {
        name: String,
        path: PathBuf,
        geometry: SensorGeometry,
    },
    Synth {
        name: String,
        #[serde(flatten)]
        spec: SynthSpec,
    },
}

impl DatasetSpec {
    pub fn name(&self) -> &str {
        match self {
            DatasetSpec::Csv { name, .. } | DatasetSpec::Synth { name, .. } => name,
        }
    }

    pub fn load(&self, base_dir: &Path) -> Result<EventStream, AnalysisError> {
        let wrap = |e: String| AnalysisError::Dataset {
            name: self.name().to_owned(),
            message: e,
        };
        match self {
            DatasetSpec::Csv { path, geometry, .. } => {
                let p = base_dir.join(path);
                let f = File::open(&p).map_err(|e| wrap(format!("{}: {e}", p.display())))?;
                parse_csv(BufReader::new(f), *geometry).map_err(|e| wrap(e.to_string()))
            }
            DatasetSpec::Synth { spec, .. } => spec.generate().map_err(|e| wrap(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: ClfConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    pub datasets: Vec<DatasetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub config: ClfConfig,
    pub metrics: MetricsReport,
    pub stats: PipelineStats,
}

fn or_base<T: Copy>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

impl SweepSpec {
    /// Configs in row order: `s` outermost, then banks, `T_th`, `D_th`,
    /// `N_CR`, `BW_T`.
    ///
    /// A base with `pipelined` set keeps it only for rows the two-stage
    /// datapath supports (`D_th = 1`, `N_CR = 1`); other rows are modeled
    /// sequentially.
    pub fn configs(&self) -> Result<Vec<ClfConfig>, AnalysisError> {
        let b = self.base;
        let mut out = Vec::new();
        for s in or_base(&self.axes.s, [b.s_rm, b.s_cm]) {
            for banks in or_base(
                &self.axes.banks.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
                None,
            ) {
                for t_th in or_base(&self.axes.t_th, b.params.t_th) {
                    for d_th in or_base(&self.axes.d_th, b.params.d_th) {
                        for n_cr in or_base(&self.axes.n_cr, b.params.n_cr) {
                            for bw_t in or_base(&self.axes.bw_t, b.bw_t) {
                                let mut c = b;
                                c.s_rm = s[0];
                                c.s_cm = s[1];
                                c.params.t_th = t_th;
                                c.params.d_th = d_th;
                                c.params.n_cr = n_cr;
                                c.bw_t = bw_t;
                                match banks {
                                    Some([r, k]) => {
                                        c.n_rm = r;
                                        c.n_cm = k;
                                    }
                                    None => {
                                        let n = required_banks(c.params.window_side());
                                        c.n_rm = n;
                                        c.n_cm = n;
                                    }
                                }
                                c.pipelined = b.pipelined && d_th == 1 && n_cr == 1;
                                c.validate().map_err(|e| AnalysisError::Run {
                                    run: config_id(&c),
                                    message: e.to_string(),
                                })?;
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn config_id(c: &ClfConfig) -> String {
    format!(
        "N={}/{} s={}/{} D_th={} T_th={} N_CR={} BW_T={}",
        c.n_rm, c.n_cm, c.s_rm, c.s_cm, c.params.d_th, c.params.t_th, c.params.n_cr, c.bw_t
    )
}

/// Loads the datasets, then evaluates every (dataset, config) pair on a pool
/// of `jobs` threads (0 = rayon default). Rows come back dataset-major in
/// config order whatever the scheduling.
pub fn run_sweep(
    spec: &SweepSpec,
    base_dir: &Path,
    jobs: usize,
) -> Result<Vec<SweepRow>, AnalysisError> {
    let configs = spec.configs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AnalysisError::InvalidParams(format!("thread pool: {e}")))?;
    pool.install(|| {
        let streams: Vec<EventStream> = spec
            .datasets
            .par_iter()
            .map(|d| d.load(base_dir))
            .collect::<Result<_, _>>()?;
        let jobs: Vec<(usize, &ClfConfig)> = (0..streams.len())
            .flat_map(|d| configs.iter().map(move |c| (d, c)))
            .collect();
        jobs.par_iter()
            .map(|&(d, c)| {
                let name = spec.datasets[d].name();
                let fail = |message: String| AnalysisError::Run {
                    run: format!("dataset {name}, {}", config_id(c)),
                    message,
                };
                let run = simulate(c, &streams[d], false).map_err(|e| fail(e.to_string()))?;
                let metrics = compute_metrics(&run.decisions, streams[d].labels())
                    .map_err(|e| fail(e.to_string()))?;
                Ok(SweepRow {
                    dataset: name.to_owned(),
                    config: *c,
                    metrics,
                    stats: run.stats,
                })
            })
            .collect()
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        let c = &r.config;
        let m = &r.metrics;
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            r.dataset,
            c.n_rm,
            c.n_cm,
            c.s_rm,
            c.s_cm,
            c.params.d_th,
            c.params.t_th,
            c.params.n_cr,
            c.bw_t,
            m.precision,
            m.recall,
            m.accuracy,
            r.stats.reads_issued,
            r.stats.reads_cancelled,
            r.stats.writes,
            r.stats.total_cycles
        )?;
    }
    sink.flush()
}
