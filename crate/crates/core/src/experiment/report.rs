use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Deserialize;

use super::config::{Method, ObservableRequest};
use crate::error::Result;
use crate::scalar::Scalar;

pub const CSV_HEADER: [&str; 16] = [
    "point",
    "param",
    "param_value",
    "observable",
    "sites",
    "method",
    "n_s",
    "replicate",
    "seed",
    "estimate",
    "exact",
    "abs_error",
    "n_e",
    "n_u",
    "acceptance_rate",
    "in_region",
];

/// Outcome of one replicate for one observable.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord<T> {
    pub seed: u64,
    pub estimate: T,
    /// Unique environments and ensemble size; CMCS only.
    pub n_e: Option<usize>,
    pub n_u: Option<usize>,
    pub acceptance_rate: f64,
    /// Whether the observable's support lies inside its local region.
    pub in_region: bool,
}

/// All replicates of one (point, observable, method, N_s) combination.
#[derive(Clone, Debug)]
pub struct SeriesResult<T> {
    pub point: usize,
    pub param: String,
    pub param_value: f64,
    pub observable: ObservableRequest,
    pub method: Method,
    pub n_s: usize,
    pub exact: T,
    pub replicates: Vec<ReplicateRecord<T>>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl<T: Scalar> SeriesResult<T> {
    /// Mean absolute error over replicates.
    pub fn epsilon(&self) -> T {
        let total: T = self.replicates.iter().map(|r| (r.estimate - self.exact).abs()).sum();
        total / T::of(self.replicates.len() as f64)
    }

    pub fn mean_estimate(&self) -> T {
        let total: T = self.replicates.iter().map(|r| r.estimate).sum();
        total / T::of(self.replicates.len() as f64)
    }

    pub fn mean_n_e(&self) -> Option<f64> {
        self.mean_of(|r| r.n_e)
    }

    pub fn mean_n_u(&self) -> Option<f64> {
        self.mean_of(|r| r.n_u)
    }

    fn mean_of(&self, f: impl Fn(&ReplicateRecord<T>) -> Option<usize>) -> Option<f64> {
        let values: Option<Vec<f64>> = self.replicates.iter().map(|r| f(r).map(|v| v as f64)).collect();
        values.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter()))
    }

    pub fn mean_acceptance(&self) -> f64 {
        mean(self.replicates.iter().map(|r| r.acceptance_rate))
    }

    pub fn in_region(&self) -> bool {
        self.replicates.iter().all(|r| r.in_region)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ErrorReport<T> {
    pub series: Vec<SeriesResult<T>>,
}

impl<T: Scalar> ErrorReport<T> {
    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn find(&self, point: usize, observable: ObservableRequest, method: Method, n_s: usize) -> Option<&SeriesResult<T>> {
        self.series
            .iter()
            .find(|s| s.point == point && s.observable == observable && s.method == method && s.n_s == n_s)
    }

    pub fn merge(reports: impl IntoIterator<Item = ErrorReport<T>>) -> Self {
        Self {
            series: reports.into_iter().flat_map(|r| r.series).collect(),
        }
    }

    /// One report per grid point, in point order.
    pub fn split_points(self) -> Vec<ErrorReport<T>> {
        let mut out: Vec<ErrorReport<T>> = Vec::new();
        for s in self.series {
            while out.len() <= s.point {
                out.push(ErrorReport { series: Vec::new() });
            }
            out[s.point].series.push(s);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        let float = |v: f64| format!("{v:.16e}");
        for s in &self.series {
            let exact = s.exact.to_f64_lossless();
            let prefix = [
                s.point.to_string(),
                s.param.clone(),
                float(s.param_value),
                s.observable.name().to_string(),
                s.observable.sites_label(),
                s.method.to_string(),
                s.n_s.to_string(),
            ];
            for (r, rep) in s.replicates.iter().enumerate() {
                let est = rep.estimate.to_f64_lossless();
                let mut row = prefix.to_vec();
                row.extend([
                    r.to_string(),
                    rep.seed.to_string(),
                    float(est),
                    float(exact),
                    float((rep.estimate - s.exact).abs().to_f64_lossless()),
                    rep.n_e.map(|v| v.to_string()).unwrap_or_default(),
                    rep.n_u.map(|v| v.to_string()).unwrap_or_default(),
                    float(rep.acceptance_rate),
                    rep.in_region.to_string(),
                ]);
                w.write_record(&row)?;
            }
            let mut row = prefix.to_vec();
            row.extend([
                "mean".to_string(),
                String::new(),
                float(s.mean_estimate().to_f64_lossless()),
                float(exact),
                float(s.epsilon().to_f64_lossless()),
                s.mean_n_e().map(float).unwrap_or_default(),
                s.mean_n_u().map(float).unwrap_or_default(),
                float(s.mean_acceptance()),
                s.in_region().to_string(),
            ]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(File::create(path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// One parsed CSV line. `replicate` is an index or `"mean"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CsvRow {
    pub point: usize,
    pub param: String,
    pub param_value: f64,
    pub observable: String,
    pub sites: String,
    pub method: String,
    pub n_s: usize,
    pub replicate: String,
    pub seed: Option<u64>,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub n_e: Option<f64>,
    pub n_u: Option<f64>,
    pub acceptance_rate: f64,
    pub in_region: bool,
}

impl CsvRow {
    pub fn is_mean(&self) -> bool {
        self.replicate == "mean"
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    read_csv(File::open(path)?)
}
