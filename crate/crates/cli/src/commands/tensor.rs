use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor_fsd::tensor::io::{read_tns3, write_tns3};
use tensor_fsd::Tensor3;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorFormat {
    Tns3,
    Json,
    Csv,
}

impl TensorFormat {
    /// `.tns` for TNS3, `.json`, or `.csv` with `i,j,k,value` rows.
    pub fn from_path(path: &Path) -> CliResult<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tns") | Some("tns3") => Ok(TensorFormat::Tns3),
            Some("json") => Ok(TensorFormat::Json),
            Some("csv") => Ok(TensorFormat::Csv),
            _ => Err(CliError::config(format!("unknown tensor format for {}", path.display()))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorJson {
    n1: usize,
    n2: usize,
    n: usize,
    data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorSummary {
    pub n1: usize,
    pub n2: usize,
    pub n: usize,
    pub fro_norm: f64,
    pub max_abs: f64,
    pub nonzero_slices: usize,
}

pub fn summarize(t: &Tensor3) -> TensorSummary {
    let (n1, n2, n) = t.dims();
    TensorSummary { n1, n2, n, fro_norm: t.fro_norm(), max_abs: t.max_abs(), nonzero_slices: t.nonzero_slices().len() }
}

fn format_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Core(tensor_fsd::Error::Format(format!("{}: {msg}", path.display())))
}

fn parse_csv(path: &Path, text: &str) -> CliResult<Tensor3> {
    let mut entries = Vec::new();
    let (mut n1, mut n2, mut n) = (0, 0, 0);
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(format_err(path, format!("line {}: expected i,j,k,value", line_no + 1)));
        }
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|e| format_err(path, format!("line {}: {e}", line_no + 1)));
        let (i, j, k) = (idx(f[0])?, idx(f[1])?, idx(f[2])?);
        let v: f64 = f[3].trim().parse().map_err(|e| format_err(path, format!("line {}: {e}", line_no + 1)))?;
        n1 = n1.max(i + 1);
        n2 = n2.max(j + 1);
        n = n.max(k + 1);
        entries.push((i, j, k, v));
    }
    let mut t = Tensor3::zeros(n1, n2, n);
    for (i, j, k, v) in entries {
        t.set(i, j, k, v);
    }
    Ok(t)
}

fn render_csv(t: &Tensor3) -> String {
    let mut s = String::from("i,j,k,value\n");
    let (n1, n2, n) = t.dims();
    for k in 0..n {
        for j in 0..n2 {
            for i in 0..n1 {
                writeln!(s, "{i},{j},{k},{}", t.get(i, j, k)).unwrap();
            }
        }
    }
    s
}

pub fn read_tensor(path: &Path) -> CliResult<Tensor3> {
    let fmt = TensorFormat::from_path(path)?;
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    match fmt {
        TensorFormat::Tns3 => Ok(read_tns3(bytes.as_slice()).map_err(|e| format_err(path, e))?),
        TensorFormat::Json => {
            let j: TensorJson = serde_json::from_slice(&bytes).map_err(|e| format_err(path, e))?;
            Ok(Tensor3::from_vec(j.n1, j.n2, j.n, j.data)?)
        }
        TensorFormat::Csv => parse_csv(path, &String::from_utf8_lossy(&bytes)),
    }
}

pub fn write_tensor(t: &Tensor3, path: &Path) -> CliResult<()> {
    let bytes = match TensorFormat::from_path(path)? {
        TensorFormat::Tns3 => {
            let mut buf = Vec::new();
            write_tns3(t, &mut buf)?;
            buf
        }
        TensorFormat::Json => {
            let (n1, n2, n) = t.dims();
            let j = TensorJson { n1, n2, n, data: t.data().to_vec() };
            serde_json::to_vec(&j).map_err(tensor_fsd::Error::from)?
        }
        TensorFormat::Csv => render_csv(t).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn inspect(path: &Path) -> CliResult<TensorSummary> {
    Ok(summarize(&read_tensor(path)?))
}

pub fn convert(input: &Path, output: &Path) -> CliResult<()> {
    write_tensor(&read_tensor(input)?, output)
}
