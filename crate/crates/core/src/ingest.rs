//! Empirical joint distributions from delimited text files, and a seeded
//! generator of synthetic joints.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dist::{Alphabet, JointPmf, PmfError};

/// Separator between components of a composite (multi-column) symbol.
pub const TUPLE_SEPARATOR: &str = ",";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("column `{0}` not found")]
    ColumnNotFound(String),
    #[error("no rows left after dropping missing values")]
    EmptyAfterFiltering,
    #[error("at least one S column and one X column are required")]
    NoColumns,
    #[error(transparent)]
    Pmf(#[from] PmfError),
}

/// A column by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    /// Purely numeric tokens become indices unless `prefer_names` and the
    /// header contains the token.
    pub fn parse(token: &str) -> ColumnRef {
        match token.trim().parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(token.trim().to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<usize, IngestError> {
        match self {
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| IngestError::ColumnNotFound(name.clone())),
            ColumnRef::Index(i) => {
                // a header literally named "3" wins over position 3
                if let Some(pos) = header.and_then(|h| h.iter().position(|c| c == &i.to_string())) {
                    return Ok(pos);
                }
                if *i < width {
                    Ok(*i)
                } else {
                    Err(IngestError::ColumnNotFound(i.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Runs of spaces or tabs.
    Whitespace,
    Char(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub delimiter: Delimiter,
    pub has_header: bool,
    pub s_columns: Vec<ColumnRef>,
    pub x_columns: Vec<ColumnRef>,
    pub missing_markers: Vec<String>,
    /// Equal-width bins applied to every numeric selected column with more
    /// distinct values than bins. `None` keeps raw values.
    pub bins: Option<usize>,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, s_columns: Vec<ColumnRef>, x_columns: Vec<ColumnRef>) -> Self {
        DatasetSpec {
            path: path.into(),
            delimiter: Delimiter::Char(b','),
            has_header: true,
            s_columns,
            x_columns,
            missing_markers: vec!["?".into(), "-9".into()],
            bins: None,
        }
    }
}

/// Optional header and data rows.
type Records = (Option<Vec<String>>, Vec<Vec<String>>);

fn read_records(spec: &DatasetSpec) -> Result<Records, IngestError> {
    let file_err = |source| IngestError::File { path: spec.path.clone(), source };
    let file = File::open(&spec.path).map_err(file_err)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    match spec.delimiter {
        Delimiter::Whitespace => {
            for line in BufReader::new(file).lines() {
                let line = line.map_err(file_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                rows.push(line.split_whitespace().map(str::to_string).collect());
            }
        }
        Delimiter::Char(d) => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(d)
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(file);
            for (k, rec) in reader.records().enumerate() {
                let rec = rec.map_err(|e| IngestError::Parse { line: k + 1, reason: e.to_string() })?;
                if rec.iter().all(|f| f.is_empty()) {
                    continue;
                }
                rows.push(rec.iter().map(str::to_string).collect());
            }
        }
    }
    if spec.has_header && !rows.is_empty() {
        let header = rows.remove(0);
        Ok((Some(header), rows))
    } else {
        Ok((None, rows))
    }
}

/// Equal-width bin labels for one numeric column; `None` if any value is not
/// numeric or binning would not reduce the alphabet.
fn bin_column(values: &[&str], bins: usize) -> Option<Vec<String>> {
    let nums: Vec<f64> = values.iter().map(|v| v.parse::<f64>().ok()).collect::<Option<_>>()?;
    let mut distinct: Vec<f64> = nums.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if bins == 0 || distinct.len() <= bins {
        return None;
    }
    let lo = distinct[0];
    let hi = *distinct.last().unwrap();
    let width = (hi - lo) / bins as f64;
    Some(
        nums.iter()
            .map(|&v| {
                let b = (((v - lo) / width).floor() as usize).min(bins - 1);
                format!("bin{b}")
            })
            .collect(),
    )
}

/// Counts `(s, x)` tuples over rows without missing markers in any selected
/// column. Symbols are ordered by first appearance.
pub fn load_joint(spec: &DatasetSpec) -> Result<JointPmf, IngestError> {
    if spec.s_columns.is_empty() || spec.x_columns.is_empty() {
        return Err(IngestError::NoColumns);
    }
    let (header, rows) = read_records(spec)?;
    let width = header.as_ref().map(Vec::len).or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    let resolve = |cols: &[ColumnRef]| -> Result<Vec<usize>, IngestError> {
        cols.iter().map(|c| c.resolve(header.as_deref(), width)).collect()
    };
    let s_idx = resolve(&spec.s_columns)?;
    let x_idx = resolve(&spec.x_columns)?;

    let mut selected: Vec<usize> = s_idx.iter().chain(&x_idx).copied().collect();
    selected.sort_unstable();
    selected.dedup();
    let header_lines = usize::from(header.is_some());
    let mut kept: Vec<&Vec<String>> = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        if let Some(&c) = selected.iter().find(|&&c| c >= row.len()) {
            return Err(IngestError::Parse {
                line: k + 1 + header_lines,
                reason: format!("row has {} fields, column {c} requested", row.len()),
            });
        }
        let missing = selected.iter().any(|&c| {
            let v = row[c].as_str();
            v.is_empty() || spec.missing_markers.iter().any(|m| m == v)
        });
        if !missing {
            kept.push(row);
        }
    }
    if kept.is_empty() {
        return Err(IngestError::EmptyAfterFiltering);
    }

    let mut values: HashMap<usize, Vec<String>> = HashMap::new();
    for &c in &selected {
        let raw: Vec<&str> = kept.iter().map(|r| r[c].as_str()).collect();
        let col = match spec.bins.and_then(|b| bin_column(&raw, b)) {
            Some(binned) => binned,
            None => raw.into_iter().map(str::to_string).collect(),
        };
        values.insert(c, col);
    }
    let symbol = |cols: &[usize], r: usize| -> String {
        cols.iter().map(|c| values[c][r].as_str()).collect::<Vec<_>>().join(TUPLE_SEPARATOR)
    };

    let mut s_labels: Vec<String> = Vec::new();
    let mut x_labels: Vec<String> = Vec::new();
    let mut s_pos: HashMap<String, usize> = HashMap::new();
    let mut x_pos: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(kept.len());
    for r in 0..kept.len() {
        let s = symbol(&s_idx, r);
        let x = symbol(&x_idx, r);
        let si = *s_pos.entry(s.clone()).or_insert_with(|| {
            s_labels.push(s);
            s_labels.len() - 1
        });
        let xi = *x_pos.entry(x.clone()).or_insert_with(|| {
            x_labels.push(x);
            x_labels.len() - 1
        });
        cells.push((si, xi));
    }
    let mut counts = vec![vec![0.0; x_labels.len()]; s_labels.len()];
    for (si, xi) in cells {
        counts[si][xi] += 1.0;
    }
    Ok(JointPmf::from_weights(Alphabet::new(s_labels)?, Alphabet::new(x_labels)?, &counts)?)
}

/// Parameters of [`synth_joint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub s_size: usize,
    pub x_size: usize,
    /// Weight of the block-diagonal coupling, in `[0, 1]`.
    pub rho: f64,
    pub seed: u64,
}

/// `ρ · coupling + (1 − ρ) · p(s) q(x)` with random marginals; the coupling
/// sends each `s` to its own contiguous block of `x` values.
pub fn synth_joint(spec: &SynthSpec) -> JointPmf {
    let ns = spec.s_size.max(1);
    let nx = spec.x_size.max(1);
    let rho = spec.rho.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ps = random_simplex(ns, &mut rng);
    let qx = random_simplex(nx, &mut rng);

    let mut rows = vec![vec![0.0; nx]; ns];
    // owner[x] = the s whose block contains x, when every s gets a block
    if nx >= ns {
        let owner: Vec<usize> = (0..nx).map(|x| x * ns / nx).collect();
        let mut block_mass = vec![0.0; ns];
        for x in 0..nx {
            block_mass[owner[x]] += qx[x];
        }
        for x in 0..nx {
            let s = owner[x];
            rows[s][x] += rho * ps[s] * qx[x] / block_mass[s];
        }
    } else {
        for s in 0..ns {
            rows[s][s * nx / ns] += rho * ps[s];
        }
    }
    for s in 0..ns {
        for x in 0..nx {
            rows[s][x] += (1.0 - rho) * ps[s] * qx[x];
        }
    }
    JointPmf::from_weights(Alphabet::numbered(ns), Alphabet::numbered(nx), &rows).expect("positive synthetic weights")
}

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Random joint with every entry positive, for property checks.
pub fn random_joint(s_size: usize, x_size: usize, rng: &mut impl Rng) -> JointPmf {
    let rows: Vec<Vec<f64>> = (0..s_size).map(|_| (0..x_size).map(|_| rng.gen_range(0.01..1.0)).collect()).collect();
    JointPmf::from_weights(Alphabet::numbered(s_size), Alphabet::numbered(x_size), &rows).expect("positive weights")
}

/// Random joint where roughly `zero_fraction` of the entries are zero; every
/// column keeps at least one positive entry.
pub fn random_sparse_joint(s_size: usize, x_size: usize, zero_fraction: f64, rng: &mut impl Rng) -> JointPmf {
    let mut rows: Vec<Vec<f64>> = (0..s_size)
        .map(|_| {
            (0..x_size)
                .map(|_| if rng.gen_bool(zero_fraction) { 0.0 } else { rng.gen_range(0.01..1.0) })
                .collect()
        })
        .collect();
    for x in 0..x_size {
        if rows.iter().all(|r| r[x] == 0.0) {
            let s = rng.gen_range(0..s_size);
            rows[s][x] = rng.gen_range(0.01..1.0);
        }
    }
    JointPmf::from_weights(Alphabet::numbered(s_size), Alphabet::numbered(x_size), &rows).expect("positive weights")
}

/// Reads whether `path` looks like a whitespace-delimited UCI layout (no
/// commas on the first non-empty line).
pub fn sniff_delimiter(path: &Path) -> Result<Delimiter, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::File { path: path.to_path_buf(), source })?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| IngestError::File { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        return Ok(if line.contains(',') {
            Delimiter::Char(b',')
        } else if line.contains(';') {
            Delimiter::Char(b';')
        } else if line.contains('\t') {
            Delimiter::Char(b'\t')
        } else {
            Delimiter::Whitespace
        });
    }
    Ok(Delimiter::Char(b','))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Axis;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_csv_counts_exactly() {
        let f = write_tmp("age,sex,chol\n40,1,200\n50,0,210\n45,1,200\n60,0,230\n");
        let spec = DatasetSpec::new(f.path(), vec![ColumnRef::parse("sex")], vec![ColumnRef::parse("chol")]);
        let pmf = load_joint(&spec).unwrap();
        assert_eq!(pmf.s_alphabet().labels(), &["1", "0"]);
        assert_eq!(pmf.x_alphabet().labels(), &["200", "210", "230"]);
        assert_eq!(pmf.rows(), vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.25, 0.25]]);
    }

    #[test]
    fn missing_markers_drop_rows() {
        let f = write_tmp("a,b\n1,?\n2,-9\n1,3\n,4\n2,3\n");
        let spec = DatasetSpec::new(f.path(), vec![ColumnRef::parse("a")], vec![ColumnRef::parse("b")]);
        let pmf = load_joint(&spec).unwrap();
        assert_eq!(pmf.x_alphabet().labels(), &["3"]);
        assert_eq!(pmf.rows(), vec![vec![0.5], vec![0.5]]);

        let all_missing = write_tmp("a,b\n1,?\n?,2\n");
        let spec = DatasetSpec::new(all_missing.path(), vec![ColumnRef::parse("a")], vec![ColumnRef::parse("b")]);
        assert!(matches!(load_joint(&spec), Err(IngestError::EmptyAfterFiltering)));
    }

    #[test]
    fn composite_symbols_are_tuples() {
        let f = write_tmp("1 23 0\n12 3 1\n1 23 1\n");
        let spec = DatasetSpec {
            delimiter: Delimiter::Whitespace,
            has_header: false,
            ..DatasetSpec::new(f.path(), vec![ColumnRef::Index(2)], vec![ColumnRef::Index(0), ColumnRef::Index(1)])
        };
        let pmf = load_joint(&spec).unwrap();
        assert_eq!(pmf.x_alphabet().labels(), &["1,23", "12,3"]);
        assert_eq!(pmf.s_alphabet().labels(), &["0", "1"]);
    }

    #[test]
    fn missing_columns_and_files() {
        let f = write_tmp("a,b\n1,2\n");
        let spec = DatasetSpec::new(f.path(), vec![ColumnRef::parse("zzz")], vec![ColumnRef::parse("b")]);
        assert!(matches!(load_joint(&spec), Err(IngestError::ColumnNotFound(c)) if c == "zzz"));
        let spec = DatasetSpec::new(f.path(), vec![ColumnRef::Index(7)], vec![ColumnRef::parse("b")]);
        assert!(matches!(load_joint(&spec), Err(IngestError::ColumnNotFound(_))));
        let spec = DatasetSpec::new("/nonexistent/file.csv", vec![ColumnRef::Index(0)], vec![ColumnRef::Index(1)]);
        assert!(matches!(load_joint(&spec), Err(IngestError::File { .. })));
    }

    #[test]
    fn binning_is_equal_width() {
        let f = write_tmp("s,x\n0,0\n0,1\n1,9\n1,10\n0,5\n");
        let spec = DatasetSpec {
            bins: Some(2),
            ..DatasetSpec::new(f.path(), vec![ColumnRef::parse("s")], vec![ColumnRef::parse("x")])
        };
        let pmf = load_joint(&spec).unwrap();
        assert_eq!(pmf.x_alphabet().labels(), &["bin0", "bin1"]);
        assert_abs_diff_eq!(pmf.x_marginal()[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn synthetic_extremes() {
        let product = synth_joint(&SynthSpec { s_size: 3, x_size: 5, rho: 0.0, seed: 4 });
        assert_abs_diff_eq!(product.mutual_information(), 0.0, epsilon = 1e-9);
        let coupled = synth_joint(&SynthSpec { s_size: 4, x_size: 4, rho: 1.0, seed: 4 });
        assert_abs_diff_eq!(coupled.mutual_information(), coupled.entropy(Axis::S), epsilon = 1e-9);
        let a = synth_joint(&SynthSpec { s_size: 3, x_size: 7, rho: 0.4, seed: 9 });
        let b = synth_joint(&SynthSpec { s_size: 3, x_size: 7, rho: 0.4, seed: 9 });
        assert_eq!(a, b);
        let few_x = synth_joint(&SynthSpec { s_size: 5, x_size: 2, rho: 0.7, seed: 1 });
        assert_abs_diff_eq!(few_x.total(), 1.0, epsilon = 1e-12);
    }
}
