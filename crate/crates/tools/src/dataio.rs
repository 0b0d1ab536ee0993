//! The `.seq` text format.
//!
//! ```text
//! SEQ <id> F=<F> N=<N> K=<K, 0 if unknown> CAT=<category>
//! LABELS l_1 ... l_N            (optional)
//! x-coordinates of frame 1      (N numbers)
//! y-coordinates of frame 1
//! ...                           (2F rows in total)
//! ```
//!
//! Tokens are whitespace separated. Numbers are written with 17 significant
//! digits, so a save/load round trip is bit exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scc_core::evaluation::Category;
use scc_core::geometry::{DataMatrix, Partition};
use scc_core::nalgebra::DMatrix;
use scc_core::synth::SequenceRecord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DataError>,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

struct Header {
    id: String,
    frames: usize,
    n: usize,
    k: usize,
    category: Category,
}

fn parse_header(line_no: usize, line: &str) -> Result<Header, DataError> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("SEQ") {
        return Err(parse_err(line_no, "header must start with SEQ"));
    }
    let id = tokens
        .next()
        .ok_or_else(|| parse_err(line_no, "missing sequence id"))?
        .to_string();
    let (mut frames, mut n, mut k, mut category) = (None, None, None, None);
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected KEY=VALUE, found '{tok}'")))?;
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("bad value for {key}: '{value}'")))
        };
        match key {
            "F" => frames = Some(count()?),
            "N" => n = Some(count()?),
            "K" => k = Some(count()?),
            "CAT" => {
                category = Some(
                    value
                        .parse::<Category>()
                        .map_err(|e| parse_err(line_no, e.to_string()))?,
                )
            }
            _ => return Err(parse_err(line_no, format!("unknown header key '{key}'"))),
        }
    }
    let missing = |name: &str| parse_err(line_no, format!("header lacks {name}="));
    let header = Header {
        id,
        frames: frames.ok_or_else(|| missing("F"))?,
        n: n.ok_or_else(|| missing("N"))?,
        k: k.ok_or_else(|| missing("K"))?,
        category: category.ok_or_else(|| missing("CAT"))?,
    };
    if header.frames == 0 || header.n == 0 {
        return Err(parse_err(line_no, "F and N must be positive"));
    }
    Ok(header)
}

/// Parses the contents of a `.seq` file. Blank lines are ignored; reported
/// line numbers are 1-based positions in `text`.
pub fn parse_sequence(text: &str) -> Result<SequenceRecord, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, htext) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = parse_header(hline, htext)?;
    let rows = 2 * header.frames;
    let mut values = Vec::with_capacity(rows * header.n);
    let mut truth = None;
    let mut last_line = hline;
    let mut row = 0;
    for (line_no, line) in lines {
        last_line = line_no;
        if row == 0 && truth.is_none() && line.starts_with("LABELS") {
            let labels = line["LABELS".len()..]
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("bad label '{t}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if labels.len() != header.n {
                return Err(parse_err(
                    line_no,
                    format!("expected {} labels, found {}", header.n, labels.len()),
                ));
            }
            let partition =
                Partition::from_labels(labels).map_err(|e| parse_err(line_no, e.to_string()))?;
            truth = Some(partition);
            continue;
        }
        if row == rows {
            return Err(parse_err(line_no, format!("more than {rows} data rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad number '{tok}'")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value '{tok}'")));
            }
            values.push(v);
        }
        let found = values.len() - before;
        if found != header.n {
            return Err(parse_err(
                line_no,
                format!("expected {} values, found {found}", header.n),
            ));
        }
        row += 1;
    }
    if row != rows {
        return Err(parse_err(
            last_line,
            format!("expected {rows} data rows, found {row}"),
        ));
    }
    let matrix = DMatrix::from_row_slice(rows, header.n, &values);
    let data = DataMatrix::new(matrix).map_err(|e| parse_err(hline, e.to_string()))?;
    SequenceRecord::new(
        header.id,
        header.frames,
        data,
        truth,
        header.category,
        header.k,
    )
    .map_err(|e| parse_err(hline, e.to_string()))
}

pub fn load_sequence(path: &Path) -> Result<SequenceRecord, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sequence(&text).map_err(|e| DataError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Serializes a record. Sequence ids must not contain whitespace.
pub fn format_sequence(record: &SequenceRecord) -> String {
    let m = record.trajectories.matrix();
    let mut out = String::with_capacity(24 * m.len() + 128);
    let _ = writeln!(
        out,
        "SEQ {} F={} N={} K={} CAT={}",
        record.id,
        record.frames,
        m.ncols(),
        record.declared_k,
        record.category
    );
    if let Some(truth) = &record.truth {
        out.push_str("LABELS");
        for l in truth.labels() {
            let _ = write!(out, " {l}");
        }
        out.push('\n');
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", m[(r, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn save_sequence(record: &SequenceRecord, path: &Path) -> Result<(), DataError> {
    fs::write(path, format_sequence(record)).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Wraps a point mixture as a sequence. An odd ambient dimension gets a zero
/// row appended so the data fills whole frames.
pub fn mixture_record(
    id: String,
    data: &DataMatrix,
    truth: Partition,
    category: Category,
) -> SequenceRecord {
    let dim = data.dim();
    let rows = dim + dim % 2;
    let mut m = DMatrix::zeros(rows, data.len());
    m.rows_mut(0, dim).copy_from(data.matrix());
    let k = truth.num_clusters();
    let data = DataMatrix::new(m).expect("padding keeps entries finite");
    SequenceRecord::new(id, rows / 2, data, Some(truth), category, k)
        .expect("shape checked above")
}

/// `*.seq` files directly inside `dir`, sorted by file name.
pub fn list_sequences(dir: &Path) -> Result<Vec<PathBuf>, DataError> {
    let io = |source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "seq") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "SEQ tiny F=2 N=3 K=0 CAT=other\n1 2 3\n4 5 6\n7 8 9\n10 11 12\n";

    fn line_of(err: DataError) -> usize {
        match err {
            DataError::Parse { line, .. } => line,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn minimal_without_labels() {
        let rec = parse_sequence(MINIMAL).unwrap();
        assert_eq!(rec.id, "tiny");
        assert_eq!(rec.frames, 2);
        assert_eq!(rec.trajectories.dim(), 4);
        assert_eq!(rec.trajectories.len(), 3);
        assert_eq!(rec.trajectories.matrix()[(1, 2)], 6.0);
        assert!(rec.truth.is_none());
        assert_eq!(rec.motions(), None);
    }

    #[test]
    fn labels_line() {
        let text = MINIMAL.replace("CAT=other\n", "CAT=other\nLABELS 0 0 1\n");
        let rec = parse_sequence(&text).unwrap();
        let truth = rec.truth.unwrap();
        assert_eq!(truth.labels(), &[0, 0, 1]);
        assert_eq!(truth.num_clusters(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(parse_sequence("SEQ x F=2 N=3 CAT=other\n").unwrap_err()), 1);
        let short = MINIMAL.replace("4 5 6", "4 5");
        assert_eq!(line_of(parse_sequence(&short).unwrap_err()), 3);
        let nan = MINIMAL.replace("8", "NaN");
        assert_eq!(line_of(parse_sequence(&nan).unwrap_err()), 4);
        let missing = "SEQ tiny F=2 N=3 K=0 CAT=other\n1 2 3\n4 5 6\n";
        assert!(parse_sequence(missing).is_err());
        let extra = format!("{MINIMAL}1 1 1\n");
        assert_eq!(line_of(parse_sequence(&extra).unwrap_err()), 6);
        let labels = MINIMAL.replace("CAT=other\n", "CAT=other\nLABELS 0 1\n");
        assert_eq!(line_of(parse_sequence(&labels).unwrap_err()), 2);
        let cat = MINIMAL.replace("CAT=other", "CAT=unknown");
        assert_eq!(line_of(parse_sequence(&cat).unwrap_err()), 1);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let values = [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0];
        let m = DMatrix::from_row_slice(2, 3, &values);
        let rec = SequenceRecord::new(
            "rt".into(),
            1,
            DataMatrix::new(m.clone()).unwrap(),
            Some(Partition::from_labels(vec![1, 0, 1]).unwrap()),
            Category::Traffic,
            2,
        )
        .unwrap();
        let back = parse_sequence(&format_sequence(&rec)).unwrap();
        for (a, b) in back.trajectories.matrix().iter().zip(m.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.truth, rec.truth);
        assert_eq!(back.declared_k, 2);
        assert_eq!(back.category, Category::Traffic);
    }

    #[test]
    fn odd_mixture_is_padded() {
        let data = DataMatrix::new(DMatrix::from_element(3, 4, 1.0)).unwrap();
        let truth = Partition::from_labels(vec![0, 0, 1, 1]).unwrap();
        let rec = mixture_record("m".into(), &data, truth, Category::Synthetic);
        assert_eq!(rec.frames, 2);
        assert_eq!(rec.trajectories.matrix().row(3).amax(), 0.0);
        assert_eq!(rec.declared_k, 2);
    }
}
