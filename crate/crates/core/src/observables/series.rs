use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::textio::{parse_header, parse_num};

/// Snapshot matrix, one column per time index.
///
/// Column `j` belongs to time `t_start + j`. Several matrices may share one
/// buffer through different column windows; a Hankel block and its shifted
/// X, Y, Z companions are stored once.
#[derive(Clone, Debug)]
pub struct SeriesMatrix {
    data: Arc<DMatrix<Complex64>>,
    col_offset: usize,
    cols: usize,
    t_start: usize,
    label: String,
}

impl SeriesMatrix {
    pub fn new(values: DMatrix<Complex64>, t_start: usize, label: impl Into<String>) -> Result<Self> {
        let cols = values.ncols();
        Self::from_parts(Arc::new(values), 0, cols, t_start, label.into())
    }

    pub fn from_real(values: &DMatrix<f64>, t_start: usize, label: impl Into<String>) -> Result<Self> {
        Self::new(values.map(|v| Complex64::new(v, 0.0)), t_start, label)
    }

    pub(crate) fn from_parts(
        data: Arc<DMatrix<Complex64>>,
        col_offset: usize,
        cols: usize,
        t_start: usize,
        label: String,
    ) -> Result<Self> {
        if data.nrows() == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if col_offset + cols > data.ncols() {
            return Err(Error::Shape(format!(
                "column window {col_offset}..{} exceeds {} columns",
                col_offset + cols,
                data.ncols()
            )));
        }
        Ok(Self { data, col_offset, cols, t_start, label })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn t_start(&self) -> usize {
        self.t_start
    }

    /// One past the last time index.
    pub fn t_end(&self) -> usize {
        self.t_start + self.cols
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn view(&self) -> DMatrixView<'_, Complex64> {
        self.data.view((0, self.col_offset), (self.data.nrows(), self.cols))
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        self.view().into_owned()
    }

    pub fn get(&self, row: usize, t: usize) -> Complex64 {
        assert!(t >= self.t_start && t < self.t_end(), "time {t} outside {}..{}", self.t_start, self.t_end());
        self.data[(row, self.col_offset + t - self.t_start)]
    }

    /// Columns for times `t_from..t_from + len`.
    pub fn window(&self, t_from: usize, len: usize) -> Result<Self> {
        if t_from < self.t_start || t_from + len > self.t_end() {
            return Err(Error::Shape(format!(
                "window {t_from}..{} outside {}..{}",
                t_from + len,
                self.t_start,
                self.t_end()
            )));
        }
        Self::from_parts(
            Arc::clone(&self.data),
            self.col_offset + t_from - self.t_start,
            len,
            t_from,
            self.label.clone(),
        )
    }

    pub fn is_real(&self) -> bool {
        self.view().iter().all(|z| z.im == 0.0)
    }

    /// Same buffer, columns shifted by `by`, labelled with this matrix's times.
    pub(crate) fn advanced(&self, by: usize) -> Result<Self> {
        Self::from_parts(
            Arc::clone(&self.data),
            self.col_offset + by,
            self.cols,
            self.t_start,
            self.label.clone(),
        )
    }
}

impl PartialEq for SeriesMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.t_start == other.t_start && self.label == other.label && self.view() == other.view()
    }
}

/// Trims every matrix to the time range they all cover.
pub fn align(mats: &[&SeriesMatrix]) -> Result<Vec<SeriesMatrix>> {
    let lo = mats.iter().map(|m| m.t_start()).max().ok_or(Error::EmptyMatrix)?;
    let hi = mats.iter().map(|m| m.t_end()).min().ok_or(Error::EmptyMatrix)?;
    if lo >= hi {
        return Err(Error::Shape(format!("no common time range (latest start {lo}, earliest end {hi})")));
    }
    mats.iter().map(|m| m.window(lo, hi - lo)).collect()
}

/// Writes `# series label=… t_start=… rows=… cols=…`, then one line per
/// column holding `re,im` for every row.
pub fn write_series<W: Write>(series: &SeriesMatrix, mut out: W) -> Result<()> {
    let label: String = series.label.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    writeln!(
        out,
        "# series label={} t_start={} rows={} cols={}",
        if label.is_empty() { "-" } else { &label },
        series.t_start,
        series.nrows(),
        series.ncols()
    )?;
    let mut line = String::new();
    for col in series.view().column_iter() {
        line.clear();
        for (i, z) in col.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e},{:.16e}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_series<R: BufRead>(input: R) -> Result<SeriesMatrix> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty series file".into()))??;
    let fields = parse_header(&header, "# series")?;
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("series header lacks `{key}`")))
    };
    let label = get("label")?.to_string();
    let t_start: usize = parse_num(get("t_start")?, "t_start")?;
    let rows: usize = parse_num(get("rows")?, "rows")?;
    let cols: usize = parse_num(get("cols")?, "cols")?;

    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split(',')
            .map(|tok| parse_num::<f64>(tok.trim(), "series value"))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != 2 * rows {
            return Err(Error::Parse(format!(
                "column {seen} has {} numbers, expected {} (re,im per row)",
                nums.len(),
                2 * rows
            )));
        }
        values.extend(nums.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])));
        seen += 1;
    }
    if seen != cols {
        return Err(Error::Parse(format!("header declares {cols} columns, file has {seen}")));
    }
    SeriesMatrix::new(DMatrix::from_vec(rows, cols, values), t_start, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, t_start: usize) -> SeriesMatrix {
        let m = DMatrix::from_fn(2, n, |i, j| Complex64::new((j + 10 * i) as f64, -(j as f64)));
        SeriesMatrix::new(m, t_start, "ramp").unwrap()
    }

    #[test]
    fn window_and_get_use_time_indices() {
        let s = ramp(10, 5);
        let w = s.window(8, 3).unwrap();
        assert_eq!(w.t_start(), 8);
        assert_eq!(w.get(1, 9), s.get(1, 9));
        assert_eq!(w.view()[(0, 0)], Complex64::new(3.0, -3.0));
        assert!(s.window(4, 2).is_err());
        assert!(s.window(14, 2).is_err());
    }

    #[test]
    fn align_trims_to_overlap() {
        let a = ramp(10, 0);
        let b = ramp(10, 4);
        let out = align(&[&a, &b]).unwrap();
        assert_eq!(out[0].t_start(), 4);
        assert_eq!(out[0].ncols(), 6);
        assert_eq!(out[1].t_start(), 4);
        assert_eq!(out[1].ncols(), 6);
        assert!(align(&[&ramp(3, 0), &ramp(3, 3)]).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let s = ramp(7, 2).with_label("two rows");
        let mut buf = Vec::new();
        write_series(&s, &mut buf).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        assert_eq!(back.label(), "two_rows");
        assert_eq!(back.t_start(), 2);
        assert_eq!(back.view(), s.view());
    }

    #[test]
    fn rejects_wrong_column_count() {
        let text = "# series label=x t_start=0 rows=1 cols=3\n1,0\n2,0\n";
        assert!(matches!(read_series(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(
            SeriesMatrix::new(DMatrix::<Complex64>::zeros(2, 0), 0, "e"),
            Err(Error::EmptyMatrix)
        ));
    }
}
