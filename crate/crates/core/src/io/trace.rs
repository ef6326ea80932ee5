use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{
    batch_schedule, variance_ci, BatchAccumulator, ChainTrace, ScheduleRule,
};

use super::document::EstimateRecord;

/// Parse one value from a trace line. `None` for blank lines and the optional
/// `value` header on the first non-blank line.
fn parse_line(line: &str, line_no: usize, first: bool) -> Result<Option<f64>> {
    let t = line.trim();
    if t.is_empty() || (first && t.eq_ignore_ascii_case("value")) {
        return Ok(None);
    }
    let v: f64 = t.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("`{t}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("non-finite value `{t}`"),
        });
    }
    Ok(Some(v))
}

fn for_each_value(reader: impl BufRead, mut f: impl FnMut(f64) -> Result<()>) -> Result<usize> {
    let mut first = true;
    let mut count = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(v) = parse_line(&line, i + 1, first)? {
            f(v)?;
            count += 1;
        }
        if !line.trim().is_empty() {
            first = false;
        }
    }
    Ok(count)
}

/// One value per line, optional `value` header. NaN and infinities are rejected.
pub fn parse_trace(reader: impl BufRead) -> Result<ChainTrace> {
    let mut values = Vec::new();
    for_each_value(reader, |v| {
        values.push(v);
        Ok(())
    })?;
    ChainTrace::new(values)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<ChainTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_trace(BufReader::new(file))
}

/// Estimate from a trace file without holding it in memory.
///
/// The first pass validates and counts values and accumulates their sum; the
/// second fills batch sums and the squared deviations used for the ESS.
/// Non-seekable input (a pipe) is first copied to a temporary file.
pub fn stream_estimate(
    mut input: impl Read,
    seekable: Option<File>,
    rule: ScheduleRule,
    level: f64,
) -> Result<EstimateRecord> {
    let mut file = match seekable {
        Some(f) => f,
        None => {
            let mut tmp = tempfile::tempfile()?;
            std::io::copy(&mut input, &mut tmp)?;
            tmp
        }
    };

    file.seek(SeekFrom::Start(0))?;
    let mut sum = 0.0;
    let n = for_each_value(BufReader::new(&file), |v| {
        sum += v;
        Ok(())
    })?;
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    let mean = sum / n as f64;
    let schedule = batch_schedule(n, rule)?;

    file.seek(SeekFrom::Start(0))?;
    let mut acc = BatchAccumulator::new(schedule);
    let mut ss = 0.0;
    for_each_value(BufReader::new(&file), |v| {
        ss += (v - mean) * (v - mean);
        acc.push(v)
    })?;
    let est = acc.finish()?;
    let ci = variance_ci(&est, level)?;
    let sample_variance = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    Ok(EstimateRecord::new(&est, ci, sample_variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Cursor, Write};

    #[test]
    fn plain_values() {
        let t = parse_trace(Cursor::new("1.0\n2.0\n")).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0]);
    }

    #[test]
    fn header_and_scientific() {
        let t = parse_trace(Cursor::new("value\n1e-3\n-2.5E2\n3\n")).unwrap();
        assert_eq!(t.values(), &[1e-3, -250.0, 3.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            parse_trace(Cursor::new("1\n2\nNaN\n")).unwrap_err(),
            Error::Parse {
                line: 3,
                message: "non-finite value `NaN`".into()
            }
        );
        assert!(matches!(
            parse_trace(Cursor::new("value\n1\ninf\n")),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_trace(Cursor::new("1\nabc\n")),
            Err(Error::Parse { line: 2, .. })
        ));
        // a header is only allowed first
        assert!(matches!(
            parse_trace(Cursor::new("1\nvalue\n")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert_eq!(parse_trace(Cursor::new("value\n")), Err(Error::EmptyTrace));
        assert_eq!(parse_trace(Cursor::new("")), Err(Error::EmptyTrace));
    }

    #[test]
    fn streamed_matches_in_memory() {
        let values: Vec<f64> = (0..1003).map(|i| ((i * 7919) % 101) as f64 * 0.1 + 1e6).collect();
        let text: String = values.iter().map(|v| format!("{v}\n")).collect();
        let mut file = tempfile::tempfile().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        let from_file = stream_estimate(std::io::empty(), Some(file), ScheduleRule::SqrtN, 0.95).unwrap();
        let from_pipe =
            stream_estimate(Cursor::new(text.clone()), None, ScheduleRule::SqrtN, 0.95).unwrap();
        assert_eq!(from_file, from_pipe);

        let trace = ChainTrace::new(values).unwrap();
        let s = batch_schedule(trace.len(), ScheduleRule::SqrtN).unwrap();
        let direct = crate::estimators::batch_means_estimate(&trace, &s).unwrap();
        let rel = (from_file.sigma2_hat - direct.sigma2_hat).abs() / direct.sigma2_hat;
        assert!(rel < 1e-9, "{rel}");
    }
}
