use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::coefficients::{CoefficientKind, CoefficientTable};
use super::partition::Partition;
use super::FrameParams;
use crate::error::{Error, Result};

fn header(params: &FrameParams, extra: &str) -> String {
    format!(
        "# {{\"s\": {}, \"B\": {}, \"eta\": {}, \"J0\": {}{}}}",
        params.s(),
        params.b(),
        params.eta(),
        params.j0(),
        extra
    )
}

/// Columns `j,q,K,re,im`; `K` is empty for exact coefficients.
pub fn write_coefficients_csv<W: Write>(
    mut out: W,
    params: &FrameParams,
    table: &CoefficientTable,
) -> Result<()> {
    let k = table.cutoff().map_or(String::new(), |k| k.to_string());
    let extra = format!(
        ", \"kind\": \"{}\", \"K\": {}",
        table.kind().as_str(),
        table.cutoff().map_or("null".to_string(), |k| k.to_string())
    );
    writeln!(out, "{}", header(params, &extra))?;
    writeln!(out, "j,q,K,re,im")?;
    for (j, q, b) in table.iter() {
        writeln!(out, "{j},{q},{k},{},{}", b.re, b.im)?;
    }
    Ok(())
}

fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("\"{key}\": ");
    let start = line.find(&pat)? + pat.len();
    let rest = &line[start..];
    let end = rest.find([',', '}']).unwrap_or(rest.len());
    Some(rest[..end].trim().trim_matches('"'))
}

/// Inverse of [`write_coefficients_csv`]. Levels must be contiguous and each
/// level's positions listed in order.
pub fn read_coefficients_csv<R: BufRead>(input: R) -> Result<CoefficientTable> {
    let bad = |msg: &str| Error::Io(format!("coefficient csv: {msg}"));
    let mut lines = input.lines();
    let head = lines.next().ok_or_else(|| bad("empty file"))??;
    let kind = header_field(&head, "kind")
        .and_then(CoefficientKind::parse)
        .ok_or_else(|| bad("header lacks a valid kind"))?;
    let cutoff = match header_field(&head, "K") {
        Some("null") | None => None,
        Some(v) => Some(v.parse::<usize>().map_err(|_| bad("bad K in header"))?),
    };
    let columns = lines.next().ok_or_else(|| bad("missing column line"))??;
    if columns.trim() != "j,q,K,re,im" {
        return Err(bad("unexpected columns"));
    }
    let mut j_min = None;
    let mut levels: Vec<Vec<Complex64>> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let j: i32 = f[0].parse().map_err(|_| bad("bad j"))?;
        let q: usize = f[1].parse().map_err(|_| bad("bad q"))?;
        let re: f64 = f[3].parse().map_err(|_| bad("bad re"))?;
        let im: f64 = f[4].parse().map_err(|_| bad("bad im"))?;
        let j0 = *j_min.get_or_insert(j);
        let idx = (j - j0) as usize;
        if j < j0 || idx > levels.len() {
            return Err(bad("levels out of order"));
        }
        if idx == levels.len() {
            levels.push(Vec::new());
        }
        if idx + 1 != levels.len() || q != levels[idx].len() + 1 {
            return Err(bad("positions out of order"));
        }
        levels[idx].push(Complex64::new(re, im));
    }
    Ok(CoefficientTable::new(
        kind,
        cutoff,
        j_min.unwrap_or(0),
        levels,
    ))
}

/// Columns `j,q,lambda,center`.
pub fn write_partition_csv<W: Write>(
    mut out: W,
    params: &FrameParams,
    partition: &Partition,
) -> Result<()> {
    writeln!(
        out,
        "{}",
        header(params, &format!(", \"J_max\": {}", partition.j_max()))
    )?;
    writeln!(out, "j,q,lambda,center")?;
    for level in partition.levels() {
        for q in 1..=level.count {
            writeln!(
                out,
                "{},{},{},{}",
                level.j,
                q,
                level.lambda(),
                level.center(q)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_fourier::GridFunction;
    use crate::frame::{analyze, build_partition};

    #[test]
    fn coefficient_round_trip() {
        let p = FrameParams::new(3, 1.4, 0.1, -6).unwrap();
        let part = build_partition(&p, 4).unwrap();
        let f = GridFunction::from_real_fn(128, |t| {
            1.0 + 0.4 * (t - 0.3).cos() + 0.1 * (5.0 * t).sin()
        });
        for cutoff in [None, Some(3)] {
            let t = analyze(&p, &part, &f, 4, cutoff).unwrap();
            let mut buf = Vec::new();
            write_coefficients_csv(&mut buf, &p, &t).unwrap();
            let back = read_coefficients_csv(buf.as_slice()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn partition_csv_shape() {
        let p = FrameParams::new(3, 2.0, 0.5, -3).unwrap();
        let part = build_partition(&p, 3).unwrap();
        let mut buf = Vec::new();
        write_partition_csv(&mut buf, &p, &part).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# {\"s\": 3, \"B\": 2, \"eta\": 0.5, \"J0\": -3"));
        assert_eq!(text.lines().count(), 2 + part.total_atoms());
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_coefficients_csv("".as_bytes()).is_err());
        let text = "# {\"kind\": \"exact\", \"K\": null}\nj,q,K,re,im\n1,2,,0,0\n";
        assert!(read_coefficients_csv(text.as_bytes()).is_err());
    }
}
