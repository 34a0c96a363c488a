//! Plain-text kernel files and certificate blocks.
//!
//! A kernel file holds `n` on its first line followed by `n` rows of `n`
//! decimals separated by whitespace or commas. Blank lines and `#` comments
//! are skipped. A certificate is a block of `key = value` lines:
//!
//! ```text
//! K = 0, 1
//! m = 1
//! delta = 0.3
//! nu = 0.6666666666666666, 0.3333333333333333
//! delta_prime = 1
//! ```

use std::fmt::Write as _;

use super::{FiniteKernel, SmallSetCertificate};
use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_list<T: std::str::FromStr>(line_no: usize, value: &str) -> Result<Vec<T>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| Error::Config {
                line: line_no,
                message: format!("cannot parse {s:?}"),
            })
        })
        .collect()
}

pub fn parse_kernel(text: &str) -> Result<FiniteKernel> {
    let mut lines = content_lines(text);
    let (first, header) = lines.next().ok_or(Error::Config {
        line: 1,
        message: "empty kernel file".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Config {
        line: first,
        message: format!("expected the state count, got {header:?}"),
    })?;
    let mut rows = Vec::with_capacity(n);
    for (line_no, line) in lines {
        let row: Vec<f64> = parse_list(line_no, line)?;
        if row.len() != n {
            return Err(Error::Config {
                line: line_no,
                message: format!("expected {n} entries, got {}", row.len()),
            });
        }
        if rows.len() == n {
            return Err(Error::Config {
                line: line_no,
                message: format!("more than {n} rows"),
            });
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Config {
            line: first,
            message: format!("expected {n} rows, got {}", rows.len()),
        });
    }
    FiniteKernel::from_rows(&rows)
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn format_certificate(cert: &SmallSetCertificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "K = {}", join(&cert.set));
    let _ = writeln!(out, "m = {}", cert.m);
    let _ = writeln!(out, "delta = {}", cert.delta);
    let _ = writeln!(out, "nu = {}", join(&cert.nu));
    if let Some(dp) = cert.delta_prime {
        let _ = writeln!(out, "delta_prime = {dp}");
    }
    out
}

pub fn parse_certificate(text: &str) -> Result<SmallSetCertificate> {
    let mut set = None;
    let mut m = None;
    let mut delta = None;
    let mut nu = None;
    let mut delta_prime = None;
    for (line_no, line) in content_lines(text) {
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            });
        };
        let value = value.trim();
        let scalar = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Config {
                line: line_no,
                message: format!("cannot parse {v:?}"),
            })
        };
        match key.trim() {
            "K" => set = Some(parse_list(line_no, value)?),
            "m" => {
                m = Some(value.parse().map_err(|_| Error::Config {
                    line: line_no,
                    message: format!("cannot parse {value:?}"),
                })?)
            }
            "delta" => delta = Some(scalar(value)?),
            "nu" => nu = Some(parse_list(line_no, value)?),
            "delta_prime" => delta_prime = Some(scalar(value)?),
            other => {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key {other:?}"),
                })
            }
        }
    }
    let missing = |k: &str| Error::Parse(format!("certificate is missing {k}"));
    Ok(SmallSetCertificate {
        set: set.ok_or_else(|| missing("K"))?,
        m: m.ok_or_else(|| missing("m"))?,
        delta: delta.ok_or_else(|| missing("delta"))?,
        nu: nu.ok_or_else(|| missing("nu"))?,
        delta_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doeblin::doeblin_certificate;

    #[test]
    fn kernel_file_round_trip() {
        let k = parse_kernel("# example\n2\n0.9 0.1\n0.2, 0.8\n").unwrap();
        assert_eq!(k.get(1, 0), 0.2);
        assert!(matches!(
            parse_kernel("2\n0.9 0.1\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_kernel("2\n0.9 0.1\n0.2\n"),
            Err(Error::Config { line: 3, .. })
        ));
        assert!(matches!(
            parse_kernel("two\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(parse_kernel("2\n0.9 0.2\n0.2 0.8\n").is_err());
    }

    #[test]
    fn certificate_round_trip() {
        let k = parse_kernel("2\n0.9 0.1\n0.2 0.8\n").unwrap();
        let cert = doeblin_certificate(&k, &[0, 1]).unwrap().unwrap();
        let text = format_certificate(&cert);
        assert!(text.contains("delta = 0.3"));
        assert_eq!(parse_certificate(&text).unwrap(), cert);
        assert!(parse_certificate("K = 0\nm = 1\n").is_err());
        assert!(matches!(
            parse_certificate("K = 0\nbogus\n"),
            Err(Error::Config { line: 2, .. })
        ));
    }
}
