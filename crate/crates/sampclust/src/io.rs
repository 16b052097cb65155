//! Plain-text point files: one point per line, coordinates separated by
//! whitespace and/or commas. Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::path::Path;

use sampclust_core::Dataset;

use crate::error::{Error, Result};

pub fn load_points(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text).map_err(|(line, message)| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses point text; errors carry a 1-based line number (0 for an empty input).
pub fn parse_points(text: &str) -> std::result::Result<Dataset, (usize, String)> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = coords.len();
        for token in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let value: f64 = token
                .parse()
                .map_err(|_| (i + 1, format!("cannot parse {token:?} as a number")))?;
            if !value.is_finite() {
                return Err((i + 1, format!("non-finite value {token:?}")));
            }
            coords.push(value);
        }
        let width = coords.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err((i + 1, format!("expected {d} coordinates, found {width}")));
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| (0, "no data rows".to_string()))?;
    Dataset::from_flat(dim, coords).map_err(|e| (0, e.to_string()))
}

/// Writes one point per line, space separated, in shortest round-trip form.
pub fn write_points(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_points(data)).map_err(|e| Error::io(path, e))
}

pub fn format_points(data: &Dataset) -> String {
    let mut out = String::new();
    for x in data.iter() {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let x = parse_points("0 0\n1 0\n").unwrap();
        assert_eq!((x.len(), x.dim()), (2, 2));
        assert_eq!(x.point(1), &[1.0, 0.0]);
    }

    #[test]
    fn header_and_blank_lines_are_skipped() {
        let x = parse_points("# x y\n\n1,2\n  3 , 4 \n# trailing\n").unwrap();
        assert_eq!(x.as_flat(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn ragged_row_names_its_line() {
        assert_eq!(parse_points("1 2\n3\n").unwrap_err().0, 2);
        assert_eq!(parse_points("# h\n1 2\n\n3 4 5\n").unwrap_err().0, 4);
    }

    #[test]
    fn bad_token_names_its_line() {
        let (line, msg) = parse_points("1 2\n3 x\n").unwrap_err();
        assert_eq!(line, 2);
        assert!(msg.contains("\"x\""));
        assert_eq!(parse_points("nan 1\n").unwrap_err().0, 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(parse_points("").is_err());
        assert!(parse_points("# only a header\n\n").is_err());
    }

    #[test]
    fn format_round_trips() {
        let x = Dataset::from_rows(&[[0.1, -2.5e-7], [1.0 / 3.0, 4.0]]).unwrap();
        assert_eq!(parse_points(&format_points(&x)).unwrap(), x);
    }
}
