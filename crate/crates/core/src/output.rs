//! Number formatting and CSV framing shared by every writer.

use std::io::Write;

use crate::config::FORMAT_VERSION;
use crate::error::{Error, Result};

/// Formats a number with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// `x` rounded to 12 significant digits, for JSON documents.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt12(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// A CSV writer whose first line is `# format_version=N`.
pub fn csv_writer<W: Write>(mut out: W) -> Result<csv::Writer<W>> {
    writeln!(out, "# format_version={FORMAT_VERSION}")?;
    Ok(csv::Writer::from_writer(out))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(round12(std::f64::consts::PI), 3.14159265359);
        assert_eq!(round12(-1.0 / 3.0), -0.333333333333);
        assert!(round12(f64::NAN).is_nan());
    }

    #[test]
    fn preamble_comes_first() {
        let mut buf = Vec::new();
        {
            let mut w = csv_writer(&mut buf).unwrap();
            w.write_record(["a", "b"]).map_err(csv_err).unwrap();
            w.flush().unwrap();
        }
        assert_eq!(String::from_utf8(buf).unwrap(), "# format_version=1\na,b\n");
    }
}
