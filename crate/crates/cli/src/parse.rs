//! Value parsers for command-line arguments.

use hkpath::pathint::Potential;
use hkpath::Complex64;

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` (also `j` for the unit).
pub fn complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read {s:?} as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split before the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

pub fn potential(s: &str) -> Result<Potential, String> {
    s.parse().map_err(|e: hkpath::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(complex("1.5").unwrap(), c(1.5, 0.0));
        assert_eq!(complex("-0.5+1i").unwrap(), c(-0.5, 1.0));
        assert_eq!(complex("-1 - 2.5i").unwrap(), c(-1.0, -2.5));
        assert_eq!(complex("1e-3+2e+1j").unwrap(), c(1e-3, 20.0));
        assert_eq!(complex("3-i").unwrap(), c(3.0, -1.0));
        assert!(complex("").is_err());
        assert!(complex("x+i").is_err());
        assert!(complex("1+2").is_err());
    }

    #[test]
    fn potentials() {
        assert!(potential("const:1").is_ok());
        assert!(potential("harmonic:0.5").is_ok());
        assert!(potential("cubic:1").is_err());
    }
}
