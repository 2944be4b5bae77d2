//! Textual profile specs for torus runs.

use averaging::sim_torus::FourierProfile;
use averaging::{Error, Result};

/// Parses `const:<c>`, `sin:<k>`, `cos:<k>`, or the compact aliases
/// `sin<k>` / `cos<k>` (e.g. `sin1`). For dimension > 1 the mode runs along
/// axis 0.
pub fn parse(spec: &str, dim: usize) -> Result<FourierProfile> {
    let spec = spec.trim();
    let (kind, arg) = if let Some((k, a)) = spec.split_once(':') {
        (k, a)
    } else if let Some(rest) = spec.strip_prefix("sin") {
        ("sin", rest)
    } else if let Some(rest) = spec.strip_prefix("cos") {
        ("cos", rest)
    } else {
        return Err(Error::InvalidConfig(format!("unknown profile `{spec}`")));
    };
    match kind {
        "const" => {
            let c: f64 = arg
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad constant `{arg}`")))?;
            Ok(FourierProfile::constant(dim, c))
        }
        "sin" | "cos" => {
            let k: i64 = arg
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad mode number `{arg}`")))?;
            if kind == "sin" {
                FourierProfile::sin_axis(dim, 0, k)
            } else {
                FourierProfile::cos_axis(dim, 0, k)
            }
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown profile kind `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_parse() {
        assert!(parse("sin1", 1).is_ok());
        assert!(parse("sin:2", 1).is_ok());
        assert!(parse("cos3", 1).is_ok());
        assert!(parse("const:1.5", 2).is_ok());
        assert!(parse("sin:1", 2).is_ok());
        assert!(parse("wat", 1).is_err());
        assert!(parse("sin:0", 1).is_err());
    }

    #[test]
    fn alias_matches_explicit() {
        let a = parse("sin1", 1).unwrap();
        let b = parse("sin:1", 1).unwrap();
        for u in [0.0, 0.2, 0.7] {
            assert_eq!(a.evaluate(&[u]), b.evaluate(&[u]));
        }
    }
}
