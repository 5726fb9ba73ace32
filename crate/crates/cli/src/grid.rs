//! Grid and list arguments: `start:stop:step` (inclusive) or `x,y,z`.

use anyhow::{bail, Context, Result};

/// Parses a grid into ascending order. An empty string is an empty grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad grid '{text}'")))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            bail!("grid '{text}' must be start:stop:step");
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            bail!("grid '{text}' needs finite ends and a positive step");
        }
        if stop < start {
            return Ok(Vec::new());
        }
        // tolerate rounding in (stop − start)/step
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            bail!("grid '{text}' has more than 10^6 points");
        }
        (0..count).map(|k| start + k as f64 * step).collect::<Vec<_>>()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad grid value '{p}'")))
            .collect::<Result<Vec<_>>>()?
    };
    if let Some(bad) = out.iter().find(|x| !x.is_finite()) {
        bail!("grid value {bad} is not finite");
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

pub fn parse_lengths(text: &str) -> Result<Vec<usize>> {
    let mut out = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let n: usize = p.trim().parse().with_context(|| format!("bad length '{p}'"))?;
            if n == 0 {
                bail!("lengths must be positive");
            }
            Ok(n)
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_the_end() {
        let g = parse_grid("-3:3:0.25").unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], -3.0);
        assert_eq!(g[24], 3.0);
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
    }

    #[test]
    fn lists_are_sorted() {
        assert_eq!(parse_grid("0.5, -1, 0.5").unwrap(), vec![-1.0, 0.5]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:0:0.1").unwrap().is_empty());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("nan").is_err());
        assert_eq!(parse_lengths("256,64").unwrap(), vec![64, 256]);
        assert!(parse_lengths("0").is_err());
    }
}
