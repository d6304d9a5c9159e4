//! Value-list syntax shared by several subcommands: a single number, a comma
//! list, or an inclusive `lo:hi:step` range.

use anyhow::{bail, Context, Result};

fn number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        bail!("not a finite number: {s:?}");
    }
    Ok(v)
}

pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (number(lo)?, number(hi)?, number(step)?);
            if step <= 0.0 || hi < lo {
                bail!("range {s:?} needs lo <= hi and a positive step");
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            // Round away accumulated binary error so 0.1 steps print cleanly.
            Ok((0..count)
                .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        [single] => single.split(',').map(number).collect(),
        _ => bail!("expected a value, a comma list, or lo:hi:step, got {s:?}"),
    }
}

pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    parse_values(s)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 {
                bail!("expected nonnegative integers in {s:?}");
            }
            Ok(v as usize)
        })
        .collect()
}

fn permille(v: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&v) {
        bail!("rate {v} outside [0, 1]");
    }
    Ok((v * 1000.0).round() as u32)
}

/// Fractions in `[0, 1]` as thousandths.
pub fn parse_permille_values(s: &str) -> Result<Vec<u32>> {
    parse_values(s)?.into_iter().map(permille).collect()
}

/// `lo:hi` fractions as thousandths.
pub fn parse_fraction_pair(s: &str) -> Result<(u32, u32)> {
    let Some((lo, hi)) = s.split_once(':') else {
        bail!("expected lo:hi, got {s:?}");
    };
    let (lo, hi) = (permille(number(lo)?)?, permille(number(hi)?)?);
    if lo > hi {
        bail!("empty interval {s:?}");
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_values("0:0.4:0.05").unwrap().len(), 9);
        assert_eq!(parse_values("0:0.4:0.05").unwrap()[3], 0.15);
        assert_eq!(parse_values("0.1,0.3").unwrap(), vec![0.1, 0.3]);
        assert_eq!(parse_values("2").unwrap(), vec![2.0]);
        assert!(parse_values("1:0:1").is_err());
        assert!(parse_values("a").is_err());
        assert_eq!(parse_counts("0:5:1").unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(parse_counts("0.5").is_err());
        assert_eq!(parse_permille_values("0:0.5:0.1").unwrap(), vec![0, 100, 200, 300, 400, 500]);
        assert_eq!(parse_fraction_pair("0.1:0.5").unwrap(), (100, 500));
        assert!(parse_fraction_pair("0.5:0.1").is_err());
    }
}
