use crate::config::ConfigError;

/// Parses `lo:hi:log|lin:count` or a comma-separated list.
pub fn parse_grid(flag: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |why: &str| ConfigError::Invalid(format!("--{flag} {s:?}: {why}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("{t:?} is not a number")));
    let out = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, kind, count] = parts[..] else {
            return Err(bad("expected lo:hi:log|lin:count"));
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        if count == 0 {
            return Err(bad("empty grid"));
        }
        let at = |i: usize| if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
        match kind.trim() {
            "lin" => (0..count).map(|i| lo + (hi - lo) * at(i)).collect(),
            "log" => {
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(bad("log grids need positive endpoints"));
                }
                (0..count).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * at(i)).exp()).collect()
            }
            other => return Err(bad(&format!("unknown spacing {other:?}"))),
        }
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() {
        return Err(bad("empty grid"));
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite grid value"));
    }
    Ok(out)
}

pub fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(v >= 1.0) || v.fract() != 0.0 || v > 9.0e15 {
        return Err(format!("{s:?} is not a positive integer"));
    }
    Ok(v as u64)
}

pub fn parse_m_grid(s: &str) -> Result<Vec<u64>, ConfigError> {
    parse_grid("m-grid", s)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if r < 1.0 {
                Err(ConfigError::Invalid(format!("--m-grid {s:?}: mode counts must be at least 1")))
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_and_lin() {
        let g = parse_grid("nb-grid", "0.01:20:log:60").unwrap();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[59] - 20.0).abs() < 1e-12);
        assert_eq!(parse_grid("x", "0:1:lin:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("x", "0.002,0.2,20").unwrap(), vec![0.002, 0.2, 20.0]);
        assert_eq!(parse_m_grid("1e2:1e4:log:3").unwrap(), vec![100, 1000, 10000]);
    }

    #[test]
    fn rejects() {
        for s in ["", "1:2:log", "0:1:log:3", "1:2:cubic:3", "1:2:lin:0", "a,b"] {
            assert!(parse_grid("x", s).is_err(), "{s}");
        }
        assert_eq!(parse_count("1e6").unwrap(), 1_000_000);
        assert!(parse_count("0").is_err() && parse_count("2.5").is_err());
    }
}
