//! Command-line quantities: `10ms`, `1h`, `1e-2/h`.

fn unit_seconds(unit: &str) -> Option<f64> {
    Some(match unit {
        "ms" => 1e-3,
        "s" => 1.0,
        "min" => 60.0,
        "h" => 3600.0,
        _ => return None,
    })
}

fn split_number(s: &str) -> Result<(f64, &str), String> {
    let s = s.trim();
    // the longest prefix that parses as a number
    let end = (1..=s.len())
        .rev()
        .filter(|&i| s.is_char_boundary(i))
        .find(|&i| s[..i].parse::<f64>().is_ok())
        .ok_or_else(|| format!("'{s}' does not start with a number"))?;
    let value: f64 = s[..end].parse().unwrap();
    if !value.is_finite() || value < 0.0 {
        return Err(format!("'{s}' must be a finite non-negative number"));
    }
    Ok((value, s[end..].trim()))
}

/// A duration in seconds.
pub fn parse_duration(s: &str) -> Result<f64, String> {
    let (value, unit) = split_number(s)?;
    let scale = unit_seconds(unit).ok_or_else(|| format!("'{s}': expected a unit ms, s, min or h"))?;
    Ok(value * scale)
}

/// A rate in events per hour; a bare number is taken per hour.
pub fn parse_rate(s: &str) -> Result<f64, String> {
    let (value, unit) = split_number(s)?;
    if unit.is_empty() {
        return Ok(value);
    }
    let unit = unit
        .strip_prefix('/')
        .ok_or_else(|| format!("'{s}': expected a rate such as 1e-2/h"))?;
    let scale = unit_seconds(unit.trim()).ok_or_else(|| format!("'{s}': unknown time unit"))?;
    Ok(value * 3600.0 / scale)
}

/// `NAME=P` with `P` in [0, 1].
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("'{s}': expected NAME=P"))?;
    let p: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("'{value}' is not a probability"));
    }
    Ok((name.trim().to_string(), p))
}
