//! `key = value` configuration files and the small list syntaxes accepted
//! on the command line.

use std::fs;
use std::path::Path;

use pspin_core::meanfield::Magnetization;

/// Keys that configure the program rather than one subcommand, with the
/// environment variable that takes precedence over the file.
const GLOBAL_KEYS: [(&str, &str); 2] = [("threads", "PSPIN_THREADS"), ("out-dir", "PSPIN_OUT_DIR")];

/// Parse a configuration file. Blank lines and lines starting with `#` are
/// ignored; keys are long flag names with or without the leading dashes.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value, got {line:?}", number + 1));
        };
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", number + 1));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    std::env::var("PSPIN_CONFIG").ok()
}

/// Splice the entries of the configuration file (if any) into `args` right
/// after the subcommand name, ahead of the user's own flags. Every argument
/// overrides earlier occurrences of itself, so flags win over the file.
/// The subcommand itself may come from a `command` key.
pub fn merge_config(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config file {path}: {e}"))?;
    let entries = parse_config(&text)?;
    let mut injected = Vec::new();
    let mut command = None;
    for (key, value) in entries {
        if key == "command" || key == "subcommand" {
            command = Some(value);
            continue;
        }
        if let Some((_, var)) = GLOBAL_KEYS.iter().find(|(k, _)| *k == key) {
            if std::env::var_os(var).is_some() {
                continue;
            }
        }
        match value.as_str() {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value);
            }
        }
    }
    let position = args.iter().position(|a| subcommands.contains(&a.as_str()));
    let mut out = args;
    let at = match (position, command) {
        (Some(i), _) => i + 1,
        // Everything on the command line then follows the subcommand, so
        // its flags still override the file. Global options are accepted
        // after a subcommand.
        (None, Some(c)) => {
            if !subcommands.contains(&c.as_str()) {
                return Err(format!("unknown command {c:?} in config file"));
            }
            let at = 1.min(out.len());
            out.insert(at, c);
            at + 1
        }
        (None, None) => return Ok(out),
    };
    out.splice(at..at, injected);
    Ok(out)
}

/// Sizes given as a comma-separated list whose items are either single
/// values or `start:stop:step` ranges with inclusive `stop`.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("not a size: {t:?}"));
        match parts.as_slice() {
            [one] => out.push(num(one)?),
            [start, stop] | [start, stop, _] => {
                let (start, stop) = (num(start)?, num(stop)?);
                let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
                if step == 0 || stop < start {
                    return Err(format!("empty size range {item:?}"));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(format!("bad size range {item:?}")),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(format!("sizes must be positive, got {text:?}"));
    }
    Ok(out)
}

/// Seeds written as `mz,mx;mz,mx;...`.
pub fn parse_seeds(text: &str) -> Result<Vec<Magnetization>, String> {
    parse_pairs(text)?
        .into_iter()
        .map(|(mz, mx)| {
            if (-1.0..=1.0).contains(&mz) && (-1.0..=1.0).contains(&mx) {
                Ok(Magnetization::new(mz, mx))
            } else {
                Err(format!("seed ({mz}, {mx}) lies outside [-1, 1]^2"))
            }
        })
        .collect()
}

/// Semicolon-separated pairs `a,b`.
pub fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| format!("expected a,b, got {pair:?}"))?;
            let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_sizes("40:160:20").unwrap(), vec![40, 60, 80, 100, 120, 140, 160]);
        assert_eq!(parse_sizes("8").unwrap(), vec![8]);
        assert_eq!(parse_sizes("4:6,10").unwrap(), vec![4, 5, 6, 10]);
        assert!(parse_sizes("10:4:2").is_err());
        assert!(parse_sizes("0").is_err());
        assert!(parse_sizes("a:b").is_err());
    }

    #[test]
    fn config_lines() {
        let e = parse_config("# comment\np = 11\n\nlambda=0.3\n--s_points = 50\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("p".into(), "11".into()),
                ("lambda".into(), "0.3".into()),
                ("s-points".into(), "50".into())
            ]
        );
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn seeds_and_pairs() {
        assert_eq!(parse_seeds("1,0; 0.5,0.5").unwrap().len(), 2);
        assert!(parse_seeds("2,0").is_err());
        assert_eq!(parse_pairs("0,0.1;1,1").unwrap(), vec![(0.0, 0.1), (1.0, 1.0)]);
    }
}
