//! `--config PATH` support: a file of `key = value` lines spliced into argv.

use std::path::Path;

/// Converts `key = value` lines into `--key value` arguments.
///
/// Blank lines and lines starting with `#` are ignored. A bare `key` line
/// becomes a flag without a value.
pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        let key = key.trim_start_matches("--");
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(format!("line {}: malformed key in {raw:?}", no + 1));
        }
        if key == "config" {
            return Err(format!("line {}: nested config files are not supported", no + 1));
        }
        args.push(format!("--{key}"));
        if let Some(v) = value {
            args.push(v.trim_matches('"').to_string());
        }
    }
    Ok(args)
}

fn config_path(args: &[String]) -> Option<(usize, usize, String)> {
    for (i, a) in args.iter().enumerate() {
        if a == "--" {
            return None;
        }
        if a == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some((i, 1, p.to_string()));
        }
    }
    None
}

/// Splices the config file named by `--config` into `args`.
///
/// File entries go right after the subcommand, ahead of the explicit flags,
/// so a flag given on the command line overrides the file.
pub fn expand(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, String> {
    let Some((at, width, path)) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config file {path}: {e}"))?;
    let extra = parse(&text)?;
    let mut rest: Vec<String> = args[..at].iter().chain(&args[at + width..]).cloned().collect();
    let insert_at = rest
        .iter()
        .position(|a| subcommands.contains(&a.as_str()))
        .map_or(rest.len(), |p| p + 1);
    rest.splice(insert_at..insert_at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_pairs_flags_and_comments() {
        let text = "# run\nmu = 0.1\n\n--lambda=2\nno-rank\nsolver = \"gcg\"\n";
        assert_eq!(
            parse(text).unwrap(),
            strings(&["--mu", "0.1", "--lambda", "2", "--no-rank", "--solver", "gcg"])
        );
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(parse("bad key = 1").is_err());
        assert!(parse("= 1").is_err());
        assert!(parse("config = other.txt").is_err());
    }

    #[test]
    fn file_values_come_before_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "mu = 0.5\nseed = 3\n").unwrap();
        let args = strings(&["strucrank", "--config", path.to_str().unwrap(), "ssr", "--mu", "0.2"]);
        let out = expand(args, &["ssr", "scs"]).unwrap();
        assert_eq!(
            out,
            strings(&["strucrank", "ssr", "--mu", "0.5", "--seed", "3", "--mu", "0.2"])
        );
    }

    #[test]
    fn untouched_without_config() {
        let args = strings(&["strucrank", "selftest"]);
        assert_eq!(expand(args.clone(), &["selftest"]).unwrap(), args);
    }

    #[test]
    fn missing_file_is_an_error() {
        let args = strings(&["strucrank", "--config=/nonexistent/x.cfg", "ssr"]);
        assert!(expand(args, &["ssr"]).is_err());
    }
}
