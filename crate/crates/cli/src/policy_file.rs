//! Reads stored policy CSVs (the `policy.csv` files the solve commands emit):
//! `t,s,d,action` for budget-aware policies, `t,s,action` for plain Markov
//! policies. Stages are 1-based in the files.

use crate::CliError;
use rmdp_core::adaptive::AdaptivePolicy;
use rmdp_core::MarkovPolicy;
use std::collections::HashMap;
use std::path::Path;

pub enum StoredPolicy {
    Adaptive(AdaptivePolicy),
    Markov(MarkovPolicy),
}

pub fn read_policy(path: &Path) -> Result<StoredPolicy, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("reading {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::validation(format!("{}: empty file", path.display())))?
        .trim();
    match header {
        "t,s,d,action" => read_adaptive(path, lines),
        "t,s,action" => read_markov(path, lines),
        other => Err(CliError::validation(format!(
            "{}: unrecognized policy header {other:?} (expected t,s,d,action or t,s,action)",
            path.display()
        ))),
    }
}

fn parse_row(path: &Path, line_no: usize, line: &str, fields: usize) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != fields {
        return Err(CliError::validation(format!(
            "{} line {line_no}: expected {fields} fields, got {}",
            path.display(),
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.trim().parse::<usize>().map_err(|e| {
                CliError::validation(format!("{} line {line_no}: {e}", path.display()))
            })
        })
        .collect()
}

fn read_adaptive<'a>(
    path: &Path,
    lines: impl Iterator<Item = &'a str>,
) -> Result<StoredPolicy, CliError> {
    let mut cells: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let (mut t_max, mut s_max, mut d_max) = (0usize, 0usize, 0usize);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, i + 2, line, 4)?;
        let (t, s, d, a) = (row[0], row[1], row[2], row[3]);
        if t == 0 {
            return Err(CliError::validation(format!(
                "{} line {}: stages are 1-based",
                path.display(),
                i + 2
            )));
        }
        t_max = t_max.max(t);
        s_max = s_max.max(s);
        d_max = d_max.max(d);
        cells.insert((t - 1, s, d), a);
    }
    let expected = t_max * (s_max + 1) * (d_max + 1);
    if cells.len() != expected {
        return Err(CliError::validation(format!(
            "{}: incomplete policy table ({} rows, expected {expected})",
            path.display(),
            cells.len()
        )));
    }
    let policy = AdaptivePolicy::from_fn(t_max, s_max + 1, d_max, |t, s, d| cells[&(t, s, d)]);
    Ok(StoredPolicy::Adaptive(policy))
}

fn read_markov<'a>(
    path: &Path,
    lines: impl Iterator<Item = &'a str>,
) -> Result<StoredPolicy, CliError> {
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    let (mut t_max, mut s_max) = (0usize, 0usize);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, i + 2, line, 3)?;
        let (t, s, a) = (row[0], row[1], row[2]);
        if t == 0 {
            return Err(CliError::validation(format!(
                "{} line {}: stages are 1-based",
                path.display(),
                i + 2
            )));
        }
        t_max = t_max.max(t);
        s_max = s_max.max(s);
        cells.insert((t - 1, s), a);
    }
    let expected = t_max * (s_max + 1);
    if cells.len() != expected {
        return Err(CliError::validation(format!(
            "{}: incomplete policy table ({} rows, expected {expected})",
            path.display(),
            cells.len()
        )));
    }
    let actions = (0..t_max)
        .map(|t| (0..=s_max).map(|s| cells[&(t, s)]).collect())
        .collect();
    Ok(StoredPolicy::Markov(MarkovPolicy::Deterministic(actions)))
}
