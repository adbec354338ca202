use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Writes `step,x1,...,xN` rows with 17 significant digits per value.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let n = traj.initial().len();
    write!(out, "step")?;
    for i in 1..=n {
        write!(out, ",x{i}")?;
    }
    writeln!(out)?;
    for (k, state) in &traj.states {
        write!(out, "{k}")?;
        for v in state.as_slice() {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Parses a list of numbers given either as a JSON array or separated by
/// commas and whitespace. `#` starts a comment.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v = tok
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: Some(lineno + 1), msg: format!("not a number: {tok:?}") })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_values(&text)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::OpinionState;

    #[test]
    fn csv_layout() {
        let traj = Trajectory {
            states: vec![
                (0, OpinionState::new(vec![0.1, 1.0]).unwrap()),
                (5, OpinionState::new(vec![0.0, 1.0]).unwrap()),
            ],
            converged: true,
            steps_run: 5,
            terminal_residual: 0.0,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,x1,x2");
        assert_eq!(lines[1], "0,1.0000000000000001e-1,1.0000000000000000e0");
        assert_eq!(lines[2], "5,0.0000000000000000e0,1.0000000000000000e0");
        // 17 significant digits round-trip exactly
        let back: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("[0.5, 1]").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_values("0.1, 0.2\n0.3 # tail\n").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(matches!(parse_values("0.1 x"), Err(Error::Parse { line: Some(1), .. })));
    }
}
