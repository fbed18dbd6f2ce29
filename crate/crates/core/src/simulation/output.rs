use super::{SimulationError, SweepResult, SweepRow};
use std::fmt::Write as _;

pub const CSV_HEADER: &str =
    "d,L,p,q,i,trials,count_A,count_S,count_A_dual,count_S_dual,wilson_lo,wilson_hi";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.d,
                r.side,
                r.p,
                r.q,
                r.i,
                r.trials,
                r.count_a,
                r.count_s,
                r.count_a_dual,
                r.count_s_dual,
                r.wilson_lo,
                r.wilson_hi
            );
        }
        s
    }
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>, SimulationError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(SimulationError::Parse("missing CSV header".into()));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || SimulationError::Parse(format!("row {}: {line}", n + 1));
            if f.len() != 12 {
                return Err(bad());
            }
            let int = |k: usize| f[k].parse::<usize>().map_err(|_| bad());
            let real = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
            Ok(SweepRow {
                d: int(0)?,
                side: real(1)?,
                p: real(2)?,
                q: f[3].parse().map_err(|_| bad())?,
                i: int(4)?,
                trials: int(5)?,
                count_a: int(6)?,
                count_s: int(7)?,
                count_a_dual: int(8)?,
                count_s_dual: int(9)?,
                wilson_lo: real(10)?,
                wilson_hi: real(11)?,
            })
        })
        .collect()
}
