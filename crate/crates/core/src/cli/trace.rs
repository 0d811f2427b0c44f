//! Flat CSV traces: `round,agent_id,x_0,...,x_{d-1},v_t`, one row per
//! (round, honest agent). `v_t` repeats on every row of a round and is empty
//! when the honest optimum is not unique.

use std::fmt::Write as _;

use super::CliError;
use crate::netsim::RoundTrace;

pub fn trace_header(dimension: usize) -> String {
    let mut header = String::from("round,agent_id");
    for k in 0..dimension {
        let _ = write!(header, ",x_{k}");
    }
    header.push_str(",v_t");
    header
}

/// Renders the trace. Numbers use Rust's `Debug` float format: the shortest
/// text that parses back to the same bits, in exponent form when very small or
/// large.
pub fn render_trace(traces: &[RoundTrace]) -> String {
    let dimension = traces
        .first()
        .and_then(|t| t.estimates.values().next())
        .map_or(0, |x| x.len());
    let mut out = trace_header(dimension);
    out.push('\n');
    for trace in traces {
        let v_t = trace.v_t.map(|v| format!("{v:?}")).unwrap_or_default();
        for (id, x) in &trace.estimates {
            let _ = write!(out, "{},{id}", trace.round);
            for value in x.iter() {
                let _ = write!(out, ",{value:?}");
            }
            let _ = writeln!(out, ",{v_t}");
        }
    }
    out
}

/// One `(round, v_t)` pair per round present in a trace file.
pub fn parse_error_series(text: &str) -> Result<Vec<(usize, Option<f64>)>, CliError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h)
        .ok_or_else(|| CliError::Malformed("trace file is empty".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 3 || columns[0] != "round" || columns[1] != "agent_id" || columns.last() != Some(&"v_t") {
        return Err(CliError::Malformed(format!("unexpected trace header `{header}`")));
    }

    let mut series: Vec<(usize, Option<f64>)> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| CliError::Malformed(format!("trace line {}: {what}", lineno + 1));
        if fields.len() != columns.len() {
            return Err(bad(&format!("expected {} fields, found {}", columns.len(), fields.len())));
        }
        let round: usize = fields[0].parse().map_err(|_| bad("round is not an integer"))?;
        let last = fields[fields.len() - 1];
        let v_t = if last.is_empty() {
            None
        } else {
            Some(last.parse::<f64>().map_err(|_| bad("v_t is not a number"))?)
        };
        match series.last() {
            Some((r, _)) if *r == round => {}
            Some((r, _)) if *r > round => return Err(bad("rounds are not in order")),
            _ => series.push((round, v_t)),
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use std::collections::BTreeMap;

    fn trace(round: usize, v: Option<f64>) -> RoundTrace {
        RoundTrace {
            round,
            estimates: BTreeMap::from([
                (1, DVector::from_vec(vec![1.0, 0.1])),
                (2, DVector::from_vec(vec![-2.5, 1e-17])),
            ]),
            v_t: v,
        }
    }

    #[test]
    fn renders_flat_rows() {
        let text = render_trace(&[trace(0, Some(0.5)), trace(1, None)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "round,agent_id,x_0,x_1,v_t");
        assert_eq!(lines[1], "0,1,1.0,0.1,0.5");
        assert_eq!(lines[2], "0,2,-2.5,1e-17,0.5");
        assert_eq!(lines[3], "1,1,1.0,0.1,");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn parses_back_one_value_per_round() {
        let text = render_trace(&[trace(0, Some(0.5)), trace(1, Some(1e-300)), trace(2, None)]);
        assert_eq!(
            parse_error_series(&text).unwrap(),
            vec![(0, Some(0.5)), (1, Some(1e-300)), (2, None)]
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_error_series("").is_err());
        assert!(parse_error_series("a,b,c\n").is_err());
        assert!(parse_error_series("round,agent_id,x_0,v_t\n0,1,2\n").is_err());
        assert!(parse_error_series("round,agent_id,x_0,v_t\n1,1,2,3\n0,1,2,3\n").is_err());
        assert!(parse_error_series("round,agent_id,x_0,v_t\n0,1,2,nope\n").is_err());
        assert_eq!(parse_error_series("round,agent_id,x_0,v_t\n").unwrap(), vec![]);
    }
}
