//! Reader and writer for the supported subset of the MATPOWER case format.
//!
//! Consumed fields:
//!
//! * `mpc.baseMVA`
//! * `mpc.bus`: `bus_i`, `type` (3 marks the reference bus), `Pd`
//! * `mpc.gen`: `bus`, `Pmax` (col 9), `Pmin` (col 10), `status` (col 8)
//! * `mpc.branch`: `fbus`, `tbus`, `x` (col 4), `rateA` (col 6), `status` (col 11)
//! * `mpc.gencost`: model 2 only; the linear coefficient is read and any
//!   nonzero quadratic or higher-order coefficient is rejected.
//!
//! Out-of-service generators and branches are dropped. Lines and generators
//! are numbered 1.. in file order among the in-service rows. Tap ratios and
//! phase shifts are ignored.

use std::fmt::Write as _;

use super::{Bus, Generator, Line, PowerNetwork};
use crate::{OtsError, Result};

struct Matrix {
    rows: Vec<(usize, Vec<f64>)>,
}

struct RawCase {
    base_mva: Option<f64>,
    bus: Option<Matrix>,
    gen: Option<Matrix>,
    branch: Option<Matrix>,
    gencost: Option<Matrix>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_row(text: &str, line_no: usize) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            let value = match tok {
                "Inf" | "inf" => Ok(f64::INFINITY),
                "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
                _ => tok.parse::<f64>(),
            };
            value.map_err(|_| OtsError::Syntax {
                line: line_no,
                message: format!("invalid number '{tok}'"),
            })
        })
        .collect()
}

fn scan(text: &str) -> Result<RawCase> {
    let mut raw = RawCase {
        base_mva: None,
        bus: None,
        gen: None,
        branch: None,
        gencost: None,
    };
    // (table name, line where it opened, rows so far)
    let mut open: Option<(String, usize, Vec<(usize, Vec<f64>)>)> = None;
    let mut skipping_cell: Option<usize> = None;

    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line);

        if skipping_cell.is_some() {
            if line.contains('}') {
                skipping_cell = None;
            }
            continue;
        }

        if let Some((name, start, mut rows)) = open.take() {
            let (body, closed) = match line.find(']') {
                Some(pos) => (&line[..pos], true),
                None => (line, false),
            };
            for chunk in body.split(';') {
                let values = parse_row(chunk, line_no)?;
                if !values.is_empty() {
                    rows.push((line_no, values));
                }
            }
            if closed {
                store(&mut raw, &name, Matrix { rows });
            } else {
                open = Some((name, start, rows));
            }
            continue;
        }

        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("function") || trimmed == "end" {
            continue;
        }
        let Some((lhs, rhs)) = trimmed.split_once('=') else {
            return Err(OtsError::Syntax {
                line: line_no,
                message: format!("unexpected statement '{trimmed}'"),
            });
        };
        let name = lhs.trim().strip_prefix("mpc.").unwrap_or(lhs.trim()).to_string();
        let rhs = rhs.trim();
        if let Some(rest) = rhs.strip_prefix('[') {
            let (body, closed) = match rest.find(']') {
                Some(pos) => (&rest[..pos], true),
                None => (rest, false),
            };
            let mut rows = Vec::new();
            for chunk in body.split(';') {
                let values = parse_row(chunk, line_no)?;
                if !values.is_empty() {
                    rows.push((line_no, values));
                }
            }
            if closed {
                store(&mut raw, &name, Matrix { rows });
            } else {
                open = Some((name, line_no, rows));
            }
        } else if rhs.starts_with('{') {
            if !rhs.contains('}') {
                skipping_cell = Some(line_no);
            }
        } else if name == "baseMVA" {
            let value = rhs.trim_end_matches(';').trim();
            raw.base_mva = Some(value.parse().map_err(|_| OtsError::Syntax {
                line: line_no,
                message: format!("invalid baseMVA '{value}'"),
            })?);
        }
        // Other scalar assignments (version, names) carry nothing we use.
    }
    if let Some((name, start, _)) = open {
        return Err(OtsError::Syntax {
            line: start,
            message: format!("matrix '{name}' is never closed"),
        });
    }
    if let Some(start) = skipping_cell {
        return Err(OtsError::Syntax {
            line: start,
            message: "cell array is never closed".into(),
        });
    }
    Ok(raw)
}

fn store(raw: &mut RawCase, name: &str, matrix: Matrix) {
    match name {
        "bus" => raw.bus = Some(matrix),
        "gen" => raw.gen = Some(matrix),
        "branch" => raw.branch = Some(matrix),
        "gencost" => raw.gencost = Some(matrix),
        _ => {}
    }
}

fn need(row: &(usize, Vec<f64>), cols: usize, table: &str) -> Result<()> {
    if row.1.len() < cols {
        return Err(OtsError::Syntax {
            line: row.0,
            message: format!("{table} row has {} columns, at least {cols} required", row.1.len()),
        });
    }
    Ok(())
}

fn as_id(value: f64, line: usize, what: &str) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 {
        return Err(OtsError::Syntax {
            line,
            message: format!("{what} must be a nonnegative integer, got {value}"),
        });
    }
    Ok(value as usize)
}

/// Parses a MATPOWER-style case file into a validated network.
pub fn parse_case(text: &str) -> Result<PowerNetwork> {
    let raw = scan(text)?;
    let missing = |t: &str| OtsError::invalid("case", format!("missing table mpc.{t}"));
    let base_mva = raw.base_mva.unwrap_or(100.0);
    let bus_rows = raw.bus.ok_or_else(|| missing("bus"))?.rows;
    let gen_rows = raw.gen.map(|m| m.rows).unwrap_or_default();
    let branch_rows = raw.branch.ok_or_else(|| missing("branch"))?.rows;
    let cost_rows = raw.gencost.map(|m| m.rows).unwrap_or_default();

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        need(row, 3, "bus")?;
        let id = as_id(row.1[0], row.0, "bus id")?;
        let kind = row.1[1];
        buses.push(Bus {
            id,
            baseline_demand: row.1[2],
            is_reference: kind == 3.0,
        });
    }

    if cost_rows.len() < gen_rows.len() {
        return Err(OtsError::invalid(
            "case",
            format!("{} generators but only {} gencost rows", gen_rows.len(), cost_rows.len()),
        ));
    }
    let mut generators = Vec::new();
    for (row, cost) in gen_rows.iter().zip(&cost_rows) {
        need(row, 10, "gen")?;
        let in_service = row.1[7] > 0.0;
        let bus = as_id(row.1[0], row.0, "generator bus")?;
        let marginal_cost = linear_cost(cost)?;
        if !in_service {
            continue;
        }
        generators.push(Generator {
            id: generators.len() + 1,
            bus,
            p_min: row.1[9],
            p_max: row.1[8],
            marginal_cost,
        });
    }

    let mut lines = Vec::new();
    for row in &branch_rows {
        need(row, 6, "branch")?;
        let status = row.1.get(10).copied().unwrap_or(1.0);
        if status <= 0.0 {
            continue;
        }
        let from = as_id(row.1[0], row.0, "branch from-bus")?;
        let to = as_id(row.1[1], row.0, "branch to-bus")?;
        let id = lines.len() + 1;
        let reactance = row.1[3];
        if !(reactance > 0.0) {
            return Err(OtsError::invalid(
                format!("line {id}"),
                format!("nonpositive susceptance (x = {reactance}) at input line {}", row.0),
            ));
        }
        lines.push(Line::from_reactance(id, from, to, reactance, row.1[5]));
    }

    PowerNetwork::new(buses, generators, lines, base_mva)
}

fn linear_cost(row: &(usize, Vec<f64>)) -> Result<f64> {
    need(row, 4, "gencost")?;
    let model = row.1[0];
    if model != 2.0 {
        return Err(OtsError::Syntax {
            line: row.0,
            message: format!("only polynomial cost model 2 is supported, got {model}"),
        });
    }
    let n = as_id(row.1[3], row.0, "cost coefficient count")?;
    need(row, 4 + n, "gencost")?;
    let coeffs = &row.1[4..4 + n];
    match n {
        0 => Ok(0.0),
        1 => Ok(0.0),
        _ => {
            // Highest order first: c_{n-1} ... c1 c0.
            if let Some(pos) = coeffs[..n - 2].iter().position(|&c| c != 0.0) {
                return Err(OtsError::Syntax {
                    line: row.0,
                    message: format!(
                        "nonlinear cost term of order {} is not supported (coefficient {})",
                        n - 1 - pos,
                        coeffs[pos]
                    ),
                });
            }
            Ok(coeffs[n - 2])
        }
    }
}

/// Writes a network in the same case-file subset accepted by [`parse_case`].
pub fn write_case(network: &PowerNetwork) -> String {
    let mut out = String::new();
    out.push_str("function mpc = case_export\n");
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {:?};\n", network.base_mva());

    out.push_str("%% bus data\n%\tbus_i\ttype\tPd\nmpc.bus = [\n");
    for bus in network.buses() {
        let kind = if bus.is_reference { 3 } else { 1 };
        let _ = writeln!(out, "\t{}\t{}\t{:?};", bus.id, kind, bus.baseline_demand);
    }
    out.push_str("];\n\n");

    out.push_str("%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n");
    for g in network.generators() {
        let _ = writeln!(out, "\t{}\t0\t0\t0\t0\t1\t{:?}\t1\t{:?}\t{:?};", g.bus, network.base_mva(), g.p_max, g.p_min);
    }
    out.push_str("];\n\n");

    out.push_str("%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\nmpc.branch = [\n");
    for l in network.lines() {
        let _ = writeln!(
            out,
            "\t{}\t{}\t0\t{:?}\t0\t{:?}\t{:?}\t{:?}\t0\t0\t1;",
            l.from_bus,
            l.to_bus,
            l.reactance(),
            l.capacity,
            l.capacity,
            l.capacity
        );
    }
    out.push_str("];\n\n");

    out.push_str("%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc1\tc0\nmpc.gencost = [\n");
    for g in network.generators() {
        let _ = writeln!(out, "\t2\t0\t0\t2\t{:?}\t0;", g.marginal_cost);
    }
    out.push_str("];\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
function mpc = case2
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0;
  2 1 40;
];
mpc.gen = [
  1 0 0 0 0 1 100 1 80 0;
];
mpc.branch = [
  1 2 0.01 0.1 0 60 60 60 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 2 12.5 0;
];
";

    #[test]
    fn parses_minimal_case() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(net.bus_count(), 2);
        assert_eq!(net.line_count(), 1);
        assert_eq!(net.reference_bus(), 1);
        let g = &net.generators()[0];
        assert_eq!((g.p_min, g.p_max, g.marginal_cost), (0.0, 80.0, 12.5));
        let l = &net.lines()[0];
        assert_eq!(l.susceptance(), 10.0);
        assert_eq!(l.capacity, 60.0);
    }

    #[test]
    fn dangling_bus_is_named() {
        let text = TWO_BUS.replace("1 2 0.01 0.1", "1 999 0.01 0.1");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("999"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = TWO_BUS.replace("2 1 40;", "2 1 4x0;");
        match parse_case(&text).unwrap_err() {
            OtsError::Syntax { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_quadratic_cost() {
        let text = TWO_BUS.replace("2 0 0 2 12.5 0;", "2 0 0 3 0.01 12.5 0;");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("nonlinear"), "{err}");
        // A zero quadratic coefficient is just a linear cost.
        let text = TWO_BUS.replace("2 0 0 2 12.5 0;", "2 0 0 3 0 12.5 0;");
        assert_eq!(parse_case(&text).unwrap().generators()[0].marginal_cost, 12.5);
    }

    #[test]
    fn drops_out_of_service_lines() {
        let text = TWO_BUS.replace(
            "  1 2 0.01 0.1 0 60 60 60 0 0 1 -360 360;",
            "  1 2 0.01 0.1 0 60 60 60 0 0 1 -360 360;\n  1 2 0.01 0.2 0 60 60 60 0 0 0 -360 360;",
        );
        assert_eq!(parse_case(&text).unwrap().line_count(), 1);
    }

    #[test]
    fn nonpositive_rating_rejected() {
        let text = TWO_BUS.replace("0.1 0 60 60 60", "0.1 0 0 60 60");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn unterminated_matrix() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0;\n";
        assert!(matches!(parse_case(text), Err(OtsError::Syntax { line: 2, .. })));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(parse_case(&write_case(&net)).unwrap(), net);
    }
}
