//! Deterministic CSV output: one header row with units, one row per
//! record, floats rendered with 17 significant digits so a re-parse is
//! bit-exact.

use std::io::{self, Write};
use std::path::Path;

use crate::sim::{C0SweepResult, GovernorComparison, GridStudyResult, TrajectoryLog};

/// 17 significant digits, scientific; round-trips any finite f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A table that knows its own header and row rendering.
pub trait CsvTable {
    fn csv_header(&self) -> String;
    fn csv_rows(&self) -> Vec<String>;
}

/// Writes header plus rows; byte output is a pure function of the table.
pub fn write_csv<T: CsvTable + ?Sized>(table: &T, path: impl AsRef<Path>) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&table.csv_header());
    out.push('\n');
    for row in table.csv_rows() {
        out.push_str(&row);
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

const TRAJECTORY_COLUMNS: &str = "t_s,a_km,e,i_rad,raan_rad,argp_rad,theta_rad,\
s_kmps2,t_acc_kmps2,w_kmps2,v,b1,b2,q1,q2,c1_slack_km,c3_slack,u_norm_kmps2";

const GOVERNOR_COLUMNS: &str = ",kappa,vt_a_km,vt_e,vt_i_rad,vt_raan_rad,vt_argp_rad,in_terminal";

impl CsvTable for TrajectoryLog {
    fn csv_header(&self) -> String {
        let with_governor = self.records.iter().any(|r| r.governor.is_some());
        if with_governor {
            format!("{TRAJECTORY_COLUMNS}{GOVERNOR_COLUMNS}")
        } else {
            TRAJECTORY_COLUMNS.to_string()
        }
    }

    fn csv_rows(&self) -> Vec<String> {
        let with_governor = self.records.iter().any(|r| r.governor.is_some());
        self.records
            .iter()
            .map(|r| {
                let mut row = [
                    r.t_s,
                    r.elements.a,
                    r.elements.e,
                    r.elements.i,
                    r.elements.raan,
                    r.elements.argp,
                    r.theta,
                    r.u.s,
                    r.u.t,
                    r.u.w,
                    r.v,
                    r.b1,
                    r.b2,
                    r.q1,
                    r.q2,
                    r.c1_slack_km,
                    r.c3_slack,
                    r.u_norm,
                ]
                .map(fmt_f64)
                .join(",");
                if with_governor {
                    match &r.governor {
                        Some(g) => {
                            row.push(',');
                            row.push_str(
                                &[
                                    g.kappa,
                                    g.x_des_virtual.a,
                                    g.x_des_virtual.e,
                                    g.x_des_virtual.i,
                                    g.x_des_virtual.raan,
                                    g.x_des_virtual.argp,
                                ]
                                .map(fmt_f64)
                                .join(","),
                            );
                            row.push_str(if g.in_terminal { ",1" } else { ",0" });
                        }
                        None => row.push_str(",,,,,,,"),
                    }
                }
                row
            })
            .collect()
    }
}

impl CsvTable for GridStudyResult {
    fn csv_header(&self) -> String {
        "a0_km,e0,feasible,converged,convergence_time_s".to_string()
    }

    fn csv_rows(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{},{}",
                    fmt_f64(c.a0_km),
                    fmt_f64(c.e0),
                    c.feasible as u8,
                    c.converged as u8,
                    fmt_opt(c.convergence_time_s)
                )
            })
            .collect()
    }
}

impl CsvTable for C0SweepResult {
    fn csv_header(&self) -> String {
        "segment_fraction,a_km,c0".to_string()
    }

    fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| format!("{},{},{}", fmt_f64(p.segment_fraction), fmt_f64(p.a_km), fmt_opt(p.c0)))
            .collect()
    }
}

impl CsvTable for GovernorComparison {
    fn csv_header(&self) -> String {
        "run,horizon_s,converged,convergence_time_s,min_c1_slack_km,min_c3_slack,max_u_norm_kmps2"
            .to_string()
    }

    fn csv_rows(&self) -> Vec<String> {
        self.summaries()
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{},{},{},{}",
                    if s.horizon_s.is_some() { "governed" } else { "baseline" },
                    fmt_opt(s.horizon_s),
                    s.converged as u8,
                    fmt_opt(s.convergence_time_s),
                    fmt_f64(s.min_c1_slack_km),
                    fmt_f64(s.min_c3_slack),
                    fmt_f64(s.max_u_norm)
                )
            })
            .collect()
    }
}

/// Parses a CSV written by [`write_csv`]: header tokens plus rows of
/// optional floats (empty fields map to `None`).
pub fn parse_csv(path: impl AsRef<Path>) -> io::Result<(Vec<String>, Vec<Vec<Option<f64>>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|field| if field.is_empty() { None } else { field.parse::<f64>().ok() })
                .collect()
        })
        .collect();
    Ok((header, rows))
}
