//! CSV and gnuplot emitters.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use schauder_core::holder::SpaceTimeFn;
use schauder_core::verify::{differenced_dt, gradient_and_laplacian, AuditReport};

pub fn csv_header(d: usize) -> String {
    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    format!("t,{},u,ut,|Du|,trace(D2u)", xs.join(","))
}

/// One row per (time, node); numbers in shortest round-trip form.
pub fn emit_csv(u: &SpaceTimeFn, path: &Path) -> io::Result<()> {
    let g = u.grid;
    let dt = u.dt_slices.clone().unwrap_or_else(|| differenced_dt(u));
    let mut out = csv_header(g.d);
    out.push('\n');
    for (k, t) in u.times.iter().enumerate() {
        let (grad, lap) = gradient_and_laplacian(&u.slices[k]);
        for node in 0..g.len() {
            let p = g.point(node);
            let _ = write!(out, "{t:?}");
            for x in &p[..g.d] {
                let _ = write!(out, ",{x:?}");
            }
            let _ = writeln!(
                out,
                ",{:?},{:?},{:?},{:?}",
                u.slices[k].values[node], dt[k].values[node], grad.values[node], lap.values[node]
            );
        }
    }
    fs::write(path, out)
}

fn block(name: &str, rows: &[(f64, Vec<f64>)]) -> String {
    let mut s = format!("${name} << EOD\n");
    for (x, ys) in rows {
        let _ = write!(s, "{x:?}");
        for y in ys {
            let _ = write!(s, " {y:?}");
        }
        s.push('\n');
    }
    s.push_str("EOD\n");
    s
}

/// Gnuplot script: `N_emp` against the sweep parameter, embedding ratios
/// against `h` on log-log axes, and the solution slices read from `csv_name`
/// (relative to the script).
pub fn emit_plot_script(audits: &[AuditReport], sweep_values: &[f64], csv_name: Option<&str>, d: usize, path: &Path) -> io::Result<()> {
    let mut panels: Vec<String> = Vec::new();
    let mut data = String::new();
    if let Some(a) = audits.iter().find(|a| a.name == "schauder") {
        let rows: Vec<(f64, Vec<f64>)> = a
            .measured
            .iter()
            .enumerate()
            .map(|(k, m)| (sweep_values.get(k).copied().unwrap_or(k as f64), vec![m.value]))
            .collect();
        data.push_str(&block("nemp", &rows));
        panels.push(
            "set title 'N_emp vs sweep parameter'\nunset logscale\nset xlabel 'parameter'\nset ylabel 'N_emp'\nplot $nemp using 1:2 with linespoints notitle\n".into(),
        );
    }
    if let Some(a) = audits.iter().find(|a| a.name == "embedding") {
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
        for m in &a.measured {
            let Some(rest) = m.config.strip_prefix("r1 h=").or_else(|| m.config.strip_prefix("r2 h=")) else { continue };
            let Ok(h) = rest.parse::<f64>() else { continue };
            match rows.iter_mut().find(|r| r.0 == h) {
                Some(r) => r.1.push(m.value),
                None => rows.push((h, vec![m.value])),
            }
        }
        rows.retain(|r| r.1.len() == 2);
        data.push_str(&block("embed", &rows));
        panels.push(
            "set title 'embedding ratios'\nset logscale xy\nset xlabel 'h'\nset ylabel 'ratio'\nplot $embed using 1:2 with linespoints title 'r1', $embed using 1:3 with linespoints title 'r2'\n"
                .into(),
        );
    }
    if let Some(csv) = csv_name {
        panels.push(format!(
            "set title 'solution slices'\nunset logscale\nset xlabel 'x1'\nset ylabel 'u'\nset datafile separator ','\nplot '{csv}' every ::1 using 2:{}:1 with points pointtype 7 pointsize 0.3 palette notitle\nset datafile separator whitespace\n",
            d + 2
        ));
    }
    let mut script = String::from("# schauder report plots\nset terminal pngcairo size 1400,450\nset output 'plots.png'\n");
    script.push_str(&data);
    let _ = writeln!(script, "set multiplot layout 1,{}", panels.len().max(1));
    for p in &panels {
        script.push_str(p);
    }
    script.push_str("unset multiplot\n");
    fs::write(path, script)
}
