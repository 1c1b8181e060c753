//! CSV tables, gnuplot scripts and the bookkeeping of written files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use perifix_core::integrate::Trajectory;
use perifix_core::poincare::Orbit;

use crate::CliError;

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row<W: Write>(w: &mut W, lead: Option<usize>, values: &[f64]) -> io::Result<()> {
    let mut first = true;
    if let Some(k) = lead {
        write!(w, "{k}")?;
        first = false;
    }
    for v in values {
        if !first {
            w.write_all(b",")?;
        }
        first = false;
        w.write_all(fmt_num(*v).as_bytes())?;
    }
    w.write_all(b"\n")
}

fn header(first: &str, n: usize, last: Option<&str>) -> String {
    let mut cols = vec![first.to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend(last.map(String::from));
    cols.join(",")
}

/// `t,x1..xn`, one row per sample.
pub fn write_trajectory<W: Write>(w: &mut W, tr: &Trajectory) -> io::Result<()> {
    let n = tr.states.first().map_or(0, Vec::len);
    writeln!(w, "{}", header("t", n, None))?;
    let mut row = Vec::with_capacity(n + 1);
    for (t, x) in tr.times.iter().zip(&tr.states) {
        row.clear();
        row.push(*t);
        row.extend_from_slice(x);
        write_row(w, None, &row)?;
    }
    Ok(())
}

/// `k,x1..xn,residual` where the residual of row `k` is `|T^{k+1}x - T^k x|`; the last point
/// of the orbit (which has no successor) is not written.
pub fn write_orbit<W: Write>(w: &mut W, orbit: &Orbit) -> io::Result<()> {
    let n = orbit.points[0].len();
    writeln!(w, "{}", header("k", n, Some("residual")))?;
    let mut row = Vec::with_capacity(n + 1);
    for (k, (x, r)) in orbit.points.iter().zip(&orbit.residuals).enumerate() {
        row.clear();
        row.extend_from_slice(x);
        row.push(*r);
        write_row(w, Some(k), &row)?;
    }
    Ok(())
}

/// Long-format table `k,t,x1..xn` holding several trajectories.
pub fn write_labelled_trajectories<W: Write>(w: &mut W, runs: &[Trajectory]) -> io::Result<()> {
    let n = runs
        .first()
        .and_then(|r| r.states.first())
        .map_or(0, Vec::len);
    let mut cols = vec!["k".to_string(), "t".to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    writeln!(w, "{}", cols.join(","))?;
    let mut row = Vec::with_capacity(n + 1);
    for (k, tr) in runs.iter().enumerate() {
        for (t, x) in tr.times.iter().zip(&tr.states) {
            row.clear();
            row.push(*t);
            row.extend_from_slice(x);
            write_row(w, Some(k), &row)?;
        }
    }
    Ok(())
}

/// `t,k0..k{m-1}`: component `i` of each trajectory side by side; all runs share one grid.
pub fn write_component<W: Write>(w: &mut W, runs: &[Trajectory], i: usize) -> io::Result<()> {
    let cols: Vec<String> = (0..runs.len()).map(|k| format!("k{k}")).collect();
    writeln!(w, "t,{}", cols.join(","))?;
    let Some(first) = runs.first() else {
        return Ok(());
    };
    let mut row = Vec::with_capacity(runs.len() + 1);
    for (j, t) in first.times.iter().enumerate() {
        row.clear();
        row.push(*t);
        row.extend(runs.iter().map(|r| r.states[j][i]));
        write_row(w, None, &row)?;
    }
    Ok(())
}

/// Gnuplot script plotting columns `2..=runs+1` of `csv` against time.
pub fn series_script(csv: &str, png: &str, ylabel: &str, runs: usize) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,500\n\
         set output '{png}'\n\
         set xlabel 't'\n\
         set ylabel '{ylabel}'\n\
         set key outside right\n\
         plot for [k=0:{last}] '{csv}' skip 1 using 1:(column(k+2)) with lines title sprintf('k = %d', k)\n",
        last = runs.saturating_sub(1)
    )
}

/// Gnuplot script for a 3-D phase portrait of the long-format table from
/// [`write_labelled_trajectories`].
pub fn phase_script(csv: &str, png: &str, runs: usize) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,700\n\
         set output '{png}'\n\
         set xlabel 'x1'\n\
         set ylabel 'x2'\n\
         set zlabel 'x3'\n\
         set view 60,30\n\
         splot for [k=0:{last}] '{csv}' skip 1 using ($1 == k ? $3 : 1/0):4:5 with lines title sprintf('k = %d', k)\n",
        last = runs.saturating_sub(1)
    )
}

/// Files produced by one command, in the order they were completed.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Writes `path` through a buffered writer; on failure the error lists what was already
    /// written.
    pub fn write(
        &mut self,
        path: &Path,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let res = File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()
        });
        match res {
            Ok(()) => {
                self.files.push(path.to_path_buf());
                Ok(())
            }
            Err(e) => Err(CliError::io(path, e).with_written(&self.files)),
        }
    }

    pub fn write_str(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        self.write(path, |w| w.write_all(text.as_bytes()))
    }
}
