use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub enum Plot {
    /// Log-log error against spacing.
    Convergence,
    /// Numerical and exact solution against `x`.
    Profile,
    /// Triplet file shown as a sparsity picture.
    Operator,
}

/// Writes `<csv>.gp` next to the data file and returns its path.
pub fn gnuplot(csv: Option<&Path>, plot: Plot, title: &str) -> Result<PathBuf> {
    let Some(csv) = csv else {
        bail!("--gnuplot needs --out so that the script can reference the data file");
    };
    let data = csv
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let body = match plot {
        Plot::Convergence => format!(
            "set logscale xy\nset xlabel 'h'\nset ylabel 'error'\nset key top left\n\
             plot '{data}' every ::1 using 2:3 with linespoints title '{title}'\n"
        ),
        Plot::Profile => format!(
            "set xlabel 'x'\nset ylabel 'u'\n\
             plot '{data}' every ::1 using 1:2 with points pt 7 ps 0.5 title '{title}', \\\n     \
             '{data}' every ::1 using 1:3 with lines title 'exact'\n"
        ),
        Plot::Operator => format!(
            "set yrange [] reverse\nset size ratio -1\n\
             plot '{data}' every ::1 using 2:1 with points pt 5 ps 0.5 title '{title}'\n"
        ),
    };
    let script = csv.with_extension("gp");
    let mut f = File::create(&script).with_context(|| format!("creating {}", script.display()))?;
    write!(f, "set datafile separator ','\nset title '{title}'\n{body}")?;
    Ok(script)
}
