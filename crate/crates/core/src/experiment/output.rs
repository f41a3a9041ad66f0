use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::{AgentReport, ExperimentResult, Row};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "run_id,seed,tick,avg_benefit_1,avg_benefit_0,n_1,n_0,gain_1,gain_0";
pub const CSV_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILES: [&str; 2] = ["benefit_1.dat", "benefit_0.dat"];

/// Paths written by [`emit`], relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedFiles {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
    pub q_tables: Vec<PathBuf>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Serializes rows as CSV with the fixed header.
pub fn rows_to_csv<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Sequencing(format!("CSV encoding failed: {e}")))?;
    }
    let mut bytes = writer
        .into_inner()
        .map_err(|e| Error::Sequencing(format!("CSV encoding failed: {e}")))?;
    if bytes.is_empty() {
        bytes = format!("{CSV_HEADER}\n").into_bytes();
    }
    Ok(bytes)
}

/// Parses CSV written by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`"),
        });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes CSV rows, the JSON summary, plot data and optional Q-tables to `dir`.
pub fn emit(result: &ExperimentResult, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let csv = dir.join(CSV_FILE);
    write_file(&csv, &rows_to_csv(result.rows())?)?;

    let summary = dir.join(SUMMARY_FILE);
    let mut json = serde_json::to_vec_pretty(&result.summary)?;
    json.push(b'\n');
    write_file(&summary, &json)?;

    let mut plots = Vec::new();
    for (player, name) in PLOT_FILES.iter().enumerate() {
        let path = dir.join(name);
        let mut text = Vec::new();
        writeln!(text, "# tick mean_avg_benefit_{}", 1 - player).expect("writing to a Vec");
        for point in &result.summary.series {
            let spread = if player == 0 {
                point.benefit_1
            } else {
                point.benefit_0
            };
            writeln!(text, "{} {}", point.tick, spread.mean).expect("writing to a Vec");
        }
        write_file(&path, &text)?;
        plots.push(path);
    }

    let mut q_tables = Vec::new();
    if result.config.save_q_tables {
        for run in &result.runs {
            if let AgentReport::Qflip { table } = &run.agent {
                let path = dir.join(format!("qtable_run{:04}.txt", run.run_id));
                write_file(&path, table.serialize().as_bytes())?;
                q_tables.push(path);
            }
        }
    }

    Ok(EmittedFiles {
        dir: dir.to_path_buf(),
        csv,
        summary,
        plots,
        q_tables,
    })
}
