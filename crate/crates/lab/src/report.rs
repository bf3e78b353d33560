//! Report files: training curves and the two experiment tables, each as a
//! machine-readable CSV (full-precision rates, loadable without loss) and a
//! human-readable markdown table (percentages, two decimals).
//!
//! CSV rates are written with Rust's shortest round-trip float formatting,
//! so `load(save(x)) == x` exactly. Path columns must stay comma-free; the
//! emitters reject anything else rather than quote.

use std::fs;
use std::path::Path;

use malgan_core::detectors::ClassifierKind;
use malgan_core::gan::{GanVariant, TrainStatsRow};

use crate::error::{LabError, Result};

/// Output flavor for the experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

/// One attack-grid line as persisted: the measured rates plus the seed and
/// artifact paths that make the cell recomputable.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRow {
    pub detector: ClassifierKind,
    pub variant: GanVariant,
    pub seed: u64,
    pub original_tpr_train: f64,
    pub original_tpr_test: f64,
    pub adversarial_tpr_train: f64,
    pub adversarial_tpr_test: f64,
    pub stats_csv: String,
    pub detector_model: String,
    pub gan_checkpoint: String,
}

/// One defense line as persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseRow {
    pub detector: ClassifierKind,
    pub variant: GanVariant,
    pub seed: u64,
    pub rounds: usize,
    pub tpr_before: f64,
    pub tpr_after: f64,
    pub detector_model: String,
    pub gan_checkpoint: String,
}

const TRAIN_STATS_HEADER: &str = "epoch,L_G,L_D1,L_D2,L_D,adv_tpr";
const ATTACK_HEADER: &str = "detector,variant,seed,original_tpr_train,original_tpr_test,\
adversarial_tpr_train,adversarial_tpr_test,stats_csv,detector_model,gan_checkpoint";
const RETRAIN_HEADER: &str =
    "detector,variant,seed,rounds,tpr_before,tpr_after,detector_model,gan_checkpoint";

fn percent(rate: f64) -> String {
    format!("{:.2}", rate * 100.0)
}

fn check_path_field(value: &str, what: &str) -> Result<()> {
    if value.contains(',') || value.contains('\n') {
        return Err(LabError::format(
            what,
            format!("path {value:?} contains a comma or newline"),
        ));
    }
    Ok(())
}

/// Renders a training curve; one line per epoch row.
pub fn render_train_stats(rows: &[TrainStatsRow]) -> String {
    let mut out = String::from(TRAIN_STATS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epoch, r.l_g, r.l_d1, r.l_d2, r.l_d, r.adv_tpr
        ));
    }
    out
}

struct FieldParser<'a> {
    location: &'a str,
    line_no: usize,
}

impl<'a> FieldParser<'a> {
    fn err(&self, col: &str, message: String) -> LabError {
        LabError::format(
            format!("{}:{} column {col}", self.location, self.line_no),
            message,
        )
    }

    fn f64(&self, cell: &str, col: &str) -> Result<f64> {
        cell.parse::<f64>()
            .map_err(|_| self.err(col, format!("{cell:?} is not a number")))
    }

    fn u64(&self, cell: &str, col: &str) -> Result<u64> {
        cell.parse::<u64>()
            .map_err(|_| self.err(col, format!("{cell:?} is not a non-negative integer")))
    }

    fn usize(&self, cell: &str, col: &str) -> Result<usize> {
        cell.parse::<usize>()
            .map_err(|_| self.err(col, format!("{cell:?} is not a non-negative integer")))
    }

    fn detector(&self, cell: &str) -> Result<ClassifierKind> {
        ClassifierKind::from_name(cell)
            .ok_or_else(|| self.err("detector", format!("unknown detector {cell:?}")))
    }

    fn variant(&self, cell: &str) -> Result<GanVariant> {
        GanVariant::from_name(cell)
            .ok_or_else(|| self.err("variant", format!("unknown variant {cell:?}")))
    }
}

/// Splits CSV text into the checked header and its data lines.
fn csv_lines<'t>(
    text: &'t str,
    location: &str,
    header: &str,
) -> Result<Vec<(usize, Vec<&'t str>)>> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| LabError::format(location, "empty file, expected a header line"))?;
    if first != header {
        return Err(LabError::format(
            format!("{location}:1"),
            format!("header {first:?} does not match the expected {header:?}"),
        ));
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(LabError::format(
                format!("{location}:{line_no}"),
                format!("ragged row: {} cells where the header has {width}", cells.len()),
            ));
        }
        out.push((line_no, cells));
    }
    Ok(out)
}

/// Parses a training curve back to rows, exactly as written.
pub fn parse_train_stats(text: &str, location: &str) -> Result<Vec<TrainStatsRow>> {
    csv_lines(text, location, TRAIN_STATS_HEADER)?
        .into_iter()
        .map(|(line_no, cells)| {
            let p = FieldParser { location, line_no };
            Ok(TrainStatsRow {
                epoch: p.usize(cells[0], "epoch")?,
                l_g: p.f64(cells[1], "L_G")?,
                l_d1: p.f64(cells[2], "L_D1")?,
                l_d2: p.f64(cells[3], "L_D2")?,
                l_d: p.f64(cells[4], "L_D")?,
                adv_tpr: p.f64(cells[5], "adv_tpr")?,
            })
        })
        .collect()
}

pub fn save_train_stats(path: &Path, rows: &[TrainStatsRow]) -> Result<()> {
    fs::write(path, render_train_stats(rows)).map_err(|e| LabError::io(path, e))
}

pub fn load_train_stats(path: &Path) -> Result<Vec<TrainStatsRow>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_train_stats(&text, &path.display().to_string())
}

/// Renders the attack grid as CSV.
pub fn render_attack_csv(rows: &[AttackRow]) -> Result<String> {
    let mut out = String::from(ATTACK_HEADER);
    out.push('\n');
    for r in rows {
        check_path_field(&r.stats_csv, "stats_csv")?;
        check_path_field(&r.detector_model, "detector_model")?;
        check_path_field(&r.gan_checkpoint, "gan_checkpoint")?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.detector.name(),
            r.variant.name(),
            r.seed,
            r.original_tpr_train,
            r.original_tpr_test,
            r.adversarial_tpr_train,
            r.adversarial_tpr_test,
            r.stats_csv,
            r.detector_model,
            r.gan_checkpoint
        ));
    }
    Ok(out)
}

/// Parses an attack-grid CSV.
pub fn parse_attack_csv(text: &str, location: &str) -> Result<Vec<AttackRow>> {
    csv_lines(text, location, ATTACK_HEADER)?
        .into_iter()
        .map(|(line_no, cells)| {
            let p = FieldParser { location, line_no };
            Ok(AttackRow {
                detector: p.detector(cells[0])?,
                variant: p.variant(cells[1])?,
                seed: p.u64(cells[2], "seed")?,
                original_tpr_train: p.f64(cells[3], "original_tpr_train")?,
                original_tpr_test: p.f64(cells[4], "original_tpr_test")?,
                adversarial_tpr_train: p.f64(cells[5], "adversarial_tpr_train")?,
                adversarial_tpr_test: p.f64(cells[6], "adversarial_tpr_test")?,
                stats_csv: cells[7].to_string(),
                detector_model: cells[8].to_string(),
                gan_checkpoint: cells[9].to_string(),
            })
        })
        .collect()
}

/// Orders the variants by first appearance, preserving row order.
fn variants_in(rows: &[impl HasCell]) -> Vec<GanVariant> {
    let mut variants = Vec::new();
    for row in rows {
        if !variants.contains(&row.variant()) {
            variants.push(row.variant());
        }
    }
    variants
}

fn detectors_in(rows: &[impl HasCell]) -> Vec<ClassifierKind> {
    let mut kinds = Vec::new();
    for row in rows {
        if !kinds.contains(&row.detector()) {
            kinds.push(row.detector());
        }
    }
    kinds
}

trait HasCell {
    fn detector(&self) -> ClassifierKind;
    fn variant(&self) -> GanVariant;
}

impl HasCell for AttackRow {
    fn detector(&self) -> ClassifierKind {
        self.detector
    }
    fn variant(&self) -> GanVariant {
        self.variant
    }
}

impl HasCell for DefenseRow {
    fn detector(&self) -> ClassifierKind {
        self.detector
    }
    fn variant(&self) -> GanVariant {
        self.variant
    }
}

/// Renders the attack grid as two markdown tables (train and test split).
/// Rows are detectors; each variant contributes an Original/Adversarial
/// column pair; entries are percentages with two decimals.
pub fn render_attack_markdown(rows: &[AttackRow]) -> String {
    let variants = variants_in(rows);
    let detectors = detectors_in(rows);
    let mut out = String::from("# Detection rates on original and adversarial samples\n");
    for (title, pick) in [
        (
            "Training set",
            (|r: &AttackRow| (r.original_tpr_train, r.adversarial_tpr_train))
                as fn(&AttackRow) -> (f64, f64),
        ),
        ("Test set", |r: &AttackRow| {
            (r.original_tpr_test, r.adversarial_tpr_test)
        }),
    ] {
        out.push_str(&format!("\n## {title}\n\n"));
        out.push_str("| Detector |");
        for v in &variants {
            out.push_str(&format!(" {} Original | {} Adversarial |", v.name(), v.name()));
        }
        out.push('\n');
        out.push_str("| --- |");
        for _ in &variants {
            out.push_str(" ---: | ---: |");
        }
        out.push('\n');
        for &kind in &detectors {
            out.push_str(&format!("| {} |", kind.name()));
            for &v in &variants {
                match rows.iter().find(|r| r.detector == kind && r.variant == v) {
                    Some(row) => {
                        let (orig, adv) = pick(row);
                        out.push_str(&format!(" {} | {} |", percent(orig), percent(adv)));
                    }
                    None => out.push_str(" - | - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Renders the defense outcome as CSV.
pub fn render_retrain_csv(rows: &[DefenseRow]) -> Result<String> {
    let mut out = String::from(RETRAIN_HEADER);
    out.push('\n');
    for r in rows {
        check_path_field(&r.detector_model, "detector_model")?;
        check_path_field(&r.gan_checkpoint, "gan_checkpoint")?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.detector.name(),
            r.variant.name(),
            r.seed,
            r.rounds,
            r.tpr_before,
            r.tpr_after,
            r.detector_model,
            r.gan_checkpoint
        ));
    }
    Ok(out)
}

/// Parses a defense CSV.
pub fn parse_retrain_csv(text: &str, location: &str) -> Result<Vec<DefenseRow>> {
    csv_lines(text, location, RETRAIN_HEADER)?
        .into_iter()
        .map(|(line_no, cells)| {
            let p = FieldParser { location, line_no };
            Ok(DefenseRow {
                detector: p.detector(cells[0])?,
                variant: p.variant(cells[1])?,
                seed: p.u64(cells[2], "seed")?,
                rounds: p.usize(cells[3], "rounds")?,
                tpr_before: p.f64(cells[4], "tpr_before")?,
                tpr_after: p.f64(cells[5], "tpr_after")?,
                detector_model: cells[6].to_string(),
                gan_checkpoint: cells[7].to_string(),
            })
        })
        .collect()
}

/// Renders the defense outcome as a markdown table: detector rows, one
/// Before/After column pair per variant, percentages with two decimals.
pub fn render_retrain_markdown(rows: &[DefenseRow]) -> String {
    let variants = variants_in(rows);
    let detectors = detectors_in(rows);
    let mut out =
        String::from("# Adversarial detection before and after the attacker adapts\n\n");
    out.push_str("| Detector |");
    for v in &variants {
        out.push_str(&format!(" {} Before | {} After |", v.name(), v.name()));
    }
    out.push('\n');
    out.push_str("| --- |");
    for _ in &variants {
        out.push_str(" ---: | ---: |");
    }
    out.push('\n');
    for &kind in &detectors {
        out.push_str(&format!("| {} |", kind.name()));
        for &v in &variants {
            match rows.iter().find(|r| r.detector == kind && r.variant == v) {
                Some(row) => out.push_str(&format!(
                    " {} | {} |",
                    percent(row.tpr_before),
                    percent(row.tpr_after)
                )),
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the attack grid in the requested format.
pub fn emit_attack_report(rows: &[AttackRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_attack_csv(rows)?,
        ReportFormat::Markdown => render_attack_markdown(rows),
    };
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Writes the defense table in the requested format.
pub fn emit_retrain_report(rows: &[DefenseRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_retrain_csv(rows)?,
        ReportFormat::Markdown => render_retrain_markdown(rows),
    };
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn load_attack_csv(path: &Path) -> Result<Vec<AttackRow>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_attack_csv(&text, &path.display().to_string())
}

pub fn load_retrain_csv(path: &Path) -> Result<Vec<DefenseRow>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_retrain_csv(&text, &path.display().to_string())
}
