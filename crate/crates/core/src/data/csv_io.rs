//! CSV loading and saving of vote matrices, groups, and ground truth.
//!
//! Three files describe a dataset: votes (`task_id,annotator_id,label`),
//! groups (`task_id,a`), and optional truth (`task_id,y`). Ids are arbitrary
//! UTF-8 strings; they are mapped to dense indices in order of first
//! appearance in the votes file, which keeps loading single-pass and makes
//! the index assignment deterministic.

use std::collections::HashMap;
use std::path::Path;

use crate::data::{GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};

/// A dataset loaded from CSV, with the id strings preserved so results can be
/// written back against the original identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedData {
    pub matrix: LabelMatrix,
    pub groups: GroupAssignment,
    /// Task id for each dense task index.
    pub task_ids: Vec<String>,
    /// Annotator id for each dense annotator index.
    pub annotator_ids: Vec<String>,
}

const VOTES_HEADER: &str = "task_id,annotator_id,label";
const GROUPS_HEADER: &str = "task_id,a";
const TRUTH_HEADER: &str = "task_id,y";

fn open_reader(path: &Path, expected_header: &'static str) -> Result<csv::Reader<std::fs::File>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    let expected: Vec<&str> = expected_header.split(',').collect();
    if found != expected {
        return Err(Error::BadHeader {
            file: path.display().to_string(),
            expected: expected_header,
            found: found.join(","),
        });
    }
    Ok(reader)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn parse_bit(
    raw: &str,
    what: &str,
    file: &Path,
    record: &csv::StringRecord,
) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::BadRecord {
            file: file.display().to_string(),
            line: record_line(record),
            message: format!("{what} must be 0 or 1, got `{other}`"),
        }),
    }
}

/// Loads a dataset from `votes_path` and `groups_path`, plus optional
/// `truth_path`.
///
/// Every voted-on task must have a group row (and a truth row when a truth
/// file is given); group/truth rows for tasks that never appear in the votes
/// file are ignored. Duplicate group or truth rows are accepted only when
/// they agree; duplicate votes are always rejected.
pub fn load_csv(
    votes_path: &Path,
    groups_path: &Path,
    truth_path: Option<&Path>,
) -> Result<LoadedData> {
    let mut task_index: HashMap<String, usize> = HashMap::new();
    let mut annotator_index: HashMap<String, usize> = HashMap::new();
    let mut task_ids: Vec<String> = Vec::new();
    let mut annotator_ids: Vec<String> = Vec::new();
    let mut votes: Vec<(usize, usize, bool)> = Vec::new();
    let mut seen: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();

    let mut reader = open_reader(votes_path, VOTES_HEADER)?;
    for record in reader.records() {
        let record = record?;
        let task_id = record[0].trim().to_string();
        let annotator_id = record[1].trim().to_string();
        let label = parse_bit(&record[2], "label", votes_path, &record)?;
        let t = *task_index.entry(task_id.clone()).or_insert_with(|| {
            task_ids.push(task_id.clone());
            task_ids.len() - 1
        });
        let r = *annotator_index.entry(annotator_id.clone()).or_insert_with(|| {
            annotator_ids.push(annotator_id.clone());
            annotator_ids.len() - 1
        });
        if !seen.insert((t, r)) {
            return Err(Error::DuplicateVote { task_id, annotator_id });
        }
        votes.push((t, r, label));
    }
    if task_ids.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{}: votes file contains no data rows",
            votes_path.display()
        )));
    }

    let group = read_per_task_column(groups_path, GROUPS_HEADER, "a", &task_index)?;
    let group: Vec<u8> = resolve_per_task(group, &task_ids, |task_id| Error::MissingGroup {
        task_id: task_id.to_string(),
    })?
    .into_iter()
    .map(u8::from)
    .collect();

    let truth = match truth_path {
        Some(path) => {
            let truth = read_per_task_column(path, TRUTH_HEADER, "y", &task_index)?;
            Some(resolve_per_task(truth, &task_ids, |task_id| Error::MissingTruth {
                task_id: task_id.to_string(),
            })?)
        }
        None => None,
    };

    let matrix = LabelMatrix::from_votes(task_ids.len(), annotator_ids.len(), votes)?;
    let groups = GroupAssignment::new(group, truth)?;
    Ok(LoadedData { matrix, groups, task_ids, annotator_ids })
}

/// Reads a two-column `task_id,<bit>` file into per-task-index slots.
fn read_per_task_column(
    path: &Path,
    header: &'static str,
    what: &str,
    task_index: &HashMap<String, usize>,
) -> Result<Vec<Option<bool>>> {
    let mut values: Vec<Option<bool>> = vec![None; task_index.len()];
    let mut reader = open_reader(path, header)?;
    for record in reader.records() {
        let record = record?;
        let task_id = record[0].trim();
        let value = parse_bit(&record[1], what, path, &record)?;
        let Some(&t) = task_index.get(task_id) else {
            continue; // rows for unvoted tasks carry no information for us
        };
        if let Some(previous) = values[t] {
            if previous != value {
                return Err(Error::BadRecord {
                    file: path.display().to_string(),
                    line: record_line(&record),
                    message: format!(
                        "conflicting {what} values for task `{task_id}`: {} then {}",
                        u8::from(previous),
                        u8::from(value)
                    ),
                });
            }
        }
        values[t] = Some(value);
    }
    Ok(values)
}

fn resolve_per_task(
    values: Vec<Option<bool>>,
    task_ids: &[String],
    missing: impl Fn(&str) -> Error,
) -> Result<Vec<bool>> {
    values
        .into_iter()
        .enumerate()
        .map(|(t, v)| v.ok_or_else(|| missing(&task_ids[t])))
        .collect()
}

/// Writes a dataset back to the three-file CSV layout. Votes are written
/// grouped by task in index order, so `load_csv` after `save_csv` reproduces
/// the in-memory representation exactly.
pub fn save_csv(
    data: &LoadedData,
    votes_path: &Path,
    groups_path: &Path,
    truth_path: Option<&Path>,
) -> Result<()> {
    let mut votes = csv::Writer::from_path(votes_path)?;
    votes.write_record(VOTES_HEADER.split(','))?;
    for (t, task) in data.matrix.tasks().enumerate() {
        for v in task {
            votes.write_record([
                data.task_ids[t].as_str(),
                data.annotator_ids[v.annotator].as_str(),
                if v.label { "1" } else { "0" },
            ])?;
        }
    }
    votes.flush()?;

    let mut groups = csv::Writer::from_path(groups_path)?;
    groups.write_record(GROUPS_HEADER.split(','))?;
    for (t, id) in data.task_ids.iter().enumerate() {
        groups.write_record([id.as_str(), if data.groups.group(t) == 1 { "1" } else { "0" }])?;
    }
    groups.flush()?;

    if let Some(path) = truth_path {
        let truth = data.groups.require_truth("saving a truth file")?;
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(TRUTH_HEADER.split(','))?;
        for (t, id) in data.task_ids.iter().enumerate() {
            writer.write_record([id.as_str(), if truth[t] { "1" } else { "0" }])?;
        }
        writer.flush()?;
    }
    Ok(())
}
