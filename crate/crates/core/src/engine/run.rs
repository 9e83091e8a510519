use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::{mpsc, Barrier, Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{enumerate_scenarios, EngineConfig, Evaluator, Reason, ScenarioEnumeration, ScenarioResult};
use crate::caseio::{grid_checksum, sha256_hex};
use crate::error::{Error, Result};
use crate::grid::GridCase;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";

const MANIFEST_FORMAT: &str = "gridrisk-run";
const CHECKPOINT_FORMAT: &str = "gridrisk-checkpoint";

/// The settings that determine the results file. Worker count and reorder
/// window are excluded: they never change the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub max_order: usize,
    pub include_base: bool,
    pub tol_pf: f64,
    pub max_iter: usize,
    pub enforce_q_limits: bool,
    pub eps_stab: f64,
    pub sequential_redispatch: bool,
    pub warm_start: bool,
    pub limit: Option<usize>,
    pub record_runtime: bool,
}

impl From<&EngineConfig> for ConfigEcho {
    fn from(c: &EngineConfig) -> Self {
        ConfigEcho {
            max_order: c.max_order,
            include_base: c.include_base,
            tol_pf: c.pf.tol,
            max_iter: c.pf.max_iter,
            enforce_q_limits: c.pf.enforce_q_limits,
            eps_stab: c.eps_stab,
            sequential_redispatch: c.sequential_redispatch,
            warm_start: c.warm_start,
            limit: c.limit,
            record_runtime: c.record_runtime,
        }
    }
}

impl ConfigEcho {
    fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("sha256:{}", sha256_hex(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub base: usize,
    pub n1: usize,
    pub n2: usize,
    pub total: usize,
}

impl ScenarioCounts {
    fn add(&mut self, order: usize) {
        match order {
            0 => self.base += 1,
            1 => self.n1 += 1,
            _ => self.n2 += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub stable: usize,
    pub severe: usize,
    pub pf_nonconverged: usize,
    /// Severe records per reason; a record with several reasons counts once
    /// under each.
    pub by_reason: BTreeMap<Reason, usize>,
}

impl OutcomeCounts {
    fn add(&mut self, r: &ScenarioResult) {
        if r.is_severe() {
            self.severe += 1;
        } else {
            self.stable += 1;
        }
        if !r.pf_converged {
            self.pf_nonconverged += 1;
        }
        for reason in &r.reason {
            *self.by_reason.entry(*reason).or_default() += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub case_checksum: String,
    pub config: ConfigEcho,
    pub config_fingerprint: String,
    pub workers: usize,
    /// Size of the full enumeration.
    pub totals: ScenarioCounts,
    /// Records in the results file; equals `totals` unless sampled.
    pub evaluated: ScenarioCounts,
    pub outcomes: OutcomeCounts,
    /// Severity of the base case when it was evaluated.
    pub base_severity: Option<u8>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    case_checksum: String,
    config_fingerprint: String,
    planned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub manifest: RunManifest,
    /// Records already present from an earlier, interrupted run.
    pub skipped: usize,
    /// Scenario positions handled by each worker in this invocation.
    pub worker_tasks: Vec<usize>,
}

/// Enumeration indices selected by `limit`: all of them, or `limit` evenly
/// strided positions `floor(k * len / limit)`.
pub fn plan_indices(len: usize, limit: Option<usize>) -> Vec<usize> {
    match limit {
        Some(n) if n < len => (0..n).map(|k| (k as u128 * len as u128 / n as u128) as usize).collect(),
        _ => (0..len).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Job {
    Evaluate,
    /// Reuse the result at this plan position with the outages swapped.
    Mirror(usize),
}

fn plan_jobs(enumeration: &ScenarioEnumeration, plan: &[usize], sequential: bool) -> Vec<Job> {
    plan.iter()
        .map(|&idx| {
            if sequential {
                return Job::Evaluate;
            }
            match enumeration.positions(idx).as_deref() {
                Some(&[i, j]) if i > j => {
                    let source = enumeration.index_of(&[j, i]).expect("mirror exists");
                    match plan.binary_search(&source) {
                        Ok(p) => Job::Mirror(p),
                        Err(_) => Job::Evaluate,
                    }
                }
                _ => Job::Evaluate,
            }
        })
        .collect()
}

/// Evaluates every planned scenario and persists the records in
/// enumeration order. An existing partial results file written with the
/// same case and settings is resumed; anything else there is refused.
pub fn run_all(case: &GridCase, config: &EngineConfig, out_dir: &Path) -> Result<RunOutput> {
    let started = Instant::now();
    config.validate()?;
    let enumeration = enumerate_scenarios(case, config.max_order, config.include_base)?;
    let plan = plan_indices(enumeration.len(), config.limit);
    let jobs = plan_jobs(&enumeration, &plan, config.sequential_redispatch);
    let echo = ConfigEcho::from(config);
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        case_checksum: grid_checksum(case)?,
        config_fingerprint: echo.fingerprint(),
        planned: plan.len(),
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results_path = out_dir.join(RESULTS_FILE);
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);

    let persisted = load_for_resume(&results_path, &checkpoint_path, &checkpoint)?;
    for (k, r) in persisted.iter().enumerate() {
        let expected = enumeration.get(plan[k]).expect("planned index").id;
        if r.id != expected {
            return Err(Error::Consistency(format!(
                "{} record {} is `{}` but this run expects `{expected}`",
                results_path.display(),
                k + 1,
                r.id
            )));
        }
    }
    if persisted.is_empty() {
        write_json_atomic(&checkpoint_path, &checkpoint)?;
    }
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&results_path)
        .map_err(|e| Error::io(&results_path, e))?;
    let mut sink = BufWriter::new(file);

    let needed: HashSet<usize> = jobs
        .iter()
        .filter_map(|j| match j {
            Job::Mirror(p) => Some(*p),
            Job::Evaluate => None,
        })
        .collect();
    let start = persisted.len();
    let mut cache: HashMap<usize, ScenarioResult> = HashMap::new();
    let mut evaluated = ScenarioCounts::default();
    let mut outcomes = OutcomeCounts::default();
    let mut base_severity = None;
    for (pos, r) in persisted.into_iter().enumerate() {
        evaluated.add(r.outages.len());
        outcomes.add(&r);
        if r.outages.is_empty() {
            base_severity = Some(r.severity);
        }
        if needed.contains(&pos) {
            cache.insert(pos, r);
        }
    }

    let evaluator = Evaluator::new(case, config)?;
    let end = plan.len();
    let remaining = end - start;
    let workers = config.workers.min(remaining).max(1);
    let window = config.window();
    let mut worker_tasks = vec![0usize; workers];

    if remaining > 0 {
        let state = Mutex::new(PoolState {
            next: start,
            written: start,
            abort: false,
        });
        let wake = Condvar::new();
        let barrier = Barrier::new(workers);
        let (tx, rx) = mpsc::channel::<(usize, usize, Option<ScenarioResult>)>();

        let outcome: Result<()> = std::thread::scope(|scope| {
            for w in 0..workers {
                let tx = tx.clone();
                let (state, wake, barrier) = (&state, &wake, &barrier);
                let (evaluator, enumeration, plan, jobs) = (&evaluator, &enumeration, &plan, &jobs);
                scope.spawn(move || {
                    let mut first = true;
                    loop {
                        let claimed = {
                            let mut st = state.lock().expect("pool state");
                            loop {
                                if st.abort || st.next >= end {
                                    break None;
                                }
                                if st.next < st.written + window {
                                    st.next += 1;
                                    break Some(st.next - 1);
                                }
                                st = wake.wait(st).expect("pool state");
                            }
                        };
                        if first {
                            // every worker holds a task before any proceeds
                            barrier.wait();
                            first = false;
                        }
                        let Some(pos) = claimed else { break };
                        let message = match jobs[pos] {
                            Job::Mirror(_) => None,
                            Job::Evaluate => {
                                let scenario = enumeration.get(plan[pos]).expect("planned index");
                                Some(evaluator.evaluate(&scenario))
                            }
                        };
                        if tx.send((pos, w, message)).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(tx);

            let mut pending: BTreeMap<usize, Option<ScenarioResult>> = BTreeMap::new();
            let mut next_write = start;
            let write_result = (|| -> Result<()> {
                for (pos, w, message) in rx.iter() {
                    worker_tasks[w] += 1;
                    pending.insert(pos, message);
                    while let Some(message) = pending.remove(&next_write) {
                        let record = match (message, jobs[next_write]) {
                            (Some(r), _) => r,
                            (None, Job::Mirror(source)) => {
                                let mut r = cache.remove(&source).expect("mirror source written earlier");
                                let scenario = enumeration.get(plan[next_write]).expect("planned index");
                                r.id = scenario.id;
                                r.outages = scenario.outages;
                                r.runtime_ms = 0.0;
                                r
                            }
                            (None, Job::Evaluate) => unreachable!("evaluated jobs carry a result"),
                        };
                        let mut line = serde_json::to_string(&record)?;
                        line.push('\n');
                        sink.write_all(line.as_bytes()).map_err(|e| Error::io(&results_path, e))?;
                        evaluated.add(record.outages.len());
                        outcomes.add(&record);
                        if record.outages.is_empty() {
                            base_severity = Some(record.severity);
                        }
                        if needed.contains(&next_write) {
                            cache.insert(next_write, record);
                        }
                        next_write += 1;
                        if next_write % 1000 == 0 {
                            log::info!("{next_write}/{end} scenarios written");
                        }
                    }
                    sink.flush().map_err(|e| Error::io(&results_path, e))?;
                    state.lock().expect("pool state").written = next_write;
                    wake.notify_all();
                }
                Ok(())
            })();
            if write_result.is_err() {
                state.lock().expect("pool state").abort = true;
                wake.notify_all();
            }
            write_result
        });
        outcome?;
    }
    sink.flush().map_err(|e| Error::io(&results_path, e))?;
    drop(sink);

    let totals = ScenarioCounts {
        base: enumeration.base_count(),
        n1: enumeration.n1_count(),
        n2: enumeration.n2_count(),
        total: enumeration.len(),
    };
    let manifest = RunManifest {
        format: MANIFEST_FORMAT.to_string(),
        version: 1,
        case_checksum: checkpoint.case_checksum.clone(),
        config_fingerprint: checkpoint.config_fingerprint.clone(),
        config: echo,
        workers: config.workers,
        totals,
        evaluated,
        outcomes,
        base_severity,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json_atomic(&manifest_path, &manifest)?;
    Ok(RunOutput {
        manifest,
        skipped: start,
        worker_tasks,
    })
}

struct PoolState {
    next: usize,
    written: usize,
    abort: bool,
}

/// Records of an earlier run with the same case and settings. A trailing
/// partial line is cut off the file.
fn load_for_resume(results_path: &Path, checkpoint_path: &Path, expected: &Checkpoint) -> Result<Vec<ScenarioResult>> {
    let mut text = String::new();
    match File::open(results_path) {
        Ok(mut f) => {
            f.read_to_string(&mut text).map_err(|e| Error::io(results_path, e))?;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(results_path, e)),
    }
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if text.len() > complete || complete == 0 {
        let f = OpenOptions::new()
            .write(true)
            .open(results_path)
            .map_err(|e| Error::io(results_path, e))?;
        f.set_len(complete as u64).map_err(|e| Error::io(results_path, e))?;
    }
    if complete == 0 {
        return Ok(Vec::new());
    }
    let found: Checkpoint = match fs::read_to_string(checkpoint_path) {
        Ok(t) => serde_json::from_str(&t).map_err(|e| {
            Error::Consistency(format!("{} is unreadable: {e}", checkpoint_path.display()))
        })?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Consistency(format!(
                "{} exists without {}; refusing to append to results of unknown origin",
                results_path.display(),
                checkpoint_path.display()
            )))
        }
        Err(e) => return Err(Error::io(checkpoint_path, e)),
    };
    if found.case_checksum != expected.case_checksum {
        return Err(Error::Consistency(format!(
            "existing results were produced from case {} but this case is {}; use a fresh output directory",
            found.case_checksum, expected.case_checksum
        )));
    }
    if found.config_fingerprint != expected.config_fingerprint || found.planned != expected.planned {
        return Err(Error::Consistency(
            "existing results were produced with different run settings; use a fresh output directory or the original settings"
                .to_string(),
        ));
    }
    let records = parse_records(&text[..complete], results_path)?;
    if records.len() > expected.planned {
        return Err(Error::Consistency(format!(
            "{} holds {} records but only {} are planned",
            results_path.display(),
            records.len(),
            expected.planned
        )));
    }
    Ok(records)
}

fn parse_records(text: &str, path: &Path) -> Result<Vec<ScenarioResult>> {
    text.lines()
        .enumerate()
        .map(|(k, line)| {
            serde_json::from_str(line).map_err(|e| {
                Error::Consistency(format!("{} line {} is not a valid record: {e}", path.display(), k + 1))
            })
        })
        .collect()
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads the manifest of a finished run.
pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Consistency(format!("{} is not a run manifest: {e}", path.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(Error::Consistency(format!("{} has format `{}`", path.display(), manifest.format)));
    }
    Ok(manifest)
}

/// Reads the manifest and results of a finished run and checks that they
/// agree.
pub fn read_results(dir: &Path) -> Result<(RunManifest, Vec<ScenarioResult>)> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(RESULTS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let records = parse_records(&text, &path)?;
    if records.len() != manifest.evaluated.total {
        return Err(Error::Consistency(format!(
            "{} holds {} records but the manifest reports {}",
            path.display(),
            records.len(),
            manifest.evaluated.total
        )));
    }
    Ok((manifest, records))
}
