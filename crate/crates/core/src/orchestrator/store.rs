//! Run-directory layout and the recorder that streams artifacts into it.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::evolution::{Candidate, Heuristic, Observer, Population, RepresentationMode};

pub const CONFIG_FILE: &str = "config.json";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const BEST_FILE: &str = "best.json";
pub const BEST_CODE_FILE: &str = "best.code.txt";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const QUERIES_FILE: &str = "queries.txt";

/// One line of `candidates.jsonl`. Deterministic given the config: wall
/// times live in `timings.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    #[serde(flatten)]
    pub heuristic: Heuristic,
    pub prompt_hash: String,
    pub reply_hash: Option<String>,
    pub run_id: String,
    pub representation_mode: RepresentationMode,
}

/// One line of `timings.jsonl`, keyed by candidate id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub id: String,
    pub eval_wall_ms: u64,
    /// Milliseconds since the Unix epoch when the record was written.
    pub timestamp_ms: u64,
}

/// Contents of `population_gen_<g>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub generation: u32,
    /// LLM queries issued up to the end of this generation.
    pub queries: u64,
    pub population: Population,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub generation: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

impl ConvergenceRow {
    pub fn of(generation: u32, p: &Population) -> Option<Self> {
        Some(Self { generation, best_fitness: p.best_fitness()?, mean_fitness: p.mean_fitness()? })
    }
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("generation,best_fitness,mean_fitness\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.generation, r.best_fitness, r.mean_fitness));
    }
    s
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), OrchestratorError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| OrchestratorError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| OrchestratorError::io(path, e))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Lowest-fitness feasible record; the earliest wins ties.
pub fn best_record(records: &[CandidateRecord]) -> Option<&CandidateRecord> {
    records.iter().filter(|r| r.heuristic.feasible).fold(None, |best: Option<&CandidateRecord>, r| match best {
        Some(b) if b.heuristic.fitness <= r.heuristic.fitness => Some(b),
        _ => Some(r),
    })
}

#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn checkpoint_path(&self, generation: u32) -> PathBuf {
        self.path.join(format!("population_gen_{generation}.json"))
    }

    /// Generations with a checkpoint file, ascending.
    pub fn checkpoint_generations(&self) -> Result<Vec<u32>, OrchestratorError> {
        let entries = std::fs::read_dir(&self.path).map_err(|e| OrchestratorError::io(&self.path, e))?;
        let mut gens: Vec<u32> = entries
            .flatten()
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                name.strip_prefix("population_gen_")?.strip_suffix(".json")?.parse().ok()
            })
            .collect();
        gens.sort_unstable();
        Ok(gens)
    }

    pub fn read_checkpoint(&self, generation: u32) -> Result<Checkpoint, OrchestratorError> {
        let path = self.checkpoint_path(generation);
        let text = std::fs::read_to_string(&path).map_err(|e| OrchestratorError::io(&path, e))?;
        let c: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| OrchestratorError::CorruptCheckpoint(format!("{}: {e}", path.display())))?;
        if c.generation != generation || !c.population.is_valid() || c.population.is_empty() {
            return Err(OrchestratorError::CorruptCheckpoint(format!("{}: invalid population", path.display())));
        }
        Ok(c)
    }

    pub fn latest_checkpoint(&self) -> Result<Checkpoint, OrchestratorError> {
        let gens = self.checkpoint_generations()?;
        let g = *gens
            .last()
            .ok_or_else(|| OrchestratorError::CorruptCheckpoint(format!("no checkpoint in {}", self.path.display())))?;
        self.read_checkpoint(g)
    }

    /// Parses a JSONL file. A torn final line (crash mid-append) is dropped;
    /// damage anywhere else is an error.
    fn read_jsonl<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, OrchestratorError> {
        let path = self.file(name);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(OrchestratorError::io(&path, e)),
        };
        let lines: Vec<&str> = text.split('\n').filter(|l| !l.is_empty()).collect();
        let complete = text.ends_with('\n');
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match serde_json::from_str(line) {
                Ok(v) => out.push(v),
                Err(_) if i + 1 == lines.len() && !complete => break,
                Err(e) => {
                    return Err(OrchestratorError::CorruptCheckpoint(format!("{} line {}: {e}", path.display(), i + 1)))
                }
            }
        }
        Ok(out)
    }

    pub fn read_candidates(&self) -> Result<Vec<CandidateRecord>, OrchestratorError> {
        self.read_jsonl(CANDIDATES_FILE)
    }

    pub fn read_timings(&self) -> Result<Vec<TimingRecord>, OrchestratorError> {
        self.read_jsonl(TIMINGS_FILE)
    }

    pub fn convergence_from_checkpoints(&self, through: u32) -> Result<Vec<ConvergenceRow>, OrchestratorError> {
        let mut rows = Vec::new();
        for g in self.checkpoint_generations()?.into_iter().filter(|&g| g >= 1 && g <= through) {
            let c = self.read_checkpoint(g)?;
            rows.extend(ConvergenceRow::of(g, &c.population));
        }
        Ok(rows)
    }

    pub fn write_convergence(&self, rows: &[ConvergenceRow]) -> Result<PathBuf, OrchestratorError> {
        let path = self.file(CONVERGENCE_FILE);
        write_atomic(&path, convergence_csv(rows).as_bytes())?;
        Ok(path)
    }

    pub fn write_best(&self, best: &CandidateRecord) -> Result<(), OrchestratorError> {
        let mut json = serde_json::to_string_pretty(best).expect("record serializes");
        json.push('\n');
        write_atomic(&self.file(BEST_FILE), json.as_bytes())?;
        self.write_best_code(best).map(|_| ())
    }

    pub fn write_best_code(&self, best: &CandidateRecord) -> Result<PathBuf, OrchestratorError> {
        let path = self.file(BEST_CODE_FILE);
        let mut code = best.heuristic.code.clone();
        if !code.ends_with('\n') {
            code.push('\n');
        }
        write_atomic(&path, code.as_bytes())?;
        Ok(path)
    }
}

/// Streams candidate records, timings, checkpoints and summaries into a run
/// directory. The single writer for it.
pub struct RunRecorder {
    dir: RunDir,
    run_id: String,
    mode: RepresentationMode,
    candidates: BufWriter<File>,
    timings: BufWriter<File>,
    best: Option<CandidateRecord>,
    convergence: Vec<ConvergenceRow>,
    /// Queries issued by earlier processes of a resumed run.
    query_offset: u64,
    halt_after: Option<u32>,
}

fn open_log(path: &Path, append: bool) -> Result<BufWriter<File>, OrchestratorError> {
    let mut o = OpenOptions::new();
    o.create(true);
    if append {
        o.append(true);
    } else {
        o.write(true).truncate(true);
    }
    o.open(path).map(BufWriter::new).map_err(|e| OrchestratorError::io(path, e))
}

impl RunRecorder {
    /// Starts a fresh run: truncates the logs and removes old checkpoints.
    pub fn create(dir: RunDir, run_id: String, mode: RepresentationMode) -> Result<Self, OrchestratorError> {
        for g in dir.checkpoint_generations()? {
            let p = dir.checkpoint_path(g);
            std::fs::remove_file(&p).map_err(|e| OrchestratorError::io(&p, e))?;
        }
        for name in [BEST_FILE, BEST_CODE_FILE, CONVERGENCE_FILE, QUERIES_FILE] {
            let _ = std::fs::remove_file(dir.file(name));
        }
        Ok(Self {
            candidates: open_log(&dir.file(CANDIDATES_FILE), false)?,
            timings: open_log(&dir.file(TIMINGS_FILE), false)?,
            dir,
            run_id,
            mode,
            best: None,
            convergence: Vec::new(),
            query_offset: 0,
            halt_after: None,
        })
    }

    /// Reopens a run after `checkpoint`, discarding anything logged past it.
    pub fn reopen(
        dir: RunDir,
        run_id: String,
        mode: RepresentationMode,
        checkpoint: &Checkpoint,
    ) -> Result<Self, OrchestratorError> {
        let g = checkpoint.generation;
        let records: Vec<CandidateRecord> =
            dir.read_candidates()?.into_iter().filter(|r| r.heuristic.generation <= g).collect();
        let keep: std::collections::HashSet<&str> = records.iter().map(|r| r.heuristic.id.as_str()).collect();
        let timings: Vec<TimingRecord> = dir.read_timings()?.into_iter().filter(|t| keep.contains(t.id.as_str())).collect();
        let mut text = String::new();
        for r in &records {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        write_atomic(&dir.file(CANDIDATES_FILE), text.as_bytes())?;
        let mut text = String::new();
        for t in &timings {
            text.push_str(&serde_json::to_string(t).expect("timing serializes"));
            text.push('\n');
        }
        write_atomic(&dir.file(TIMINGS_FILE), text.as_bytes())?;
        for later in dir.checkpoint_generations()?.into_iter().filter(|&x| x > g) {
            let p = dir.checkpoint_path(later);
            std::fs::remove_file(&p).map_err(|e| OrchestratorError::io(&p, e))?;
        }
        let convergence = dir.convergence_from_checkpoints(g)?;
        dir.write_convergence(&convergence)?;
        Ok(Self {
            candidates: open_log(&dir.file(CANDIDATES_FILE), true)?,
            timings: open_log(&dir.file(TIMINGS_FILE), true)?,
            best: best_record(&records).cloned(),
            dir,
            run_id,
            mode,
            convergence,
            query_offset: checkpoint.queries,
            halt_after: None,
        })
    }

    /// Stops the run after this generation, leaving a resumable directory.
    pub fn halt_after(mut self, generation: Option<u32>) -> Self {
        self.halt_after = generation;
        self
    }

    pub fn dir(&self) -> &RunDir {
        &self.dir
    }

    pub fn best(&self) -> Option<&CandidateRecord> {
        self.best.as_ref()
    }

    fn append(&mut self, records: &[Candidate]) -> Result<(), OrchestratorError> {
        let path = self.dir.file(CANDIDATES_FILE);
        let stamp = now_ms();
        for c in records {
            let record = CandidateRecord {
                heuristic: c.heuristic.clone(),
                prompt_hash: c.prompt_hash.clone(),
                reply_hash: c.reply_hash.clone(),
                run_id: self.run_id.clone(),
                representation_mode: self.mode,
            };
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(self.candidates, "{line}").map_err(|e| OrchestratorError::io(&path, e))?;
            let timing = TimingRecord { id: c.heuristic.id.clone(), eval_wall_ms: c.eval_wall_ms, timestamp_ms: stamp };
            writeln!(self.timings, "{}", serde_json::to_string(&timing).expect("timing serializes"))
                .map_err(|e| OrchestratorError::io(&path, e))?;
            let better = record.heuristic.feasible
                && self.best.as_ref().is_none_or(|b| record.heuristic.fitness < b.heuristic.fitness);
            if better {
                self.best = Some(record);
            }
        }
        self.candidates.flush().map_err(|e| OrchestratorError::io(&path, e))?;
        self.timings.flush().map_err(|e| OrchestratorError::io(&path, e))
    }

    fn checkpoint(&mut self, generation: u32, population: &Population, queries: u64) -> Result<(), OrchestratorError> {
        let c = Checkpoint { generation, queries: self.query_offset + queries, population: population.clone() };
        let mut json = serde_json::to_string_pretty(&c).expect("checkpoint serializes");
        json.push('\n');
        write_atomic(&self.dir.checkpoint_path(generation), json.as_bytes())?;
        write_atomic(&self.dir.file(QUERIES_FILE), format!("{}\n", c.queries).as_bytes())?;
        if generation >= 1 {
            self.convergence.extend(ConvergenceRow::of(generation, population));
            self.dir.write_convergence(&self.convergence)?;
        }
        if let Some(best) = &self.best {
            self.dir.write_best(best)?;
        }
        Ok(())
    }
}

impl Observer for RunRecorder {
    fn candidates(&mut self, _generation: u32, records: &[Candidate]) -> Result<(), String> {
        self.append(records).map_err(|e| e.to_string())
    }

    fn generation_done(&mut self, generation: u32, population: &Population, queries: u64) -> Result<(), String> {
        self.checkpoint(generation, population, queries).map_err(|e| e.to_string())
    }

    fn should_stop(&mut self, generation: u32) -> bool {
        self.halt_after == Some(generation)
    }
}
