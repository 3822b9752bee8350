use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use stepgame::dataset::{self, DatasetError, SplitName};
use stepgame::noise::accounting_violations;
use stepgame::oracle::{certify, solve as solve_story, Failure, SolveError};
use stepgame::tpr::check::{run_checks, CheckConfig, PARAM_BAND};
use stepgame::tpr::model::ModelDims;
use stepgame::tpr::vocab::Vocabulary;
use stepgame::{count_samples, Entity, Lexicon, NoiseKind, RelationTriple, SampleGenerator, TemplateBank};

use crate::config::RunConfig;
use crate::CliError;

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("report serializes"));
}

fn load_bank(path: Option<&Path>) -> Result<TemplateBank, CliError> {
    match path {
        Some(p) => TemplateBank::load(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => Ok(TemplateBank::builtin()),
    }
}

fn read(path: &Path) -> Result<Vec<stepgame::Sample>, CliError> {
    dataset::read_dataset(path).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn gen(config: Option<&Path>, flags: RunConfig) -> Result<(), CliError> {
    let base = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let run = base.overlay(flags).resolve()?;
    let gen = SampleGenerator::new(load_bank(run.bank.as_deref())?);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = run.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Failed(e.to_string()))?;
    let result = pool.install(|| dataset::build_and_write(&run.plan, &gen, run.seed, run.format, &run.out));
    let (_, manifest) = result.map_err(|e| match e {
        DatasetError::Certification { .. } | DatasetError::Exhausted { .. } => CliError::Failed(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    emit(&manifest);
    for split in SplitName::ALL {
        let n: usize = manifest.counts[&split].values().sum();
        log::info!("{split}: {n} samples -> {}", run.out.join(&manifest.files[&split].name).display());
    }
    let lk = &manifest.leakage["train_test"];
    log::info!("train/test leakage: {} of {} test samples ({:.4})", lk.overlapping, lk.test_total, lk.fraction);
    Ok(())
}

#[derive(Serialize)]
struct SampleFailure<'a> {
    file: &'a str,
    id: u64,
    k: usize,
    failures: Vec<Failure>,
    noise_accounting: Vec<String>,
}

#[derive(Serialize)]
struct FileSummary {
    file: String,
    samples: usize,
    failed: usize,
}

#[derive(Serialize)]
struct ValidateSummary {
    files: Vec<FileSummary>,
    samples: usize,
    failed: usize,
    passed: bool,
}

fn dataset_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::Usage(format!("{} does not exist", path.display())));
    }
    let files: Vec<PathBuf> =
        SplitName::ALL.iter().map(|s| path.join(format!("{}.jsonl", s.as_str()))).filter(|p| p.is_file()).collect();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no train/valid/test .jsonl files in {}", path.display())));
    }
    Ok(files)
}

pub fn validate(path: &Path, bank: Option<&Path>, supporting_min_k: usize) -> Result<(), CliError> {
    let bank = load_bank(bank)?;
    let mut summary = ValidateSummary { files: Vec::new(), samples: 0, failed: 0, passed: true };
    for file in dataset_files(path)? {
        let samples = read(&file)?;
        let name = file.display().to_string();
        let bad: Vec<SampleFailure> = samples
            .par_iter()
            .filter_map(|s| {
                let report = certify(s, &bank);
                let noise_accounting = match &s.meta {
                    Some(m) => accounting_violations(&m.chain, &m.noise, supporting_min_k),
                    None => Vec::new(),
                };
                (!report.passed || !noise_accounting.is_empty()).then(|| SampleFailure {
                    file: &name,
                    id: s.id,
                    k: s.k,
                    failures: report.failures,
                    noise_accounting,
                })
            })
            .collect();
        for b in &bad {
            emit(b);
        }
        log::info!("{name}: {} samples, {} failed", samples.len(), bad.len());
        summary.samples += samples.len();
        summary.failed += bad.len();
        summary.files.push(FileSummary { file: name.clone(), samples: samples.len(), failed: bad.len() });
    }
    summary.passed = summary.failed == 0;
    emit(&summary);
    if summary.passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} of {} samples failed validation", summary.failed, summary.samples)))
    }
}

pub fn leakage(train: &Path, test: &Path) -> Result<(), CliError> {
    let report = dataset::leakage(&read(train)?, &read(test)?).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&report);
    for (k, row) in &report.per_k {
        log::info!("k={k:>2}: {:>6} / {:>6} = {:.4}", row.overlapping, row.test, row.fraction);
    }
    log::info!("total: {} / {} = {:.4}", report.overlapping, report.test_total, report.fraction);
    Ok(())
}

pub fn stats(path: &Path) -> Result<(), CliError> {
    let stats = dataset::noise_stats(&read(path)?).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&stats);
    log::info!("  k  samples  irrelevant(sent/ent)  disconnected(sent/ent)  supporting(sent)");
    for (k, row) in &stats.per_k {
        let (i, d, s) = (row.get(NoiseKind::Irrelevant), row.get(NoiseKind::Disconnected), row.get(NoiseKind::Supporting));
        log::info!(
            "{k:>3}  {:>7}  {:>9.2}/{:<9.2}  {:>10.2}/{:<10.2}  {:>9.2}",
            row.samples,
            i.mean_sentences,
            i.mean_entities,
            d.mean_sentences,
            d.mean_entities,
            s.mean_sentences
        );
    }
    Ok(())
}

pub fn count(k: usize, entities: usize) -> Result<(), CliError> {
    let n = count_samples(k, entities).map_err(|e| CliError::Usage(e.to_string()))?;
    // written by hand so the count stays exact past u64
    println!("{{\"k\":{k},\"entities\":{entities},\"count\":{n}}}");
    log::info!("{n} distinct samples for k={k} over {entities} entities");
    Ok(())
}

fn parse_story(text: &str, bank: &TemplateBank) -> Result<Vec<RelationTriple>, CliError> {
    text.split(['\n', ';'])
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|line| {
            if line.starts_with('(') {
                line.parse::<RelationTriple>().map_err(|e| CliError::Usage(format!("`{line}`: {e}")))
            } else {
                bank.parse(line).map_err(|e| CliError::Usage(format!("`{line}`: {e}")))
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    x: &'a Entity,
    y: &'a Entity,
    answer: &'a str,
}

pub fn solve(file: Option<&Path>, inline: Option<&str>, question: &str, bank: Option<&Path>) -> Result<(), CliError> {
    let bank = load_bank(bank)?;
    let text = match (file, inline) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        (None, Some(s)) => s.to_string(),
        (None, None) => return Err(CliError::Usage("give a story file or --story".into())),
    };
    let triples = parse_story(&text, &bank)?;
    let (x, y) = question
        .split_once(',')
        .map(|(a, b)| (Entity::new(a.trim()), Entity::new(b.trim())))
        .ok_or_else(|| CliError::Usage(format!("question `{question}` should be X,Y")))?;
    match solve_story(&triples, &x, &y) {
        Ok(answer) => {
            emit(&SolveOutput { x: &x, y: &y, answer: answer.as_str() });
            log::info!("{x} is {answer} of {y}");
            Ok(())
        }
        Err(e @ (SolveError::SameEntity(_) | SolveError::UnknownEntity(_))) => Err(CliError::Usage(e.to_string())),
        Err(e) => Err(CliError::Failed(e.to_string())),
    }
}

pub struct TpmannOptions {
    pub d: usize,
    pub d_e: usize,
    pub d_r: usize,
    pub hidden: usize,
    pub layers: usize,
    pub seed: u64,
    pub recovery_instances: usize,
    pub finite_seeds: usize,
    pub bank: Option<PathBuf>,
    pub trainable_memory: bool,
}

pub fn tpmann_check(o: &TpmannOptions) -> Result<(), CliError> {
    if [o.d, o.d_e, o.d_r, o.hidden, o.layers].contains(&0) {
        return Err(CliError::Usage("dimensions and layer count must be positive".into()));
    }
    let vocab = Vocabulary::build(&load_bank(o.bank.as_deref())?, &Lexicon::default());
    let paper = ModelDims::paper(vocab.len(), vocab.max_sentence());
    let dims = ModelDims { d: o.d, d_e: o.d_e, d_r: o.d_r, hidden: o.hidden, trainable_memory: o.trainable_memory, ..paper };
    let cfg = CheckConfig {
        dims,
        layers: o.layers,
        recovery_instances: o.recovery_instances,
        finite_seeds: o.finite_seeds,
        param_band: (dims == paper).then_some(PARAM_BAND),
        seed: o.seed,
        ..CheckConfig::paper(vocab.len(), vocab.max_sentence())
    };
    let report = run_checks(&cfg);
    emit(&report);
    log::info!("|V| = {}, nmax = {}, {} parameters", vocab.len(), vocab.max_sentence(), report.param_count);
    for c in &report.checks {
        log::info!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed("TP-MANN checks failed".into()))
    }
}
