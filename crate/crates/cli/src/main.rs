use std::collections::BTreeSet;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use evidx::eval::{
    compare_methods, diagnose_case, pair_reports, paired_to_csv, render_table, EvalError, EvaluationReport,
};
use evidx::expert::{modify, ExpertBpaTable, ModificationMode};
use evidx::extraction::{build_frequency_table, extract_table, ExtractionMethod};
use evidx::ingest::{load_param_list, parse_cases, IngestError};
use evidx::pipeline::{
    load_frame, natural_frame, run_pipeline, DropSource, ExpertMode, PipelineConfig, PipelineInputs,
};
use evidx::prune::{prune_group, ParameterGroup, ParameterGroups};
use evidx::synth::{self, SynthConfig};
use evidx::{Bpa, ReferenceIntervals};
use serde_json::json;

#[derive(Parser)]
#[command(name = "evidx", version, about = "Evidential diagnosis from tabulated lab cases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "1")]
    One,
    #[value(name = "2a")]
    TwoA,
    #[value(name = "2b")]
    TwoB,
    #[value(name = "3")]
    Three,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Part,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Biochem,
    Hematologic,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BPA set from training cases.
    Extract {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        intervals: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// global-one, global-zero, stratified-one or stratified-zero.
        #[arg(long)]
        m3_variant: Option<String>,
        /// Outcome labels, one per line; defaults to the training outcomes.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        min_support: u64,
        /// Also write the frequency table here.
        #[arg(long)]
        frequencies: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Overwrite generated assignments with expert ones.
    Modify {
        #[arg(long)]
        bpa: PathBuf,
        #[arg(long)]
        expert: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find redundant parameters in one group through their correlations.
    Prune {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, value_enum)]
        group: GroupArg,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        min_pairs: usize,
        /// `parameter,group` CSV; without it every case column is in the group.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Removal list, one parameter per line; defaults to OUT with a .txt extension.
        #[arg(long)]
        list: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnose the cases of a file and print per-case belief intervals.
    Diagnose {
        #[arg(long)]
        bpa: PathBuf,
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        intervals: PathBuf,
        #[arg(long)]
        drop_params: Option<PathBuf>,
    },
    /// Diagnose a labelled test set and score it.
    Evaluate {
        #[arg(long)]
        bpa: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        intervals: PathBuf,
        #[arg(long)]
        drop_params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two reports with an exact McNemar test on precise matches.
    Compare {
        #[arg(long)]
        report: Vec<PathBuf>,
        /// Where to write the per-case paired outcomes.
        #[arg(long)]
        paired: PathBuf,
    },
    /// Generate a synthetic data set.
    Synth {
        #[arg(long, default_value_t = 14)]
        outcomes: usize,
        #[arg(long, default_value_t = 12)]
        params: usize,
        #[arg(long, default_value_t = 280)]
        cases: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.5)]
        separation: f64,
        #[arg(long, default_value_t = 0.1)]
        missing_rate: f64,
        /// Also split off the last N cases as test.csv (rest: train.csv).
        #[arg(long)]
        test_cases: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run every stage from training data to a scored report.
    Run {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        intervals: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        m3_variant: Option<String>,
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long, value_enum, requires = "expert")]
        mode: Option<ModeArg>,
        #[arg(long, conflicts_with = "auto_prune")]
        drop_params: Option<PathBuf>,
        #[arg(long)]
        auto_prune: bool,
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        min_pairs: usize,
        #[arg(long, default_value_t = 1)]
        min_support: u64,
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Data(Box<dyn Error>),
    Pipeline(String),
}

impl<E: Error + 'static> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(Box::new(e))
    }
}

type Outcome = Result<(), Failure>;

fn method_name(method: MethodArg, variant: Option<&str>) -> Result<String, Failure> {
    let base = match method {
        MethodArg::One => "1",
        MethodArg::TwoA => "2a",
        MethodArg::TwoB => "2b",
        MethodArg::Three => "3",
    };
    match (method, variant) {
        (MethodArg::Three, Some(v)) => Ok(format!("3/{v}")),
        (_, Some(_)) => Err(Failure::Usage("--m3-variant only applies to --method 3".into())),
        (_, None) => Ok(base.to_owned()),
    }
}

fn write(path: &Path, text: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IngestError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(())
}

fn drop_list(path: Option<&Path>) -> Result<BTreeSet<String>, IngestError> {
    path.map_or_else(|| Ok(BTreeSet::new()), load_param_list)
}

fn extract(
    cases: &Path,
    intervals: &Path,
    method: &str,
    frame: Option<&Path>,
    min_support: u64,
    frequencies: Option<&Path>,
    out: &Path,
) -> Outcome {
    let method: ExtractionMethod = method.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
    let cases = parse_cases(cases)?;
    let intervals = ReferenceIntervals::load(intervals)?;
    let frame = match frame {
        Some(p) => load_frame(p)?,
        None => natural_frame(&cases)?,
    };
    let table = build_frequency_table(&cases, &intervals, &frame)?.with_min_support(min_support);
    if let Some(p) = frequencies {
        write(p, &table.to_json())?;
    }
    let bpa: Bpa = extract_table(&table, method)?;
    bpa.save(out)?;
    log::info!("{} evidence items written to {}", bpa.len(), out.display());
    Ok(())
}

fn modify_cmd(bpa: &Path, expert: &Path, mode: ModeArg, out: &Path) -> Outcome {
    let bpa = Bpa::load(bpa)?;
    let expert = ExpertBpaTable::load(expert)?;
    let mode = match mode {
        ModeArg::Part => ModificationMode::Part,
        ModeArg::All => ModificationMode::All,
    };
    modify(&bpa, &expert, mode)?.save(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn prune_cmd(
    cases: &Path,
    group: GroupArg,
    threshold: f64,
    min_pairs: usize,
    groups: Option<&Path>,
    list: Option<&Path>,
    out: &Path,
) -> Outcome {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Failure::Usage(format!("threshold {threshold} outside (0, 1]")));
    }
    let group = match group {
        GroupArg::Biochem => ParameterGroup::Biochemical,
        GroupArg::Hematologic => ParameterGroup::Hematologic,
    };
    let cases = parse_cases(cases)?;
    let params: Vec<String> = match groups {
        Some(p) => ParameterGroups::load(p)?.members(group),
        None => {
            let all: BTreeSet<&String> = cases.iter().flat_map(|c| c.values.keys()).collect();
            all.into_iter().cloned().collect()
        }
    };
    let result = prune_group(&cases, &params, group, threshold, min_pairs);
    write(out, &result.to_json())?;
    let list = list.map_or_else(|| out.with_extension("txt"), Path::to_owned);
    write(&list, &result.removal_list())?;
    Ok(())
}

fn diagnose_cmd(bpa: &Path, case: &Path, intervals: &Path, drop: Option<&Path>) -> Outcome {
    let bpa = Bpa::load(bpa)?;
    let cases = parse_cases(case)?;
    let intervals = ReferenceIntervals::load(intervals)?;
    let drop = drop_list(drop)?;
    let frame = bpa.frame();
    let mut docs = Vec::new();
    let mut ok = 0usize;
    for c in &cases {
        match diagnose_case(c, &bpa, &intervals, &drop) {
            Ok(d) => {
                ok += 1;
                let intervals: Vec<_> = d
                    .singleton_intervals
                    .iter()
                    .enumerate()
                    .map(|(i, iv)| json!({"outcome": frame.label(i), "lower": iv.lower, "upper": iv.upper}))
                    .collect();
                docs.push(json!({
                    "case_id": d.case_id,
                    "observed": frame.labels_of(d.observed_set),
                    "conflict": d.conflict,
                    "intervals": intervals,
                    "evidence_used": d.evidence_used,
                }));
            }
            Err(e @ (EvalError::NoEvidence { .. } | EvalError::Combination { .. })) => {
                log::warn!("{e}");
                docs.push(json!({"case_id": c.case_id, "error": e.to_string()}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    println!("{}", serde_json::to_string_pretty(&docs)?);
    if ok == 0 && !cases.is_empty() {
        return Err(Failure::Pipeline("no case could be diagnosed".into()));
    }
    Ok(())
}

fn check_report(report: &EvaluationReport) -> Outcome {
    if report.diagnosed == 0 && report.total_cases > 0 {
        let reason = report.excluded.first().map_or("", |e| e.reason.as_str());
        return Err(Failure::Pipeline(format!("no case could be diagnosed ({reason})")));
    }
    Ok(())
}

fn evaluate_cmd(bpa: &Path, test: &Path, intervals: &Path, drop: Option<&Path>, out: &Path) -> Outcome {
    let bpa = Bpa::load(bpa)?;
    let cases = parse_cases(test)?;
    let intervals = ReferenceIntervals::load(intervals)?;
    let drop = drop_list(drop)?;
    let report = evidx::eval::evaluate_set(&cases, &bpa, &intervals, &drop);
    write(out, &report.to_json())?;
    print!("{}", render_table(&[(&format!("Method {}", report.method), &report)]));
    check_report(&report)
}

fn load_report(path: &Path) -> Result<EvaluationReport, Failure> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(EvaluationReport::from_json(&text)?)
}

fn compare_cmd(reports: &[PathBuf], paired: &Path) -> Outcome {
    let [a, b] = reports else {
        return Err(Failure::Usage("compare needs exactly two --report arguments".into()));
    };
    let a = load_report(a)?;
    let b = load_report(b)?;
    let pairs = pair_reports(&a, &b)?;
    write(paired, &paired_to_csv(&pairs))?;
    let cmp = compare_methods(&a, &b, &pairs)?;
    let name_a = format!("A: {}", a.method);
    let name_b = format!("B: {}", b.method);
    print!("{}", render_table(&[(&name_a, &a), (&name_b, &b)]));
    println!("{}", serde_json::to_string_pretty(&cmp)?);
    Ok(())
}

fn synth_cmd(config: SynthConfig, test_cases: Option<usize>, out_dir: &Path) -> Outcome {
    if config.outcomes == 0 || config.params == 0 {
        return Err(Failure::Usage("--outcomes and --params must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.missing_rate) {
        return Err(Failure::Usage("--missing-rate must lie in [0, 1]".into()));
    }
    if !config.separation.is_finite() {
        return Err(Failure::Usage("--separation must be finite".into()));
    }
    let data = synth::generate(&config);
    synth::write(&data, out_dir, test_cases)?;
    Ok(())
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Extract {
            cases,
            intervals,
            method,
            m3_variant,
            frame,
            min_support,
            frequencies,
            out,
        } => {
            let method = method_name(method, m3_variant.as_deref())?;
            extract(
                &cases,
                &intervals,
                &method,
                frame.as_deref(),
                min_support,
                frequencies.as_deref(),
                &out,
            )
        }
        Command::Modify { bpa, expert, mode, out } => modify_cmd(&bpa, &expert, mode, &out),
        Command::Prune {
            cases,
            group,
            threshold,
            min_pairs,
            groups,
            list,
            out,
        } => prune_cmd(
            &cases,
            group,
            threshold,
            min_pairs,
            groups.as_deref(),
            list.as_deref(),
            &out,
        ),
        Command::Diagnose {
            bpa,
            case,
            intervals,
            drop_params,
        } => diagnose_cmd(&bpa, &case, &intervals, drop_params.as_deref()),
        Command::Evaluate {
            bpa,
            test,
            intervals,
            drop_params,
            out,
        } => evaluate_cmd(&bpa, &test, &intervals, drop_params.as_deref(), &out),
        Command::Compare { report, paired } => compare_cmd(&report, &paired),
        Command::Synth {
            outcomes,
            params,
            cases,
            seed,
            separation,
            missing_rate,
            test_cases,
            out_dir,
        } => synth_cmd(
            SynthConfig {
                outcomes,
                params,
                cases,
                seed,
                separation,
                missing_rate,
            },
            test_cases,
            &out_dir,
        ),
        Command::Run {
            train,
            test,
            intervals,
            method,
            m3_variant,
            expert,
            mode,
            drop_params,
            auto_prune,
            groups,
            threshold,
            min_pairs,
            min_support,
            frame,
            out_dir,
        } => {
            let frame = match frame {
                Some(p) => Some(load_frame(&p)?.labels().to_vec()),
                None => None,
            };
            let config = PipelineConfig {
                method: method_name(method, m3_variant.as_deref())?,
                expert_mode: match mode {
                    None => ExpertMode::None,
                    Some(ModeArg::Part) => ExpertMode::Part,
                    Some(ModeArg::All) => ExpertMode::All,
                },
                drop: match (drop_params, auto_prune) {
                    (Some(p), _) => DropSource::File(p),
                    (None, true) => DropSource::AutoPrune,
                    (None, false) => DropSource::None,
                },
                threshold,
                min_pairs,
                min_support,
                groups,
                frame,
                ..PipelineConfig::default()
            };
            config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let inputs = PipelineInputs {
                train: &train,
                test: &test,
                intervals: &intervals,
                expert: expert.as_deref(),
                out_dir: &out_dir,
            };
            let report = run_pipeline(&config, &inputs)?;
            print!("{}", render_table(&[(&format!("Method {}", report.method), &report)]));
            check_report(&report)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprint!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprint!(": {s}");
                source = s.source();
            }
            eprintln!();
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
