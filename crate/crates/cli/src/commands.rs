use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};

use ivl_core::classify::{classify_set, implication_audit, theorem_audit, Notion, Record, SetReport, TheoremInputs, Verdict};
use ivl_core::codec::{decode_profile, encode_profile, encode_witnesses};
use ivl_core::control_sets::{
    approx_reachability_check, controlled_invariance_check, dichotomy_probe, no_return_check, reachable_set, DichotomyMode, ReturnStatus,
};
use ivl_core::dynamics::{fmt_q, q, ControlSchedule, Scalar, StatePoint, StateSpace, SymbolicPoint, Q};
use ivl_core::examples::{build_example, reproduce_claims, ClaimOutcome, ClaimResult, Example, ExampleId};
use ivl_core::export::{write_profile_csv, write_reach_csv, write_trajectory_csv};
use ivl_core::spanning::{bounded_complexity_verdict, complexity_profile, entropy_estimate, ComplexityProfile, ComplexityVerdict, Mode, Resolution, SpanBudget};
use ivl_core::{Exec, IvlError, Result};

use crate::config::Config;

const MAX_REACH_CELLS: usize = 1 << 20;

fn example(cfg: &Config) -> Result<Example> {
    let id: ExampleId = cfg.get("example").ok_or_else(|| IvlError::InvalidInput("no example given (--example A1..A5)".into()))?.parse()?;
    build_example(id)
}

fn resolution(cfg: &Config, ex: &Example) -> Result<Resolution> {
    let Some(g) = cfg.get("grid") else { return Ok(ex.resolution.clone()) };
    match ex.resolution {
        Resolution::Step(_) => Ok(Resolution::Step(Scalar::parse_q(g)?)),
        Resolution::Depth(_) => g.parse().map(Resolution::Depth).map_err(|_| IvlError::InvalidInput(format!("grid for a block example is a depth, got {g:?}"))),
    }
}

fn epsilon(cfg: &Config, default: Q) -> Result<Q> {
    let eps = cfg.get("epsilon").map(Scalar::parse_q).transpose()?.unwrap_or(default);
    if eps <= q(0, 1) {
        return Err(IvlError::InvalidInput("epsilon must be positive".into()));
    }
    Ok(eps)
}

fn nmax(cfg: &Config, default: usize) -> Result<usize> {
    Ok(cfg.parsed::<usize>("nmax")?.unwrap_or(default))
}

fn point(ex: &Example, s: &str) -> Result<StatePoint> {
    match ex.system.space {
        StateSpace::Interval { .. } => Ok(StatePoint::real(Scalar::parse_q(s)?)),
        StateSpace::Symbolic { .. } => Ok(StatePoint::Symbolic(s.parse::<SymbolicPoint>()?)),
    }
}

/// A file under the output directory, or stdout.
fn output(cfg: &Config, name: &str) -> Result<Box<dyn Write>> {
    match cfg.out_dir() {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            Ok(Box::new(io::BufWriter::new(fs::File::create(dir.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit(cfg: &Config, name: &str, text: &str) -> Result<()> {
    let mut w = output(cfg, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn simulate(cfg: &Config) -> Result<()> {
    let ex = example(cfg)?;
    let x = point(&ex, cfg.get("x").ok_or_else(|| IvlError::InvalidInput("simulate needs --x".into()))?)?;
    let omega: ControlSchedule = cfg.get("omega").ok_or_else(|| IvlError::InvalidInput("simulate needs --omega".into()))?.parse()?;
    let n = nmax(cfg, 16)?;
    let mut w = output(cfg, "trajectory.csv")?;
    write_trajectory_csv(&mut w, &ex.system, &ex.target, &x, &omega, n)?;
    w.flush()?;
    Ok(())
}

fn span_mode(cfg: &Config) -> Result<Mode> {
    match cfg.get("mode") {
        None => Ok(Mode::Plain),
        Some("limsup") => Err(IvlError::InvalidInput("span supports --mode plain or mean".into())),
        Some(m) => m.parse(),
    }
}

/// Profile at the given parameters, through the cache when one is configured.
fn profile(cfg: &Config, ex: &Example, res: &Resolution, eps: &Q, n: usize, mode: Mode) -> Result<ComplexityProfile> {
    let budget = SpanBudget::default();
    let key = format!("span|{}|eps={}|{}|mode={}|n={}|{:?}", ex.id, fmt_q(eps), res, mode, n, budget);
    let path = cfg.cache_dir().map(|d| d.join(format!("span-{}-{:08x}.ivlk", ex.id.short(), crc32fast::hash(key.as_bytes()))));
    if let Some(p) = &path {
        if let Ok(bytes) = fs::read(p) {
            match decode_profile(&bytes, &key) {
                Ok((prof, _)) => return Ok(prof),
                Err(e) => eprintln!("cache {} rejected ({e}), recomputing", p.display()),
            }
        }
    }
    let grid = ivl_core::spanning::TargetGrid::new(&ex.target, res.clone())?;
    let prof = complexity_profile(&ex.system, &ex.target, &grid, eps, n, mode, &budget, Exec::Parallel)?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(p, encode_profile(&key, &prof, &[]))?;
    }
    Ok(prof)
}

fn verdict_str(v: &ComplexityVerdict) -> String {
    match v {
        ComplexityVerdict::BoundedEvidence(c) => format!("BoundedEvidence({c})"),
        ComplexityVerdict::GrowthEvidence => "GrowthEvidence".into(),
        ComplexityVerdict::Inconclusive(why) => format!("Inconclusive: {why}"),
    }
}

pub fn span(cfg: &Config) -> Result<()> {
    let ex = example(cfg)?;
    let mode = span_mode(cfg)?;
    let eps = epsilon(cfg, q(1, 10))?;
    let res = resolution(cfg, &ex)?;
    let prof = profile(cfg, &ex, &res, &eps, nmax(cfg, 16)?, mode)?;
    let mut w = output(cfg, &format!("profile-{mode}.csv"))?;
    write_profile_csv(&mut w, &prof)?;
    w.flush()?;
    let mut summary = format!("{} {mode} eps={} {} grid points={}\n", ex.id, fmt_q(&eps), res, prof.grid_len);
    let _ = writeln!(summary, "verdict: {}", verdict_str(&bounded_complexity_verdict(&prof)));
    if let Ok(est) = entropy_estimate(&prof) {
        let _ = writeln!(summary, "growth rate estimate at this eps: {:.6}{}", est.slope, if est.bound_only { " (bound only)" } else { "" });
    }
    if let Some(last) = prof.entries.last() {
        let words: Vec<String> = last.words.iter().map(|w| ivl_core::dynamics::word_str(w)).collect();
        let _ = writeln!(summary, "cover at n={}: {}", last.n, words.join(" "));
    }
    if cfg.out_dir().is_some() {
        emit(cfg, &format!("span-{mode}.txt"), &summary)
    } else {
        eprint!("{summary}");
        Ok(())
    }
}

fn notions_for(cfg: &Config) -> Result<Option<Vec<Notion>>> {
    if let Some(list) = cfg.get("notions") {
        return list.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<Notion>>>().map(Some);
    }
    Ok(match cfg.get("mode") {
        None => None,
        Some("plain") => Some(vec![Notion::EI, Notion::FEI]),
        Some("mean") => Some(vec![Notion::EIM, Notion::FEIM]),
        Some("limsup") => Some(vec![Notion::MEI, Notion::FMEI, Notion::FMLS]),
        Some(m) => return Err(IvlError::InvalidInput(format!("unknown mode {m:?}, expected plain, mean or limsup"))),
    })
}

fn describe_verdict(v: &Verdict) -> String {
    match v {
        Verdict::Certified(c) => format!("Certified delta={} family=[{}] {}", fmt_q(&c.delta), c.family.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "), c.horizon),
        Verdict::Refuted(r) => format!("RefutedAtResolution delta0={} N={}", fmt_q(&r.delta), r.horizon),
        Verdict::Inconclusive(why) => format!("Inconclusive ({why})"),
    }
}

fn set_lines(out: &mut String, r: &SetReport) {
    let _ = writeln!(out, "  {} eps={}: {} ({} of {} certified, {} refuted)", r.notion, fmt_q(&r.epsilon), r.summary(), r.certified(), r.points.len(), r.refuted().count());
    for (p, v) in r.points.iter().zip(&r.verdicts).filter(|(_, v)| !v.is_certified()).take(5) {
        let _ = writeln!(out, "    {p}: {}", describe_verdict(v));
    }
}

/// Theorem-audit inputs from whatever set reports exist; complexity
/// profiles are computed only when `nmax` is configured.
fn theorem_lines(cfg: &Config, ex: &Example, sets: &[&SetReport], out: &mut String) -> Result<usize> {
    let find = |n: Notion| sets.iter().copied().find(|r| r.notion == n);
    let with_profile = cfg.get("nmax").is_some();
    let mut plain = None;
    let mut mean = None;
    if with_profile {
        let res = resolution(cfg, ex)?;
        if let Some(r) = find(Notion::FEI) {
            plain = Some(bounded_complexity_verdict(&profile(cfg, ex, &res, &r.epsilon, nmax(cfg, 16)?, Mode::Plain)?));
        }
        if let Some(r) = find(Notion::FEIM) {
            mean = Some(bounded_complexity_verdict(&profile(cfg, ex, &res, &r.epsilon, nmax(cfg, 16)?, Mode::Mean)?));
        }
    }
    let fmei = find(Notion::FMEI);
    let fmls = find(Notion::FMLS).filter(|b| fmei.is_some_and(|a| a.epsilon == b.epsilon));
    let report = theorem_audit(TheoremInputs { fei: find(Notion::FEI), plain: plain.as_ref(), feim: find(Notion::FEIM), mean: mean.as_ref(), fmei, fmls });
    let _ = write!(out, "{report}");
    Ok(report.inconsistencies())
}

pub fn classify(cfg: &Config) -> Result<bool> {
    let ex = example(cfg)?;
    let notions = notions_for(cfg)?;
    let mut text = format!("classification of {}\n", ex.id);
    let mut records: Vec<Record> = Vec::new();
    let mut stored: Vec<(String, Verdict)> = Vec::new();
    let mut sets: Vec<SetReport> = Vec::new();
    match notions {
        Some(list) => {
            let res = resolution(cfg, &ex)?;
            let prob = ex.problem_at(res, Exec::Parallel)?;
            let eps = epsilon(cfg, q(1, 10))?;
            let budget = ex.budget();
            for n in list {
                let r = classify_set(&prob, n, &eps, &budget)?;
                set_lines(&mut text, &r);
                records.extend(Record::from_set(ex.id.short(), &r));
                stored.extend(r.points.iter().zip(&r.verdicts).map(|(p, v)| (format!("{} {n} {p}", ex.id.short()), v.clone())));
                sets.push(r);
            }
        }
        None => {
            let _ = writeln!(text, "claims matrix:");
            for res in reproduce_claims(&ex, Exec::Parallel)? {
                claim_lines(&mut text, &res);
                records.extend(res.records(ex.id));
                match res.outcome {
                    ClaimOutcome::Set(r) => {
                        stored.extend(r.points.iter().zip(&r.verdicts).map(|(p, v)| (format!("{} {} {p}", ex.id.short(), r.notion), v.clone())));
                        sets.push(r);
                    }
                    ClaimOutcome::Point(v) => stored.push((res.claim.to_string(), v)),
                }
            }
        }
    }
    let audit = implication_audit(&records);
    let _ = write!(text, "{audit}");
    let set_refs: Vec<&SetReport> = sets.iter().collect();
    let inconsistencies = theorem_lines(cfg, &ex, &set_refs, &mut text)?;
    let _ = writeln!(text, "audit inconsistencies: {}", audit.violations.len() + inconsistencies);
    emit(cfg, "classify-report.txt", &text)?;
    if let Some(dir) = cfg.out_dir() {
        fs::write(dir.join("witnesses.ivlw"), encode_witnesses(&format!("classify|{}", ex.id), &stored))?;
    }
    Ok(audit.violations.is_empty() && inconsistencies == 0)
}

fn claim_lines(out: &mut String, res: &ClaimResult) {
    let mark = if res.matches() { "ok" } else { "MISMATCH" };
    let _ = writeln!(out, "  {} -> {} [{mark}]", res.claim, res.label());
    match &res.outcome {
        ClaimOutcome::Point(v) => {
            let _ = writeln!(out, "    {}", describe_verdict(v));
        }
        ClaimOutcome::Set(r) if !res.matches() => set_lines(out, r),
        ClaimOutcome::Set(_) => {}
    }
}

pub fn controlset(cfg: &Config) -> Result<()> {
    let ex = example(cfg)?;
    let res = resolution(cfg, &ex)?;
    let prob = ex.problem_at(res.clone(), Exec::Parallel)?;
    let eps = epsilon(cfg, q(1, 10))?;
    let n = nmax(cfg, 3)?;
    let mut text = format!("control-set probes for {} at eps={} N={n}\n", ex.id, fmt_q(&eps));

    let x = match cfg.get("x") {
        Some(s) => point(&ex, s)?,
        None => prob.grid.points[0].clone(),
    };
    let reach = reachable_set(&ex.system, &x, n, &res, MAX_REACH_CELLS, Exec::Parallel)?;
    let _ = writeln!(text, "reach set from {x} within {n} steps: {} cells at {res}", reach.entries.len());
    if cfg.out_dir().is_some() {
        let mut w = output(cfg, "reach.csv")?;
        write_reach_csv(&mut w, &reach)?;
        w.flush()?;
    }

    let inv = controlled_invariance_check(&ex.system, &ex.target, &prob.grid, n.max(1), &eps, Exec::Parallel)?;
    let _ = writeln!(text, "controlled invariance: {} of {} grid points kept", inv.kept.len(), prob.grid.len());
    for p in inv.failing.iter().take(5) {
        let _ = writeln!(text, "  no keeping word at {p}");
    }

    let reachability = approx_reachability_check(&ex.system, &prob.grid, &eps, n, MAX_REACH_CELLS, Exec::Parallel)?;
    let _ = writeln!(text, "approximate reachability: min fraction {} ({} sources short of 1)", fmt_q(&reachability.min()), reachability.flagged().count());

    let mut samples: Vec<(StatePoint, ControlSchedule, usize)> = Vec::new();
    if let Some(o) = cfg.get("omega") {
        samples.push((x.clone(), o.parse()?, n));
    }
    if ex.id == ExampleId::A2_EIM_not_EI {
        samples.push((StatePoint::real(q(3, 8) + q(1, 64)), ex.candidates[0].clone(), 60));
    }
    for s in no_return_check(&ex.system, &ex.target, &samples, &eps)? {
        let status = match &s.status {
            ReturnStatus::Stayed => "stayed near Q".to_string(),
            ReturnStatus::Excursion { exit, back } => format!("FLAGGED: left at step {exit}, back at step {back}"),
            ReturnStatus::Skipped(why) => format!("skipped: {why}"),
        };
        let _ = writeln!(text, "no-return sample {} under {} for {} steps: {status}", s.point, s.schedule, s.steps);
    }

    let mode = match cfg.get("mode") {
        None | Some("mean") => DichotomyMode::Mean,
        Some("limsup") => DichotomyMode::LimsupMean,
        Some(m) => return Err(IvlError::InvalidInput(format!("controlset supports --mode mean or limsup, got {m:?}"))),
    };
    let k_default = (eps.recip()).ceil().to_integer().try_into().unwrap_or(u32::MAX);
    let k_max = cfg.parsed::<u32>("k_max")?.unwrap_or(k_default);
    let k_min = cfg.parsed::<u32>("k_min")?.unwrap_or(k_max);
    let probe = dichotomy_probe(&prob, k_min..=k_max, &ex.budget(), mode)?;
    if let Err(w) = &probe.hypothesis {
        eprintln!("warning: {w}");
    }
    let _ = write!(text, "{probe}");
    emit(cfg, "controlset-report.txt", &text)
}

pub fn example_list() -> Result<()> {
    for id in ExampleId::ALL {
        let ex = build_example(id)?;
        println!("{:<3} {:<22} {} controls, Q = {}", id.short(), id.to_string(), ex.system.alphabet_size(), ex.target.describe());
    }
    Ok(())
}

pub fn example_dump(id: &str) -> Result<()> {
    print!("{}", build_example(id.parse()?)?.describe());
    Ok(())
}

pub fn audit(cfg: &Config) -> Result<bool> {
    let ids: Vec<ExampleId> = match cfg.get("example") {
        Some(s) => vec![s.parse()?],
        None => ExampleId::ALL.to_vec(),
    };
    let mut text = String::new();
    let mut records = Vec::new();
    let mut mismatches = 0;
    let mut inconsistencies = 0;
    for id in ids {
        let ex = build_example(id)?;
        let _ = writeln!(text, "{id}");
        let results = reproduce_claims(&ex, Exec::Parallel)?;
        for r in &results {
            claim_lines(&mut text, r);
            mismatches += !r.matches() as usize;
            records.extend(r.records(id));
        }
        let sets: Vec<&SetReport> = results
            .iter()
            .filter_map(|r| match &r.outcome {
                ClaimOutcome::Set(s) => Some(s),
                ClaimOutcome::Point(_) => None,
            })
            .collect();
        inconsistencies += theorem_lines(cfg, &ex, &sets, &mut text)?;
    }
    let report = implication_audit(&records);
    let _ = write!(text, "{report}");
    let _ = writeln!(text, "claim mismatches: {mismatches}\naudit inconsistencies: {}", report.violations.len() + inconsistencies);
    emit(cfg, "audit-report.txt", &text)?;
    Ok(mismatches == 0 && report.violations.is_empty() && inconsistencies == 0)
}
