//! The pipeline stages. Each stage reads the previous stage's files, so any
//! stage can be rerun on its own once its inputs exist.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use egolink_core::aggregation::{self, rankmerge_apply, tune_g, MergeModel};
use egolink_core::ego::{
    build_ego_networks, sample_egos, split_degree_classes, write_ego_dump, write_split_manifest,
    SplitSet,
};
use egolink_core::eval::{
    contribution_trace, pr_curve, precision_improvement, summarize, write_contribution_csv,
    write_curve_csv, write_summary_csv, EvalSummary,
};
use egolink_core::events::{parse_events, preprocess, write_events, ParseReport};
use egolink_core::features::{compute_scores, ScoreId, ScoreTable};
use egolink_core::ranking::{build_ranking, spearman_matrix};
use egolink_core::synth;
use egolink_core::{
    CleanInteractionSet, DegreeClass, EgoNetwork, NodeId, ObservationWindow, PairLabels, Ranking,
    RankingId,
};

use crate::config::{Aggregator, Settings};
use crate::error::{CliError, IoContext, Result};
use crate::workspace::{
    class_dir, file_digest, fingerprint, open, set_dir, write_file, Manifest, Stage, Workspace,
};

type SplitMap = BTreeMap<DegreeClass, BTreeMap<SplitSet, Vec<NodeId>>>;

/// Returns `false` (and says so) when the stage is already up to date.
fn needs_run(ws: &Workspace, stage: Stage, fp: &str, force: bool) -> Result<bool> {
    if !force {
        if let Some(m) = ws.manifest(stage)? {
            if m.fingerprint == fp {
                eprintln!("{}: up to date", stage.name());
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn manifest(stage: Stage, fp: String) -> Manifest {
    Manifest {
        stage: stage.name().into(),
        fingerprint: fp,
        window_start: None,
        window_end: None,
    }
}

fn read_log(path: &Path, window: ObservationWindow, strict: bool) -> Result<ParseReport> {
    parse_events(open(path)?, window, strict)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn input_path(s: &Settings) -> Result<&Path> {
    s.raw
        .input
        .as_deref()
        .ok_or_else(|| CliError::usage("no input log; set `input` in the config or pass --input"))
}

// ---------------------------------------------------------------------------
// summary statistics

fn summary_rows(report: &ParseReport, clean: &CleanInteractionSet) -> Vec<(&'static str, String)> {
    let calls = clean.events().iter().filter(|e| e.duration().is_some()).count();
    let window = clean.window();
    vec![
        ("parsed_events", report.events.len().to_string()),
        ("rejected_lines", report.rejected.len().to_string()),
        ("out_of_window", report.out_of_window.to_string()),
        ("clean_events", clean.events().len().to_string()),
        ("calls", calls.to_string()),
        ("texts", (clean.events().len() - calls).to_string()),
        ("nodes", clean.node_count().to_string()),
        ("links", clean.link_count().to_string()),
        ("window_start", window.start().to_string()),
        ("window_end", window.end().to_string()),
    ]
}

fn write_distributions(dir: &Path, clean: &CleanInteractionSet) -> Result<()> {
    let mut degree: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut activity: BTreeMap<u64, usize> = BTreeMap::new();
    for (pair, w) in clean.weights() {
        *degree.entry(pair.lo()).or_default() += 1;
        *degree.entry(pair.hi()).or_default() += 1;
        *activity.entry(w.total()).or_default() += 1;
    }
    let mut degree_hist: BTreeMap<usize, usize> = BTreeMap::new();
    for k in degree.values() {
        *degree_hist.entry(*k).or_default() += 1;
    }
    write_file(&dir.join("degrees.csv"), |out| {
        writeln!(out, "degree,nodes")?;
        for (k, n) in &degree_hist {
            writeln!(out, "{k},{n}")?;
        }
        Ok(())
    })?;
    write_file(&dir.join("activity.csv"), |out| {
        writeln!(out, "weight,links")?;
        for (w, n) in &activity {
            writeln!(out, "{w},{n}")?;
        }
        Ok(())
    })
}

fn print_rows(rows: &[(&str, String)]) {
    println!("metric,value");
    for (k, v) in rows {
        println!("{k},{v}");
    }
}

pub fn stats(s: &Settings) -> Result<()> {
    let path = input_path(s)?;
    let report = read_log(path, s.window, s.raw.strict)?;
    let clean = preprocess(&report.events, s.window);
    print_rows(&summary_rows(&report, &clean));
    if let Some(dir) = &s.raw.output {
        write_distributions(dir, &clean)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest

pub fn ingest(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let path = input_path(s)?;
    let fp = fingerprint(&[
        ("input", file_digest(path)?.as_bytes()),
        ("window", format!("{:?}", s.window).as_bytes()),
        ("strict", &[s.raw.strict as u8]),
    ]);
    if !needs_run(ws, Stage::Ingest, &fp, force)? {
        return Ok(());
    }
    let report = read_log(path, s.window, s.raw.strict)?;
    let clean = preprocess(&report.events, s.window);
    let dir = ws.reset(Stage::Ingest)?;
    write_file(&dir.join("clean.csv"), |out| write_events(out, clean.events()))?;
    write_file(&dir.join("rejected.csv"), |out| {
        writeln!(out, "line,reason")?;
        for r in &report.rejected {
            writeln!(out, "{},\"{}\"", r.line, r.reason.replace('"', "\"\""))?;
        }
        Ok(())
    })?;
    let rows = summary_rows(&report, &clean);
    write_file(&dir.join("summary.csv"), |out| {
        writeln!(out, "metric,value")?;
        for (k, v) in &rows {
            writeln!(out, "{k},{v}")?;
        }
        Ok(())
    })?;
    write_distributions(&dir, &clean)?;
    for r in report.rejected.iter().take(5) {
        eprintln!("warning: line {} rejected: {}", r.line, r.reason);
    }
    print_rows(&rows);
    ws.complete(
        Stage::Ingest,
        &Manifest {
            window_start: Some(clean.window().start()),
            window_end: Some(clean.window().end()),
            ..manifest(Stage::Ingest, fp)
        },
    )
}

fn load_clean(ws: &Workspace, by: Stage) -> Result<CleanInteractionSet> {
    let m = ws.require(Stage::Ingest, by)?;
    let window = ObservationWindow::new(
        m.window_start.unwrap_or(i64::MIN),
        m.window_end.unwrap_or(i64::MAX),
    )
    .map_err(CliError::data)?;
    let report = read_log(&ws.stage_dir(Stage::Ingest).join("clean.csv"), window, true)?;
    Ok(preprocess(&report.events, window))
}

// ---------------------------------------------------------------------------
// split

fn read_ego_list(path: &Path) -> Result<BTreeSet<NodeId>> {
    let mut ids = BTreeSet::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.at(path)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        ids.insert(t.parse().map_err(|e| {
            CliError::data(format!("{} line {}: {e}", path.display(), idx + 1))
        })?);
    }
    Ok(ids)
}

pub fn split(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Ingest, Stage::Split)?;
    let egos_digest = match &s.raw.egos {
        Some(p) => file_digest(p)?,
        None => String::new(),
    };
    let settings = format!(
        "{:?} {} {} {:?}",
        s.proportions, s.raw.seed, s.raw.min_class_size, s.scheme
    );
    let fp = fingerprint(&[
        ("upstream", upstream.fingerprint.as_bytes()),
        ("settings", settings.as_bytes()),
        ("egos", egos_digest.as_bytes()),
    ]);
    if !needs_run(ws, Stage::Split, &fp, force)? {
        return Ok(());
    }
    let clean = load_clean(ws, Stage::Split)?;
    let only = s.raw.egos.as_deref().map(read_ego_list).transpose()?;
    let egos = build_ego_networks(&clean, only.as_ref());
    let outcome = split_degree_classes(
        &egos,
        s.scheme,
        s.proportions,
        s.raw.seed,
        s.raw.min_class_size,
    )
    .map_err(CliError::usage)?;
    let dir = ws.reset(Stage::Split)?;
    write_file(&dir.join("split.csv"), |out| write_split_manifest(out, &outcome.splits))?;
    write_file(&dir.join("egos.csv"), |out| write_ego_dump(out, &egos))?;
    write_file(&dir.join("warnings.txt"), |out| {
        for w in &outcome.warnings {
            writeln!(out, "{w}")?;
        }
        Ok(())
    })?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("class,egos,learn,valid,test");
    for (class, sp) in &outcome.splits {
        println!(
            "{class},{},{},{},{}",
            sp.len(),
            sp.learning.len(),
            sp.validation.len(),
            sp.test.len()
        );
    }
    ws.complete(Stage::Split, &manifest(Stage::Split, fp))
}

fn load_split(ws: &Workspace, by: Stage) -> Result<SplitMap> {
    ws.require(Stage::Split, by)?;
    let path = ws.stage_dir(Stage::Split).join("split.csv");
    let mut map = SplitMap::new();
    for (idx, line) in open(&path)?.lines().enumerate() {
        let line = line.at(&path)?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let bad = |reason: String| CliError::data(format!("{} line {}: {reason}", path.display(), idx + 1));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(bad("expected ego,class,set".into()));
        }
        let ego: NodeId = cells[0].parse().map_err(|e| bad(format!("{e}")))?;
        let class: DegreeClass = cells[1].parse().map_err(|e| bad(format!("{e}")))?;
        let set: SplitSet = cells[2].parse().map_err(bad)?;
        map.entry(class).or_default().entry(set).or_default().push(ego);
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// score

fn classes_file(ws: &Workspace) -> PathBuf {
    ws.stage_dir(Stage::Score).join("classes.txt")
}

fn scored_classes(ws: &Workspace, by: Stage) -> Result<Vec<DegreeClass>> {
    ws.require(Stage::Score, by)?;
    let path = classes_file(ws);
    let mut out = Vec::new();
    for line in open(&path)?.lines() {
        let line = line.at(&path)?;
        if !line.is_empty() {
            out.push(line.parse().map_err(CliError::data)?);
        }
    }
    Ok(out)
}

pub fn score(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Split, Stage::Score)?;
    let settings = format!(
        "{:?} {} {} {:?} {:?} {}",
        s.scores, s.raw.f_min, s.raw.tz, s.classes, s.raw.sample, s.raw.seed
    );
    let fp = fingerprint(&[
        ("upstream", upstream.fingerprint.as_bytes()),
        ("settings", settings.as_bytes()),
    ]);
    if !needs_run(ws, Stage::Score, &fp, force)? {
        return Ok(());
    }
    let split = load_split(ws, Stage::Score)?;
    let clean = load_clean(ws, Stage::Score)?;
    let wanted: BTreeSet<NodeId> = split
        .iter()
        .filter(|(class, _)| s.wants_class(**class))
        .flat_map(|(_, sets)| sets.values().flatten().copied())
        .collect();
    let egos = build_ego_networks(&clean, Some(&wanted));
    let by_id: BTreeMap<NodeId, &EgoNetwork> = egos.iter().map(|e| (e.ego(), e)).collect();
    let dir = ws.reset(Stage::Score)?;
    let mut classes = Vec::new();
    for (class, sets) in &split {
        if !s.wants_class(*class) {
            continue;
        }
        classes.push(*class);
        for set in SplitSet::ALL {
            let mut ids = sets.get(&set).cloned().unwrap_or_default();
            ids.sort_unstable();
            if let Some(n) = s.raw.sample {
                ids = sample_egos(&ids, n, s.raw.seed);
            }
            let refs = ids
                .iter()
                .map(|id| {
                    by_id.get(id).copied().ok_or_else(|| {
                        CliError::data(format!("ego {id} of the split is missing from the log"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let table = compute_scores(&refs, &s.scoring);
            let path = set_dir(&dir, *class, set).with_extension("csv");
            write_file(&path, |out| table.write_wide_csv(out))?;
        }
    }
    if classes.is_empty() {
        return Err(CliError::data("no degree class left to score"));
    }
    write_file(&classes_file(ws), |out| {
        for c in &classes {
            writeln!(out, "{c}")?;
        }
        Ok(())
    })?;
    println!("scored {} classes, {} scores", classes.len(), s.scores.len());
    ws.complete(Stage::Score, &manifest(Stage::Score, fp))
}

fn load_table(ws: &Workspace, class: DegreeClass, set: SplitSet) -> Result<ScoreTable> {
    let path = set_dir(&ws.stage_dir(Stage::Score), class, set).with_extension("csv");
    ScoreTable::read_wide_csv(open(&path)?)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// rank

fn ranking_path(dir: &Path, class: DegreeClass, set: SplitSet, id: RankingId) -> PathBuf {
    set_dir(dir, class, set).join(format!("{id}.csv"))
}

fn read_ranking(path: &Path, id: RankingId, universe: usize) -> Result<Ranking> {
    Ranking::read_csv(open(path)?, id, universe)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn rank(ws: &Workspace, _s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Score, Stage::Rank)?;
    let fp = fingerprint(&[("upstream", upstream.fingerprint.as_bytes())]);
    if !needs_run(ws, Stage::Rank, &fp, force)? {
        return Ok(());
    }
    let classes = scored_classes(ws, Stage::Rank)?;
    let dir = ws.reset(Stage::Rank)?;
    for class in classes {
        for set in SplitSet::ALL {
            let table = load_table(ws, class, set)?;
            let rankings = table
                .ids()
                .iter()
                .map(|&id| build_ranking(&table, id).map_err(CliError::internal))
                .collect::<Result<Vec<_>>>()?;
            for r in &rankings {
                write_file(&ranking_path(&dir, class, set, r.id()), |out| r.write_csv(out))?;
            }
            if set == SplitSet::Learning {
                let matrix = spearman_matrix(&rankings);
                let path = dir.join(class_dir(class)).join("spearman_learn.csv");
                write_file(&path, |out| matrix.write_csv(out))?;
            }
        }
    }
    ws.complete(Stage::Rank, &manifest(Stage::Rank, fp))
}

fn score_rankings(
    ws: &Workspace,
    class: DegreeClass,
    set: SplitSet,
    table: &ScoreTable,
) -> Result<Vec<Ranking>> {
    let dir = ws.stage_dir(Stage::Rank);
    table
        .ids()
        .iter()
        .map(|&id| read_ranking(&ranking_path(&dir, class, set, id.into()), id.into(), table.len()))
        .collect()
}

// ---------------------------------------------------------------------------
// aggregate

fn aggregator_id(a: Aggregator) -> RankingId {
    match a {
        Aggregator::Borda => RankingId::Borda,
        Aggregator::Medrank => RankingId::Medrank,
    }
}

pub fn aggregate(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Rank, Stage::Aggregate)?;
    let fp = fingerprint(&[
        ("upstream", upstream.fingerprint.as_bytes()),
        ("aggregators", format!("{:?}", s.aggregators).as_bytes()),
    ]);
    if !needs_run(ws, Stage::Aggregate, &fp, force)? {
        return Ok(());
    }
    let classes = scored_classes(ws, Stage::Aggregate)?;
    let dir = ws.reset(Stage::Aggregate)?;
    for class in classes {
        for set in SplitSet::ALL {
            let table = load_table(ws, class, set)?;
            let inputs = score_rankings(ws, class, set, &table)?;
            let refs: Vec<&Ranking> = inputs.iter().collect();
            for &a in &s.aggregators {
                let out = match a {
                    Aggregator::Borda => aggregation::borda(&refs),
                    Aggregator::Medrank => aggregation::medrank(&refs),
                }
                .map_err(CliError::internal)?;
                write_file(&ranking_path(&dir, class, set, aggregator_id(a)), |w| out.write_csv(w))?;
            }
        }
    }
    ws.complete(Stage::Aggregate, &manifest(Stage::Aggregate, fp))
}

/// Score rankings followed by the aggregated ones, as fed to the merge.
fn merge_inputs(
    ws: &Workspace,
    s: &Settings,
    class: DegreeClass,
    set: SplitSet,
    table: &ScoreTable,
) -> Result<Vec<Ranking>> {
    let mut out = score_rankings(ws, class, set, table)?;
    let dir = ws.stage_dir(Stage::Aggregate);
    for &a in &s.aggregators {
        let id = aggregator_id(a);
        out.push(read_ranking(&ranking_path(&dir, class, set, id), id, table.len())?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// merge

fn model_path(ws: &Workspace, class: DegreeClass) -> PathBuf {
    ws.stage_dir(Stage::Merge).join(class_dir(class)).join("model.txt")
}

pub fn merge(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Aggregate, Stage::Merge)?;
    let settings = format!("{:?} {}", s.raw.g_grid, s.replay);
    let fp = fingerprint(&[
        ("upstream", upstream.fingerprint.as_bytes()),
        ("settings", settings.as_bytes()),
    ]);
    if !needs_run(ws, Stage::Merge, &fp, force)? {
        return Ok(());
    }
    let classes = scored_classes(ws, Stage::Merge)?;
    let dir = ws.reset(Stage::Merge)?;
    let mut skipped = Vec::new();
    println!("class,g,validation_auc_pr");
    for class in classes {
        let tables: BTreeMap<SplitSet, ScoreTable> = SplitSet::ALL
            .iter()
            .map(|&set| Ok((set, load_table(ws, class, set)?)))
            .collect::<Result<_>>()?;
        let labels: BTreeMap<SplitSet, PairLabels> = tables
            .iter()
            .map(|(set, t)| (*set, PairLabels::from_pairs(t.pairs())))
            .collect();
        let learn_pos = labels[&SplitSet::Learning].positives();
        let valid_pos = labels[&SplitSet::Validation].positives();
        if learn_pos == 0 || valid_pos == 0 {
            let msg = format!(
                "class {class}: no merge ({learn_pos} learning and {valid_pos} validation positives)"
            );
            eprintln!("warning: {msg}");
            skipped.push(msg);
            continue;
        }
        let inputs: BTreeMap<SplitSet, Vec<Ranking>> = SplitSet::ALL
            .iter()
            .map(|&set| Ok((set, merge_inputs(ws, s, class, set, &tables[&set])?)))
            .collect::<Result<_>>()?;
        let refs = |set: SplitSet| -> Vec<&Ranking> { inputs[&set].iter().collect() };
        let tuning = tune_g(
            &refs(SplitSet::Learning),
            &labels[&SplitSet::Learning],
            &refs(SplitSet::Validation),
            &labels[&SplitSet::Validation],
            &s.raw.g_grid,
            class,
            s.replay,
        )
        .map_err(CliError::internal)?;
        let class_root = dir.join(class_dir(class));
        write_file(&class_root.join("model.txt"), |out| tuning.model.write(out))?;
        write_file(&class_root.join("tuning.csv"), |out| {
            writeln!(out, "g,validation_auc_pr")?;
            for (g, auc) in &tuning.scores {
                writeln!(out, "{g},{auc}")?;
            }
            Ok(())
        })?;
        let best = tuning.scores.iter().find(|(g, _)| *g == tuning.g).map(|x| x.1);
        println!("{class},{},{}", tuning.g, best.unwrap_or(f64::NAN));
        for set in SplitSet::ALL {
            let merged = rankmerge_apply(&tuning.model, &refs(set), s.replay)
                .map_err(CliError::internal)?;
            let root = set_dir(&dir, class, set);
            write_file(&root.join("rankmerge.csv"), |out| merged.ranking.write_csv(out))?;
            write_file(&root.join("sources.csv"), |out| {
                writeln!(out, "n,ranking")?;
                for (n, &k) in merged.sources.iter().enumerate() {
                    writeln!(out, "{},{}", n + 1, tuning.model.ranking_ids[k])?;
                }
                Ok(())
            })?;
        }
    }
    write_file(&dir.join("skipped.txt"), |out| {
        for m in &skipped {
            writeln!(out, "{m}")?;
        }
        Ok(())
    })?;
    ws.complete(Stage::Merge, &manifest(Stage::Merge, fp))
}

fn read_sources(path: &Path, ids: &[RankingId]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.at(path)?;
        if idx == 0 || line.is_empty() {
            continue;
        }
        let id: RankingId = line
            .split_once(',')
            .map(|(_, id)| id)
            .unwrap_or_default()
            .parse()
            .map_err(CliError::data)?;
        let k = ids
            .iter()
            .position(|x| *x == id)
            .ok_or_else(|| CliError::data(format!("{}: unknown ranking {id}", path.display())))?;
        out.push(k);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// eval

pub fn eval(ws: &Workspace, s: &Settings, force: bool) -> Result<()> {
    let upstream = ws.require(Stage::Merge, Stage::Eval)?;
    let output = s.output_dir();
    let fp = fingerprint(&[
        ("upstream", upstream.fingerprint.as_bytes()),
        ("output", output.to_string_lossy().as_bytes()),
    ]);
    if !needs_run(ws, Stage::Eval, &fp, force)? {
        return Ok(());
    }
    let classes = scored_classes(ws, Stage::Eval)?;
    ws.reset(Stage::Eval)?;
    if output.exists() && s.raw.output.is_none() {
        std::fs::remove_dir_all(&output).at(&output)?;
    }
    let mut all: Vec<(DegreeClass, SplitSet, EvalSummary)> = Vec::new();
    for class in classes {
        let model = {
            let path = model_path(ws, class);
            path.exists()
                .then(|| {
                    MergeModel::read(open(&path)?)
                        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
                })
                .transpose()?
        };
        if let Some(m) = &model {
            write_file(&output.join(class_dir(class)).join("phi.csv"), |out| {
                writeln!(out, "ranking,phi")?;
                for (id, phi) in m.ranking_ids.iter().zip(m.phi()) {
                    writeln!(out, "{id},{phi}")?;
                }
                Ok(())
            })?;
        }
        for set in SplitSet::ALL {
            let table = load_table(ws, class, set)?;
            let labels = PairLabels::from_pairs(table.pairs());
            if labels.positives() == 0 {
                continue;
            }
            let mut rankings = merge_inputs(ws, s, class, set, &table)?;
            let merge_dir = set_dir(&ws.stage_dir(Stage::Merge), class, set);
            let mut sources = None;
            if let Some(m) = &model {
                rankings.push(read_ranking(
                    &merge_dir.join("rankmerge.csv"),
                    RankingId::RankMerge,
                    table.len(),
                )?);
                sources = Some(read_sources(&merge_dir.join("sources.csv"), &m.ranking_ids)?);
            }
            let refs: Vec<&Ranking> = rankings.iter().collect();
            let baseline = RankingId::Score(ScoreId::S5);
            let rows = summarize(&refs, &labels, baseline).map_err(CliError::internal)?;
            let out_dir = set_dir(&output, class, set);
            write_file(&out_dir.join("summary.csv"), |out| write_summary_csv(out, &rows))?;
            let curves = rankings
                .iter()
                .map(|r| pr_curve(r.entries(), &labels).map_err(CliError::internal))
                .collect::<Result<Vec<_>>>()?;
            for (r, curve) in rankings.iter().zip(&curves) {
                let path = out_dir.join("curves").join(format!("{}.csv", r.id()));
                write_file(&path, |out| write_curve_csv(out, curve))?;
            }
            if let Some(base) = rankings.iter().position(|r| r.id() == baseline) {
                write_file(&out_dir.join("precision_improvement.csv"), |out| {
                    writeln!(out, "n,ranking,precision_improvement")?;
                    for (r, curve) in rankings.iter().zip(&curves) {
                        for (n, v) in precision_improvement(curve, &curves[base]).iter().enumerate() {
                            let v = v.map(|x| x.to_string()).unwrap_or_default();
                            writeln!(out, "{},{},{v}", n + 1, r.id())?;
                        }
                    }
                    Ok(())
                })?;
            }
            if let (Some(m), Some(src)) = (&model, &sources) {
                let trace = contribution_trace(src, m.ranking_ids.len());
                write_file(&out_dir.join("contributions.csv"), |out| {
                    write_contribution_csv(out, &m.ranking_ids, &trace)
                })?;
            }
            all.extend(rows.into_iter().map(|r| (class, set, r)));
        }
    }
    write_file(&output.join("summary.csv"), |out| {
        writeln!(out, "class,set,ranking,length,auc_pr,improvement")?;
        for (class, set, r) in &all {
            let imp = r.improvement.map(|x| x.to_string()).unwrap_or_default();
            writeln!(out, "{class},{set},{},{},{},{imp}", r.id, r.length, r.auc_pr)?;
        }
        Ok(())
    })?;
    println!("class,ranking,test_auc_pr,improvement");
    for (class, set, r) in &all {
        if *set == SplitSet::Test
            && matches!(r.id, RankingId::RankMerge | RankingId::Borda | RankingId::Medrank)
            || (*set == SplitSet::Test && r.id == RankingId::Score(ScoreId::S5))
        {
            let imp = r.improvement.map(|x| format!("{x:+.4}")).unwrap_or_default();
            println!("{class},{},{:.6},{imp}", r.id, r.auc_pr);
        }
    }
    ws.complete(Stage::Eval, &manifest(Stage::Eval, fp))
}

// ---------------------------------------------------------------------------
// synth

pub fn synth(s: &Settings, out: &Path) -> Result<()> {
    let data = synth::generate(&s.raw.synth).map_err(CliError::usage)?;
    std::fs::create_dir_all(out).at(out)?;
    write_file(&out.join("events.csv"), |w| write_events(w, &data.events))?;
    write_file(&out.join("truth.csv"), |w| data.write_truth(w))?;
    write_file(&out.join("egos.txt"), |w| data.write_egos(w))?;
    let echo = toml::to_string(&s.raw.synth).map_err(CliError::internal)?;
    let path = out.join("synth.toml");
    std::fs::write(&path, echo).at(&path)?;
    println!(
        "{} events, {} egos, {} planted links -> {}",
        data.events.len(),
        data.egos.len(),
        data.truth.len(),
        out.display()
    );
    Ok(())
}
