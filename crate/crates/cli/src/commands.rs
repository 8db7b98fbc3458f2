use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use epirisk::config::RunConfig;
use epirisk::detect::{
    build_features, confusion, stratified_split, write_forest, write_tree, Cohort, ConfusionCounts, DecisionTree,
    EmpiricalCdf, FeatureMatrix, ForestParams, Label, Metrics, RandomForest,
};
use epirisk::ingest::{CaseRegistry, ObservationWindow};
use epirisk::pipeline::{prepare, risk_maps, score_all};
use epirisk::riskfield::{
    parse_risk_map_file_name, read_risk_map, risk_map_file_name, risk_map_to_geojson, write_risk_map, CaseSet,
    RiskSeries,
};
use epirisk::score::{read_scores, write_scores, PersonScoreSeries, ScoreOptions};
use epirisk::simgen::{generate_world, simulate};
use epirisk::Corpus;

use crate::files::{create, load_config, open, parse_day_range, read_corpus, read_map_dir, read_registry, write_file};
use crate::{Command, Format, MethodArg};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, out } => simulate_cmd(&load_config(config.as_deref())?, &out),
        Command::Riskmap { traj, registry, days, out, config } => {
            riskmap_cmd(&load_config(config.as_deref())?, &traj, &registry, days.as_deref(), &out)
        }
        Command::Score { maps, traj, out, leave_one_out, registry, config } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.score.leave_one_out |= leave_one_out;
            score_cmd(&cfg, &maps, &traj, registry.as_deref(), &out)
        }
        Command::Detect { scores, registry, method, q, out, model_out, config } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(q) = q {
                if !(q > 0.0 && q < 1.0) {
                    bail!("--q must lie in (0, 1), got {q}");
                }
                cfg.detection.q = q;
                cfg.detection.sweep.q = q;
            }
            detect_cmd(&cfg, &scores, &registry, method, &out, model_out.as_deref())
        }
        Command::Export { map, format: Format::Geojson, out } => export_cmd(&map, &out),
        Command::Eval { sweep, out, traj, registry, keep_own_contribution, config } => {
            let cfg = load_config(config.as_deref())?;
            let source = traj.as_deref().zip(registry.as_deref());
            eval_cmd(&cfg, &sweep, source, !keep_own_contribution, &out)
        }
        Command::Config { config } => {
            print!("{}", load_config(config.as_deref())?.render());
            Ok(())
        }
    }
}

fn simulate_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let world = generate_world(&cfg.simulation)?;
    let sim = simulate(world)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("trajectories.csv"), |w| Ok(sim.write_trajectories(w)?))?;
    write_file(&out.join("registry.csv"), |w| Ok(sim.write_registry(w)?))?;
    log::info!(
        "simulated {} agents over {} days: {} records, {} confirmed",
        sim.world.agents.len(),
        cfg.simulation.n_days,
        sim.corpus.record_count(),
        sim.confirmed_count()
    );
    Ok(())
}

fn riskmap_cmd(cfg: &RunConfig, traj: &Path, registry: &Path, days: Option<&str>, out: &Path) -> Result<()> {
    let corpus = read_corpus(traj)?;
    let registry = read_registry(registry)?;
    let prepared = prepare(corpus, &cfg.pipeline, None);
    let data = prepared.day_range();
    let (a, b) = match (days, &data) {
        (Some(s), _) => parse_day_range(s, &cfg.pipeline.clock)?,
        (None, Some(r)) => (*r.start(), *r.end()),
        (None, None) => bail!("no trajectory data and no --days given"),
    };
    match &data {
        Some(r) if r.contains(&a) && r.contains(&b) => {}
        Some(r) => {
            log::warn!("days {a}..{b} extend beyond the data ({}..{}); uncovered days are all-zero", r.start(), r.end())
        }
        None => log::warn!("no trajectory data; all maps are zero"),
    }
    if registry.confirmed().next().is_none() {
        log::warn!("registry has no confirmed cases; all maps are zero");
    }
    let (_, series) = risk_maps(&prepared, &registry, &cfg.pipeline, a..=b)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (day, map) in &series.maps {
        write_file(&out.join(risk_map_file_name(*day)), |w| Ok(write_risk_map(w, map)?))?;
    }
    log::info!("wrote {} maps to {}", series.maps.len(), out.display());
    Ok(())
}

fn score_cmd(cfg: &RunConfig, maps: &Path, traj: &Path, registry: Option<&Path>, out: &Path) -> Result<()> {
    if cfg.score.leave_one_out && registry.is_none() {
        bail!("leave-one-out scoring needs --registry");
    }
    let corpus = read_corpus(traj)?;
    let prepared = prepare(corpus, &cfg.pipeline, None);
    let series = RiskSeries::from_maps(prepared.corpus.cells(), read_map_dir(maps)?, &cfg.pipeline.decay);
    let cases = match registry {
        Some(p) => CaseSet::resolve(
            &read_registry(p)?,
            &cfg.pipeline.clock,
            &prepared.corpus,
            cfg.pipeline.decay.recovery_days,
        ),
        None => CaseSet::default(),
    };
    let scores = score_all(&prepared, &cases, &series, &cfg.pipeline, &cfg.score);
    write_file(out, |w| Ok(write_scores(w, &scores)?))?;
    log::info!("scored {} users", scores.len());
    Ok(())
}

type Predictor = Box<dyn Fn(&[f64]) -> Label>;

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |x| format!("{x:.6}"))
}

fn write_metrics<W: Write>(w: &mut W, c: &ConfusionCounts, m: &Metrics) -> std::io::Result<()> {
    writeln!(w, "# tp = {}, fp = {}, tn = {}, fn = {}", c.tp, c.fp, c.tn, c.fn_)?;
    writeln!(w, "# dr = {}, far = {}, acc = {}", fmt_metric(m.dr), fmt_metric(m.far), fmt_metric(m.acc))
}

fn cohort_features(
    cfg: &RunConfig,
    scores: &[PersonScoreSeries],
    registry: &CaseRegistry,
) -> Result<(Cohort, FeatureMatrix)> {
    let days = cfg.detection.feature_days;
    let cohort = Cohort::build(scores, registry, &cfg.pipeline.clock, days, None)?;
    if cohort.excluded > 0 {
        log::info!("{} confirmed users fall outside the usable score range", cohort.excluded);
    }
    let m = build_features(scores, &cohort, days)?;
    log::info!("cohort: {} normal, {} confirmed", cohort.count(Label::Normal), cohort.count(Label::Confirmed));
    Ok((cohort, m))
}

fn detect_cmd(
    cfg: &RunConfig,
    scores: &Path,
    registry: &Path,
    method: MethodArg,
    out: &Path,
    model_out: Option<&Path>,
) -> Result<()> {
    let scores = read_scores(open(scores)?, cfg.pipeline.decay.incubation_days)?;
    let registry = read_registry(registry)?;
    let (cohort, m) = cohort_features(cfg, &scores, &registry)?;
    let eval_days: Vec<i64> = cohort.members.iter().map(|c| c.eval_day).collect();
    let mut w = create(out)?;
    match method {
        MethodArg::Stat => {
            let normals: Vec<f64> =
                (0..m.len()).filter(|&i| m.labels[i] == Label::Normal).map(|i| m.window_scores[i]).collect();
            let null = EmpiricalCdf::fit(&normals).context("fitting the normal-score distribution")?;
            let threshold = null.critical_value(cfg.detection.q)?;
            let flags: Vec<bool> = m.window_scores.iter().map(|&s| s > threshold).collect();
            let pred = |f: bool| if f { Label::Confirmed } else { Label::Normal };
            let counts = confusion(flags.iter().map(|&f| pred(f)).zip(m.labels.iter().copied()));
            writeln!(w, "# method = stat")?;
            writeln!(w, "# q = {}", cfg.detection.q)?;
            writeln!(w, "# threshold = {threshold:?}")?;
            writeln!(w, "# normal_sample = {}", null.len())?;
            write_metrics(&mut w, &counts, &counts.metrics())?;
            writeln!(w, "user_id,eval_day,label,score,p_value,suspected")?;
            for i in 0..m.len() {
                let s = m.window_scores[i];
                writeln!(
                    w,
                    "{},{},{},{s:?},{:?},{}",
                    m.user_ids[i],
                    eval_days[i],
                    m.labels[i].as_str(),
                    null.p_value(s),
                    flags[i]
                )?;
            }
        }
        MethodArg::Tree | MethodArg::Forest => {
            let sweep = &cfg.detection.sweep;
            let (train, test) = stratified_split(&m.labels, sweep.train_fraction, cfg.seed)?;
            let (tr, te) = (m.subset(&train), m.subset(&test));
            let (name, predict): (&str, Predictor) = if method == MethodArg::Tree {
                let tree = DecisionTree::fit(&tr, &sweep.tree)?;
                if let Some(p) = model_out {
                    write_file(p, |f| Ok(write_tree(f, &tree)?))?;
                }
                ("tree", Box::new(move |x| tree.predict(x)))
            } else {
                let forest = RandomForest::fit(&tr, &ForestParams { tree: sweep.tree, ..sweep.forest })?;
                if let Some(p) = model_out {
                    write_file(p, |f| Ok(write_forest(f, &forest)?))?;
                }
                ("forest", Box::new(move |x| forest.predict(x)))
            };
            let preds: Vec<Label> = (0..te.len()).map(|i| predict(te.row(i))).collect();
            let counts = confusion(preds.iter().copied().zip(te.labels.iter().copied()));
            writeln!(w, "# method = {name}")?;
            writeln!(w, "# seed = {}", cfg.seed)?;
            writeln!(w, "# train = {}, test = {}", tr.len(), te.len())?;
            write_metrics(&mut w, &counts, &counts.metrics())?;
            writeln!(w, "user_id,eval_day,label,predicted")?;
            for (k, &i) in test.iter().enumerate() {
                writeln!(w, "{},{},{},{}", m.user_ids[i], eval_days[i], m.labels[i].as_str(), preds[k].as_str())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn export_cmd(map: &Path, out: &Path) -> Result<()> {
    let name = map.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let Some(day) = parse_risk_map_file_name(name) else {
        bail!("cannot read the day from `{name}`; expected riskmap_DAY.csv");
    };
    let m = read_risk_map(open(map)?, day).with_context(|| format!("reading {}", map.display()))?;
    write_file(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &risk_map_to_geojson(&m))?;
        writeln!(w)?;
        Ok(())
    })
}

fn eval_cmd(
    cfg: &RunConfig,
    sweep_pct: &[f64],
    source: Option<(&Path, &Path)>,
    leave_one_out: bool,
    out: &Path,
) -> Result<()> {
    let rates: Vec<f64> = if sweep_pct.is_empty() {
        cfg.detection.sweep_rates.clone()
    } else {
        sweep_pct.iter().map(|p| p / 100.0).collect()
    };
    if let Some(r) = rates.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        bail!("infection rate {}% outside (0, 100)", r * 100.0);
    }
    let (corpus, registry, window): (Corpus, CaseRegistry, Option<ObservationWindow>) = match source {
        Some((traj, reg)) => (read_corpus(traj)?, read_registry(reg)?, None),
        None => {
            let sim = simulate(generate_world(&cfg.simulation)?)?;
            log::info!("simulated corpus: {} records, {} confirmed", sim.corpus.record_count(), sim.confirmed_count());
            let w = sim.window();
            (sim.corpus, sim.registry, Some(w))
        }
    };
    let prepared = prepare(corpus, &cfg.pipeline, window);
    let Some(days) = prepared.day_range() else { bail!("corpus has no usable days") };
    let (cases, series) = risk_maps(&prepared, &registry, &cfg.pipeline, days)?;
    let options = ScoreOptions { leave_one_out, ..cfg.score };
    let scores = score_all(&prepared, &cases, &series, &cfg.pipeline, &options);
    let (_, pool) = cohort_features(cfg, &scores, &registry)?;
    let rows = epirisk::detect::evaluate_sweep(&pool, &rates, &cfg.detection.sweep)?;

    let mut w = create(out)?;
    writeln!(
        w,
        "# seed = {}, repeats = {}, train_fraction = {}",
        cfg.seed, cfg.detection.sweep.repeats, cfg.detection.sweep.train_fraction
    )?;
    writeln!(w, "rate,method,n_confirmed,n_normal,tp,fp,tn,fn,acc,dr,far,wall_s")?;
    for r in &rows {
        let c = r.counts;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            r.rate,
            r.method.as_str(),
            r.n_confirmed,
            r.n_normal,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            fmt_metric(r.metrics.acc),
            fmt_metric(r.metrics.dr),
            fmt_metric(r.metrics.far),
            r.wall_s
        )?;
        log::info!("{:>5.1}% {:<6} acc {}", r.rate * 100.0, r.method.as_str(), fmt_metric(r.metrics.acc));
    }
    w.flush()?;
    Ok(())
}
