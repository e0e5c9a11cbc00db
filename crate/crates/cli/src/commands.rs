use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use tspn::convert::{convert, InitKind, YScaling};
use tspn::eval::{self, profile_csv, profile_svg, ProfileSets};
use tspn::learn::{learn_spn, Dataset};
use tspn::{Error, Evidence, Model, SpnGraph, State, TensorTrain};

use crate::config::{set, FileConfig};
use crate::manifest::{sibling, RunManifest};
use crate::{Cli, Command, ConvertArgs, EvalArgs, InferArgs, InitArg, LearnArgs, YScalingArg};

/// Misuse that clap cannot catch (exit status 1).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(
            Error::NnlsNotConverged { .. }
            | Error::Collapsed { .. }
            | Error::ZeroPartition
            | Error::NonFinite(_)
            | Error::NonSampleBudget { .. },
        ) => 3,
        Some(Error::InvalidConfig(_)) => 1,
        _ => 2,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = cfg.apply_seed(cli.seed);
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Learn(args) => learn(args, cfg, seed, &say),
        Command::Convert(args) => convert_cmd(args, cfg, seed, &say),
        Command::Infer(args) => infer(args, &say),
        Command::Eval(args) => eval_cmd(args, cfg, seed, &say),
    }
}

fn load_data(path: &Path) -> Result<Dataset> {
    Dataset::load(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(path, text).map_err(Error::from).with_context(|| format!("writing {}", path.display()))
}

fn learn(args: &LearnArgs, mut cfg: FileConfig, seed: u64, say: &dyn Fn(String)) -> Result<()> {
    let started = Instant::now();
    let lc = &mut cfg.learn;
    set(&mut lc.g_test_threshold, args.g_test_threshold);
    set(&mut lc.min_instances_to_slice, args.min_instances);
    set(&mut lc.num_clusters, args.clusters);
    set(&mut lc.kmeans_restarts, args.kmeans_restarts);
    set(&mut lc.laplace_alpha, args.alpha);
    lc.check()?;

    let data = load_data(&args.data)?;
    let spn = learn_spn(&data, &cfg.learn)?;
    let z = spn.partition_function()?;
    write(&args.out, &spn.to_json())?;
    // re-read to validate what was written
    SpnGraph::load(&args.out)?;

    let stats = spn.stats();
    say(format!(
        "learned SPN over {} variables from {} rows",
        data.num_variables(),
        data.num_rows()
    ));
    say(format!(
        "nodes {} (sum {}, product {}, leaves {}), layers {}, weights {}, parameters {}",
        stats.nodes,
        stats.sum_nodes,
        stats.product_nodes,
        stats.leaves,
        stats.layers,
        stats.weights,
        eval::spn_parameter_count(&spn)
    ));
    let ok = (z - 1.0).abs() <= 1e-9;
    say(format!("Z = {z:.12} ({})", if ok { "ok" } else { "NOT normalized" }));

    let mut manifest = RunManifest::new("learn", &cfg.learn, seed).input("data", &args.data);
    manifest.output("spn", &args.out);
    manifest.write(&sibling(&args.out, "manifest"), started)
}

fn convert_cmd(args: &ConvertArgs, mut cfg: FileConfig, seed: u64, say: &dyn Fn(String)) -> Result<()> {
    let started = Instant::now();
    let cc = &mut cfg.convert;
    set(&mut cc.initial_rank, args.rank);
    set(&mut cc.non_sample_ratio, args.non_sample_ratio);
    set(&mut cc.max_sweeps, args.max_sweeps);
    set(&mut cc.rel_tol, args.rel_tol);
    set(
        &mut cc.y_scaling,
        args.y_scaling.map(|y| match y {
            YScalingArg::None => YScaling::None,
            YScalingArg::MaxNormalize => YScaling::MaxNormalize,
        }),
    );
    set(
        &mut cc.init,
        args.init.map(|i| match i {
            InitArg::Data => InitKind::Data,
            InitArg::Mixture => InitKind::Mixture,
            InitArg::Uniform => InitKind::Uniform,
        }),
    );
    set(&mut cc.mass_weight, args.mass_weight);
    set(&mut cfg.eval.tv_limit, args.tv_limit);
    cfg.convert.check()?;

    let spn = SpnGraph::load(&args.spn).with_context(|| format!("reading SPN {}", args.spn.display()))?;
    let data = load_data(&args.data)?;
    if spn.num_variables() != data.num_variables() {
        return Err(Error::DimensionMismatch {
            expected: spn.num_variables(),
            found: data.num_variables(),
        })
        .context("SPN and dataset disagree on the number of variables");
    }
    let (tt, report) = convert(&spn, &data, &cfg.convert)?;
    write(&args.out, &tt.to_json())?;
    TensorTrain::load(&args.out)?;
    let report_path = sibling(&args.out, "report");
    write(&report_path, &(report.to_json() + "\n"))?;

    say(format!(
        "sweeps {} ({}), final objective {:.6e}",
        report.sweeps,
        if report.converged { "converged" } else { "sweep cap reached" },
        report.final_objective()
    ));
    say(format!("ranks {:?}", report.ranks));
    let p = report.tspn_parameters;
    say(format!(
        "parameters: SPN {}, tSPN {} total / {} nonzero, reduction {:.2}x",
        report.spn_parameters,
        p.total,
        p.nonzero,
        report.spn_parameters as f64 / p.nonzero as f64
    ));
    if spn.num_variables() <= cfg.eval.tv_limit {
        let d = eval::tv_distance(&spn, &tt, cfg.eval.tv_limit)?;
        say(format!("TV distance {:.6} (L1 {:.6})", d.tv, d.l1));
    }

    let mut manifest = RunManifest::new("convert", &cfg.convert, seed)
        .input("spn", &args.spn)
        .input("data", &args.data);
    manifest.output("tt", &args.out);
    manifest.output("report", &report_path);
    manifest.write(&sibling(&args.out, "manifest"), started)
}

enum Loaded {
    Spn(SpnGraph),
    Tt(TensorTrain),
}

fn load_model(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path)
        .map_err(Error::from)
        .with_context(|| format!("reading model {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    if value.get("nodes").is_some() {
        Ok(Loaded::Spn(SpnGraph::from_json(&text)?))
    } else if value.get("cores").is_some() {
        Ok(Loaded::Tt(TensorTrain::from_json(&text)?))
    } else {
        Err(Error::Malformed(format!("{} is neither an SPN nor a tensor-train model", path.display())).into())
    }
}

fn infer(args: &InferArgs, say: &dyn Fn(String)) -> Result<()> {
    let model = load_model(&args.model)?;
    let m: &dyn Model = match &model {
        Loaded::Spn(s) => s,
        Loaded::Tt(t) => t,
    };
    let d = m.num_variables();
    let evidence = match &args.evidence {
        Some(text) => Evidence::parse(text, d)?,
        None => Evidence::empty(d),
    };
    if args.mpe {
        let Loaded::Spn(spn) = &model else {
            bail!(UsageError("MPE unsupported for tSPN models".into()));
        };
        let r = spn.mpe(&evidence)?;
        let p = spn.probability(&r.state)?;
        say(format!("{}", State(r.state)));
        say(format!("probability {p}"));
        return Ok(());
    }
    if let Some(text) = &args.state {
        let state: State = text.parse()?;
        if state.0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: state.0.len(),
            }
            .into());
        }
        say(format!("{}", m.probability_of(&state.0)?));
        return Ok(());
    }
    if args.evidence.is_none() {
        bail!(UsageError("one of --state, --evidence or --mpe is required".into()));
    }
    say(format!("{}", m.marginal_of(&evidence)?));
    Ok(())
}

fn eval_cmd(args: &EvalArgs, mut cfg: FileConfig, seed: u64, say: &dyn Fn(String)) -> Result<()> {
    let started = Instant::now();
    set(&mut cfg.eval.tv_limit, args.tv_limit);
    set(&mut cfg.eval.non_sample_ratio, args.non_sample_ratio);
    let ratio = cfg.eval.non_sample_ratio;

    let spn = SpnGraph::load(&args.spn).with_context(|| format!("reading SPN {}", args.spn.display()))?;
    let tt = TensorTrain::load(&args.tt).with_context(|| format!("reading tensor train {}", args.tt.display()))?;
    let train = load_data(&args.train)?;
    let test = load_data(&args.test)?;
    for (what, d) in [
        ("tensor train", tt.num_variables()),
        ("training split", train.num_variables()),
        ("test split", test.num_variables()),
    ] {
        if d != spn.num_variables() {
            return Err(Error::DimensionMismatch {
                expected: spn.num_variables(),
                found: d,
            })
            .with_context(|| format!("{what} does not match the SPN"));
        }
    }

    let sets = ProfileSets::from_split(&train, &test, ratio, seed)?;
    let report = eval::report(&spn, &tt, &sets, cfg.eval.tv_limit)?;

    let report_path = args.out_dir.join("eval_report.json");
    let csv_path = args.out_dir.join("profile.csv");
    write(&report_path, &(report.to_json() + "\n"))?;
    write(&csv_path, &profile_csv(&report.profile_rows))?;
    let mut manifest = RunManifest::new("eval", &cfg.eval, seed)
        .input("spn", &args.spn)
        .input("tt", &args.tt)
        .input("train", &args.train)
        .input("test", &args.test);
    manifest.output("report", &report_path);
    manifest.output("profile", &csv_path);
    if args.svg {
        let svg_path = args.out_dir.join("profile.svg");
        write(&svg_path, &profile_svg(&report.profile_rows))?;
        manifest.output("svg", &svg_path);
    }

    match report.tv_distance {
        Some(tv) => say(format!("TV distance {tv:.6} (L1 {:.6})", report.l1_distance.unwrap_or(f64::NAN))),
        None => say(format!(
            "TV distance omitted (d = {} exceeds the enumeration limit {})",
            spn.num_variables(),
            cfg.eval.tv_limit
        )),
    }
    say(format!(
        "parameters: SPN {}, tSPN {} nonzero of {}, reduction {:.2}x",
        report.spn_params, report.tspn_params_nonzero, report.tspn_params_total, report.reduction_factor
    ));
    for s in &report.summaries {
        if let (Some(ps), Some(pt)) = (s.median_spn_prob, s.median_tspn_prob) {
            say(format!("{:<17} n={:<6} median spn {ps:.3e} tspn {pt:.3e}", s.set.as_str(), s.count));
        }
    }
    manifest.write(&args.out_dir.join("manifest.json"), started)
}
