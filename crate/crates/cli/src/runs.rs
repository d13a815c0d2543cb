//! Command implementations.

use serde::Serialize;

use hyperex::chameleon::{default_phase_length, run_chameleon, ChameleonParams, Outcome};
use hyperex::engine::{
    bar_meeting_time, classify_easy, evolve, evolve_walkers, meeting_time, EasyConfig,
    EventStream, ProcessInit, Trajectory,
};
use hyperex::error::Error;
use hyperex::exact::{
    delta_ratio_experiments, mixing_time_with_cap, neg_corr_experiment, ChainKind,
};
use hyperex::hypermodel::{validate, IrreducibilityStatus, Model};
use hyperex::rng::{stream_rng, StreamDescriptor};
use hyperex::Result;

use crate::output::{Cell, Emitter};
use crate::{
    ChameleonArgs, Cli, Command, CommonOpts, ExperimentName, ExperimentsArgs, MixArgs, Process,
    SimulateArgs, ValidateArgs, EXIT_FAIL, EXIT_OK,
};

pub fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Mix(args) => cmd_mix(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Chameleon(args) => cmd_chameleon(args),
        Command::Experiments(args) => cmd_experiments(args),
    }
}

fn load_model(common: &CommonOpts) -> Result<Model> {
    let path = common
        .model
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    Model::from_file(path)
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let model = load_model(&args.common)?;
    let ks = if args.ks.is_empty() {
        vec![1, 2]
    } else {
        args.ks.clone()
    };
    let report = validate(&model, &ks);

    let mut failures = Vec::new();
    if !report.fixed_point_ok {
        failures.push("fixed-point probability".to_string());
    }
    if !report.regular {
        failures.push("regularity".to_string());
    }
    for (k, status) in &report.irreducibility {
        match status {
            IrreducibilityStatus::Irreducible => {}
            IrreducibilityStatus::Reducible => failures.push(format!("irreducibility(k={k})")),
            IrreducibilityStatus::UndecidedAtCap => {
                failures.push(format!("irreducibility(k={k}) undecided at cap"))
            }
        }
    }

    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        common: &'a CommonOpts,
        ks: &'a [usize],
    }
    #[derive(Serialize)]
    struct ResultBody<'a> {
        report: &'a hyperex::hypermodel::ValidationReport,
        failures: &'a [String],
    }
    let mut csv = String::from("check,value,pass\n");
    csv.push_str(&format!("class-function,1,{}\n", report.class_function));
    csv.push_str(&format!(
        "max-fixed-point-prob,{},{}\n",
        report.max_fixed_point_prob, report.fixed_point_ok
    ));
    csv.push_str(&format!("regular,{},{}\n", report.regular, report.regular));
    for (k, status) in &report.irreducibility {
        csv.push_str(&format!(
            "irreducible-k{k},{:?},{}\n",
            status,
            *status == IrreducibilityStatus::Irreducible
        ));
    }
    Emitter::new(&args.common).emit(
        "validate",
        Config {
            common: &args.common,
            ks: &ks,
        },
        ResultBody {
            report: &report,
            failures: &failures,
        },
        Some(csv),
    )?;
    if report.pass {
        Ok(EXIT_OK)
    } else {
        eprintln!("validation failed: {}", failures.join(", "));
        Ok(EXIT_FAIL)
    }
}

// ---------------------------------------------------------------------------
// mix
// ---------------------------------------------------------------------------

fn cmd_mix(args: MixArgs) -> Result<u8> {
    let model = load_model(&args.common)?;
    let n = model.n_vertices() as f64;

    #[derive(Serialize)]
    struct Row {
        kind: String,
        k: usize,
        eps: f64,
        time: Cell,
        bracket: (f64, f64),
        tolerance: f64,
        /// T / (ln(|V|/eps) * T_EX(2)(1/4)); reported, not asserted.
        #[serde(skip_serializing_if = "Option::is_none")]
        ratio_reported_not_asserted: Option<Cell>,
    }

    // the reference scale for the reported ratio column
    let t_ex2_quarter = mixing_time_with_cap(&model, ChainKind::Ex, 2, 0.25, args.cap)
        .map(|t| t.time)
        .ok();

    let mut rows = Vec::new();
    for &kind in &args.kind {
        let chain_kind: ChainKind = kind.into();
        let ks: &[usize] = if chain_kind == ChainKind::Rw {
            &[1]
        } else {
            &args.ks
        };
        for &k in ks {
            for &eps in &args.epss {
                let mt = mixing_time_with_cap(&model, chain_kind, k, eps, args.cap)?;
                let ratio = t_ex2_quarter.map(|t2| {
                    Cell::exact(mt.time / ((n / eps).ln() * t2))
                });
                rows.push(Row {
                    kind: chain_kind.name(k),
                    k,
                    eps,
                    time: Cell::exact(mt.time),
                    bracket: mt.bracket,
                    tolerance: mt.tolerance,
                    ratio_reported_not_asserted: ratio,
                });
            }
        }
    }

    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        common: &'a CommonOpts,
        kinds: Vec<String>,
        ks: &'a [usize],
        epss: &'a [f64],
        cap: usize,
    }
    let mut csv = String::from("kind,k,eps,time,bracket_lo,bracket_hi,tolerance,ratio\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.k,
            r.eps,
            r.time.value(),
            r.bracket.0,
            r.bracket.1,
            r.tolerance,
            r.ratio_reported_not_asserted
                .map(|c| c.value().to_string())
                .unwrap_or_default()
        ));
    }
    Emitter::new(&args.common).emit(
        "mix",
        Config {
            common: &args.common,
            kinds: args.kind.iter().map(|k| format!("{k:?}")).collect(),
            ks: &args.ks,
            epss: &args.epss,
            cap: args.cap,
        },
        serde_json::json!({ "rows": rows }),
        Some(csv),
    )?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<u8> {
    let model = load_model(&args.common)?;
    if args.init.is_empty() {
        return Err(Error::InvalidArgument(
            "--init is required (comma-separated vertex labels)".into(),
        ));
    }
    let seed = args.common.seed;
    let pool = thread_pool(args.common.threads)?;

    #[derive(Serialize)]
    struct TrajectoryReplica {
        replica: usize,
        streams: Vec<StreamDescriptor>,
        trajectory: Trajectory,
    }
    #[derive(Serialize)]
    struct MeetingReplica {
        replica: usize,
        met: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        time: Option<f64>,
    }
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Body {
        Trajectories {
            replicas: Vec<TrajectoryReplica>,
        },
        Meetings {
            replicas: Vec<MeetingReplica>,
            met: usize,
            mean_met_time: Option<Cell>,
        },
    }

    use rayon::prelude::*;
    let horizon = args.horizon;
    let body = match args.process {
        Process::Rw | Process::Ex | Process::Ip => {
            let init = match args.process {
                Process::Rw => {
                    if args.init.len() != 1 {
                        return Err(Error::InvalidArgument(
                            "rw takes exactly one start vertex".into(),
                        ));
                    }
                    ProcessInit::Walk(args.init[0])
                }
                Process::Ex => ProcessInit::Exclusion(args.init.clone()),
                _ => ProcessInit::Interchange(args.init.clone()),
            };
            let lazy = args.lazy;
            let replicas: Vec<TrajectoryReplica> = pool.install(|| {
                (0..args.n_replicas)
                    .into_par_iter()
                    .map(|r| {
                        let desc = StreamDescriptor {
                            seed,
                            stream_id: r as u64,
                            horizon,
                            lazy,
                        };
                        let stream = EventStream::replay(&model, &desc);
                        let trajectory = evolve(&init, &stream)?;
                        Ok(TrajectoryReplica {
                            replica: r,
                            streams: vec![desc],
                            trajectory,
                        })
                    })
                    .collect::<Result<_>>()
            })?;
            Body::Trajectories { replicas }
        }
        Process::Rwk => {
            let k = args.init.len();
            let lazy = args.lazy;
            let replicas: Vec<TrajectoryReplica> = pool.install(|| {
                (0..args.n_replicas)
                    .into_par_iter()
                    .map(|r| {
                        // one stream per walker, ids split by replica
                        let descs: Vec<StreamDescriptor> = (0..k)
                            .map(|w| StreamDescriptor {
                                seed,
                                stream_id: ((r as u64) << 32) | w as u64,
                                horizon,
                                lazy,
                            })
                            .collect();
                        let streams: Vec<EventStream> = descs
                            .iter()
                            .map(|d| EventStream::replay(&model, d))
                            .collect();
                        let trajectory = evolve_walkers(&args.init, &streams)?;
                        Ok(TrajectoryReplica {
                            replica: r,
                            streams: descs,
                            trajectory,
                        })
                    })
                    .collect::<Result<_>>()
            })?;
            Body::Trajectories { replicas }
        }
        Process::Meeting | Process::BarMeeting => {
            let replicas: Vec<MeetingReplica> = pool.install(|| {
                (0..args.n_replicas)
                    .into_par_iter()
                    .map(|r| {
                        let mut rng = stream_rng(seed, r as u64);
                        let time = match args.process {
                            Process::Meeting => {
                                if args.init.len() != 2 {
                                    return Err(Error::InvalidArgument(
                                        "meeting takes exactly two start vertices".into(),
                                    ));
                                }
                                meeting_time(
                                    &model,
                                    (args.init[0], args.init[1]),
                                    horizon,
                                    &mut rng,
                                )
                            }
                            _ => {
                                if args.init.len() != 4 {
                                    return Err(Error::InvalidArgument(
                                        "bar-meeting takes exactly four start vertices".into(),
                                    ));
                                }
                                bar_meeting_time(
                                    &model,
                                    [args.init[0], args.init[1], args.init[2], args.init[3]],
                                    horizon,
                                    &mut rng,
                                )?
                            }
                        };
                        Ok(MeetingReplica {
                            replica: r,
                            met: time.is_some(),
                            time,
                        })
                    })
                    .collect::<Result<_>>()
            })?;
            let met: Vec<f64> = replicas.iter().filter_map(|r| r.time).collect();
            let mean_cell = if met.is_empty() {
                None
            } else {
                let n = met.len() as f64;
                let mean = met.iter().sum::<f64>() / n;
                let var = met.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
                Some(Cell::monte_carlo(mean, (var / n).sqrt(), met.len()))
            };
            Body::Meetings {
                met: met.len(),
                mean_met_time: mean_cell,
                replicas,
            }
        }
    };

    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        common: &'a CommonOpts,
        process: Process,
        init: &'a [u32],
        horizon: f64,
        n_replicas: usize,
        lazy: bool,
    }
    let csv = match &body {
        Body::Trajectories { replicas } => {
            let mut out = String::from("replica,time,state\n");
            for rep in replicas {
                for line in rep.trajectory.to_csv().lines().skip(1) {
                    out.push_str(&format!("{},{}\n", rep.replica, line));
                }
            }
            out
        }
        Body::Meetings { replicas, .. } => {
            let mut out = String::from("replica,met,time\n");
            for rep in replicas {
                out.push_str(&format!(
                    "{},{},{}\n",
                    rep.replica,
                    rep.met,
                    rep.time.map(|t| t.to_string()).unwrap_or_default()
                ));
            }
            out
        }
    };
    Emitter::new(&args.common).emit(
        "simulate",
        Config {
            common: &args.common,
            process: args.process,
            init: &args.init,
            horizon,
            n_replicas: args.n_replicas,
            lazy: args.lazy,
        },
        body,
        Some(csv),
    )?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// chameleon
// ---------------------------------------------------------------------------

fn cmd_chameleon(args: ChameleonArgs) -> Result<u8> {
    let model = load_model(&args.common)?;
    let start: Vec<u32> = if args.init.is_empty() {
        model.vertices()[..args.k.min(model.n_vertices())].to_vec()
    } else {
        args.init.clone()
    };
    let phase_length = match args.phase_length {
        Some(t) => t,
        None => default_phase_length(&model)?,
    };
    let horizon = args.horizon_phases * phase_length;
    let probes: Vec<f64> = args.probe_phases.iter().map(|p| p * phase_length).collect();

    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        common: &'a CommonOpts,
        start: &'a [u32],
        n_replicas: usize,
        phase_length: f64,
        horizon: f64,
        modified: bool,
        probes: &'a [f64],
        unabsorbed_limit: f64,
    }
    #[derive(Serialize, Default)]
    struct Summary {
        replicas: usize,
        fills: usize,
        empties: usize,
        unabsorbed: usize,
        fill_frequency: Option<Cell>,
        fill_ci99: Option<(f64, f64)>,
        ink_checks: Vec<InkCheck>,
        depink_histogram: Vec<DepinkRow>,
        /// Mean relative loss of red particles per colour-changing phase
        /// (reported, not asserted).
        phase_red_decrement: Option<Cell>,
        martingale_ok: bool,
        invariants_checked: bool,
    }
    #[derive(Serialize)]
    struct InkCheck {
        probe_time: f64,
        mean: Cell,
        /// |mean - 1| <= 4 se
        within_4se: bool,
    }
    #[derive(Serialize)]
    struct DepinkRow {
        index: usize,
        count: usize,
        mean_time: f64,
    }

    if args.n_replicas == 0 {
        Emitter::new(&args.common).emit(
            "chameleon",
            Config {
                common: &args.common,
                start: &start,
                n_replicas: 0,
                phase_length,
                horizon,
                modified: args.modified,
                probes: &probes,
                unabsorbed_limit: args.unabsorbed_limit,
            },
            Summary::default(),
            Some(String::from("metric,value\n")),
        )?;
        return Ok(EXIT_OK);
    }

    let mut params = ChameleonParams::new(phase_length, horizon);
    params.modified = args.modified;
    params.probes = probes.clone();
    params.check_invariants = true;

    struct ReplicaOut {
        outcome: Outcome,
        inks: Vec<f64>,
        depink_times: Vec<f64>,
        phase_red_span: Vec<(usize, usize)>,
    }
    use rayon::prelude::*;
    let pool = thread_pool(args.common.threads)?;
    let seed = args.common.seed;
    let outs: Vec<ReplicaOut> = pool.install(|| {
        (0..args.n_replicas)
            .into_par_iter()
            .map(|r| {
                let rec = run_chameleon(
                    &model,
                    &start,
                    &params,
                    stream_rng(seed, 2 * r as u64),
                    stream_rng(seed, 2 * r as u64 + 1),
                )?;
                Ok(ReplicaOut {
                    outcome: rec.outcome,
                    inks: rec
                        .probes
                        .iter()
                        .map(|p| p.state.half_ink() as f64 / 2.0)
                        .collect(),
                    depink_times: rec.depink_times,
                    phase_red_span: rec.phase_red_span,
                })
            })
            .collect::<Result<_>>()
    })?;

    let n = outs.len();
    let fills = outs.iter().filter(|o| o.outcome == Outcome::Fill).count();
    let empties = outs.iter().filter(|o| o.outcome == Outcome::Empty).count();
    let unabsorbed = n - fills - empties;
    let nf = n as f64;
    let p_hat = fills as f64 / nf;
    let se = (p_hat * (1.0 - p_hat) / nf).sqrt();
    let half = 2.5758 * se;

    let mut ink_checks = Vec::new();
    let mut martingale_ok = true;
    for (pi, &probe_time) in probes.iter().enumerate() {
        let values: Vec<f64> = outs.iter().map(|o| o.inks[pi]).collect();
        let mean = values.iter().sum::<f64>() / nf;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let se = (var / nf).sqrt();
        let within = (mean - 1.0).abs() <= 4.0 * se.max(1e-12);
        martingale_ok &= within;
        ink_checks.push(InkCheck {
            probe_time,
            mean: Cell::monte_carlo(mean, se, n),
            within_4se: within,
        });
    }

    let decrements: Vec<f64> = outs
        .iter()
        .flat_map(|o| o.phase_red_span.iter())
        .filter(|(start, _)| *start > 0)
        .map(|(start, end)| (*start as f64 - *end as f64) / *start as f64)
        .collect();
    let phase_red_decrement = if decrements.is_empty() {
        None
    } else {
        let dn = decrements.len() as f64;
        let mean = decrements.iter().sum::<f64>() / dn;
        let var = decrements.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / dn;
        Some(Cell::monte_carlo(mean, (var / dn).sqrt(), decrements.len()))
    };

    let max_depinks = outs.iter().map(|o| o.depink_times.len()).max().unwrap_or(0);
    let depink_histogram: Vec<DepinkRow> = (0..max_depinks)
        .map(|j| {
            let times: Vec<f64> = outs
                .iter()
                .filter_map(|o| o.depink_times.get(j).copied())
                .collect();
            DepinkRow {
                index: j + 1,
                count: times.len(),
                mean_time: times.iter().sum::<f64>() / times.len() as f64,
            }
        })
        .collect();

    let summary = Summary {
        replicas: n,
        fills,
        empties,
        unabsorbed,
        fill_frequency: Some(Cell::monte_carlo(p_hat, se, n)),
        fill_ci99: Some((p_hat - half, p_hat + half)),
        ink_checks,
        depink_histogram,
        phase_red_decrement,
        martingale_ok,
        invariants_checked: true,
    };

    let mut csv = String::from("metric,value\n");
    csv.push_str(&format!("replicas,{n}\nfills,{fills}\nempties,{empties}\n"));
    csv.push_str(&format!("unabsorbed,{unabsorbed}\nfill_frequency,{p_hat}\n"));
    for row in &summary.depink_histogram {
        csv.push_str(&format!(
            "depink_{}_mean_time,{}\n",
            row.index, row.mean_time
        ));
    }

    let unabsorbed_frac = unabsorbed as f64 / nf;
    let failed = unabsorbed_frac > args.unabsorbed_limit || !martingale_ok;
    Emitter::new(&args.common).emit(
        "chameleon",
        Config {
            common: &args.common,
            start: &start,
            n_replicas: args.n_replicas,
            phase_length,
            horizon,
            modified: args.modified,
            probes: &probes,
            unabsorbed_limit: args.unabsorbed_limit,
        },
        summary,
        Some(csv),
    )?;
    if failed {
        if unabsorbed_frac > args.unabsorbed_limit {
            eprintln!(
                "unabsorbed fraction {unabsorbed_frac} exceeds the limit {}",
                args.unabsorbed_limit
            );
        }
        if !martingale_ok {
            eprintln!("ink-martingale check failed");
        }
        Ok(EXIT_FAIL)
    } else {
        Ok(EXIT_OK)
    }
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

fn cmd_experiments(args: ExperimentsArgs) -> Result<u8> {
    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        common: &'a CommonOpts,
        name: ExperimentName,
    }
    let emitter_common = args.common.clone();
    let emitter = Emitter::new(&emitter_common);
    let config = Config {
        common: &args.common,
        name: args.name,
    };
    match args.name {
        ExperimentName::NegCorr => {
            let report = neg_corr_experiment(&args.t_grid)?;
            let mut csv = String::from(
                "t,product,exclusion,product_upper,exclusion_lower,bounds_ok,strict_ok\n",
            );
            for r in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.t,
                    r.product,
                    r.exclusion,
                    r.product_upper,
                    r.exclusion_lower,
                    r.bounds_ok,
                    r.strict_ok
                ));
            }
            let pass = report.all_pass;
            emitter.emit("experiments/neg-corr", config, &report, Some(csv))?;
            if pass {
                Ok(EXIT_OK)
            } else {
                eprintln!("correlation-reversal assertion failed");
                Ok(EXIT_FAIL)
            }
        }
        ExperimentName::DeltaRatio => {
            let report = delta_ratio_experiments(&args.deltas)?;
            let mut csv = String::from(
                "delta,t_ex2_4v,t_ex1_4v,ex2_over_ex1,t_ip2_3v,t_ex2_3v,ip2_over_ex2\n",
            );
            for r in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.delta,
                    r.t_ex2_4v,
                    r.t_ex1_4v,
                    r.ex2_over_ex1,
                    r.t_ip2_3v,
                    r.t_ex2_3v,
                    r.ip2_over_ex2
                ));
            }
            let pass = report.monotone_ok;
            emitter.emit("experiments/delta-ratio", config, &report, Some(csv))?;
            if pass {
                Ok(EXIT_OK)
            } else {
                eprintln!("ratio monotonicity assertion failed");
                Ok(EXIT_FAIL)
            }
        }
        ExperimentName::EasyClassify => {
            let model = load_model(&args.common)?;
            let mut cfg = if args.desk_preset {
                EasyConfig::desk_scale()
            } else {
                EasyConfig {
                    c_time: args.c_time,
                    c_prob: args.c_prob,
                    ..EasyConfig::default()
                }
            };
            cfg.replicas = args.n_replicas;
            let mut rng = stream_rng(args.common.seed, 0);
            let report = classify_easy(&model, &cfg, &mut rng)?;
            let mut csv = String::from("u,v,exceed,replicas,p_hat,wilson_upper\n");
            for p in &report.pairs {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.start.0, p.start.1, p.exceed, p.replicas, p.p_hat, p.wilson_upper
                ));
            }
            emitter.emit("experiments/easy-classify", config, &report, Some(csv))?;
            Ok(EXIT_OK)
        }
    }
}
