//! Command-line front end: decode, verify, transform, extend, search and
//! plan large sets of subspace designs over GF(2).

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use manifest::{RunManifest, Verdict};
use subdesign::design::{
    default_hyperplane, default_point, derived_large_set, dual_large_set, read_design,
    read_large_set, residual_large_set, verify_design, verify_large_set, write_design,
    write_large_set,
};
use subdesign::group::parse_generators;
use subdesign::join::{
    execute_plan, extend_by_hyperplane, missing_leaves, ExecOptions, Registry, DEFAULT_SIZE_CAP,
};
use subdesign::km::{
    format_representatives, format_selections, iterated_large_set_search,
    large_set_from_selections, parse_seed_columns, solve_exact, KmSystem, LsSearchConfig,
    LsSearchOutcome, SearchFailure, SolveOutcome,
};
use subdesign::planner::{
    check_remark_genericity, generate_table, plan_series_with, LeafSource, PlanNode,
};
use subdesign::{paper_data, Error, ErrorClass, Group};

const FORMATS: &str = "\
File formats:
  design file    first line `q=2 v=<v> k=<k> t=<t> lambda=<lambda>`, then one block
                 per line: the k rows of its reduced row echelon basis as
                 decimal integers, bit i holding coordinate i (pivot = lowest set bit)
  manifest       TOML with keys N, q, v, k, t, lambda, designs (member design
                 files relative to the manifest), optional bilinear_form, provenance
  table file     one orbit representative per line as four integers in 1..=255
                 separated by spaces; row j of the 4x8 basis matrix holds the
                 bits of the j-th value, bit i in column i
  generators     square 0/1 matrices, one row per line, blank line between matrices;
                 they act on row vectors from the right
  seed columns   one round per line, KM column indices separated by spaces
  plan file      JSON tree; each node has `kind` (leaf_table, leaf_trivial,
                 derived, residual, dual, hyperplane_extend, decompose) and
                 `params` {q, N, t, k, v}
  run manifest   JSON: subcommand, parameters, input sha256 digests, outputs,
                 wall_time_s (omitted with --deterministic), verdict

Exit codes: 0 success and verified, 2 mathematical failure, 3 budget exhausted
or result unknown, 4 input, output or format error.";

#[derive(Parser, Debug)]
#[command(name = "subdesign", version, about = "Large sets of subspace designs over GF(2)", after_help = FORMATS)]
struct Cli {
    /// Worker threads for verification, orbits and materialization.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Single-threaded, byte-identical outputs for identical invocations.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Where to write the run manifest (default: next to the outputs).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expand a table of orbit representatives into a design file.
    Decode {
        #[arg(long)]
        table: PathBuf,
        /// `shipped`, `trivial` or a generators file.
        #[arg(long, default_value = "shipped")]
        group: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = paper_data::LAMBDA)]
        lambda: u64,
    },
    /// Verify a design file or a large set manifest.
    Verify {
        input: PathBuf,
        /// Strength to check instead of the one declared in the file.
        #[arg(long)]
        t: Option<usize>,
    },
    /// Derived, residual or dual large set of a manifest.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "ls")]
        stem: String,
    },
    /// LS(t,k,v) from LS(t,k-1,v-1) and LS(t,k,v-1).
    Extend {
        #[arg(long)]
        small: PathBuf,
        #[arg(long)]
        same: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "ls")]
        stem: String,
    },
    /// Kramer-Mesner systems and searches.
    Km {
        #[command(subcommand)]
        command: KmCommand,
    },
    /// Execute a plan file against a directory of leaf manifests.
    Construct {
        #[arg(long)]
        plan: PathBuf,
        /// Directory whose *.toml manifests serve as leaves.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "ls")]
        stem: String,
        #[arg(long, default_value_t = DEFAULT_SIZE_CAP)]
        size_cap: u64,
        /// Materialize even above the size cap.
        #[arg(long)]
        force: bool,
    },
    /// Admissibility and realizability of LS_2[3](2,k,v).
    Table {
        #[arg(long, default_value_t = 40)]
        vmax: u32,
        #[arg(long)]
        json: bool,
    },
    /// Construction tree of LS_q[N](2,k,v) as JSON.
    Plan {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long = "N", default_value_t = 3)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print only leaves and node counts.
        #[arg(long)]
        summary: bool,
    },
    /// Check the two leaves that would carry the series to other q and N.
    Genericity {
        #[arg(long)]
        q: u64,
        #[arg(long = "N")]
        n: u64,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TransformKind {
    Derived,
    Residual,
    Dual,
}

#[derive(Args, Debug, Clone)]
struct KmArgs {
    #[arg(long)]
    v: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    t: usize,
    /// `shipped`, `trivial` or a generators file.
    #[arg(long, default_value = "trivial")]
    group: String,
}

#[derive(Subcommand, Debug)]
enum KmCommand {
    /// Write the orbit incidence matrix and the orbit representatives.
    Build {
        #[command(flatten)]
        system: KmArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// One 0/1 solution of A x = lambda.
    Solve {
        #[command(flatten)]
        system: KmArgs,
        #[arg(long)]
        lambda: u64,
        /// Columns that may not be used, in seed-column format.
        #[arg(long)]
        forbid: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000_000)]
        node_budget: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// N disjoint solutions covering all columns, i.e. a large set.
    LsSearch {
        #[command(flatten)]
        system: KmArgs,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 10_000_000)]
        node_budget: u64,
        #[arg(long, default_value_t = 10_000)]
        retry_budget: u64,
        /// Shuffles ties in the column order; without it the order is fixed.
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed solutions for the first rounds.
        #[arg(long)]
        seed_columns: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "ls")]
        stem: String,
    },
}

struct Ctx {
    deterministic: bool,
    manifest: Option<PathBuf>,
}

impl Ctx {
    fn run(&self, name: &str, parameters: serde_json::Value) -> RunManifest {
        RunManifest::new(name, parameters, self.deterministic)
    }

    /// Writes the run manifest to `--manifest` or to `default`.
    fn finish(&self, mut run: RunManifest, default: Option<PathBuf>) -> Result<()> {
        if let Some(path) = self.manifest.clone().or(default) {
            run.write(&path)?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let ctx = Ctx {
        deterministic: cli.deterministic,
        manifest: cli.manifest.clone(),
    };
    match dispatch(&ctx, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>().map(Error::class) {
        Some(ErrorClass::Verification) => 2,
        Some(ErrorClass::Budget) => 3,
        _ => 4,
    }
}

fn load_group(spec: &str, v: usize) -> Result<Group> {
    Ok(match spec {
        "shipped" => paper_data::group()?,
        "trivial" => Group::trivial(v),
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Group::from_matrices(&parse_generators(&text, path)?)?
        }
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<u8> {
    match command {
        Command::Decode {
            table,
            group,
            out,
            t,
            lambda,
        } => {
            let mut run = ctx.run(
                "decode",
                json!({"table": table, "group": group, "t": t, "lambda": lambda}),
            );
            run.input(&table)?;
            let text = fs::read_to_string(&table)
                .with_context(|| format!("reading {}", table.display()))?;
            let reps = paper_data::parse_table(&text, &table.display().to_string())?;
            let g = load_group(&group, paper_data::V)?;
            let design = paper_data::build_design_from_reps(&reps, &g, t, lambda)?;
            write_design(&out, &design)?;
            run.output(&out);
            run.verdict = Verdict::Pass;
            println!(
                "{}: {} blocks, {}-design with lambda {}",
                out.display(),
                design.len(),
                t,
                design.lambda()
            );
            ctx.finish(run, Some(out.with_extension("run.json")))?;
            Ok(0)
        }
        Command::Verify { input, t } => verify(ctx, &input, t),
        Command::Transform {
            input,
            kind,
            out_dir,
            stem,
        } => {
            let mut run = ctx.run(
                "transform",
                json!({"input": input, "kind": format!("{kind:?}").to_lowercase()}),
            );
            run.input(&input)?;
            let (ls, _) = read_large_set(&input)?;
            let out = match kind {
                TransformKind::Derived => derived_large_set(&ls, &default_point(ls.v())?)?,
                TransformKind::Residual => residual_large_set(&ls, &default_hyperplane(ls.v())?)?,
                TransformKind::Dual => dual_large_set(&ls)?,
            };
            let provenance = format!("{kind:?} of {}", ls.label()).to_lowercase();
            write_verified(ctx, run, &out_dir, &stem, &out, provenance)
        }
        Command::Extend {
            small,
            same,
            out_dir,
            stem,
        } => {
            let mut run = ctx.run("extend", json!({"small": small, "same": same}));
            run.input(&small)?;
            run.input(&same)?;
            let (a, _) = read_large_set(&small)?;
            let (b, _) = read_large_set(&same)?;
            let out = extend_by_hyperplane(&a, &b)?;
            let provenance = format!("hyperplane extension of {} and {}", a.label(), b.label());
            write_verified(ctx, run, &out_dir, &stem, &out, provenance)
        }
        Command::Km { command } => km(ctx, command),
        Command::Construct {
            plan,
            registry,
            out_dir,
            stem,
            size_cap,
            force,
        } => {
            let mut run = ctx.run(
                "construct",
                json!({"plan": plan, "registry": registry, "size_cap": size_cap, "force": force}),
            );
            run.input(&plan)?;
            let text =
                fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let tree: PlanNode = serde_json::from_str(&text).map_err(|e| Error::Format {
                path: plan.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
            let mut reg = Registry::new();
            if let Some(dir) = &registry {
                let mut manifests: Vec<PathBuf> = fs::read_dir(dir)
                    .with_context(|| format!("reading {}", dir.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                    .collect();
                manifests.sort();
                for m in manifests {
                    run.input(&m)?;
                    reg.insert(read_large_set(&m)?.0);
                }
            }
            let shipped_needed = missing_leaves(&tree, &reg).iter().any(|p| {
                let mut shipped = false;
                tree.walk_distinct(&mut |n| {
                    if let PlanNode::LeafTable {
                        params,
                        source: LeafSource::Shipped,
                    } = n
                    {
                        shipped |= params == p;
                    }
                });
                shipped
            });
            if shipped_needed {
                reg.insert(paper_data::large_set(&paper_data::group()?)?);
            }
            let ls = execute_plan(&tree, &reg, ExecOptions { size_cap, force })?;
            let provenance = format!("plan {}", plan.display());
            write_verified(ctx, run, &out_dir, &stem, &ls, provenance)
        }
        Command::Table { vmax, json } => {
            let table = generate_table(vmax)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&table)?);
            } else {
                print!("{}", table.render_text());
            }
            Ok(0)
        }
        Command::Plan {
            k,
            v,
            q,
            n,
            out,
            summary,
        } => {
            let plan = plan_series_with(q, n, k, v)?;
            let text = if summary {
                let leaves: Vec<String> = plan
                    .required_leaves()
                    .iter()
                    .map(|(p, s)| {
                        format!(
                            "{p} ({})",
                            if *s == LeafSource::Shipped {
                                "shipped"
                            } else {
                                "external"
                            }
                        )
                    })
                    .collect();
                serde_json::to_string_pretty(&json!({
                    "params": plan.params(),
                    "root": plan.kind(),
                    "distinct_nodes": plan.distinct_node_count(),
                    "tree_nodes": plan.tree_size().to_string(),
                    "leaves": leaves,
                }))?
            } else {
                let size = plan.tree_size();
                if size > 1_000_000 {
                    return Err(Error::Budget(format!(
                        "the expanded tree has {size} nodes; use --summary"
                    ))
                    .into());
                }
                serde_json::to_string_pretty(&*plan)?
            };
            match out {
                Some(path) => fs::write(&path, text + "\n")
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Genericity { q, n } => {
            let template = check_remark_genericity(q, n)?;
            let leaves: Vec<String> = template.leaves.iter().map(ToString::to_string).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(
                    &json!({"leaves": leaves, "example": template.plan.params()})
                )?
            );
            Ok(0)
        }
    }
}

/// Writes a large set that was verified on construction.
fn write_verified(
    ctx: &Ctx,
    mut run: RunManifest,
    out_dir: &Path,
    stem: &str,
    ls: &subdesign::LargeSet,
    provenance: String,
) -> Result<u8> {
    let report = verify_large_set(ls)?;
    let path = write_large_set(out_dir, stem, ls, None, Some(provenance))?;
    run.output(&path);
    run.verdict = Verdict::Pass;
    println!(
        "{}: {} with lambda {}",
        path.display(),
        ls.label(),
        report.lambda
    );
    ctx.finish(run, Some(out_dir.join(format!("{stem}.run.json"))))?;
    Ok(0)
}

fn verify(ctx: &Ctx, input: &Path, t: Option<usize>) -> Result<u8> {
    let mut run = ctx.run("verify", json!({"input": input, "t": t}));
    run.input(input)?;
    let is_manifest = input.extension().is_some_and(|x| x == "toml");
    let result: std::result::Result<serde_json::Value, Error> = if is_manifest {
        let (ls, _) = read_large_set(input)?;
        if t.is_some_and(|t| t != ls.t()) {
            bail!("a large set is verified at its declared t = {}", ls.t());
        }
        verify_large_set(&ls).map(|r| serde_json::to_value(r).expect("report serializes"))
    } else {
        let d = read_design(input)?;
        match t {
            Some(t) => verify_design(d.v(), t, d.blocks()),
            None => d.verify(),
        }
        .map(|lambda| json!({"v": d.v(), "k": d.k(), "t": t.unwrap_or(d.t()), "lambda": lambda, "blocks": d.len()}))
    };
    match result {
        Ok(report) => {
            run.verdict = Verdict::Pass;
            println!("PASS {}", serde_json::to_string(&report)?);
            ctx.finish(run, None)?;
            Ok(0)
        }
        Err(e) if e.class() == ErrorClass::Verification => {
            run.verdict = Verdict::Fail;
            run.message = Some(e.to_string());
            println!("FAIL {e}");
            ctx.finish(run, None)?;
            Ok(2)
        }
        Err(e) => Err(e.into()),
    }
}

fn km(ctx: &Ctx, command: KmCommand) -> Result<u8> {
    let system = |a: &KmArgs| -> Result<KmSystem> {
        Ok(KmSystem::build(a.v, a.t, a.k, &load_group(&a.group, a.v)?)?)
    };
    let params = |a: &KmArgs| json!({"v": a.v, "k": a.k, "t": a.t, "group": a.group});
    match command {
        KmCommand::Build { system: a, out_dir } => {
            let mut run = ctx.run("km build", params(&a));
            let sys = system(&a)?;
            create_dir(&out_dir)?;
            for (name, text) in [
                ("matrix.txt", sys.format_matrix()),
                ("t_orbits.txt", format_representatives(sys.t_orbits())),
                ("k_orbits.txt", format_representatives(sys.k_orbits())),
            ] {
                let path = out_dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                run.output(&path);
            }
            println!(
                "{} x {} system, row sums {}",
                sys.tau(),
                sys.kappa(),
                sys.lambda_max()
            );
            ctx.finish(run, Some(out_dir.join("km.run.json")))?;
            Ok(0)
        }
        KmCommand::Solve {
            system: a,
            lambda,
            forbid,
            node_budget,
            out_dir,
        } => {
            let mut p = params(&a);
            p["lambda"] = json!(lambda);
            p["node_budget"] = json!(node_budget);
            let mut run = ctx.run("km solve", p);
            let sys = system(&a)?;
            let forbidden: Vec<usize> = match &forbid {
                Some(path) => {
                    run.input(path)?;
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    parse_seed_columns(&text, &path.display().to_string())?.concat()
                }
                None => Vec::new(),
            };
            create_dir(&out_dir)?;
            let code = match solve_exact(&sys, lambda, &forbidden, node_budget)? {
                SolveOutcome::Found(sel) => {
                    let cols = out_dir.join("columns.txt");
                    fs::write(&cols, format_selections(std::slice::from_ref(&sel)))?;
                    let design = subdesign::Design::verified(
                        a.v,
                        a.k,
                        a.t,
                        sys.expand(&sel.columns),
                        Some(lambda),
                    )?;
                    let path = out_dir.join("design.txt");
                    write_design(&path, &design)?;
                    run.output(&cols);
                    run.output(&path);
                    run.verdict = Verdict::Pass;
                    println!(
                        "found {} columns, {} blocks",
                        sel.columns.len(),
                        design.len()
                    );
                    0
                }
                SolveOutcome::Infeasible => {
                    run.verdict = Verdict::Fail;
                    run.message = Some("no solution exists".into());
                    println!("infeasible");
                    2
                }
                SolveOutcome::Unknown => {
                    run.verdict = Verdict::Partial;
                    run.message = Some("node budget exhausted".into());
                    println!("unknown: node budget exhausted");
                    3
                }
            };
            ctx.finish(run, Some(out_dir.join("solve.run.json")))?;
            Ok(code)
        }
        KmCommand::LsSearch {
            system: a,
            n,
            node_budget,
            retry_budget,
            seed,
            seed_columns,
            out_dir,
            stem,
        } => {
            let mut p = params(&a);
            p["N"] = json!(n);
            p["node_budget"] = json!(node_budget);
            p["retry_budget"] = json!(retry_budget);
            p["seed"] = json!(seed);
            let mut run = ctx.run("km ls-search", p);
            let sys = system(&a)?;
            let seed_rounds = match &seed_columns {
                Some(path) => {
                    run.input(path)?;
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    parse_seed_columns(&text, &path.display().to_string())?
                }
                None => Vec::new(),
            };
            let config = LsSearchConfig {
                node_budget,
                retry_budget,
                seed,
                seed_rounds,
            };
            create_dir(&out_dir)?;
            let selections_path = out_dir.join(format!("{stem}_columns.txt"));
            let code = match iterated_large_set_search(&sys, n, &config)? {
                LsSearchOutcome::Found(rounds) => {
                    fs::write(&selections_path, format_selections(&rounds))?;
                    run.output(&selections_path);
                    let ls = large_set_from_selections(&sys, &rounds)?;
                    let report = verify_large_set(&ls)?;
                    let path = write_large_set(
                        &out_dir,
                        &stem,
                        &ls,
                        None,
                        Some("Kramer-Mesner search".into()),
                    )?;
                    run.output(&path);
                    run.verdict = Verdict::Pass;
                    println!(
                        "{}: {} with lambda {}",
                        path.display(),
                        ls.label(),
                        report.lambda
                    );
                    0
                }
                LsSearchOutcome::Failed { completed, reason } => {
                    fs::write(&selections_path, format_selections(&completed))?;
                    run.output(&selections_path);
                    run.verdict = Verdict::Partial;
                    run.message = Some(format!(
                        "{reason:?} after {} completed rounds",
                        completed.len()
                    ));
                    println!(
                        "stopped ({reason:?}); {} rounds written to {}",
                        completed.len(),
                        selections_path.display()
                    );
                    if reason == SearchFailure::Infeasible {
                        2
                    } else {
                        3
                    }
                }
            };
            ctx.finish(run, Some(out_dir.join(format!("{stem}.run.json"))))?;
            Ok(code)
        }
    }
}
