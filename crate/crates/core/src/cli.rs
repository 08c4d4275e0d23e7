//! Command-line front end: argument parsing, file plumbing and manifests.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::denoise::{Denoiser, OracleModel};
use crate::error::Error;
use crate::exec::{configure_workers, Execution};
use crate::filter::{run_filter, ClusterMap, ConfidenceRecord, FilterReport};
use crate::fkc::{run_fkc_mm, run_fkc_sg, BetaSchedule, RewardPoint, SteeringRun, WeightSign};
use crate::geometry::{
    codesignable, cluster_ratio, nn_diversity, radius_of_gyration, relative_contact_order, AtomCloud, MotifFrame,
    MotifMetric, CLUSTER_THRESHOLD, CODESIGN_THRESHOLD,
};
use crate::io::{fmt_sig, read_pdb, round_sig, RunConfig, RunManifest, Table};
use crate::losses::{atom_flags, resolved_atoms, smooth_lddt_loss, weighted_mse};
use crate::rewards::{Reward, RewardSpec};
use crate::sampler::{sample_chains, SamplerConfig, SequenceKernel};

#[derive(Parser)]
#[command(name = "codesign", version, about = "Oracle-checked diffusion sampling, steering, structure metrics and design filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (sectioned TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw independent chains from an oracle model.
    Sample(SampleArgs),
    /// Specificity-guided particle ensembles between an on- and off-target model.
    SteerSg(SgArgs),
    /// Reward-tilted particle ensembles over tokens and coordinates (always
    /// with the standard unmasking kernel).
    SteerMm(MmArgs),
    /// Structure metrics: contact order, radius of gyration, co-designability, motif diversity.
    Eval(EvalArgs),
    /// Training losses between a predicted and a true structure.
    Losses(LossArgs),
    /// Burial, surface and confidence filters with cluster-capped selection.
    Filter(FilterArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Oracle model file.
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long, default_value_t = 1000)]
    chains: usize,
    /// No churn, unit step scale, no tempering or augmentation.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Corollary,
    AlgorithmBox,
}

#[derive(Args)]
struct SgArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    on: PathBuf,
    #[arg(long)]
    off: PathBuf,
    #[arg(long, default_value_t = 64)]
    particles: usize,
    #[arg(long, default_value_t = 1)]
    ensembles: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    tau_stop: Option<f64>,
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointArg {
    Noisy,
    Denoised,
}

#[derive(Args)]
struct MmArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    oracle: PathBuf,
    /// Reward spec file.
    #[arg(long)]
    reward: PathBuf,
    #[arg(long, default_value_t = 64)]
    particles: usize,
    #[arg(long, default_value_t = 1)]
    ensembles: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Ramp β linearly from 0 instead of holding it constant.
    #[arg(long)]
    ramp: bool,
    #[arg(long)]
    tau_stop: Option<f64>,
    #[arg(long)]
    ess_fraction: Option<f64>,
    #[arg(long, value_enum)]
    reward_at: Option<PointArg>,
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// A structure file or a directory of .pdb files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Any of rco, lrc, rog, rog_all, codesign, diversity.
    #[arg(long, value_delimiter = ',', default_value = "rco,lrc,rog")]
    metrics: Vec<String>,
    /// Directory of refolded structures with matching file names.
    #[arg(long)]
    refold: Option<PathBuf>,
    /// Residue numbers forming the motif, for diversity.
    #[arg(long, value_delimiter = ',')]
    motif: Vec<i32>,
    /// rmsd, chem, lddt or frobenius.
    #[arg(long, default_value = "rmsd")]
    motif_metric: String,
}

#[derive(Args)]
struct LossArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Noise level for the combined structure loss.
    #[arg(long)]
    t_hat: Option<f64>,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of design .pdb files.
    #[arg(long)]
    designs: PathBuf,
    /// Directory of `<design>.conf` confidence records; defaults to the design directory.
    #[arg(long)]
    confidence: Option<PathBuf>,
    #[arg(long)]
    seq_clusters: PathBuf,
    #[arg(long)]
    struct_clusters: PathBuf,
}

/// Parse `argv` (program name first) and run. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("error[usage]: {first}");
            return 2;
        }
    };
    let words: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &words) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or("runtime", category);
            eprintln!("error[{kind}]: {}", format!("{e:#}").replace('\n', " "));
            1
        }
    }
}

fn category(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Domain(_) => "domain",
        Error::Shape(_) => "shape",
        Error::ImpossibleEvidence => "evidence",
        Error::DegenerateStep(_) | Error::DegenerateEnsemble => "degenerate",
        Error::Geometry(_) => "geometry",
        Error::SingularGradient(_) => "gradient",
        Error::NonFiniteReward => "reward",
        Error::Missing(_) => "missing",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
    }
}

struct Run {
    command: &'static str,
    common: Common,
    config: RunConfig,
    exec: Execution,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Run {
    fn start(command: &'static str, common: &Common) -> anyhow::Result<Self> {
        let started = now();
        let config = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if common.workers > 0 {
            configure_workers(common.workers);
        }
        let exec = if common.sequential { Execution::Sequential } else { Execution::Parallel };
        Ok(Self { command, common: common.clone(), config, exec, inputs: Vec::new(), outputs: Vec::new(), started })
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn write(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.common.out).with_context(|| format!("creating {}", self.common.out.display()))?;
        let path = self.common.out.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(self, argv: &[String]) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.common.out)?;
        let m = RunManifest {
            command: self.command.to_string(),
            argv: argv.to_vec(),
            config: self.common.config.as_ref().map(|p| p.display().to_string()),
            seed: self.common.seed,
            inputs: self.inputs,
            output_dir: self.common.out.display().to_string(),
            outputs: self.outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started,
            finished: now(),
        };
        m.write(&self.common.out)?;
        Ok(())
    }
}

fn execute(cli: Cli, argv: &[String]) -> anyhow::Result<()> {
    match cli.command {
        Command::Sample(a) => sample(a, argv),
        Command::SteerSg(a) => steer_sg(a, argv),
        Command::SteerMm(a) => steer_mm(a, argv),
        Command::Eval(a) => eval(a, argv),
        Command::Losses(a) => losses(a, argv),
        Command::Filter(a) => filter(a, argv),
    }
}

/// `--exact`: the exact settings plus the standard unmasking kernel, keeping
/// the configured integrator and coordinate mode.
fn exact_sampler(base: &SamplerConfig) -> SamplerConfig {
    SamplerConfig {
        integrator: base.integrator,
        coordinates: base.coordinates,
        kernel: SequenceKernel::Standard,
        ..SamplerConfig::exact()
    }
}

#[derive(Serialize)]
struct ChainRecord<'a> {
    chain: usize,
    tokens: &'a [usize],
    coords: Vec<f64>,
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn sample(a: SampleArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("sample", &a.common)?;
    let model = OracleModel::load(&a.oracle)?;
    run.input(&a.oracle);
    if a.chains == 0 {
        return Err(Error::Config("--chains must be positive".into()).into());
    }
    let coupling = run.config.schedule.coupling()?;
    let cfg = if a.exact { exact_sampler(&run.config.sampler) } else { run.config.sampler.clone() };
    cfg.validate()?;
    let chains = sample_chains(&model, &coupling, &cfg, a.chains, a.common.seed, run.exec)?;

    let mut jsonl = String::new();
    for (k, c) in chains.iter().enumerate() {
        let rec = ChainRecord {
            chain: k,
            tokens: &c.final_state.seq.tokens,
            coords: c.final_state.structure.coords.iter().map(|&x| round_sig(x)).collect(),
        };
        jsonl.push_str(&serde_json::to_string(&rec)?);
        jsonl.push('\n');
    }
    run.write("chains.jsonl", &jsonl)?;

    let len = model.seq_len();
    let n = chains.len() as f64;
    let mut summary = Table::new(["step", "tau", "t [Å]", "r", "mask_fraction [fraction]"]);
    for i in 0..=coupling.n_steps() {
        let frac = if len == 0 {
            0.0
        } else if i == 0 {
            1.0
        } else {
            chains.iter().map(|c| c.masked_trace[i - 1] as f64).sum::<f64>() / (n * len as f64)
        };
        summary.push(vec![i.to_string(), fmt_sig(coupling.tau[i]), fmt_sig(coupling.t[i]), fmt_sig(coupling.r[i]), fmt_sig(frac)]);
    }
    run.write("summary.csv", &summary.to_csv())?;

    let mut diag = Table::new(["metric", "value", "unit"]);
    let mask = model.vocab().mask_id();
    let unmasked = chains.iter().filter(|c| !c.final_state.seq.tokens.contains(&mask)).count() as f64 / n;
    diag.push(vec!["chains".into(), chains.len().to_string(), "count".into()]);
    diag.push(vec!["fully_unmasked".into(), fmt_sig(unmasked), "fraction".into()]);
    let table_tv = |table: &crate::denoise::DiscreteTable| {
        let mut hist = vec![0.0; table.probs().len()];
        for c in &chains {
            if !c.final_state.seq.tokens.contains(&mask) {
                hist[table.index_of(&c.final_state.seq.tokens)] += 1.0 / n;
            }
        }
        tv(&hist, table.probs())
    };
    match &model {
        OracleModel::DiscreteTable(t) => diag.push(vec!["tv_to_table".into(), fmt_sig(table_tv(t)), "probability".into()]),
        OracleModel::Coupled(m) => diag.push(vec!["token_tv_to_marginal".into(), fmt_sig(table_tv(&m.token_table()?)), "probability".into()]),
        OracleModel::GaussianMixture(m) => {
            let mean = m.mean();
            for (d, mu) in mean.iter().enumerate() {
                let xs: Vec<f64> = chains.iter().map(|c| c.final_state.structure.coords[d]).collect();
                let emp = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - emp).powi(2)).sum::<f64>() / n;
                let target_var = m.weights.iter().zip(&m.means).map(|(w, c)| w * c[d] * c[d]).sum::<f64>() + m.sigma0 * m.sigma0 - mu * mu;
                diag.push(vec![format!("mean_x{d}"), fmt_sig(emp), "Å".into()]);
                diag.push(vec![format!("target_mean_x{d}"), fmt_sig(*mu), "Å".into()]);
                diag.push(vec![format!("var_x{d}"), fmt_sig(var), "Å²".into()]);
                diag.push(vec![format!("target_var_x{d}"), fmt_sig(target_var), "Å²".into()]);
            }
        }
    }
    run.write("diagnostics.csv", &diag.to_csv())?;
    run.finish(argv)
}

fn ensemble_seed(seed: u64, e: usize) -> u64 {
    seed.wrapping_add((e as u64) << 32)
}

/// Particle states, weight traces and per-ensemble estimates.
fn write_steering(run: &mut Run, runs: &[SteeringRun], rewards: Option<&[Vec<f64>]>) -> anyhow::Result<()> {
    let dim = runs[0].ensemble.particles[0].state.structure.coords.len();
    let mut head: Vec<String> = ["ensemble", "particle", "weight [fraction]", "log_weight [nats]", "tokens"].map(String::from).to_vec();
    if rewards.is_some() {
        head.push("reward".into());
    }
    head.extend((0..dim).map(|d| format!("x{d} [Å]")));
    let mut parts = Table::new(head);
    let mut trace = Table::new(["ensemble", "step", "ess [particles]", "resampled", "mean_increment [nats]"]);
    let mut weights = Table::new(["ensemble", "step", "particle", "increment [nats]", "log_weight [nats]"]);
    let mut est = Table::new(["ensemble", "quantity", "value", "unit"]);
    for (e, r) in runs.iter().enumerate() {
        let w = r.ensemble.weights()?;
        for (j, (p, wj)) in r.ensemble.particles.iter().zip(&w).enumerate() {
            let toks = p.state.seq.tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
            let mut row = vec![e.to_string(), j.to_string(), fmt_sig(*wj), fmt_sig(p.log_weight), toks];
            if let Some(rw) = rewards {
                row.push(fmt_sig(rw[e][j]));
            }
            row.extend(p.state.structure.coords.iter().map(|x| fmt_sig(*x)));
            parts.push(row);
        }
        for (i, ((inc, lw), (ess, res))) in r.trace.increments.iter().zip(&r.trace.log_weights).zip(r.trace.ess.iter().zip(&r.trace.resampled)).enumerate() {
            let mean = inc.iter().sum::<f64>() / inc.len() as f64;
            trace.push(vec![e.to_string(), (i + 1).to_string(), fmt_sig(*ess), res.to_string(), fmt_sig(mean)]);
            for (j, (a, b)) in inc.iter().zip(lw).enumerate() {
                weights.push(vec![e.to_string(), (i + 1).to_string(), j.to_string(), fmt_sig(*a), fmt_sig(*b)]);
            }
        }
        for d in 0..dim {
            let m = r.ensemble.expectation(|s| s.structure.coords[d])?;
            let m2 = r.ensemble.expectation(|s| s.structure.coords[d].powi(2))?;
            est.push(vec![e.to_string(), format!("mean_x{d}"), fmt_sig(m), "Å".into()]);
            est.push(vec![e.to_string(), format!("var_x{d}"), fmt_sig(m2 - m * m), "Å²".into()]);
        }
        if let Some(rw) = rewards {
            let mean: f64 = rw[e].iter().zip(&w).map(|(a, b)| a * b).sum();
            est.push(vec![e.to_string(), "mean_reward".into(), fmt_sig(mean), "reward".into()]);
        }
        est.push(vec![e.to_string(), "final_ess".into(), fmt_sig(r.ensemble.ess()?), "particles".into()]);
    }
    run.write("particles.csv", &parts.to_csv())?;
    run.write("trace.csv", &trace.to_csv())?;
    run.write("weights.csv", &weights.to_csv())?;
    run.write("estimates.csv", &est.to_csv())?;
    Ok(())
}

fn check_counts(particles: usize, ensembles: usize) -> anyhow::Result<()> {
    if particles == 0 || ensembles == 0 {
        return Err(Error::Config("--particles and --ensembles must be positive".into()).into());
    }
    Ok(())
}

fn steer_sg(a: SgArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("steer-sg", &a.common)?;
    check_counts(a.particles, a.ensembles)?;
    let mut sg = run.config.steer_sg.clone();
    if let Some(b) = a.beta {
        sg.beta = b;
    }
    if let Some(t) = a.tau_stop {
        sg.tau_stop = t;
    }
    if let Some(s) = a.sign {
        sg.sign = match s {
            SignArg::Corollary => WeightSign::Corollary,
            SignArg::AlgorithmBox => WeightSign::AlgorithmBox,
        };
    }
    sg.validate()?;
    let cfg = if a.exact { exact_sampler(&run.config.sampler) } else { run.config.sampler.clone() };
    cfg.validate()?;
    let on = OracleModel::load(&a.on)?;
    let off = OracleModel::load(&a.off)?;
    run.input(&a.on);
    run.input(&a.off);
    let coupling = run.config.schedule.coupling()?;
    let runs = (0..a.ensembles)
        .map(|e| run_fkc_sg(&on, &off, &coupling, &cfg, &sg, a.particles, ensemble_seed(a.common.seed, e), run.exec))
        .collect::<crate::Result<Vec<_>>>()?;
    write_steering(&mut run, &runs, None)?;
    run.finish(argv)
}

fn steer_mm(a: MmArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("steer-mm", &a.common)?;
    check_counts(a.particles, a.ensembles)?;
    let mut mm = run.config.steer_mm.clone();
    if let Some(b) = a.beta {
        mm.beta = BetaSchedule::Constant { beta: b };
    }
    if a.ramp {
        let beta = mm.beta.at(1.0);
        mm.beta = BetaSchedule::LinearRamp { beta };
    }
    if let Some(t) = a.tau_stop {
        mm.tau_stop = t;
    }
    if let Some(f) = a.ess_fraction {
        mm.ess_fraction = f;
    }
    if let Some(p) = a.reward_at {
        mm.reward_at = match p {
            PointArg::Noisy => RewardPoint::Noisy,
            PointArg::Denoised => RewardPoint::Denoised,
        };
    }
    mm.validate()?;
    // Tilting is only defined for the standard kernel.
    let mut cfg = if a.exact { exact_sampler(&run.config.sampler) } else { run.config.sampler.clone() };
    cfg.kernel = SequenceKernel::Standard;
    cfg.validate()?;
    let model = OracleModel::load(&a.oracle)?;
    let reward = RewardSpec::load(&a.reward)?;
    run.input(&a.oracle);
    run.input(&a.reward);
    let coupling = run.config.schedule.coupling()?;
    let runs = (0..a.ensembles)
        .map(|e| run_fkc_mm(&model, &reward, &coupling, &cfg, &mm, a.particles, ensemble_seed(a.common.seed, e), run.exec))
        .collect::<crate::Result<Vec<_>>>()?;
    let rewards = runs
        .iter()
        .map(|r| {
            r.ensemble
                .particles
                .iter()
                .map(|p| reward.value(&p.state.structure.coords, &p.state.seq.tokens))
                .collect::<crate::Result<Vec<f64>>>()
        })
        .collect::<crate::Result<Vec<_>>>()?;
    write_steering(&mut run, &runs, Some(&rewards))?;
    run.finish(argv)
}

fn structure_files(path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::Missing(format!("input {}: {e}", path.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pdb")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Missing(format!("no structures found in {}", path.display())).into());
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn motif_frame(cloud: &AtomCloud, residues: &[i32], id: &str) -> anyhow::Result<MotifFrame> {
    let order = cloud.protein_residues();
    let positions = residues
        .iter()
        .map(|r| {
            order
                .iter()
                .position(|g| g.residue_index == *r)
                .ok_or_else(|| Error::Missing(format!("motif residue {r} in {id}")))
        })
        .collect::<crate::Result<Vec<usize>>>()?;
    Ok(cloud.motif(&positions)?)
}

fn eval(a: EvalArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("eval", &a.common)?;
    const KNOWN: [&str; 6] = ["rco", "lrc", "rog", "rog_all", "codesign", "diversity"];
    for m in &a.metrics {
        if !KNOWN.contains(&m.as_str()) {
            return Err(Error::Config(format!("unknown metric {m:?}; expected one of {}", KNOWN.join(", "))).into());
        }
    }
    let want = |m: &str| a.metrics.iter().any(|x| x == m);
    let metric = match a.motif_metric.as_str() {
        "rmsd" => MotifMetric::Rmsd,
        "chem" => MotifMetric::ChemCost,
        "lddt" => MotifMetric::LddtDiversity,
        "frobenius" => MotifMetric::Frobenius,
        other => return Err(Error::Config(format!("unknown motif metric {other:?}")).into()),
    };
    if want("codesign") && a.refold.is_none() {
        return Err(Error::Config("codesign needs --refold".into()).into());
    }
    if want("diversity") && a.motif.is_empty() {
        return Err(Error::Config("diversity needs --motif".into()).into());
    }
    let files = structure_files(&a.input)?;
    run.input(&a.input);
    let clouds = files.iter().map(|f| read_pdb(f).with_context(|| f.display().to_string())).collect::<anyhow::Result<Vec<_>>>()?;
    let ids: Vec<String> = files.iter().map(|f| stem(f)).collect();

    let mut head = vec!["design".to_string(), "residues [count]".to_string()];
    if want("rco") {
        head.push("rco [fraction]".into());
    }
    if want("lrc") {
        head.push("long_range_contacts [count]".into());
    }
    if want("rog") {
        head.push("rog_ca [Å]".into());
    }
    if want("rog_all") {
        head.push("rog_all_atom [Å]".into());
    }
    if want("codesign") {
        head.extend(["codesign_rmsd [Å]", "max_ligand_shift [Å]", "codesignable"].map(String::from));
    }
    let mut table = Table::new(head);
    for (id, cloud) in ids.iter().zip(&clouds) {
        let mut row = vec![id.clone(), cloud.protein_residues().len().to_string()];
        if want("rco") || want("lrc") {
            let co = relative_contact_order(cloud).with_context(|| id.clone())?;
            if want("rco") {
                row.push(fmt_sig(co.rco));
            }
            if want("lrc") {
                row.push(co.contacts.to_string());
            }
        }
        if want("rog") {
            row.push(fmt_sig(radius_of_gyration(cloud, false)?));
        }
        if want("rog_all") {
            row.push(fmt_sig(radius_of_gyration(cloud, true)?));
        }
        if let (true, Some(dir)) = (want("codesign"), &a.refold) {
            let path = dir.join(format!("{id}.pdb"));
            let refold = read_pdb(&path).with_context(|| format!("refold for {id}"))?;
            let r = codesignable(cloud, &refold, CODESIGN_THRESHOLD).with_context(|| id.clone())?;
            let shift = r.ligand_distances.iter().cloned().fold(0.0, f64::max);
            row.extend([fmt_sig(r.backbone_rmsd), fmt_sig(shift), r.pass.to_string()]);
        }
        table.push(row);
    }
    run.write("metrics.csv", &table.to_csv())?;

    if want("diversity") {
        let motifs = ids.iter().zip(&clouds).map(|(id, c)| motif_frame(c, &a.motif, id)).collect::<anyhow::Result<Vec<_>>>()?;
        if motifs.len() < 2 {
            return Err(Error::Domain("diversity needs at least two structures".into()).into());
        }
        let unit = match metric {
            MotifMetric::Rmsd | MotifMetric::Frobenius => "Å",
            MotifMetric::ChemCost => "cost",
            MotifMetric::LddtDiversity => "fraction",
        };
        let nn = nn_diversity(&motifs, metric, run.exec)?;
        let mut t = Table::new(["design".to_string(), format!("nearest_{} [{unit}]", a.motif_metric)]);
        for (id, v) in ids.iter().zip(&nn) {
            t.push(vec![id.clone(), fmt_sig(*v)]);
        }
        run.write("diversity.csv", &t.to_csv())?;
        let mut s = Table::new(["metric", "value", "unit"]);
        s.push(vec![format!("mean_nearest_{}", a.motif_metric), fmt_sig(nn.iter().sum::<f64>() / nn.len() as f64), unit.into()]);
        s.push(vec!["cluster_ratio".into(), fmt_sig(cluster_ratio(&motifs, CLUSTER_THRESHOLD, run.exec)?), "fraction".into()]);
        run.write("diversity_summary.csv", &s.to_csv())?;
    }
    run.finish(argv)
}

fn losses(a: LossArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("losses", &a.common)?;
    let pred = read_pdb(&a.pred).context("prediction")?;
    let truth = read_pdb(&a.truth).context("ground truth")?;
    run.input(&a.pred);
    run.input(&a.truth);
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("prediction has {} atoms, truth has {}", pred.len(), truth.len())).into());
    }
    for (i, (p, t)) in pred.atoms.iter().zip(&truth.atoms).enumerate() {
        if p.name != t.name || p.residue_name != t.residue_name {
            return Err(Error::Shape(format!("atom {} differs: {} {} vs {} {}", i + 1, p.residue_name, p.name, t.residue_name, t.name)).into());
        }
    }
    let w = &run.config.losses;
    let flags = atom_flags(&truth);
    let resolved = resolved_atoms(&truth);
    let nucleotide: Vec<bool> = flags.iter().map(|f| f.nucleotide()).collect();
    let mse = weighted_mse(&pred.positions(), &truth.positions(), &flags, Some(&resolved), w)?;
    let keep: Vec<usize> = (0..truth.len()).filter(|&i| resolved[i]).collect();
    let pick = |c: &AtomCloud| keep.iter().map(|&i| c.atoms[i].pos).collect::<Vec<_>>();
    let nuc: Vec<bool> = keep.iter().map(|&i| nucleotide[i]).collect();
    let lddt = smooth_lddt_loss(&pick(&pred), &pick(&truth), &nuc)?;
    let mut t = Table::new(["metric", "value", "unit"]);
    t.push(vec!["weighted_mse".into(), fmt_sig(mse), "Å²".into()]);
    t.push(vec!["smooth_lddt".into(), fmt_sig(lddt), "fraction".into()]);
    if let Some(th) = a.t_hat {
        t.push(vec!["mse_scale".into(), fmt_sig(w.mse_scale(th)), "fraction".into()]);
        t.push(vec!["structure_loss".into(), fmt_sig(w.structure_loss(th, mse, lddt)), "Å²".into()]);
    }
    run.write("losses.csv", &t.to_csv())?;
    run.finish(argv)
}

fn report_table(reports: &[FilterReport]) -> Table {
    let mut t = Table::new([
        "design",
        "contacts [count]",
        "burial [fraction]",
        "enclosure [fraction]",
        "exposure [deg]",
        "hydrophobic_surface [fraction]",
        "net_charge [e]",
        "metal",
        "iptm",
        "ptm",
        "pae_chain [Å]",
        "iptm_chain",
        "score",
        "sequence_cluster",
        "structure_cluster",
        "pass",
        "failed",
        "selected",
    ]);
    for r in reports {
        t.push(vec![
            r.id.clone(),
            r.contacts.to_string(),
            fmt_sig(r.burial),
            fmt_sig(r.enclosure),
            fmt_sig(r.exposure_deg),
            fmt_sig(r.hydrophobic_surface),
            r.net_charge.to_string(),
            r.metal.map_or("na".into(), |m| m.to_string()),
            fmt_sig(r.confidence.iptm),
            fmt_sig(r.confidence.ptm),
            fmt_sig(r.confidence.pae_chain),
            fmt_sig(r.confidence.iptm_chain),
            fmt_sig(r.score),
            r.sequence_cluster.clone(),
            r.structure_cluster.clone(),
            r.passes().to_string(),
            r.checks.failed().join(" "),
            r.selected.to_string(),
        ]);
    }
    t
}

fn filter(a: FilterArgs, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start("filter", &a.common)?;
    let files = structure_files(&a.designs)?;
    let conf_dir = a.confidence.clone().unwrap_or_else(|| a.designs.clone());
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Missing(format!("{}: {e}", p.display())));
    let seq = ClusterMap::parse(&read(&a.seq_clusters)?).with_context(|| a.seq_clusters.display().to_string())?;
    let structure = ClusterMap::parse(&read(&a.struct_clusters)?).with_context(|| a.struct_clusters.display().to_string())?;
    let mut designs = Vec::with_capacity(files.len());
    for f in &files {
        let id = stem(f);
        let cloud = read_pdb(f).with_context(|| f.display().to_string())?;
        let conf_path = conf_dir.join(format!("{id}.conf"));
        let rec = ConfidenceRecord::parse(&read(&conf_path)?).with_context(|| conf_path.display().to_string())?;
        designs.push((id, cloud, rec));
    }
    run.input(&a.designs);
    run.input(&conf_dir);
    run.input(&a.seq_clusters);
    run.input(&a.struct_clusters);
    let (reports, picked) = run_filter(&designs, &seq, &structure, &run.config.filter, run.exec)?;
    run.write("report.csv", &report_table(&reports).to_csv())?;
    let mut sel = picked.join("\n");
    if !sel.is_empty() {
        sel.push('\n');
    }
    run.write("selected.txt", &sel)?;
    run.finish(argv)
}

