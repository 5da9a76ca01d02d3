//! `qnd`: build conditional states, apply decoherence channels, evaluate
//! metrics, run sweeps and figure presets, and self-check against oracles.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qnd_core::cache::Cache;
use qnd_core::channels::ChannelSpec;
use qnd_core::figures::{replay, run_figure, FIGURE_IDS};
use qnd_core::metrics::{empirical_theta_b, evaluate_metric, Metric};
use qnd_core::qnd::{conditional_state, SystemConfig};
use qnd_core::selfcheck::{run_oracle_check, Level};
use qnd_core::sweep::{parse_number, run_sweep, SweepRequest, TauGrid};
use qnd_core::table::{Cell, Format, Table};

#[derive(Parser)]
#[command(
    name = "qnd",
    version,
    about = "QND-entangled atomic ensembles under decoherence"
)]
struct Cli {
    /// Cache directory (default: $QND_CACHE_DIR; no caching when unset).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key=value` file supplying defaults for the parameter flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitudes of the conditional pure state.
    State(Params),
    /// Elements of the decohered conditional density matrix.
    Channel(Params),
    /// All (or the selected) metrics at one parameter point.
    Metrics(Params),
    /// Metrics over lists of N, channel rates and a tau grid.
    Sweep(Params),
    /// Data files for a figure preset, plus a replayable manifest.
    Figure {
        /// Preset id, or `list`.
        id: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// csv | json (default: csv)
        #[arg(long)]
        format: Option<String>,
    },
    /// Re-run a figure manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare the closed forms against independent oracles.
    OracleCheck {
        /// fast | full (default: fast)
        #[arg(long)]
        level: Option<String>,
    },
}

/// Parameter flags. List-valued flags take comma-separated values.
#[derive(Args, Clone, Default)]
struct Params {
    /// Atoms per ensemble (list for sweeps; default: 10).
    #[arg(long = "N")]
    n: Option<String>,
    /// Coherent amplitude (default: sqrt(nc + nd)).
    #[arg(long)]
    alpha: Option<String>,
    /// Photons counted in detector c (default: 100).
    #[arg(long)]
    nc: Option<u32>,
    /// Photons counted in detector d (default: 0).
    #[arg(long)]
    nd: Option<u32>,
    /// `start:stop:count` or a single value; `pi` is accepted (default: 0.1).
    #[arg(long)]
    tau: Option<String>,
    /// none | phase | lossgain | dephase
    #[arg(long)]
    channel: Option<String>,
    /// Phase-diffusion rates (channel `phase`).
    #[arg(long)]
    kappa: Option<String>,
    /// Photon-loss rates (channel `lossgain`).
    #[arg(long)]
    gamma: Option<String>,
    /// Photon-gain rates (channel `lossgain`; all loss/gain pairs are run).
    #[arg(long)]
    gain: Option<String>,
    /// Atomic dephasing rates (channel `dephase`).
    #[arg(long = "Gamma")]
    dephasing: Option<String>,
    /// Metric names (default: all).
    #[arg(long)]
    metric: Option<String>,
    /// CHSH angle (default: empirical optimum for N).
    #[arg(long = "theta-b")]
    theta_b: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
}

type ConfigFile = BTreeMap<String, String>;

fn read_config(path: &Path) -> Result<ConfigFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = ConfigFile::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        map.insert(
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        );
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 17] = [
    "N",
    "alpha",
    "nc",
    "nd",
    "tau",
    "channel",
    "kappa",
    "gamma",
    "gain",
    "Gamma",
    "metric",
    "theta-b",
    "out",
    "format",
    "cache-dir",
    "threads",
    "level",
];

impl Params {
    /// Fills unset flags from the config file; flags win.
    fn merge(mut self, cfg: &ConfigFile) -> Result<Self> {
        fn fill(slot: &mut Option<String>, cfg: &ConfigFile, key: &str) {
            if slot.is_none() {
                *slot = cfg.get(key).cloned();
            }
        }
        fill(&mut self.n, cfg, "N");
        fill(&mut self.alpha, cfg, "alpha");
        fill(&mut self.tau, cfg, "tau");
        fill(&mut self.channel, cfg, "channel");
        fill(&mut self.kappa, cfg, "kappa");
        fill(&mut self.gamma, cfg, "gamma");
        fill(&mut self.gain, cfg, "gain");
        fill(&mut self.dephasing, cfg, "Gamma");
        fill(&mut self.metric, cfg, "metric");
        fill(&mut self.theta_b, cfg, "theta-b");
        fill(&mut self.format, cfg, "format");
        if self.nc.is_none() {
            self.nc = cfg
                .get("nc")
                .map(|v| v.parse())
                .transpose()
                .context("config nc")?;
        }
        if self.nd.is_none() {
            self.nd = cfg
                .get("nd")
                .map(|v| v.parse())
                .transpose()
                .context("config nd")?;
        }
        if self.out.is_none() {
            self.out = cfg.get("out").map(PathBuf::from);
        }
        Ok(self)
    }

    fn n_atoms(&self) -> Result<Vec<usize>> {
        let s = self.n.as_deref().unwrap_or("10");
        s.split(',')
            .map(|x| x.trim().parse().with_context(|| format!("bad N '{x}'")))
            .collect()
    }

    fn counts(&self) -> (u32, u32) {
        (self.nc.unwrap_or(100), self.nd.unwrap_or(0))
    }

    fn alpha(&self) -> Result<f64> {
        let (nc, nd) = self.counts();
        match &self.alpha {
            Some(a) => Ok(parse_number(a)?),
            None => Ok(((nc + nd) as f64).sqrt()),
        }
    }

    fn tau(&self) -> Result<TauGrid> {
        Ok(self.tau.as_deref().unwrap_or("0.1").parse()?)
    }

    fn channels(&self) -> Result<Vec<ChannelSpec>> {
        let list = |v: &Option<String>| -> Result<Vec<f64>> {
            match v {
                None => Ok(vec![0.0]),
                Some(s) => s.split(',').map(|x| Ok(parse_number(x)?)).collect(),
            }
        };
        let kind = self.channel.as_deref().unwrap_or("none");
        let specs: Vec<ChannelSpec> = match kind {
            "none" => vec![ChannelSpec::NoDecoherence],
            "phase" => list(&self.kappa)?
                .into_iter()
                .map(|kappa| ChannelSpec::PhaseDiffusion { kappa })
                .collect(),
            "lossgain" => {
                let gains = list(&self.gain)?;
                list(&self.gamma)?
                    .into_iter()
                    .flat_map(|gamma| {
                        gains
                            .iter()
                            .map(move |&gain| ChannelSpec::LossGain { gamma, gain })
                    })
                    .collect()
            }
            "dephase" => list(&self.dephasing)?
                .into_iter()
                .map(|rate| ChannelSpec::Dephasing { rate })
                .collect(),
            other => bail!("unknown channel '{other}' (none|phase|lossgain|dephase)"),
        };
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }

    fn metrics(&self) -> Result<Vec<Metric>> {
        match &self.metric {
            None => Ok(Metric::ALL.to_vec()),
            Some(s) => s.split(',').map(|m| Ok(m.trim().parse()?)).collect(),
        }
    }

    fn theta_b(&self) -> Result<Option<f64>> {
        self.theta_b
            .as_deref()
            .map(parse_number)
            .transpose()
            .map_err(Into::into)
    }

    fn format(&self) -> Result<Format> {
        Ok(self.format.as_deref().unwrap_or("csv").parse()?)
    }

    /// The single parameter point of state/channel/metrics.
    fn point(&self) -> Result<(SystemConfig, ChannelSpec)> {
        let ns = self.n_atoms()?;
        let taus = self.tau()?.values();
        let chs = self.channels()?;
        if ns.len() != 1 || taus.len() != 1 || chs.len() != 1 {
            bail!("this subcommand takes a single N, tau and channel rate; use `sweep` for lists");
        }
        let (nc, nd) = self.counts();
        Ok((
            SystemConfig::new(ns[0], self.alpha()?, nc, nd, taus[0])?,
            chs[0],
        ))
    }

    fn emit(&self, table: &Table) -> Result<()> {
        let format = self.format()?;
        match &self.out {
            Some(path) => table.write(path, format)?,
            None => std::io::stdout().write_all(table.render(format).as_bytes())?,
        }
        Ok(())
    }
}

fn state_table(cfg: &SystemConfig) -> Result<Table> {
    let st = conditional_state(cfg)?;
    log::info!("outcome probability {:e}", st.outcome_probability());
    let mut t = Table::new(["k1", "k2", "re", "im", "probability"]);
    for k1 in 0..=cfg.n_atoms {
        for k2 in 0..=cfg.n_atoms {
            let a = st.state.amplitude(k1, k2);
            t.push(vec![
                k1.into(),
                k2.into(),
                a.re.into(),
                a.im.into(),
                a.norm_sqr().into(),
            ])?;
        }
    }
    Ok(t)
}

fn channel_table(cfg: &SystemConfig, ch: &ChannelSpec, cache: Option<&Cache>) -> Result<Table> {
    let rho = qnd_core::cache::density_with(cache, cfg, ch)?;
    log::info!("outcome weight {:e}", rho.outcome_weight);
    let n = cfg.n_atoms;
    let mut t = Table::new(["k1", "k2", "k1p", "k2p", "re", "im"]);
    for (i, j) in (0..rho.dim()).flat_map(|i| (0..rho.dim()).map(move |j| (i, j))) {
        let z = rho.matrix[(i, j)];
        let cells: Vec<Cell> = vec![
            (i / (n + 1)).into(),
            (i % (n + 1)).into(),
            (j / (n + 1)).into(),
            (j % (n + 1)).into(),
            z.re.into(),
            z.im.into(),
        ];
        t.push(cells)?;
    }
    Ok(t)
}

fn metrics_table(
    p: &Params,
    cfg: &SystemConfig,
    ch: &ChannelSpec,
    cache: Option<&Cache>,
) -> Result<Table> {
    let rho = qnd_core::cache::density_with(cache, cfg, ch)?;
    let theta_b = p
        .theta_b()?
        .unwrap_or_else(|| empirical_theta_b(cfg.n_atoms));
    let mut t = Table::new(["metric", "value", "status"]);
    for m in p.metrics()? {
        let row: Vec<Cell> = match evaluate_metric(&rho, m, theta_b) {
            Ok(v) => vec![m.name().into(), v.into(), "ok".into()],
            Err(qnd_core::Error::UndefinedDirection(_)) => {
                vec![m.name().into(), Cell::Empty, "undefined".into()]
            }
            Err(e) => return Err(e.into()),
        };
        t.push(row)?;
    }
    Ok(t)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => read_config(p)?,
        None => ConfigFile::new(),
    };
    if let Some(bad) = config.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        bail!("unknown config key '{bad}'");
    }

    let threads = match cli.threads {
        Some(t) => Some(t),
        None => config
            .get("threads")
            .map(|v| v.parse())
            .transpose()
            .context("config threads")?,
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let cache_dir = cli
        .cache_dir
        .clone()
        .or_else(|| config.get("cache-dir").map(PathBuf::from));
    let cache = match cache_dir {
        Some(d) => Some(Cache::new(d)?),
        None => Cache::from_env()?,
    };
    let cache = cache.as_ref();

    match cli.command {
        Command::State(p) => {
            let p = p.merge(&config)?;
            let (cfg, _) = p.point()?;
            p.emit(&state_table(&cfg)?)?;
        }
        Command::Channel(p) => {
            let p = p.merge(&config)?;
            let (cfg, ch) = p.point()?;
            p.emit(&channel_table(&cfg, &ch, cache)?)?;
        }
        Command::Metrics(p) => {
            let p = p.merge(&config)?;
            let (cfg, ch) = p.point()?;
            p.emit(&metrics_table(&p, &cfg, &ch, cache)?)?;
        }
        Command::Sweep(p) => {
            let p = p.merge(&config)?;
            let (n_c, n_d) = p.counts();
            let req = SweepRequest {
                n_atoms: p.n_atoms()?,
                alpha: p.alpha()?,
                n_c,
                n_d,
                tau: p.tau()?,
                channels: p.channels()?,
                metrics: p.metrics()?,
                theta_b: p.theta_b()?,
            };
            p.emit(&run_sweep(&req, cache)?)?;
        }
        Command::Figure { id, out, format } => {
            if id == "list" {
                println!("{}", FIGURE_IDS.join("\n"));
                return Ok(());
            }
            let format: Format = format
                .or_else(|| config.get("format").cloned())
                .as_deref()
                .unwrap_or("csv")
                .parse()?;
            for path in run_figure(&id, &out, format, cache)? {
                println!("{}", path.display());
            }
        }
        Command::Replay { manifest, out } => {
            for path in replay(&manifest, &out, cache)? {
                println!("{}", path.display());
            }
        }
        Command::OracleCheck { level } => {
            let level: Level = level
                .or_else(|| config.get("level").cloned())
                .as_deref()
                .unwrap_or("fast")
                .parse()?;
            let report = run_oracle_check(level)?;
            print!("{}", report.render());
            if !report.passed() {
                bail!("oracle check failed");
            }
        }
    }
    Ok(())
}
