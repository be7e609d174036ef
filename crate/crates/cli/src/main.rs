use netestim_cli::commands::{self, BoundsArgs, GlobalOpts};
use netestim_cli::config::RunConfig;
use netestim_cli::CliError;
use std::path::PathBuf;

const USAGE: &str = "\
netestim - distributed estimation over lossy sensor networks

USAGE:
  netestim <COMMAND> [FLAGS]

COMMANDS:
  topo        Build a communication graph, write its edge list
  thresholds  Solve the per-node weight caps on one topology
  run         One Monte Carlo run with full traces
  bench       Full benchmark sweep (5 signals x 4 loss levels)
  bounds      Print closed-form performance bounds, write figure grids

GLOBAL FLAGS:
  --out DIR        Output directory (default: out)
  --jobs N         Worker threads for trials (default: available cores)
  --seed N         Override the master seed
  --config FILE    Load a config or manifest file

TOPOLOGY FLAGS (topo, thresholds):
  --family NAME    geometric | line | cayley | star
  --n N            Node count
  --side S         Square side (geometric)
  --radius R       Connection radius (geometric)
  --gen LIST       Comma-separated generators (cayley)
  --theta MODE     two_hop | neighborhood
  --under-losses   Solve caps under one sampled realization

COMMAND FLAGS:
  thresholds --gamma G   Cap-system budget in (0, 1)
  run/bench --estimators LIST --trials N
  bounds --n N --m M --q Q --gamma G --sigma2 S --delta D --upsilon U

EXAMPLES:
  netestim topo --family geometric --n 20 --seed 1
  netestim topo --family cayley --n 15 --gen 0,1,3,4,11,12,14
  netestim thresholds --family line --n 5 --gamma 0.8
  netestim run --config configs/paper_fig5.cfg --trials 1 --seed 7
  netestim bench --config configs/paper_fig5.cfg --jobs 8
  netestim bounds --n 20 --gamma 0.9
";

struct Parsed {
    command: String,
    config: RunConfig,
    opts: GlobalOpts,
    gamma: Option<f64>,
    bounds: BoundsArgs,
}

fn parse_args(args: &[String]) -> Result<Parsed, CliError> {
    if args.is_empty() {
        return Err(CliError::Usage("missing command".into()));
    }
    let command = args[0].clone();
    match command.as_str() {
        "topo" | "thresholds" | "run" | "bench" | "bounds" => {}
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            std::process::exit(0);
        }
        other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
    }

    let mut config = RunConfig::default();
    let mut opts = GlobalOpts::default();
    let mut gamma = None;
    let mut bounds = BoundsArgs::default();
    let mut radius_given = false;

    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut value_of = |name: &str| -> Result<String, CliError> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("missing value for {name}")))
        };
        let parse_f64 = |name: &str, v: &str| -> Result<f64, CliError> {
            v.parse()
                .map_err(|e| CliError::Usage(format!("{name} = `{v}`: {e}")))
        };
        let parse_usize = |name: &str, v: &str| -> Result<usize, CliError> {
            v.parse()
                .map_err(|e| CliError::Usage(format!("{name} = `{v}`: {e}")))
        };
        match flag.as_str() {
            "--help" | "-h" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => {
                let path = value_of("--config")?;
                config = RunConfig::from_file(&PathBuf::from(path))?;
            }
            "--out" => opts.out = PathBuf::from(value_of("--out")?),
            "--jobs" => opts.jobs = parse_usize("--jobs", &value_of("--jobs")?)?,
            "--seed" => {
                let v = value_of("--seed")?;
                let seed: u64 = v
                    .parse()
                    .map_err(|e| CliError::Usage(format!("--seed = `{v}`: {e}")))?;
                config.master_seed = seed;
                config.topology_seed = seed;
            }
            "--family" => {
                let v = value_of("--family")?;
                match v.as_str() {
                    "geometric" | "line" | "cayley" | "star" => config.family = v,
                    other => {
                        return Err(CliError::Usage(format!("unknown family `{other}`")));
                    }
                }
            }
            "--n" => {
                let v = value_of("--n")?;
                config.n = parse_usize("--n", &v)?;
                bounds.n = config.n;
                if !radius_given {
                    config.radius = netestim::sim::default_radius(config.n);
                    config.side = config.n as f64 / 2.0;
                }
            }
            "--side" => config.side = parse_f64("--side", &value_of("--side")?)?,
            "--radius" => {
                config.radius = parse_f64("--radius", &value_of("--radius")?)?;
                radius_given = true;
            }
            "--gen" => {
                let v = value_of("--gen")?;
                config.generators = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_usize("--gen", s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "--theta" => {
                config.theta_mode = value_of("--theta")?.parse().map_err(CliError::Usage)?;
            }
            "--under-losses" => config.under_losses = true,
            "--gamma" => {
                let v = parse_f64("--gamma", &value_of("--gamma")?)?;
                gamma = Some(v);
                bounds.gamma = v;
            }
            "--estimators" => {
                let v = value_of("--estimators")?;
                config.estimators = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(CliError::Usage))
                    .collect::<Result<_, _>>()?;
            }
            "--trials" => config.trials = parse_usize("--trials", &value_of("--trials")?)?,
            "--signal" => {
                config.signal_kind = value_of("--signal")?.parse().map_err(CliError::Usage)?;
            }
            "--freq-scale" => {
                config.freq_scale = parse_f64("--freq-scale", &value_of("--freq-scale")?)?
            }
            "--sigma2" => {
                let v = parse_f64("--sigma2", &value_of("--sigma2")?)?;
                config.sigma2 = v;
                bounds.sigma2 = v;
            }
            "--m" => bounds.m = parse_usize("--m", &value_of("--m")?)?,
            "--q" => {
                let v = parse_f64("--q", &value_of("--q")?)?;
                config.q = v;
                bounds.q = v;
            }
            "--delta" => bounds.delta = parse_f64("--delta", &value_of("--delta")?)?,
            "--upsilon" => {
                let v = parse_f64("--upsilon", &value_of("--upsilon")?)?;
                config.upsilon = v;
                bounds.upsilon = v;
            }
            other => return Err(CliError::Usage(format!("unknown flag `{other}`"))),
        }
    }

    Ok(Parsed {
        command,
        config,
        opts,
        gamma,
        bounds,
    })
}

fn run(args: &[String]) -> Result<(), CliError> {
    let parsed = parse_args(args)?;
    let summary = match parsed.command.as_str() {
        "topo" => commands::cmd_topo(&parsed.config, &parsed.opts)?,
        "thresholds" => {
            let gamma = parsed
                .gamma
                .or(parsed.config.gamma_max)
                .ok_or_else(|| CliError::Usage("thresholds needs --gamma".into()))?;
            commands::cmd_thresholds(&parsed.config, gamma, &parsed.opts)?
        }
        "run" => commands::cmd_run(&parsed.config, &parsed.opts)?,
        "bench" => commands::cmd_bench(&parsed.config, &parsed.opts)?,
        "bounds" => commands::cmd_bounds(&parsed.bounds, &parsed.opts)?,
        _ => unreachable!(),
    };
    print!("{summary}");
    if !summary.ends_with('\n') {
        println!();
    }
    println!("outputs written to {}", parsed.opts.out.display());
    Ok(())
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(err) = run(&args) {
        eprintln!("{err}");
        if matches!(err, CliError::Usage(_)) {
            eprintln!("\n{USAGE}");
        }
        std::process::exit(err.exit_code());
    }
}
