use std::fs::{self, File};
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use privride::knn::{write_key_set, Role, Scheme};
use privride::par::Execution;
use privride::sim::{
    generate_workload, run_experiment, submit_workload, ExperimentConfig, GridCity, MetricsReport, Workload,
    WorkloadConfig,
};
use privride::tos::{serve, Client, MatchDetail, MatchResult, Server, ServerConfig, TcpTransport, TrustedAuthority};
use privride::trs::Preference;

#[derive(Parser)]
#[command(name = "privride", version, about = "Encrypted ride matching: key service, organizer and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive key sets for one role and write them to files.
    Keygen(KeygenArgs),
    /// Run the organizer over TCP.
    Serve(ServeArgs),
    /// Generate a workload file.
    Workload(WorkloadArgs),
    /// Encrypt and submit a workload file to a running server.
    Submit(SubmitArgs),
    /// Ask a running server for a matching round and print the matches.
    Match(MatchArgs),
    /// Run experiment sweeps and emit CSV metrics.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    DriverNrs,
    RiderNrs,
    DriverTrs,
    RiderTrs,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::DriverNrs => Role::DriverNrs,
            RoleArg::RiderNrs => Role::RiderNrs,
            RoleArg::DriverTrs => Role::DriverTrs,
            RoleArg::RiderTrs => Role::RiderTrs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Nrs,
    Trs,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Nrs => Scheme::Nrs,
            SchemeArg::Trs => Scheme::Trs,
        }
    }
}

#[derive(Args)]
struct KeygenArgs {
    /// Server config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    role: RoleArg,
    /// Directory that receives one file per key set.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit after this many connections have closed.
    #[arg(long)]
    max_connections: Option<usize>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, default_value_t = 40)]
    rows: usize,
    #[arg(long, default_value_t = 40)]
    cols: usize,
    #[arg(long, default_value_t = 30)]
    offers: usize,
    #[arg(long, default_value_t = 90)]
    requests: usize,
    #[arg(long, default_value_t = 0.9)]
    hit_rate: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    transfer_share: f64,
    #[arg(long, default_value_t = 5)]
    capacity: u32,
    #[arg(long, default_value = "min_c")]
    preference: Preference,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubmitArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    #[arg(long)]
    workload: PathBuf,
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    /// Registered users per role.
    #[arg(long, default_value_t = 2)]
    pool: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sweep {
    /// A single point.
    None,
    Requests,
    Offers,
    Cells,
    Ell,
    Fpp,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Sweep::None)]
    sweep: Sweep,
    #[arg(long, default_value_t = 40)]
    rows: usize,
    #[arg(long, default_value_t = 40)]
    cols: usize,
    #[arg(long, default_value_t = 30)]
    offers: usize,
    #[arg(long, default_value_t = 90)]
    requests: usize,
    #[arg(long, default_value_t = 5)]
    capacity: u32,
    #[arg(long, default_value_t = 25)]
    ell: usize,
    #[arg(long, default_value_t = 0.01)]
    fpp: f64,
    #[arg(long, default_value = "min_c")]
    preference: Preference,
    /// Runs per point; seeds are `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report the mean over seeds instead of one row per run.
    #[arg(long)]
    mean: bool,
    /// A 189 x 83 city with 150 offers and 300 requests.
    #[arg(long)]
    large_city: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ServerConfig> {
    match path {
        Some(p) => ServerConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ServerConfig::default()),
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn keygen(args: KeygenArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let bloom = config.bloom()?;
    let mut authority = TrustedAuthority::new(config.scheme_params()?, bloom.alpha, config.max_items, args.seed)?;
    let role: Role = args.role.into();
    fs::create_dir_all(&args.out)?;
    for (i, keys) in authority.derive(role)?.iter().enumerate() {
        let path = args.out.join(format!("{:?}-{i}.key", keys.role()).to_lowercase());
        write_key_set(File::create(&path)?, keys)?;
        println!("{}", path.display());
    }
    let p = authority.public_params();
    println!("epoch={} salt={} m={} alpha={} k={} ell={}", p.epoch, p.salt, p.m, p.alpha, p.k, p.ell);
    Ok(())
}

fn run_server(args: ServeArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    config.seed = args.seed;
    if let Some(port) = args.port {
        config.port = port;
    }
    let port = config.port;
    let server = Arc::new(Mutex::new(Server::new(config, execution(args.sequential))?));
    let listener = TcpListener::bind(("0.0.0.0", port)).with_context(|| format!("binding port {port}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve(listener, server, args.max_connections)?;
    Ok(())
}

fn workload(args: WorkloadArgs) -> Result<()> {
    let cfg = WorkloadConfig {
        n_offers: args.offers,
        n_requests: args.requests,
        seed: args.seed,
        hit_rate: args.hit_rate,
        transfer_share: args.transfer_share,
        capacity: args.capacity,
        preference: args.preference,
        ..Default::default()
    };
    let w = generate_workload(GridCity::new(args.rows, args.cols)?, &cfg)?;
    output(args.out.as_deref())?.write_all(w.to_text().as_bytes())?;
    Ok(())
}

fn roles(scheme: Scheme) -> (Role, Role) {
    match scheme {
        Scheme::Nrs => (Role::DriverNrs, Role::RiderNrs),
        Scheme::Trs => (Role::DriverTrs, Role::RiderTrs),
    }
}

fn submit(args: SubmitArgs) -> Result<()> {
    let text = fs::read_to_string(&args.workload).with_context(|| format!("reading {}", args.workload.display()))?;
    let w = Workload::parse(&text)?;
    let scheme: Scheme = args.scheme.into();
    let (driver, rider) = roles(scheme);
    let clients = |role: Role, salt: u64| -> Result<Vec<Client<TcpTransport>>> {
        (0..args.pool.max(1))
            .map(|i| {
                let seed = args.seed.wrapping_add(salt * 1000 + i as u64);
                Ok(Client::register(TcpTransport::connect(args.addr.as_str())?, role, args.epoch, seed)?)
            })
            .collect()
    };
    let mut drivers = clients(driver, 1)?;
    let mut riders = clients(rider, 2)?;
    let sub = submit_workload(&mut drivers, &mut riders, &w, scheme, None)?;
    println!(
        "submitted {} offers ({} bytes) and {} requests ({} bytes)",
        sub.offer_index.len(),
        sub.offer_bytes,
        sub.request_index.len(),
        sub.request_bytes
    );
    Ok(())
}

fn describe(r: &MatchResult) -> String {
    let offers: Vec<_> = r.offer_ids.iter().map(u64::to_string).collect();
    let detail = match &r.detail {
        MatchDetail::Nrs(case) => case.label().to_string(),
        MatchDetail::Trs { cell_count, transfer_count, .. } => format!("cells={cell_count} transfers={transfer_count}"),
    };
    format!("{},{},{}", r.request_id, offers.join(" "), detail)
}

fn run_match(args: MatchArgs) -> Result<()> {
    let scheme: Scheme = args.scheme.into();
    let (_, rider) = roles(scheme);
    let mut client = Client::register(TcpTransport::connect(args.addr.as_str())?, rider, args.epoch, args.seed)?;
    println!("request,offers,detail");
    for r in client.run_matching(scheme)? {
        println!("{}", describe(&r));
    }
    Ok(())
}

fn bench_points(args: &BenchArgs) -> Result<Vec<ExperimentConfig>> {
    let (rows, cols, offers, requests) =
        if args.large_city { (189, 83, 150, 300) } else { (args.rows, args.cols, args.offers, args.requests) };
    let base = |seed: u64| -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig {
            city: GridCity::new(rows, cols)?,
            workload: WorkloadConfig {
                n_offers: offers,
                n_requests: requests,
                seed,
                capacity: args.capacity,
                preference: args.preference,
                ..Default::default()
            },
            exec: execution(args.sequential),
            ..Default::default()
        };
        cfg.server.ell = args.ell;
        cfg.server.fpp = args.fpp;
        cfg.server.seed = seed;
        Ok(cfg)
    };
    let mut points = Vec::new();
    for seed in args.seed..args.seed + args.seeds {
        match args.sweep {
            Sweep::None => points.push(base(seed)?),
            Sweep::Requests => {
                for n in [30, 60, 90, 150, 300] {
                    let mut c = base(seed)?;
                    c.workload.n_requests = n;
                    points.push(c);
                }
            }
            Sweep::Offers => {
                for n in [10, 30, 50] {
                    let mut c = base(seed)?;
                    c.workload.n_offers = n;
                    points.push(c);
                }
            }
            Sweep::Cells => {
                for side in [20, 40, 60, 80] {
                    let mut c = base(seed)?;
                    c.city = GridCity::new(side, side)?;
                    c.workload.route_len = (15, 30);
                    c.schemes = vec![Scheme::Nrs];
                    points.push(c);
                }
            }
            Sweep::Ell => {
                for ell in [25, 50, 100, 200] {
                    let mut c = base(seed)?;
                    c.server.ell = ell;
                    c.schemes = vec![Scheme::Trs];
                    points.push(c);
                }
            }
            Sweep::Fpp => {
                for fpp in [0.1, 0.01] {
                    let mut c = base(seed)?;
                    c.server.fpp = fpp;
                    c.schemes = vec![Scheme::Nrs];
                    points.push(c);
                }
            }
        }
    }
    Ok(points)
}

fn bench(args: BenchArgs) -> Result<()> {
    let points = bench_points(&args)?;
    if points.is_empty() {
        bail!("no runs requested");
    }
    let mut report = MetricsReport::default();
    for (i, cfg) in points.iter().enumerate() {
        eprintln!("run {}/{}", i + 1, points.len());
        report.extend(run_experiment(cfg)?);
    }
    if args.mean {
        report = mean_per_point(&report);
    }
    report.write_csv(output(args.out.as_deref())?)?;
    Ok(())
}

/// Groups rows that differ only in seed and averages each group.
fn mean_per_point(report: &MetricsReport) -> MetricsReport {
    let key = |r: &privride::sim::MetricsRow| {
        (r.scheme.clone(), r.rows, r.cols, r.n_offers, r.n_requests, r.m, r.alpha, r.ell)
    };
    let mut keys = Vec::new();
    for r in &report.rows {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    let mut out = MetricsReport::default();
    for k in keys {
        let group = MetricsReport { rows: report.rows.iter().filter(|r| key(r) == k).cloned().collect() };
        out.extend(group.mean_by_scheme());
    }
    out
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Keygen(a) => keygen(a),
        Command::Serve(a) => run_server(a),
        Command::Workload(a) => workload(a),
        Command::Submit(a) => submit(a),
        Command::Match(a) => run_match(a),
        Command::Bench(a) => bench(a),
    }
}
