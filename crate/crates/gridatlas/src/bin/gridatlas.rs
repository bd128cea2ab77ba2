//! gridatlas CLI: one gridded population dataset, many maps.
//!
//! Exit codes: 0 success, 2 input error, 3 parameter error, 4 numerical
//! failure, 5 network error, 6 integrity error, 10 informational notice
//! (`fetch grid` instructions).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridatlas::commands::{self, Ctx, FetchOutcome};
use gridatlas::config::RunConfig;
use gridatlas::error::Error;

#[derive(Parser)]
#[command(name = "gridatlas", version, about = "Gridded world-population mapping engine")]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Input population grid (.asc or .csv; overrides the config).
    #[arg(long, global = true)]
    grid: Option<PathBuf>,

    /// Zone polygons GeoJSON (overrides the config).
    #[arg(long, global = true)]
    zones: Option<PathBuf>,

    /// Coastline polylines GeoJSON (overrides the config).
    #[arg(long, global = true)]
    coast: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Frequency table, summary statistics, cumulative shares, coverage.
    Stats,
    /// Render one map representation (SVG + provenance sidecar).
    Map {
        /// circles | choropleth | cartogram | dots | dorling | potential |
        /// links | hex | coastal | glocal | voids | linemap | halfmap
        kind: String,
        /// Seed for stochastic placement (dots).
        #[arg(long)]
        seed: Option<u64>,
        /// Planar (map-plane) link distances instead of great-circle.
        #[arg(long)]
        planar: bool,
    },
    /// Render every representation and write an index page.
    MakeAll,
    /// Download a public basemap layer (countries | coastline | grid).
    Fetch {
        name: String,
        /// Override the default download URL.
        #[arg(long)]
        url: Option<String>,
        /// Pin the expected sha256; mismatches are quarantined.
        #[arg(long)]
        sha256: Option<String>,
        /// Target directory (default: GRIDATLAS_DATA or ./data).
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Rasterize a synthetic grid spec (TOML) to an ASCII grid file.
    Synth {
        spec: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output file (default: <spec stem>.asc in the output directory).
        #[arg(long)]
        out_file: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. }
        | Error::HeaderParse { .. }
        | Error::Lexical { .. }
        | Error::Structure { .. }
        | Error::InvalidValue { .. }
        | Error::UnsupportedFeature { .. }
        | Error::Geometry { .. }
        | Error::MissingInput { .. } => 2,
        Error::Bounds { .. }
        | Error::EmptyDomain { .. }
        | Error::DegenerateClasses { .. }
        | Error::Domain { .. }
        | Error::InvalidParams { .. }
        | Error::WrongKind { .. }
        | Error::UnreachableShare { .. }
        | Error::JoinMismatch { .. }
        | Error::Composition { .. }
        | Error::Config { .. } => 3,
        Error::Numerical { .. } => 4,
        Error::Network { .. } => 5,
        Error::Integrity { .. } => 6,
    }
}

const EXIT_NOTICE: u8 = 10;

fn build_ctx(cli: &Cli) -> Result<Ctx, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_toml(&commands::read_file(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(g) = &cli.grid {
        config.data.grid = Some(g.clone());
    }
    if let Some(z) = &cli.zones {
        config.data.zones = Some(z.clone());
    }
    if let Some(c) = &cli.coast {
        config.data.coast = Some(c.clone());
    }
    if let Some(o) = &cli.out {
        config.output.dir = o.clone();
    }
    Ok(Ctx::new(config))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match &cli.cmd {
        Cmd::Stats => {
            let ctx = build_ctx(&cli)?;
            let files = commands::cmd_stats(&ctx)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Cmd::Map { kind, seed, planar } => {
            let mut ctx = build_ctx(&cli)?;
            if let Some(s) = seed {
                ctx.config.dots.seed = *s;
            }
            if *planar {
                ctx.config.links.planar = true;
            }
            let files = commands::cmd_map(kind, &ctx)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Cmd::MakeAll => {
            let ctx = build_ctx(&cli)?;
            let results = commands::cmd_make_all(&ctx)?;
            let mut failed = 0;
            for (kind, result) in &results {
                match result {
                    Ok(files) => println!("{kind}: {} file(s)", files.len()),
                    Err(msg) => {
                        eprintln!("{kind}: FAILED — {msg}");
                        failed += 1;
                    }
                }
            }
            println!("index: {}", ctx.out_dir.join("index.html").display());
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Cmd::Fetch {
            name,
            url,
            sha256,
            data_dir,
        } => {
            let dir = data_dir
                .clone()
                .or_else(|| std::env::var_os("GRIDATLAS_DATA").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("data"));
            match commands::cmd_fetch(name, url.as_deref(), sha256.as_deref(), &dir)? {
                FetchOutcome::Saved(path) => {
                    println!("{}", path.display());
                    Ok(0)
                }
                FetchOutcome::GridInstructions(text) => {
                    println!("{text}");
                    Ok(EXIT_NOTICE)
                }
            }
        }
        Cmd::Synth {
            spec,
            seed,
            out_file,
        } => {
            let ctx = build_ctx(&cli)?;
            let out = out_file.clone().unwrap_or_else(|| {
                let stem = spec
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "synth".to_string());
                ctx.out_dir.join(format!("{stem}.asc"))
            });
            let path = commands::cmd_synth(spec, *seed, &out)?;
            println!("{}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
