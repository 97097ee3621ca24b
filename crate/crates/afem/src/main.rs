use std::path::PathBuf;
use std::process::ExitCode;

use afem::config::RunConfig;
use afem::{meshio, run_experiment};
use afem_core::mesh::uniform_red_refine;
use afem_core::problem::Benchmark;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afem", version, about = "Adaptive mixed and nonconforming finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write its convergence history.
    Run(RunArgs),
    /// Write the initial mesh of a benchmark in the plain-text mesh format.
    Mesh {
        #[arg(long)]
        problem: String,
        /// Uniform refinements applied before writing.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lshape, crack or eigen_sweep
    #[arg(long)]
    problem: Option<String>,
    /// uniform or adaptive
    #[arg(long)]
    mode: Option<String>,
    /// Dörfler bulk parameter in (0, 1]
    #[arg(long)]
    theta: Option<f64>,
    /// Stop before the number of mixed unknowns exceeds this.
    #[arg(long)]
    max_ndof: Option<usize>,
    /// Shift of eigen_sweep; without it the default grid is swept.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial mesh file replacing the built-in one.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write each level's assembled systems in Matrix Market format.
    #[arg(long)]
    dump_systems: bool,
}

impl RunArgs {
    fn resolve(self) -> afem::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| afem::Error::Config(format!("{}: {e}", path.display())))?;
            cfg.merge_text(&text)?;
        }
        let flags = [
            ("problem", self.problem),
            ("mode", self.mode),
            ("theta", self.theta.map(|x| x.to_string())),
            ("max_ndof", self.max_ndof.map(|x| x.to_string())),
            ("gamma", self.gamma.map(|x| x.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.mesh.is_some() {
            cfg.mesh = self.mesh;
        }
        cfg.dump_systems |= self.dump_systems;
        Ok(cfg)
    }
}

fn fail(e: afem::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => {
            let cfg = match args.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let mut stdout = std::io::stdout().lock();
            match run_experiment(&cfg, &mut stdout) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    if summary.any_singular() {
                        ExitCode::from(2)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Mesh { problem, refine, out } => {
            let mut mesh = match Benchmark::parse(&problem, None) {
                Ok(b) => b.instance().initial_mesh().clone(),
                Err(e) => return fail(e.into()),
            };
            for _ in 0..refine {
                mesh = uniform_red_refine(&mesh);
            }
            let comment = format!("{problem} initial mesh, {refine} uniform refinements");
            match meshio::write_mesh(&mesh, &out, Some(&comment)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
