use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irrframe::balayage::{lattice_balayage_table, BalayageTable};
use irrframe::compact::{perturbed_reconstruct, PerturbedAnalysis};
use irrframe::config::{Prepared, RunConfig};
use irrframe::frame::{estimate_frame_bounds, Direction, FrameSystem};
use irrframe::norms::{lambda_seq_norm, lp_function_norm};
use irrframe::verify::Verifier;
use irrframe::window::{build_lp_analyzer, calderon_dual};
use irrframe::{Error, Result, SampledSignal, Spectrum};
use serde_json::{json, Value};

/// Irregular anisotropic wavelet frames: construction, duals, norms and verification.
#[derive(Parser)]
#[command(name = "irrframe", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build ψ, τ and φ and report admissibility.
    Construct(Common),
    /// Solve the balayage table and the lattice targets.
    Balayage(Common),
    /// Analysis coefficients of the input signal.
    Analyze(Common),
    /// Dual synthesis from coefficients, with reconstruction errors.
    Synthesize(Common),
    /// Frame-bound estimates on the band.
    Bounds(Common),
    /// The configured norm batch on the input signal.
    Norms(Common),
    /// Compact window and Neumann reconstruction.
    Compact(Common),
    /// Every acceptance check.
    Verify(Common),
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    verbose: bool,
}

impl Ctx {
    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        f(&mut w)?;
        w.flush()?;
        self.log(&format!("wrote {}", self.path(name).display()));
        Ok(())
    }

    fn json(&self, name: &str, v: &Value) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, v).map_err(|e| Error::Internal(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn prepare(&self) -> Result<Prepared> {
        let p = self.cfg.prepare()?;
        self.log(&format!("prepared: b = {}, {} cell nodes, gap {}", p.b, p.nodes.nodes().len(), p.nodes.gap()));
        Ok(p)
    }

    fn system(&self, p: &Prepared) -> Result<FrameSystem> {
        let sys = p.frame_system(self.cfg.j_range)?;
        self.log(&format!("frame system: {} atoms", sys.atom_count()));
        Ok(sys)
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_rejection() {
        2
    } else if e.is_numerical() {
        4
    } else {
        1
    }
}

fn construct(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let tau = calderon_dual(&p.psi, &p.a, p.b)?;
    let phi = build_lp_analyzer(&p.a)?;
    let adm = p.admissibility();
    for (name, w) in [("psi", &p.psi), ("tau", &tau), ("phi", &phi)] {
        ctx.write(&format!("{name}_profile.csv"), |f| w.write_profile_csv(p.grid, f))?;
        let s = Spectrum::from_fn(p.grid, |x| w.eval(x)).to_signal();
        ctx.write(&format!("{name}.csv"), |f| s.write_csv(f))?;
    }
    ctx.write("nodes.csv", |f| irrframe::nodes::write_nodes_csv(p.nodes.nodes(), f))?;
    let meta = json!({
        "admissibility": adm,
        "b": p.b,
        "psi": {"meta": p.psi.meta(), "support": p.psi.support()},
        "tau": {"meta": tau.meta(), "support": tau.support()},
        "phi": {"meta": phi.meta(), "support": phi.support()},
        "nodes": {"count": p.nodes.nodes().len(), "gap": p.nodes.gap(), "max_per_cube": p.nodes.max_per_cube()},
    });
    ctx.json("construct.json", &meta)?;
    println!("{adm}");
    Ok(0)
}

fn balayage(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let ball = irrframe::balayage::Ball { center: p.psi.support().center.clone(), radius: p.psi.support().radius };
    let table = BalayageTable::periodic(p.b, &ball, &p.nodes, p.dual.r_trunc, p.dual.tol)?;
    ctx.write("balayage.csv", |f| table.write_csv(f))?;
    ctx.json("envelope.json", &table.envelope_summary())?;
    let d = p.grid.d;
    let ks: Vec<Vec<i64>> =
        (0..ctx.cfg.balayage.targets as i64).map(|k| if d == 1 { vec![k] } else { vec![k, 0] }).collect();
    let sols = lattice_balayage_table(&ks, p.b, &ball, &p.nodes, p.dual.r_trunc, p.dual.tol)?;
    ctx.write("balayage_targets.csv", |f| {
        writeln!(f, "k,target,nodes,residual_sup,residual_verify,reg_weight,C,c,slope")?;
        for (k, s) in &sols {
            let (bc, c, sl) = s.envelope.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |e| (e.big_c, e.c, e.slope));
            writeln!(
                f,
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                s.target.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                s.nodes.len(),
                s.residual_sup,
                s.residual_verify,
                s.reg_weight,
                bc,
                c,
                sl
            )?;
        }
        Ok(())
    })?;
    let worst = sols.values().map(|s| s.residual_sup).fold(0.0, f64::max);
    println!("{}", json!({"table_max_residual": table.max_residual(), "targets": sols.len(), "targets_max_residual": worst}));
    Ok(0)
}

fn analyze(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let sys = ctx.system(&p)?;
    let f = p.signal(&ctx.cfg, &sys)?;
    let c = sys.analyze(&f, false)?;
    ctx.write("signal.csv", |w| f.write_csv(w))?;
    ctx.write("coefficients.csv", |w| c.write_csv(w))?;
    let rep = json!({
        "atoms": sys.atom_count(),
        "band_coverage": sys.band_coverage(&f.spectrum()),
        "coefficient_l2": c.l2_norm(),
        "signal_l2": f.norm(),
    });
    ctx.json("analyze.json", &rep)?;
    println!("{rep}");
    Ok(0)
}

fn synthesize(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let sys = ctx.system(&p)?;
    let f = p.signal(&ctx.cfg, &sys)?;
    let coeff_path = ctx.path("coefficients.csv");
    let c = if coeff_path.exists() {
        let mut c = sys.empty_coefficients();
        c.read_csv_into(File::open(&coeff_path)?)?;
        c
    } else {
        sys.analyze(&f, false)?
    };
    let g = sys.synthesize(&c, true)?;
    ctx.write("synthesis.csv", |w| g.write_csv(w))?;
    let mut rows = Vec::new();
    for dir in [Direction::DualSynthesis, Direction::DualAnalysis] {
        let r = sys.reconstruct(&f, dir)?;
        rows.push(json!({"direction": dir, "rel_error": r.rel_error, "band_coverage": r.band_coverage, "warning": r.warning}));
    }
    let rep = json!({"synthesis_vs_signal": rel(&g, &f), "reconstruction": rows});
    ctx.json("synthesize.json", &rep)?;
    println!("{rep}");
    Ok(0)
}

fn rel(g: &SampledSignal, f: &SampledSignal) -> f64 {
    g.sub(f).norm() / f.norm()
}

fn bounds(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let sys = ctx.system(&p)?;
    let v = &ctx.cfg.verify;
    let fb = estimate_frame_bounds(&sys, v.bound_trials, v.bound_iters, ctx.cfg.seed)?;
    let rep = fb.to_json();
    ctx.json("bounds.json", &rep)?;
    println!("{rep}");
    Ok(0)
}

fn norms(ctx: &Ctx) -> Result<u8> {
    let p = ctx.prepare()?;
    let sys = ctx.system(&p)?;
    let f = p.signal(&ctx.cfg, &sys)?;
    let c = sys.analyze(&f, false)?;
    let phi = build_lp_analyzer(&p.a)?;
    let mut rows = Vec::new();
    for sp in &ctx.cfg.norms {
        let s = lambda_seq_norm(&c, &p.nodes, &p.a, sp)?;
        let n = lp_function_norm(&f, &phi, &p.a, sp)?;
        rows.push((sp.clone(), s, n));
    }
    ctx.write("norms.csv", |w| {
        writeln!(w, "family,alpha,p,q,sequence,function,ratio")?;
        for (sp, s, n) in &rows {
            writeln!(w, "{:?},{},{},{},{:e},{:e},{:e}", sp.family, sp.alpha, sp.p, sp.q, s, n, s / n)?;
        }
        Ok(())
    })?;
    println!("{} norms", rows.len());
    Ok(0)
}

fn compact(ctx: &Ctx) -> Result<u8> {
    ctx.cfg.validate()?;
    let mut v = Verifier::new(&ctx.cfg)?;
    let rep = v.choose_compact()?;
    ctx.write("compact_window.csv", |w| rep.window.write_csv(w))?;
    ctx.write("compact_radii.csv", |w| {
        writeln!(w, "R,eps,sup_norm,k_poly,fd_error,sufficient")?;
        for (r, s) in rep.rows.iter().zip(&rep.sufficient) {
            writeln!(w, "{},{:e},{:e},{:e},{:e},{:e}", r.r, r.eps, r.sup_norm, r.k_poly, r.fd_error, s)?;
        }
        Ok(())
    })?;
    let f = v.prep.signal(&ctx.cfg, &v.sys)?.spectrum();
    let pa = PerturbedAnalysis::new(&v.sys, &rep.window)?;
    let (_, nr) = perturbed_reconstruct(&v.sys, &pa, &f, ctx.cfg.compact.max_iter, ctx.cfg.compact.tol)?;
    ctx.write("neumann.csv", |w| {
        writeln!(w, "iteration,error")?;
        for (i, e) in nr.errors.iter().enumerate() {
            writeln!(w, "{i},{e:e}")?;
        }
        Ok(())
    })?;
    let out = json!({
        "window": rep.window.metadata(),
        "eps_target": rep.eps_target,
        "K": rep.k_const,
        "rows": rep.rows,
        "neumann": nr,
    });
    ctx.json("compact.json", &out)?;
    println!("{}", json!({"R": rep.window.r, "eps": rep.window.eps_achieved, "neumann_final_error": nr.final_error}));
    Ok(0)
}

fn verify(ctx: &Ctx) -> Result<u8> {
    let mut v = Verifier::new(&ctx.cfg)?;
    let rep = v.run_all();
    for c in &rep.criteria {
        println!("{}", c.line());
    }
    ctx.json("verify.json", &serde_json::to_value(&rep).map_err(|e| Error::Internal(e.to_string()))?)?;
    if rep.passed {
        Ok(0)
    } else {
        eprintln!("verification failed: criteria {:?}", rep.failing);
        Ok(3)
    }
}

fn run(cmd: &Cmd) -> Result<u8> {
    let (common, f): (&Common, fn(&Ctx) -> Result<u8>) = match cmd {
        Cmd::Construct(c) => (c, construct),
        Cmd::Balayage(c) => (c, balayage),
        Cmd::Analyze(c) => (c, analyze),
        Cmd::Synthesize(c) => (c, synthesize),
        Cmd::Bounds(c) => (c, bounds),
        Cmd::Norms(c) => (c, norms),
        Cmd::Compact(c) => (c, compact),
        Cmd::Verify(c) => (c, verify),
    };
    let cfg = RunConfig::load(&common.config)?;
    cfg.validate()?;
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| Path::new("out").to_path_buf());
    fs::create_dir_all(&out)?;
    f(&Ctx { cfg, out, verbose: common.verbose })
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
    match run(&cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
