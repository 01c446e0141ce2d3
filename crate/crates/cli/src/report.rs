//! Desk-scale trade-off reproduction: both pipelines optimized at the same
//! Q, swept over the attack list, with KL and encoder diagnostics.

use gsteg_gaussianity::cumulants;
use gsteg_optimizer::{optimize_scale, OptOutcome};
use gsteg_pipeline::{manifold_reduction_fraction, residual_shift, trial_batch, Mode};

use crate::commands::{attack_sweep, kl_table, split_spec, summary_table, SweepRow};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};
use crate::CliError;

pub const MANIFOLD_SIGMAS: [f64; 3] = [0.001, 0.01, 0.1];
const MANIFOLD_TRIALS: usize = 256;
const RESIDUAL_TRIALS: usize = 64;

pub struct Report {
    /// Long format: section, pipeline, Q, name, value, std.
    pub csv: Table,
    pub markdown: String,
}

struct Arm {
    mode: Mode,
    acc_target: f64,
    outcome: OptOutcome,
    sweep: Vec<SweepRow>,
}

pub fn tradeoff(cfg: &ExperimentConfig, seed: u64, threads: usize) -> Result<Report, CliError> {
    let q = cfg.codec.q;
    let specs = cfg.attack_specs()?;
    let mut arms = Vec::new();
    for mode in [Mode::Pixel, Mode::Latent] {
        let mut opt = cfg.opt_config(cfg.pipeline_config(mode, q, cfg.optimizer.s0)?)?;
        opt.seed = seed;
        let outcome = optimize_scale(&opt)?;
        let pipe = opt.pipeline.with_scale(outcome.s_star)?;
        let sweep = attack_sweep(&pipe, &specs, cfg.attacks.seeds, cfg.attacks.batch, seed, threads)?;
        arms.push(Arm { mode, acc_target: opt.acc_target, outcome, sweep });
    }
    let (pix, lat) = (&arms[0], &arms[1]);

    let mut csv = Table::new(&["section", "pipeline", "Q", "name", "value", "std"]);
    let mut push = |section: &str, mode: &str, name: &str, value: f64, std: Option<f64>| {
        csv.push(vec![section.into(), mode.into(), q.to_string(), name.into(), num(value), std.map(num).unwrap_or_default()]);
    };
    for a in &arms {
        let m = a.mode.label();
        push("optimize", m, "acc_target", a.acc_target, None);
        push("optimize", m, "s_star", a.outcome.s_star, None);
        push("optimize", m, "l_retr", a.outcome.validation.l_retr, None);
        push("optimize", m, "dkl", a.outcome.dkl, None);
        push("optimize", m, "validation_acc", a.outcome.validation.acc, None);
        push("optimize", m, "iters", a.outcome.trace.len() as f64, None);
        for r in &a.sweep {
            let (kind, strength) = split_spec(r.spec.as_ref());
            let name = if strength.is_empty() { kind } else { format!("{kind}:{strength}") };
            push("attack", m, &name, r.bar_mean, Some(r.bar_std));
        }
    }
    let s_ratio = lat.outcome.s_star / pix.outcome.s_star;
    let kl_ratio = lat.outcome.dkl / pix.outcome.dkl;
    push("tradeoff", "latent/pixel", "s_star_ratio", s_ratio, None);
    push("tradeoff", "latent/pixel", "dkl_ratio", kl_ratio, None);

    // Encoder diagnostic on the latent arm at its S*.
    let lat_pipe = cfg.pipeline_config(Mode::Latent, q, lat.outcome.s_star)?;
    let trials = trial_batch(q, lat_pipe.embed_dim(), MANIFOLD_TRIALS, seed)?;
    let mut manifold = Vec::new();
    for sigma in MANIFOLD_SIGMAS {
        let f = manifold_reduction_fraction(&lat_pipe, &trials, sigma, seed)?;
        push("manifold", "latent", &format!("reduction_fraction:awgn:{sigma}"), f, None);
        manifold.push((sigma, f));
    }

    // Residual shift of both pipelines at the latent S* (equal Q and S, so equal KL).
    let mut shifts = Vec::new();
    for mode in [Mode::Pixel, Mode::Latent] {
        let pipe = cfg.pipeline_config(mode, q, lat.outcome.s_star)?;
        let trials = trial_batch(q, pipe.embed_dim(), RESIDUAL_TRIALS, seed)?;
        let sh = residual_shift(&pipe, &trials)?;
        push("residual", mode.label(), "w1_normalized", sh.normalized, None);
        shifts.push((mode, sh.normalized));
    }

    let kl = kl_table(&[q], &[pix.outcome.s_star, lat.outcome.s_star])?;
    for a in &arms {
        let k = cumulants(a.outcome.s_star, q)?;
        push("kl", a.mode.label(), "kappa4", k.kappa4, None);
        push("kl", a.mode.label(), "dkl_term_share_k4", k.k4_share(), None);
    }

    let mut md = format!("# Trade-off report (Q = {q}, seed = {seed})\n\n## Optimized scale\n\n");
    let rows: Vec<_> = arms.iter().map(|a| (a.mode, q, a.acc_target, &a.outcome)).collect();
    md.push_str(&summary_table(&rows).to_markdown());
    md.push_str(&format!("\nS* ratio latent/pixel: {}; D_KL ratio: {}\n", num(s_ratio), num(kl_ratio)));

    md.push_str(&format!("\n## Attacks ({} seeds × {} messages)\n\n", cfg.attacks.seeds, cfg.attacks.batch));
    let mut at = Table::new(&["attack", "pixel BAR", "latent BAR"]);
    for (p, l) in pix.sweep.iter().zip(&lat.sweep) {
        let (kind, strength) = split_spec(p.spec.as_ref());
        let name = if strength.is_empty() { kind } else { format!("{kind}:{strength}") };
        at.push(vec![name, format!("{} ± {}", num(p.bar_mean), num(p.bar_std)), format!("{} ± {}", num(l.bar_mean), num(l.bar_std))]);
    }
    md.push_str(&at.to_markdown());

    md.push_str("\n## Encoder regularization (latent, at S*)\n\n");
    let mut mt = Table::new(&["awgn sigma", "reduction fraction"]);
    for (s, f) in &manifold {
        mt.push(vec![num(*s), num(*f)]);
    }
    md.push_str(&mt.to_markdown());

    md.push_str(&format!("\n## Residual shift at S = {} (normalized W1)\n\n", num(lat.outcome.s_star)));
    let mut rt = Table::new(&["pipeline", "W1 / mean control residual"]);
    for (m, w) in &shifts {
        rt.push(vec![m.to_string(), num(*w)]);
    }
    md.push_str(&rt.to_markdown());

    md.push_str("\n## Analytic KL at S*\n\n");
    md.push_str(&kl.to_markdown());
    Ok(Report { csv, markdown: md })
}
