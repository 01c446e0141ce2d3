use std::path::{Path, PathBuf};

use gsteg_analysis::{radial_power_spectrum, RadialSpectrum};
use gsteg_channels::{apply_channel, ChannelSpec};
use gsteg_codec::{NoiseTensor, TensorFile};
use gsteg_gaussianity::cumulants;
use gsteg_optimizer::{optimize_scale, OptOutcome, OptimizeError};
use gsteg_pipeline::{analysis_batches, extract, hide, residual_shift, roundtrip, trial_batch, Manifest, Mode, PipelineConfig, Stego};

use crate::config::{load_config, ExperimentConfig};
use crate::output::{num, write_atomic, write_table, Table};
use crate::{report, Cli, CliError, Command, PipelineArg};

pub(crate) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Hide { payload, config, out } => {
            let cfg = load_config(config)?;
            let pipe = fixed_pipeline(&cfg)?;
            let bytes = std::fs::read(payload)?;
            let stego = hide(&bytes_to_bits(&bytes), &pipe)?;
            let file = TensorFile { tensor: stego.sample, extension: stego.manifest.to_text().into_bytes() };
            write_atomic(&resolve(cli, out), &file.to_bytes()?)
        }
        Command::Extract { stego, config, out } => {
            let cfg = load_config(config)?;
            let pipe = fixed_pipeline(&cfg)?;
            let stego = read_stego(stego)?;
            let got = extract(&stego, &pipe)?;
            write_atomic(&resolve(cli, out), &bits_to_bytes(&got.bits))
        }
        Command::Attack { spec, input, out, config } => {
            let ae = match config {
                Some(p) => Some(load_config(p)?.autoencoder_or_default()?),
                None => None,
            };
            let spec = ChannelSpec::parse(spec, ae).map_err(|e| CliError::Usage(e.to_string()))?;
            let file = TensorFile::read_from(std::fs::File::open(input)?)?;
            let attacked = apply_channel(&spec, &file.tensor, seed)?;
            let outfile = TensorFile { tensor: attacked, extension: file.extension };
            write_atomic(&resolve(cli, out), &outfile.to_bytes()?)
        }
        Command::Robustness { config, q, s } => {
            let cfg = load_config(config)?;
            let qs = if q.is_empty() { cfg.attacks.q.clone() } else { q.clone() };
            let scales = scales_for(&cfg, &qs, s)?;
            let specs = cfg.attack_specs()?;
            let mut table = Table::new(&["mode", "Q", "S", "attack", "strength", "BAR", "BAR_std", "seeds"]);
            for (&q, &s) in qs.iter().zip(&scales) {
                let pipe = cfg.pipeline_config(cfg.mode(), q, s)?;
                for row in attack_sweep(&pipe, &specs, cfg.attacks.seeds, cfg.attacks.batch, seed, cli.threads)? {
                    let (kind, strength) = split_spec(row.spec.as_ref());
                    table.push(vec![
                        cfg.mode().to_string(),
                        q.to_string(),
                        num(s),
                        kind,
                        strength,
                        num(row.bar_mean),
                        num(row.bar_std),
                        cfg.attacks.seeds.to_string(),
                    ]);
                }
            }
            write_table(&out_dir(cli, Some(&cfg)).join("robustness.csv"), &table)
        }
        Command::OptimizeS { q, pipeline, config } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => ExperimentConfig::default(),
            };
            let mode = match pipeline {
                PipelineArg::Pixel => Mode::Pixel,
                PipelineArg::Latent => Mode::Latent,
            };
            let mut opt = cfg.opt_config(cfg.pipeline_config(mode, *q, cfg.optimizer.s0)?)?;
            if let Some(s) = cli.seed {
                opt.seed = s;
            }
            let dir = out_dir(cli, Some(&cfg));
            let stem = format!("optimize_{mode}_q{q}");
            match optimize_scale(&opt) {
                Ok(outcome) => {
                    write_table(&dir.join(format!("{stem}_trace.csv")), &trace_table(&outcome.trace))?;
                    write_table(&dir.join(format!("{stem}_summary.csv")), &summary_table(&[(mode, *q, opt.acc_target, &outcome)]))?;
                    println!(
                        "{mode} Q={q}: S* = {} (validation Acc {}, D_KL {})",
                        num(outcome.s_star),
                        num(outcome.validation.acc),
                        num(outcome.dkl)
                    );
                    Ok(())
                }
                Err(OptimizeError::Infeasible(inf)) => {
                    write_table(&dir.join(format!("{stem}_trace.csv")), &trace_table(&inf.trace))?;
                    Err(OptimizeError::Infeasible(inf).into())
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::KlTable { q, s } => {
            let qs = parse_list::<u32>(q, "--q")?;
            let ss = parse_scales(s)?;
            let table = kl_table(&qs, &ss)?;
            let bytes = table.to_csv()?;
            write_atomic(&out_dir(cli, None).join("kl_table.csv"), &bytes)?;
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
        Command::Spectrum { input, baseline, config, batch } => match (input, config) {
            (Some(input), _) => {
                let x = TensorFile::read_from(std::fs::File::open(input)?)?.tensor;
                let field = match baseline {
                    Some(b) => {
                        let base = TensorFile::read_from(std::fs::File::open(b)?)?.tensor;
                        if base.shape() != x.shape() {
                            return Err(CliError::Usage(format!("baseline shape {:?} differs from input {:?}", base.shape(), x.shape())));
                        }
                        let v = x.values().iter().zip(base.values()).map(|(a, b)| a - b).collect();
                        NoiseTensor::new(x.shape(), v)?
                    }
                    None => x,
                };
                let spec = mean_spectrum(std::slice::from_ref(&field))?;
                let mut t = Table::new(&["radius", "power"]);
                t.push(vec!["0".into(), num(spec.dc)]);
                for (r, p) in spec.radii.iter().zip(&spec.power) {
                    t.push(vec![num(*r), num(*p)]);
                }
                write_table(&out_dir(cli, None).join("spectrum.csv"), &t)
            }
            (None, Some(config)) => {
                let cfg = load_config(config)?;
                let pipe = fixed_pipeline(&cfg)?;
                let trials = trial_batch(pipe.codec.q(), pipe.embed_dim(), *batch, seed)?;
                let b = analysis_batches(&pipe, &trials)?;
                let diff = |xs: &[NoiseTensor]| -> Result<Vec<NoiseTensor>, CliError> {
                    xs.iter()
                        .zip(&b.baseline)
                        .map(|(x, y)| Ok(NoiseTensor::new(x.shape(), x.values().iter().zip(y.values()).map(|(a, b)| a - b).collect())?))
                        .collect()
                };
                let stego = mean_spectrum(&diff(&b.stego)?)?;
                let control = mean_spectrum(&diff(&b.control)?)?;
                let mut t = Table::new(&["radius", "stego_power", "control_power"]);
                t.push(vec!["0".into(), num(stego.dc), num(control.dc)]);
                for i in 0..stego.radii.len() {
                    t.push(vec![num(stego.radii[i]), num(stego.power[i]), num(control.power[i])]);
                }
                write_table(&out_dir(cli, Some(&cfg)).join("spectrum.csv"), &t)
            }
            (None, None) => Err(CliError::Usage("spectrum needs --input or --config".into())),
        },
        Command::Residuals { config, batch } => {
            let cfg = load_config(config)?;
            let pipe = fixed_pipeline(&cfg)?;
            let trials = trial_batch(pipe.codec.q(), pipe.embed_dim(), *batch, seed)?;
            let shift = residual_shift(&pipe, &trials)?;
            let mut t = Table::new(&["bin_center", "stego_density", "control_density"]);
            let (ds, dc) = (shift.stego.histogram.density(), shift.control.histogram.density());
            for ((c, s), k) in shift.stego.histogram.centers().iter().zip(&ds).zip(&dc) {
                t.push(vec![num(*c), num(*s), num(*k)]);
            }
            let dir = out_dir(cli, Some(&cfg));
            write_table(&dir.join("residuals.csv"), &t)?;
            let mut summary = Table::new(&["mode", "Q", "S", "w1", "w1_normalized", "stego_energy", "control_energy"]);
            summary.push(vec![
                pipe.mode.to_string(),
                pipe.codec.q().to_string(),
                num(pipe.codec.s()),
                num(shift.w1),
                num(shift.normalized),
                num(shift.stego.mean_energy),
                num(shift.control.mean_energy),
            ]);
            write_table(&dir.join("residuals_summary.csv"), &summary)?;
            println!("W1 = {} (normalized {})", num(shift.w1), num(shift.normalized));
            Ok(())
        }
        Command::TradeoffReport { config } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => ExperimentConfig::default(),
            };
            let seed = cli.seed.unwrap_or(cfg.optimizer.seed);
            let rep = report::tradeoff(&cfg, seed, cli.threads)?;
            let dir = out_dir(cli, Some(&cfg));
            write_table(&dir.join("tradeoff.csv"), &rep.csv)?;
            write_atomic(&dir.join("tradeoff.md"), rep.markdown.as_bytes())?;
            print!("{}", rep.markdown);
            Ok(())
        }
    }
}

/// Pipeline at the config's own mode, Q and S; S is required.
fn fixed_pipeline(cfg: &ExperimentConfig) -> Result<PipelineConfig, CliError> {
    let s = cfg.codec.s.ok_or_else(|| CliError::Config("codec.s: required for this command".into()))?;
    cfg.pipeline_config(cfg.mode(), cfg.codec.q, s)
}

fn read_stego(path: &Path) -> Result<Stego, CliError> {
    let file = TensorFile::read_from(std::fs::File::open(path)?)?;
    let text = std::str::from_utf8(&file.extension).map_err(|_| CliError::Runtime(format!("{}: manifest is not UTF-8", path.display())))?;
    Ok(Stego { sample: file.tensor, manifest: Manifest::parse(text)? })
}

fn resolve(cli: &Cli, path: &Path) -> PathBuf {
    match &cli.out_dir {
        Some(d) if path.is_relative() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out_dir.clone().or_else(|| cfg.map(|c| c.output.dir.clone())).unwrap_or_else(|| PathBuf::from("."))
}

/// Bytes to bits, most significant bit first.
pub(crate) fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes.iter().flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1)).collect()
}

/// Inverse of [`bytes_to_bits`]; a trailing partial byte is zero-padded.
pub(crate) fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))).collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, CliError> {
    let v: Result<Vec<T>, _> = s.split(',').map(|x| x.trim().parse::<T>()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!("{flag}: cannot parse {s:?}"))),
    }
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
fn parse_scales(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(s, "--s"),
        [a, b, n] => {
            let bad = || CliError::Usage(format!("--s: cannot parse range {s:?}"));
            let (a, b) = (a.parse::<f64>().map_err(|_| bad())?, b.parse::<f64>().map_err(|_| bad())?);
            let n: usize = n.parse().map_err(|_| bad())?;
            match n {
                0 => Err(bad()),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(CliError::Usage(format!("--s: cannot parse {s:?}"))),
    }
}

fn scales_for(cfg: &ExperimentConfig, qs: &[u32], s: &[f64]) -> Result<Vec<f64>, CliError> {
    match (s.len(), cfg.codec.s) {
        (0, Some(v)) => Ok(vec![v; qs.len()]),
        (0, None) => Err(CliError::Usage("robustness needs --s or codec.s".into())),
        (1, _) => Ok(vec![s[0]; qs.len()]),
        (n, _) if n == qs.len() => Ok(s.to_vec()),
        (n, _) => Err(CliError::Usage(format!("--s has {n} values for {} capacities", qs.len()))),
    }
}

pub(crate) fn kl_table(qs: &[u32], ss: &[f64]) -> Result<Table, CliError> {
    let mut t = Table::new(&["Q", "S", "kappa4", "kappa6", "kappa8", "kappa10", "dkl_analytic", "dkl_term_share_k4", "beyond_validity"]);
    for &q in qs {
        for &s in ss {
            let k = cumulants(s, q)?;
            t.push(vec![
                q.to_string(),
                num(s),
                num(k.kappa4),
                num(k.kappa6),
                num(k.kappa8),
                num(k.kappa10),
                num(k.kl()),
                num(k.k4_share()),
                k.beyond_validity().to_string(),
            ]);
        }
    }
    Ok(t)
}

pub(crate) fn trace_table(trace: &[gsteg_optimizer::OptState]) -> Table {
    let mut t = Table::new(&["iter", "S", "Acc_curr", "L_retr", "D_KL", "beta_eff"]);
    for st in trace {
        t.push(vec![st.iter.to_string(), num(st.s), num(st.acc_curr), num(st.l_retr), num(st.dkl), num(st.beta_eff)]);
    }
    t
}

pub(crate) fn summary_table(rows: &[(Mode, u32, f64, &OptOutcome)]) -> Table {
    let mut t = Table::new(&["pipeline", "Q", "Acc_target", "S*", "L_retr", "D_KL", "validation_Acc", "iters", "converged"]);
    for (mode, q, target, o) in rows {
        t.push(vec![
            mode.to_string(),
            q.to_string(),
            num(*target),
            num(o.s_star),
            num(o.validation.l_retr),
            num(o.dkl),
            num(o.validation.acc),
            o.trace.len().to_string(),
            o.converged.to_string(),
        ]);
    }
    t
}

/// Spectrum averaged over every plane of every tensor.
fn mean_spectrum(fields: &[NoiseTensor]) -> Result<RadialSpectrum, CliError> {
    let mut acc: Option<RadialSpectrum> = None;
    let mut n = 0.0;
    for f in fields {
        let [c, h, w] = f.shape();
        for ch in 0..c {
            let s = radial_power_spectrum(f.plane(ch), h, w)?;
            n += 1.0;
            match &mut acc {
                None => acc = Some(s),
                Some(a) => {
                    a.dc += s.dc;
                    a.power.iter_mut().zip(&s.power).for_each(|(x, y)| *x += y);
                }
            }
        }
    }
    let mut a = acc.ok_or_else(|| CliError::Runtime("no planes to transform".into()))?;
    a.dc /= n;
    a.power.iter_mut().for_each(|p| *p /= n);
    Ok(a)
}

/// `kind:params` split for table columns; no attack is `none`.
pub(crate) fn split_spec(spec: Option<&ChannelSpec>) -> (String, String) {
    match spec {
        None => ("none".into(), String::new()),
        Some(s) => {
            let text = s.to_string();
            match text.split_once(':') {
                Some((k, p)) => (k.to_string(), p.to_string()),
                None => (text, String::new()),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SweepRow {
    pub spec: Option<ChannelSpec>,
    pub bar_mean: f64,
    pub bar_std: f64,
}

/// BAR for no attack and for each spec, over `seeds` batches of `batch`
/// messages. Seed `j` drives both the messages and the channel, so every
/// spec sees the same messages.
pub(crate) fn attack_sweep(
    cfg: &PipelineConfig,
    specs: &[ChannelSpec],
    seeds: usize,
    batch: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Vec<SweepRow>, CliError> {
    let q = cfg.codec.q();
    let all: Vec<Option<&ChannelSpec>> = std::iter::once(None).chain(specs.iter().map(Some)).collect();
    let one_seed = |j: usize| -> Result<Vec<f64>, CliError> {
        let sj = base_seed.wrapping_add(j as u64);
        let trials = trial_batch(q, cfg.embed_dim(), batch, sj)?;
        all.iter().map(|spec| Ok(roundtrip(cfg, &trials, *spec, sj)?.bit_accuracy(&trials, q)?)).collect()
    };
    let per_seed: Vec<Vec<f64>> = if threads <= 1 {
        (0..seeds).map(one_seed).collect::<Result<_, _>>()?
    } else {
        let mut slots: Vec<Option<Result<Vec<f64>, CliError>>> = (0..seeds).map(|_| None).collect();
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let f = &one_seed;
                    sc.spawn(move || (t..seeds).step_by(threads).map(|j| (j, f(j))).collect::<Vec<_>>())
                })
                .collect();
            for h in handles {
                for (j, r) in h.join().expect("sweep worker panicked") {
                    slots[j] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every seed assigned")).collect::<Result<_, _>>()?
    };
    let n = seeds as f64;
    Ok(all
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mean = per_seed.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = per_seed.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / n;
            SweepRow { spec: spec.cloned(), bar_mean: mean, bar_std: var.sqrt() }
        })
        .collect())
}
