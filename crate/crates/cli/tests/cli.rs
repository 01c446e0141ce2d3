use std::path::Path;
use std::process::{Command, Output};

use gsteg_cli::{parse_config, CliError};
use gsteg_pipeline::Mode;

fn gsteg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsteg")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const PIXEL: &str = "[codec]\nq = 1\ns = 7.4e-4\nkey_seed = 42\n";

#[test]
fn minimal_config_is_fully_defaulted() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg.mode(), Mode::Pixel);
    assert_eq!((cfg.schedule.steps, cfg.schedule.order), (50, 3));
    assert_eq!(cfg.optimizer.max_iters, 300);
    assert_eq!(cfg.attacks.seeds, 32);
    let pipe = cfg.pipeline_config(Mode::Pixel, 1, 0.1).unwrap();
    let reference = gsteg_pipeline::reference_pixel(1, 0.1, gsteg_codec::Key::from_seed(0)).unwrap();
    assert_eq!(pipe.model, reference.model);
    assert_eq!(pipe.codec, reference.codec);
    assert_eq!(pipe.export_quantize, None);
}

#[test]
fn latent_default_matches_reference() {
    let cfg = parse_config("[pipeline]\nmode = \"latent\"\n[autoencoder]\n").unwrap();
    let pipe = cfg.pipeline_config(Mode::Latent, 1, 1.0).unwrap();
    let reference = gsteg_pipeline::reference_latent(1, 1.0, gsteg_codec::Key::from_seed(0)).unwrap();
    assert_eq!(pipe.model, reference.model);
    assert_eq!(pipe.autoencoder, reference.autoencoder);
    assert_eq!(pipe.export_quantize, Some(256));
}

#[test]
fn config_errors_name_keys() {
    let msg = |text: &str| match parse_config(text) {
        Err(CliError::Config(m)) => m,
        other => panic!("expected config error, got {other:?}"),
    };
    assert!(msg("[pipeline]\nmode = \"latent\"\n").contains("autoencoder"));
    assert!(msg("foo = 1\n").contains("foo"));
    assert!(msg("[codec]\nfoo = 1\n").contains("codec.foo"));
    assert!(msg("[schedule]\nsteps = \"many\"\n").contains("schedule.steps"));
    assert!(msg("[attacks]\nspecs = [\"awgn:-1\"]\n").contains("attacks.specs[0]"));
    assert!(msg("icdf_version = \"other\"\n").contains("icdf_version"));
    assert!(msg("[optimizer]\ngamma = [1.0, 1.0, 1.0]\n").contains("optimizer"));
}

#[test]
fn kl_table_anchor_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = gsteg(dir.path(), &["kl-table", "--q", "4", "--s", "0.5768"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("kl_table.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let dkl: f64 = row[6].parse().unwrap();
    assert!(((dkl - 2.63e-8) / 2.63e-8).abs() < 0.02, "{dkl:e}");
    assert!(row[6].contains('e') && row[1] == "0.5768" && row[8] == "false");
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = gsteg(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(gsteg(dir.path(), &["kl-table", "--q", "4", "--s", "0.1:1"]).status.code(), Some(1));
    assert_eq!(gsteg(dir.path(), &["--threads", "0", "kl-table", "--q", "1", "--s", "1"]).status.code(), Some(1));
    assert_eq!(gsteg(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn hide_extract_and_attack() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "pix.toml", PIXEL);
    let payload: Vec<u8> = (0..96u8).map(|i| i.wrapping_mul(37)).collect();
    std::fs::write(d.join("secret.bin"), &payload).unwrap();
    let o = gsteg(d, &["hide", "--payload", "secret.bin", "--config", "pix.toml", "--out", "s.nt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = gsteg(d, &["extract", "--stego", "s.nt", "--config", "pix.toml", "--out", "back.bin"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(d.join("back.bin")).unwrap(), payload);

    // The attacked file keeps its manifest, but noise destroys the payload.
    let o = gsteg(d, &["--seed", "3", "attack", "--spec", "awgn:0.1", "--input", "s.nt", "--out", "a.nt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = gsteg(d, &["extract", "--stego", "a.nt", "--config", "pix.toml", "--out", "a.bin"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(d.join("a.bin")).unwrap(), payload);
    assert_eq!(gsteg(d, &["attack", "--spec", "awgn", "--input", "s.nt", "--out", "b.nt"]).status.code(), Some(1));
}

#[test]
fn fingerprint_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "pix.toml", PIXEL);
    write(d, "cos.toml", &format!("{PIXEL}[schedule]\nkind = \"cosine\"\n"));
    std::fs::write(d.join("p.bin"), b"hello").unwrap();
    assert_eq!(gsteg(d, &["hide", "--payload", "p.bin", "--config", "pix.toml", "--out", "s.nt"]).status.code(), Some(0));
    let o = gsteg(d, &["extract", "--stego", "s.nt", "--config", "cos.toml", "--out", "x.bin"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("schedule fingerprint"), "{err}");
    assert!(!d.join("x.bin").exists());
}

#[test]
fn csv_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "r.toml", &format!("{PIXEL}[attacks]\nseeds = 3\nbatch = 2\nq = [1, 2]\nspecs = [\"awgn:0.01\", \"quantize:256\"]\n"));
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = gsteg(d, &["--threads", threads, "--out-dir", out, "robustness", "--config", "r.toml", "--s", "0.001,0.5"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(d.join("a/robustness.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.join("b/robustness.csv")).unwrap());
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    assert!(a.starts_with("mode,Q,S,attack,strength,BAR,BAR_std,seeds\npixel,1,0.001,none,,1,0,3\n"), "{a}");
}

#[test]
fn residuals_and_spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "w.toml", "[codec]\nq = 4\ns = 0.5\n");
    let o = gsteg(d, &["residuals", "--config", "w.toml", "--batch", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hist = std::fs::read_to_string(d.join("residuals.csv")).unwrap();
    assert!(hist.starts_with("bin_center,stego_density,control_density\n"));
    assert_eq!(hist.lines().count(), 129);
    let o = gsteg(d, &["spectrum", "--config", "w.toml", "--batch", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
    assert!(spec.starts_with("radius,stego_power,control_power\n0,"));
    assert_eq!(gsteg(d, &["spectrum"]).status.code(), Some(1));
}

#[test]
fn infeasible_optimization_exits_two_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "o.toml", "[optimizer]\nacc_target = 1.0\nmax_iters = 3\nbatch = 4\nchannel = \"awgn:0.5\"\n");
    let o = gsteg(d, &["optimize-s", "--q", "1", "--pipeline", "pixel", "--config", "o.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no feasible"), "{}", stderr(&o));
    let trace = std::fs::read_to_string(d.join("optimize_pixel_q1_trace.csv")).unwrap();
    assert!(trace.starts_with("iter,S,Acc_curr,L_retr,D_KL,beta_eff\n0,1,"));
    assert_eq!(trace.lines().count(), 4);
}

#[test]
fn short_optimization_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "o.toml", "[optimizer]\nmax_iters = 5\nbatch = 4\n");
    let o = gsteg(d, &["optimize-s", "--q", "2", "--pipeline", "pixel", "--config", "o.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(d.join("optimize_pixel_q2_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "pipeline,Q,Acc_target,S*,L_retr,D_KL,validation_Acc,iters,converged");
    assert!(lines.next().unwrap().starts_with("pixel,2,0.99,"));
}
