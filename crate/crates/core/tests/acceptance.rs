//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary under `cargo test`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    brute_dft, jacobi_svd, random_dataset, random_matrix, random_params, random_series, scalar_loss,
};
use nalgebra::DMatrix;
use rom_core::fixtures::{self, JITTER_THRESHOLD, N_TRAIN, N_VALIDATION, TRAIN_SPAN};
use rom_core::lstm::backward;
use rom_core::{
    compute_svd, dft_forward, dft_inverse, evaluate, filter_series, filter_snapshots, offline,
    predict_rollout, select_modes, speedup, split_train_validation, train, FieldKind, FilterConfig,
    IdentificationReference, PipelineConfig, PodBasis, SnapshotMatrix, SplitMix64, SplitSpec, TrainingConfig,
    Truncation,
};

type Outcome = Result<(String, Vec<u8>), String>;
type Stage = (&'static str, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_dft() -> Outcome {
    let lengths = [7usize, 12, 16, 100];
    let mut rng = SplitMix64::new(2024);
    let mut worst_fwd = 0.0f64;
    let mut worst_rt = 0.0f64;
    for i in 0..50 {
        let n = lengths[i % lengths.len()];
        let x = random_series(&mut rng, n);
        let spec = dft_forward(&x, 0.01).map_err(|e| e.to_string())?;
        for (k, (re, im)) in brute_dft(&x).into_iter().enumerate() {
            worst_fwd =
                worst_fwd.max((spec.coefficients[k].re - re).abs()).max((spec.coefficients[k].im - im).abs());
        }
        let back = dft_inverse(&spec).map_err(|e| e.to_string())?;
        let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in x.iter().zip(&back) {
            worst_rt = worst_rt.max((a - b).abs() / scale);
        }
    }
    ensure(worst_fwd <= 1e-10, || format!("forward deviation {worst_fwd:.3e} > 1e-10"))?;
    ensure(worst_rt <= 1e-10, || format!("round-trip deviation {worst_rt:.3e} > 1e-10"))?;
    Ok((format!("max forward dev {worst_fwd:.2e}, max round-trip rel dev {worst_rt:.2e}"), Vec::new()))
}

fn c2_filter() -> Outcome {
    let (both, strong, threshold) = fixtures::two_tone(8).map_err(|e| e.to_string())?;
    let cfg = FilterConfig { psd_threshold: threshold, keep_dc: true };
    let filtered = filter_snapshots(&both, &cfg).map_err(|e| e.to_string())?;
    let rel = (filtered.values() - strong.values()).norm() / strong.values().norm();
    ensure(rel <= 1e-9, || format!("filtered vs strong tone relative error {rel:.3e}"))?;
    let twice = filter_snapshots(&filtered, &cfg).map_err(|e| e.to_string())?;
    let idem = (twice.values() - filtered.values()).abs().max();
    ensure(idem <= 1e-12, || format!("not idempotent: {idem:.3e}"))?;
    let mut worst_mean = 0.0f64;
    for r in 0..both.n_dof() {
        let m0 = both.values().row(r).mean();
        let m1 = filtered.values().row(r).mean();
        worst_mean = worst_mean.max((m0 - m1).abs());
    }
    ensure(worst_mean <= 1e-12, || format!("mean changed by {worst_mean:.3e}"))?;
    // also on a series with a mean offset
    let x: Vec<f64> = both.values().row(0).iter().map(|v| v + 3.0).collect();
    let y = filter_series(&x, &cfg).map_err(|e| e.to_string())?;
    let dm = (x.iter().sum::<f64>() - y.iter().sum::<f64>()).abs() / x.len() as f64;
    ensure(dm <= 1e-12, || format!("offset mean changed by {dm:.3e}"))?;
    Ok((format!("rel err {rel:.2e}, idempotence {idem:.2e}, mean drift {worst_mean:.2e}"), Vec::new()))
}

fn c3_pod() -> Outcome {
    let mut rng = SplitMix64::new(77);
    let m = random_matrix(&mut rng, 300, 60);
    let s = SnapshotMatrix::new(m.clone(), 0.0, 0.01, FieldKind::EulerianScalar, "eps")
        .map_err(|e| e.to_string())?;
    let full = PodBasis::fit(&s, Truncation::Energy(1.0)).map_err(|e| e.to_string())?;
    let g = full.modes().tr_mul(full.modes());
    let orth = (g - DMatrix::identity(full.n_modes(), full.n_modes())).abs().max();
    ensure(orth <= 1e-10, || format!("orthonormality defect {orth:.3e}"))?;
    let (sigma_oracle, _) = jacobi_svd(&m);
    let sv_dev =
        full.singular_values().iter().zip(&sigma_oracle).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    ensure(sv_dev <= 1e-10 * sigma_oracle[0], || {
        format!("singular values differ from Jacobi by {sv_dev:.3e}")
    })?;
    let mut worst = 0.0f64;
    for nr in [1, 10, 30, 59] {
        let b = PodBasis::fit(&s, Truncation::Modes(nr)).map_err(|e| e.to_string())?;
        let u = b.modes();
        let lhs = (&m - u * u.tr_mul(&m)).norm_squared();
        let rhs: f64 = full.singular_values()[nr..].iter().map(|x| x * x).sum();
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    ensure(worst <= 1e-8, || format!("truncation identity relative deviation {worst:.3e}"))?;
    let cases: [(&[f64], f64, usize); 5] = [
        (&[2.0, 1.0, 0.0, 0.0], 0.7, 2),
        (&[2.0, 1.0, 0.0, 0.0], 0.6, 1),
        (&[4.0, 3.0, 2.0, 1.0], 0.75, 3),
        (&[4.0, 3.0, 2.0, 1.0], 0.95, 4),
        (&[1.0, 1.0, 1.0, 1.0], 0.5, 2),
    ];
    for (sigma, delta, expect) in cases {
        let got = select_modes(sigma, delta).map_err(|e| e.to_string())?;
        ensure(got == expect, || format!("select_modes({sigma:?}, {delta}) = {got}, expected {expect}"))?;
    }
    Ok((format!("orthonormality {orth:.2e}, truncation identity {worst:.2e}, 5 hand counts"), Vec::new()))
}

fn c4_mode_reduction() -> Outcome {
    let s = fixtures::jittered_modes(42).map_err(|e| e.to_string())?;
    let (train_raw, _) =
        split_train_validation(&s, SplitSpec { n_train: N_TRAIN, n_validation: N_VALIDATION })
            .map_err(|e| e.to_string())?;
    let filtered =
        filter_snapshots(&train_raw, &FilterConfig { psd_threshold: JITTER_THRESHOLD, keep_dc: true })
            .map_err(|e| e.to_string())?;
    let sv_raw = compute_svd(train_raw.values()).map_err(|e| e.to_string())?.singular_values;
    let sv_filt = compute_svd(filtered.values()).map_err(|e| e.to_string())?.singular_values;
    let n_raw = select_modes(&sv_raw, 0.9).map_err(|e| e.to_string())?;
    let n_filt = select_modes(&sv_filt, 0.9).map_err(|e| e.to_string())?;
    ensure(n_filt < n_raw, || format!("filtered needs {n_filt} modes, unfiltered {n_raw}"))?;
    let mut bytes = Vec::new();
    for v in sv_raw.iter().chain(&sv_filt) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(&filtered.to_binary());
    Ok((format!("Nc=2700 Nt=450: filtered {n_filt} modes < unfiltered {n_raw} modes at delta=0.9"), bytes))
}

fn c5_gradients() -> Outcome {
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut bytes = Vec::new();
    for seed in 0..5u64 {
        let p = random_params(2, 2, 2, 500 + seed, 1.0);
        let ds = random_dataset(2, 10, 3, 600 + seed);
        let (_, grads) = backward(&p, &ds).map_err(|e| e.to_string())?;
        for block in 0..5 {
            for i in 0..p.slices()[block].len() {
                let mut plus = p.clone();
                plus.slices_mut()[block][i] += h;
                let mut minus = p.clone();
                minus.slices_mut()[block][i] -= h;
                let fd = (scalar_loss(&plus, &ds) - scalar_loss(&minus, &ds)) / (2.0 * h);
                let g = grads.slices()[block][i];
                let denom = g.abs().max(fd.abs());
                let rel = if denom == 0.0 { 0.0 } else { (g - fd).abs() / denom };
                if rel > 1e-5 {
                    return Err(format!(
                        "seed {seed}, block {block}, index {i}: analytic {g:e} vs fd {fd:e}"
                    ));
                }
                worst = worst.max(rel);
                bytes.extend_from_slice(&g.to_le_bytes());
            }
        }
    }
    Ok((format!("H=2 D=2 s=3, 5 seeds, worst relative deviation {worst:.2e}"), bytes))
}

fn c6_sinusoid() -> Outcome {
    let c = fixtures::sinusoid_trajectory();
    let cfg = TrainingConfig {
        hidden_size: 32,
        sequence_length: 10,
        learning_rate: 1e-3,
        epochs: 2000,
        seed: 7,
        ..TrainingConfig::default()
    };
    let (model, history) = train(&c, &cfg).map_err(|e| e.to_string())?;
    let mse = model.loss_on(&c).map_err(|e| e.to_string())?;
    ensure(mse < 1e-4, || format!("scaled MSE {mse:.3e} >= 1e-4"))?;
    let pred = predict_rollout(&model, &c, 10).map_err(|e| e.to_string())?;
    let truth = fixtures::sinusoid_values(TRAIN_SPAN, 10);
    let mut worst = 0.0f64;
    for (k, t) in truth.iter().enumerate() {
        let e = 100.0 * (pred[(0, k)] - t).abs() / t.abs();
        ensure(e <= 5.0, || format!("rollout step {} error {e:.3}% > 5%", k + 1))?;
        worst = worst.max(e);
    }
    let mut bytes = model.to_bytes();
    for v in history.iter().chain(pred.iter()) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok((format!("scaled MSE {mse:.2e}, worst 10-step rollout error {worst:.3}%"), bytes))
}

fn c7_pipeline() -> Outcome {
    let s = fixtures::jittered_modes(42).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        filter: FilterConfig { psd_threshold: JITTER_THRESHOLD, keep_dc: true },
        truncation: Truncation::Energy(0.99),
        split: SplitSpec { n_train: N_TRAIN, n_validation: N_VALIDATION },
        training: TrainingConfig { seed: 7, ..TrainingConfig::default() },
    };
    let artifacts = offline(&s, &cfg).map_err(|e| e.to_string())?;
    let (report, _) =
        evaluate(&s, &artifacts, IdentificationReference::Filtered).map_err(|e| e.to_string())?;
    let ident_max = report.train.map(|w| w.max).unwrap_or(f64::NAN);
    ensure(ident_max <= 5.0, || format!("identification error reaches {ident_max:.3}% > 5%"))?;
    let first10 = &report.relative_errors[N_TRAIN..N_TRAIN + 10];
    let pred_mean = first10.iter().sum::<f64>() / 10.0;
    ensure(pred_mean <= 15.0, || format!("mean 10-step prediction error {pred_mean:.3}% > 15%"))?;
    let mut bytes = artifacts.model.to_bytes();
    bytes.extend_from_slice(&artifacts.basis.to_bytes());
    bytes.extend_from_slice(report.to_csv().as_bytes());
    bytes.extend_from_slice(report.to_svg("relative error").as_bytes());
    Ok((
        format!(
            "Nr={}, identification max {ident_max:.2e}%, prediction mean (10 steps) {pred_mean:.3}%",
            artifacts.basis.n_modes()
        ),
        bytes,
    ))
}

fn c9_speedup() -> Outcome {
    let r = speedup(1.8e5, 85.0).map_err(|e| e.to_string())?;
    ensure((r - 1.8e5 / 85.0).abs() < 1e-9, || format!("ratio {r}"))?;
    ensure((1e3..1e4).contains(&r), || format!("{r:.1} is not of the order of 1e3"))?;
    ensure(speedup(1.0, 1.0).map_err(|e| e.to_string())? == 1.0, || "equal times".into())?;
    ensure(speedup(100.0, 0.0).is_err(), || "zero online time accepted".into())?;
    Ok((format!("speedup(1.8e5, 85) = {r:.1} (order 1e3)"), Vec::new()))
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn run(&mut self, id: &str, name: &str, limit: Duration, f: fn() -> Outcome) -> Option<Vec<u8>> {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let outcome = match result {
            Ok(Ok((detail, bytes))) if elapsed <= limit => Ok((detail, bytes)),
            Ok(Ok((detail, _))) => Err(format!(
                "{detail}; runtime {:.2} s exceeds {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            )),
            Ok(Err(e)) => Err(e),
            Err(panic) => Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into())),
        };
        match outcome {
            Ok((detail, bytes)) => {
                println!("[PASS] {id} {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
                Some(bytes)
            }
            Err(e) => {
                println!("[FAIL] {id} {name}: {e} ({:.2} s)", elapsed.as_secs_f64());
                self.failures += 1;
                None
            }
        }
    }
}

fn main() -> ExitCode {
    let mut r = Runner { failures: 0 };
    let secs = Duration::from_secs;
    r.run("C1", "DFT oracle equivalence", secs(5), c1_dft);
    r.run("C2", "filtering exactness", secs(1), c2_filter);
    r.run("C3", "POD correctness", secs(5), c3_pod);
    let staged: [Stage; 4] = [
        ("C4", "mode-count reduction by filtering", secs(60), c4_mode_reduction),
        ("C5", "LSTM gradient check", secs(10), c5_gradients),
        ("C6", "LSTM learning fixture", secs(120), c6_sinusoid),
        ("C7", "end-to-end pipeline", secs(300), c7_pipeline),
    ];
    let first: Vec<Option<Vec<u8>>> =
        staged.iter().map(|&(id, name, lim, f)| r.run(id, name, lim, f)).collect();

    // C8: rerun C4-C7 and compare every produced byte
    let start = Instant::now();
    let mut mismatch = Vec::new();
    for (&(id, _, _, f), before) in staged.iter().zip(&first) {
        let again = catch_unwind(AssertUnwindSafe(f)).ok().and_then(Result::ok).map(|(_, b)| b);
        match (before, again) {
            (Some(a), Some(b)) if *a == b => {}
            (Some(_), Some(_)) => mismatch.push(format!("{id} outputs differ")),
            _ => mismatch.push(format!("{id} did not complete")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if mismatch.is_empty() {
        let total: usize = first.iter().flatten().map(Vec::len).sum();
        println!("[PASS] C8 determinism: {total} bytes from C4-C7 bit-identical on rerun ({elapsed:.2} s)");
    } else {
        println!("[FAIL] C8 determinism: {} ({elapsed:.2} s)", mismatch.join("; "));
        r.failures += 1;
    }

    r.run("C9", "speed-up accounting", secs(1), c9_speedup);
    if r.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", r.failures);
        ExitCode::FAILURE
    }
}
