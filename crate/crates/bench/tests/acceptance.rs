//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgbwkit::bench::{AlgoReport, BenchmarkReport, Timing};
use rgbwkit::{extrapolate_runtime, generate_dataset, ingest, run_benchmark, BenchOptions, DatasetSpec};
use rgbwkit_core::datagen::{build_clean, diagonal_bin, pairs_from_clean, DatagenOptions};
use rgbwkit_core::demosaic::malvar;
use rgbwkit_core::isp::DisplayImage;
use rgbwkit_core::metrics::{
    aggregate, evaluate_pair, kld, m4, psnr, ssim, EvalConfig, LpipsSource, MetricRecord, SsimMode, DEFAULT_BINS, DEFAULT_EPS,
};
use rgbwkit_core::noise::{calibrate_noise, synthesize_noise, FlatPatch, GainModel, NoiseParams, NoiseTable};
use rgbwkit_core::remosaic::{AlgoKind, RemosaicAlgo, RunOptions, TimingProtocol};
use rgbwkit_core::scene::{procedural_scene, SceneKind};
use rgbwkit_core::{CfaPattern, Channel, Levels, RawImage};

// Tolerances.
const M4_DIRECT_TOL: f64 = 0.02;
const M4_REPORTED_TOL: f64 = 0.5;
const EXTRAPOLATION_REL_TOL: f64 = 0.005;
const NOISE_REL_TOL: f64 = 0.05;
const NOISE_SEEDS: u64 = 10;
const PIPELINE_BUDGET: Duration = Duration::from_secs(5);
const DN_TOL: u16 = 1;
const SSIM_CLOSED_FORM_TOL: f64 = 1e-6;
const MALVAR_SAMPLES: usize = 10_000;
const MALVAR_TOL: f64 = 1e-6;
const ORDERING_SCENES: usize = 5;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Table 1 rows: name, PSNR, SSIM, LPIPS, KLD, reported M4, and M4 of the
/// averaged metrics.
const TABLE1: [(&str, f64, f64, f64, f64, f64, f64); 3] = [
    ("RUSH MI", 38.545, 0.976, 0.0707, 0.0650, 68.72, 68.49),
    ("HSTT", 38.739, 0.974, 0.0810, 0.0669, 68.51, 68.12),
    ("MegNR", 38.004, 0.965, 0.0671, 0.0684, 67.10, 66.78),
];

fn leaderboard_entry(name: &str, m4_value: f64, psnr_value: f64) -> AlgoReport {
    let row = MetricRecord {
        scene_id: "s".into(),
        gain_db: 0.0,
        psnr: psnr_value,
        ssim: 1.0,
        lpips: 0.0,
        lpips_source: LpipsSource::External,
        kld: 0.0,
        m4: m4_value,
        m4_clamped: false,
    };
    AlgoReport {
        name: name.into(),
        timing: Timing::External,
        aggregates: Some(aggregate(std::slice::from_ref(&row)).unwrap()),
        rows: vec![row],
        runtimes: Vec::new(),
        failures: 0,
    }
}

fn m4_arithmetic() -> Outcome {
    let mut direct = Vec::new();
    for (name, p, s, l, k, reported, expected) in TABLE1 {
        let v = m4(p, s, l, k);
        check((v - expected).abs() <= M4_DIRECT_TOL, format!("{name}: {v:.4} vs {expected}"))?;
        check((v - reported).abs() <= M4_REPORTED_TOL, format!("{name}: {v:.4} vs reported {reported}"))?;
        direct.push((name, v, reported));
    }
    check(
        direct.windows(2).all(|w| w[0].1 > w[1].1),
        "direct M4 values do not follow the published order",
    )?;
    // Both the direct values and the reported values rank in table order.
    for pick in [|d: &(&str, f64, f64)| d.1, |d: &(&str, f64, f64)| d.2] {
        let report = BenchmarkReport {
            dataset: String::new(),
            scenes: 1,
            gains: vec![0.0],
            split: None,
            algos: direct.iter().rev().map(|d| leaderboard_entry(d.0, pick(d), 38.0)).collect(),
            failures: Vec::new(),
            corrupt: Vec::new(),
            notices: Vec::new(),
            eval: EvalConfig::default(),
            environment: String::new(),
        };
        let order: Vec<_> = report.ranking().iter().map(|a| a.name.clone()).collect();
        check(order == ["RUSH MI", "HSTT", "MegNR"], format!("ranking {order:?}"))?;
    }
    Ok(direct
        .iter()
        .map(|(n, v, r)| format!("{n} {v:.3} (reported {r:.2})"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

fn runtime_extrapolation() -> Outcome {
    // measured, table value, decimals the table reports
    let rows = [(0.26, 7.7, 1), (6.02, 178.0, 0), (73.31, 2172.0, 0)];
    let mut out = Vec::new();
    for (measured, table, decimals) in rows {
        let est = extrapolate_runtime(measured, 1200, 1800);
        let rounded = round_to(est, decimals);
        check(
            (rounded - table).abs() / table <= EXTRAPOLATION_REL_TOL,
            format!("{measured} s -> {est:.3} s, table {table}"),
        )?;
        out.push(format!("{measured}->{est:.2}"));
    }
    check(extrapolate_runtime(1.0, 8000, 8000) == 1.0, "64M input should not scale")?;
    Ok(out.join(", "))
}

fn noise_round_trip() -> Outcome {
    let params = NoiseParams::new(4.0, 9.0, 0.0).map_err(|e| e.to_string())?;
    let levels = Levels { bit_depth: 10, black_level: 64, white_level: 1023 };
    let above_black = [0u16, 100, 300, 600];
    let mut worst: f64 = 0.0;
    for seed in 0..NOISE_SEEDS {
        let patches: Vec<FlatPatch> = above_black
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let dn = levels.black_level + m;
                let flat = RawImage::filled(256, 256, levels, CfaPattern::bayer_gbrg(), dn).unwrap();
                FlatPatch {
                    mean_dn: f64::from(dn),
                    patch: synthesize_noise(&flat, &params, seed * 100 + i as u64).unwrap(),
                }
            })
            .collect();
        let cal = calibrate_noise(&patches, 0.0).map_err(|e| e.to_string())?;
        let es = (cal.params.sigma_s_sq - 4.0).abs() / 4.0;
        let ec = (cal.params.sigma_c_sq - 9.0).abs() / 9.0;
        check(
            es <= NOISE_REL_TOL && ec <= NOISE_REL_TOL,
            format!("seed {seed}: sigma_s_sq {:.3}, sigma_c_sq {:.3}", cal.params.sigma_s_sq, cal.params.sigma_c_sq),
        )?;
        worst = worst.max(es).max(ec);
    }
    Ok(format!("{NOISE_SEEDS} seeds, worst relative error {:.2}%", worst * 100.0))
}

fn pipeline_self_consistency() -> Outcome {
    let capture = procedural_scene(SceneKind::Texture, 2400, 3600, 1)
        .capture(&CfaPattern::rgbw_diag(), Levels::default())
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let clean = build_clean(&capture, &DatagenOptions::default()).map_err(|e| e.to_string())?;
    let (dbinb, dbinc) = diagonal_bin(&clean.rgbw).map_err(|e| e.to_string())?;
    let worst_b = dbinb.data().iter().zip(clean.dbinb.data()).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
    let worst_c = dbinc.data.iter().zip(&clean.dbinc.data).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
    let (w, h) = (clean.rgbw.width(), clean.rgbw.height());
    let mut shared = 0usize;
    for y in 0..h {
        for x in 0..w {
            if clean.rgbw.channel_at(x, y) == clean.bayer.channel_at(x, y) {
                check(clean.rgbw.get(x, y) == clean.bayer.get(x, y), format!("co-sited mismatch at ({x},{y})"))?;
                shared += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(worst_b <= DN_TOL && worst_c <= DN_TOL, format!("re-binning differs by {worst_b}/{worst_c} DN"))?;
    check(elapsed < PIPELINE_BUDGET, format!("took {elapsed:.2?}"))?;
    Ok(format!(
        "{w}x{h}, max diff {worst_b}/{worst_c} DN, {shared} co-sited pixels exact, {elapsed:.2?}"
    ))
}

fn malvar_oracle(img: &RawImage, x: usize, y: usize, want: Channel) -> f64 {
    const G_AT_RB: [[f64; 5]; 5] = [
        [0.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 2.0, 0.0, 0.0],
        [-1.0, 2.0, 4.0, 2.0, -1.0],
        [0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0],
    ];
    const ROW: [[f64; 5]; 5] = [
        [0.0, 0.0, 0.5, 0.0, 0.0],
        [0.0, -1.0, 0.0, -1.0, 0.0],
        [-1.0, 4.0, 5.0, 4.0, -1.0],
        [0.0, -1.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.5, 0.0, 0.0],
    ];
    const OPPOSITE: [[f64; 5]; 5] = [
        [0.0, 0.0, -1.5, 0.0, 0.0],
        [0.0, 2.0, 0.0, 2.0, 0.0],
        [-1.5, 0.0, 6.0, 0.0, -1.5],
        [0.0, 2.0, 0.0, 2.0, 0.0],
        [0.0, 0.0, -1.5, 0.0, 0.0],
    ];
    let conv = |k: &[[f64; 5]; 5], transpose: bool| {
        let mut acc = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let wgt = if transpose { k[j][i] } else { k[i][j] };
                acc += wgt * f64::from(img.get(x + j - 2, y + i - 2));
            }
        }
        acc / 8.0
    };
    let here = img.channel_at(x, y);
    let dn = if here == want {
        f64::from(img.get(x, y))
    } else if want == Channel::G {
        conv(&G_AT_RB, false)
    } else if here == Channel::G {
        conv(&ROW, img.channel_at(x + 1, y) != want)
    } else {
        conv(&OPPOSITE, false)
    };
    let l = img.levels();
    ((dn - f64::from(l.black_level)) / l.range()).clamp(0.0, 1.0)
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (w, h) = (64, 48);
    let a = DisplayImage::new(w, h, (0..w * h * 3).map(|_| rng.random::<u8>()).collect()).unwrap();
    let p = psnr(&a, &a).map_err(|e| e.to_string())?;
    check(p == 100.0, format!("psnr(a,a) = {p}"))?;
    for mode in [SsimMode::PerChannel, SsimMode::Luma] {
        let s = ssim(&a, &a, mode).map_err(|e| e.to_string())?;
        check(s == 1.0, format!("ssim(a,a) = {s:e} ({mode:?})"))?;
    }
    let bayer = RawImage::new(w, h, Levels::default(), CfaPattern::bayer_gbrg(), (0..w * h).map(|_| rng.random_range(0..1024)).collect()).unwrap();
    let k = kld(&bayer, &bayer, DEFAULT_BINS, DEFAULT_EPS).map_err(|e| e.to_string())?;
    check(k == 0.0, format!("kld(a,a) = {k}"))?;

    let black = DisplayImage::new(16, 16, vec![0; 16 * 16 * 3]).unwrap();
    let white = DisplayImage::new(16, 16, vec![255; 16 * 16 * 3]).unwrap();
    let c1 = (0.01f64 * 255.0).powi(2);
    let closed = c1 / (255.0f64.powi(2) + c1);
    let s = ssim(&black, &white, SsimMode::PerChannel).map_err(|e| e.to_string())?;
    check((s - closed).abs() <= SSIM_CLOSED_FORM_TOL, format!("constant SSIM {s:e} vs {closed:e}"))?;

    let (bw, bh) = (320, 240);
    let levels = Levels { bit_depth: 10, black_level: 32, white_level: 1023 };
    let raw = RawImage::new(bw, bh, levels, CfaPattern::bayer_gbrg(), (0..bw * bh).map(|_| rng.random_range(0..1024)).collect()).unwrap();
    let rgb = malvar(&raw).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..MALVAR_SAMPLES {
        let (x, y) = (rng.random_range(2..bw - 2), rng.random_range(2..bh - 2));
        let got = rgb.get(x, y);
        for (c, ch) in [Channel::R, Channel::G, Channel::B].into_iter().enumerate() {
            worst = worst.max((f64::from(got[c]) - malvar_oracle(&raw, x, y, ch)).abs());
        }
    }
    check(worst <= MALVAR_TOL, format!("Malvar differs from oracle by {worst:e}"))?;
    Ok(format!("SSIM(0,255) = {s:.3e}, Malvar max deviation {worst:.1e} over {MALVAR_SAMPLES} pixels"))
}

fn baseline_ordering() -> Outcome {
    let gains = [0.0, 24.0, 42.0];
    let kinds = [AlgoKind::Nearest, AlgoKind::Bilinear, AlgoKind::Wguided];
    let noise = NoiseTable::from_model(&GainModel::default(), &gains);
    let cfg = EvalConfig::default();
    let n = ORDERING_SCENES as f64;
    // [gain][algo] -> (mean psnr, mean m4)
    let mut acc = [[(0.0f64, 0.0f64); 3]; 3];
    for i in 0..ORDERING_SCENES {
        let capture = procedural_scene(SceneKind::for_index(i), 384, 256, 300 + i as u64)
            .capture(&CfaPattern::rgbw_diag(), Levels::default())
            .map_err(|e| e.to_string())?;
        let clean = build_clean(&capture, &DatagenOptions::default()).map_err(|e| e.to_string())?;
        let pairs = pairs_from_clean(&clean, &format!("s{i}"), &gains, &noise, 11).map_err(|e| e.to_string())?;
        for (gi, pair) in pairs.iter().enumerate() {
            for (ai, kind) in kinds.iter().enumerate() {
                let pred = RemosaicAlgo::builtin(*kind).apply(&pair.input_rgbw).map_err(|e| e.to_string())?;
                let r = evaluate_pair(&pred, &pair.gt_bayer, &pair.scene_id, pair.gain_db, &cfg, (0.0, LpipsSource::Absent))
                    .map_err(|e| e.to_string())?;
                acc[gi][ai].0 += r.psnr / n;
                acc[gi][ai].1 += r.m4 / n;
            }
        }
    }
    let clean_m4 = [acc[0][0].1, acc[0][1].1, acc[0][2].1];
    check(
        clean_m4[2] > clean_m4[1] && clean_m4[1] > clean_m4[0],
        format!("noise-free M4 nearest/bilinear/wguided = {clean_m4:.2?}"),
    )?;
    for (ai, kind) in kinds.iter().enumerate() {
        let p = [acc[0][ai].0, acc[1][ai].0, acc[2][ai].0];
        check(p[0] > p[1] && p[1] > p[2], format!("{kind:?} PSNR by gain {p:.2?}"))?;
    }
    Ok(format!(
        "M4 at 0 dB: wguided {:.2} > bilinear {:.2} > nearest {:.2}; PSNR falls with gain for all three",
        clean_m4[2], clean_m4[1], clean_m4[0]
    ))
}

fn cli(args: &[&str]) -> i32 {
    rgbwkit::cli::run(std::iter::once("rgbwkit").chain(args.iter().copied()))
}

fn dir_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut datasets = Vec::new();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let ds = tmp.path().join(format!("ds_{run}"));
        let rep = tmp.path().join(format!("rep_{run}"));
        let (ds_s, rep_s) = (ds.to_str().unwrap(), rep.to_str().unwrap());
        let code = cli(&["datagen", "--out", ds_s, "--scenes", "3", "--width", "480", "--height", "320", "--seed", "42"]);
        check(code == 0, format!("datagen exit {code}"))?;
        let code = cli(&[
            "bench", "--dataset", ds_s, "--out", rep_s, "--algo", "nearest", "--algo", "bilinear", "--algo", "wguided",
            "--report", "both", "--warmup", "0", "--repeats", "1",
        ]);
        check(code == 0, format!("bench exit {code}"))?;
        datasets.push(dir_bytes(&ds));
        csvs.push(std::fs::read(rep.join("metrics.csv")).map_err(|e| e.to_string())?);
    }
    check(datasets[0].len() == 13, format!("expected 13 dataset files, found {}", datasets[0].len()))?;
    check(datasets[0] == datasets[1], "datasets differ between runs")?;
    check(csvs[0] == csvs[1], "metric CSVs differ between runs")?;
    let rows = String::from_utf8_lossy(&csvs[0]).lines().count() - 1;
    Ok(format!("{} dataset files and {rows} metric rows byte-identical", datasets[0].len()))
}

fn plugin_contract() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = tmp.path().join("ds");
    let mut spec = DatasetSpec::new(&ds);
    spec.width = 96;
    spec.height = 64;
    spec.seed = 3;
    generate_dataset(&spec).map_err(|e| e.to_string())?;
    let dataset = ingest(&ds).map_err(|e| e.to_string())?;

    let identity = RemosaicAlgo::plugin("identity", r#"sh -c 'cp "$(dirname "$1")/gt.bayer" "$2"' identity"#);
    let broken = RemosaicAlgo::plugin("broken", r#"sh -c 'printf garbage > "$2"' broken"#);
    let flaky = RemosaicAlgo::plugin(
        "flaky",
        r#"sh -c 'case "$1" in */scene02/*) head -c 100 "$(dirname "$1")/gt.bayer" > "$2";; *) cp "$(dirname "$1")/gt.bayer" "$2";; esac' flaky"#,
    );
    let opts = BenchOptions {
        run: RunOptions { timeout: Duration::from_secs(60), timing: TimingProtocol::SINGLE },
        ..BenchOptions::default()
    };
    let report = run_benchmark(&dataset, &[identity, broken, flaky], &opts).map_err(|e| e.to_string())?;
    let total = dataset.input_count();

    let id = report.algo("identity").ok_or("identity missing")?;
    check(id.rows.len() == total, format!("identity scored {} of {total}", id.rows.len()))?;
    for r in &id.rows {
        check(
            r.psnr == 100.0 && r.ssim == 1.0 && r.kld == 0.0,
            format!("identity row {} {} dB: psnr {} ssim {} kld {}", r.scene_id, r.gain_db, r.psnr, r.ssim, r.kld),
        )?;
    }
    let br = report.algo("broken").ok_or("broken missing")?;
    check(br.failures == total && br.aggregates.is_none(), "broken plugin should fail everywhere and be excluded")?;
    let fl = report.algo("flaky").ok_or("flaky missing")?;
    let flaky_failures: Vec<_> = report.failures.iter().filter(|f| f.algo == "flaky").collect();
    check(
        fl.rows.len() == total - 3 && flaky_failures.len() == 3 && flaky_failures.iter().all(|f| f.scene_id == "scene02"),
        format!("flaky: {} rows, {} failures", fl.rows.len(), flaky_failures.len()),
    )?;
    check(
        report.notices.iter().any(|n| n.contains("broken")),
        "no exclusion notice for the broken plugin",
    )?;
    Ok(format!(
        "identity perfect on {total} rows; {} malformed outputs recorded as failures",
        report.failures.len()
    ))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 8] = [
        ("AC1", "M4 arithmetic against the published table", m4_arithmetic),
        ("AC2", "runtime extrapolation to 64M pixels", runtime_extrapolation),
        ("AC3", "noise synthesis and calibration round trip", noise_round_trip),
        ("AC4", "data pipeline self-consistency at 2400x3600", pipeline_self_consistency),
        ("AC5", "metric identities and demosaic oracle", metric_identities),
        ("AC6", "baseline quality ordering", baseline_ordering),
        ("AC7", "datagen and bench determinism", determinism),
        ("AC8", "plugin contract", plugin_contract),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, title, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS  {title} ({secs:.2} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL  {title} ({secs:.2} s): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
