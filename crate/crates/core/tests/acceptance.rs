// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs without the libtest harness so that every check
//! prints exactly one PASS/FAIL line; exits non-zero if any check fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tlsim_core::accuracy::{
    corrupt_model, evaluate_seeds, map_quant_model, predict, significant_increase, Dataset, Engine, ErrorModel,
    ErrorSource, QuantModel,
};
use tlsim_core::array::{discharge_count, mac_oracle_check, restore_cell, SubarrayConfig};
use tlsim_core::device::{optimal_mrs, restore_thresholds, ClusterGeometry, DeviceParams};
use tlsim_core::mapper::{capacity_report, ModelManifest, SlArrayConfig, StorageArch};
use tlsim_core::perf::{
    cb_count, density_report, estimate_energy, mvm_cycles, peak_throughput_ratio, Arch, ArrayShape, EnergyParams,
    Workload,
};
use tlsim_core::trit::{
    from_balanced_ternary, input_trit_to_lines, max_magnitude, to_balanced_ternary, truncated_value,
    weight_trit_to_bits, Trit,
};
use tlsim_core::yield_mc::{restore_yield, significantly_higher, yield_sweep, SweepAxis, YieldReport, YieldSettings};
use tlsim_core::AreaParamsF64;

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn mrs_optimum() -> Check {
    let v = optimal_mrs(80e3_f64, 1e6).map_err(|e| e.to_string())?;
    let rel = (v - 282e3).abs() / 282e3;
    ensure((v - 282_842.712).abs() < 0.01, format!("optimum {v:.3} ohm"))?;
    ensure(
        rel <= 0.005,
        format!("{v:.1} ohm is {:.3} % from 282 kohm", rel * 100.0),
    )?;
    Ok(format!("{:.2} kohm, {:.3} % from 282 kohm", v / 1e3, rel * 100.0))
}

fn codec_exhaustive() -> Check {
    let max = max_magnitude(5);
    ensure(max == 121, "width-5 range")?;
    for v in -max..=max {
        let w = to_balanced_ternary(v, 5).map_err(|e| e.to_string())?;
        ensure(from_balanced_ternary(&w) == v, format!("round trip of {v}"))?;
        let text = w.to_string();
        ensure(
            text.parse::<tlsim_core::trit::TritWord>()
                .map(|p| p == w)
                .unwrap_or(false),
            format!("text form of {v}"),
        )?;
    }
    let mut last = i64::MIN;
    for v in i8::MIN..=i8::MAX {
        let t = truncated_value(v, 5);
        ensure(t >= last, format!("truncation not monotone at {v}"))?;
        ensure(t == (v as i64).clamp(-121, 121), format!("truncation of {v} gave {t}"))?;
        last = t;
    }
    Ok("243 values round-trip; truncation monotone, saturating at +/-121".into())
}

fn discharge_semantics() -> Check {
    let trits = [Trit::Neg, Trit::Zero, Trit::Pos];
    for i in trits {
        for w in trits {
            let lines = input_trit_to_lines(i);
            let bits = weight_trit_to_bits(w);
            let (q1, q2) = (bits.q1(), bits.q2());
            let paths = (lines.in1 && q1) as u32
                + (lines.in2 && q2) as u32
                + (lines.inb2 && !q1) as u32
                + (lines.inb1 && !q2) as u32;
            let d = discharge_count(i, w);
            ensure(d == paths, format!("({i:?},{w:?}): {d} vs path count {paths}"))?;
            ensure(
                d as i64 == 1 - (i as i64) * (w as i64),
                format!("({i:?},{w:?}) not 1 - i*w"),
            )?;
        }
    }
    ensure(
        discharge_count(Trit::Pos, Trit::Pos) == 0,
        "equal signs discharge no path",
    )?;
    ensure(
        discharge_count(Trit::Zero, Trit::Pos) == 1,
        "zero input discharges one path",
    )?;
    ensure(
        discharge_count(Trit::Pos, Trit::Neg) == 2,
        "opposite signs discharge two paths",
    )?;
    Ok("9 pairs equal 1 - i*w and the line/bit path count; 0/1/2-path cases hold".into())
}

fn mac_oracle() -> Check {
    let r = mac_oracle_check(&SubarrayConfig::default(), 128, 2024).map_err(|e| e.to_string())?;
    ensure(r.instances >= 100 && r.rows == 256, "instance shape")?;
    ensure(
        r.passed(),
        format!(
            "{} mismatched outputs, max |error| {}",
            r.mismatched_outputs, r.max_abs_error
        ),
    )?;
    Ok(format!(
        "{} instances x {} outputs, 256 rows, 0 mismatches",
        r.instances, r.outputs_per_instance
    ))
}

fn nominal_restore() -> Check {
    let nominal = DeviceParams::<f64> {
        gap_sigma_rel: 0.0,
        cmos_sigma_log: 0.0,
        ..DeviceParams::default()
    };
    let settings = YieldSettings {
        trials: 20,
        ..YieldSettings::default()
    };
    for n in 1..=60 {
        for m in 1..=4 {
            let g = ClusterGeometry::new(n, m).map_err(|e| e.to_string())?;
            let r = restore_yield(&g, &nominal, &settings, 1).map_err(|e| e.to_string())?;
            ensure(
                r.overall_yield == 1.0,
                format!("n={n} m={m}: yield {}", r.overall_yield),
            )?;
        }
    }
    // a wide spread must still never decode the forbidden pair
    let wild = DeviceParams::<f64> {
        gap_sigma_rel: 2.0,
        cmos_sigma_log: 0.5,
        ..DeviceParams::default()
    };
    let g = ClusterGeometry::default();
    let th = restore_thresholds(&wild, &g).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut wrong = 0;
    for k in 0..30_000 {
        let t = [Trit::Neg, Trit::Zero, Trit::Pos][k % 3];
        let r = restore_cell(t, &wild, &g, &th, &mut rng, true).map_err(|e| format!("decode failed: {e}"))?;
        wrong += (r != t) as usize;
    }
    ensure(wrong > 0, "stress case produced no errors at all")?;
    Ok(format!(
        "yield 1.0 on all 240 (n, m); (0,1) never decoded in 30000 stressed restores ({wrong} errors)"
    ))
}

fn weakly_decreasing(points: &[(f64, YieldReport)]) -> Result<(), String> {
    for (a, ra) in points {
        for (b, rb) in points.iter().filter(|(b, _)| b > a) {
            ensure(
                !significantly_higher(ra, rb),
                format!(
                    "yield rises from {:.4} at {a} to {:.4} at {b}",
                    ra.overall_yield, rb.overall_yield
                ),
            )?;
        }
    }
    Ok(())
}

fn yield_trends() -> Check {
    let settings = YieldSettings {
        trials: 1000,
        ..YieldSettings::default()
    };
    let g = ClusterGeometry::default();
    let mut notes = Vec::new();
    for (label, params) in [
        ("default", DeviceParams::<f64>::default()),
        ("calibrated", DeviceParams::calibrated()),
    ] {
        let sig = yield_sweep(SweepAxis::Sigma, &[0.0, 0.05, 0.10, 0.20], &g, &params, &settings, 6)
            .map_err(|e| e.to_string())?;
        let n = yield_sweep(SweepAxis::N, &[1.0, 20.0, 40.0, 60.0], &g, &params, &settings, 6)
            .map_err(|e| e.to_string())?;
        weakly_decreasing(&sig.points).map_err(|e| format!("{label} sigma: {e}"))?;
        weakly_decreasing(&n.points).map_err(|e| format!("{label} n: {e}"))?;
        let at60 = &n.points[3].1;
        let ys: Vec<String> = n
            .points
            .iter()
            .map(|(_, r)| format!("{:.3}", r.overall_yield))
            .collect();
        notes.push(format!("{label}: n-sweep [{}]", ys.join(" ")));
        if label == "calibrated" {
            ensure(
                at60.overall_yield >= 0.94,
                format!(
                    "n=60 yield {:.4} CI [{:.4}, {:.4}]",
                    at60.overall_yield, at60.wilson_ci95.0, at60.wilson_ci95.1
                ),
            )?;
            notes.push(format!(
                "n=60 yield {:.4} (95% CI {:.4}-{:.4}) at cmos_sigma_log {}",
                at60.overall_yield, at60.wilson_ci95.0, at60.wilson_ci95.1, params.cmos_sigma_log
            ));
        }
    }
    Ok(notes.join("; "))
}

fn cycle_arithmetic() -> Check {
    ensure(cb_count(256, 11) == 24, "cb_count(256, 11)")?;
    let (tc, bc) = (ArrayShape::tc_default(), ArrayShape::bc_default());
    ensure(mvm_cycles(&tc) == 400 && mvm_cycles(&bc) == 512, "cycle counts")?;
    let ratio = peak_throughput_ratio(&tc, &bc);
    ensure((1.25..=1.35).contains(&ratio), format!("peak ratio {ratio}"))?;
    let narrow = ArrayShape { cols: 250, ..tc };
    let per_output = peak_throughput_ratio(&narrow, &bc);
    ensure(
        (per_output - 1.0).abs() < 1e-12,
        format!("256x250 per-output ratio {per_output}"),
    )?;
    ensure(narrow.adc_count() == 25 && bc.adc_count() == 32, "ADC counts")?;
    let saved = 100.0 * (1.0 - narrow.adc_count() as f64 / bc.adc_count() as f64);
    ensure((saved - 21.9).abs() <= 0.1, format!("ADC saving {saved} %"))?;
    Ok(format!(
        "cb_count(256,11)=24; peak ratio {ratio:.2}; 256x250: equal throughput, 25 ADCs, {saved:.3} % fewer"
    ))
}

fn manifest(name: &str) -> Result<ModelManifest, String> {
    ModelManifest::load(fixtures().join(format!("models/{name}.json"))).map_err(|e| e.to_string())
}

fn capacity() -> Check {
    let m = manifest("resnet18")?;
    ensure(m.total_params() == 11_173_962, format!("weights {}", m.total_params()))?;
    let (c, g, sl) = (
        SubarrayConfig::default(),
        ClusterGeometry::default(),
        SlArrayConfig::default(),
    );
    let tl = capacity_report(&m.layers, StorageArch::Tl, &c, &g, &sl).map_err(|e| e.to_string())?;
    let s = capacity_report(&m.layers, StorageArch::Sl, &c, &g, &sl).map_err(|e| e.to_string())?;
    ensure(
        tl.subarrays_needed == 6,
        format!("TL subarrays {}", tl.subarrays_needed),
    )?;
    ensure(
        (73..=79).contains(&s.subarrays_needed),
        format!("SL subarrays {}", s.subarrays_needed),
    )?;
    Ok(format!(
        "11,173,962 weights: {} TL, {} SL subarrays",
        tl.subarrays_needed, s.subarrays_needed
    ))
}

fn density() -> Check {
    let d = density_report(
        &AreaParamsF64::default(),
        &ClusterGeometry::default(),
        &SlArrayConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let tl = d.rows[2].density_bits_per_um2;
    let sl = d.rows[1].density_bits_per_um2;
    let (tl_r, sl_r) = (format!("{tl:.2}"), format!("{sl:.2}"));
    ensure(tl_r == "60.47" && sl_r == "7.73", format!("densities {tl_r}, {sl_r}"))?;
    let table_ratio = 60.47 / 7.73;
    ensure(
        format!("{table_ratio:.2}") == "7.82",
        format!("tabulated ratio {table_ratio}"),
    )?;
    ensure(
        format!("{:.1}", d.tl_over_sl) == "7.8",
        format!("ratio {}", d.tl_over_sl),
    )?;
    Ok(format!(
        "TL {tl_r}, SL {sl_r} bit/um2; ratio {table_ratio:.2} from the table ({:.3} unrounded) = 7.8x",
        d.tl_over_sl
    ))
}

fn energy_ratios() -> Check {
    let p = EnergyParams::<f64>::default();
    let equal_cim = EnergyParams {
        tl_cim_energy_pj: p.sram_cim_energy_pj,
        ..p.clone()
    };
    let mut notes = Vec::new();
    for name in ["resnet18", "vgg9"] {
        let w = Workload::map(
            &manifest(name)?,
            &SubarrayConfig::default(),
            &ClusterGeometry::default(),
            None,
        )
        .map_err(|e| e.to_string())?;
        let eff = |arch, params: &EnergyParams<f64>| {
            estimate_energy(&w, arch, params)
                .map(|l| l.efficiency_ops_per_j)
                .map_err(|e| e.to_string())
        };
        let tl = eff(Arch::Tl, &p)?;
        let [b1, b2, b3, b4] = [Arch::Baseline1, Arch::Baseline2, Arch::Baseline3, Arch::Baseline4].map(|a| eff(a, &p));
        let (b1, b2, b3, b4) = (b1?, b2?, b3?, b4?);
        let tl_eq = eff(Arch::Tl, &equal_cim)?;
        let b4_eq = eff(Arch::Baseline4, &equal_cim)?;
        let (r1, r3, r4, r4eq) = (tl / b1, tl / b3, tl / b4, tl_eq / b4_eq);
        ensure((2.3..=3.1).contains(&r1), format!("{name}: TL/baseline1 {r1:.3}"))?;
        ensure((r3 - 2.0).abs() <= 0.5, format!("{name}: TL/baseline3 {r3:.3}"))?;
        ensure((r4 - 1.2).abs() <= 0.15, format!("{name}: TL/baseline4 {r4:.3}"))?;
        ensure(r4eq >= 1.15, format!("{name}: equal-CIM TL/baseline4 {r4eq:.3}"))?;
        ensure(tl > b4 && b4 > b1.max(b2) && tl > b3, format!("{name}: ordering"))?;
        notes.push(format!(
            "{name} b1 {r1:.2} b2 {:.2} b3 {r3:.2} b4 {r4:.2} (equal CIM {r4eq:.2})",
            tl / b2
        ));
    }
    Ok(notes.join("; "))
}

fn accuracy_properties() -> Check {
    let dir = fixtures().join("mlp");
    let model = QuantModel::load(&dir).map_err(|e| e.to_string())?;
    let data = Dataset::load_csv(dir.join("dataset.csv")).map_err(|e| e.to_string())?;
    let placement =
        map_quant_model(&model, &SubarrayConfig::default(), &ClusterGeometry::default()).map_err(|e| e.to_string())?;
    let sim = Engine::SimulatedArray(placement);
    let a = predict(&model, &data, &Engine::ReferenceInt).map_err(|e| e.to_string())?;
    let b = predict(&model, &data, &sim).map_err(|e| e.to_string())?;
    ensure(a == b, "engines disagree at zero error")?;
    let (noisy, _) = corrupt_model(&model, &ErrorModel::flat(0.1, 0)).map_err(|e| e.to_string())?;
    let a = predict(&noisy, &data, &Engine::ReferenceInt).map_err(|e| e.to_string())?;
    let b = predict(&noisy, &data, &sim).map_err(|e| e.to_string())?;
    ensure(a == b, "engines disagree on corrupted weights")?;

    let seeds: Vec<u64> = (100..110).collect();
    let grid = [0.0, 0.01, 0.05, 0.1, 0.3];
    let mut runs = Vec::new();
    for &p in &grid {
        let r = evaluate_seeds(&model, &data, &ErrorSource::FlatRate(p), &seeds, &Engine::ReferenceInt)
            .map_err(|e| e.to_string())?;
        runs.push(r);
    }
    for k in 1..runs.len() {
        ensure(
            !significant_increase(&runs[k - 1].per_seed_accuracies, &runs[k].per_seed_accuracies),
            format!("accuracy rises from p={} to p={}", grid[k - 1], grid[k]),
        )?;
    }
    let means: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.accuracy)).collect();
    Ok(format!(
        "engines identical on {} samples; mean accuracy over p grid [{}] (10 seeds)",
        data.len(),
        means.join(" ")
    ))
}

fn determinism() -> Check {
    let run = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| {
            let y = yield_sweep(
                SweepAxis::Sigma,
                &[0.1, 0.8],
                &ClusterGeometry::default(),
                &DeviceParams::<f64>::calibrated(),
                &YieldSettings {
                    trials: 500,
                    ..YieldSettings::default()
                },
                42,
            )
            .map_err(|e| e.to_string())?;
            let mac = mac_oracle_check(&SubarrayConfig::default(), 4, 42).map_err(|e| e.to_string())?;
            let dir = fixtures().join("mlp");
            let model = QuantModel::load(&dir).map_err(|e| e.to_string())?;
            let data = Dataset::load_csv(dir.join("dataset.csv")).map_err(|e| e.to_string())?;
            let acc = evaluate_seeds(
                &model,
                &data,
                &ErrorSource::FlatRate(0.05),
                &[42, 43],
                &Engine::ReferenceInt,
            )
            .map_err(|e| e.to_string())?;
            Ok(format!(
                "{}\n{}\n{}",
                y.to_csv(),
                serde_json::to_string(&mac).unwrap(),
                serde_json::to_string(&acc).unwrap()
            ))
        })
    };
    let one = run(1)?;
    ensure(one == run(4)?, "1 vs 4 threads differ")?;
    ensure(one == run(4)?, "reruns differ")?;
    Ok(format!(
        "yield, mac-check and accuracy reports identical across reruns and 1/4 threads ({} bytes)",
        one.len()
    ))
}

fn main() {
    let checks: [(&str, CheckFn); 12] = [
        ("mrs optimum", mrs_optimum),
        ("codec exhaustiveness", codec_exhaustive),
        ("discharge semantics", discharge_semantics),
        ("mac oracle equivalence", mac_oracle),
        ("nominal restore", nominal_restore),
        ("yield trends", yield_trends),
        ("cycle and throughput arithmetic", cycle_arithmetic),
        ("capacity", capacity),
        ("storage density", density),
        ("energy-efficiency ratios", energy_ratios),
        ("accuracy harness properties", accuracy_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[{:>2}] PASS {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[{:>2}] FAIL {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
