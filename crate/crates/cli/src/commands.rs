// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::json;
use tlsim_core::accuracy::{evaluate_seeds, map_quant_model, Dataset, Engine, ErrorSource, EvalReport, QuantModel};
use tlsim_core::array::{discharge_count, mac_oracle_check};
use tlsim_core::mapper::{capacity_report, map_model, ModelManifest, StorageArch};
use tlsim_core::perf::{
    area_comparison, density_report, estimate_energy, mvm_cycles, peak_throughput_ratio, Arch, ArrayShape, Component,
    Workload,
};
use tlsim_core::trit::{from_balanced_ternary, max_magnitude, to_balanced_ternary, Trit, DEFAULT_WIDTH};
use tlsim_core::yield_mc::{error_confusion_matrix, yield_sweep, SweepAxis};

use crate::config::Config;
use crate::{AccuracyArgs, DensityArgs, Failure, MacCheckArgs, MapArgs, PerfArgs, YieldArgs};

pub struct Context {
    pub config: Config,
    pub hash: String,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl Context {
    fn require_seed(&self, cmd: &str) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| {
            Failure::validation(format!(
                "{cmd} is stochastic: pass --seed or set seeds.base in the config"
            ))
        })
    }

    fn csv_header(&self, cmd: &str) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("# tlsim {cmd} config_sha256={} seed={seed}\n", self.hash)
    }

    fn json_header(&self, cmd: &str) -> serde_json::Value {
        json!({ "command": cmd, "config_sha256": self.hash, "seed": self.seed })
    }

    fn write(&self, name: &str, body: &str) -> Result<(), Failure> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Failure::validation(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        std::fs::write(&path, body)
            .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))?;
        println!("{}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, cmd: &str, body: serde_json::Value) -> Result<(), Failure> {
        let mut doc = self.json_header(cmd);
        doc["report"] = body;
        let text = serde_json::to_string_pretty(&doc).map_err(tlsim_core::Error::from)?;
        self.write(name, &(text + "\n"))
    }
}

fn load_manifest(path: &std::path::Path) -> Result<ModelManifest, Failure> {
    Ok(ModelManifest::load(path)?)
}

pub fn yield_cmd(ctx: &Context, a: &YieldArgs) -> Result<(), Failure> {
    let seed = ctx.require_seed("yield")?;
    let axis: SweepAxis = a.axis.parse()?;
    let mut settings = ctx.config.yield_settings.clone();
    if let Some(t) = a.trials {
        settings.trials = t;
    }
    let sweep = yield_sweep(
        axis,
        &a.values,
        &ctx.config.geometry,
        &ctx.config.device,
        &settings,
        seed,
    )?;
    let mut body = ctx.csv_header("yield");
    let _ = writeln!(body, "# axis={} kendall_tau={}", a.axis, sweep.kendall_tau);
    body.push_str(&sweep.to_csv());
    ctx.write("yield.csv", &body)?;
    if let Some((v, r)) = sweep.points.iter().find(|(_, r)| r.failure_reason.is_some()) {
        return Err(Failure::model(format!(
            "at {}={v}: {}",
            a.axis,
            r.failure_reason.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

pub fn mac_check(ctx: &Context, a: &MacCheckArgs) -> Result<(), Failure> {
    let seed = ctx.require_seed("mac-check")?;
    let report = mac_oracle_check(&ctx.config.subarray, a.instances, seed)?;
    let trits = [Trit::Neg, Trit::Zero, Trit::Pos];
    let discharge: Vec<_> = trits
        .iter()
        .flat_map(|&i| {
            trits
                .iter()
                .map(move |&w| json!({ "input": i as i8, "weight": w as i8, "paths": discharge_count(i, w) }))
        })
        .collect();
    let max = max_magnitude(DEFAULT_WIDTH);
    let roundtrip_failures = (-max..=max)
        .filter(|&v| {
            to_balanced_ternary(v, DEFAULT_WIDTH)
                .map(|w| from_balanced_ternary(&w))
                .ok()
                != Some(v)
        })
        .count();
    let passed = report.passed() && roundtrip_failures == 0;
    ctx.write_json(
        "mac_check.json",
        "mac-check",
        json!({
            "passed": passed,
            "oracle": report,
            "discharge_table": discharge,
            "codec_values": 2 * max + 1,
            "codec_roundtrip_failures": roundtrip_failures,
        }),
    )?;
    if !passed {
        return Err(Failure::model(format!(
            "{} outputs differ from the integer oracle (max |error| {})",
            report.mismatched_outputs, report.max_abs_error
        )));
    }
    Ok(())
}

pub fn map(ctx: &Context, a: &MapArgs) -> Result<(), Failure> {
    let m = load_manifest(&a.model)?;
    let c = &ctx.config;
    let tl = capacity_report(&m.layers, StorageArch::Tl, &c.subarray, &c.geometry, &c.sl_array)?;
    let sl = capacity_report(&m.layers, StorageArch::Sl, &c.subarray, &c.geometry, &c.sl_array)?;
    let n = a.subarrays.unwrap_or(tl.subarrays_needed.max(1) as usize);
    let dup = a.duplicate.then_some(&c.duplication);
    let placement = if m.layers.is_empty() {
        None
    } else {
        Some(map_model(&m.layers, n, dup, &c.subarray, &c.geometry)?)
    };
    ctx.write_json(
        "capacity.json",
        "map",
        json!({
            "model": m.name,
            "tl": tl,
            "sl": sl,
            "subarrays_used": n,
            "bands_used": placement.as_ref().map(|p| p.bands_used.clone()),
            "replicas": placement.as_ref().map(|p| p.replicas.clone()),
        }),
    )?;
    ctx.write_json(
        "placement.json",
        "map",
        serde_json::to_value(&placement).map_err(tlsim_core::Error::from)?,
    )
}

pub fn perf(ctx: &Context, a: &PerfArgs) -> Result<(), Failure> {
    let archs = a
        .arch
        .iter()
        .map(|s| s.parse::<Arch>())
        .collect::<Result<Vec<_>, _>>()?;
    let m = load_manifest(&a.model)?;
    let c = &ctx.config;
    let mut w = Workload::map(&m, &c.subarray, &c.geometry, a.duplicate.then_some(&c.duplication))?;
    w.bc = c.bc_array;
    w.sl = c.sl_array;
    let tl = estimate_energy(&w, Arch::Tl, &c.energy)?;
    let ledgers = archs
        .iter()
        .map(|&arch| estimate_energy(&w, arch, &c.energy))
        .collect::<Result<Vec<_>, _>>()?;
    let ratio = |e: f64| if e > 0.0 { tl.efficiency_ops_per_j / e } else { 0.0 };

    let mut csv = ctx.csv_header("perf");
    let _ = write!(
        csv,
        "arch,macs,ops,total_energy_j,pj_per_mac,efficiency_ops_per_j,tl_efficiency_ratio"
    );
    for comp in Component::ALL {
        let _ = write!(csv, ",{}_count,{}_energy_j", comp.name(), comp.name());
    }
    csv.push('\n');
    for l in &ledgers {
        let _ = write!(
            csv,
            "{},{},{},{:e},{:e},{:e},{:e}",
            l.arch,
            l.macs,
            l.ops,
            l.total_j,
            l.pj_per_mac(),
            l.efficiency_ops_per_j,
            ratio(l.efficiency_ops_per_j)
        );
        for e in &l.entries {
            let _ = write!(csv, ",{},{:e}", e.count, e.energy_j);
        }
        csv.push('\n');
    }
    ctx.write("perf.csv", &csv)?;

    let ratios: serde_json::Map<_, _> = ledgers
        .iter()
        .map(|l| (l.arch.to_string(), json!(ratio(l.efficiency_ops_per_j))))
        .collect();
    let tc = ArrayShape {
        rows: c.subarray.rows,
        cols: c.subarray.sram_cols,
        rows_active: c.subarray.rows_active,
        cols_per_adc: 2 * c.subarray.cbls_per_adc,
        ..ArrayShape::tc_default()
    };
    let bc = ArrayShape {
        rows: c.bc_array.rows,
        cols: c.bc_array.cols,
        rows_active: c.bc_array.rows_active,
        cols_per_adc: c.bc_array.cols_per_adc,
        ..ArrayShape::bc_default()
    };
    ctx.write_json(
        "perf.json",
        "perf",
        json!({
            "workload": m.name,
            "macs": w.macs(),
            "tl_subarrays": w.placement.as_ref().map(|p| p.n_subarrays),
            "tl_cycles_per_inference": w.tl_cycles()?,
            "mvm_cycles": { "tc": mvm_cycles(&tc), "bc": mvm_cycles(&bc) },
            "peak_throughput_ratio_tc_over_bc": peak_throughput_ratio(&tc, &bc),
            "tl_efficiency_ratio": ratios,
            "assumptions": [
                "weights reload once per layer per inference (no cross-inference reuse)",
                "ternary and single-level restores are charged once per plane a layer touches",
                "ADC energy is accounted separately from per-column CIM energy",
                "buffer traffic is 8-bit inputs and outputs of every matrix-vector product"
            ],
            "ledgers": ledgers,
        }),
    )
}

pub fn accuracy(ctx: &Context, a: &AccuracyArgs) -> Result<(), Failure> {
    let base = ctx.require_seed("accuracy")?;
    if a.seeds == 0 {
        return Err(Failure::validation("--seeds must be >= 1"));
    }
    let model = QuantModel::load(&a.fixture)?;
    let data = Dataset::load_csv(a.fixture.join("dataset.csv"))?;
    let engine = match a.engine.as_str() {
        "reference" => Engine::ReferenceInt,
        "simulated" => Engine::SimulatedArray(map_quant_model(&model, &ctx.config.subarray, &ctx.config.geometry)?),
        other => {
            return Err(Failure::validation(format!(
                "unknown engine '{other}' (expected reference or simulated)"
            )))
        }
    };
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|k| base.wrapping_add(k)).collect();
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for &p in &a.rates {
        rows.push((
            "flat".into(),
            evaluate_seeds(&model, &data, &ErrorSource::FlatRate(p), &seeds, &engine)?,
        ));
    }
    if a.yield_errors {
        let cm = error_confusion_matrix(
            &ctx.config.geometry,
            &ctx.config.device,
            &ctx.config.yield_settings,
            base,
        )?;
        rows.push((
            "restore_confusion".into(),
            evaluate_seeds(&model, &data, &ErrorSource::Confusion(cm), &seeds, &engine)?,
        ));
    }
    let mut csv = ctx.csv_header("accuracy");
    csv.push_str("error_source,error_rate,engine,seeds,samples,mean_accuracy,min_accuracy,max_accuracy,trit_flips,weight_trits,retraining\n");
    for (src, r) in &rows {
        let min = r.per_seed_accuracies.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = r.per_seed_accuracies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            csv,
            "{src},{},{},{},{},{},{},{},{},{},{}",
            r.error_rate,
            r.engine,
            r.seeds.len(),
            r.samples,
            r.accuracy,
            min,
            max,
            r.trit_flips,
            r.weight_trits,
            r.retraining
        );
    }
    ctx.write("accuracy.csv", &csv)?;
    let reports: Vec<_> = rows
        .iter()
        .map(|(src, r)| json!({ "error_source": src, "report": r }))
        .collect();
    ctx.write_json(
        "accuracy.json",
        "accuracy",
        json!({ "model": model.name, "rows": reports }),
    )
}

pub fn density(ctx: &Context, a: &DensityArgs) -> Result<(), Failure> {
    let c = &ctx.config;
    let d = density_report(&c.area, &c.geometry, &c.sl_array)?;
    let sl_density = d.rows[1].density_bits_per_um2;
    let mut csv = ctx.csv_header("density");
    csv.push_str("cell,bits_per_cell,cell_area_um2,density_bits_per_um2,ratio_to_sl\n");
    for r in &d.rows {
        let _ = writeln!(
            csv,
            "{},{:.4},{:.4},{:.4},{:.4}",
            r.cell,
            r.bits_per_cell,
            r.cell_area_um2,
            r.density_bits_per_um2,
            r.density_bits_per_um2 / sl_density
        );
    }
    ctx.write("density.csv", &csv)?;
    if let Some(path) = &a.model {
        let m = load_manifest(path)?;
        let tl = capacity_report(&m.layers, StorageArch::Tl, &c.subarray, &c.geometry, &c.sl_array)?;
        let sl = capacity_report(&m.layers, StorageArch::Sl, &c.subarray, &c.geometry, &c.sl_array)?;
        let area = area_comparison(
            &c.area,
            tl.subarrays_needed,
            sl.subarrays_needed,
            &c.subarray,
            &c.sl_array,
        )?;
        ctx.write_json("area.json", "density", json!({ "model": m.name, "area": area }))?;
    }
    Ok(())
}
