use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use optidisc::focal::{focal_field, focal_slice_x, na_scan, write_scan_csv, Grid2D, Illumination};
use optidisc::noise::NoiseTable;
use optidisc::readout::{data_rate_estimate, mean_candidates, monte_carlo_error_rate, ReadConfig};
use optidisc::System64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Output(format!("{}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn system(cfg: &RunConfig) -> Result<System64, CliError> {
    Ok(System64::new(cfg.system)?)
}

pub fn focus(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let sys = system(cfg)?;
    let lambda = cfg.system.wavelength;
    let grid = Grid2D::square(cfg.focus_half_width * lambda, cfg.focus_points)?;
    let field = focal_field(&sys.focus, &grid)?;
    let mut w = create(dir, "focal_map.csv")?;
    field.write_csv(&mut w)?;
    w.flush()?;
    if let Ok(slice) = focal_slice_x(&field) {
        let mut w = create(dir, "focal_slice.csv")?;
        slice.write_csv(&mut w)?;
        w.flush()?;
    }
    let [ex, ey, ez] = field.peak_magnitudes();
    write_json(
        dir,
        "focus.json",
        &json!({
            "config": cfg,
            "w0": sys.w0,
            "d86": 2.0 * sys.w0,
            "peak": { "ex": ex, "ey": ey, "ez": ez },
            "ey_below_ez_below_ex": ey < ez && ez < ex,
        }),
    )?;
    println!(
        "w0 = {:.4} wavelengths; peak |Ex| {ex:.4e}, |Ey| {ey:.4e}, |Ez| {ez:.4e}",
        sys.w0 / lambda
    );
    Ok(())
}

pub fn scan_spot(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let mut base = cfg.system.focus_spec()?;
    base.illumination = if cfg.scan_fill > 0.0 {
        Illumination::Gaussian { fill: cfg.scan_fill }
    } else {
        Illumination::Uniform
    };
    let rows = na_scan(&base, &cfg.na_list)?;
    let mut w = create(dir, "spot_scan.csv")?;
    write_scan_csv(&rows, &mut w)?;
    w.flush()?;
    write_json(dir, "spot_scan.json", &json!({ "config": cfg, "rows": rows }))?;
    for r in &rows {
        println!(
            "NA {:.3}: D86 paraxial {:.4}, vectorial {:.4} wavelengths",
            r.na,
            r.d86_paraxial / cfg.system.wavelength,
            r.d86_vectorial / cfg.system.wavelength
        );
    }
    Ok(())
}

pub fn read(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let sys = system(cfg)?;
    let offset = cfg.offset.metres(sys.w0);
    let merge = offset == 0.0;
    let set = sys.far_fields(offset)?;
    let matrix = optidisc::detection::build_signal_matrix(&set, &sys.array, merge)?;
    let mut w = create(dir, "far_fields.csv")?;
    set.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(dir, "signal_matrix.csv")?;
    matrix.write_csv(&mut w)?;
    w.flush()?;
    let split = if merge {
        Value::Null
    } else {
        serde_json::to_value(optidisc::propagation::split_between(&sys.far_fields(0.0)?, &set)?)?
    };
    write_json(
        dir,
        "signal_matrix.json",
        &json!({
            "config": cfg,
            "w0": sys.w0,
            "pitch": sys.pitch,
            "offset": offset,
            "photons": cfg.system.photons,
            "merged": merge,
            "matrix": matrix,
            "degeneracy_split": split,
        }),
    )?;
    println!("sequence {}", matrix.labels.join(" "));
    for (l, row) in matrix.labels.iter().zip(&matrix.entries) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:8.3}")).collect();
        println!("{l:>8} {}", cells.join(" "));
    }
    Ok(())
}

fn require_zero_offset(cfg: &RunConfig, sys: &System64) -> Result<(), CliError> {
    if cfg.offset.metres(sys.w0) != 0.0 {
        return Err(CliError::Config(
            "noise budgets use the merged table, which needs offset 0".into(),
        ));
    }
    Ok(())
}

fn presets(cfg: &RunConfig, sys: &System64) -> Result<Vec<(&'static str, NoiseTable<f64>)>, CliError> {
    let c = &cfg.system;
    Ok(vec![
        ("classical", sys.noise_table(&c.classical_noise()?)?),
        ("shot", sys.noise_table(&c.shot_noise()?)?),
        ("squeezed", sys.noise_table(&c.squeezed_noise()?)?),
    ])
}

pub fn noise(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let sys = system(cfg)?;
    require_zero_offset(cfg, &sys)?;
    let mut summary = Vec::new();
    for (name, table) in presets(cfg, &sys)? {
        let mut w = create(dir, &format!("noise_{name}.csv"))?;
        table.write_csv(&mut w)?;
        w.flush()?;
        let candidates = (0..table.size())
            .map(|i| {
                let c = mean_candidates(&table, i, cfg.system.kappa)?;
                Ok((
                    table.labels[i].clone(),
                    c.iter().map(|&j| table.labels[j].clone()).collect::<Vec<_>>(),
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        println!("{name}:");
        for (l, c) in &candidates {
            println!("  {l:>8} -> {}", c.join(" "));
        }
        summary.push(json!({
            "preset": name,
            "params": table.params,
            "squeezed_dimension": table.basis.dimension(),
            "candidates": candidates.into_iter().collect::<std::collections::BTreeMap<_, _>>(),
        }));
    }
    write_json(dir, "noise.json", &json!({ "config": cfg, "presets": summary }))
}

pub fn discriminate(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let sys = system(cfg)?;
    require_zero_offset(cfg, &sys)?;
    let read = ReadConfig {
        kappa: cfg.system.kappa,
        trials: cfg.trials,
        seed: cfg.seed,
        sampling: cfg.sampling,
    };
    let mut reports = serde_json::Map::new();
    for (name, table) in presets(cfg, &sys)? {
        let r = monte_carlo_error_rate(&table, &read)?;
        println!("{name}: mean failure rate {:.4}", r.mean_failure_rate());
        reports.insert(name.to_string(), serde_json::to_value(r)?);
    }
    write_json(
        dir,
        "discrimination.json",
        &json!({ "config": cfg, "seed": cfg.seed, "reports": reports }),
    )
}

pub fn rate(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = prepare(cfg)?;
    let r = data_rate_estimate(
        cfg.power,
        cfg.system.wavelength,
        cfg.system.photons,
        cfg.oversampling,
    )?;
    println!(
        "{:.4e} photons/s, {:.4e} bit/s ({:.4e} Mbit/s)",
        r.photon_flux,
        r.bits_per_second,
        r.bits_per_second / 1e6
    );
    write_json(
        dir,
        "rate.json",
        &json!({ "config": cfg, "rate": r, "mbit_per_second": r.bits_per_second / 1e6 }),
    )
}
