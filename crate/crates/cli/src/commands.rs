use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dustfall::fvm::convergence::{convergence_study, ConvergenceOptions, Region};
use dustfall::fvm::{prepare_sources, solve_forward, AtmosphericModel};
use dustfall::inversion::{
    build_forward_map, gibbs_sample, observe, posterior_summary, push_forward, synthesize_data, ForwardMap,
    GibbsOptions, PosteriorSummary,
};
use dustfall::io::{self, Provenance, RunConfig, TON_PER_YEAR};
use dustfall::plume::{compare_solvers, plume_deposition};
use dustfall::sensitivity::{sensitivity_study_multi, SobolOptions, StudyOptions, SurrogateOptions};
use dustfall::wind::{regularize_wind, windrose_histogram, SeriesKind, WindSeries};
use dustfall::{DepositionField, Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;

pub const FORWARD_MAP_FILE: &str = "forward_map.csv";
pub const SAMPLES_FILE: &str = "samples.csv";

/// Loaded config plus command-line overrides.
pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub seed_override: Option<u64>,
    pub out: PathBuf,
}

impl Context {
    pub fn load(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let cfg = RunConfig::load(config)?;
        let hash = cfg.hash();
        let out = out.unwrap_or_else(|| cfg.resolve(&cfg.output_dir));
        Ok(Context { cfg, hash, seed_override: seed, out })
    }

    fn seed(&self, configured: u64) -> u64 {
        self.seed_override.unwrap_or(configured)
    }

    fn prov(&self, seed: Option<u64>) -> Provenance {
        Provenance::new(self.hash.clone(), seed)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, seed: Option<u64>, body: &T) -> Result<()> {
        let p = self.prov(seed);
        let doc = serde_json::json!({
            "provenance": { "tool": p.tool, "config_sha256": p.config_hash, "seed": p.seed },
            "report": body,
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        self.write(name, &s)
    }

    fn wind_path(&self) -> PathBuf {
        self.cfg.resolve(&self.cfg.wind.path)
    }

    fn raw_wind(&self) -> Result<(WindSeries, String)> {
        let path = self.wind_path();
        let text = fs::read_to_string(&path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Ok((io::parse_wind_csv(&text)?, io::sha256_hex(text.as_bytes())))
    }

    /// The wind driving the solvers: regularized on the fly when the file
    /// holds raw records and regularization is enabled.
    fn wind(&self) -> Result<(WindSeries, String)> {
        let (raw, sha) = self.raw_wind()?;
        if raw.kind == SeriesKind::Raw && self.cfg.wind.regularize {
            let mut opts = self.cfg.regularize_options();
            opts.seed = self.seed(opts.seed);
            let (w, _) = regularize_wind(&raw, &opts)?;
            return Ok((w, sha));
        }
        Ok((raw, sha))
    }

    fn model(&self, wind: WindSeries) -> Result<AtmosphericModel> {
        let mut m = AtmosphericModel::new(wind, self.cfg.site, self.cfg.particulate)?;
        if let Some(s) = &self.cfg.time.start {
            m.start = io::parse_timestamp(s).ok_or_else(|| Error::InvalidParameter(format!("bad time.start {s:?}")))?;
        }
        m.max_gap = self.cfg.wind.max_gap;
        m.calm_speed = self.cfg.wind.calm_speed;
        Ok(m)
    }

    /// Hash of everything the forward map depends on.
    fn map_input_hash(&self, wind_sha: &str) -> String {
        let c = &self.cfg;
        let positions: Vec<_> = c.sources.iter().map(|s| (&s.name, s.position)).collect();
        let key = serde_json::json!({
            "grid": c.grid, "site": c.site, "particulate": c.particulate, "sources": positions,
            "wind": c.wind, "wind_seed": self.seed(c.wind.seed), "wind_sha256": wind_sha,
            "time": c.time, "solver": c.solver,
        });
        io::sha256_hex(key.to_string().as_bytes())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn wind_prep(ctx: &Context) -> Result<()> {
    let (raw, _) = ctx.raw_wind()?;
    let mut opts = ctx.cfg.regularize_options();
    opts.seed = ctx.seed(opts.seed);
    let (reg, report) = regularize_wind(&raw, &opts)?;
    let prov = ctx.prov(Some(opts.seed));
    ctx.write("wind_regularized.csv", &io::write_wind_csv(&reg, &prov))?;
    let w = &ctx.cfg.wind;
    let rose = windrose_histogram(&reg, w.windrose_sectors, &w.windrose_speed_edges)?;
    ctx.write("windrose.csv", &io::write_windrose_csv(&rose, &prov))?;
    let rose_raw = windrose_histogram(&raw, w.windrose_sectors, &w.windrose_speed_edges)?;
    ctx.write("windrose_raw.csv", &io::write_windrose_csv(&rose_raw, &prov))?;
    let sel = |s: &dustfall::wind::Selection| {
        serde_json::json!({ "lengthscale_s": s.lengthscale, "noise": s.noise, "cv_mse": s.cv_mse })
    };
    ctx.write_json(
        "wind_prep.json",
        Some(opts.seed),
        &serde_json::json!({
            "records": raw.len(),
            "regularized_records": reg.len(),
            "speed": sel(&report.speed),
            "direction": sel(&report.direction),
        }),
    )
}

pub fn forward(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.grid.build()?;
    let (wind, _) = ctx.wind()?;
    let model = ctx.model(wind)?;
    let sources = prepare_sources(&grid, &ctx.cfg.point_sources())?;
    let sol = solve_forward(&grid, &model, &sources, ctx.cfg.time.duration, &ctx.cfg.solver)?;
    let prov = ctx.prov(None);
    ctx.write("deposition.csv", &io::write_deposition_csv(&sol.deposition, &prov))?;
    ctx.write("deposition.vtk", &io::write_deposition_vtk(&sol.deposition, "deposition_kg_m2", &prov))?;
    ctx.write("concentration.vtk", &io::write_field_vtk(&sol.field, "concentration_kg_m3", &prov))?;
    let a = sol.audit;
    ctx.write_json(
        "mass_audit.json",
        None,
        &serde_json::json!({
            "injected_kg": a.injected, "airborne_kg": a.airborne, "deposited_kg": a.deposited,
            "outflow_kg": a.outflow, "relative_residual": a.relative_residual(), "steps": sol.steps,
        }),
    )
}

/// Builds the forward map and writes it with a run log of the solves.
pub fn forward_map(ctx: &Context) -> Result<ForwardMap> {
    let grid = ctx.cfg.grid.build()?;
    let (wind, sha) = ctx.wind()?;
    let model = ctx.model(wind)?;
    let sources = ctx.cfg.point_sources();
    let hash = ctx.map_input_hash(&sha);
    let run = build_forward_map(&grid, &model, &sources, ctx.cfg.time.duration, &ctx.cfg.solver, &hash)?;
    let prov = ctx.prov(None);
    ctx.write(FORWARD_MAP_FILE, &io::write_forward_map_csv(&run.map, &prov))?;
    let mut log = prov.header("#");
    log.push_str("solve,source,injected_kg,deposited_kg,relative_residual\n");
    for (j, (s, a)) in sources.iter().zip(&run.audits).enumerate() {
        let _ = writeln!(log, "{},{},{},{},{}", j + 1, s.name, a.injected, a.deposited, a.relative_residual());
    }
    let _ = writeln!(log, "# unit_rate_solves={}", run.solves);
    ctx.write("forward_map.log", &log)?;
    Ok(run.map)
}

/// The forward map from a previous run when its inputs still match.
fn cached_forward_map(ctx: &Context) -> Result<ForwardMap> {
    let (_, sha) = ctx.raw_wind()?;
    let want = ctx.map_input_hash(&sha);
    if let Ok(text) = fs::read_to_string(ctx.out.join(FORWARD_MAP_FILE)) {
        if let Ok(map) = io::parse_forward_map_csv(&text) {
            if map.input_hash == want {
                log::info!("reusing {}", FORWARD_MAP_FILE);
                return Ok(map);
            }
        }
    }
    forward_map(ctx)
}

struct InversionData {
    /// kg per ton/yr.
    g: DMatrix<f64>,
    data: Vec<f64>,
    sigma: f64,
    q_eng: Vec<f64>,
}

fn inversion_data(ctx: &Context, map: &ForwardMap, seed: u64) -> Result<InversionData> {
    let cfg = &ctx.cfg;
    if cfg.receptors.is_empty() {
        return Err(Error::InvalidParameter("inversion needs at least one receptor".into()));
    }
    let obs = observe(map, &cfg.receptors)?;
    let g = &obs.matrix * TON_PER_YEAR;
    let q_eng: Vec<f64> = cfg.q_eng().iter().map(|q| q / TON_PER_YEAR).collect();
    let inv = &cfg.inversion;
    let (data, sigma) = match &inv.observations {
        Some(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            let rows = io::parse_observations_csv(&text)?;
            let data = cfg
                .receptors
                .iter()
                .map(|r| {
                    rows.iter()
                        .find(|(id, _)| *id == r.id)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| Error::InvalidParameter(format!("no observation for receptor {}", r.id)))
                })
                .collect::<Result<Vec<_>>>()?;
            let sigma = match (inv.sigma, inv.snr) {
                (Some(s), _) => s,
                (None, Some(snr)) => (data.iter().map(|v| v * v).sum::<f64>() / data.len() as f64).sqrt() / snr,
                (None, None) => unreachable!("validated at load"),
            };
            (data, sigma)
        }
        None => {
            let q_true: Vec<f64> = cfg.q_true().iter().map(|q| q / TON_PER_YEAR).collect();
            let snr = inv.snr.ok_or_else(|| Error::InvalidParameter("synthetic data needs inversion.snr".into()))?;
            let (d, s) = synthesize_data(&g, &q_true, snr, seed)?;
            (d, inv.sigma.unwrap_or(s))
        }
    };
    Ok(InversionData { g, data, sigma, q_eng })
}

#[derive(Serialize)]
struct InversionReport<'a> {
    units: &'static str,
    sigma_kg: f64,
    q_eng: &'a [f64],
    posterior: &'a PosteriorSummary,
    rmse_eng: f64,
    rmse_posterior: f64,
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len().max(1) as f64).sqrt()
}

pub fn invert(ctx: &Context) -> Result<()> {
    let map = cached_forward_map(ctx)?;
    let seed = ctx.seed(ctx.cfg.inversion.seed);
    let inv = inversion_data(ctx, &map, seed)?;
    let prior = dustfall::inversion::PriorSpec {
        q_eng: inv.q_eng.clone(),
        alpha0: ctx.cfg.inversion.alpha0,
        beta0: ctx.cfg.inversion.beta0,
        sigma: inv.sigma,
    };
    let samples = gibbs_sample(&inv.g, &inv.data, &prior, ctx.cfg.inversion.samples, seed.wrapping_add(1), GibbsOptions::default())?;
    let summary = posterior_summary(&samples, ctx.cfg.inversion.burn_in)?;
    let prov = ctx.prov(Some(seed));
    ctx.write(SAMPLES_FILE, &io::write_samples_csv(&samples, &prov))?;

    let predict = |q: &[f64]| -> Vec<f64> { (&inv.g * nalgebra::DVector::from_column_slice(q)).iter().copied().collect() };
    let (p_eng, p_post) = (predict(&inv.q_eng), predict(&summary.means()));
    let rows: Vec<Vec<String>> = ctx
        .cfg
        .receptors
        .iter()
        .enumerate()
        .map(|(k, r)| vec![r.id.clone(), inv.data[k].to_string(), p_eng[k].to_string(), p_post[k].to_string()])
        .collect();
    ctx.write(
        "receptor_predictions.csv",
        &io::write_table(&["receptor", "data_kg", "eng_kg", "posterior_kg"], &rows, &prov),
    )?;
    let report = InversionReport {
        units: "ton/yr",
        sigma_kg: inv.sigma,
        q_eng: &inv.q_eng,
        posterior: &summary,
        rmse_eng: rmse(&p_eng, &inv.data),
        rmse_posterior: rmse(&p_post, &inv.data),
    };
    ctx.write_json("posterior_summary.json", Some(seed), &report)?;
    let mut table = Vec::new();
    for (s, (name, q0)) in summary.sources.iter().zip(ctx.cfg.sources.iter().map(|s| &s.name).zip(&inv.q_eng)) {
        table.push(vec![
            name.clone(),
            q0.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.ci_lo.to_string(),
            s.ci_hi.to_string(),
        ]);
    }
    let t = &summary.total;
    table.push(vec!["total".into(), inv.q_eng.iter().sum::<f64>().to_string(), t.mean.to_string(), t.std.to_string(), t.ci_lo.to_string(), t.ci_hi.to_string()]);
    ctx.write(
        "posterior_rates.csv",
        &io::write_table(&["source", "q_eng_ton_yr", "mean_ton_yr", "std_ton_yr", "ci95_lo", "ci95_hi"], &table, &prov),
    )
}

pub fn propagate(ctx: &Context) -> Result<()> {
    let path = ctx.out.join(SAMPLES_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e} (run `invert` first)", path.display()))
    })?;
    let samples = io::parse_samples_csv(&text)?;
    let summary = posterior_summary(&samples, ctx.cfg.inversion.burn_in)?;
    let map = cached_forward_map(ctx)?;
    if summary.sources.len() != map.n_sources() {
        return Err(Error::InvalidParameter(format!(
            "{} sampled rates for {} mapped sources",
            summary.sources.len(),
            map.n_sources()
        )));
    }
    let f = &map.matrix * TON_PER_YEAR;
    let (mean, std) = push_forward(&f, &summary.means(), &summary.covariance_matrix())?;
    let prov = ctx.prov(Some(samples.seed));
    ctx.write("propagated.csv", &io::write_ground_table(&map.grid, &[("mean", &mean), ("std", &std)], &prov))?;
    ctx.write(
        "propagated_mean.vtk",
        &io::write_deposition_vtk(&DepositionField { grid: map.grid, values: mean }, "mean_kg_m2", &prov),
    )?;
    ctx.write(
        "propagated_std.vtk",
        &io::write_deposition_vtk(&DepositionField { grid: map.grid, values: std }, "std_kg_m2", &prov),
    )
}

pub fn sobol(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let spec = &cfg.sensitivity;
    let seed = ctx.seed(spec.seed);
    let grid = spec.grid.as_ref().unwrap_or(&cfg.grid).build()?;
    let duration = spec.duration.unwrap_or(cfg.time.duration);
    let (wind, _) = ctx.wind()?;
    let model = ctx.model(wind)?;
    let point = cfg.point_sources();
    if point.is_empty() {
        return Err(Error::InvalidParameter("sensitivity study needs at least one source".into()));
    }
    let sources = prepare_sources(&grid, &point)?;
    let functionals = spec.functionals(&point);
    let opts = StudyOptions {
        design_size: spec.design_size,
        design_seed: seed,
        sobol: SobolOptions { n_base: spec.n_base, bootstrap: spec.bootstrap, seed: seed.wrapping_add(1) },
        surrogate: SurrogateOptions::default(),
    };
    let runner = |site: &dustfall::physics::SiteParams| {
        solve_forward(&grid, &model.with_site(*site), &sources, duration, &cfg.solver).map(|s| s.deposition)
    };
    let mut results = sensitivity_study_multi(runner, &spec.pbox, &cfg.site, &functionals, &opts)?;
    if results.iter().all(|r| r.is_err()) {
        return Err(results.remove(0).unwrap_err());
    }
    let prov = ctx.prov(Some(seed));
    for (f, r) in functionals.iter().zip(&results) {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                log::warn!("no indices for {}: {e}", f.label());
                continue;
            }
        };
        let s = &r.sobol;
        let rows: Vec<Vec<String>> = (0..r.names.len())
            .map(|a| {
                vec![
                    r.names[a].clone(),
                    s.first[a].to_string(),
                    s.total[a].to_string(),
                    s.first_stderr[a].to_string(),
                    s.total_stderr[a].to_string(),
                ]
            })
            .collect();
        ctx.write(
            &format!("sobol_{}.csv", f.label()),
            &io::write_table(&["parameter", "S_i", "S_tot", "stderr_i", "stderr_tot"], &rows, &prov),
        )?;
        let scatter: Vec<Vec<String>> = r
            .scatter()
            .into_iter()
            .map(|row| vec![row.parameter, row.value.to_string(), row.functional_value.to_string()])
            .collect();
        ctx.write(
            &format!("scatter_{}.csv", f.label()),
            &io::write_table(&["parameter", "value", "functional_value"], &scatter, &prov),
        )?;
    }
    Ok(())
}

pub fn convergence(ctx: &Context) -> Result<()> {
    let spec = &ctx.cfg.convergence;
    let mut rows = Vec::new();
    for &kind in &spec.sources {
        let mut opts = ConvergenceOptions::new(spec.sizes.clone(), kind);
        opts.exclusion_radius = spec.exclusion_radius;
        opts.courant = ctx.cfg.solver.courant;
        let table = convergence_study(&opts)?;
        for r in &table.rows {
            let region = match r.region {
                Region::Entire => "entire",
                Region::AwayFromSource => "away_from_source",
            };
            let source = serde_json::to_value(kind)?.as_str().unwrap_or_default().to_string();
            rows.push(vec![source, r.n.to_string(), region.to_string(), fmt_opt(r.e1), fmt_opt(r.e2), table.exclusion_radius.to_string()]);
        }
    }
    ctx.write(
        "convergence.csv",
        &io::write_table(&["source", "n", "region", "e1", "e2", "exclusion_radius"], &rows, &ctx.prov(None)),
    )
}

pub fn plume_compare(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let grid = cfg.grid.build()?;
    let (wind, _) = ctx.wind()?;
    let model = ctx.model(wind)?;
    let point = cfg.point_sources();
    let fv = solve_forward(&grid, &model, &prepare_sources(&grid, &point)?, cfg.time.duration, &cfg.solver)?.deposition;
    let plume = plume_deposition(
        &point,
        &grid,
        &model.wind,
        model.start,
        &cfg.site,
        &cfg.particulate,
        cfg.time.duration,
        &cfg.plume.options,
    )?;
    let threshold = cfg.plume.threshold_fraction * fv.max().max(plume.deposition.max());
    let report = compare_solvers(&fv, &plume.deposition, &cfg.receptors, &point, threshold, cfg.plume.near_radius_cells)?;
    let prov = ctx.prov(None);
    ctx.write(
        "plume_deposition.csv",
        &io::write_ground_table(&grid, &[("fv", &fv.values), ("plume", &plume.deposition.values)], &prov),
    )?;
    ctx.write_json(
        "plume_compare.json",
        None,
        &serde_json::json!({
            "comparison": report,
            "plume_intervals": plume.intervals,
            "plume_skipped_intervals": plume.skipped_intervals,
            "plume_skipped_mass_kg": plume.skipped_mass,
        }),
    )
}
