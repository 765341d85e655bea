use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context, Result};
use ksnest::cache::{solve_cached, FixedPointCache};
use ksnest::energy::{
    p_harmonic_extension, DiscreteFunction, FixedPointOptions, ScalingFixedPoint,
};
use ksnest::geometry::{condition_h_constant, Fractal, IfsSpec};
use ksnest::ks::{
    besov_profile, check_grid, default_grid, hoelder_check, log_grid, log_slope,
    min_convergence_level, run_ne_suite, standard_suite, uniform_convergence_gap, PhiOptions,
    SampledFunction, SuiteOptions, DEFAULT_TAIL,
};
use ksnest::output::{ne_csv, profile_csv, svg_plot};

use crate::Common;

fn load_fractal(c: &Common) -> Result<Fractal> {
    let ifs = match &c.config {
        Some(path) => IfsSpec::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => IfsSpec::builtin(&c.fractal)?,
    };
    Ok(Fractal::new(ifs)?)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid {what} value '{t}'"))
        })
        .collect()
}

fn single_p(c: &Common) -> Result<f64> {
    let ps = parse_list(&c.p, "p")?;
    let [p] = ps[..] else {
        bail!("this subcommand takes a single p, got {}", ps.len());
    };
    check_p(p)?;
    Ok(p)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        bail!("p = {p} must exceed 1");
    }
    Ok(())
}

/// Solves or loads the fixed point for every p, keeping per-p failures.
fn fixed_points(
    f: &Fractal,
    c: &Common,
    ps: &[f64],
) -> Result<Vec<ksnest::Result<ScalingFixedPoint>>> {
    let opts = FixedPointOptions::default();
    let mut cache = c.cache.as_ref().map(FixedPointCache::open).transpose()?;
    Ok(ps
        .iter()
        .map(|&p| solve_cached(f, p, cache.as_mut(), c.refresh_cache, &opts).map(|(fp, _)| fp))
        .collect())
}

fn fixed_point(f: &Fractal, c: &Common, p: f64) -> Result<ScalingFixedPoint> {
    let fp = fixed_points(f, c, &[p])?.remove(0)?;
    Ok(fp)
}

fn boundary(f: &Fractal, c: &Common) -> Result<DiscreteFunction> {
    let k = f.boundary_len();
    let values = match &c.boundary {
        Some(text) => parse_list(text, "boundary")?,
        None => (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
    };
    if values.len() != k {
        bail!("boundary needs {k} values on V_0, got {}", values.len());
    }
    Ok(DiscreteFunction::new(0, values)?)
}

fn radius_grid(f: &Fractal, spec: &str, k_max: usize) -> Result<Vec<f64>> {
    let grid = if spec == "default" {
        default_grid(f.ratio(), k_max)
    } else if let Some(k) = spec.strip_prefix("geom:") {
        default_grid(f.ratio(), k.parse().context("invalid geom:K grid")?)
    } else if let Some(rest) = spec.strip_prefix("log:") {
        let parts = parse_list(&rest.replace(':', ","), "log grid")?;
        let [r_max, r_min, n] = parts[..] else {
            bail!("log grid takes log:R_MAX:R_MIN:COUNT");
        };
        if n < 1.0 || n.fract() != 0.0 {
            bail!("log grid count must be a positive integer");
        }
        log_grid(r_max, r_min, n as usize)
    } else {
        parse_list(spec, "radius")?
    };
    check_grid(&grid)?;
    Ok(grid)
}

fn emit(c: &Common, name: &str, content: &str) -> Result<()> {
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

pub fn info(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let top = c.level.unwrap_or(4);
    let mut out = String::new();
    writeln!(out, "fractal: {}", f.name())?;
    writeln!(out, "N = {}", f.n_maps())?;
    writeln!(out, "rho = {}", f.ratio())?;
    writeln!(out, "alpha = {}", f.alpha())?;
    writeln!(out, "level,vertices,cells")?;
    for n in 0..=top {
        let g = f.graph(n)?;
        writeln!(out, "{n},{},{}", g.vertex_count(), g.cells().len())?;
    }
    writeln!(out, "V_0:")?;
    for x in f.boundary() {
        let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(out, "  ({})", coords.join(", "))?;
    }
    writeln!(out, "symmetry group order = {}", f.symmetry().order())?;
    let h = condition_h_constant(&f, top.clamp(1, 5))?;
    writeln!(out, "condition H c = {}", h.c)?;
    emit(c, "info.txt", &out)
}

pub fn sigma(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let ps = parse_list(&c.p, "p")?;
    for &p in &ps {
        check_p(p)?;
    }
    let mut out = String::from("p,s,sigma_sharp,residual\n");
    let mut failures = Vec::new();
    for (p, res) in ps.iter().zip(fixed_points(&f, c, &ps)?) {
        match res {
            Ok(fp) => writeln!(out, "{p},{},{},{:e}", fp.s, fp.sigma_sharp, fp.residual)?,
            Err(e) => {
                writeln!(out, "{p},NaN,NaN,NaN")?;
                failures.push(format!("p={p}: {e}"));
            }
        }
    }
    emit(c, "sigma.csv", &out)?;
    eprintln!(
        "summary: {} of {} exponents solved",
        ps.len() - failures.len(),
        ps.len()
    );
    for msg in &failures {
        eprintln!("  failed {msg}");
    }
    Ok(())
}

pub fn extend(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let p = single_p(c)?;
    let fp = fixed_point(&f, c, p)?;
    let level = c.level.unwrap_or(3);
    let u = p_harmonic_extension(&f, &fp, &boundary(&f, c)?, level)?;
    let g = f.graph(level)?;
    let dim = f.ifs().dimension;
    let mut out = String::from("vertex");
    for d in 0..dim {
        write!(out, ",x{d}")?;
    }
    out.push_str(",value\n");
    for (v, value) in u.values.iter().enumerate() {
        write!(out, "{v}")?;
        for x in g.point(v) {
            write!(out, ",{x}")?;
        }
        writeln!(out, ",{value}")?;
    }
    emit(c, "extension.csv", &out)
}

fn phi_options(c: &Common, fp: &ScalingFixedPoint) -> PhiOptions {
    PhiOptions {
        p: fp.p,
        sigma: c.sigma.unwrap_or(fp.sigma_sharp),
        estimator: c.estimator,
        samples: c.samples,
        seed: c.seed,
    }
}

fn test_function(
    f: &Fractal,
    c: &Common,
    fp: &ScalingFixedPoint,
    level: usize,
) -> Result<SampledFunction> {
    Ok(match c.function.as_str() {
        "harmonic" => SampledFunction::Table(p_harmonic_extension(f, fp, &boundary(f, c)?, level)?),
        "constant" => SampledFunction::Constant(1.0),
        other => match other.strip_prefix("coordinate-").map(str::parse::<usize>) {
            Some(Ok(d)) if d < f.ifs().dimension => SampledFunction::Coordinate(d),
            _ => bail!("unknown function '{other}' (harmonic, constant, coordinate-D)"),
        },
    })
}

pub fn phi(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let p = single_p(c)?;
    let fp = fixed_point(&f, c, p)?;
    let m_max = c.m_max.unwrap_or(6);
    let grid = radius_grid(&f, &c.r_grid, m_max)?;
    let u = test_function(&f, c, &fp, m_max)?;
    let profile = besov_profile(&f, &u, &grid, m_max, &phi_options(c, &fp))?;
    emit(c, "phi.csv", &profile_csv(&profile))?;
    let unresolved = profile.entries.iter().filter(|e| !e.resolved).count();
    eprintln!(
        "summary: {} radii, {unresolved} beyond level {m_max}",
        profile.entries.len()
    );
    Ok(())
}

pub fn ne(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let p = single_p(c)?;
    let fp = fixed_point(&f, c, p)?;
    let m_max = c.m_max.unwrap_or(6);
    let suite = standard_suite(&f, &fp, c.suite_size, m_max + 1, c.seed)?;
    let opts = SuiteOptions {
        random_extensions: c.suite_size,
        m_max,
        seed: c.seed,
        phi: phi_options(c, &fp),
        tail: DEFAULT_TAIL,
    };
    let rows = run_ne_suite(&f, &suite, &opts)?;
    emit(c, "ne.csv", &ne_csv(&rows))?;
    if c.out.is_some() {
        let series: Vec<(String, Vec<(f64, f64)>)> = rows
            .iter()
            .map(|row| {
                let pts = row.profile.resolved().map(|e| (e.r, e.phi)).collect();
                (row.function.clone(), pts)
            })
            .collect();
        let title = format!("{} p={p}", f.name());
        emit(c, "ne.svg", &svg_plot(&title, &series))?;
    }
    let degenerate = rows.iter().filter(|r| r.report.degenerate).count();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.report.ratio).collect();
    let infinite = ratios.iter().filter(|r| !r.is_finite()).count();
    let max_ratio = ratios
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    let max_drift = rows.iter().filter_map(|r| r.drift).fold(1.0, f64::max);
    eprintln!(
        "summary: {} functions, {degenerate} degenerate, {infinite} infinite ratios, max ratio {max_ratio}, max drift {max_drift}",
        rows.len()
    );
    Ok(())
}

pub fn hoelder(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let p = single_p(c)?;
    let fp = fixed_point(&f, c, p)?;
    let sigma = c.sigma.unwrap_or(fp.sigma_sharp);
    let n = c.level.unwrap_or(0);
    let m_max = c.m_max.unwrap_or(6);
    if m_max <= n {
        bail!("--m-max {m_max} must exceed --level {n}");
    }
    let h = condition_h_constant(&f, 4)?;
    let ext = p_harmonic_extension(&f, &fp, &boundary(&f, c)?, m_max)?;
    let mut out = String::from("m,constant,relative_change\n");
    let mut prev: Option<f64> = None;
    for m in (n + 1).max(2)..=m_max {
        let restricted = ext.restrict(m, &*f.graph(m)?)?;
        let k = hoelder_check(&f, &fp, sigma, &restricted, n, h.c)?;
        let change = prev.map_or(f64::NAN, |q| (k - q).abs() / q);
        writeln!(out, "{m},{k},{change}")?;
        prev = Some(k);
    }
    emit(c, "hoelder.csv", &out)?;
    eprintln!("summary: condition H c = {}", h.c);
    Ok(())
}

pub fn converge(c: &Common) -> Result<()> {
    let f = load_fractal(c)?;
    let p = single_p(c)?;
    let fp = fixed_point(&f, c, p)?;
    let sigma = c.sigma.unwrap_or(fp.sigma_sharp);
    let top = c.level.unwrap_or(5);
    let m = c.m_max.unwrap_or(7);
    let h = condition_h_constant(&f, 4)?;
    let first = min_convergence_level(&f, h.c).max(2);
    if top < first {
        bail!("--level {top} is below the first admissible level {first}");
    }
    let u = SampledFunction::Table(p_harmonic_extension(
        &f,
        &fp,
        &boundary(&f, c)?,
        m.max(top + 3),
    )?);
    let levels: Vec<usize> = (first..=top).collect();
    let mut out = String::from("n,gap\n");
    let mut gaps = Vec::new();
    for &n in &levels {
        let gap = uniform_convergence_gap(&f, &fp, &u, n, m.max(n + 1), h.c)?;
        writeln!(out, "{n},{gap}")?;
        gaps.push(gap);
    }
    emit(c, "converge.csv", &out)?;
    if levels.len() >= 2 {
        let target = (sigma - f.alpha() / p) * f.ratio().ln();
        eprintln!(
            "summary: slope {} against (sigma - alpha/p) ln rho = {target}",
            log_slope(&levels, &gaps)
        );
    }
    Ok(())
}
