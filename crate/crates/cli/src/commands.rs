use rabi_core::gfunction::eval_g;
use rabi_core::oracle::{
    build, converged_spectrum, eigensolve, eigenvalues, jc_spectrum, parity_blocks, JcBranch, ModelTag,
    MAX_TRUNCATION,
};
use rabi_core::recurrence::{continued_fraction_demo, f_coeff, minimal_solution, schweber_residual, MINIMAL_DEPTH};
use rabi_core::spectrum::{
    find_exceptional, find_regular, full_spectrum, spectrum_eps, Eigenvalue, LevelKind, ScanOptions,
};
use rabi_core::sweep::{
    detect_crossings, integrability_report, refine_crossings, smallest_gap, sweep_eps, sweep_jc, sweep_rabi,
    CrossingKind, SweepResult,
};
use rabi_core::wavefunction::{
    circle_samples, consistency_check, fock_amplitudes, psi_from_phi1, psi_from_phi2, MAX_ORDER,
};
use rabi_core::{ModelParams, NormalizedParams, Parity, RabiError, Tolerances};
use rayon::prelude::*;

use crate::table::{Cell, Table};
use crate::{CliError, Command, ModelArgs, OracleModel, RouteArg, SweepKind};

type Out = Result<Vec<Table>, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn params(m: &ModelArgs) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(m.omega, m.g, m.delta, m.eps)?)
}

fn with_meta(t: Table, p: &ModelParams) -> Table {
    t.meta("omega", num(p.omega))
        .meta("g", num(p.g))
        .meta("delta", num(p.delta))
        .meta("eps", num(p.epsilon))
}

fn symmetric_coupled(p: &ModelParams, what: &str) -> Result<NormalizedParams, CliError> {
    if p.epsilon != 0.0 {
        return Err(usage(format!("{what} needs --eps 0")));
    }
    if p.g <= 0.0 {
        return Err(usage(format!("{what} needs --g > 0")));
    }
    Ok(p.normalize()?)
}

fn range(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(usage(format!("empty range [{lo}, {hi}]")));
    }
    if steps < 2 {
        return Err(usage("--steps must be at least 2"));
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

pub(crate) fn dispatch(cmd: &Command) -> Out {
    match cmd {
        Command::Gscan { model, xmin, xmax, steps } => gscan(model, *xmin, *xmax, *steps),
        Command::Spectrum { model, xmax, xmin } => spectrum(model, *xmax, *xmin),
        Command::Exceptional {
            n,
            omega,
            delta,
            gmin,
            gmax,
        } => exceptional(*n, *omega, *delta, *gmin, *gmax),
        Command::Sweep {
            model,
            omega,
            delta,
            eps,
            gmin,
            gmax,
            points,
            levels,
            cmax,
            threshold,
        } => sweep(*model, *omega, *delta, *eps, *gmin, *gmax, *points, *levels, *cmax, *threshold),
        Command::Wavefunction {
            model,
            state,
            route,
            order,
            ntr,
        } => wavefunction(model, *state, *route, *order, *ntr),
        Command::Oracle {
            model,
            matrix,
            levels,
            ntr,
        } => oracle(model, *matrix, *levels, *ntr),
        Command::Schweber {
            model,
            xmin,
            xmax,
            steps,
            xcf,
        } => schweber(model, *xmin, *xmax, *steps, *xcf),
        Command::Jc { model, cmax } => jc(model, *cmax),
    }
}

/// A G value, or NaN inside a pole exclusion.
fn g_or_nan(parity: Parity, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<(f64, bool), CliError> {
    match eval_g(parity, x, p, tol) {
        Ok(s) => Ok((s.value, s.converged)),
        Err(RabiError::Pole { .. }) => Ok((f64::NAN, false)),
        Err(e) => Err(e.into()),
    }
}

fn gscan(m: &ModelArgs, xmin: f64, xmax: f64, steps: usize) -> Out {
    let p = params(m)?;
    let q = symmetric_coupled(&p, "gscan")?;
    let xs = range(xmin, xmax, steps)?;
    let tol = Tolerances::default();
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .map(|&x| {
            let xt = x / p.omega;
            let (gp, cp) = g_or_nan(Parity::Plus, xt, &q, &tol)?;
            let (gm, cm) = g_or_nan(Parity::Minus, xt, &q, &tol)?;
            let pole = xt.round().max(0.0);
            Ok(vec![
                x.into(),
                xt.into(),
                p.energy_from_x(xt).into(),
                gp.into(),
                gm.into(),
                (pole as usize).into(),
                (xt - pole).abs().into(),
                (cp && cm).into(),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = with_meta(
        Table::new(
            "gscan",
            &["x", "x_tilde", "energy", "g_plus", "g_minus", "nearest_pole", "pole_distance", "converged"],
        ),
        &p,
    );
    for r in rows {
        t.push(r);
    }
    Ok(vec![t])
}

fn level_kind(e: &Eigenvalue) -> &'static str {
    match e.kind {
        LevelKind::Regular => "regular",
        LevelKind::Exceptional => "exceptional",
    }
}

fn parity_cell(p: Option<Parity>) -> Cell {
    p.map_or("none", |p| p.label()).into()
}

fn spectrum(m: &ModelArgs, xmax: f64, xmin: Option<f64>) -> Out {
    let p = params(m)?;
    if p.g <= 0.0 {
        return Err(usage("spectrum needs --g > 0; use `oracle` at zero coupling"));
    }
    let opts = ScanOptions::default();
    let xt_max = xmax / p.omega;
    let (levels, tag) = if p.is_symmetric() {
        if xmin.is_some() {
            return Err(usage("--xmin applies to the broken-parity model only"));
        }
        (full_spectrum(&p, xt_max, &opts)?, ModelTag::Rabi)
    } else {
        let lo = xmin.map_or(p.x_lower_bound() - 0.05, |x| x / p.omega);
        if lo >= xt_max {
            return Err(usage(format!("empty range [{lo}, {xt_max}]")));
        }
        (spectrum_eps(&p, lo, xt_max, &opts)?, ModelTag::RabiEps)
    };
    let oracle = if levels.is_empty() {
        Vec::new()
    } else {
        converged_spectrum(tag, &p, levels.len(), None)?.levels
    };
    let mut t = with_meta(
        Table::new(
            "spectrum",
            &[
                "parity",
                "index",
                "kind",
                "x",
                "x_tilde",
                "energy",
                "g_residual",
                "oracle_energy",
                "oracle_residual",
                "degenerate",
            ],
        ),
        &p,
    )
    .meta("xmax", num(xmax));
    for (e, o) in levels.iter().zip(&oracle) {
        t.push(vec![
            parity_cell(e.parity),
            e.index.into(),
            level_kind(e).into(),
            (e.x_root * p.omega).into(),
            e.x_root.into(),
            e.energy.into(),
            e.residual.into(),
            (*o).into(),
            (e.energy - o).abs().into(),
            e.degenerate.into(),
        ]);
    }
    Ok(vec![t])
}

fn nearest(levels: &[f64], e: f64) -> f64 {
    levels.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min)
}

fn exceptional(n: usize, omega: f64, delta: f64, gmin: f64, gmax: f64) -> Out {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if !(gmin >= 0.0 && gmax > gmin && gmax.is_finite()) {
        return Err(usage(format!("bad coupling range [{gmin}, {gmax}]")));
    }
    let p = ModelParams::rabi(omega, gmin, delta)?;
    let pts = find_exceptional(n, &p, gmin, gmax, &ScanOptions::default())?;
    let mut t = Table::new(
        "exceptional",
        &["n", "g", "g_tilde", "energy", "x_tilde", "residual", "oracle_plus", "oracle_minus"],
    )
    .meta("omega", num(omega))
    .meta("delta", num(delta))
    .meta("gmin", num(gmin))
    .meta("gmax", num(gmax));
    for pt in pts {
        let at = p.with_g(pt.g);
        let (plus, minus) = parity_blocks(&at, 200)?;
        t.push(vec![
            n.into(),
            pt.g.into(),
            (pt.g / omega).into(),
            pt.energy.into(),
            (n as f64).into(),
            pt.residual.into(),
            nearest(&eigenvalues(&plus)?, pt.energy).into(),
            nearest(&eigenvalues(&minus)?, pt.energy).into(),
        ]);
    }
    Ok(vec![t])
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    kind: SweepKind,
    omega: f64,
    delta: Option<f64>,
    eps: Option<f64>,
    gmin: f64,
    gmax: Option<f64>,
    points: usize,
    levels: usize,
    cmax: u32,
    threshold: f64,
) -> Out {
    let opts = ScanOptions::default();
    if points < 3 {
        return Err(usage("--points must be at least 3"));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(usage("--threshold must be positive"));
    }
    let eps_given = eps.filter(|e| *e != 0.0);
    let s: SweepResult = match kind {
        SweepKind::Rabi | SweepKind::Jc => {
            if eps_given.is_some() {
                return Err(usage("--eps applies to --model eps only"));
            }
            let range = (gmin, gmax.unwrap_or(0.8));
            let delta = delta.unwrap_or(0.4);
            ModelParams::rabi(omega, range.0, delta)?;
            if kind == SweepKind::Rabi {
                if levels == 0 {
                    return Err(usage("--levels must be at least 1"));
                }
                sweep_rabi(delta, omega, range, points, levels, &opts)?
            } else {
                sweep_jc(delta, omega, range, points, cmax)?
            }
        }
        SweepKind::Eps => {
            let eps = eps.unwrap_or(0.2);
            if eps == 0.0 {
                return Err(usage("--model eps needs --eps != 0"));
            }
            if levels == 0 {
                return Err(usage("--levels must be at least 1"));
            }
            let range = (gmin, gmax.unwrap_or(1.0));
            ModelParams::new(omega, range.0, delta.unwrap_or(0.7), eps)?;
            sweep_eps(delta.unwrap_or(0.7), eps, omega, range, points, levels, &opts)?
        }
    };
    let coarse = detect_crossings(&s, Some(threshold * omega))?;
    let crossings = refine_crossings(&s, &coarse, 41, &opts)?;
    let report = integrability_report(&s, &crossings);

    let meta = |t: Table| {
        with_meta(t, &s.params)
            .meta("model", format!("{:?}", s.model).to_lowercase())
            .meta("gmin", num(s.g_range.0))
            .meta("gmax", num(s.g_range.1))
            .meta("points", s.grid.len())
    };
    let mut lv = meta(Table::new("sweep.levels", &["g", "g_tilde", "sector", "index", "energy"]));
    for (i, &g) in s.grid.iter().enumerate() {
        for c in &s.curves {
            lv.push(vec![
                g.into(),
                (g / omega).into(),
                c.label.sector.to_string().into(),
                c.label.index.into(),
                c.energies[i].into(),
            ]);
        }
    }
    let mut cr = meta(Table::new(
        "sweep.crossings",
        &["g_star", "level_a", "level_b", "energy", "gap_min", "classification", "anomaly"],
    ));
    for e in crossings.true_crossings().chain(
        crossings
            .events
            .iter()
            .filter(|e| e.classification == CrossingKind::AvoidedCrossing),
    ) {
        let kind = match e.classification {
            CrossingKind::TrueCrossing => "true",
            CrossingKind::AvoidedCrossing => "avoided",
        };
        cr.push(vec![
            e.g_star.into(),
            e.pair.0.to_string().into(),
            e.pair.1.to_string().into(),
            e.energy.into(),
            e.gap_min.into(),
            kind.into(),
            e.anomaly.into(),
        ]);
    }
    let mut sm = meta(Table::new("sweep.summary", &["key", "value"]));
    let mut kv = |k: &str, v: String| sm.push(vec![k.into(), v.into()]);
    kv("ladders", report.ladders.to_string());
    kv("consistent_labeling", report.consistent_labeling.to_string());
    kv("true_crossings", report.true_crossings.to_string());
    kv("verdict", report.verdict.clone());
    if let Some((g, pair, gap)) = smallest_gap(&s) {
        kv("smallest_gap", num(gap));
        kv("smallest_gap_g", num(g));
        kv("smallest_gap_pair", format!("{} {}", pair.0, pair.1));
    }
    kv("unresolved_refinements", crossings.refinements.len().to_string());
    for f in &s.flags {
        kv("flag", f.clone());
    }
    Ok(vec![lv, cr, sm])
}

fn wavefunction(m: &ModelArgs, state: usize, route: RouteArg, order: Option<usize>, ntr: usize) -> Out {
    let p = params(m)?;
    symmetric_coupled(&p, "wavefunction")?;
    if let Some(o) = order {
        if o == 0 || o > MAX_ORDER {
            return Err(usage(format!("--order must be in 1..={MAX_ORDER}")));
        }
    }
    if !(2..=MAX_TRUNCATION).contains(&ntr) {
        return Err(usage(format!("--ntr must be in 2..={MAX_TRUNCATION}")));
    }
    let opts = ScanOptions::default();
    let mut x_max = state as f64 / 2.0 + 2.0;
    let levels = loop {
        let levels = full_spectrum(&p, x_max, &opts)?;
        if levels.len() > state {
            break levels;
        }
        x_max += 2.0;
    };
    let level = levels[state];
    let parity = level.parity.expect("symmetric model");
    if level.kind == LevelKind::Exceptional {
        return Err(RabiError::Unsupported(format!(
            "state {state} is exceptional (on baseline x = {}); its eigenfunctions are not fixed by a single root",
            level.x_root
        ))
        .into());
    }
    let series = match route {
        RouteArg::Phi2 => psi_from_phi2(parity, level.x_root, &p, order)?,
        RouteArg::Phi1 => psi_from_phi1(parity, level.x_root, &p, order)?,
    };
    let fock = fock_amplitudes(&series, parity)?;
    let q = p.normalize()?;
    let mismatch = consistency_check(parity, level.x_root, &p, &circle_samples(0.5 * q.g, 20))?;

    let h = build(ModelTag::Rabi, &p, ntr)?;
    let eig = eigensolve(&h)?;
    let vecs = eig.vectors.expect("vectors requested");
    let v = fock.to_full_basis(ntr);
    let overlap: f64 = v.iter().zip(vecs.column(state)).map(|(a, b)| a * b).sum();
    let hv = h.matrix.mul_vec(&v);
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - level.energy * b).powi(2))
        .sum::<f64>()
        .sqrt();

    let route_name = match route {
        RouteArg::Phi2 => "phi2",
        RouteArg::Phi1 => "phi1",
    };
    let meta = |t: Table| with_meta(t, &p).meta("state", state).meta("route", route_name);
    let mut ct = meta(Table::new("wavefunction.series", &["m", "taylor", "fock_up", "fock_down"]));
    for (mm, c) in series.taylor.iter().enumerate() {
        ct.push(vec![mm.into(), (*c).into(), fock.up[mm].into(), fock.down[mm].into()]);
    }
    let mut sm = meta(Table::new("wavefunction.summary", &["key", "value"]));
    let mut kv = |k: &str, v: String| sm.push(vec![k.into(), v.into()]);
    kv("parity", parity.label().into());
    kv("x_tilde", num(level.x_root));
    kv("energy", num(level.energy));
    kv("order", series.order().to_string());
    kv("tail_ratio", num(series.tail_ratio));
    kv("route_mismatch", num(mismatch));
    kv("oracle_ntr", ntr.to_string());
    kv("oracle_overlap", num(overlap.abs()));
    kv("oracle_residual", num(residual));
    Ok(vec![ct, sm])
}

fn oracle(m: &ModelArgs, matrix: OracleModel, levels: usize, ntr: Option<usize>) -> Out {
    let p = params(m)?;
    if levels == 0 {
        return Err(usage("--levels must be at least 1"));
    }
    let tag = match matrix {
        OracleModel::Rabi => ModelTag::Rabi,
        OracleModel::RabiEps => ModelTag::RabiEps,
        OracleModel::Jc => ModelTag::JaynesCummings,
        OracleModel::Plus => ModelTag::ParityBlockPlus,
        OracleModel::Minus => ModelTag::ParityBlockMinus,
    };
    let (values, n_tr) = match ntr {
        Some(n) => {
            let mut ev = eigenvalues(&build(tag, &p, n)?)?;
            if ev.len() < levels {
                return Err(usage(format!("--ntr {n} gives only {} levels", ev.len())));
            }
            ev.truncate(levels);
            (ev, n)
        }
        None => {
            let c = converged_spectrum(tag, &p, levels, None)?;
            (c.levels, c.n_tr_final)
        }
    };
    let mut t = with_meta(Table::new("oracle", &["index", "energy", "x_tilde", "n_tr"]), &p)
        .meta("matrix", format!("{matrix:?}").to_lowercase());
    for (i, e) in values.iter().enumerate() {
        t.push(vec![i.into(), (*e).into(), p.x_from_energy(*e).into(), n_tr.into()]);
    }
    Ok(vec![t])
}

fn schweber(m: &ModelArgs, xmin: f64, xmax: f64, steps: usize, xcf: f64) -> Out {
    let p = params(m)?;
    let q = symmetric_coupled(&p, "schweber")?;
    let xs = range(xmin, xmax, steps)?;
    let tol = Tolerances::default();
    let nan_on_pole = |r: rabi_core::Result<f64>| match r {
        Ok(v) => Ok(v),
        Err(RabiError::Pole { .. }) => Ok(f64::NAN),
        Err(e) => Err(CliError::from(e)),
    };
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .map(|&x| {
            let xt = x / p.omega;
            let res = nan_on_pole(schweber_residual(xt, &q))?;
            let (gp, _) = g_or_nan(Parity::Plus, xt, &q, &tol)?;
            let (gm, _) = g_or_nan(Parity::Minus, xt, &q, &tol)?;
            Ok(vec![x.into(), xt.into(), res.into(), gp.into(), gm.into()])
        })
        .collect::<Result<_, CliError>>()?;
    let meta = |t: Table| with_meta(t, &p);
    let mut scan = meta(Table::new(
        "schweber.scan",
        &["x", "x_tilde", "schweber_residual", "g_plus", "g_minus"],
    ));
    for r in rows {
        scan.push(r);
    }

    let opts = ScanOptions::default();
    let (lo, hi) = (xmin / p.omega, xmax / p.omega);
    let roots = rabi_core::spectrum::schweber_roots(&p, lo, hi, &opts)?;
    let by_parity: Vec<(Parity, f64)> = Parity::BOTH
        .iter()
        .map(|&par| find_regular(par, lo, hi, &p, &opts).map(|v| v.into_iter().map(move |e| (par, e.x_root))))
        .collect::<rabi_core::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut rt = meta(Table::new(
        "schweber.roots",
        &["x", "x_tilde", "energy", "parity", "g_root_distance"],
    ));
    for x in roots {
        let (par, d) = by_parity
            .iter()
            .map(|(par, r)| (*par, (r - x).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map_or((None, f64::INFINITY), |(par, d)| (Some(par), d));
        rt.push(vec![
            (x * p.omega).into(),
            x.into(),
            p.energy_from_x(x).into(),
            parity_cell(par),
            d.into(),
        ]);
    }

    let f0 = nan_on_pole(f_coeff(0, xcf, &q))?;
    let v_min = minimal_solution(xcf, &q, MINIMAL_DEPTH)?.v1();
    let dominant = 1.0 / (2.0 * q.g);
    let mut cf = meta(Table::new(
        "schweber.cutoff",
        &["depth", "v1_zero_tail", "v1_dominant_tail", "v1_minimal", "f0"],
    ))
    .meta("x_tilde", num(xcf));
    for n in [2usize, 3, 4, 6, 8, 12, 16, 24, 32, 50, 100, 200, 400] {
        cf.push(vec![
            n.into(),
            continued_fraction_demo(xcf, &q, n, 0.0)?.into(),
            continued_fraction_demo(xcf, &q, n, dominant)?.into(),
            v_min.into(),
            f0.into(),
        ]);
    }
    Ok(vec![scan, rt, cf])
}

fn jc(m: &ModelArgs, cmax: u32) -> Out {
    let p = params(m)?;
    if p.epsilon != 0.0 {
        return Err(usage("jc needs --eps 0"));
    }
    let mut t = with_meta(Table::new("jc", &["c", "branch", "parity", "energy"]), &p).meta("cmax", cmax);
    for l in jc_spectrum(&p, cmax) {
        let branch = match l.branch {
            JcBranch::Minus => "-",
            JcBranch::Plus => "+",
        };
        t.push(vec![l.c.into(), branch.into(), l.parity().label().into(), l.energy.into()]);
    }
    Ok(vec![t])
}
