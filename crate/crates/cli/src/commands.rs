use crate::output::{Csv, Outcome};
use crate::{Command, CouplingArgs, EnsembleArgs, MethodArg};
use lve_core::contour::DEFAULT_NODES;
use lve_core::lve_expansion::{lve_truncated_f, single_vertex_amplitude, AmplitudeEstimate};
use lve_core::lvr_action::{jacobian_check, sigma_contour, sigma_direct};
use lve_core::matrix_core::{eigh, sample_gaussian, stream};
use lve_core::partition_oracle::{free_energy, z_direct, z_lvr};
use lve_core::verify::{self, pacman_args, Check, RunOptions};
use lve_core::{Beta, Coupling, EnsembleSpec, Error, FussCatalan, FussCatalanParams, KeyholeContour, Method, Result, ScalarMaps};
use num_complex::Complex64;
use rand::Rng;
use serde_json::{json, Value};

fn cx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// 2 for configuration problems, 1 for numerical failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::InvalidCoupling(_) | Error::OutOfRange(_) | Error::BudgetExceeded(_) => 2,
        _ => 1,
    }
}

pub fn run(command: &Command) -> (&'static str, Value, Result<Outcome>) {
    match command {
        Command::FcEval { p, z_re, z_im } => ("fc-eval", json!({ "p": p, "z_re": z_re, "z_im": z_im }), fc_eval(*p, Complex64::new(*z_re, *z_im))),
        Command::MapsCheck { coupling } => ("maps-check", json!({ "coupling": coupling }), maps_check(coupling)),
        Command::ContourCheck { coupling, ensemble } => ("contour-check", json!({ "coupling": coupling, "ensemble": ensemble }), contour_check(coupling, ensemble)),
        Command::ZIdentity { coupling, ensemble } => ("z-identity", json!({ "coupling": coupling, "ensemble": ensemble }), z_identity(coupling, ensemble)),
        Command::FreeEnergy { coupling, ensemble } => ("free-energy", json!({ "coupling": coupling, "ensemble": ensemble }), free_energy_cmd(coupling, ensemble)),
        Command::LveSum { coupling, ensemble, n_max } => ("lve-sum", json!({ "coupling": coupling, "ensemble": ensemble, "n_max": n_max }), lve_sum(coupling, ensemble, *n_max as usize)),
        Command::SingleVertex { coupling, ensemble } => ("single-vertex", json!({ "coupling": coupling, "ensemble": ensemble }), single_vertex(coupling, ensemble)),
        Command::JacobianCheck { p, lambda_modulus, eigs, pairs, seed } => (
            "jacobian-check",
            json!({ "p": p, "lambda": lambda_modulus, "eigs": eigs, "pairs": pairs, "seed": seed }),
            jacobian(*p, *lambda_modulus, eigs, *pairs as usize, *seed),
        ),
        Command::VerifyBounds { p, epsilon, seed, workers } => (
            "verify-bounds",
            json!({ "p": p, "epsilon": epsilon, "seed": seed, "workers": workers }),
            verify_bounds(*p, *epsilon, &RunOptions { seed: *seed, workers: *workers as usize }),
        ),
        Command::PacmanScan { p, lambda_modulus, lambda_arg, epsilon, n_list, seed, workers } => (
            "pacman-scan",
            json!({ "p": p, "lambda_modulus": lambda_modulus, "lambda_arg": lambda_arg, "epsilon": epsilon, "N_list": n_list, "seed": seed, "workers": workers }),
            pacman(*p, *lambda_modulus, lambda_arg, *epsilon, n_list, &RunOptions { seed: *seed, workers: *workers as usize }),
        ),
        Command::Acceptance { criterion, seed, workers } => (
            "acceptance",
            json!({ "criterion": criterion, "seed": seed, "workers": workers }),
            acceptance(criterion.map(|c| c as usize), &RunOptions { seed: *seed, workers: *workers as usize }),
        ),
    }
}

fn coupling(a: &CouplingArgs) -> Result<Coupling> {
    Coupling::polar(a.p, a.lambda_modulus, a.lambda_arg, a.epsilon, a.lambda_modulus.max(1.0))
}

fn ensemble(e: &EnsembleArgs) -> Result<EnsembleSpec> {
    let beta = if e.beta == 1 { Beta::One } else { Beta::Two };
    EnsembleSpec::new(e.n as usize, beta)
}

fn method(e: &EnsembleArgs, seed_offset: u64) -> Method {
    match e.method {
        MethodArg::Quadrature => Method::Quadrature { nodes: e.quad_nodes as usize, workers: e.workers as usize },
        MethodArg::MonteCarlo => Method::monte_carlo(e.mc_samples as usize, e.seed.wrapping_add(seed_offset), e.workers as usize),
    }
}

fn fc_eval(p: u32, z: Complex64) -> Result<Outcome> {
    let fc = FussCatalan::new(FussCatalanParams::new(p)?);
    let d = fc.derivs(z)?;
    let residual = fc.relative_residual(z, d.t);
    Ok(Outcome {
        values: json!({ "t": cx(d.t), "e": cx(d.e), "e_prime": cx(d.e_prime), "branch_point": fc.branch_point(), "residual": residual }),
        checks: vec![Check::le("relative residual", residual, 1e-10)],
        csv: None,
    })
}

fn maps_check(a: &CouplingArgs) -> Result<Outcome> {
    let c = coupling(a)?;
    let maps = ScalarMaps::new(&c);
    let geometry = c.params().cut_geometry();
    let (mut inverse, mut used, mut skipped) = (0.0f64, 0usize, 0usize);
    let mut csv = Csv::new(&["z_re", "z_im", "residual"]);
    for i in 0..=40 {
        for j in 0..=40 {
            let z = Complex64::new(-2.0 + 0.1 * i as f64, -2.0 + 0.1 * j as f64);
            if z.norm() > 2.0 {
                continue;
            }
            if geometry.cut_distance(c.lambda(), z) < 1e-6 {
                skipped += 1;
                continue;
            }
            let r = maps.inverse_residual(z)?;
            inverse = inverse.max(r);
            used += 1;
            csv.rows.push(vec![z.re.to_string(), z.im.to_string(), r.to_string()]);
        }
    }
    let mut real_axis = 0.0f64;
    for k in 0..=200 {
        let x = -5.0 + 0.05 * k as f64;
        real_axis = real_axis.max((maps.k(maps.h(x.into())?)? - x).norm() / (1.0 + x.abs()));
    }
    let mut checks = vec![Check::le("k(h(x)) = x on [-5, 5]", real_axis, 1e-10)];
    // h(k(z)) = z only holds on the grid when p = 2; larger p leave the image of h
    if a.p == 2 {
        checks.push(Check::le("h(k(z)) = z on |z| <= 2", inverse, 1e-9));
    }
    Ok(Outcome {
        values: json!({ "inverse_residual": inverse, "grid_points": used, "skipped_on_cut": skipped, "real_axis_residual": real_axis, "inverse_asserted": a.p == 2 }),
        checks,
        csv: Some(csv),
    })
}

fn contour_check(a: &CouplingArgs, e: &EnsembleArgs) -> Result<Outcome> {
    let c = coupling(a)?;
    let spec = ensemble(e)?;
    let s = eigh(&sample_gaussian(&spec, &mut stream(e.seed, 0)))?;
    let g = KeyholeContour::build(s.spectral_radius(), &c, DEFAULT_NODES)?;
    g.self_test()?;
    let inside = (g.cauchy(Complex64::new(0.0, 0.0)) - 1.0).norm();
    let outside = g.cauchy(Complex64::new(0.0, 2.0 * g.outer_radius())).norm();
    let d = sigma_contour(&c, &g, &s)? - sigma_direct(&c, &s)?;
    let sigma = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(Outcome {
        values: json!({
            "eigenvalues": s.eigenvalues,
            "outer_radius": g.outer_radius(),
            "inner_radius": g.inner_radius(),
            "half_angle": g.half_angle(),
            "nodes": g.nodes().len(),
            "cauchy_inside": inside,
            "cauchy_outside": outside,
            "sigma_deviation": sigma,
        }),
        checks: vec![
            Check::le("Cauchy winding inside", inside, 1e-8),
            Check::le("Cauchy winding outside", outside, 1e-8),
            Check::le("sigma contour vs direct", sigma, 1e-6),
        ],
        csv: None,
    })
}

fn z_identity(a: &CouplingArgs, e: &EnsembleArgs) -> Result<Outcome> {
    let c = coupling(a)?;
    let spec = ensemble(e)?;
    let d = z_direct(&c, &spec, &method(e, 0))?;
    let l = z_lvr(&c, &spec, &method(e, 1))?;
    let gap = (d.value - l.value).norm() / d.value.norm();
    let check = match e.method {
        MethodArg::Quadrature => Check::le("relative gap", gap, 1e-4),
        MethodArg::MonteCarlo => Check::le("gap in combined stderr", (d.value - l.value).norm() / d.error.hypot(l.error), 3.0),
    };
    Ok(Outcome {
        values: json!({
            "z_direct": cx(d.value), "z_direct_error": d.error,
            "z_lvr": cx(l.value), "z_lvr_error": l.error,
            "relative_gap": gap,
        }),
        checks: vec![check],
        csv: None,
    })
}

fn free_energy_cmd(a: &CouplingArgs, e: &EnsembleArgs) -> Result<Outcome> {
    let f = free_energy(&coupling(a)?, &ensemble(e)?, &method(e, 0))?;
    Ok(Outcome { values: json!({ "free_energy": cx(f.value), "error": f.error, "z": cx(f.z.value), "z_error": f.z.error }), checks: vec![], csv: None })
}

fn amplitude_json(a: &AmplitudeEstimate) -> Value {
    json!({ "value": cx(a.value), "stderr": a.stderr, "edges": a.tree.edges(), "n_w_samples": a.n_w_samples, "n_mc_samples": a.n_mc_samples })
}

fn lve_sum(a: &CouplingArgs, e: &EnsembleArgs, n_max: usize) -> Result<Outcome> {
    let c = coupling(a)?;
    let spec = ensemble(e)?;
    let params = lve_core::AmplitudeParams { n_mc: e.mc_samples as usize, seed: e.seed, workers: e.workers as usize, quad_nodes: e.quad_nodes as usize, ..Default::default() };
    let sum = lve_truncated_f(&c, &spec, n_max, &params)?;
    let mut csv = Csv::new(&["vertices", "edges", "re", "im", "stderr"]);
    for amp in &sum.amplitudes {
        let edges: Vec<String> = amp.tree.edges().iter().map(|(i, j)| format!("{i}-{j}")).collect();
        csv.rows.push(vec![amp.tree.n().to_string(), edges.join(" "), amp.value.re.to_string(), amp.value.im.to_string(), amp.stderr.to_string()]);
    }
    let mut values = json!({
        "truncated_sum": cx(sum.value), "error": sum.error, "abs_amplitude_sum": sum.abs_sum,
        "amplitudes": sum.amplitudes.iter().map(amplitude_json).collect::<Vec<_>>(),
    });
    if spec.n <= 3 {
        let f = free_energy(&c, &spec, &Method::Quadrature { nodes: e.quad_nodes as usize, workers: e.workers as usize })?;
        values["free_energy"] = cx(f.value);
        values["abs_gap"] = json!((f.value - sum.value).norm());
        values["combined_error"] = json!(f.error.hypot(sum.error));
    }
    Ok(Outcome { values, checks: vec![], csv: Some(csv) })
}

fn single_vertex(a: &CouplingArgs, e: &EnsembleArgs) -> Result<Outcome> {
    let v = single_vertex_amplitude(&coupling(a)?, &ensemble(e)?, &method(e, 0))?;
    Ok(Outcome {
        values: json!({
            "total": cx(v.total.value), "total_stderr": v.total.stderr,
            "single_trace": cx(v.a1.value), "single_trace_stderr": v.a1.stderr,
            "double_trace": cx(v.a2.value), "double_trace_stderr": v.a2.stderr,
        }),
        checks: vec![],
        csv: None,
    })
}

fn jacobian(p: u32, lambda: f64, eigs: &[f64], pairs: usize, seed: u64) -> Result<Outcome> {
    let sets: Vec<Vec<f64>> = if eigs.is_empty() {
        let mut rng = stream(seed, 0);
        (0..pairs).map(|_| vec![rng.random_range(-5.0..=5.0), rng.random_range(-5.0..=5.0)]).collect()
    } else {
        vec![eigs.to_vec()]
    };
    let (mut negative, mut consistency, mut smallest) = (0usize, 0.0f64, f64::INFINITY);
    for s in &sets {
        let r = jacobian_check(p, lambda, s)?;
        negative += r.factors.iter().filter(|f| !(f.value > 0.0)).count();
        consistency = consistency.max(r.consistency);
        smallest = r.factors.iter().map(|f| f.value).fold(smallest, f64::min);
    }
    Ok(Outcome {
        values: json!({ "sets": sets.len(), "non_positive_factors": negative, "smallest_factor": smallest, "consistency": consistency }),
        checks: vec![Check::le("non-positive factors", negative as f64, 0.0), Check::le("factorisation consistency", consistency, 1e-8)],
        csv: None,
    })
}

fn verify_bounds(p: u32, epsilon: f64, opts: &RunOptions) -> Result<Outcome> {
    let (fits, derivative) = verify::bound_suites(p, epsilon, opts.seed, opts.workers)?;
    let mut csv = Csv::new(&["suite", "p", "epsilon", "core_constant", "full_constant", "holds", "ray_arg", "fitted_exponent", "target_exponent", "exponent_within"]);
    for b in &fits {
        let base = vec![b.name.clone(), b.p.to_string(), b.epsilon.to_string(), b.core_constant.to_string(), b.full_constant.to_string(), b.holds.to_string()];
        if b.exponents.is_empty() {
            csv.rows.push([base.clone(), vec![String::new(); 4]].concat());
        }
        for x in &b.exponents {
            csv.rows.push([base.clone(), vec![x.ray_arg.to_string(), x.fitted.to_string(), x.target.to_string(), x.within.to_string()]].concat());
        }
    }
    Ok(Outcome {
        values: json!({ "fits": fits, "derivative_corner_ratio": derivative }),
        checks: verify::bound_checks(&fits, derivative),
        csv: Some(csv),
    })
}

/// `a..b` inclusive or `a,b,c`.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("N list must look like 1..6 or 1,2,3; got {s:?}"));
    let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn pacman(p: u32, modulus: f64, args: &[f64], epsilon: f64, n_list: &str, opts: &RunOptions) -> Result<Outcome> {
    let ns = parse_n_list(n_list)?;
    let args = if args.is_empty() { pacman_args(epsilon).to_vec() } else { args.to_vec() };
    let (checks, table) = verify::pacman_scan(p, modulus, &args, epsilon, &ns, opts)?;
    let bounded = checks.iter().all(|c| c.passed);
    Ok(Outcome { values: json!({ "bounded": bounded, "rows": table.rows.len() }), checks, csv: Some(Csv::from_table(&table)) })
}

fn acceptance(id: Option<usize>, opts: &RunOptions) -> Result<Outcome> {
    let ids: Vec<usize> = id.map_or_else(|| (1..=12).collect(), |i| vec![i]);
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for i in ids {
        let r = verify::run_criterion(i, opts)?;
        eprintln!("{}", r.line());
        checks.push(Check::flag(format!("criterion {i}: {}", r.title), r.passed));
        reports.push(r);
    }
    let csv = match reports.as_slice() {
        [r] => r.table.as_ref().map(Csv::from_table),
        _ => None,
    };
    Ok(Outcome { values: json!({ "reports": reports }), checks, csv })
}


#[cfg(test)]
mod tests {
    use super::parse_n_list;

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_n_list("2, 5").unwrap(), vec![2, 5]);
        assert!(parse_n_list("3..1").is_err());
        assert!(parse_n_list("a").is_err());
        assert!(parse_n_list("0,1").is_err());
    }
}
