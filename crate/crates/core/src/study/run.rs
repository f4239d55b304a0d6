use super::config::{ExperimentConfig, GeneratorConfig, StudyKind};
use super::report::{Quantity, Series, StudyReport, Verdict};
use crate::besov::{fit_rate, mollification_error_rate};
use crate::commutator::{degenerate_viscosity_commutator, TestFunction};
use crate::energy::{energy_budget, global_energy_balance_bounded, ns_energy_residual, shock_dissipation_check};
use crate::error::{LabError, Result};
use crate::fieldlab::{make_mollifier, Field, GridSpec};
use crate::pressure::{commutator_rate, holder_bound_ratio, PressureLaw};
use crate::synth::{self, RiemannSolution, RiemannSpec, Wave, WeierstrassSpec};
use crate::vacuum;

struct State {
    rho: Field,
    u: Option<Field>,
    riemann: Option<RiemannSolution>,
}

fn scalar(cfg: &ExperimentConfig, gen: &GeneratorConfig, grid: &GridSpec, component: u64) -> Result<Field> {
    match gen {
        GeneratorConfig::Weierstrass { alpha, levels, base_frequency, floor, seed_offset } => {
            let spec = WeierstrassSpec {
                alpha: *alpha,
                levels: *levels,
                base_frequency: *base_frequency,
                seed: cfg.seed.wrapping_add(*seed_offset).wrapping_add(component),
            };
            synth::weierstrass_field(&spec, grid, *floor)
        }
        GeneratorConfig::VacuumProfile { profile, m } => synth::vacuum_profile(*profile, *m, grid),
        GeneratorConfig::Counterexample { i_max } => {
            if grid.has_time() || grid.ndim() != 1 {
                return Err(LabError::Config("the counterexample lives on a stationary 1D grid".into()));
            }
            vacuum::counterexample_field(*i_max, grid.axis(0).n)
        }
        GeneratorConfig::Spike { width } => {
            let s = grid.first_space_axis();
            let ax = *grid.axis(s);
            let c = ax.origin + 0.5 * ax.extent();
            Field::scalar_from_fn(grid, |x| if (x[s] - c).abs() < 0.5 * width { 1.0 } else { 0.0 })
        }
        GeneratorConfig::Constant { value } => {
            let v = value.get(component as usize).or(value.first()).copied().unwrap_or(0.0);
            Field::constant(grid, 1, v)
        }
        _ => Err(LabError::Config("this generator produces a full state, not a single field".into())),
    }
}

fn build_state(cfg: &ExperimentConfig, grid: &GridSpec, law: &PressureLaw) -> Result<State> {
    let (rho, u, riemann) = match &cfg.density {
        GeneratorConfig::SimpleWave { amplitude } => {
            let (r, u, _) = synth::simple_wave(law, *amplitude, grid)?;
            (r, Some(u), None)
        }
        GeneratorConfig::Riemann { rho_l, u_l, rho_r, u_r } => {
            let spec = RiemannSpec { rho_l: *rho_l, u_l: *u_l, rho_r: *rho_r, u_r: *u_r, law: *law };
            let (r, u, sol) = synth::riemann_solution(&spec, grid)?;
            (r, Some(u), Some(sol))
        }
        GeneratorConfig::Acoustic { amplitude, boundary_velocity } => {
            let (r, u) = synth::acoustic_standing_wave(law, *amplitude, *boundary_velocity, grid)?;
            (r, Some(u), None)
        }
        other => (scalar(cfg, other, grid, 0)?, None, None),
    };
    let u = match (&cfg.velocity, u) {
        (Some(gen), _) => {
            let comps = (0..grid.spatial_dim())
                .map(|c| scalar(cfg, gen, grid, 1000 + c as u64).map(Field::into_values))
                .collect::<Result<Vec<_>>>()?;
            Some(Field::from_components(grid, comps)?)
        }
        (None, u) => u,
    };
    Ok(State { rho, u, riemann })
}

/// Density and optional velocity exactly as a study would generate them.
pub fn generate_fields(cfg: &ExperimentConfig) -> Result<(Field, Option<Field>)> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let law = cfg.law.law()?;
    let st = build_state(cfg, &grid, &law)?;
    Ok((st.rho, st.u))
}

fn eps_series(name: &str, provenance: &str, samples: &[(f64, f64)]) -> Series {
    Series {
        name: name.into(),
        header: "eps,value".into(),
        provenance: provenance.into(),
        rows: samples.iter().map(|&(e, v)| vec![e, v]).collect(),
    }
}

fn velocity(state: &State) -> Result<&Field> {
    state.u.as_ref().ok_or_else(|| LabError::Config("this study needs a velocity field".into()))
}

/// Runs one study; all parameters are validated first.
pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
        pool.install(|| run_inner(cfg))
    } else {
        run_inner(cfg)
    }
}

/// Pretty JSON of the report, byte-stable for identical configs.
pub fn run_to_json(cfg: &ExperimentConfig) -> Result<String> {
    run_study(cfg)?.to_json()
}

fn run_inner(cfg: &ExperimentConfig) -> Result<StudyReport> {
    let grid = cfg.grid.build()?;
    let law = cfg.law.law()?;
    let state = build_state(cfg, &grid, &law)?;
    let (q, s) = match cfg.study {
        StudyKind::Rates => rates(cfg, &law, &state)?,
        StudyKind::Vacuum => vacuum_study(cfg, &state)?,
        StudyKind::Counterexample => counterexample(cfg, &state)?,
        StudyKind::Budget => budget(cfg, &law, &state)?,
        StudyKind::Qns => qns(cfg, &state)?,
        StudyKind::Boundary => boundary(cfg, &law, &state)?,
        StudyKind::Ns => ns(cfg, &law, &state)?,
    };
    Ok(StudyReport::new(cfg.clone(), q, s))
}

type Parts = (Vec<Quantity>, Vec<Series>);

fn rates(cfg: &ExperimentConfig, law: &PressureLaw, st: &State) -> Result<Parts> {
    let p = &cfg.params;
    let tol = &cfg.tolerances;
    let ladder = &cfg.ladders.eps;
    let fit = commutator_rate(&st.rho, law, p.q, ladder)?;
    let expected = (law.gamma * p.beta).min(2.0);
    let moll = mollification_error_rate(&st.rho, p.q, ladder)?;
    let k = make_mollifier(*ladder.last().unwrap_or(&0.0), st.rho.grid().ndim(), st.rho.grid())?;
    let holder = holder_bound_ratio(&st.rho, law, &k)?;
    let q = vec![
        Quantity::new(
            "pressure_commutator_exponent",
            "pressure::commutator_rate over ladders.eps",
            Some(expected),
            fit.exponent,
            Verdict::from_bool(fit.exponent >= expected - tol.rate),
        ),
        Quantity::new(
            "pressure_commutator_r_squared",
            "pressure::commutator_rate over ladders.eps",
            Some(tol.r_squared),
            fit.r_squared,
            Verdict::from_bool(fit.r_squared >= tol.r_squared),
        ),
        Quantity::new(
            "mollification_error_exponent",
            "besov::mollification_error_rate over ladders.eps",
            Some(p.beta),
            moll.exponent,
            Verdict::Info,
        ),
        Quantity::new(
            "holder_bound_ratio",
            "pressure::holder_bound_ratio at the finest eps",
            Some(1.0),
            holder,
            Verdict::from_bool(holder <= 1.0 + 1e-12),
        ),
    ];
    let s = vec![
        eps_series("pressure_commutator", "pressure::commutator_rate", &fit.samples),
        eps_series("mollification_error", "besov::mollification_error_rate", &moll.samples),
    ];
    Ok((q, s))
}

fn region_mask(grid: &GridSpec, frac: [f64; 2]) -> Vec<bool> {
    let s = grid.first_space_axis();
    let ax = *grid.axis(s);
    let mut m = vec![false; grid.node_count()];
    grid.for_each_node(|i, x| {
        let t = (x[s] - ax.origin) / ax.extent();
        m[i] = t >= frac[0] && t <= frac[1];
    });
    m
}

fn vacuum_study(cfg: &ExperimentConfig, st: &State) -> Result<Parts> {
    let p = &cfg.params;
    let ladder = &cfg.ladders.eps;
    let (rows, plateau) = vacuum::ratio_condition_ladder(&st.rho, p.beta, p.q, ladder)?;
    let l1 = vacuum::l1_ratio_lemma_check(&st.rho, ladder, None)?;
    let mut q = vec![
        Quantity::new(
            "ratio_condition_growth_exponent",
            "vacuum::ratio_condition_ladder over ladders.eps",
            None,
            plateau.growth_exponent,
            Verdict::Info,
        ),
        Quantity::new(
            "ratio_condition_last_to_median",
            "vacuum::ratio_condition_ladder over ladders.eps",
            Some(2.0),
            plateau.last_to_median,
            Verdict::Info,
        ),
        Quantity::new(
            "l1_ratio_last_to_median",
            "vacuum::l1_ratio_lemma_check over ladders.eps",
            Some(2.0),
            l1.last_to_median,
            Verdict::from_bool(l1.pass),
        ),
    ];
    let mut s = vec![
        eps_series(
            "ratio_condition",
            "vacuum::ratio_condition (proof set)",
            &rows.iter().map(|r| (r.epsilon, r.proof_set)).collect::<Vec<_>>(),
        ),
        eps_series(
            "ratio_condition_theorem_set",
            "vacuum::ratio_condition (theorem set)",
            &rows.iter().map(|r| (r.epsilon, r.theorem_set)).collect::<Vec<_>>(),
        ),
        eps_series("l1_ratio", "vacuum::l1_ratio_lemma_check", &l1.samples),
    ];
    if p.r > 0.0 {
        let rec = vacuum::reciprocal_integrability_rate(&st.rho, p.p, p.q, p.r, ladder)?;
        q.push(Quantity::new(
            "reciprocal_bound_holds",
            "vacuum::reciprocal_integrability_rate over ladders.eps",
            Some(1.0),
            f64::from(u8::from(rec.rows.iter().all(|r| r.holds))),
            Verdict::from_bool(rec.rows.iter().all(|r| r.holds)),
        ));
        q.push(Quantity::new(
            "reciprocal_lhs_exponent",
            "vacuum::reciprocal_integrability_rate over ladders.eps",
            None,
            rec.lhs_exponent,
            Verdict::Info,
        ));
        s.push(eps_series(
            "reciprocal_lhs",
            "vacuum::reciprocal_integrability_rate",
            &rec.rows.iter().map(|r| (r.epsilon, r.lhs)).collect::<Vec<_>>(),
        ));
    }
    if let GeneratorConfig::VacuumProfile { m, .. } = cfg.density {
        q.push(Quantity::new(
            "reciprocal_in_lq_analytic",
            "synth::reciprocal_in_lq(m, params.q)",
            None,
            f64::from(u8::from(synth::reciprocal_in_lq(m, p.q))),
            Verdict::Info,
        ));
    }
    Ok((q, s))
}

fn counterexample(cfg: &ExperimentConfig, st: &State) -> Result<Parts> {
    let p = cfg.params.p;
    let r = vacuum::counterexample_blowup(&st.rho, p, &cfg.ladders.i)?;
    let q = vec![
        Quantity::new(
            "spike_growth_per_i",
            "vacuum::counterexample_blowup over ladders.i",
            Some(r.predicted),
            r.growth_per_i,
            Verdict::from_bool(r.growth_per_i >= r.predicted - cfg.tolerances.rate),
        ),
        Quantity::new(
            "full_torus_growth_per_i",
            "vacuum::counterexample_blowup over ladders.i",
            None,
            r.full_growth_per_i,
            Verdict::Info,
        ),
    ];
    let rows = |f: fn(&vacuum::CounterexampleRow) -> f64| -> Vec<Vec<f64>> {
        r.rows.iter().map(|row| vec![f64::from(row.i), row.epsilon, f(row)]).collect()
    };
    let s = vec![
        Series {
            name: "counterexample".into(),
            header: "i,eps,value".into(),
            provenance: "vacuum::counterexample_blowup (spike norm / eps_i)".into(),
            rows: rows(|r| r.scaled),
        },
        Series {
            name: "counterexample_full".into(),
            header: "i,eps,value".into(),
            provenance: "vacuum::counterexample_blowup (full torus)".into(),
            rows: rows(|r| r.full),
        },
    ];
    Ok((q, s))
}

fn shock_speed(sol: &RiemannSolution) -> Option<f64> {
    sol.waves.iter().find_map(|w| if let Wave::Shock { speed, .. } = w { Some(*speed) } else { None })
}

fn test_function(cfg: &ExperimentConfig, st: &State) -> TestFunction {
    let grid = st.rho.grid();
    if let (Some(sol), true) = (&st.riemann, grid.has_time()) {
        if let Some(speed) = shock_speed(sol) {
            let t = grid.axis(0);
            let tc = t.origin + 0.5 * t.extent();
            return TestFunction::Bump {
                center: vec![tc, sol.x0 + speed * tc],
                radius: cfg.params.phi_fraction * t.extent().min(grid.axis(1).extent()),
            };
        }
    }
    TestFunction::centred_bump(grid, cfg.params.phi_fraction)
}

fn budget(cfg: &ExperimentConfig, law: &PressureLaw, st: &State) -> Result<Parts> {
    let u = velocity(st)?;
    let phi = test_function(cfg, st);
    let b = energy_budget(&st.rho, u, law, &cfg.ladders.eps, &phi)?;
    let mut q = vec![
        Quantity::new(
            "identity_gap",
            "energy::energy_budget over ladders.eps",
            Some(cfg.tolerances.gap),
            b.identity_gap,
            Verdict::from_bool(b.identity_gap <= cfg.tolerances.gap),
        ),
        Quantity::new("local_residual", "energy::local_energy_residual", None, b.local_residual, Verdict::Info),
        Quantity::new(
            "commutator_exponent",
            "energy::energy_budget |rhs| fit over ladders.eps",
            None,
            b.rhs_fit.as_ref().map_or(f64::NAN, |f| f.exponent),
            Verdict::Info,
        ),
    ];
    if let Some(sol) = &st.riemann {
        let c = shock_dissipation_check(&st.rho, u, law, &phi, sol)?;
        q.push(Quantity::new(
            "shock_dissipation_relative_error",
            "energy::shock_dissipation_check",
            Some(0.05),
            c.relative_error,
            Verdict::from_bool(c.relative_error <= 0.05 && (c.predicted == 0.0 || c.residual < 0.0)),
        ));
        q.push(Quantity::new("shock_dissipation_rate", "synth::riemann_solution", None, sol.dissipation, Verdict::Info));
    }
    let pick = |f: fn(&crate::energy::BalanceRow) -> f64| b.rows.iter().map(|r| (r.epsilon, f(r))).collect::<Vec<_>>();
    let s = vec![
        eps_series("balance_lhs", "energy::mollified_energy_balance lhs", &pick(|r| r.lhs)),
        eps_series("balance_rhs", "energy::mollified_energy_balance rhs", &pick(|r| r.rhs)),
        eps_series("balance_gap", "energy::mollified_energy_balance gap", &pick(|r| r.gap)),
    ];
    Ok((q, s))
}

fn qns(cfg: &ExperimentConfig, st: &State) -> Result<Parts> {
    let p = &cfg.params;
    let region = region_mask(st.rho.grid(), p.region);
    let check = vacuum::qns_check(&st.rho, &region, &cfg.ladders.radius, p.qns_constant, p.eps0)?;
    let eq = vacuum::qns_mollifier_equivalence(&st.rho, &region, &cfg.ladders.eps, p.qns_constant, p.qns_m, p.eps0)?;
    let osc = cfg
        .ladders
        .radius
        .iter()
        .map(|&r| Ok((r, vacuum::mean_oscillation(&st.rho, r, p.p)?)))
        .collect::<Result<Vec<_>>>()?;
    let q = vec![
        Quantity::new(
            "qns_empirical_constant",
            "vacuum::qns_check over ladders.radius",
            Some(p.qns_constant),
            check.empirical_c,
            Verdict::from_bool(check.pass),
        ),
        Quantity::new(
            "mollifier_ratio_max",
            "vacuum::qns_mollifier_equivalence over ladders.eps",
            Some(1.1 * eq.forward_bound),
            eq.empirical_m,
            Verdict::from_bool(eq.forward_pass),
        ),
        Quantity::new(
            "backward_qns_constant",
            "vacuum::qns_mollifier_equivalence over ladders.eps",
            Some(1.1 * eq.backward_constant),
            eq.backward_qns.empirical_c,
            Verdict::from_bool(eq.backward_pass),
        ),
    ];
    let s = vec![eps_series("mean_oscillation", "vacuum::mean_oscillation over ladders.radius", &osc)];
    Ok((q, s))
}

fn boundary(cfg: &ExperimentConfig, law: &PressureLaw, st: &State) -> Result<Parts> {
    let u = velocity(st)?;
    let p = &cfg.params;
    let tol = &cfg.tolerances;
    let r = global_energy_balance_bounded(&st.rho, u, law, &cfg.ladders.delta, &cfg.ladders.nu, p.t1, p.t2, tol.gap, false)?;
    let slope = r.boundary_fit.as_ref().map_or(f64::NAN, |f| f.exponent);
    let q = vec![
        Quantity::new(
            "boundary_velocity",
            "energy::global_energy_balance_bounded",
            Some(tol.gap),
            r.boundary_velocity,
            Verdict::from_bool(r.boundary_velocity <= tol.gap),
        ),
        Quantity::new(
            "boundary_term_slope",
            "energy::global_energy_balance_bounded over ladders.delta",
            Some(1.0),
            slope,
            Verdict::from_bool(slope >= 1.0 - tol.rate),
        ),
        Quantity::new(
            "boundary_term_median",
            "energy::global_energy_balance_bounded over ladders.delta",
            None,
            r.boundary_plateau.median,
            Verdict::Info,
        ),
        Quantity::new(
            "energy_difference",
            "energy::global_energy_balance_bounded slices at params.t1, params.t2",
            Some(tol.gap),
            r.energy_difference,
            Verdict::from_bool(r.energy_difference.abs() <= tol.gap),
        ),
    ];
    let s = vec![
        eps_series(
            "boundary_term",
            "energy::global_energy_balance_bounded (delta, boundary)",
            &r.delta_rows.iter().map(|x| (x.delta, x.boundary)).collect::<Vec<_>>(),
        ),
        eps_series(
            "bulk_term",
            "energy::global_energy_balance_bounded (nu, bulk)",
            &r.nu_rows.iter().map(|x| (x.nu, x.bulk)).collect::<Vec<_>>(),
        ),
    ];
    Ok((q, s))
}

fn ns(cfg: &ExperimentConfig, law: &PressureLaw, st: &State) -> Result<Parts> {
    let u = velocity(st)?;
    let (mu, nu) = (cfg.law.mu, cfg.law.nu);
    let phi = test_function(cfg, st);
    let r = ns_energy_residual(&st.rho, u, law, mu, nu, cfg.params.degenerate, &phi)?;
    let rows = cfg
        .ladders
        .eps
        .iter()
        .map(|&e| {
            let k = make_mollifier(e, st.rho.grid().ndim(), st.rho.grid())?;
            degenerate_viscosity_commutator(&st.rho, u, mu, nu, &k, &phi)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = rows.iter().map(|v| (v.epsilon, v.ibp.abs())).collect();
    let fit = fit_rate(&samples, Some(0..samples.len())).ok();
    let q = vec![
        Quantity::new(
            "dissipation",
            "energy::ns_energy_residual",
            Some(0.0),
            r.dissipation,
            Verdict::from_bool(r.dissipation >= 0.0),
        ),
        Quantity::new("ns_residual", "energy::ns_energy_residual", None, r.residual, Verdict::Info),
        Quantity::new(
            "viscous_commutator_exponent",
            "commutator::degenerate_viscosity_commutator over ladders.eps",
            None,
            fit.map_or(f64::NAN, |f| f.exponent),
            Verdict::Info,
        ),
    ];
    let s = vec![
        eps_series(
            "viscous_commutator",
            "commutator::degenerate_viscosity_commutator (ibp)",
            &rows.iter().map(|v| (v.epsilon, v.ibp)).collect::<Vec<_>>(),
        ),
        eps_series(
            "viscous_commutator_raw",
            "commutator::degenerate_viscosity_commutator (raw)",
            &rows.iter().map(|v| (v.epsilon, v.raw)).collect::<Vec<_>>(),
        ),
    ];
    Ok((q, s))
}
