//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero when any of them fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use logse::harness::{
    dyadic_taus, property_suite, run_sweep, free_flow_sweep, Coupling, MassReport, PropertyCounts, ReferenceSpec,
    SweepOutcome, SweepSpec, DEFAULT_MEASURE_TIMES,
};
use logse::initdata::{
    gagliardo_bound_check, gausson_exact, gausson_residual, GaussonParams, InitialData, PowerSingularParams,
    RandomHsParams, DEFAULT_POWER_CUTOFF, DEFAULT_RANDOM_CUTOFF,
};
use logse::quadrature::QuadratureSpec;

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    use std::io::Write;
    let tag = if v.pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{tag} criterion {}: {} | {}", v.id, v.name, v.detail);
}

fn rough_spec() -> SweepSpec {
    SweepSpec {
        lambda: -1.0,
        taus: dyadic_taus(7, 13),
        coupling: Coupling::Sqrt,
        measure_times: DEFAULT_MEASURE_TIMES.to_vec(),
        reference: ReferenceSpec::Numeric {
            tau: 2f64.powi(-16),
            modes: 256,
        },
        oversample: 4,
        eps: 0.0,
    }
}

fn gausson_spec() -> SweepSpec {
    SweepSpec {
        lambda: -16.0,
        taus: dyadic_taus(7, 13),
        coupling: Coupling::Fixed(200),
        measure_times: DEFAULT_MEASURE_TIMES.to_vec(),
        reference: ReferenceSpec::ExactGausson,
        oversample: 4,
        eps: 0.0,
    }
}

struct Sweep {
    label: &'static str,
    outcome: logse::Result<SweepOutcome>,
    elapsed: Duration,
}

fn sweep(label: &'static str, u0: logse::Result<InitialData>, spec: &SweepSpec) -> Sweep {
    let start = Instant::now();
    let outcome = u0.and_then(|u0| run_sweep(&u0, spec, None));
    Sweep {
        label,
        outcome,
        elapsed: start.elapsed(),
    }
}

fn random(s: f64) -> logse::Result<InitialData> {
    InitialData::random_hs(RandomHsParams {
        s,
        beta: 0.51,
        cutoff: DEFAULT_RANDOM_CUTOFF,
        seed: 42,
    })
}

fn power(gamma: f64) -> logse::Result<InitialData> {
    InitialData::power_singular(PowerSingularParams { gamma, ell: 2 }, DEFAULT_POWER_CUTOFF, &QuadratureSpec::default())
}

/// Every fitted slope inside `[lo, hi]`, and the sweep within its time budget.
fn slopes_within(sweeps: &[&Sweep], lo: f64, hi: f64, budget: Duration) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in sweeps {
        match &s.outcome {
            Ok(out) => {
                let slopes: Vec<String> = out.fits.iter().map(|f| format!("t={:.1}: {:.4}", f.t, f.slope)).collect();
                let ok = out.fits.len() == DEFAULT_MEASURE_TIMES.len()
                    && out.fits.iter().all(|f| f.slope >= lo && f.slope <= hi);
                let fast = s.elapsed < budget;
                pass &= ok && fast;
                parts.push(format!("{} slopes [{}] in [{lo}, {hi}], {:.1?} (< {budget:?})", s.label, slopes.join(", "), s.elapsed));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{}: {e}", s.label));
            }
        }
    }
    (pass, parts.join("; "))
}

fn mass_of(s: &Sweep) -> Vec<MassReport> {
    s.outcome.as_ref().map(|o| o.mass.iter().map(|m| m.1).collect()).unwrap_or_default()
}

fn main() -> ExitCode {
    let mut verdicts = Vec::new();
    let ten_minutes = Duration::from_secs(600);

    let gausson = sweep("gausson", InitialData::gausson(GaussonParams::standard()), &gausson_spec());
    let (pass, detail) = slopes_within(&[&gausson], 0.9, 1.1, Duration::from_secs(60));
    verdicts.push(Verdict {
        id: 1,
        name: "Gausson first-order convergence",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let ex1 = sweep("example 1 (s=0.8)", random(0.8), &rough_spec());
    let (pass, detail) = slopes_within(&[&ex1], 0.28, 0.52, ten_minutes);
    verdicts.push(Verdict {
        id: 2,
        name: "random H^s data, s = 0.8",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let ex2 = sweep("example 2 (gamma=0.3)", power(0.3), &rough_spec());
    let (pass, detail) = slopes_within(&[&ex2], 0.28, 0.52, ten_minutes);
    verdicts.push(Verdict {
        id: 3,
        name: "|x|^0.3 e^{2ix}",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let ex3 = sweep("example 3 (s=1)", random(1.0), &rough_spec());
    let ex4 = sweep("example 4 (gamma=0.5)", power(0.5), &rough_spec());
    let (pass, detail) = slopes_within(&[&ex3, &ex4], 0.40, 0.60, ten_minutes);
    verdicts.push(Verdict {
        id: 4,
        name: "H^1-level data",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let gausson_mass = mass_of(&gausson);
    let rough_mass: Vec<MassReport> = [&ex1, &ex2, &ex3, &ex4].iter().flat_map(|s| mass_of(s)).collect();
    let g_drift = gausson_mass.iter().map(|m| m.max_rel_drift).fold(0.0, f64::max);
    let r_drift = rough_mass.iter().map(|m| m.max_rel_drift).fold(0.0, f64::max);
    let runs = gausson_mass.len() + rough_mass.len();
    let monotone = gausson_mass.iter().chain(&rough_mass).all(|m| m.monotone_ok);
    verdicts.push(Verdict {
        id: 5,
        name: "mass",
        pass: runs == 35 && monotone && g_drift <= 1e-8 && r_drift <= 1e-4,
        detail: format!("{runs} runs monotone: {monotone}; Gausson drift {g_drift:.2e} (<= 1e-8); rough drift {r_drift:.2e} (<= 1e-4)"),
    });
    report(verdicts.last().unwrap());

    let start = Instant::now();
    let props = property_suite(2024, PropertyCounts::default(), None);
    let elapsed = start.elapsed();
    let (pass, detail) = match props {
        Ok(r) => {
            let bad: Vec<&str> = r.violated().map(|e| e.inequality).collect();
            let total: usize = r.entries.iter().map(|e| e.samples).sum();
            (
                bad.is_empty() && elapsed < Duration::from_secs(30),
                format!("{} inequalities, {total} samples, violated {bad:?}, {elapsed:.2?} (< 30 s)", r.entries.len()),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    verdicts.push(Verdict {
        id: 6,
        name: "property suites",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let (pass, detail) = match free_flow_sweep(2024, 100) {
        Ok(s) => (
            s.upper_samples == 100
                && s.lower_samples == 100
                && s.upper_violations == 0
                && s.lower_violations == 0
                && (s.window_length - 2.75).abs() <= 0.01,
            format!(
                "upper {}/{} violations, lower {}/{} violations, window length {:.4} (2.75 ± 0.01)",
                s.upper_violations, s.upper_samples, s.lower_violations, s.lower_samples, s.window_length
            ),
        ),
        Err(e) => (false, e.to_string()),
    };
    verdicts.push(Verdict {
        id: 7,
        name: "free-flow optimality",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let params = GaussonParams::standard();
    let left = gausson_exact(&params, &[-PI], 0.0).norm();
    let right = gausson_exact(&params, &[PI], 0.0).norm();
    let within = |v: f64| (v / 5.1e-35 - 1.0).abs() <= 0.1;
    let (pass, detail) = match gausson_residual(&params, 200, 4, 0.5) {
        Ok(res) => (
            within(left) && within(right) && res <= 1e-10,
            format!("|u0(-pi)| = {left:.4e}, |u0(pi)| = {right:.4e} (5.1e-35 ± 10%); residual {res:.2e} (<= 1e-10)"),
        ),
        Err(e) => (false, e.to_string()),
    };
    verdicts.push(Verdict {
        id: 8,
        name: "Gausson boundary value and residual",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let check = gagliardo_bound_check(
        &PowerSingularParams { gamma: 0.3, ell: 0 },
        0.2,
        1024,
        &QuadratureSpec::default(),
    );
    let (pass, detail) = match check {
        Ok(r) => {
            let closed = (2.0 * PI).powf(1.2) / 0.12;
            (
                r.holds && r.value <= closed && (r.bound - closed).abs() <= 1e-12 * closed && r.self_consistency() <= 1e-6,
                format!(
                    "energy {:.6} <= (2pi)^1.2/0.12 = {closed:.4}; refinement change {:.1e} (<= 1e-6)",
                    r.value,
                    r.self_consistency()
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    verdicts.push(Verdict {
        id: 9,
        name: "Gagliardo bound for |x|^0.3",
        pass,
        detail,
    });
    report(verdicts.last().unwrap());

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
