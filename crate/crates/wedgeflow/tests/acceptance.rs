//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use wedgeflow::suite;
use wedgeflow::CliResult;

/// Wall-clock limit per Signorini solve.
const SOLVE_SECONDS: f64 = 30.0;
/// Wall-clock limit per barrier certificate.
const BARRIER_SECONDS: f64 = 5.0;

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> CliResult<Verdict>;

fn verdict(pass: bool, detail: String) -> CliResult<Verdict> {
    Ok(Verdict { pass, detail })
}

fn convergence() -> CliResult<Verdict> {
    let c = suite::signorini_convergence(&[32, 64, 128])?;
    let slowest = c.rows.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let errs: Vec<String> = c.rows.iter().map(|r| format!("{:.3e}", r.max_error)).collect();
    verdict(
        c.pass && slowest <= SOLVE_SECONDS,
        format!("order {:?}, errors [{}], slowest solve {slowest:.1} s", c.order, errs.join(", ")),
    )
}

fn exponent() -> CliResult<Verdict> {
    let e = suite::free_boundary_exponent(128)?;
    verdict(e.pass, format!("kappa {:.4} at h = 1/128 (target 1.5 +- 0.1)", e.fit.kappa))
}

fn barriers() -> CliResult<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, beta) in suite::barrier_cases() {
        // β = 0.05 equals the cap 1/(10(n-2)) at n = 4 and is checked outside the admissible range.
        let b = suite::barrier(n, beta, 128, true)?;
        let ok = b.certificate.pass && b.seconds <= BARRIER_SECONDS;
        pass &= ok;
        parts.push(format!(
            "n={n} beta={beta:.3}{}: max H {:.4} <= {:.4} in {:.2} s",
            if b.admissible { "" } else { " (inadmissible)" },
            b.certificate.max_h,
            b.certificate.threshold,
            b.seconds
        ));
    }
    verdict(pass, parts.join("; "))
}

fn wedges() -> CliResult<Verdict> {
    let rows = suite::wedge_exactness(128)?;
    let worst = rows.iter().map(|r| r.max_error.max(r.closeness)).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| r.max_slice_gap).fold(0.0, f64::max);
    verdict(
        rows.iter().all(|r| r.pass),
        format!("worst field/closeness error {worst:.2e} (5h = {:.2e}), slice gap {gap:.1e}", 5.0 / 128.0),
    )
}

fn dichotomy() -> CliResult<Verdict> {
    let d = suite::dichotomy_grid(32, wedgeflow_core::barriers::CALIBRATED_C0, true)?;
    let violations = d.rows.iter().filter(|r| r.violation.is_some()).count();
    verdict(
        d.pass,
        format!(
            "frozen C0 {} (measured {:?}), {} instances, {violations} violations",
            d.c0,
            d.calibrated,
            d.rows.len()
        ),
    )
}

fn monotonicity() -> CliResult<Verdict> {
    let rows = suite::monotonicity_suite(32)?;
    let hard: usize = rows.iter().map(|r| r.profile.violations.len()).sum();
    let cone_var = rows
        .iter()
        .filter(|r| r.max_variation.is_some())
        .map(|r| r.profile.variation())
        .fold(0.0, f64::max);
    verdict(
        rows.len() >= 10 && rows.iter().all(|r| r.pass),
        format!("{} instances, {hard} hard violations, worst cone variation {cone_var:.2e} (h = {:.2e})", rows.len(), 1.0 / 32.0),
    )
}

fn flatland() -> CliResult<Verdict> {
    let rows = suite::flatland_suite(suite::DEFAULT_SEED, 20)?;
    let dist = rows.iter().map(|r| r.limit_distance.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| r.degiorgi_gap).fold(0.0, f64::max);
    verdict(
        rows.len() == 20 && rows.iter().all(|r| r.pass),
        format!("20 configs, worst limit distance {dist:.1e}, worst |P_DG - length| {gap:.1e}"),
    )
}

fn improvement() -> CliResult<Verdict> {
    let r = suite::improvement(128)?;
    let worst = r
        .wedge_tables
        .iter()
        .flat_map(|t| t.rows.iter().map(|row| row.eps / row.scale))
        .fold(0.0, f64::max);
    verdict(
        r.pass,
        format!("rate p {:?} in [0.4, 0.6]; exact wedges worst eps/scale {worst:.1e}", r.u32_table.rate),
    )
}

fn brute_force() -> CliResult<Verdict> {
    let rows = suite::brute_force_suite()?;
    let worst = rows.iter().map(|r| r.max_diff).fold(0.0, f64::max);
    let sets = rows.first().map_or(0, |r| r.active_sets);
    verdict(
        rows.iter().all(|r| r.pass),
        format!("{} instances, {sets} active sets each, worst difference {worst:.1e}", rows.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("signorini convergence", convergence),
        ("optimal exponent", exponent),
        ("barrier certificate", barriers),
        ("wedge exactness", wedges),
        ("dichotomy", dichotomy),
        ("monotonicity", monotonicity),
        ("flatland oracle equivalence", flatland),
        ("improvement of closeness", improvement),
        ("small-instance brute force", brute_force),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {}. {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
