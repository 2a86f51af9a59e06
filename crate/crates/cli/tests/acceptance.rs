//! Acceptance criteria, one line each. Exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use powerbound_cli::config::{parse_config, RunConfig, DEFAULT_CONFIG};
use powerbound_cli::runner::{run, sweep, RunReport, REPORT_FILE};
use powerbound_core::clockwork::{
    clock_energy_variance, optimal_wavefunction, random_admissible, variational_minimize,
};
use powerbound_core::machine::mean_work;
use powerbound_core::scenarios::{lattice_convergence, oscillator_pair, qubit_machine, QubitParams};
use powerbound_core::{BoundReport, ClockWavefunction, ScenarioOutcome, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, title: &'static str, pass: bool, detail: String) -> Verdict {
    let v = Verdict {
        id,
        title,
        pass,
        detail,
    };
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {} {}: {}", v.id, v.title, v.detail);
    v
}

fn config_in(text: &str, dir: &Path) -> RunConfig {
    let mut c = parse_config(text).expect("config parses");
    c.output_dir = dir.to_path_buf();
    c
}

fn outcome<'a>(report: &'a RunReport, name: &str) -> &'a ScenarioOutcome {
    report
        .record(name)
        .and_then(|r| r.outcome.as_ref())
        .unwrap_or_else(|| panic!("scenario {name} produced no outcome"))
}

fn check_residual(o: &ScenarioOutcome, name: &str) -> (bool, f64) {
    o.check(name).map(|c| (c.passed, c.residual)).unwrap_or((false, f64::NAN))
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let (omega, g, hbar) = (1.0, 1.0, 1.0);
    let closed = |tau: f64| hbar * omega * (1.0 - (2.0 * g * tau / hbar).cos()) / 2.0;
    let mut worst = 0.0_f64;
    for k in 1..=50 {
        let tau = k as f64 * PI * hbar / (50.0 * g);
        let (model, _) = oscillator_pair(omega, g, &[0.0, 1.0], &[1.0], None, tau, hbar).unwrap();
        worst = worst.max((mean_work(&model).unwrap() - closed(tau)).abs());
    }
    let (model, _) = oscillator_pair(omega, g, &[0.0, 1.0], &[1.0], None, PI / 2.0, hbar).unwrap();
    let peak_err = (mean_work(&model).unwrap() - 1.0).abs();
    let elapsed = start.elapsed();
    verdict(
        "AC1",
        "twin oscillator closed form",
        worst <= 1e-10 && peak_err <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("max |W - closed| = {worst:.3e} over 50 times, |W(pi/2) - 1| = {peak_err:.3e}, {elapsed:.2?}"),
    )
}

fn ac2(dir: &Path) -> Verdict {
    let text = "[[scenario]]\nname = \"control\"\nkind = \"nonautonomous_control\"\n[scenario.params]\ncouplings = [1.0, 2.0, 4.0, 8.0]\n";
    let report = run(&config_in(text, dir)).unwrap();
    let o = outcome(&report, "control");
    let mut ok = o.series.len() == 4;
    let mut worst: f64 = 0.0;
    for s in &o.series {
        let r = &s.report;
        let expected = 2.0 * s.param * 1.0 / PI;
        worst = worst.max((r.power - expected).abs());
        ok &= r.rhs_fluctuation == 0.0 && !r.condition1_ok && r.expected_violation && r.delta_h_a == 0.0;
    }
    let powers: Vec<f64> = o.series.iter().map(|s| s.report.power).collect();
    ok &= powers.windows(2).all(|w| w[1] > w[0]);
    ok &= worst <= 1e-10 && report.exit_code() == 0 && !report.bound_violation;
    verdict(
        "AC2",
        "externally switched control",
        ok,
        format!(
            "P = {powers:.6?}, max |P - 2g/pi| = {worst:.3e}, flagged as expected violation, exit code {}",
            report.exit_code()
        ),
    )
}

fn ac3() -> Verdict {
    let start = Instant::now();
    let ground = variational_minimize(1.0, 2001).unwrap();
    let elapsed = start.elapsed();
    let reference =
        ClockWavefunction::from_fn(1.0, 2001, |x| C64::new(2f64.sqrt() * (-PI * x).sin(), 0.0)).unwrap();
    let overlap = ground.wavefunction.overlap(&reference).unwrap();
    let spread = clock_energy_variance(&ground.wavefunction, 1.0, 1.0).sqrt();
    verdict(
        "AC3",
        "optimal clock state",
        overlap >= 1.0 - 1e-6 && (spread - PI).abs() <= 1e-3 && elapsed < Duration::from_secs(5),
        format!("overlap = {overlap:.12}, dH*L/hbar - pi = {:.3e}, {elapsed:.2?}", spread - PI),
    )
}

fn ac4(report: &RunReport, dir: &Path) -> Verdict {
    let o = outcome(report, "qubit");
    let b = &o.bound_report;
    let sat = b.saturation_fluctuation.unwrap_or(f64::NAN);
    let ok_single = (2.0 - 1e-6..=2.0).contains(&b.work) && (1.0 / PI - 0.02..=1.0 / PI + 1e-9).contains(&sat);

    let start = Instant::now();
    let text = "[[scenario]]\nname = \"qubit\"\nkind = \"qubit_saturation\"\n[scenario.params]\nlevel_scale = 1.0\nclock_width = 1.0\nsteps = 4096\n";
    let s = sweep(&config_in(text, dir), "qubit.profile_ratio", &[0.5, 0.1, 0.01]).unwrap();
    let elapsed = start.elapsed();
    let sats: Vec<f64> = s
        .report
        .scenarios
        .iter()
        .map(|r| r.outcome.as_ref().and_then(|o| o.bound_report.saturation_fluctuation).unwrap_or(f64::NAN))
        .collect();
    let monotone = sats.windows(2).all(|w| w[1] >= w[0]);
    verdict(
        "AC4",
        "1/pi saturation",
        ok_single && monotone && elapsed < Duration::from_secs(30),
        format!(
            "W = {:.12}, saturation = {sat:.6} (1/pi = {:.6}), sweep K/L 0.5,0.1,0.01 -> {sats:.6?}, sweep {elapsed:.2?}",
            b.work,
            1.0 / PI
        ),
    )
}

fn ac5(report: &RunReport, ensemble_time: f64) -> Verdict {
    let o = outcome(report, "ensemble");
    let tol = o.bound_report.tolerance;
    let n = o.series.len();
    let mut worst_comm = f64::NEG_INFINITY;
    let mut worst_order = f64::NEG_INFINITY;
    for s in &o.series {
        let r: &BoundReport = &s.report;
        worst_comm = worst_comm.max(r.power.abs() - r.rhs_commutator);
        worst_order = worst_order.max(r.rhs_commutator - r.rhs_fluctuation);
    }
    let (rel_ok, rel) = check_residual(o, "commutator_fluctuation_relation");
    verdict(
        "AC5",
        "bound chain over random machines",
        n == 200 && worst_comm <= tol && worst_order <= tol && rel_ok && rel <= 1e-10 && ensemble_time < 120.0,
        format!(
            "{n} models: max(|P| - comm) = {worst_comm:.3e}, max(comm - fluct) = {worst_order:.3e} (tol {tol:.0e}); 1000 pairs: worst residual {rel:.3e}; {ensemble_time:.1}s"
        ),
    )
}

fn ac6(report: &RunReport) -> Verdict {
    let o = outcome(report, "ensemble");
    let (chain_ok, chain) = check_residual(o, "lattice_qsl_chain");
    let (c1_ok, _) = check_residual(o, "lattice_condition1");
    let dxs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let points = lattice_convergence(7, &dxs, 1.0).unwrap();
    let ratios: Vec<f64> = points.windows(2).map(|w| w[0].gap / w[1].gap).collect();
    let ratios_ok = ratios.iter().all(|r| (3.0..=5.0).contains(r));
    verdict(
        "AC6",
        "speed-limit chain on lattice clocks",
        chain_ok && c1_ok && ratios_ok,
        format!("20 lattice models: worst link residual {chain:.3e}; gap ratios on halving dx {ratios:.4?}"),
    )
}

fn ac7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let width = rng.random_range(0.2..3.0);
        let nu = rng.random_range(0.5..2.0);
        let hbar = rng.random_range(0.5..2.0);
        let modes = rng.random_range(1..=8);
        let psi = random_admissible(&mut rng, width, 1001, modes).unwrap();
        let spread = clock_energy_variance(&psi, hbar, nu).sqrt();
        // Shortest transit: the clock support alone crossing a point-like interaction.
        let tau = width / nu;
        worst = worst.min(tau * spread / (PI * hbar));
    }
    let machine = qubit_machine(&QubitParams::default(), 1.0).unwrap();
    let optimal = machine.tau() * machine.clock().fluctuation(1.0, 1.0) / PI;
    let psi = optimal_wavefunction(1.0, 2001).unwrap();
    let plain = clock_energy_variance(&psi, 1.0, 1.0).sqrt() / PI;
    verdict(
        "AC7",
        "clock uncertainty",
        worst * PI >= PI - 1e-6 && optimal <= 1.02 && plain * PI >= PI - 1e-6,
        format!(
            "min tau*dH/(pi hbar) - 1 over 100 states = {:.3e}; optimal clock at K/L=0.01: {optimal:.6}",
            worst - 1.0
        ),
    )
}

fn ac8(report: &RunReport) -> Verdict {
    let o = outcome(report, "triviality");
    let (w_ok, w) = check_residual(o, "work_zero");
    let (f_ok, f) = check_residual(o, "factorization");
    let perturbed = o.check("perturbed_work").map(|c| (c.passed, c.residual));
    let (p_ok, p) = perturbed.unwrap_or((false, f64::NAN));
    verdict(
        "AC8",
        "commuting interaction is trivial",
        w_ok && f_ok && f <= 1e-10 && p_ok && p > 1e-4,
        format!("|W| = {w:.3e}, factorization residual = {f:.3e}, perturbed |W| = {p:.3e}"),
    )
}

fn ac9(report: &RunReport) -> Verdict {
    let mut missing = 0;
    let mut worst_ts: f64 = 0.0;
    let mut count = 0;
    for rec in &report.scenarios {
        let Some(o) = &rec.outcome else {
            missing += 1;
            continue;
        };
        for r in std::iter::once(&o.bound_report).chain(o.series.iter().map(|s| &s.report)) {
            count += 1;
            match r.timescale_estimate {
                Some(t) => worst_ts = worst_ts.max((t - r.hbar / (2.0 * r.h_s_norm)).abs() / t),
                None => missing += usize::from(r.h_s_norm > 0.0),
            }
        }
    }
    let q = &outcome(report, "qubit").bound_report;
    let sat = q.saturation_fluctuation.unwrap_or(f64::NAN);
    let timescale = q.timescale_estimate.unwrap_or(f64::NAN);
    let tau_min = PI * q.hbar / q.delta_h_a;
    let identity = (PI * q.tau / tau_min - 1.0 / sat).abs() * sat;
    let ratio = tau_min / timescale;
    let ratio_gap = (ratio - 2.0 * PI * q.h_s_norm / q.delta_h_a).abs();
    let (internal_ok, _) = check_residual(outcome(report, "qubit"), "min_time_identity");
    verdict(
        "AC9",
        "detectability timescale",
        missing == 0 && worst_ts <= 1e-12 && identity <= 1e-6 && ratio_gap <= 1e-12 && internal_ok,
        format!(
            "timescale present in {count} reports; qubit tau_min/timescale = {ratio:.6}, |pi*tau/tau_min - 1/saturation|*saturation = {identity:.3e}"
        ),
    )
}

fn strip_timings(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    serde_json::to_string_pretty(&v).unwrap()
}

fn ac10(first: &RunReport, a: &Path, b: &Path) -> Verdict {
    let second = run(&config_in(DEFAULT_CONFIG, b)).unwrap();
    let same_digest = first.digest == second.digest;
    let same_report = strip_timings(&a.join(REPORT_FILE)) == strip_timings(&b.join(REPORT_FILE));
    let mut files: Vec<_> = std::fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    files.sort();
    let same_csv = files
        .iter()
        .all(|f| std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok());
    verdict(
        "AC10",
        "deterministic reruns",
        same_digest && same_report && same_csv,
        format!(
            "digest {} vs {}, report identical without timings: {same_report}, {} data files identical: {same_csv}",
            &first.digest[..16],
            &second.digest[..16],
            files.len()
        ),
    )
}

fn main() {
    let run_a = tempfile::tempdir().unwrap();
    let run_b = tempfile::tempdir().unwrap();
    let scratch = tempfile::tempdir().unwrap();

    let full = run(&config_in(DEFAULT_CONFIG, run_a.path())).unwrap();
    let ensemble_time = full
        .timings
        .iter()
        .find(|t| t.name == "ensemble")
        .map(|t| t.seconds)
        .unwrap_or(f64::INFINITY);

    let verdicts = [
        ac1(),
        ac2(&scratch.path().join("control")),
        ac3(),
        ac4(&full, &scratch.path().join("sweep")),
        ac5(&full, ensemble_time),
        ac6(&full),
        ac7(),
        ac8(&full),
        ac9(&full),
        ac10(&full, run_a.path(), run_b.path()),
    ];
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "acceptance: {}/{} criteria passed; bundled run pass = {}",
        verdicts.len() - failed.len(),
        verdicts.len(),
        full.pass
    );
    if !failed.is_empty() || !full.pass {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
