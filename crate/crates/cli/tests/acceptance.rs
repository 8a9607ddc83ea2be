//! One line per acceptance criterion. Runs without the libtest harness.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{checks, shape, spaces, CAP};
use teamgames::error::Budgets;
use teamgames::model::{builtins, random};
use teamgames::reference::{self, nonexistence_parameters};
use teamgames::solve::{
    certify_nonexistence_tiny, solve_layered, solve_signaling_free, Certification, CibConfig, CibOutcome, SpibSolution,
};
use teamgames::verify::bne::{agent_projection, BneReport};
use teamgames::verify::{best_response, nash_gap};

const EPS: f64 = 0.1;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scratch_dir() -> PathBuf {
    std::env::temp_dir().join(format!("teamgames-acceptance-{}", std::process::id()))
}

fn scratch(name: &str) -> PathBuf {
    let dir = scratch_dir();
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Runs the CLI and returns its exit code and the JSON it wrote.
fn cli(args: &[&str], out: &str) -> Result<(i32, serde_json::Value), String> {
    let path = scratch(out);
    let status = Command::new(env!("CARGO_BIN_EXE_teamgames"))
        .args(args)
        .arg("--out")
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    let code = status.status.code().unwrap_or(-1);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("exit {code}, no output: {e}; stderr: {}", String::from_utf8_lossy(&status.stderr)))?;
    let json = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok((code, json))
}

fn expected_parameters() -> [f64; 4] {
    let third = 1.0 / 3.0;
    [third, third, third + EPS, third - EPS]
}

fn unique_bne() -> Result<String, String> {
    let (code, json) = cli(&["enumerate-bne", "--builtin", "nonexistence", "--param", "eps=0.1"], "bne.json")?;
    ensure(code == 0, format!("exit {code}"))?;
    let report: BneReport = serde_json::from_value(json).map_err(|e| e.to_string())?;
    ensure(report.equilibria.len() == 1, format!("{} equilibria", report.equilibria.len()))?;
    let g = builtins::nonexistence(EPS);
    let params = nonexistence_parameters(&g, &report.equilibria[0].projection).ok_or("projection is not of the expected form")?;
    let err = params.iter().zip(expected_parameters()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-9, format!("parameters {params:?}"))?;
    Ok(format!("1 equilibrium, parameter error {err:.1e}"))
}

fn value_table() -> Result<String, String> {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let cases = [
        ([0.0, 0.0], EPS / 2.0),
        ([0.5, 0.0], EPS / 4.0 + 0.5),
        ([0.0, 0.5], 3.0 * EPS / 4.0 + 0.5),
        ([1.0, 0.0], 0.5),
        ([0.0, 1.0], EPS + 0.5),
        ([1.0 / 3.0, 1.0 / 3.0], EPS / 2.0 + 2.0 / 3.0),
        ([1.0, 1.0], EPS / 2.0),
    ];
    let mut worst: f64 = 0.0;
    for (p, expected) in cases {
        let profile = reference::nonexistence_profile(&g, &sp, p, [0.5, 0.5]);
        let br = best_response(&g, &sp, &profile, 1, CAP).map_err(|e| e.to_string())?;
        let err = (-br.value - expected).abs();
        ensure(err <= 1e-9, format!("p={p:?}: {} vs {expected}", -br.value))?;
        worst = worst.max(err);
    }
    Ok(format!("7 points, max error {worst:.1e}"))
}

fn cib_nonexistence() -> Result<String, String> {
    let (code, json) = cli(&["solve", "--builtin", "nonexistence", "--param", "eps=0.1", "--mode", "cib"], "cib.json")?;
    ensure(code == 3, format!("exit {code}"))?;
    let t = json["obstruction"]["t"].as_i64();
    ensure(t == Some(3), format!("obstruction at {t:?}"))?;
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    match certify_nonexistence_tiny(&g, &sp, Budgets::default()).map_err(|e| e.to_string())? {
        Certification::CertifiedNone { .. } => Ok("exit 3, obstruction at t=3, certified none".into()),
        other => Err(format!("{other:?}")),
    }
}

fn spib_existence() -> Result<String, String> {
    let (code, json) = cli(&["solve", "--builtin", "nonexistence", "--param", "eps=0.1", "--mode", "spib"], "spib.json")?;
    ensure(code == 0, format!("exit {code}"))?;
    let sol: SpibSolution = serde_json::from_value(json).map_err(|e| e.to_string())?;
    let eps = sol.verifier_report.epsilon;
    ensure(eps <= 1e-6, format!("epsilon {eps}"))?;
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let proj = agent_projection(&g, &sp, &sol.strategies(), CAP).map_err(|e| e.to_string())?;
    let params = nonexistence_parameters(&g, &proj).ok_or("projection is not of the expected form")?;
    let err = params.iter().zip(expected_parameters()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-3, format!("parameters {params:?}"))?;
    Ok(format!("epsilon {eps:.1e}, parameter error {err:.1e}"))
}

fn guessing_certificate() -> Result<String, String> {
    let g = builtins::guessing();
    let sp = spaces(&g);
    let cert = nash_gap(&g, &sp, &reference::guessing_equilibrium(&g, &sp), Budgets::default()).map_err(|e| e.to_string())?;
    let (ja, jb) = (cert.teams[0].payoff, cert.teams[1].payoff);
    ensure(cert.epsilon <= 1e-9, format!("epsilon {}", cert.epsilon))?;
    ensure(ja.abs() <= 1e-12 && (jb - 1.0).abs() <= 1e-12, format!("payoffs {ja} {jb}"))?;
    Ok(format!("epsilon {:.1e}, J = ({ja}, {jb})", cert.epsilon))
}

fn communication_certificate() -> Result<String, String> {
    let g = builtins::guessing_communication();
    let sp = spaces(&g);
    let profile = reference::communication_equilibrium(&g, &sp);
    let cert = nash_gap(&g, &sp, &profile, Budgets::default()).map_err(|e| e.to_string())?;
    let ja = cert.teams[0].payoff;
    ensure(cert.epsilon <= 1e-9, format!("epsilon {}", cert.epsilon))?;
    ensure((ja - 1.75).abs() <= 1e-12, format!("J^A {ja}"))?;
    Ok(format!("epsilon {:.1e}, J^A = {ja}", cert.epsilon))
}

fn caught(f: impl FnOnce() -> usize) -> Result<usize, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
    })
}

fn belief_oracle() -> Result<String, String> {
    let a = caught(|| checks::private_beliefs(7, 20))?;
    let b = caught(|| checks::consistent_updates(7, 20))?;
    let c = caught(|| checks::factorization(7, 20))?;
    Ok(format!("{a} private, {b} update, {c} factorization checks"))
}

fn conversions() -> Result<String, String> {
    let a = caught(|| checks::pure_coordination(3, 10))?;
    let b = caught(|| checks::behavioral_mixed(3, 10))?;
    Ok(format!("{a} pure, {b} behavioral comparisons"))
}

fn special_cases() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut s = shape(2, 2, 2, 3);
        s.observations = 2;
        let g = random::signaling_free(seed, &s).map_err(|e| e.to_string())?;
        let sp = spaces(&g);
        let sol = solve_signaling_free(&g, &sp, Budgets::default(), true).map_err(|e| e.to_string())?;
        let eps = sol.verifier_report.as_ref().unwrap().epsilon;
        ensure(eps <= 1e-6, format!("signaling-free seed {seed}: {eps}"))?;
        worst = worst.max(eps);
    }
    for seed in 0..10 {
        let mut s = shape(2, 2, 2, 2);
        s.observations = 2;
        let g = random::layered(seed, &s).map_err(|e| e.to_string())?;
        let sp = spaces(&g);
        let CibOutcome::Solved(sol) = solve_layered(&g, &sp, &CibConfig::default()).map_err(|e| e.to_string())? else {
            return Err(format!("layered seed {seed}: no fixed point"));
        };
        let eps = sol.verifier_report.as_ref().unwrap().epsilon;
        ensure(eps <= 1e-6, format!("layered seed {seed}: {eps}"))?;
        worst = worst.max(eps);
    }
    Ok(format!("20 games, max epsilon {worst:.1e}"))
}

fn sufficiency() -> Result<String, String> {
    let n = caught(|| checks::spi_sufficiency(7, 20))?;
    Ok(format!("{n} best responses"))
}

fn main() {
    let criteria: [(&str, Check, Duration); 10] = [
        ("unique BNE of the three-stage game", unique_bne, Duration::from_secs(1)),
        ("best-response value table", value_table, Duration::from_secs(5)),
        ("CIB non-existence", cib_nonexistence, Duration::from_secs(10)),
        ("SPIB existence and accuracy", spib_existence, Duration::from_secs(30)),
        ("guessing game certificate", guessing_certificate, Duration::from_secs(5)),
        ("communication game certificate", communication_certificate, Duration::from_secs(10)),
        ("belief oracle equivalence", belief_oracle, Duration::from_secs(120)),
        ("strategy conversions", conversions, Duration::from_secs(60)),
        ("special-case existence", special_cases, Duration::from_secs(120)),
        ("SPI sufficiency", sufficiency, Duration::from_secs(120)),
    ];
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|m| {
            if took <= *limit {
                Ok(m)
            } else {
                Err(format!("{m}; over the {}s limit", limit.as_secs()))
            }
        });
        match result {
            Ok(m) => println!("criterion {:>2} PASS  {name} ({:.2}s): {m}", k + 1, took.as_secs_f64()),
            Err(m) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({:.2}s): {m}", k + 1, took.as_secs_f64());
            }
        }
    }
    std::panic::set_hook(hook);
    let _ = std::fs::remove_dir_all(scratch_dir());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
