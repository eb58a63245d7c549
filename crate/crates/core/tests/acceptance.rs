//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line even when output is captured.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use coop_msr::bounds::node_size_table;
use coop_msr::code::{digits, from_digits};
use coop_msr::field::Field;
use coop_msr::io::{decode_shard, encode_shard};
use coop_msr::repair::{cooperative_repair, RepairPlan};
use coop_msr::{encode, mds_decode, parity_residual, CodeParams, NodeVector, Symbol};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let took = started.elapsed();
    check(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

/// Repairs every failed set in `cases` against one random codeword and
/// checks exactness plus the expected traffic.
fn repair_sweep(
    params: &CodeParams,
    cases: &[(Vec<usize>, Vec<usize>)],
    expect_total: u64,
    expect_round1: Option<u64>,
    seed: u64,
) -> Result<(), String> {
    let mut rng = rng(seed);
    let nodes = random_nodes(params, &mut rng);
    check(parity_holds(params, &nodes), || {
        "encoded codeword fails parity".into()
    })?;
    for (failed, helpers) in cases {
        let plan = RepairPlan::new(params, failed, helpers).map_err(|e| e.to_string())?;
        let surviving: Vec<Option<NodeVector>> = nodes
            .iter()
            .enumerate()
            .map(|(i, v)| (!failed.contains(&i)).then(|| v.clone()))
            .collect();
        let (repaired, transcript) =
            cooperative_repair(params, &plan, &surviving).map_err(|e| e.to_string())?;
        for (v, &i) in repaired.iter().zip(failed) {
            check(*v == nodes[i], || {
                format!("F={failed:?} R={helpers:?}: node {i} differs")
            })?;
        }
        check(transcript.total() == expect_total, || {
            format!(
                "F={failed:?} R={helpers:?}: total {} != {expect_total}",
                transcript.total()
            )
        })?;
        if let Some(r1) = expect_round1 {
            check(transcript.round_total(1) == r1, || {
                format!(
                    "F={failed:?} R={helpers:?}: round1 {} != {r1}",
                    transcript.round_total(1)
                )
            })?;
        }
    }
    Ok(())
}

fn all_cases(n: usize, h: usize, d: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for f in subsets(n, h) {
        let rest = complement(n, &f);
        for pick in subsets(rest.len(), d) {
            out.push((f.clone(), pick.iter().map(|&j| rest[j]).collect()));
        }
    }
    out
}

fn exact(frac: (u64, u64)) -> u64 {
    assert_eq!(frac.0 % frac.1, 0, "bound is not an integer");
    frac.0 / frac.1
}

fn mds_sweep() -> Outcome {
    let started = Instant::now();
    let p = CodeParams::new(6, 3, 2, 4).map_err(|e| e.to_string())?;
    let mut rng = rng(1);
    let msg = random_message(&p, &mut rng);
    let cw = encode(&p, &msg).map_err(|e| e.to_string())?;
    check(parity_holds(&p, cw.nodes()), || "parity".into())?;
    let sets = subsets(6, 3);
    for set in &sets {
        let avail: Vec<_> = set.iter().map(|&i| (i, cw.node(i).clone())).collect();
        let got = mds_decode(&p, &avail).map_err(|e| e.to_string())?;
        check(got == cw, || format!("decode from {set:?} differs"))?;
    }
    within(started, Duration::from_secs(5))?;
    Ok(format!(
        "{} subsets decoded in {:?}",
        sets.len(),
        started.elapsed()
    ))
}

fn repair_6_3_2_4() -> Outcome {
    let started = Instant::now();
    let p = CodeParams::new(6, 3, 2, 4).map_err(|e| e.to_string())?;
    let cases = all_cases(6, 2, 4);
    check(cases.len() == 15, || format!("{} cases", cases.len()))?;
    let co = exact(co_bound(3, p.l() as u64, 2, 4));
    let ce = exact(ce_bound(3, p.l() as u64, 2, 4));
    check(co == 640 && ce == 512, || format!("bounds {co}/{ce}"))?;
    repair_sweep(&p, &cases, co, Some(ce), 2)?;
    within(started, Duration::from_secs(10))?;
    Ok(format!("15 pairs exact, total {co}, round1 {ce}"))
}

fn repair_5_2_2_3() -> Outcome {
    let p = CodeParams::new(5, 2, 2, 3).map_err(|e| e.to_string())?;
    check(p.l() == 96, || format!("l = {}", p.l()))?;
    let cases = all_cases(5, 2, 3);
    check(cases.len() == 10, || format!("{} cases", cases.len()))?;
    let want = 2 * (2 + 2) * (1u64 << 5);
    check(exact(co_bound(2, 96, 2, 3)) == want, || "co bound".into())?;
    repair_sweep(&p, &cases, want, None, 3)?;
    Ok(format!("10 pairs exact, total {want}"))
}

fn repair_7_3_3_4() -> Outcome {
    let started = Instant::now();
    let p = CodeParams::new(7, 3, 3, 4).map_err(|e| e.to_string())?;
    check(p.l() == 512, || format!("l = {}", p.l()))?;
    let cases = all_cases(7, 3, 4);
    let want = exact(co_bound(3, 512, 3, 4));
    check(want == 2304, || format!("co bound {want}"))?;
    repair_sweep(&p, &cases, want, None, 4)?;
    within(started, Duration::from_secs(60))?;
    Ok(format!(
        "{} pairs exact, total {want} in {:?}",
        cases.len(),
        started.elapsed()
    ))
}

fn repair_5_2_3_2() -> Outcome {
    let p = CodeParams::new(5, 2, 3, 2).map_err(|e| e.to_string())?;
    check(p.l() == 3, || format!("l = {}", p.l()))?;
    let cases = all_cases(5, 3, 2);
    let want = exact(co_bound(2, 3, 3, 2));
    check(want == 12, || format!("co bound {want}"))?;
    repair_sweep(&p, &cases, want, None, 5)?;
    Ok(format!("{} pairs exact, total {want}", cases.len()))
}

fn node_size_and_bounds() -> Outcome {
    let mut accepted = 0;
    for n in 2..=8usize {
        for k in 1..n {
            for d in k..n {
                for h in 1..=n - d {
                    let p = match CodeParams::new(n, k, h, d) {
                        Ok(p) => p,
                        Err(coop_msr::Error::SizeGuard { .. }) => continue,
                        Err(e) => return Err(format!("({n},{k},{h},{d}) rejected: {e}")),
                    };
                    let want = (h + d - k) * (d - k + 1).pow(n as u32);
                    check(p.l() == want, || {
                        format!("({n},{k},{h},{d}) l={} want {want}", p.l())
                    })?;
                    let table = node_size_table(n as u64, k as u64, h as u64, d as u64)
                        .map_err(|e| e.to_string())?;
                    check(table.replicated.exact() == Some(want as u128), || {
                        format!("({n},{k},{h},{d}) table disagrees")
                    })?;
                    accepted += 1;
                }
            }
        }
    }
    for bad in [(4, 2, 2, 3), (5, 3, 1, 2), (3, 3, 1, 3), (4, 2, 0, 3)] {
        check(CodeParams::new(bad.0, bad.1, bad.2, bad.3).is_err(), || {
            format!("{bad:?} accepted")
        })?;
    }

    let mut out = Vec::new();
    coop_msr::cli::run(
        [
            "coop-msr", "bounds", "--n", "6", "--k", "3", "--h", "2", "--d", "4",
        ],
        &mut out,
    )
    .map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).map_err(|e| e.to_string())?;
    let line = text
        .lines()
        .find(|l| l.starts_with("#CHECK log2_lcm="))
        .ok_or("no log2 line")?;
    let vals: Vec<f64> = line
        .split_whitespace()
        .skip(1)
        .map(|kv| kv.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    let want = [6.0 * 6f64.log2(), 15.0 * 3f64.log2(), 192f64.log2()];
    for (got, want) in vals.iter().zip(want) {
        check((got - want).abs() < 5e-7, || {
            format!("log2 {got} != {want}")
        })?;
    }
    check(text.contains("#CHECK co=640 ce=512 naive=1152"), || {
        "bounds line".into()
    })?;
    Ok(format!(
        "{accepted} parameter sets; log2 columns {:?}",
        vals
    ))
}

fn properties() -> Outcome {
    let f = Field::new(4).map_err(|e| e.to_string())?;
    for a in 0..16u16 {
        check(
            f.add(a, 0) == a && f.mul(a, 1) == a && f.mul(a, 0) == 0,
            || "identities".into(),
        )?;
        if a != 0 {
            check(f.mul(a, f.inv(a).unwrap()) == 1, || {
                format!("inverse of {a}")
            })?;
        }
        for b in 0..16u16 {
            check(
                f.add(a, b) == f.add(b, a) && f.mul(a, b) == f.mul(b, a),
                || "commutativity".into(),
            )?;
            for c in 0..16u16 {
                check(f.mul(a, f.mul(b, c)) == f.mul(f.mul(a, b), c), || {
                    "associativity".into()
                })?;
                check(
                    f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)),
                    || "distributivity".into(),
                )?;
            }
        }
    }

    let p = CodeParams::new(6, 3, 2, 4).map_err(|e| e.to_string())?;
    let mut rng = rng(7);
    for _ in 0..100 {
        let x = random_message(&p, &mut rng);
        let y = random_message(&p, &mut rng);
        let sum: Vec<Symbol> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let cx = encode(&p, &x).unwrap();
        let cy = encode(&p, &y).unwrap();
        check(encode(&p, &sum).unwrap() == cx.add(&cy), || {
            "linearity".into()
        })?;
    }
    for _ in 0..100 {
        let nodes = random_nodes(&p, &mut rng);
        check(parity_residual(&p, &nodes).unwrap().is_zero(), || {
            "residual".into()
        })?;
    }
    for _ in 0..1000 {
        let s = rng.gen_range(1..=5usize);
        let n = rng.gen_range(1..=8usize);
        let a = rng.gen_range(0..s.pow(n as u32));
        let ds = digits(a, s, n).unwrap();
        check(from_digits(&ds, s).unwrap() == a, || {
            format!("digits of {a} base {s}")
        })?;
    }
    for _ in 0..100 {
        let node = rng.gen_range(0..p.n());
        let data: Vec<Symbol> = (0..p.l())
            .map(|_| rng.gen_range(0..p.field().order()) as Symbol)
            .collect();
        let v = NodeVector::from_symbols(p.span(), data).unwrap();
        let bytes = encode_shard(&p, node, &v).unwrap();
        check(decode_shard(&p, &bytes).unwrap() == (node, v), || {
            "shard round trip".into()
        })?;
    }
    Ok("field axioms, 100 linearity, 100 residual, 1000 digits, 100 shards".into())
}

fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = dir.path().join("p.toml");
    let bin = env!("CARGO_BIN_EXE_coop-msr");
    let gen = std::process::Command::new(bin)
        .args([
            "gen", "--n", "6", "--k", "3", "--h", "2", "--d", "4", "--out",
        ])
        .arg(&params)
        .output()
        .map_err(|e| e.to_string())?;
    check(gen.status.success(), || {
        String::from_utf8_lossy(&gen.stderr).into_owned()
    })?;
    let run = || -> Result<Vec<String>, String> {
        let out = std::process::Command::new(bin)
            .args(["bench", "--trials", "20", "--seed", "7", "--params"])
            .arg(&params)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        Ok(String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| l.starts_with("#CHECK"))
            .map(String::from)
            .collect())
    };
    let (a, b) = (run()?, run()?);
    check(a == b, || "#CHECK lines differ between runs".into())?;
    check(a.len() == 21, || format!("{} #CHECK lines", a.len()))?;
    check(
        a.last().map(String::as_str) == Some("#CHECK trials=20 failures=0"),
        || "failures".into(),
    )?;
    Ok("20 trials, identical #CHECK lines across two runs".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("mds-any-k-of-n (6,3,2,4)", mds_sweep),
        ("repair-all-pairs (6,3,2,4)", repair_6_3_2_4),
        ("repair-all-pairs (5,2,2,3)", repair_5_2_2_3),
        ("repair-sweep (7,3,3,4)", repair_7_3_3_4),
        ("repair-exhaustive (5,2,3,2)", repair_5_2_3_2),
        ("node-size-and-bounds", node_size_and_bounds),
        ("property-suite", properties),
        ("bench-determinism", bench_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
