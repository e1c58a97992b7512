//! Acceptance criteria 1 to 10. Each test prints one `criterion N: PASS|FAIL` line
//! to stderr (visible without `--nocapture`) and then asserts.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use saea::ea::AlgorithmParams;
use saea::fitness::{Benchmark, BenchmarkKind, Fitness};
use saea::harness::{self, run_batch, scaling_study, ExperimentConfig};
use saea::mutation::MutationSpec;
use saea::probe::{
    estimate_lambda_drift, estimate_level_probs, exact_level_probs_bruteforce, fitness_loss_frequency,
    HardnessProbe, Verdict,
};
use saea::rng::RngStream;
use saea::theory::TheoryContext;
use saea::Bitstring;

fn report(id: u32, ok: bool, detail: &str) {
    let line = format!(
        "criterion {id}: {} {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {id} failed: {detail}");
}

fn params(s: f64, f: f64) -> AlgorithmParams {
    AlgorithmParams {
        success_rate: s,
        update_strength: f,
        ..AlgorithmParams::default()
    }
}

fn config(kind: BenchmarkKind, n: usize, p: AlgorithmParams, trials: u64, budget: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        params: p,
        trials,
        budget_evals: budget,
        base_seed: seed,
        ..ExperimentConfig::new(kind, n)
    }
}

#[test]
fn criterion_01_leadingones_scaling() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for s in [1.0, 4.0] {
        let cfg = config(BenchmarkKind::LeadingOnes, 64, params(s, 1.5), 50, 100_000_000, 1);
        let table = scaling_study(&cfg, &[64, 128, 256], None).unwrap();
        let slope = table.evaluation_slope(None).unwrap();
        let ratios: Vec<f64> = table.rows.iter().map(|r| r.gen_per_n).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
        let all_success = table.rows.iter().all(|r| r.success_rate == 1.0);
        ok &= all_success && (1.7..=2.3).contains(&slope) && spread <= 0.3;
        detail += &format!(
            "[s={s}: success={all_success} slope={slope:.3} gen/n={ratios:.3?} max dev={:.1}%] ",
            spread * 100.0
        );
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    detail += &format!("runtime={secs:.1}s");
    report(1, ok, &detail);
}

#[test]
fn criterion_02_success_rate_robustness() {
    let mut medians = Vec::new();
    let mut all_success = true;
    for s in [0.5, 1.0, 4.0, 8.0] {
        let b = run_batch(&config(BenchmarkKind::LeadingOnes, 128, params(s, 1.5), 20, 100_000_000, 2)).unwrap();
        all_success &= b.summary.success_rate == 1.0;
        medians.push(b.summary.evaluations.median);
    }
    let spread = medians.iter().copied().fold(0.0, f64::max) / medians.iter().copied().fold(f64::INFINITY, f64::min);

    let hard = run_batch(&config(BenchmarkKind::OneMax, 100, params(18.0, 1.5), 20, 1_000_000, 3)).unwrap();
    let easy = run_batch(&config(BenchmarkKind::OneMax, 100, params(0.5, 1.5), 20, 1_000_000, 3)).unwrap();
    let ok = all_success
        && spread <= 4.0
        && hard.summary.success_rate <= 0.1
        && easy.summary.success_rate == 1.0;
    report(
        2,
        ok,
        &format!(
            "LO n=128 success={all_success} medians={medians:.0?} spread={spread:.2}; \
             OneMax n=100 s=18 success={} s=0.5 success={}",
            hard.summary.success_rate, easy.summary.success_rate
        ),
    );
}

#[test]
fn criterion_03_onemaxblocks_dial() {
    let n = 256;
    let cfg = config(BenchmarkKind::OneMaxBlocks, n, AlgorithmParams::default(), 50, 100_000_000, 4);
    let table = scaling_study(&cfg, &[n], Some(&[1, 4, 16])).unwrap();
    let med: Vec<f64> = table.rows.iter().map(|r| r.median_evaluations).collect();
    let decreasing = med.windows(2).all(|w| w[1] < w[0]);
    // n² ln k / k with its constant fitted at k = 4
    let pred = |k: f64| k.ln() / k;
    let predicted = med[1] * pred(16.0) / pred(4.0);
    let factor = med[2] / predicted;
    let within = (1.0 / 3.0..=3.0).contains(&factor);
    let gen_ok = table.rows.iter().all(|r| r.gen_per_n <= 10.0);
    let success = table.rows.iter().all(|r| r.success_rate == 1.0);
    let gpn: Vec<f64> = table.rows.iter().map(|r| r.gen_per_n).collect();
    report(
        3,
        decreasing && within && gen_ok && success,
        &format!(
            "medians(k=1,4,16)={med:.0?} decreasing={decreasing} k=16 observed/predicted={factor:.3} \
             gen/n={gpn:.2?} success={success}"
        ),
    );
}

#[test]
fn criterion_04_small_rate_makes_onemax_hard() {
    let n = 64;
    let p = AlgorithmParams {
        mutation: MutationSpec::with_rate((n as f64).powf(-1.5)),
        ..params(18.0, 1.5)
    };
    let b = run_batch(&config(BenchmarkKind::OneMax, n, p, 20, 100_000_000, 5)).unwrap();
    // The contrast case of criterion 2 at rate 1/n, on the same n.
    let contrast = run_batch(&config(BenchmarkKind::OneMax, n, params(18.0, 1.5), 20, 1_000_000, 5)).unwrap();
    report(
        4,
        b.summary.success_rate == 1.0 && contrast.summary.success_rate <= 0.1,
        &format!(
            "rate n^-1.5 success={} median evals={:.0}; rate 1/n success={}",
            b.summary.success_rate, b.summary.evaluations.median, contrast.summary.success_rate
        ),
    );
}

#[test]
fn criterion_05_lambda_drift() {
    let f = Benchmark::leadingones(128).unwrap();
    let cond = 128f64.powf(0.45);
    let mut ok = true;
    let mut detail = format!("condition lambda <= {cond:.3}; ");
    for s in [1.0, 4.0] {
        let est = estimate_lambda_drift(&f, &params(s, 1.5), cond, 10_000, 6).unwrap();
        let pass = est.complete
            && est.samples >= 10_000
            && est.mean_drift >= 1.0 / (4.0 * s)
            && est.mean_drift - est.half_width > 0.0;
        ok &= pass;
        detail += &format!(
            "[s={s}: drift={:.4} ± {:.4} over {} generations, need >= {:.4}] ",
            est.mean_drift,
            est.half_width,
            est.samples,
            1.0 / (4.0 * s)
        );
    }
    report(5, ok, &detail);
}

#[test]
fn criterion_06_quasi_elitism_above_lambda_safe() {
    let f = Benchmark::leadingones(128).unwrap();
    let p = AlgorithmParams::default();
    let ctx = TheoryContext::for_benchmark(&f, &p).unwrap();
    let safe = ctx.lambda_safe().unwrap();
    let freq = fitness_loss_frequency(&f, &p, safe, 100_000, 10_000, 100_000_000, 7).unwrap();
    let frac = freq.fraction();
    report(
        6,
        freq.generations >= 100_000 && frac <= 0.01,
        &format!(
            "lambda_safe={safe:.2}; {} losses in {} generations ({:.4}%)",
            freq.losses,
            freq.generations,
            frac * 100.0
        ),
    );
}

#[test]
fn criterion_07_bound_domination() {
    let mut violations = Vec::new();
    let mut detail = String::new();
    for n in [32usize, 64] {
        let f = Benchmark::leadingones(n).unwrap();
        let comma = AlgorithmParams::default();
        let ctx = TheoryContext::for_benchmark(&f, &comma).unwrap();
        let exact_p_min = (1.0 / n as f64) * (1.0 - 1.0 / n as f64).powi(n as i32 - 1);
        assert!((ctx.p_min - exact_p_min).abs() <= 1e-15 * exact_p_min);

        let mut cfg = config(BenchmarkKind::LeadingOnes, n, comma, 100, 100_000_000, 8);
        cfg.trajectory_stride = 1;
        let b = run_batch(&cfg).unwrap();
        let gen_bound = ctx.generation_bound();
        if b.summary.success_rate < 1.0 || b.summary.generations.mean > gen_bound {
            violations.push(format!("n={n} generations"));
        }

        // Mean λ_t over all trials, for every t that all trials reach.
        let horizon = b.records.iter().map(|r| r.generations).min().unwrap() as usize;
        let mut worst = 0.0f64;
        for t in 0..=horizon {
            let mean = b.records.iter().map(|r| r.trajectory[t].lambda).sum::<f64>() / b.records.len() as f64;
            let bound = ctx.expected_lambda_bound(t as u64, 1.0);
            worst = worst.max(mean / bound);
            if mean > bound {
                violations.push(format!("n={n} lambda at t={t}"));
            }
        }

        let elitist = AlgorithmParams {
            elitist: true,
            ..comma
        };
        let eb = run_batch(&config(BenchmarkKind::LeadingOnes, n, elitist, 100, 100_000_000, 9)).unwrap();
        let e_bound = ctx.elitist_evaluation_bound(0, n, 1.0).unwrap();
        if eb.summary.success_rate < 1.0 || eb.summary.evaluations.mean > e_bound {
            violations.push(format!("n={n} elitist evaluations"));
        }
        detail += &format!(
            "[n={n}: gens {:.1}/{gen_bound:.1}, elitist evals {:.0}/{e_bound:.0}, \
             max E[lambda_t]/bound {worst:.3} over t<={horizon}] ",
            b.summary.generations.mean, eb.summary.evaluations.mean
        );
    }
    detail += &format!("violations={violations:?}");
    report(7, violations.is_empty(), &detail);
}

mod oracle {
    pub fn onemax(x: &[u8]) -> usize {
        x.iter().filter(|&&b| b == 1).count()
    }

    pub fn leadingones(x: &[u8]) -> usize {
        (1..=x.len()).map(|i| x[..i].iter().map(|&b| b as usize).product::<usize>()).sum()
    }

    /// Written out from the definition: full blocks of leading ones, plus the
    /// ones of the first incomplete block, or n at the optimum.
    pub fn onemaxblocks(x: &[u8], k: usize) -> usize {
        let n = x.len();
        if onemax(x) == n {
            return n;
        }
        let blocks = n / k;
        let full = (0..blocks)
            .take_while(|&b| x[b * k..(b + 1) * k].iter().all(|&v| v == 1))
            .count();
        full * k + onemax(&x[full * k..(full + 1) * k])
    }
}

fn bits_of(index: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((index >> i) & 1) as u8).collect()
}

#[test]
fn criterion_08_oracle_equivalence() {
    let mut mismatches = 0u64;
    let mut checked = 0u64;
    for n in 1..=12usize {
        let om = Benchmark::onemax(n).unwrap();
        let lo = Benchmark::leadingones(n).unwrap();
        for i in 0..1u64 << n {
            let x = Bitstring::from_index(i, n);
            let raw = bits_of(i, n);
            mismatches += (om.evaluate(&x) != oracle::onemax(&raw)) as u64;
            mismatches += (lo.evaluate(&x) != oracle::leadingones(&raw)) as u64;
            checked += 2;
        }
    }
    for k in [1usize, 2, 3, 4, 6, 12] {
        let f = Benchmark::onemaxblocks(12, k).unwrap();
        for i in 0..1u64 << 12 {
            let x = Bitstring::from_index(i, 12);
            mismatches += (f.evaluate(&x) != oracle::onemaxblocks(&bits_of(i, 12), k)) as u64;
            checked += 1;
        }
    }

    let n = 10;
    let functions = [
        Benchmark::onemax(n).unwrap(),
        Benchmark::leadingones(n).unwrap(),
        Benchmark::onemaxblocks(n, 5).unwrap(),
    ];
    let spec = MutationSpec::default();
    let mut rng = RngStream::new(10);
    let (mut agree, mut total) = (0u32, 0u32);
    for f in &functions {
        for _ in 0..20 {
            let x = Bitstring::random(n, &mut rng);
            let exact = exact_level_probs_bruteforce(f, &spec, &x).unwrap();
            let est = estimate_level_probs(f, &spec, &x, 20_000, &mut rng).unwrap();
            for (e, t) in [(est.p_plus, exact.p_plus), (est.p_minus, exact.p_minus)] {
                total += 1;
                agree += ((e.estimate - t.estimate).abs() <= 3.0 * e.half_width()) as u32;
            }
        }
    }
    report(
        8,
        mismatches == 0 && agree == total,
        &format!(
            "{mismatches} fitness mismatches in {checked} evaluations; \
             {agree}/{total} Monte Carlo estimates within 3 Wilson half-widths"
        ),
    );
}

#[test]
fn criterion_09_hardness_classifier() {
    let n = 256;
    let classify = |f: &Benchmark, spec: MutationSpec, eps: f64, seed: u64| {
        HardnessProbe::estimate(f, &spec, 2, 10_000, &mut RngStream::new(seed))
            .unwrap()
            .classify(eps, 2.0)
            .unwrap()
    };
    let lo = classify(&Benchmark::leadingones(n).unwrap(), MutationSpec::default(), 0.9, 11);
    let om = classify(&Benchmark::onemax(n).unwrap(), MutationSpec::default(), 0.5, 12);
    let slow = classify(
        &Benchmark::onemax(n).unwrap(),
        MutationSpec::with_rate((n as f64).powf(-1.5)),
        0.5,
        13,
    );
    let ok = lo.verdict == Verdict::Hard && om.verdict == Verdict::NotHard && slow.verdict == Verdict::Hard;
    report(
        9,
        ok,
        &format!(
            "LeadingOnes {} (max p+ {:.4}, threshold {:.4}); OneMax {} (max p+ {:.4}, threshold {:.4}); \
             OneMax at n^-1.5 {} (max p+ {:.4})",
            lo.verdict, lo.max_p_plus, lo.threshold, om.verdict, om.max_p_plus, om.threshold, slow.verdict,
            slow.max_p_plus
        ),
    );
}

fn records_without_time(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let batches = [
        (BenchmarkKind::LeadingOnes, 64, None, AlgorithmParams::default()),
        (
            BenchmarkKind::OneMaxBlocks,
            60,
            Some(4),
            AlgorithmParams {
                mutation: MutationSpec::heavy_tailed(1.5),
                ..params(4.0, 2.0)
            },
        ),
        (BenchmarkKind::OneMax, 100, None, params(18.0, 1.5)),
    ];
    for (i, (kind, n, k, p)) in batches.into_iter().enumerate() {
        let mut texts = Vec::new();
        for (rep, workers) in [(0, 1), (1, 4)] {
            let mut cfg = config(kind, n, p, 20, 200_000, 99);
            cfg.k = k;
            cfg.workers = Some(workers);
            cfg.out = Some(dir.path().join(format!("b{i}_{rep}")));
            run_batch(&cfg).unwrap();
            texts.push(records_without_time(&cfg.out.unwrap().join(harness::RECORDS_FILE)));
        }
        identical &= texts[0] == texts[1] && texts[0].lines().count() == 21;
    }
    report(10, identical, "records CSV byte-identical across repeated runs and worker counts");
}
