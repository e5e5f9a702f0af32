//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use evidx::bpa::EvidenceItemId;
use evidx::combination::{combine, combine_all, dempster_combine, fast_combine_via_commonality, CombinationError};
use evidx::eval::{
    classify_match, compare_methods, pair_reports, CaseTrace, CategoryCounts, EvaluationReport, MatchCategory,
};
use evidx::expert::{all_modify, part_modify, ExpertBpaTable};
use evidx::extraction::{method1_consonant, method2, method3, Method3Variant, Remainder};
use evidx::pipeline::{run_pipeline, PipelineConfig, PipelineInputs};
use evidx::prune::{prune_components, CorrelationGraph, ParameterGroup, PruneRule};
use evidx::synth::{self, SynthConfig};
use evidx::{Bpa, Frame, Mass, SubsetMask};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn labels(n: usize) -> Frame {
    Frame::new((0..n).map(|i| format!("o{i}"))).unwrap()
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn random_freq(rng: &mut ChaCha8Rng, n: usize, zero_rate: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(zero_rate) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|v| v / total).collect();
        }
    }
}

fn random_mass(rng: &mut ChaCha8Rng, f: &Frame, max_foci: usize) -> Mass {
    let sets = f.powerset_size() - 1;
    let k = rng.random_range(1..=max_foci.min(sets));
    let mut foci = BTreeSet::new();
    while foci.len() < k {
        foci.insert(rng.random_range(1..=sets) as u32);
    }
    let w: Vec<f64> = foci.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    Mass::new(f, foci.iter().zip(&w).map(|(&m, &x)| (SubsetMask(m), x / total))).unwrap()
}

// Dense Dempster combination over the full power set.
fn brute_force(a: &Mass, b: &Mass) -> Option<(Vec<f64>, f64)> {
    let size = a.frame().powerset_size();
    let da = a.to_dense();
    let db = b.to_dense();
    let mut out = vec![0.0; size];
    for x in 0..size {
        for y in 0..size {
            out[x & y] += da[x] * db[y];
        }
    }
    let k = out[0];
    if 1.0 - k <= 1e-12 {
        return None;
    }
    out[0] = 0.0;
    Some((out.iter().map(|v| v / (1.0 - k)).collect(), k))
}

fn dense_diff(m: &Mass, dense: &[f64]) -> f64 {
    m.to_dense()
        .iter()
        .zip(dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn consonant_extraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for trial in 0..1000 {
        let n = rng.random_range(2..=14);
        let f = labels(n);
        let freq = random_freq(&mut rng, n, 0.2);
        let m = method1_consonant(&f, &freq).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure!((m.total() - 1.0).abs() <= 1e-9, "trial {trial}: total {}", m.total());
        let mut chain: Vec<SubsetMask> = m.focal().map(|(s, _)| s).collect();
        chain.sort_by_key(|s| s.len());
        ensure!(
            chain.windows(2).all(|w| w[0].is_subset_of(w[1])),
            "trial {trial}: foci not nested"
        );
        ensure!(m.is_consonant(), "trial {trial}: not reported consonant");
        let top = freq.iter().cloned().fold(0.0, f64::max);
        for (i, &fi) in freq.iter().enumerate().filter(|(_, v)| **v > 0.0) {
            let pl = m.plausibility(f.singleton(i)).unwrap();
            ensure!(
                (pl - fi / top).abs() <= 1e-12,
                "trial {trial}: Pl({i}) = {pl}, want {}",
                fi / top
            );
        }
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("1000 vectors, n in 2..=14, {:?}", start.elapsed()))
}

fn combination_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();

    for n in 1..=6 {
        let f = labels(n);
        let vac = Mass::vacuous(&f);
        for _ in 0..50 {
            let m = random_mass(&mut rng, &f, 6);
            let out = dempster_combine(&m, &vac).unwrap();
            ensure!(
                out.combined == m && out.conflict == 0.0,
                "vacuous identity broken on n = {n}"
            );
            let out = dempster_combine(&vac, &m).unwrap();
            ensure!(
                out.combined == m && out.conflict == 0.0,
                "vacuous identity broken on n = {n}"
            );
        }
    }

    let mut commuted = 0;
    for _ in 0..500 {
        let f = labels(rng.random_range(2..=8));
        let (a, b) = (random_mass(&mut rng, &f, 8), random_mass(&mut rng, &f, 8));
        match (dempster_combine(&a, &b), dempster_combine(&b, &a)) {
            (Ok(x), Ok(y)) => {
                ensure!(x.combined.max_abs_diff(&y.combined) <= 1e-12, "commutativity");
                ensure!((x.conflict - y.conflict).abs() <= 1e-12, "commutativity of conflict");
                commuted += 1;
            }
            (Err(_), Err(_)) => {}
            _ => return Err("total conflict detected in one order only".into()),
        }
    }

    let mut associated = 0;
    for _ in 0..500 {
        let f = labels(rng.random_range(2..=8));
        let [a, b, c] = [0; 3].map(|_| random_mass(&mut rng, &f, 6));
        let left = dempster_combine(&a, &b).and_then(|ab| dempster_combine(&ab.combined, &c));
        let right = dempster_combine(&b, &c).and_then(|bc| dempster_combine(&a, &bc.combined));
        if let (Ok(l), Ok(r)) = (left, right) {
            ensure!(l.combined.max_abs_diff(&r.combined) <= 1e-9, "associativity");
            associated += 1;
        }
    }

    let mut oracle_pairs = 0;
    for n in 1..=4 {
        let f = labels(n);
        let sets = f.powerset_size() as u32;
        for x in 1..sets {
            for y in 1..sets {
                for (wa, wb) in [(1.0, 1.0), (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9))] {
                    let a = Mass::simple_support(&f, SubsetMask(x), wa).unwrap();
                    let b = Mass::simple_support(&f, SubsetMask(y), wb).unwrap();
                    check_against_oracle(&a, &b)?;
                    oracle_pairs += 1;
                }
            }
        }
        for _ in 0..500 {
            let a = random_mass(&mut rng, &f, 15);
            let b = random_mass(&mut rng, &f, 15);
            check_against_oracle(&a, &b)?;
            oracle_pairs += 1;
        }
    }

    for n in 1..=6 {
        let f = labels(n);
        for _ in 0..100 {
            let k = rng.random_range(2..=5);
            let ms: Vec<Mass> = (0..k).map(|_| random_mass(&mut rng, &f, 10)).collect();
            match (combine_all(&ms), fast_combine_via_commonality(&ms)) {
                (Ok(slow), Ok(fast)) => {
                    ensure!(
                        slow.combined.max_abs_diff(&fast.combined) <= 1e-9,
                        "commonality path on n = {n}"
                    );
                    ensure!(
                        (slow.conflict - fast.conflict).abs() <= 1e-9,
                        "commonality conflict on n = {n}"
                    );
                }
                (
                    Err(CombinationError::TotalConflict { step: s1 }),
                    Err(CombinationError::TotalConflict { step: s2 }),
                ) => {
                    ensure!(s1 == s2, "total conflict located at {s1:?} vs {s2:?}");
                }
                (x, y) => return Err(format!("paths disagree: {:?} vs {:?}", x.is_ok(), y.is_ok())),
            }
        }
    }
    within(Duration::from_secs(30), start.elapsed())?;
    Ok(format!(
        "{commuted} commuted, {associated} associated, {oracle_pairs} oracle pairs, {:?}",
        start.elapsed()
    ))
}

fn check_against_oracle(a: &Mass, b: &Mass) -> Result<(), String> {
    match (dempster_combine(a, b), brute_force(a, b)) {
        (Ok(out), Some((dense, k))) => {
            ensure!(dense_diff(&out.combined, &dense) <= 1e-12, "sparse vs dense masses");
            ensure!((out.conflict - k).abs() <= 1e-12, "sparse vs dense conflict");
            Ok(())
        }
        (Err(CombinationError::TotalConflict { .. }), None) => Ok(()),
        (x, y) => Err(format!(
            "total conflict disagreement: sparse ok = {}, dense ok = {}",
            x.is_ok(),
            y.is_some()
        )),
    }
}

fn expert_golden() -> Check {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let generated = Bpa::load(&data.join("aalb_generated.json")).map_err(|e| e.to_string())?;
    let expert = ExpertBpaTable::<f64>::load(&data.join("aalb_expert.json")).map_err(|e| e.to_string())?;
    for (name, out) in [
        ("aalb_part.json", part_modify(&generated, &expert)),
        ("aalb_all.json", all_modify(&generated, &expert)),
    ] {
        let got = out.map_err(|e| e.to_string())?.to_json();
        let want = std::fs::read_to_string(data.join(name)).map_err(|e| e.to_string())?;
        ensure!(got == want, "{name} differs:\n{got}");
    }
    Ok("part and all modification byte-exact".into())
}

fn simple_support_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..1000 {
        let n = rng.random_range(2..=14);
        let f = labels(n);
        // Small integer counts make ties common.
        let counts: Vec<u32> = loop {
            let c: Vec<u32> = (0..n).map(|_| rng.random_range(0..6)).collect();
            if c.iter().any(|&x| x > 0) {
                break c;
            }
        };
        let total: u32 = counts.iter().sum();
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let positive: SubsetMask = (0..n).filter(|&i| counts[i] > 0).collect();

        let a = method2(&f, &freq, Remainder::ComplementSet).map_err(|e| e.to_string())?;
        let b = method2(&f, &freq, Remainder::Theta).map_err(|e| e.to_string())?;
        for m in [&a, &b] {
            ensure!(m.focal_count() <= 3, "trial {trial}: {} foci", m.focal_count());
            ensure!((m.total() - 1.0).abs() <= 1e-9, "trial {trial}: total {}", m.total());
        }

        // The support set is the smallest union of whole frequency tiers,
        // taken from the top, holding more than half the counts.
        let mut tiers: Vec<u32> = counts.iter().copied().filter(|&c| c > 0).collect();
        tiers.sort_unstable_by(|x, y| y.cmp(x));
        tiers.dedup();
        let mut want_support = SubsetMask::EMPTY;
        for &t in &tiers {
            want_support = want_support.union((0..n).filter(|&i| counts[i] == t).collect());
            let held: u32 = want_support.members().map(|i| counts[i]).sum();
            if 2 * held > total {
                break;
            }
        }
        let held: u32 = want_support.members().map(|i| counts[i]).sum();
        let rest = SubsetMask(positive.bits() & !want_support.bits());

        ensure!(
            (a.mass(want_support) - held as f64 / total as f64).abs() <= 1e-12,
            "trial {trial}: support mass"
        );
        if rest.is_empty() {
            ensure!(
                a.focal_count() == 1 && b.focal_count() == 1,
                "trial {trial}: expected a single focus"
            );
        } else {
            let rest_mass = 1.0 - held as f64 / total as f64;
            ensure!(
                a.focal_count() == 2 && (a.mass(rest) - rest_mass).abs() <= 1e-12,
                "trial {trial}: 2A remainder"
            );
            let on_theta = if want_support == f.theta() { 1.0 } else { rest_mass };
            ensure!(
                b.focal_count() == 2 && (b.mass(f.theta()) - on_theta).abs() <= 1e-12,
                "trial {trial}: 2B remainder"
            );
        }
    }
    Ok("1000 of 1000 trials".into())
}

fn pruning_golden() -> Check {
    let graph = |nodes: &[&str], edges: &[(&str, &str, f64)]| {
        let mut g = CorrelationGraph::new(ParameterGroup::Biochemical, 0.5, nodes.iter().map(|s| s.to_string()));
        for &(a, b, r) in edges {
            g.add_edge(a, b, r);
        }
        g
    };
    let cases = [
        (
            graph(&["Q", "P"], &[("P", "Q", 0.7)]),
            vec!["P"],
            vec!["Q"],
            PruneRule::Pair,
        ),
        (
            graph(&["P", "Q", "R"], &[("P", "Q", 0.6), ("P", "R", -0.7), ("Q", "R", 0.5)]),
            vec!["P"],
            vec!["Q", "R"],
            PruneRule::UniformDegree,
        ),
        (
            graph(
                &["A", "B", "C", "D"],
                &[("A", "B", 0.8), ("A", "C", 0.7), ("A", "D", 0.6), ("B", "C", 0.55)],
            ),
            vec!["A", "B", "C"],
            vec!["D"],
            PruneRule::Hub,
        ),
    ];
    for (g, kept, removed, rule) in &cases {
        let first = prune_components(g);
        for _ in 0..10 {
            let again = prune_components(g);
            ensure!(again == first, "non-deterministic result");
            ensure!(
                again.kept().into_iter().collect::<Vec<_>>() == *kept,
                "kept {:?}, want {kept:?}",
                again.kept()
            );
            ensure!(
                again.removed().into_iter().collect::<Vec<_>>() == *removed,
                "removed {:?}, want {removed:?}",
                again.removed()
            );
            ensure!(
                again.components.len() == 1 && again.components[0].rule_applied == *rule,
                "rule applied"
            );
        }
    }
    Ok("pair, triangle and star-plus-edge, 10 runs each".into())
}

fn synthetic_experiment() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let data = synth::generate(&SynthConfig {
        outcomes: 14,
        params: 12,
        cases: 280,
        seed: 42,
        separation: 1.5,
        ..SynthConfig::default()
    });
    synth::write(&data, dir.path(), Some(40)).map_err(|e| e.to_string())?;
    let run = |method: &str| {
        let out = dir.path().join(format!("run-{}", method.replace('/', "-")));
        let config = PipelineConfig {
            method: method.into(),
            ..PipelineConfig::default()
        };
        let inputs = PipelineInputs {
            train: &dir.path().join("train.csv"),
            test: &dir.path().join("test.csv"),
            intervals: &dir.path().join("intervals.csv"),
            expert: None,
            out_dir: &out,
        };
        run_pipeline(&config, &inputs).map_err(|e| e.to_string())
    };
    let two_a = run("2a")?;
    let three = run("3")?;
    within(Duration::from_secs(10), start.elapsed())?;
    let pct = |r: &EvaluationReport| {
        r.percentages
            .ok_or_else(|| format!("method {} diagnosed nothing", r.method))
    };
    let (p2, p3) = (pct(&two_a)?, pct(&three)?);
    ensure!(p2.pm >= 50.0, "method 2a PM {:.1}% below 50%", p2.pm);
    ensure!(
        p2.nm <= p3.nm,
        "method 2a NM {:.1}% above method 3 NM {:.1}%",
        p2.nm,
        p3.nm
    );
    Ok(format!(
        "2a PM {:.1}% NM {:.1}% ({}/{}), 3 NM {:.1}% ({}/{}), {:?}",
        p2.pm,
        p2.nm,
        two_a.diagnosed,
        two_a.total_cases,
        p3.nm,
        three.diagnosed,
        three.total_cases,
        start.elapsed()
    ))
}

fn performance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = labels(14);
    let items: Vec<Mass> = (0..40)
        .map(|i| {
            let freq = random_freq(&mut rng, 14, 0.0);
            match i % 3 {
                0 => method1_consonant(&f, &freq),
                1 => method2(&f, &freq, Remainder::ComplementSet),
                _ => method2(&f, &freq, Remainder::Theta),
            }
            .unwrap()
        })
        .collect();
    let start = Instant::now();
    let out = combine(&items).map_err(|e| e.to_string())?;
    let sparse = start.elapsed();
    within(Duration::from_secs(1), sparse)?;
    ensure!(
        (out.combined.total() - 1.0).abs() <= 1e-9,
        "combined total {}",
        out.combined.total()
    );

    let start = Instant::now();
    let dense: Vec<Mass> = (0..12)
        .map(|_| method3(&f, &random_freq(&mut rng, 14, 0.1), Method3Variant::default()).unwrap())
        .collect();
    let out = fast_combine_via_commonality(&dense).map_err(|e| e.to_string())?;
    let dense_time = start.elapsed();
    within(Duration::from_secs(10), dense_time)?;
    ensure!(
        (out.combined.total() - 1.0).abs() <= 1e-9,
        "dense combined total {}",
        out.combined.total()
    );
    Ok(format!(
        "40 items in {sparse:?}; 12 dense extractions + combination in {dense_time:?}"
    ))
}

fn taxonomy() -> Check {
    use MatchCategory::{IM, NM, PM};
    let f = Frame::new(["a", "b", "c", "d"]).unwrap();
    // observed set, then the category for expected a, b, c, d.
    let table: [(&[&str], [MatchCategory; 4]); 15] = [
        (&["a"], [PM, NM, NM, NM]),
        (&["b"], [NM, PM, NM, NM]),
        (&["c"], [NM, NM, PM, NM]),
        (&["d"], [NM, NM, NM, PM]),
        (&["a", "b"], [IM, IM, NM, NM]),
        (&["a", "c"], [IM, NM, IM, NM]),
        (&["a", "d"], [IM, NM, NM, IM]),
        (&["b", "c"], [NM, IM, IM, NM]),
        (&["b", "d"], [NM, IM, NM, IM]),
        (&["c", "d"], [NM, NM, IM, IM]),
        (&["a", "b", "c"], [IM, IM, IM, NM]),
        (&["a", "b", "d"], [IM, IM, NM, IM]),
        (&["a", "c", "d"], [IM, NM, IM, IM]),
        (&["b", "c", "d"], [NM, IM, IM, IM]),
        (&["a", "b", "c", "d"], [IM, IM, IM, IM]),
    ];
    let mut seen = BTreeSet::new();
    for (observed, row) in &table {
        let mask = f.subset(observed.iter()).unwrap();
        seen.insert(mask);
        for (expected, want) in ["a", "b", "c", "d"].iter().zip(row) {
            let got = classify_match(&f, mask, expected).map_err(|e| e.to_string())?;
            ensure!(
                got == *want,
                "observed {observed:?}, expected {expected}: {got:?}, want {want:?}"
            );
        }
    }
    ensure!(seen.len() == 15, "table does not cover every non-empty set");
    ensure!(
        classify_match(&f, f.singleton(0), "e").is_err(),
        "unknown label accepted"
    );
    Ok("60 of 60 pairs".into())
}

// Exact two-sided tail by enumeration of binomial coefficients.
fn exact_p(b: usize, c: usize) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let mut coeff = BigUint::one();
    let mut tail = BigUint::zero();
    for i in 0..=b.min(c) {
        if i > 0 {
            coeff = coeff * BigUint::from(n - i + 1) / BigUint::from(i);
        }
        tail += &coeff;
    }
    let p = (tail * 2u32).to_f64().unwrap() / (BigUint::one() << n).to_f64().unwrap();
    p.min(1.0)
}

fn report(method: &str, cats: &[MatchCategory]) -> EvaluationReport {
    let mut counts = CategoryCounts::default();
    let cases = cats
        .iter()
        .enumerate()
        .map(|(i, &category)| {
            counts.add(category);
            CaseTrace {
                case_id: format!("c{i:04}"),
                expected: "a".into(),
                observed: vec![],
                category,
                conflict: 0.0,
                intervals: vec![],
                evidence_used: Vec::<EvidenceItemId>::new(),
            }
        })
        .collect();
    EvaluationReport {
        method: method.into(),
        total_cases: cats.len(),
        diagnosed: cats.len(),
        excluded: vec![],
        counts,
        percentages: None,
        cases,
    }
}

fn mcnemar() -> Check {
    use MatchCategory::{IM, NM, PM};
    let scenarios = [
        (20, 0, 10, 10),
        (0, 0, 5, 5),
        (5, 3, 12, 4),
        (12, 7, 1, 0),
        (1, 1, 0, 3),
        (40, 45, 10, 10),
        (100, 130, 7, 0),
        (3, 17, 0, 9),
    ];
    let mut worst = 0.0f64;
    for (only_a, only_b, both, neither) in scenarios {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..only_a {
            a.push(PM);
            b.push(NM);
        }
        for _ in 0..only_b {
            a.push(IM);
            b.push(PM);
        }
        for _ in 0..both {
            a.push(PM);
            b.push(PM);
        }
        for _ in 0..neither {
            a.push(NM);
            b.push(IM);
        }
        let (ra, rb) = (report("A", &a), report("B", &b));
        let paired = pair_reports(&ra, &rb).map_err(|e| e.to_string())?;
        let cmp = compare_methods(&ra, &rb, &paired).map_err(|e| e.to_string())?;
        let want = exact_p(only_a, only_b);
        worst = worst.max((cmp.p_value - want).abs());
        ensure!(
            (cmp.p_value - want).abs() <= 1e-9,
            "({only_a}, {only_b}): p {} want {want}",
            cmp.p_value
        );
        ensure!(
            cmp.significant == (only_a + only_b > 0 && want < 0.05),
            "({only_a}, {only_b}): verdict"
        );
        ensure!(
            cmp.degenerate == (only_a + only_b == 0),
            "({only_a}, {only_b}): degeneracy flag"
        );
    }
    Ok(format!("{} scenarios, max |dp| {worst:.1e}", scenarios.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("consonant extraction", consonant_extraction),
        ("combination algebra", combination_algebra),
        ("expert modification golden files", expert_golden),
        ("simple-support structure", simple_support_structure),
        ("pruning golden graphs", pruning_golden),
        ("synthetic end-to-end experiment", synthetic_experiment),
        ("performance", performance),
        ("match taxonomy", taxonomy),
        ("McNemar comparison", mcnemar),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
