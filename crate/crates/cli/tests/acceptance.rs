// Acceptance suite: one line per criterion, then a single assertion.
//
//     cargo test -p refinekit-cli --test acceptance -- --nocapture

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refinekit::expansion::ExpansionConfig;
use refinekit::grid::GridSet;
use refinekit::independence::{amplify, density_interval, zero_set, CoefVector};
use refinekit::mask::{builtin_mask, continuous_catalog, Family};
use refinekit::mz::{estimate, quantile, MzContext, MzOptions, Norm, Target};
use refinekit::scalar::parse_rational;
use refinekit::{
    build_two_scale, build_two_scale_exact, cascade, gramian, never_zero_certificate, phi_at_integers,
    push_forward, square_function, Digit, DyadicPoint, Evaluator, ExpansionSequence, LevelCoeffs, Mask, Mra,
    Rational, TestFunction, TwoScalePair,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn bspline(n: usize) -> Mask {
    builtin_mask(Family::Bspline, n).unwrap()
}

fn daub(m: usize) -> Mask {
    builtin_mask(Family::Daubechies, m).unwrap()
}

fn float_eval(m: &Mask) -> Evaluator<f64> {
    Evaluator::new(build_two_scale(m).unwrap()).unwrap()
}

fn exact_eval(m: &Mask) -> Evaluator<Rational> {
    Evaluator::new(build_two_scale_exact(m).unwrap()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn c1_hat_closed_form() -> Outcome {
    let hat = bspline(2);
    let exact = exact_eval(&hat);
    let float = float_eval(&hat);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1024 {
        let level = rng.gen_range(1..=40u32);
        let k = rng.gen_range(0..=1u64 << level);
        let x = DyadicPoint::from_ratio(k, level);
        let xr = Rational::new(k.into(), (1u64 << level).into());
        let want = [xr.clone(), Rational::from_integer(1.into()) - xr];
        let got = exact.at(&x).values;
        check(got == want, || {
            format!("rational mismatch at {k}/2^{level}: {got:?}")
        })?;
        let xf = k as f64 / (1u64 << level) as f64;
        let fv = float.at(&x).values;
        worst = worst.max((fv[0] - xf).abs()).max((fv[1] - (1.0 - xf)).abs());
    }
    check(worst <= 1e-12, || format!("float error {worst:e}"))?;
    Ok(format!(
        "1024 points exact in rational mode, float error {worst:.1e}"
    ))
}

fn same_pair<T: refinekit::Scalar>(p: &[T]) -> Result<(), String> {
    let a = TwoScalePair::by_entry_formula(p).map_err(|e| e.to_string())?;
    let b = TwoScalePair::by_block_recipe(p).map_err(|e| e.to_string())?;
    check(a == b, || "entry formula and row recipe disagree".into())?;
    let n = a.n();
    let inner = a.inner();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            check(
                inner[(i, j)] == a.p0()[(i + 1, j + 1)] && inner[(i, j)] == a.p1()[(i, j)],
                || format!("inner block mismatch at ({i}, {j})"),
            )?;
        }
    }
    Ok(())
}

fn c2_two_scale_construction() -> Outcome {
    let catalog = continuous_catalog();
    for m in &catalog {
        match m.exact_coeffs() {
            Some(p) => {
                same_pair(p).map_err(|e| format!("{}: {e}", m.name()))?;
                let pair = build_two_scale_exact(m).unwrap();
                let one = Rational::from_integer(1.into());
                for s in pair.p0().row_sums().into_iter().chain(pair.p1().row_sums()) {
                    check(s == one, || format!("{}: row sum {s}", m.name()))?;
                }
            }
            None => same_pair(m.coeffs()).map_err(|e| format!("{}: {e}", m.name()))?,
        }
    }
    Ok(format!(
        "{} catalog masks, rational row sums exactly one",
        catalog.len()
    ))
}

fn c3_product_order() -> Outcome {
    let ev = exact_eval(&bspline(2));
    let x = DyadicPoint::from_ratio(1, 2);
    let verified = ev.at(&x).values;
    let displayed = ev.at_reversed_order(&x);
    check(verified == vec![q("1/4"), q("3/4")], || {
        format!("verified order gave {verified:?}")
    })?;
    check(displayed == vec![q("1/2"), q("1/2")], || {
        format!("displayed order gave {displayed:?}")
    })?;
    Ok("later digits left-multiply: (1/4, 3/4); reversed order: (1/2, 1/2)".into())
}

fn c4_fixed_point() -> Outcome {
    let mut worst = 0.0f64;
    for m in continuous_catalog() {
        let pair = build_two_scale(&m).unwrap();
        let v = phi_at_integers(&pair).map_err(|e| format!("{}: {e}", m.name()))?;
        let back = pair.p0().tr_mul_vec(&v);
        let res = max_diff(&back, &v);
        let total: f64 = v.iter().sum();
        check(res <= 1e-12, || format!("{}: residual {res:e}", m.name()))?;
        check((total - 1.0).abs() <= 1e-12, || {
            format!("{}: sum {total}", m.name())
        })?;
        worst = worst.max(res);
    }
    let b3 = phi_at_integers(&build_two_scale(&bspline(3)).unwrap()).unwrap();
    check(max_diff(&b3, &[0.0, 0.5, 0.5]) <= 1e-12, || {
        format!("bspline3 gave {b3:?}")
    })?;
    Ok(format!("worst residual {worst:.1e}, bspline3 (0, 1/2, 1/2)"))
}

fn c5_cascade() -> Outcome {
    let mut worst = 0.0f64;
    for m in [bspline(2), bspline(3), bspline(4), daub(2), daub(3)] {
        let c = cascade(&m, 25, 10);
        let e = float_eval(&m).samples(10);
        let d = max_diff(&c, &e);
        check(d <= 1e-6, || format!("{}: sup difference {d:e}", m.name()))?;
        worst = worst.max(d);
    }
    Ok(format!("worst sup difference {worst:.1e}"))
}

fn c6_independence() -> Outcome {
    let ev = float_eval(&daub(2));
    let samples = refinekit::MidpointSamples::new(&ev, 14);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut smallest = f64::INFINITY;
    let mut largest_measure = 0.0f64;
    for i in 0..100 {
        let mut c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        let cv = CoefVector::new(c);
        let cert = never_zero_certificate(ev.pair(), &cv, 16).map_err(|e| e.to_string())?;
        check(cert.positive, || {
            format!("vector {i}: min norm {:e} not certified", cert.min_norm)
        })?;
        let k = refinekit::independence::zero_set_on(&samples, &cv, 1e-9).map_err(|e| e.to_string())?;
        check(k.measure() <= 2f64.powi(-10), || {
            format!("vector {i}: zero set {}", k.measure())
        })?;
        smallest = smallest.min(cert.min_norm);
        largest_measure = largest_measure.max(k.measure());
    }
    Ok(format!(
        "100 vectors certified, smallest min norm {smallest:.2e}, largest zero set {largest_measure:e}"
    ))
}

fn c7_zero_set_pipeline() -> Outcome {
    let ev = float_eval(&bspline(2));
    let c = CoefVector::new(vec![1.0, -1.0]);
    let k = zero_set(&ev, &c, 12, 1e-9).map_err(|e| e.to_string())?;
    check(k.measure() <= 2.0 * 2f64.powi(-12), || {
        format!("zero set {}", k.measure())
    })?;
    // a tolerance wide enough to catch the two cells next to the root
    let thick = zero_set(&ev, &c, 12, 2f64.powi(-11)).map_err(|e| e.to_string())?;
    let cells: Vec<usize> = thick.members().collect();
    check(cells == [2047, 2048], || {
        format!("thick zero set cells {cells:?}")
    })?;
    for set in [&k, &thick] {
        check(density_interval(set, 0.5, Some(11)).is_err(), || {
            "density cell found at depth <= 11".into()
        })?;
    }
    let pair = build_two_scale_exact(&bspline(2)).unwrap();
    let ce = CoefVector::new(vec![q("1"), q("-1")]);
    let b = push_forward(&pair, &ce, &[Digit::One]).map_err(|e| e.to_string())?;
    check(b.raw == vec![q("1"), q("0")], || {
        format!("push forward gave {:?}", b.raw)
    })?;
    let hat_amp = amplify(&ev, &c, 10, 0.125, 0.25).map_err(|e| e.to_string())?;
    check(hat_amp.pushed_measure == hat_amp.density, || {
        format!(
            "amplified measure {} vs density {}",
            hat_amp.pushed_measure, hat_amp.density
        )
    })?;
    Ok(format!(
        "zero set {:e}, density search NotFound to depth 11, P_1 (1,-1) = (1,0)",
        k.measure()
    ))
}

fn hat_oracle(a: &[f64], r: u32) -> Vec<f64> {
    let h = 2f64.powi(-(r as i32));
    (0..1usize << r)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (a[0] * x + a[1] * (1.0 - x)).abs()
        })
        .collect()
}

fn c8_mz() -> Outcome {
    let ev = float_eval(&bspline(2));
    let ctx = MzContext::new(&ev, 12);
    check((ctx.b() - 1.0).abs() <= 1e-12, || format!("B = {}", ctx.b()))?;
    let opts = MzOptions::default();
    let full = Target::Set {
        label: "[0,1]".into(),
        set: GridSet::full(12),
    };
    let c = estimate(&ctx, &[full], Norm::L1, &opts).map_err(|e| e.to_string())?;
    check((c[0].c - 0.5).abs() <= 1e-3, || format!("C([0,1]) = {}", c[0].c))?;

    let deltas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let targets: Vec<Target> = deltas.iter().map(|&d| Target::Delta(d)).collect();
    let mut violations = 0;
    for m in [bspline(2), bspline(3), daub(2)] {
        let mctx = MzContext::new(&float_eval(&m), 10);
        let est = estimate(&mctx, &targets, Norm::L1, &opts).map_err(|e| e.to_string())?;
        violations += est.windows(2).filter(|w| w[1].c < w[0].c).count();
    }
    check(violations == 0, || {
        format!("{violations} monotonicity violations")
    })?;

    // brute force over explicit sets against the order statistic
    let r = 8;
    let small = MzContext::new(&ev, r);
    let cells = 1usize << r;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let trials = 100_000;
    for t in 0..trials {
        let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let delta: f64 = rng.gen_range(0.01..=1.0);
        let need = (delta * cells as f64).ceil() as usize;
        let vals = hat_oracle(&a, r);
        let quant = 2.0 * (a[0] - a[1]).abs() * 2f64.powi(-(r as i32));
        let qv = quantile(&small, &a, delta).map_err(|e| e.to_string())?;
        let mut order: Vec<usize> = (0..cells).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let mut set: Vec<usize> = order[..need].to_vec();
        if t % 2 == 1 {
            // swap a few members for random outsiders
            let swaps = rng.gen_range(1..=3usize).min(need);
            for _ in 0..swaps {
                let pos = rng.gen_range(0..set.len());
                set[pos] = rng.gen_range(0..cells);
            }
            set.sort_unstable();
            set.dedup();
            while set.len() < need {
                let extra = rng.gen_range(0..cells);
                if !set.contains(&extra) {
                    set.push(extra);
                }
            }
        }
        let sup = set.iter().map(|&i| vals[i]).fold(0.0, f64::max);
        check(sup >= qv - quant, || {
            format!("trial {t}: set sup {sup} below quantile {qv}")
        })?;
        if t % 2 == 0 {
            worst = worst.max((sup - qv).abs());
            check((sup - qv).abs() <= quant, || {
                format!("trial {t}: optimal set {sup} vs {qv}")
            })?;
        }
    }
    Ok(format!(
        "C([0,1]) = {:.6}, B = {}, monotone over 3 masks, {trials} sets agree to {worst:.1e}",
        c[0].c,
        ctx.b()
    ))
}

fn c9_gramian() -> Outcome {
    let g = gramian(&bspline(2)).map_err(|e| e.to_string())?;
    let want = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
    let got = [g.get(-1), g.get(0), g.get(1)];
    check(max_diff(&got, &want) <= 1e-10, || format!("hat gramian {got:?}"))?;
    let d = gramian(&daub(2)).map_err(|e| e.to_string())?;
    check((d.get(0) - 1.0).abs() <= 1e-10 && d.get(1).abs() <= 1e-10, || {
        format!("daubechies2 gramian {:?}", d.symbol())
    })?;
    let mut worst = 0.0f64;
    for m in continuous_catalog() {
        let g = gramian(&m).map_err(|e| format!("{}: {e}", m.name()))?;
        let dev = (g.total() - 1.0).abs();
        check(dev <= 1e-10, || format!("{}: total {}", m.name(), g.total()))?;
        worst = worst.max(dev);
    }
    Ok(format!(
        "hat (1/6, 2/3, 1/6), daubechies2 orthonormal, worst |sum - 1| {worst:.1e}"
    ))
}

fn test_functions() -> Vec<TestFunction> {
    ["jump:0.5", "tent:0.3", "sin:1", "sin:3", "poly:0,1,-1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn c10_projection() -> Outcome {
    let mut worst_nest = 0.0f64;
    let mut worst_idem = 0.0f64;
    for m in [bspline(2), bspline(3), daub(2)] {
        let mra = Mra::new(&m, ExpansionConfig::new(6, &m)).map_err(|e| e.to_string())?;
        for f in test_functions() {
            let samples = mra.sample(&|x| f.eval(x));
            let tol = mra.quadrature_tolerance(&samples);
            let levels: Vec<LevelCoeffs> = (0..=6)
                .map(|j| mra.project_samples(&samples, j))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for j in 0..6 {
                let fine = mra.evaluate_quadrature(&levels[j + 1]);
                let back = mra.project_samples(&fine, j as u32).map_err(|e| e.to_string())?;
                let d = back.max_abs_diff(&levels[j]);
                check(d <= 2.0 * tol, || {
                    format!("{} {f} level {j}: nesting {d:e} > 2 x {tol:e}", m.name())
                })?;
                worst_nest = worst_nest.max(d / tol);
            }
            for (j, lvl) in levels.iter().enumerate() {
                let again = mra
                    .project_samples(&mra.evaluate_quadrature(lvl), j as u32)
                    .map_err(|e| e.to_string())?;
                let d = again.max_abs_diff(lvl);
                check(d <= 1e-8, || {
                    format!("{} {f} level {j}: idempotence {d:e}", m.name())
                })?;
                worst_idem = worst_idem.max(d);
            }
        }
    }
    Ok(format!(
        "5 functions x 3 masks, worst nesting {worst_nest:.1e} x tol, worst idempotence {worst_idem:.1e}"
    ))
}

fn nondecreasing(s: &[Vec<f64>]) -> bool {
    s.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(b, a)| b >= a))
}

fn c11_square_function() -> Outcome {
    let mut runs = 0;
    for (m, base) in [
        (bspline(2), vec![(0i64, 1.0), (-1, 0.5)]),
        (bspline(3), vec![(-2, 1.0), (0, -0.75), (1, 2.0)]),
    ] {
        let mra = Mra::new(&m, ExpansionConfig::new(6, &m)).map_err(|e| e.to_string())?;
        let (first, count) = mra.index_range(0);
        let mut values = vec![0.0; count];
        for (k, v) in base {
            values[(k - first) as usize] = v;
        }
        let seq = ExpansionSequence::stationary(
            &mra,
            LevelCoeffs {
                level: 0,
                first,
                values,
            },
        );
        let sf = square_function(&mra, &seq).map_err(|e| e.to_string())?;
        let f0: Vec<f64> = sf.levels[0].iter().map(|v| v.abs()).collect();
        check(sf.s_top() == f0.as_slice(), || {
            format!("{}: S differs from |f_0|", m.name())
        })?;
        check(sf.fstar == f0, || format!("{}: f* differs from |f_0|", m.name()))?;
        check(nondecreasing(&sf.s), || format!("{}: S_J decreased", m.name()))?;
        runs += 1;
    }
    for m in [bspline(2), bspline(3), daub(2)] {
        let mra = Mra::new(&m, ExpansionConfig::new(6, &m)).map_err(|e| e.to_string())?;
        for f in test_functions() {
            let seq = ExpansionSequence::project(&mra, &|x| f.eval(x)).map_err(|e| e.to_string())?;
            let sf = square_function(&mra, &seq).map_err(|e| format!("{} {f}: {e}", m.name()))?;
            check(nondecreasing(&sf.s), || {
                format!("{} {f}: S_J decreased", m.name())
            })?;
            runs += 1;
        }
    }
    Ok(format!(
        "stationary S = f* = |f_0| exactly; S_J nondecreasing in {runs} runs"
    ))
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_refinekit"))
        .args(args)
        .env("REFINEKIT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn c12_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["eval", "--mask", "builtin:bspline3", "--resolution", "10"],
        vec![
            "eval",
            "--mask",
            "builtin:bspline4",
            "--resolution",
            "8",
            "--exact",
        ],
        vec![
            "eval",
            "--mask",
            "builtin:daubechies2",
            "--x",
            "0.3",
            "--tol",
            "1e-8",
        ],
        vec![
            "independence",
            "--mask",
            "builtin:daubechies2",
            "--c",
            "1,-1,0",
            "--depth",
            "14",
        ],
        vec![
            "independence",
            "--mask",
            "builtin:bspline2",
            "--c",
            "1,-1",
            "--depth",
            "10",
        ],
        vec![
            "mz",
            "--mask",
            "builtin:bspline2",
            "--delta",
            "0.25,0.5",
            "--resolution",
            "9",
            "--seed",
            "7",
        ],
        vec![
            "mz",
            "--mask",
            "builtin:daubechies2",
            "--norm",
            "l2",
            "--resolution",
            "8",
            "--seed",
            "11",
        ],
        vec![
            "converge",
            "--mask",
            "builtin:bspline2",
            "--f",
            "jump:0.5",
            "--levels",
            "6",
            "--thresholds",
            "0.5,1",
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in &runs {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run_cli(&a, "1")?;
        let again = run_cli(&a, "1")?;
        let threaded = run_cli(&a, "4")?;
        check(first == again, || format!("{a:?}: repeat differs"))?;
        check(first == threaded, || {
            format!("{a:?}: thread count changes output")
        })?;
    }
    // the CSV embeds its own path, so both runs write to the same one
    let path = csv("run.csv");
    let args = [
        "converge",
        "--mask",
        "builtin:bspline3",
        "--f",
        "tent:0.3",
        "--levels",
        "6",
        "--csv",
        &path,
    ];
    let mut copies = Vec::new();
    for threads in ["1", "3"] {
        let json = run_cli(&args, threads)?;
        copies.push((json, std::fs::read(&path).map_err(|e| e.to_string())?));
    }
    check(!copies[0].1.is_empty() && copies[0] == copies[1], || {
        "converge CSV differs between runs".into()
    })?;
    Ok(format!(
        "{} commands byte-identical across repeats and thread counts",
        runs.len() + 1
    ))
}

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 12] = [
        (
            1,
            "hat closed form",
            c1_hat_closed_form,
            Some(Duration::from_secs(1)),
        ),
        (2, "two-scale construction", c2_two_scale_construction, None),
        (3, "product order", c3_product_order, None),
        (4, "fixed point at integers", c4_fixed_point, None),
        (
            5,
            "cascade cross-check",
            c5_cascade,
            Some(Duration::from_secs(30)),
        ),
        (
            6,
            "independence dichotomy",
            c6_independence,
            Some(Duration::from_secs(120)),
        ),
        (7, "zero set pipeline", c7_zero_set_pipeline, None),
        (8, "norm constants", c8_mz, None),
        (9, "gramian", c9_gramian, None),
        (10, "projection consistency", c10_projection, None),
        (11, "square function", c11_square_function, None),
        (12, "reproducibility", c12_reproducibility, None),
    ];
    let mut failed = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let took = start.elapsed();
        if let (Ok(msg), Some(limit)) = (&outcome, budget) {
            if took > limit {
                outcome = Err(format!("{msg}; but took {took:.2?} > {limit:?}"));
            }
        }
        match &outcome {
            Ok(msg) => println!("[PASS] {id:>2} {name}: {msg} ({took:.2?})"),
            Err(msg) => {
                println!("[FAIL] {id:>2} {name}: {msg} ({took:.2?})");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
