use std::fs;

use anyhow::{anyhow, Error};
use serde::Serialize;
use serde_json::{json, Value};

use refinekit::eval::EvalError;
use refinekit::expansion::{ExpansionConfig, ExpansionError};
use refinekit::grid::MeasureAtResolution;
use refinekit::independence::{classify, zero_set, CoefVector, Projective};
use refinekit::mask::{MaskFile, MaskIssue};
use refinekit::mz::{mz_report, MzError, MzOptions, Norm};
use refinekit::two_scale::TwoScaleError;
use refinekit::{
    build_two_scale, build_two_scale_exact, builtin_by_name, equivalence_report, square_function,
    Coefficient, Evaluator, ExpansionSequence, Mask, Mra, Rational, Scalar, TestFunction, TwoScalePair,
};

use crate::output::{write_json, Csv, RunConfig};
use crate::{ConvergeArgs, EvalArgs, IndependenceArgs, MzArgs};

/// Exit code 2 for bad input, 3 for numeric failures.
pub enum Failure {
    Validation(Error),
    Numeric(Error),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl Into<Error>) -> Failure {
    Failure::Validation(e.into())
}

fn numeric(e: impl Into<Error>) -> Failure {
    Failure::Numeric(e.into())
}

fn io(e: Error) -> Failure {
    Failure::Numeric(e)
}

fn two_scale_failure(e: TwoScaleError) -> Failure {
    match e {
        TwoScaleError::DegenerateN(_) | TwoScaleError::NotExact(_) => invalid(e),
        _ => numeric(e),
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::OutOfRange(_) | EvalError::DimensionMismatch { .. } => invalid(e),
        _ => numeric(e),
    }
}

pub fn load_mask(source: &str) -> Result<Mask, Failure> {
    if source.starts_with("builtin:") {
        return builtin_by_name(source).map_err(invalid);
    }
    let text = fs::read_to_string(source).map_err(|e| invalid(anyhow!("reading mask {source}: {e}")))?;
    MaskFile::parse(&text)
        .and_then(|f| f.to_mask())
        .map_err(|e| invalid(anyhow!("{source}: {e}")))
}

fn mask_value(mask: &Mask) -> Value {
    let warnings: Vec<&MaskIssue> = mask.warnings().iter().collect();
    json!({
        "file": MaskFile::from_mask(mask),
        "warnings": warnings,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| invalid(anyhow!("bad {what} value {t:?}")))
        })
        .collect()
}

fn warn(mask: &Mask) {
    for w in mask.warnings() {
        eprintln!("warning: {}: {w}", mask.name());
    }
}

pub fn eval(args: &EvalArgs) -> Outcome {
    let mask = load_mask(&args.mask.mask)?;
    warn(&mask);
    let config = RunConfig::new("eval", mask_value(&mask), args);
    let n = mask.support();
    let mut header = vec!["x".to_string()];
    header.extend((0..n).map(|i| format!("phi_{i}")));
    header.push("uncertainty_radius".into());
    let out = args.out.as_deref();
    if let Some(x) = args.x {
        if args.exact {
            return Err(invalid(anyhow!("--exact applies to grid evaluation only")));
        }
        let ev = Evaluator::new(build_two_scale(&mask).map_err(two_scale_failure)?).map_err(eval_failure)?;
        let enc = ev.at_real(x, args.tol, args.depth_cap).map_err(eval_failure)?;
        let mut csv = Csv::create(out, &config, &header).map_err(io)?;
        let mut row = vec![fmt_f64(enc.x)];
        row.extend(enc.values.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(enc.radius));
        csv.row(row).map_err(io)?;
        return csv.finish().map_err(io);
    }
    if args.resolution > 24 {
        return Err(invalid(anyhow!(
            "resolution {} above the supported 24",
            args.resolution
        )));
    }
    if args.exact {
        let pair = build_two_scale_exact(&mask).map_err(two_scale_failure)?;
        grid_rows::<Rational>(pair, args.resolution, |v| v.to_string(), out, &config, &header)
    } else {
        let pair = build_two_scale(&mask).map_err(two_scale_failure)?;
        grid_rows::<f64>(pair, args.resolution, |v| fmt_f64(*v), out, &config, &header)
    }
}

fn grid_rows<T: Scalar>(
    pair: TwoScalePair<T>,
    level: u32,
    show: impl Fn(&T) -> String,
    out: Option<&std::path::Path>,
    config: &impl Serialize,
    header: &[String],
) -> Outcome {
    let ev = Evaluator::new(pair).map_err(eval_failure)?;
    let table = ev.table(level);
    let mut csv = Csv::create(out, config, header).map_err(io)?;
    let h = (-(level as f64)).exp2();
    for (k, phi) in table.iter().enumerate() {
        let mut row = vec![fmt_f64(k as f64 * h)];
        row.extend(phi.iter().map(&show));
        row.push("0.0".into());
        csv.row(row).map_err(io)?;
    }
    csv.finish().map_err(io)
}

fn zero_set_measures<T: Scalar>(
    ev: &Evaluator<T>,
    c: &CoefVector<T>,
    finest: u32,
    tol: f64,
) -> Result<Vec<MeasureAtResolution>, Failure> {
    let mut levels: Vec<u32> = [finest.saturating_sub(4), finest.saturating_sub(2), finest]
        .into_iter()
        .filter(|r| *r >= 1)
        .collect();
    levels.dedup();
    levels
        .into_iter()
        .map(|r| {
            let k = zero_set(ev, c, r, tol).map_err(invalid)?;
            Ok(MeasureAtResolution {
                resolution: r,
                tol,
                measure: k.measure(),
            })
        })
        .collect()
}

fn run_independence<T: Projective>(
    pair: TwoScalePair<T>,
    c: CoefVector<T>,
    args: &IndependenceArgs,
) -> Result<Value, Failure> {
    let verdict = classify(&pair, &c, args.depth).map_err(invalid)?;
    let ev = Evaluator::new(pair).map_err(eval_failure)?;
    let measures = zero_set_measures(&ev, &c, args.resolution, args.tol)?;
    Ok(json!({
        "mode": if T::EXACT { "exact" } else { "float" },
        "c": c.components().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "depth": args.depth,
        "verdict": verdict,
        "zero_set": measures,
    }))
}

pub fn independence(args: &IndependenceArgs) -> Outcome {
    let mask = load_mask(&args.mask.mask)?;
    warn(&mask);
    if args.depth > refinekit::independence::MAX_SEARCH_DEPTH {
        return Err(invalid(anyhow!(
            "depth {} above the supported {}",
            args.depth,
            refinekit::independence::MAX_SEARCH_DEPTH
        )));
    }
    if args.resolution > 24 {
        return Err(invalid(anyhow!(
            "resolution {} above the supported 24",
            args.resolution
        )));
    }
    let config = RunConfig::new("independence", mask_value(&mask), args);
    let raw: Vec<Coefficient> = parse_list("--c", &args.c)?;
    if raw.len() != mask.support() {
        return Err(invalid(anyhow!(
            "--c has {} entries, mask {} needs N = {}",
            raw.len(),
            mask.name(),
            mask.support()
        )));
    }
    let exact: Option<Vec<Rational>> = raw
        .iter()
        .map(|c| match c {
            Coefficient::Exact(q) => Some(q.clone()),
            Coefficient::Float(_) => None,
        })
        .collect();
    let result = match (exact, mask.is_exact() && !args.float) {
        (Some(q), true) => {
            let pair = build_two_scale_exact(&mask).map_err(two_scale_failure)?;
            run_independence(pair, CoefVector::new(q), args)?
        }
        _ => {
            let pair = build_two_scale(&mask).map_err(two_scale_failure)?;
            let c = CoefVector::new(raw.iter().map(Coefficient::to_f64).collect());
            run_independence(pair, c, args)?
        }
    };
    write_json(args.out.as_deref(), &config, &result).map_err(io)
}

pub fn mz(args: &MzArgs) -> Outcome {
    let mask = load_mask(&args.mask.mask)?;
    warn(&mask);
    let norm: Norm = args.norm.parse().map_err(|e: String| invalid(anyhow!(e)))?;
    let deltas: Vec<f64> = parse_list("--delta", &args.delta)?;
    if args.starts == 0 {
        return Err(invalid(anyhow!("--starts must be positive")));
    }
    if args.resolution > 20 {
        return Err(invalid(anyhow!(
            "resolution {} above the supported 20",
            args.resolution
        )));
    }
    let opts = MzOptions {
        starts: args.starts,
        seed: args.seed,
        iterations: args.iterations,
        ..MzOptions::default()
    };
    let config = RunConfig::new("mz", mask_value(&mask), args);
    let report = mz_report(&mask, &deltas, args.resolution, norm, &opts).map_err(|e| match e {
        MzError::Setup(_) => numeric(e),
        _ => invalid(e),
    })?;
    write_json(args.out.as_deref(), &config, &report).map_err(io)
}

pub fn converge(args: &ConvergeArgs) -> Outcome {
    let mask = load_mask(&args.mask.mask)?;
    warn(&mask);
    let f: TestFunction = args.f.parse().map_err(|e: String| invalid(anyhow!(e)))?;
    let thresholds: Vec<f64> = parse_list("--thresholds", &args.thresholds)?;
    if args.levels < 1 || args.levels > 16 {
        return Err(invalid(anyhow!("--levels must lie in 1..=16")));
    }
    let mut cfg = ExpansionConfig::new(args.levels, &mask);
    if let Some(r) = args.quadrature_resolution {
        cfg.quadrature_resolution = r;
    }
    if let Some(l) = args.eval_resolution {
        if l < args.levels {
            return Err(invalid(anyhow!("--eval-resolution must be at least --levels")));
        }
        cfg.eval_resolution = l;
    }
    if cfg.quadrature_resolution > 24 || cfg.eval_resolution > 20 {
        return Err(invalid(anyhow!("resolution above the supported range")));
    }
    let expansion_failure = |e: ExpansionError| match e {
        ExpansionError::ResolutionTooCoarse { .. } | ExpansionError::TooFewLevels(_) => invalid(e),
        _ => numeric(e),
    };
    let mra = Mra::new(&mask, cfg.clone()).map_err(expansion_failure)?;
    let seq = ExpansionSequence::project(&mra, &|x| f.eval(x)).map_err(expansion_failure)?;
    let deviations = seq.consistency(&mra).map_err(expansion_failure)?;
    let sf = square_function(&mra, &seq).map_err(expansion_failure)?;
    let tail_start = args.tail_start.unwrap_or(args.levels as usize / 2);
    let report = equivalence_report(&sf, &thresholds, tail_start, args.tail_tol);
    #[derive(Serialize)]
    struct Resolved<'a> {
        #[serde(flatten)]
        args: &'a ConvergeArgs,
        expansion: &'a ExpansionConfig,
        function: &'a TestFunction,
    }
    let resolved = Resolved {
        args,
        expansion: &cfg,
        function: &f,
    };
    let config = RunConfig::new("converge", mask_value(&mask), &resolved);
    if let Some(path) = args.csv.as_deref() {
        let top = sf.top();
        let mut header = vec!["x".to_string()];
        header.extend((0..=top).map(|j| format!("f_{j}")));
        header.push(format!("S_{top}"));
        header.push("f_star".into());
        let mut csv = Csv::create(Some(path), &config, &header).map_err(io)?;
        for i in 0..sf.x.len() {
            let mut row = vec![fmt_f64(sf.x[i])];
            row.extend(sf.levels.iter().map(|f| fmt_f64(f[i])));
            row.push(fmt_f64(sf.s_top()[i]));
            row.push(fmt_f64(sf.fstar[i]));
            csv.row(row).map_err(io)?;
        }
        csv.finish().map_err(io)?;
    }
    let result = json!({
        "consistency": {
            "deviations": deviations,
            "tolerance": seq.tolerance,
        },
        "report": report,
    });
    write_json(args.out.as_deref(), &config, &result).map_err(io)
}
