use orrw_core::exact::two_step_rate;
use orrw_core::exponent::{bound_checks, Delta0Limit};
use orrw_core::report::{self, real};
use orrw_core::{
    alpha_c, classify_delta0, exact_tail, fit_decay_rate, limit_delta_zero, sweep_delta, tail_estimate, Error,
};
use serde_json::{json, Value};

use crate::config::{load_family, load_graph, Common, Format};
use crate::CliError;

/// What a command produced: human-readable lines and the machine document.
pub struct Output {
    pub summary: Vec<String>,
    pub document: String,
    pub passed: bool,
}

fn format_or(common: &Common, default: Format) -> Format {
    common.format.unwrap_or(default)
}

pub fn exponent(common: &Common, delta: f64) -> Result<Output, CliError> {
    let g = load_graph(common)?;
    let spec = load_family(common, &g)?;
    let r = alpha_c(&g, delta, &spec)?;
    let bounds = bound_checks(&r, &g, &spec);
    let summary = format!("alpha_c={} rho={} argmax={}", r.alpha_c, r.rho_star, g.format_set(r.argmax_set));
    let document = match format_or(common, Format::Json) {
        Format::Json => {
            report::to_json_string(&report::document("exponent", &g, report::exponent_value(&g, &spec, &r, &bounds)))
        }
        Format::Csv => format!(
            "{}\n{},{},{},{}\n",
            report::SWEEP_HEADER,
            r.delta,
            r.alpha_c,
            r.rho_star,
            r.argmax_set.bits()
        ),
    };
    Ok(Output { summary: vec![summary], document, passed: true })
}

pub fn sweep(common: &Common, grid: &[f64]) -> Result<Output, CliError> {
    let g = load_graph(common)?;
    let spec = load_family(common, &g)?;
    let sw = sweep_delta(&g, &spec, grid)?;
    let limit = limit_delta_zero(&g, &spec)?;
    let document = match format_or(common, Format::Csv) {
        Format::Csv => report::sweep_csv(&sw, limit),
        Format::Json => report::to_json_string(&report::document("sweep", &g, report::sweep_value(&g, &spec, &sw, limit))),
    };
    Ok(Output { summary: Vec::new(), document, passed: true })
}

pub fn simulate(
    common: &Common,
    delta: f64,
    trials: u64,
    n_grid: &[usize],
    window: Option<(usize, usize)>,
) -> Result<Output, CliError> {
    let g = load_graph(common)?;
    let spec = load_family(common, &g)?;
    let est = tail_estimate(&g, delta, &spec, n_grid, trials, common.seed)?;
    let mut summary = Vec::new();
    let mut fit = Value::Null;
    if let Some((lo, hi)) = window {
        let (slope, se) = fit_decay_rate(&est, lo..=hi)?;
        summary.push(format!("slope={slope} stderr={se} alpha_estimate={} window={lo},{hi}", -slope));
        fit = json!({ "window": [lo, hi], "slope": real(slope), "stderr": real(se) });
    }
    let document = match format_or(common, Format::Csv) {
        Format::Csv => report::tail_csv(&est),
        Format::Json => {
            let mut body = report::tail_value(&est);
            body["delta"] = Value::String(real(delta));
            body["family"] = report::family_value(&g, &spec);
            body["fit"] = fit;
            report::to_json_string(&report::document("simulate", &g, body))
        }
    };
    Ok(Output { summary, document, passed: true })
}

struct Check {
    name: &'static str,
    status: Status,
    detail: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Check { name, status: if pass { Status::Pass } else { Status::Fail }, detail }
    }

    fn label(&self) -> &'static str {
        match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

/// Smallest `N` such that `a[n] < b[n]` for every `n` in `N..` where both are positive.
fn crossing_index(a: &[f64], b: &[f64]) -> Option<usize> {
    let last = (0..a.len().min(b.len())).rev().find(|&n| a[n] > 0.0 && b[n] > 0.0)?;
    let run = (0..=last).rev().take_while(|&n| a[n] < b[n]).last()?;
    Some(run)
}

pub struct ValidateArgs {
    pub delta: f64,
    pub trials: u64,
    pub nmax: usize,
    pub window: Option<(usize, usize)>,
    pub compare_delta: f64,
}

/// Expected survivors at the top of the derived Monte Carlo window.
const MIN_SURVIVORS: f64 = 300.0;
const ORDERING_HORIZON: usize = 200;

pub fn validate(common: &Common, args: &ValidateArgs) -> Result<Output, CliError> {
    let g = load_graph(common)?;
    let spec = load_family(common, &g)?;
    if args.nmax < 3 {
        return Err(Error::InvalidArgument("--nmax must be at least 3".into()).into());
    }
    let tail = exact_tail(&g, args.delta, &spec, args.nmax)?;
    let r = alpha_c(&g, args.delta, &spec)?;
    let alpha = r.alpha_c;
    let mut checks = Vec::new();

    checks.push(Check::new(
        "certificate",
        r.method_checks.certificate_gap <= 1e-9,
        format!("objective={} gap={:e} tol=1e-9", r.method_checks.certificate_objective, r.method_checks.certificate_gap),
    ));
    checks.push(Check::new(
        "dual_oracle",
        r.method_checks.dv_oracle_gap <= 1e-4,
        format!("value={} gap={:e} tol=1e-4", r.method_checks.dv_oracle, r.method_checks.dv_oracle_gap),
    ));

    let rate_at = (0..=args.nmax - 2).rev().find(|&n| tail[n + 2] > 1e-250);
    match rate_at.and_then(|n| two_step_rate(&tail, n).map(|v| (n, v))) {
        Some((n, rate)) => {
            let gap = (rate - alpha).abs();
            checks.push(Check::new("exact_tail_rate", gap <= 1e-6, format!("n={n} rate={rate} gap={gap:e} tol=1e-6")));
        }
        None => checks.push(Check::new("exact_tail_rate", false, "survival underflows immediately".into())),
    }

    let window = args.window.or_else(|| {
        let hi = (1..=args.nmax).rev().find(|&n| tail[n] * args.trials as f64 >= MIN_SURVIVORS)?;
        let lo = (hi / 3).max(1);
        (hi >= lo + 2).then_some((lo, hi))
    });
    match window {
        Some((lo, hi)) => {
            let grid: Vec<usize> = (1..=hi).collect();
            let est = tail_estimate(&g, args.delta, &spec, &grid, args.trials, common.seed)?;
            let (slope, se) = fit_decay_rate(&est, lo..=hi)?;
            let tol = (0.05 * alpha).max(3.0 * se);
            let gap = (slope + alpha).abs();
            checks.push(Check::new(
                "monte_carlo_slope",
                gap <= tol,
                format!("window={lo},{hi} slope={slope} target={} gap={gap:e} tol={tol:e}", -alpha),
            ));
            let worst = grid
                .iter()
                .zip(&est.survival)
                .map(|(&n, &p)| {
                    let exact = tail[n];
                    let sigma = (exact * (1.0 - exact) / args.trials as f64).sqrt();
                    if sigma > 0.0 { (p - exact).abs() / sigma } else if p == exact { 0.0 } else { f64::INFINITY }
                })
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "monte_carlo_vs_exact",
                worst <= 4.5,
                format!("max deviation {worst:.2} sigma over n=1..{hi}, tol=4.5"),
            ));
        }
        None => checks.push(Check {
            name: "monte_carlo_slope",
            status: Status::Skip,
            detail: "survival too small for a fit window; pass --window".into(),
        }),
    }

    let other = exact_tail(&g, args.compare_delta, &spec, args.nmax)?;
    let (low, high) = if args.compare_delta >= args.delta { (&tail, &other) } else { (&other, &tail) };
    let crossing = crossing_index(low, high);
    checks.push(Check::new(
        "tail_ordering",
        matches!(crossing, Some(n) if n <= ORDERING_HORIZON.min(args.nmax)),
        format!(
            "delta={} vs {}: crossing index {}",
            args.delta,
            args.compare_delta,
            crossing.map_or("none".to_string(), |n| n.to_string())
        ),
    ));

    for b in bound_checks(&r, &g, &spec) {
        checks.push(Check::new(b.name, b.holds, format!("slack={}", b.slack)));
    }

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    let mut summary: Vec<String> = checks.iter().map(|c| format!("{} {} {}", c.label(), c.name, c.detail)).collect();
    summary.push(format!("alpha_c={alpha} {}", if passed { "all checks passed" } else { "some checks failed" }));
    let body = json!({
        "delta": real(args.delta),
        "alpha_c": real(alpha),
        "family": report::family_value(&g, &spec),
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "status": c.label(),
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "passed": passed,
    });
    let document = match format_or(common, Format::Json) {
        Format::Json => report::to_json_string(&report::document("validate", &g, body)),
        Format::Csv => {
            let mut out = String::from("check,status,detail\n");
            for c in &checks {
                out.push_str(&format!("{},{},\"{}\"\n", c.name, c.label(), c.detail));
            }
            out
        }
    };
    Ok(Output { summary, document, passed })
}

pub fn classify(common: &Common) -> Result<Output, CliError> {
    let g = load_graph(common)?;
    let spec = load_family(common, &g)?;
    let class = classify_delta0(&g, &spec)?;
    let limit = limit_delta_zero(&g, &spec)?;
    let star = g.is_star_or_triangle();
    let class_text = report::delta0_text(limit);
    let summary = format!(
        "star_or_triangle={star} delta0={}",
        if matches!(limit, Delta0Limit::Infinite) { "diverges".to_string() } else { format!("finite limit={class_text}") }
    );
    let document = match format_or(common, Format::Json) {
        Format::Json => {
            let body = json!({
                "family": report::family_value(&g, &spec),
                "star_or_triangle": star,
                "delta0_class": format!("{class:?}").to_lowercase(),
                "delta0": report::delta0_value(limit),
            });
            report::to_json_string(&report::document("classify", &g, body))
        }
        Format::Csv => format!("star_or_triangle,delta0\n{star},{class_text}\n"),
    };
    Ok(Output { summary: vec![summary], document, passed: true })
}
