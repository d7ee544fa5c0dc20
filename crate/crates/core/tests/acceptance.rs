//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Every criterion runs the shipped config in `configs/` and checks the
//! resulting rows against oracles computed here from first principles.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use levy_malliavin::harness::{run_experiment, write_csv, ExperimentConfig, Params, ResultRow};

const GATE: f64 = 4.0;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_dir().join(format!("{name}.toml"))).expect("shipped configs parse")
}

fn run(name: &str) -> (ExperimentConfig, Vec<ResultRow>) {
    let cfg = load(name);
    let rows = run_experiment(&cfg).expect("experiment runs");
    (cfg, rows)
}

/// `μ((a, b])` for `σ = 1`, `ν = 2δ₁ + δ₋₀.₅`, by hand.
fn mu_std(a: f64, b: f64) -> f64 {
    let inside = |x: f64| a < x && x <= b;
    let mut m = 0.0;
    if inside(0.0) {
        m += 1.0;
    }
    if inside(1.0) {
        m += 2.0 * 1.0;
    }
    if inside(-0.5) {
        m += 1.0 * 0.25;
    }
    m
}

/// `𝕞` of a rectangle `[t_lo, t_hi, x_lo, x_hi]` under the standard triplet.
fn m_std(r: [f64; 4]) -> f64 {
    (r[1] - r[0]) * mu_std(r[2], r[3])
}

fn intersect(a: [f64; 4], b: [f64; 4]) -> Option<[f64; 4]> {
    let r = [a[0].max(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].min(b[3])];
    (r[0] < r[1] && r[2] < r[3]).then_some(r)
}

/// Parses `(t0,t1]x(x0,x1]` after `key=` in a params string.
fn parse_rect(params: &str, key: &str) -> [f64; 4] {
    let start = params.find(&format!("{key}=")).expect("key present") + key.len() + 1;
    let text = params[start..].split_whitespace().next().expect("rect text");
    let nums: Vec<f64> = text
        .split(|c| "(],x".contains(c))
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().expect("number"))
        .collect();
    [nums[0], nums[1], nums[2], nums[3]]
}

fn within(row: &ResultRow, target: f64, k: f64) -> bool {
    (row.estimate - target).abs() <= k * row.stderr
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Non-increasing within `k` combined stderr and `last ≤ ratio·first`.
fn trend_ok(rows: &[&ResultRow], k: f64, ratio: f64) -> bool {
    let monotone = rows.windows(2).all(|w| {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].estimate <= w[0].estimate + k * se
    });
    let first = rows.first().expect("rows").estimate;
    let last = rows.last().expect("rows").estimate;
    monotone && first > 0.0 && last <= ratio * first
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// `𝔼[I_n(⊗1_{B_i}) I_n(⊗1_{B'_i})] = Σ_π Π_i 𝕞(B_i ∩ B'_{π(i)})`.
fn chaos_inner(a: &[[f64; 4]], b: &[[f64; 4]]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    permutations(a.len())
        .iter()
        .map(|p| {
            (0..a.len())
                .map(|i| intersect(a[i], b[p[i]]).map_or(0.0, m_std))
                .product::<f64>()
        })
        .sum()
}

fn isometry() -> Result<String, String> {
    let (_, rows) = run("verify-isometry");
    if rows.len() != 10 {
        return Err(format!("{} rows, expected 10", rows.len()));
    }
    for r in &rows {
        let (a, b) = (parse_rect(&r.params, "r1"), parse_rect(&r.params, "r2"));
        let target = intersect(a, b).map_or(0.0, m_std);
        let reported = r.target.unwrap_or(f64::NAN);
        if !rel_close(reported, target, 1e-9) && (reported - target).abs() > 1e-12 {
            return Err(format!("{}: library target {reported} vs hand {target}", r.params));
        }
        if !within(r, target, GATE) {
            return Err(format!("{}: {} ± {} vs {target}", r.params, r.estimate, r.stderr));
        }
        if r.stderr <= 0.0 && target != 0.0 {
            return Err(format!("{}: zero stderr", r.params));
        }
    }
    Ok(format!("10 pairs within {GATE} stderr of m(r1 ∩ r2)"))
}

fn chaos_vs_mc() -> Result<String, String> {
    let (cfg, rows) = run("chaos-oracle-vs-mc");
    let Params::Chaos(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    if p.elements.len() != 5 || rows.len() != 6 {
        return Err(format!("{} elements, {} rows", p.elements.len(), rows.len()));
    }
    let orders: Vec<usize> = p.elements.iter().map(Vec::len).collect();
    if orders.iter().min() != Some(&1) || orders.iter().max() != Some(&3) {
        return Err(format!("orders {orders:?} do not span 1..3"));
    }
    let mut total = 0.0;
    for (i, (ci, ei)) in p.coefficients.iter().zip(&p.elements).enumerate() {
        let own = ci * ci * chaos_inner(ei, ei);
        if !within(&rows[i], own, GATE) {
            return Err(format!("element {i}: {} ± {} vs {own}", rows[i].estimate, rows[i].stderr));
        }
        for (cj, ej) in p.coefficients.iter().zip(&p.elements) {
            total += ci * cj * chaos_inner(ei, ej);
        }
    }
    if !within(&rows[5], total, GATE) {
        return Err(format!("sum: {} ± {} vs {total}", rows[5].estimate, rows[5].stderr));
    }
    Ok(format!("5 elements and their sum within {GATE} stderr of the permanent formula"))
}

fn s2_hand(m: usize, n: usize, t_len: f64, sizes: &[[f64; 2]]) -> f64 {
    let c = (m as f64 + 1.0) * sizes[..m].iter().map(|s| mu_std(s[0], s[1])).product::<f64>();
    let survive: f64 = (1..m).map(|k| 1.0 - k as f64 / n as f64).product();
    c * t_len.powi(m as i32) * (1.0 - survive)
}

fn s2_norm() -> Result<String, String> {
    let (cfg, rows) = run("s2-norm");
    let Params::S2(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    let t_len = p.interval[1] - p.interval[0];
    let want_exact = [[2, 2], [2, 8], [3, 4]];
    if p.exact != want_exact || p.mc_cells != [2, 4] || p.decay_cells != 256 {
        return Err("config does not cover the required (m, N) set".into());
    }
    for (row, &[m, n]) in rows.iter().zip(&p.exact) {
        let hand = s2_hand(m, n, t_len, &p.sizes);
        let formula = row.target.unwrap_or(f64::NAN);
        if !rel_close(row.estimate, formula, 1e-14) || !rel_close(formula, hand, 1e-14) || !row.pass {
            return Err(format!("m={m} N={n}: direct {} formula {formula} hand {hand}", row.estimate));
        }
    }
    for (row, &n) in rows[3..5].iter().zip(&p.mc_cells) {
        let hand = s2_hand(2, n, t_len, &p.sizes);
        if !within(row, hand, GATE) {
            return Err(format!("MC N={n}: {} ± {} vs {hand}", row.estimate, row.stderr));
        }
    }
    let values: Vec<f64> = [2, 4, 8, 16, 32, 64, 128, 256]
        .iter()
        .map(|&n| s2_hand(2, n, t_len, &p.sizes))
        .collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let ratio = values[7] / values[0];
    let decay = &rows[5];
    if !(decreasing && ratio < 0.01 && decay.pass && rel_close(decay.estimate, ratio, 1e-12)) {
        return Err(format!("decay ratio {ratio} (reported {})", decay.estimate));
    }
    Ok(format!("closed form = enumeration to 1e-14, MC within {GATE} stderr, N=256/N=2 = {ratio:.4}"))
}

fn product_rule() -> Result<String, String> {
    let (_, rows) = run("verify-product-rule");
    if rows.len() != 20 {
        return Err(format!("{} pairs, expected 20", rows.len()));
    }
    let mut points = 0;
    for r in &rows {
        let count = |key: &str| -> usize {
            let s = r.params.split_whitespace().find_map(|w| w.strip_prefix(key)).expect("count");
            s.parse().expect("integer")
        };
        points += count("points=");
        if count("x0=") == 0 || count("nodes=") == 0 {
            return Err(format!("{}: x = 0 or ν atoms not sampled", r.params));
        }
        if !(r.estimate <= 1e-12) || !r.pass {
            return Err(format!("{}: gap {}", r.params, r.estimate));
        }
    }
    if points < 10_000 {
        return Err(format!("only {points} points"));
    }
    let worst = rows.iter().map(|r| r.estimate).fold(0.0, f64::max);
    Ok(format!("20 pairs, {points} points, max relative gap {worst:.2e}"))
}

fn chain_rule() -> Result<String, String> {
    let (_, chain) = run("verify-chain-rule");
    let (cfg, moll) = run("mollifier-bounds");
    let Params::Mollifier(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    if p.levels != [2, 8, 32] || p.grid < 10_000 {
        return Err("mollifier config does not cover N ∈ {2, 8, 32} on 10⁴ points".into());
    }
    let jump = &chain[0];
    if !(jump.params.contains("points=10000") && jump.estimate == 0.0 && jump.pass) {
        return Err(format!("jump domination: {} violations", jump.estimate));
    }
    let zero = &chain[1];
    if !(zero.estimate <= 1e-10 && zero.pass) {
        return Err(format!("zero part gap {}", zero.estimate));
    }
    for (pair, &n) in moll.chunks(2).zip(&p.levels) {
        let bound = 1.0 / f64::from(n);
        if !(pair[0].estimate <= bound && pair[0].target == Some(bound)) {
            return Err(format!("N={n}: sup|g_N - g| = {} > {bound}", pair[0].estimate));
        }
        if !(pair[1].estimate <= 1.0 + p.tolerance && pair[1].pass) {
            return Err(format!("N={n}: sup|g_N'| = {}", pair[1].estimate));
        }
    }
    Ok(format!(
        "|y| domination exact at 10⁴ points, sin zero part gap {:.1e}, mollifier bounds hold",
        zero.estimate
    ))
}

fn lemma4_convergence() -> Result<String, String> {
    let (cfg, rows) = run("lemma4-convergence");
    let Params::Lemma4(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    if p.cells != [4, 16, 64, 256] || cfg.replicates < 100_000 || cfg.triplet.sigma != 0.5 {
        return Err("config does not match the required setup".into());
    }
    let meshes: Vec<&ResultRow> = rows.iter().take(4).collect();
    if !trend_ok(&meshes, 2.0, 0.2) || !rows[4].pass {
        let v: Vec<String> = meshes.iter().map(|r| format!("{:.4}±{:.4}", r.estimate, r.stderr)).collect();
        return Err(format!("distances {v:?}"));
    }
    Ok(format!("distances non-increasing, last/first = {:.4}", meshes[3].estimate / meshes[0].estimate))
}

/// `‖G - Gⁿ‖²` for `σ = 0`, `ν = λδ₁`, `ψ(k) = 0.7·1{k = 1}` on integers.
///
/// Per cell with `k ~ Poisson(λh)`: `G - Gⁿ = 0.7·k·1{k ≥ 2}` up to a
/// constant, and adding a unit jump changes it by
/// `0.7·(2·1{k = 1} + 1{k ≥ 2})`.
fn pure_jump_hand(lambda: f64, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let r = lambda * h;
    let p0 = (-r).exp();
    let p1 = r * p0;
    let mean = r - p1;
    let second = r + r * r - p1;
    let var = 0.49 * (second - mean * mean);
    let deriv = r * 0.49 * (4.0 * p1 + (1.0 - p0 - p1));
    cells as f64 * (var + deriv)
}

fn lemma4_pure_jump() -> Result<String, String> {
    let (cfg, rows) = run("lemma4-pure-jump");
    let Params::Lemma4(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    if cfg.triplet.sigma != 0.0 || cfg.triplet.atoms != Some(vec![[1.0, 2.0]]) {
        return Err("config is not the pure-jump setup".into());
    }
    for (row, &n) in rows.iter().zip(&p.cells) {
        let hand = pure_jump_hand(2.0, n);
        if !rel_close(row.target.unwrap_or(f64::NAN), hand, 1e-10) {
            return Err(format!("cells={n}: library oracle {:?} vs hand {hand}", row.target));
        }
        if !within(row, hand, GATE) {
            return Err(format!("cells={n}: {} ± {} vs {hand}", row.estimate, row.stderr));
        }
    }
    Ok(format!("{} meshes within {GATE} stderr of the Poisson computation", p.cells.len()))
}

fn centered() -> Result<String, String> {
    let (_, rows) = run("centered-inequality");
    if rows.len() != 5 {
        return Err(format!("{} functionals, expected 5", rows.len()));
    }
    for r in &rows {
        if !(r.estimate <= GATE * r.stderr) {
            return Err(format!("{}: {} ± {}", r.params, r.estimate, r.stderr));
        }
    }
    Ok("E F² ≤ E|DF|² within 4 stderr for 5 centered functionals".into())
}

fn decomposition() -> Result<String, String> {
    let (_, rows) = run("d12-decomposition");
    for r in &rows {
        if !r.pass {
            return Err(format!("{}: gap {}", r.params, r.estimate));
        }
    }
    if !rows.iter().any(|r| r.params.starts_with("pathwise")) || !rows.iter().any(|r| r.params.starts_with("oracle")) {
        return Err("missing pathwise or oracle rows".into());
    }
    // ‖I₁(1_B)‖²_{D_{1,2}} = 2𝕞(B) for the first-order element.
    let first = rows.iter().find(|r| r.params.starts_with("oracle 1*I1")).ok_or("no order-1 oracle row")?;
    let hand = 2.0 * m_std([0.0, 1.0, -0.7, 1.2]);
    if !rel_close(first.target.unwrap_or(f64::NAN), hand, 1e-12) {
        return Err(format!("order-1 oracle {:?} vs hand {hand}", first.target));
    }
    Ok(format!("{} rows: pathwise and oracle splits exact to 1e-12", rows.len()))
}

fn theorem1() -> Result<String, String> {
    let (cfg, rows) = run("theorem1-pipeline");
    let Params::Theorem1(p) = &cfg.params else {
        return Err("wrong params".into());
    };
    if p.rects != [[0.0, 1.0, 0.5, 1.5], [1.0, 2.0, -1.0, -0.25]] || p.stages.len() != 3 {
        return Err("config does not match the required target".into());
    }
    let stages: Vec<&ResultRow> = rows.iter().filter(|r| r.params.contains("delta=")).collect();
    let bounds: Vec<&ResultRow> = rows.iter().filter(|r| r.params.contains("smoothing_error")).collect();
    if stages.len() != 3 || bounds.len() != 3 {
        return Err("missing stage or bound rows".into());
    }
    if !trend_ok(&stages, 2.0, 0.3) {
        let v: Vec<String> = stages.iter().map(|r| format!("{:.4}±{:.4}", r.estimate, r.stderr)).collect();
        return Err(format!("distances {v:?}"));
    }
    for b in &bounds {
        let bound = b.target.unwrap_or(f64::NAN);
        if !(b.pass && b.estimate >= 0.0 && b.estimate <= bound + 1e-12) {
            return Err(format!("{}: smoothing {} vs bound {bound}", b.params, b.estimate));
        }
    }
    Ok(format!(
        "distance decreasing, final/first = {:.4}, smoothing bounds respected",
        stages[2].estimate / stages[0].estimate
    ))
}

fn csv_without_seconds(rows: &[ResultRow]) -> String {
    let cleared: Vec<ResultRow> = rows.iter().cloned().map(|r| ResultRow { seconds: 0.0, ..r }).collect();
    let mut buf = Vec::new();
    write_csv(&cleared, &mut buf).expect("csv");
    String::from_utf8(buf).expect("utf-8")
}

fn determinism() -> Result<String, String> {
    let mut names: Vec<String> = std::fs::read_dir(config_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok()?.path().file_stem()?.to_str().map(String::from))
        .collect();
    names.sort();
    for name in &names {
        let mut cfg = load(name);
        cfg.replicates = cfg.replicates.min(4_000);
        let run_with = |threads: usize| -> Result<String, String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            let rows = pool.install(|| run_experiment(&cfg)).map_err(|e| format!("{name}: {e}"))?;
            Ok(csv_without_seconds(&rows))
        };
        let (a, b, c) = (run_with(1)?, run_with(4)?, run_with(4)?);
        if a != b || b != c {
            return Err(format!("{name}: output depends on the thread count or the run"));
        }
    }
    Ok(format!("{} configs byte-identical under 1 and 4 threads", names.len()))
}

type Criterion = (&'static str, fn() -> Result<String, String>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 isometry", isometry),
        ("2 chaos oracle vs Monte Carlo", chaos_vs_mc),
        ("3 disjointification remainder", s2_norm),
        ("4 product rule", product_rule),
        ("5 chain rule and mollifiers", chain_rule),
        ("6 partition-sum convergence", lemma4_convergence),
        ("7 pure-jump partition-sum oracle", lemma4_pure_jump),
        ("8 centered-functional inequality", centered),
        ("9 norm decomposition", decomposition),
        ("10 smooth-product-cutoff pipeline", theorem1),
        ("11 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("[PASS] criterion {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
