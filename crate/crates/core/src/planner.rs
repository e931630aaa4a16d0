//! Attack parameter planning.
//!
//! Given `n`, the bias `eps` and `log2 N`, the planner picks the combination
//! weight `w` and the number `b` of cancelled coordinates that balance the
//! cost of building `w`-ary equations against the cost of a Walsh search
//! over the remaining `n - b` coordinates, rounds them to usable integers,
//! and predicts both costs.
//!
//! All arithmetic is `f64`. Floors are taken with a slack of `1e-9` so that
//! values that are integers in exact arithmetic do not drop by one.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bias::Bias;
use crate::error::{LpnError, Result};

const SLACK: f64 = 1e-9;

fn floor_slack(x: f64) -> f64 {
    (x + SLACK).floor()
}

/// `log N + 2 + 2 log eps`: bits of cancellation bought per unit of weight.
fn gain(log_n: f64, eps: Bias) -> f64 {
    log_n + 2.0 + 2.0 * eps.log2()
}

/// `T = log N / (3 log N + 4 + 4 log eps)`.
pub fn compute_t(log_n: f64, eps: Bias) -> Result<f64> {
    let den = 3.0 * log_n + 4.0 + 4.0 * eps.log2();
    if den <= 0.0 {
        return Err(LpnError::infeasible(format!(
            "too few samples: 3 log N + 4 + 4 log eps = {den:.4} <= 0"
        )));
    }
    Ok(log_n / den)
}

/// Real-valued optimal weight `w = (n + 2) / (3/2 log N + 2 + 2 log eps)`.
pub fn choose_w(n: usize, log_n: f64, eps: Bias) -> Result<f64> {
    let den = 1.5 * log_n + 2.0 + 2.0 * eps.log2();
    if den <= 0.0 {
        return Err(LpnError::infeasible(format!(
            "too few samples: 3/2 log N + 2 + 2 log eps = {den:.4} <= 0"
        )));
    }
    Ok((n as f64 + 2.0) / den)
}

/// Real-valued `b = w (log N + 2 + 2 log eps) - 2`, the number of trailing
/// coordinates that `w`-ary combination can cancel while still leaving
/// enough equations. May exceed `n - 1` for extreme inputs.
pub fn choose_b(w: f64, log_n: f64, eps: Bias) -> f64 {
    w * gain(log_n, eps) - 2.0
}

/// `w' = 2 floor((w + 1) / 2)`, `b' = floor(w' (log N + 2 + 2 log eps) - 2)`,
/// `r = w - w'`.
pub fn round_params(w: f64, log_n: f64, eps: Bias) -> Result<(u32, i64, f64)> {
    if w.is_nan() || w <= 0.0 || !w.is_finite() {
        return Err(LpnError::invalid(format!(
            "weight must be positive, got {w}"
        )));
    }
    let w_int = (2.0 * floor_slack((w + 1.0) / 2.0)).max(2.0);
    let b_int = floor_slack(w_int * gain(log_n, eps) - 2.0);
    if b_int < 0.0 {
        return Err(LpnError::infeasible(format!(
            "negative b: rounded b' = {b_int}"
        )));
    }
    Ok((w_int as u32, b_int as i64, w - w_int))
}

/// Predicted `(log2 C_LC, log2 C_HT)`.
///
/// `C_LC = N^(w'/2)` covers enumerating the half-combinations; `C_HT` is a
/// Walsh search over `2^(n - b')` candidates with `log2` of the equation
/// count `N^w' / 2^b'` as the per-candidate factor.
pub fn complexity_estimates(n: usize, w_int: u32, b_int: u32, log_n: f64) -> Result<(f64, f64)> {
    if w_int < 2 || !w_int.is_multiple_of(2) {
        return Err(LpnError::invalid(format!(
            "w' must be even and >= 2, got {w_int}"
        )));
    }
    let log_equations = w_int as f64 * log_n - b_int as f64;
    if log_equations <= 0.0 {
        return Err(LpnError::infeasible(format!(
            "no equations survive: w' log N - b' = {log_equations:.4}"
        )));
    }
    let lc = w_int as f64 / 2.0 * log_n;
    let ht = (n as f64 - b_int as f64) + log_equations.log2();
    Ok((lc, ht))
}

/// `log2 N` needed for cube-root time: `n / log n + log(4 / (2 eps)^4)`.
pub fn cube_root_sample_bound(n: usize, eps: Bias) -> f64 {
    let nf = n as f64;
    nf / nf.log2() + minimum_samples(eps)
}

/// `log2(4 / (2 eps)^4) = 2 - 4 log2(2 eps)`.
pub fn minimum_samples(eps: Bias) -> f64 {
    2.0 - 4.0 * (1.0 + eps.log2())
}

/// Number of leading key bits that can be decimated away given the sample
/// surplus over [`cube_root_sample_bound`].
pub fn decimation_plan(n: usize, log_n: f64, eps: Bias) -> u32 {
    if n < 4 {
        return 0;
    }
    let bound = cube_root_sample_bound(n, eps);
    if log_n < bound {
        return 0;
    }
    let l = log_n - bound;
    let nf = n as f64;
    let mut l_prime = floor_slack(l).min(nf - 3.0).max(0.0) as u32;
    // Retained samples N 2^-l' must still meet the bound in dimension n - l'.
    while l_prime > 0 {
        let rest = nf - l_prime as f64;
        if nf / nf.log2() + l - l_prime as f64 >= rest / rest.log2() - SLACK {
            break;
        }
        l_prime -= 1;
    }
    l_prime
}

/// Manually pinned parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanOverrides {
    pub w_int: Option<u32>,
    pub b_int: Option<u32>,
    pub l_prime: Option<u32>,
}

impl PlanOverrides {
    pub fn is_empty(&self) -> bool {
        self.w_int.is_none() && self.b_int.is_none()
    }
}

/// A complete attack plan.
///
/// `n` and `log_n` describe the whole instance. When `l_prime > 0` the
/// weight/cancellation parameters (`t`, `w_*`, `b_*`, `r`) and the cost
/// estimates refer to the decimated problem of dimension `n - l_prime`
/// with `log_n - l_prime` expected samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub n: usize,
    pub eps: Bias,
    pub log_n: f64,
    pub w_real: f64,
    pub b_real: f64,
    pub t: f64,
    pub w_int: u32,
    pub b_int: u32,
    pub r: f64,
    pub l_prime: u32,
    pub log_c_lc: f64,
    pub log_c_ht: f64,
    pub feasible: bool,
}

/// Log-space margin `w' log N - b' - log(1 / eps~^2)` of the available
/// equations over the hypothesis-testing requirement.
pub fn equation_margin(w_int: u32, b_int: u32, log_n: f64, eps: Bias) -> f64 {
    let w = w_int as f64;
    let have = w * log_n - b_int as f64;
    let need = -2.0 * (w - 1.0) - 2.0 * w * eps.log2();
    have - need
}

pub fn make_plan(n: usize, eps: Bias, log_n: f64, overrides: PlanOverrides) -> Result<Plan> {
    if n == 0 {
        return Err(LpnError::invalid("dimension must be positive"));
    }
    let min = minimum_samples(eps);
    if log_n + SLACK < min {
        return Err(LpnError::infeasible(format!(
            "too few samples: log N = {log_n} < {min}"
        )));
    }
    let l_prime = match overrides.l_prime {
        Some(l) => {
            if l > 0 && l as usize + 3 > n {
                return Err(LpnError::invalid(format!(
                    "decimation l' = {l} exceeds n - 3 = {}",
                    n as i64 - 3
                )));
            }
            l
        }
        None => decimation_plan(n, log_n, eps),
    };
    let n_eff = n - l_prime as usize;
    let log_eff = log_n - l_prime as f64;

    let t = compute_t(log_eff, eps)?;
    let w_real = choose_w(n_eff, log_eff, eps)?;
    let b_real = choose_b(w_real, log_eff, eps);

    let w_int = match overrides.w_int {
        Some(w) if w >= 2 && w % 2 == 0 => w,
        Some(w) => {
            return Err(LpnError::invalid(format!(
                "w' must be even and >= 2, got {w}"
            )));
        }
        None => round_params(w_real, log_eff, eps)?.0,
    };
    let mut b_int = match overrides.b_int {
        Some(b) => b as i64,
        None => {
            let b = floor_slack(w_int as f64 * gain(log_eff, eps) - 2.0);
            if b < 0.0 {
                return Err(LpnError::infeasible(format!(
                    "negative b: rounded b' = {b}"
                )));
            }
            b as i64
        }
    };
    let mut feasible = true;
    if b_int > n_eff as i64 - 1 {
        b_int = n_eff as i64 - 1;
        feasible = false;
    }
    if b_int < 0 {
        return Err(LpnError::infeasible(
            "empty hypothesis space: dimension too small",
        ));
    }
    let b_int = b_int as u32;
    if equation_margin(w_int, b_int, log_eff, eps) < -1e-6 {
        feasible = false;
    }
    let (log_c_lc, log_c_ht) = complexity_estimates(n_eff, w_int, b_int, log_eff)?;
    Ok(Plan {
        n,
        eps,
        log_n,
        w_real,
        b_real,
        t,
        w_int,
        b_int,
        r: w_real - w_int as f64,
        l_prime,
        log_c_lc,
        log_c_ht,
        feasible,
    })
}

/// [`make_plan`] with `b'` lowered, when not pinned, until the expected
/// number of distinct combined equations `C(N', w') / 2^b'` reaches
/// `(m + 8) / eps~^2` for a Walsh search over `m = n' - b'` coordinates.
///
/// The asymptotic choice of `b'` only guarantees `1 / eps~^2` equations,
/// which cannot single out one of `2^m` candidates at small `n`.
pub fn desk_plan(n: usize, eps: Bias, log_n: f64, overrides: PlanOverrides) -> Result<Plan> {
    let base = make_plan(n, eps, log_n, overrides)?;
    if overrides.b_int.is_some() {
        return Ok(base);
    }
    let n_eff = base.reduced_dim();
    let samples = (log_n - base.l_prime as f64).exp2();
    let w = base.w_int;
    let eps_tilde = (w as f64 - 1.0).exp2() * eps.as_f64().powi(w as i32);
    let log_sets = log2_binomial(samples, w);
    let mut b = base.b_int.min(n_eff as u32 - 1);
    while b > 0 {
        let m = (n_eff - b as usize) as f64;
        let need = ((m + 8.0) / (eps_tilde * eps_tilde)).log2();
        if log_sets - b as f64 >= need {
            break;
        }
        b -= 1;
    }
    make_plan(
        n,
        eps,
        log_n,
        PlanOverrides {
            w_int: Some(w),
            b_int: Some(b),
            l_prime: Some(base.l_prime),
        },
    )
}

/// `log2 C(n, k)` for real `n >= k`.
fn log2_binomial(n: f64, k: u32) -> f64 {
    (0..k)
        .map(|i| ((n - i as f64).max(0.0) / (i + 1) as f64).log2())
        .sum()
}

impl Plan {
    /// Dimension after decimation.
    pub fn reduced_dim(&self) -> usize {
        self.n - self.l_prime as usize
    }

    /// Dimension of the Walsh search.
    pub fn spectrum_dim(&self) -> usize {
        self.reduced_dim() - self.b_int as usize
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n", self.n.to_string());
        put("eps_num", self.eps.num().to_string());
        put("eps_den", self.eps.den().to_string());
        put("log_n_samples", fmt_real(self.log_n));
        put("w_real", fmt_real(self.w_real));
        put("b_real", fmt_real(self.b_real));
        put("t", fmt_real(self.t));
        put("w_int", self.w_int.to_string());
        put("b_int", self.b_int.to_string());
        put("r", fmt_real(self.r));
        put("l_prime", self.l_prime.to_string());
        put("log_c_lc", fmt_real(self.log_c_lc));
        put("log_c_ht", fmt_real(self.log_c_ht));
        put("feasible", self.feasible.to_string());
        s
    }

    pub fn from_kv(text: &str) -> Result<Plan> {
        let map = parse_kv(text)?;
        let get = |k: &str| {
            map.get(k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| LpnError::parse(0, format!("missing key {k}")))
        };
        fn num<T: std::str::FromStr>(map: &KvMap, k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| LpnError::parse(map[k].0, format!("bad value for {k}: {v:?}")))
        }
        let eps = Bias::new(
            num(&map, "eps_num", get("eps_num")?)?,
            num(&map, "eps_den", get("eps_den")?)?,
        )?;
        Ok(Plan {
            n: num(&map, "n", get("n")?)?,
            eps,
            log_n: num(&map, "log_n_samples", get("log_n_samples")?)?,
            w_real: num(&map, "w_real", get("w_real")?)?,
            b_real: num(&map, "b_real", get("b_real")?)?,
            t: num(&map, "t", get("t")?)?,
            w_int: num(&map, "w_int", get("w_int")?)?,
            b_int: num(&map, "b_int", get("b_int")?)?,
            r: num(&map, "r", get("r")?)?,
            l_prime: num(&map, "l_prime", get("l_prime")?)?,
            log_c_lc: num(&map, "log_c_lc", get("log_c_lc")?)?,
            log_c_ht: num(&map, "log_c_ht", get("log_c_ht")?)?,
            feasible: num(&map, "feasible", get("feasible")?)?,
        })
    }
}

/// Shortest decimal that round-trips through `f64`.
pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) type KvMap = BTreeMap<String, (usize, String)>;

/// Parses `key = value` lines, ignoring blank lines, `#` comments and
/// `[section]` headers. Keys map to `(line number, value)`.
pub(crate) fn parse_kv(text: &str) -> Result<KvMap> {
    let mut map = KvMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
            continue;
        }
        let (k, v) = line.split_once(" = ").ok_or_else(|| {
            LpnError::parse(i + 1, format!("expected `key = value`, got {line:?}"))
        })?;
        if map.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
            return Err(LpnError::parse(i + 1, format!("duplicate key {k}")));
        }
    }
    Ok(map)
}

/// One line of the complexity overview.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub log_n: f64,
    pub w: f64,
    pub b: f64,
    pub w_int: u32,
    pub b_int: u32,
    pub rounding_cost: f64,
    pub log_c_lc: f64,
    pub log_c_ht: f64,
}

impl TableRow {
    fn from_plan(p: &Plan) -> Self {
        TableRow {
            log_n: p.log_n,
            w: p.w_real,
            b: p.b_real,
            w_int: p.w_int,
            b_int: p.b_int,
            rounding_cost: p.r.abs() * p.log_n,
            log_c_lc: p.log_c_lc,
            log_c_ht: p.log_c_ht,
        }
    }

    /// Cells in column order, at display precision.
    pub fn cells(&self) -> [String; 8] {
        [
            fmt_display(self.log_n, 2),
            fmt_display(self.w, 2),
            fmt_display(self.b, 2),
            self.w_int.to_string(),
            self.b_int.to_string(),
            fmt_display(self.rounding_cost, 1),
            fmt_display(self.log_c_lc, 2),
            fmt_display(self.log_c_ht, 2),
        ]
    }
}

/// Integers print bare, everything else with `decimals` places.
pub fn fmt_display(x: f64, decimals: usize) -> String {
    if (x - x.round()).abs() < SLACK {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.decimals$}")
    }
}

pub const TABLE_HEADER: [&str; 8] = [
    "log N",
    "w",
    "b",
    "w'",
    "b'",
    "|r| log N",
    "log C_LC",
    "log C_HT",
];

/// Plans for each `log N` without decimation.
pub fn emit_table(n: usize, eps: Bias, log_ns: &[f64]) -> Vec<Result<TableRow>> {
    log_ns
        .iter()
        .map(|&log_n| {
            let overrides = PlanOverrides {
                l_prime: Some(0),
                ..Default::default()
            };
            make_plan(n, eps, log_n, overrides).map(|p| TableRow::from_plan(&p))
        })
        .collect()
}

/// Aligned text rendering; infeasible rows show their error inline.
pub fn format_table(rows: &[Result<TableRow>], log_ns: &[f64]) -> String {
    let mut lines: Vec<Vec<String>> = vec![TABLE_HEADER.iter().map(|s| s.to_string()).collect()];
    let mut errors = Vec::new();
    for (row, &log_n) in rows.iter().zip(log_ns) {
        match row {
            Ok(r) => lines.push(r.cells().to_vec()),
            Err(e) => errors.push((lines.len(), format!("{}  {e}", fmt_display(log_n, 2)))),
        }
    }
    let widths: Vec<usize> = (0..TABLE_HEADER.len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut err_iter = errors.into_iter().peekable();
    for (i, line) in lines.iter().enumerate() {
        while let Some((_, msg)) = err_iter.next_if(|(at, _)| *at == i) {
            let _ = writeln!(out, "{msg}");
        }
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    for (_, msg) in err_iter {
        let _ = writeln!(out, "{msg}");
    }
    out
}
