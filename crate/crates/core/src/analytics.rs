//! Steady-state models of the CIDC: packet-to-slot ratio, saturation
//! threshold, contention-intensity Markov chain, delay fixed point and
//! collision probability.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::model::ProtocolParams;

/// Bisection tolerance (relative) for the delay fixed point.
pub const ROOT_TOL: f64 = 1e-12;
/// Largest accepted `||(P - I) p||_inf`.
pub const LINEAR_TOL: f64 = 1e-9;
/// Convergence threshold on collision-probability updates.
pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;
const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub upsilon_s: f64,
    pub n_s: f64,
    pub c_s: f64,
    pub d_o: f64,
    pub d_c: f64,
    pub p_ck0: f64,
    pub p_col: f64,
    pub p_col_ub: f64,
    pub n_sat: f64,
    pub c_dist: Vec<f64>,
}

fn lts(p: &ProtocolParams) -> f64 {
    p.lambda * p.t_slot
}

/// Expected packet-to-slot ratio in steady state.
pub fn steady_ratio(n_s: f64, p_ck0: f64, params: &ProtocolParams) -> Result<f64> {
    if !(0.0..1.0).contains(&p_ck0) {
        return Err(Error::InvalidParam(format!("P(c=0) = {p_ck0} outside [0, 1)")));
    }
    let n = params.n_vehicles as f64;
    let den = n_s - params.lambda * n * (params.k_busy as f64 - 1.0) * params.t_slot;
    if den <= 0.0 {
        return Err(Error::BeyondSaturation(format!(
            "n_s = {n_s} does not exceed the busy-slot load {}",
            n_s - den
        )));
    }
    Ok(params.lambda * n * params.t_slot / (den * (1.0 - p_ck0)))
}

/// Vehicle count at which the steady ratio reaches `1/M`.
pub fn saturation_threshold(n_s: f64, p_ck0: f64, params: &ProtocolParams) -> f64 {
    let per_vehicle =
        params.lambda * (params.m_param as f64 / (1.0 - p_ck0) + params.k_busy as f64 - 1.0) * params.t_slot;
    n_s / per_vehicle
}

/// `Binomial(n, p)` probabilities for `0..=n`.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let p = p.clamp(0.0, 1.0);
    let dist = Binomial::new(p, n as u64).expect("probability clamped to [0, 1]");
    (0..=n as u64).map(|x| dist.pmf(x)).collect()
}

/// One-slot transition matrix of the contention intensity, column `j` being
/// the distribution of `c(k+1)` given `c(k) = j`.
///
/// Mass that would leave `{0, ..., N}` is put on the nearest boundary state.
pub fn transition_matrix(params: &ProtocolParams, upsilon_s: f64, p_col: f64) -> Result<DMatrix<f64>> {
    let n = params.n_vehicles;
    let p_idle = lts(params);
    let p_busy = p_idle * params.k_busy as f64;
    if p_busy >= 1.0 {
        return Err(Error::InvalidParam(format!("lambda K T_s = {p_busy} must be below 1")));
    }
    if !(0.0..=1.0).contains(&upsilon_s) || !(0.0..=1.0).contains(&p_col) {
        return Err(Error::InvalidParam(format!(
            "upsilon = {upsilon_s} and P_col = {p_col} must lie in [0, 1]"
        )));
    }
    let idle = binomial_pmf(n, p_idle);
    let busy = binomial_pmf(n, p_busy);
    let top = n as i64;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for j in 0..=n {
        let mut add = |to: i64, w: f64| {
            let i = to.clamp(0, top) as usize;
            m[(i, j)] += w;
        };
        for x in 0..=n {
            let (j, xi) = (j as i64, x as i64);
            add(j + xi, (1.0 - upsilon_s) * idle[x]);
            add(j + xi - 1, upsilon_s * (1.0 - p_col) * busy[x]);
            add(j + xi - 2, upsilon_s * p_col * busy[x]);
        }
        let s: f64 = m.column(j).sum();
        m.column_mut(j).unscale_mut(s);
    }
    Ok(m)
}

/// Stationary vector of a column-stochastic matrix.
///
/// Solves `(P - I) p = 0` with the last equation replaced by `sum(p) = 1`.
pub fn steady_distribution(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::InvalidParam("transition matrix must be square and nonempty".into()));
    }
    let mut a = matrix - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let Some(mut p) = a.lu().solve(&b) else {
        return Err(Error::AmbiguousStationary { residual: f64::NAN });
    };
    let residual = ((matrix - DMatrix::identity(n, n)) * &p).amax();
    if !residual.is_finite() || residual > LINEAR_TOL || p.min() < -LINEAR_TOL {
        return Err(Error::AmbiguousStationary { residual });
    }
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let s = p.sum();
    Ok(p.iter().map(|x| x / s).collect())
}

/// Left-hand side minus right-hand side of the scalar delay equation in `c`.
fn delay_gap(c: f64, params: &ProtocolParams) -> f64 {
    let n = params.n_vehicles as f64;
    let (k, m, ts) = (params.k_busy as f64, params.m_param as f64, params.t_slot);
    let p0 = (1.0 - c / n).powf(n);
    let d_o = (c + 1.0 - (1.0 - p0) / 2.0) * k * ts + (m * (c + 1.0) - c) * ts;
    n * params.lambda * d_o - c
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) > 0 >= f(hi)
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the mean-delay fixed point for `(c_s, d_o, P(c=0))`.
///
/// The gap function is positive at 0 and convex on `[0, N]`. With two roots
/// the smaller one is returned; with none the system is beyond saturation.
pub fn solve_delay_system(params: &ProtocolParams) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let n = params.n_vehicles as f64;
    let f = |c: f64| delay_gap(c, params);
    let root = if f(n) < 0.0 {
        bisect(f, 0.0, n)
    } else {
        // golden-section search for the minimum of the convex gap
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.0, n);
        for _ in 0..200 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let c_min = 0.5 * (a + b);
        if f(c_min) >= 0.0 {
            return Err(Error::BeyondSaturation(format!(
                "no contention intensity below N = {n} balances the delay equations (min gap {:.3e})",
                f(c_min)
            )));
        }
        bisect(f, 0.0, c_min)
    };
    let d_o = root / (n * params.lambda);
    if d_o >= 1.0 / params.lambda {
        return Err(Error::BeyondSaturation(format!("overall delay {d_o} s exceeds the message period")));
    }
    Ok((root, d_o, (1.0 - root / n).powf(n)))
}

/// Contention delay from overall delay.
pub fn contention_delay(d_o: f64, params: &ProtocolParams) -> Result<f64> {
    let d_c = d_o - params.k_busy as f64 * params.t_slot + params.t_difs;
    if d_c < 0.0 {
        return Err(Error::InvalidParam(format!("overall delay {d_o} s is shorter than one frame")));
    }
    Ok(d_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    SmallN,
    LargeN,
}

/// Closed-form approximations of `c_s` for small and large `N`.
pub fn approx_cs(params: &ProtocolParams, regime: Regime) -> Result<f64> {
    let nl = params.n_vehicles as f64 * params.lambda * params.t_slot;
    let (k, m) = (params.k_busy as f64, params.m_param as f64);
    let den = 1.0 - nl * (k + m - 1.0);
    if den <= 0.0 {
        return Err(Error::BeyondSaturation(format!("1 - N lambda (K + M - 1) T_s = {den}")));
    }
    let per = match regime {
        Regime::SmallN => k + m,
        Regime::LargeN => k / 2.0 + m,
    };
    Ok(nl * per / den)
}

/// Probability of at least one generation in a slot, idle or busy.
fn p_arrival_in_slot(params: &ProtocolParams, upsilon_s: f64) -> f64 {
    let n = params.n_vehicles as i32;
    let p = lts(params);
    (1.0 - upsilon_s) * (1.0 - (1.0 - p).powi(n)) + upsilon_s * (1.0 - (1.0 - p * params.k_busy as f64).powi(n))
}

/// Collision probability from the forward-collision sum, given the
/// stationary distribution of `c(k)` and the steady ratio.
///
/// `P_T` over `alpha` slots is `Binomial(alpha, upsilon)` and arrivals over
/// the same span are `Binomial(N, lambda alpha T)` with `T` the mean slot
/// length.
pub fn forward_collision_sum(params: &ProtocolParams, c_dist: &[f64], upsilon_s: f64) -> f64 {
    let n = params.n_vehicles;
    let m = params.m_param as usize;
    let p_a_k2 = p_arrival_in_slot(params, upsilon_s);
    let t_bar = (1.0 - upsilon_s) * params.t_slot + upsilon_s * params.k_busy as f64 * params.t_slot;
    // c1' = c(k1) - 1, so only c(k1) <= N is reachable
    let c1_max = n.saturating_sub(1);
    let mut total = 0.0;
    for beta in 1..=c1_max {
        let alpha = beta * m;
        let tx = binomial_pmf(alpha, upsilon_s);
        let arr = binomial_pmf(n, (params.lambda * alpha as f64 * t_bar).min(1.0));
        // inner[c1'] = sum_{tau = beta}^{c1'} P_T(tau) P_A(tau - beta)
        let mut acc = 0.0;
        for c1 in beta..=c1_max {
            let tau = c1;
            if tau <= alpha {
                acc += tx[tau] * arr.get(tau - beta).copied().unwrap_or(0.0);
            }
            total += c_dist.get(c1 + 1).copied().unwrap_or(0.0) * p_a_k2 * acc;
        }
    }
    2.0 * total
}

/// Solution of the coupled ratio / chain / collision equations.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSolution {
    pub p_col: f64,
    pub upsilon_s: f64,
    pub n_s: f64,
    pub c_dist: Vec<f64>,
    pub iterations: usize,
}

/// Damped fixed-point iteration for the collision probability.
pub fn collision_probability_numeric(params: &ProtocolParams) -> Result<CollisionSolution> {
    let (_, _, p0_init) = solve_delay_system(params)?;
    let mut p_col = 0.0;
    let mut n_s = 1.0;
    let mut p0 = p0_init;
    let mut last_change = f64::INFINITY;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let upsilon = steady_ratio(n_s, p0, params)?;
        if upsilon > 1.0 {
            return Err(Error::BeyondSaturation(format!("steady ratio {upsilon} exceeds 1")));
        }
        let c_dist = steady_distribution(&transition_matrix(params, upsilon, p_col)?)?;
        p0 = c_dist[0];
        if p0 >= 1.0 {
            return Err(Error::Numeric { what: "stationary mass collapsed on c = 0".into(), residual: 1.0 - p0 });
        }
        let target = forward_collision_sum(params, &c_dist, upsilon).min(1.0);
        last_change = (target - p_col).abs();
        if last_change < FIXED_POINT_TOL {
            return Ok(CollisionSolution { p_col: target, upsilon_s: upsilon, n_s: 1.0 + target, c_dist, iterations: it });
        }
        p_col += DAMPING * (target - p_col);
        n_s = 1.0 + p_col;
    }
    Err(Error::Numeric { what: "collision fixed point did not converge".into(), residual: last_change })
}

/// Closed-form upper bound on the collision probability.
pub fn collision_upper_bound(params: &ProtocolParams, p_ck0: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_ck0) {
        return Err(Error::InvalidParam(format!("P(c=0) = {p_ck0} outside [0, 1)")));
    }
    let n = params.n_vehicles as f64;
    let k = params.k_busy as f64;
    let p = lts(params);
    if p * k >= 1.0 {
        return Err(Error::InvalidParam(format!("lambda K T_s = {} must be below 1", p * k)));
    }
    let b1 = p * n;
    let bk1 = p * n * (k - 1.0);
    let a1 = (1.0 - p_ck0) * (1.0 - (1.0 - p).powf(n));
    let ak = (1.0 - p_ck0) * (1.0 - (1.0 - p * k).powf(n));
    let x = a1 + 1.0 + bk1;
    let disc = x * x / 4.0 + b1 * (ak - a1) / (1.0 - p_ck0) - (a1 + 1.0) * bk1;
    if disc < 0.0 {
        return Err(Error::Numeric { what: "negative discriminant in the collision bound".into(), residual: disc });
    }
    Ok(disc.sqrt() + x / 2.0 - 1.0)
}

/// Every steady-state quantity for one parameter point.
pub fn steady_state(params: &ProtocolParams) -> Result<SteadyState> {
    let (c_s, d_o, p_ck0) = solve_delay_system(params)?;
    let d_c = contention_delay(d_o, params)?;
    let sol = collision_probability_numeric(params)?;
    let p_col_ub = collision_upper_bound(params, p_ck0)?;
    Ok(SteadyState {
        upsilon_s: sol.upsilon_s,
        n_s: sol.n_s,
        c_s,
        d_o,
        d_c,
        p_ck0,
        p_col: sol.p_col,
        p_col_ub,
        n_sat: saturation_threshold(sol.n_s, p_ck0, params),
        c_dist: sol.c_dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize) -> ProtocolParams {
        ProtocolParams { n_vehicles: n, ..Default::default() }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn ratio_example() {
        let u = steady_ratio(1.0, 0.0, &params(100)).unwrap();
        assert!(close(u, 0.013 / (1.0 - 0.299), 1e-9), "{u}");
        let mut p = params(100);
        p.lambda = 1e-6;
        assert!(steady_ratio(1.0, 0.0, &p).unwrap() < 1e-6);
        assert!(matches!(steady_ratio(1.0, 0.0, &params(400)), Err(Error::BeyondSaturation(_))));
    }

    #[test]
    fn saturation_examples() {
        assert!(close(saturation_threshold(1.0, 0.0, &params(100)), 1.0 / (10.0 * 25.0 * 13e-6), 1e-12));
        let mut p = params(100);
        p.set_t_tx(332e-6).unwrap();
        let n_sat = saturation_threshold(1.0, 0.0, &p);
        assert!((n_sat - 248.1).abs() < 0.05, "{n_sat}");
        let mut fast = params(100);
        fast.lambda = 20.0;
        assert!(close(saturation_threshold(1.0, 0.0, &fast), 0.5 * saturation_threshold(1.0, 0.0, &params(100)), 1e-12));
    }

    #[test]
    fn binomial_small_case() {
        let pmf = binomial_pmf(2, 0.1);
        assert!(close(pmf[0], 0.81, 1e-12) && close(pmf[1], 0.18, 1e-12) && close(pmf[2], 0.01, 1e-12));
    }

    #[test]
    fn zero_ratio_gives_identity() {
        let mut p = params(5);
        p.lambda = 0.0;
        let m = transition_matrix(&p, 0.0, 0.0).unwrap();
        assert_eq!(m, DMatrix::identity(6, 6));
    }

    /// Enumerates all 2^N arrival patterns and the collision branch for one
    /// slot, without using binomial coefficients.
    fn brute_force(n: usize, k: f64, lts: f64, ups: f64, pc: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n + 1, n + 1);
        for j in 0..=n {
            for mask in 0u32..(1 << n) {
                let x = mask.count_ones() as i64;
                let pr = |q: f64| q.powi(x as i32) * (1.0 - q).powi(n as i32 - x as i32);
                let clip = |v: i64| v.clamp(0, n as i64) as usize;
                let j = j as i64;
                m[(clip(j + x), j as usize)] += (1.0 - ups) * pr(lts);
                m[(clip(j + x - 1), j as usize)] += ups * (1.0 - pc) * pr(lts * k);
                m[(clip(j + x - 2), j as usize)] += ups * pc * pr(lts * k);
            }
        }
        m
    }

    fn small_chain_params() -> ProtocolParams {
        // lambda T_s = 0.05 with K = 2
        ProtocolParams { n_vehicles: 3, k_busy: 2, lambda: 0.05 / 13e-6, ..Default::default() }
    }

    #[test]
    fn matrix_matches_enumeration() {
        let m = transition_matrix(&small_chain_params(), 0.3, 0.1).unwrap();
        let oracle = brute_force(3, 2.0, 0.05, 0.3, 0.1);
        assert!((m - oracle).amax() < 1e-12);
    }

    #[test]
    fn two_state_chain() {
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]);
        let p = steady_distribution(&m).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_ambiguous() {
        assert!(matches!(
            steady_distribution(&DMatrix::identity(3, 3)),
            Err(Error::AmbiguousStationary { .. })
        ));
    }

    fn power_iteration(m: &DMatrix<f64>) -> DVector<f64> {
        let n = m.nrows();
        let mut p = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..200_000 {
            let next = m * &p;
            let d = (&next - &p).amax();
            p = next;
            if d < 1e-15 {
                break;
            }
        }
        p
    }

    #[test]
    fn small_chain_matches_power_iteration() {
        let m = transition_matrix(&small_chain_params(), 0.3, 0.1).unwrap();
        let p = steady_distribution(&m).unwrap();
        let q = power_iteration(&m);
        for i in 0..4 {
            assert!((p[i] - q[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_load_delay() {
        let mut p = params(100);
        p.lambda = 1e-9;
        let (c, d_o, p0) = solve_delay_system(&p).unwrap();
        assert!(c < 1e-9 && p0 > 1.0 - 1e-9);
        assert!(close(d_o, 26.0 * 13e-6, 1e-6));
        let d_c = contention_delay(26.0 * 13e-6, &p).unwrap();
        assert!(close(d_c, 84e-6, 1e-9));
        assert!(close(contention_delay(1e-3, &p).unwrap(), 746e-6, 1e-9));
        assert!(contention_delay(1e-6, &p).is_err());
    }

    #[test]
    fn small_n_approximation() {
        let p = params(25);
        let cl = approx_cs(&p, Regime::SmallN).unwrap();
        let ch = approx_cs(&p, Regime::LargeN).unwrap();
        assert!(close(cl, 0.0845 / 0.91875, 1e-9));
        assert!(close(ch, 0.0455 / 0.91875, 1e-9));
        let (c, _, _) = solve_delay_system(&p).unwrap();
        assert!(close(c, cl, 0.05), "{c} vs {cl}");
    }

    #[test]
    fn beyond_saturation_at_long_frames() {
        let mut p = params(250);
        p.set_t_tx(332e-6).unwrap();
        assert!(matches!(solve_delay_system(&p), Err(Error::BeyondSaturation(_))));
    }

    #[test]
    fn solver_satisfies_all_three_equations() {
        for n in (25..=250).step_by(25) {
            let p = params(n);
            let (c, d_o, p0) = solve_delay_system(&p).unwrap();
            let nn = n as f64;
            let rhs_a = (c + 1.0 - (1.0 - p0) / 2.0) * 24.0 * 13e-6 + (2.0 * (c + 1.0) - c) * 13e-6;
            assert!(close(d_o, rhs_a, 1e-9));
            assert!(close(nn * 10.0 * d_o, c, 1e-9));
            assert!(close(p0, (1.0 - c / nn).powf(nn), 1e-9));
        }
    }

    #[test]
    fn lemma3_sandwich() {
        for n in (25..=250).step_by(25) {
            let p = params(n);
            let (c, _, _) = solve_delay_system(&p).unwrap();
            let lo = approx_cs(&p, Regime::LargeN).unwrap();
            let hi = approx_cs(&p, Regime::SmallN).unwrap();
            assert!(lo <= c && c <= hi, "N={n}: {lo} <= {c} <= {hi}");
        }
    }

    #[test]
    fn bound_limits_and_monotonicity() {
        let mut p = params(100);
        p.lambda = 1e-12;
        assert!(collision_upper_bound(&p, 0.0).unwrap().abs() < 1e-9);
        let mut last = 0.0;
        for n in (25..=250).step_by(25) {
            let p = params(n);
            let (_, _, p0) = solve_delay_system(&p).unwrap();
            let ub = collision_upper_bound(&p, p0).unwrap();
            assert!(ub >= last, "N={n}: {ub} < {last}");
            last = ub;
        }
    }

    #[test]
    fn collision_vanishes_at_low_load() {
        let mut p = params(50);
        p.lambda = 0.1;
        let sol = collision_probability_numeric(&p).unwrap();
        assert!(sol.p_col < 1e-4, "{}", sol.p_col);
    }

    #[test]
    fn no_forward_collision_without_backlog() {
        // all mass on c(k1) <= 1 leaves nothing to collide with
        let p = params(3);
        assert_eq!(forward_collision_sum(&p, &[0.5, 0.5, 0.0, 0.0], 0.2), 0.0);
        assert!(forward_collision_sum(&p, &[0.0, 0.0, 1.0, 0.0], 0.2) > 0.0);
    }

    #[test]
    fn steady_state_consistency() {
        for n in [25, 100, 200] {
            let p = params(n);
            let s = steady_state(&p).unwrap();
            assert!(s.upsilon_s <= 0.5 && s.upsilon_s >= 0.0);
            assert!(s.n_s >= 1.0);
            assert!((s.c_dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(s.c_dist.iter().all(|&x| x >= 0.0));
            assert!(0.0 <= s.p_col && s.p_col <= s.p_col_ub && s.p_col_ub <= 1.0, "{s:?}");
            assert!(close(s.d_c, s.d_o - 24.0 * 13e-6 + 58e-6, 1e-12));
            // solver point fed into the ratio stays within the Lemma 1 bound
            let u = steady_ratio(s.n_s, s.p_ck0, &p).unwrap();
            assert!(u <= 0.5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn stationary_matches_power_iteration(dim in 2usize..=20, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed, &[]);
            let mut m = DMatrix::from_fn(dim, dim, |_, _| rng.gen::<f64>() + 1e-3);
            for j in 0..dim {
                let s: f64 = m.column(j).sum();
                m.column_mut(j).unscale_mut(s);
            }
            let p = steady_distribution(&m).unwrap();
            let q = power_iteration(&m);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for i in 0..dim {
                prop_assert!(p[i] >= 0.0);
                prop_assert!((p[i] - q[i]).abs() < 1e-8);
            }
        }

        #[test]
        fn matrix_columns_are_distributions(n in 1usize..40, ups in 0.0f64..=1.0, pc in 0.0f64..=1.0) {
            let m = transition_matrix(&params(n), ups, pc).unwrap();
            for j in 0..=n {
                prop_assert!((m.column(j).sum() - 1.0).abs() < 1e-12);
                prop_assert!(m.column(j).iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn small_n_above_large_n(n in 1usize..300) {
            let p = params(n);
            if let (Ok(l), Ok(h)) = (approx_cs(&p, Regime::SmallN), approx_cs(&p, Regime::LargeN)) {
                prop_assert!(h < l);
            }
        }
    }
}
