//! FTRL step over the enlarged simplex.
//!
//! The minimizer of `<p, total> + F(p)` on the simplex satisfies
//! `grad F(p) = c 1 - total` for a unique multiplier `c`. Each coordinate (or,
//! with a log barrier, each arm block) is a strictly increasing function of
//! `c`, so we find `c` by a safeguarded 1-D root search on `sum p(c) = 1`.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::regularizers::{HybridRegularizer, PseudoIndex, Shape};

/// Exponents are clamped to this range before `exp`.
pub const EXPONENT_CLAMP: f64 = 700.0;
/// Initial lower end of the marginal bracket for an arm block.
pub const Q_FLOOR: f64 = 1e-12;
/// Initial upper end of the marginal bracket for an arm block.
pub const Q_CEIL: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `|sum p - 1|` falls below this.
    pub target_tolerance: f64,
    /// Largest `|sum p - 1|` accepted when the iteration budget runs out.
    pub accept_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            target_tolerance: 1e-12,
            accept_tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub distribution: Vec<f64>,
    pub multiplier: f64,
    /// Max-norm of `grad F(p) + total - c 1`.
    pub residual: f64,
    pub iterations: usize,
}

/// Output of [`arm_block_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArmBlock {
    pub marginal: f64,
    pub coordinates: Vec<f64>,
    /// `d marginal / d c`.
    pub slope: f64,
    pub log_marginal: f64,
}

#[inline]
fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP).exp()
}

struct Root {
    x: f64,
    f: f64,
    iterations: usize,
    converged: bool,
}

/// Safeguarded Newton for a strictly increasing `f`. `eval` returns
/// `(f(x), f'(x))`; values of `+inf` or NaN count as "above the root".
/// Without a bracket it walks from `x0` with doubling steps (Newton steps
/// capped by the current step), then alternates Newton and bisection.
fn increasing_root(
    mut eval: impl FnMut(f64) -> (f64, f64),
    x0: f64,
    mut lo: Option<f64>,
    mut hi: Option<f64>,
    step0: f64,
    tol: f64,
    max_iterations: usize,
) -> Root {
    let mut x = x0;
    let (mut fx, mut dfx) = eval(x);
    let mut step = step0;
    let mut best = (x, fx);
    for it in 0..max_iterations {
        if fx.abs() <= tol {
            return Root {
                x,
                f: fx,
                iterations: it,
                converged: true,
            };
        }
        let below = fx < 0.0;
        if below {
            lo = Some(lo.map_or(x, |l: f64| l.max(x)));
        } else {
            hi = Some(hi.map_or(x, |h: f64| h.min(x)));
        }
        let newton = if fx.is_finite() && dfx.is_finite() && dfx > 0.0 {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let next = match (lo, hi) {
            (Some(l), Some(h)) => {
                let width = h - l;
                if width <= 4.0 * f64::EPSILON * l.abs().max(h.abs()).max(1e-300) {
                    break;
                }
                if newton > l && newton < h {
                    newton
                } else {
                    0.5 * (l + h)
                }
            }
            (Some(_), None) => {
                let d = if newton.is_finite() && newton > x {
                    (newton - x).min(step)
                } else {
                    step
                };
                step *= 2.0;
                x + d
            }
            (None, Some(_)) => {
                let d = if newton.is_finite() && newton < x {
                    (x - newton).min(step)
                } else {
                    step
                };
                step *= 2.0;
                x - d
            }
            (None, None) => unreachable!(),
        };
        if next == x {
            break;
        }
        x = next;
        (fx, dfx) = eval(x);
        if fx.abs() < best.1.abs() || best.1.is_nan() {
            best = (x, fx);
        }
    }
    let converged = best.1.abs() <= tol;
    Root {
        x: best.0,
        f: best.1,
        iterations: max_iterations,
        converged,
    }
}

/// `p = exp(rate (c - z) - 1)`, the entropy coordinate map.
pub fn coordinate_solve_entropy(rate: f64, shifted_loss: f64, c: f64) -> f64 {
    clamped_exp(rate * (c - shifted_loss) - 1.0)
}

/// Residual of the 1-D Tsallis + entropy equation at `p`.
pub fn tsallis_entropy_residual(eta: f64, gamma: f64, shifted_loss: f64, c: f64, p: f64) -> f64 {
    -1.0 / (2.0 * eta * p.sqrt()) + (p.ln() + 1.0) / gamma - (c - shifted_loss)
}

/// Root of `-1/(2 eta sqrt p) + (ln p + 1)/gamma = c - z`.
pub fn coordinate_solve_tsallis_entropy(
    eta: f64,
    gamma: f64,
    shifted_loss: f64,
    c: f64,
) -> Result<f64> {
    if !(eta > 0.0 && gamma > 0.0) {
        return Err(Error::Argument(format!(
            "rates must be positive (eta={eta}, gamma={gamma})"
        )));
    }
    Ok(mixed_coordinate(1.0 / gamma, 1.0 / eta, c - shifted_loss)?.0)
}

/// Solves `a (ln p + 1) - b / (2 sqrt p) = y` in `u = ln p`.
/// Returns `(p, dp/dy)`.
fn mixed_coordinate(a: f64, b: f64, y: f64) -> Result<(f64, f64)> {
    let h = |u: f64| {
        let e = (-0.5 * u).exp();
        (a * (u + 1.0) - 0.5 * b * e - y, a + 0.25 * b * e)
    };
    let slope = |u: f64| {
        let p = u.exp();
        p / (a + 0.25 * b / p.sqrt())
    };
    let (h_top, _) = h(EXPONENT_CLAMP);
    if h_top <= 0.0 {
        return Ok((EXPONENT_CLAMP.exp(), 0.0));
    }
    let (h_bottom, _) = h(-EXPONENT_CLAMP);
    if h_bottom >= 0.0 {
        return Ok(((-EXPONENT_CLAMP).exp(), 0.0));
    }
    // ln p >= y/a - 1 because the Tsallis term is negative.
    let lower = (y / a - 1.0).max(-EXPONENT_CLAMP);
    let mut x0 = lower;
    if y < 0.0 {
        let tsallis_only = (b * b / (4.0 * y * y)).ln();
        if tsallis_only > lower && tsallis_only < EXPONENT_CLAMP {
            x0 = tsallis_only;
        }
    }
    let scale = 1.0 + y.abs() + a * (1.0 + x0.abs());
    let tol = 1e-15 * scale;
    let root = increasing_root(
        h,
        x0,
        Some(lower),
        Some(EXPONENT_CLAMP),
        1.0,
        tol,
        200,
    );
    if !root.converged && root.f.abs() > 1e-10 * scale {
        return Err(Error::solver(
            "Tsallis-entropy coordinate did not converge",
            root.f,
        ));
    }
    Ok((root.x.exp(), slope(root.x)))
}

/// Residual `sum_j exp(gamma_j (c - z_j + 1/(eta q)) - 1) - q` of an arm block.
pub fn arm_block_residual(q: f64, c: f64, eta: f64, gammas: &[f64], shifted_losses: &[f64]) -> f64 {
    gammas
        .iter()
        .zip(shifted_losses)
        .map(|(g, z)| clamped_exp(g * (c - z + 1.0 / (eta * q)) - 1.0))
        .sum::<f64>()
        - q
}

/// Solves the self-consistent arm block `p_j = exp(gamma_j (c - z_j + 1/(eta q)) - 1)`,
/// `q = sum_j p_j`. The root is found in `u = ln q`; `hint` is a previous `ln q`.
pub fn arm_block_solve(
    c: f64,
    eta: f64,
    gammas: &[f64],
    shifted_losses: &[f64],
    hint: Option<f64>,
) -> Result<ArmBlock> {
    if !(eta > 0.0) || gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Argument("arm block rates must be positive".into()));
    }
    if gammas.len() != shifted_losses.len() || gammas.is_empty() {
        return Err(Error::Argument("arm block dimension mismatch".into()));
    }
    let mut exps = vec![0.0; gammas.len()];
    // G(u) = u - ln sum_j exp(e_j(u)), strictly increasing.
    let mut eval = |u: f64| {
        let inv = (-u).exp() / eta;
        let mut m = f64::NEG_INFINITY;
        for ((e, g), z) in exps.iter_mut().zip(gammas).zip(shifted_losses) {
            *e = (g * (c - z + inv) - 1.0).clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP);
            m = m.max(*e);
        }
        let mut s = 0.0;
        let mut sg = 0.0;
        for (e, g) in exps.iter().zip(gammas) {
            let w = (e - m).exp();
            s += w;
            if e.abs() < EXPONENT_CLAMP {
                sg += w * g;
            }
        }
        (u - m - s.ln(), 1.0 + (sg / s) * inv)
    };
    let lo = Q_FLOOR.ln();
    let hi = Q_CEIL.ln();
    let x0 = hint.filter(|h| h.is_finite()).unwrap_or(hi);
    // Bracket expansion is geometric in q, i.e. additive in u.
    let (g_lo, _) = eval(lo);
    let (g_hi, _) = eval(hi);
    let lo_bracket = if g_lo < 0.0 { Some(lo) } else { None };
    let hi_bracket = if g_hi > 0.0 { Some(hi) } else { None };
    let root = increasing_root(&mut eval, x0, lo_bracket, hi_bracket, 1.0, 1e-15, 200);
    if !root.converged && root.f.abs() > 1e-12 {
        return Err(Error::solver(
            "arm block marginal did not converge",
            root.f,
        ));
    }
    let u = root.x;
    let inv = (-u).exp() / eta;
    let coordinates: Vec<f64> = gammas
        .iter()
        .zip(shifted_losses)
        .map(|(g, z)| clamped_exp(g * (c - z + inv) - 1.0))
        .collect();
    let marginal: f64 = coordinates.iter().sum();
    let sg: f64 = coordinates.iter().zip(gammas).map(|(p, g)| p * g).sum();
    let slope = sg / (1.0 + sg / (eta * marginal * marginal));
    Ok(ArmBlock {
        marginal,
        coordinates,
        slope,
        log_marginal: u,
    })
}

/// Max-norm of `grad F(p) + total - c 1`; `+inf` when `p` is not interior.
pub fn kkt_residual(result: &SolveResult, total_loss: &[f64], reg: &HybridRegularizer) -> f64 {
    match reg.gradient(&result.distribution) {
        Ok(g) => g
            .iter()
            .zip(total_loss)
            .map(|(g, l)| (g + l - result.multiplier).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Stateful wrapper carrying warm-start hints between calls.
#[derive(Debug, Clone, Default)]
pub struct Solver {
    options: SolverOptions,
    last_multiplier: Option<f64>,
    block_hints: Vec<f64>,
}

impl Solver {
    pub fn new(options: SolverOptions) -> Self {
        Self {
            options,
            last_multiplier: None,
            block_hints: Vec::new(),
        }
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    /// Overrides the multiplier warm start.
    pub fn set_hint(&mut self, multiplier: Option<f64>) {
        self.last_multiplier = multiplier;
    }

    pub fn solve(&mut self, total_loss: &[f64], reg: &HybridRegularizer) -> Result<SolveResult> {
        let result = solve_inner(
            total_loss,
            reg,
            self.options,
            self.last_multiplier,
            &mut self.block_hints,
        )?;
        self.last_multiplier = Some(result.multiplier);
        Ok(result)
    }
}

/// `argmin_p <p, total> + F(p)` over the simplex, from a cold start.
pub fn solve(total_loss: &[f64], reg: &HybridRegularizer) -> Result<SolveResult> {
    solve_inner(total_loss, reg, SolverOptions::default(), None, &mut Vec::new())
}

/// Like [`solve`] with an initial guess for the multiplier.
pub fn solve_with_hint(
    total_loss: &[f64],
    reg: &HybridRegularizer,
    multiplier_hint: Option<f64>,
) -> Result<SolveResult> {
    solve_inner(
        total_loss,
        reg,
        SolverOptions::default(),
        multiplier_hint,
        &mut Vec::new(),
    )
}

fn solve_inner(
    total_loss: &[f64],
    reg: &HybridRegularizer,
    options: SolverOptions,
    hint: Option<f64>,
    block_hints: &mut Vec<f64>,
) -> Result<SolveResult> {
    if total_loss.len() != reg.dim() {
        return Err(Error::Argument(format!(
            "loss has {} coordinates, regularizer has {}",
            total_loss.len(),
            reg.dim()
        )));
    }
    if total_loss.iter().any(|l| !l.is_finite()) {
        return Err(Error::Argument("loss vector must be finite".into()));
    }
    let shift = total_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let z: Vec<f64> = total_loss.iter().map(|l| l - shift).collect();
    let shape = reg.shape();
    let x0 = hint.map(|c| c - shift).filter(|c| c.is_finite()).unwrap_or(0.0);

    let result = match shape.barrier {
        None => solve_separable(shape, &z, x0, options)?,
        Some((eta, layout)) => solve_blocks(shape, eta, layout, &z, x0, options, block_hints)?,
    };
    let (distribution, c_shifted, iterations) = result;
    let mut out = SolveResult {
        distribution,
        multiplier: c_shifted + shift,
        residual: 0.0,
        iterations,
    };
    out.residual = kkt_residual(&out, total_loss, reg);
    Ok(out)
}

fn finish(
    root: Root,
    options: SolverOptions,
) -> Result<f64> {
    if root.converged || root.f.abs() <= options.accept_tolerance {
        Ok(root.x)
    } else {
        Err(Error::solver(
            "normalization multiplier did not converge",
            root.f,
        ))
    }
}

type Solved = (Vec<f64>, f64, usize);

fn solve_separable(shape: &Shape, z: &[f64], x0: f64, options: SolverOptions) -> Result<Solved> {
    let a = &shape.entropy;
    let b = shape.tsallis;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let mut p = vec![0.0; z.len()];
    let mut eval = |c: f64| -> (f64, f64) {
        let mut sum = 0.0;
        let mut slope = 0.0;
        for k in 0..z.len() {
            let y = c - z[k];
            let (pk, dk) = if b == 0.0 {
                let e = y / a[k] - 1.0;
                let pk = clamped_exp(e);
                let dk = if e.abs() < EXPONENT_CLAMP { pk / a[k] } else { 0.0 };
                (pk, dk)
            } else if a[k] == 0.0 {
                if y < 0.0 {
                    let pk = b * b / (4.0 * y * y);
                    (pk, 2.0 * pk / -y)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                }
            } else {
                match mixed_coordinate(a[k], b, y) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        (f64::NAN, f64::NAN)
                    }
                }
            };
            p[k] = pk;
            sum += pk;
            slope += dk;
        }
        (sum - 1.0, slope)
    };
    let root = increasing_root(
        &mut eval,
        x0,
        None,
        None,
        1.0,
        options.target_tolerance,
        options.max_iterations,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let iterations = root.iterations;
    let c = finish(root, options)?;
    eval(c);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok((p, c, iterations))
}

fn solve_blocks(
    shape: &Shape,
    eta: f64,
    layout: PseudoIndex,
    z: &[f64],
    x0: f64,
    options: SolverOptions,
    hints: &mut Vec<f64>,
) -> Result<Solved> {
    let k = layout.num_arms();
    if hints.len() != k {
        hints.clear();
        hints.resize(k, f64::NAN);
    }
    // Per-coordinate entropy rates gamma = 1/a.
    let gammas: Vec<f64> = shape.entropy.iter().map(|a| 1.0 / a).collect();
    let mut p = vec![0.0; z.len()];
    let failure: Cell<Option<Error>> = Cell::new(None);
    let mut eval = |c: f64| -> (f64, f64) {
        let mut sum = 0.0;
        let mut slope = 0.0;
        for arm in 0..k {
            let block = layout.block(arm);
            let hint = Some(hints[arm]).filter(|h| h.is_finite());
            match arm_block_solve(c, eta, &gammas[block.clone()], &z[block.clone()], hint) {
                Ok(res) => {
                    hints[arm] = res.log_marginal;
                    p[block].copy_from_slice(&res.coordinates);
                    sum += res.marginal;
                    slope += res.slope;
                }
                Err(e) => {
                    failure.set(Some(e));
                    return (f64::NAN, f64::NAN);
                }
            }
        }
        (sum - 1.0, slope)
    };
    let root = increasing_root(
        &mut eval,
        x0,
        None,
        None,
        1.0,
        options.target_tolerance,
        options.max_iterations,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let iterations = root.iterations;
    let c = finish(root, options)?;
    eval(c);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok((p, c, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hedge(k: usize, eta: f64) -> HybridRegularizer {
        let layout = PseudoIndex::new(k, 1).unwrap();
        HybridRegularizer::weighted_entropy(layout, vec![eta; k], vec![1.0 / k as f64; k]).unwrap()
    }

    fn with_offset(reg: &HybridRegularizer, loss: &[f64]) -> Vec<f64> {
        loss.iter().zip(reg.offset()).map(|(l, o)| l + o).collect()
    }

    #[test]
    fn zero_loss_returns_prior() {
        let layout = PseudoIndex::new(3, 2).unwrap();
        let prior = vec![0.3, 0.1, 0.2, 0.05, 0.25, 0.1];
        let reg = HybridRegularizer::weighted_entropy(layout, vec![0.5, 0.2, 0.5, 0.2, 0.5, 0.2], prior.clone())
            .unwrap();
        let res = solve(&reg.offset(), &reg).unwrap();
        for (a, b) in res.distribution.iter().zip(&prior) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn hedge_two_arms() {
        let reg = hedge(2, 1.0);
        let res = solve(&with_offset(&reg, &[0.0, 1.0]), &reg).unwrap();
        assert_relative_eq!(res.distribution[0], 0.731_058_578_630_004_9, epsilon = 1e-10);
        assert_relative_eq!(res.distribution[1], 0.268_941_421_369_995_1, epsilon = 1e-10);
        assert!(res.residual <= 1e-12);
    }

    #[test]
    fn tsallis_only_uniform() {
        let reg = HybridRegularizer::tsallis(2, 0.7).unwrap();
        let res = solve(&with_offset(&reg, &[0.0, 0.0]), &reg).unwrap();
        assert!((res.distribution[0] - 0.5).abs() < 1e-10);
        assert!(res.residual < 1e-8);
    }

    #[test]
    fn entropy_coordinate_examples() {
        assert_eq!(coordinate_solve_entropy(1.0, 0.0, 1.0), 1.0);
        assert_relative_eq!(coordinate_solve_entropy(1.0, 0.0, 0.0), (-1.0f64).exp());
        assert!(coordinate_solve_entropy(2.0, 0.3, 0.1) < coordinate_solve_entropy(2.0, 0.3, 0.2));
    }

    #[test]
    fn tsallis_coordinate_example() {
        let p = coordinate_solve_tsallis_entropy(1.0, 1.0, 0.0, 0.5).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arm_block_is_consistent() {
        let gammas = [0.25, 0.125, 0.0625];
        let z = [0.3, 1.2, 0.0];
        let res = arm_block_solve(-0.5, 0.8, &gammas, &z, None).unwrap();
        let s: f64 = res.coordinates.iter().sum();
        assert!((s - res.marginal).abs() <= 1e-14);
        assert!(arm_block_residual(res.marginal, -0.5, 0.8, &gammas, &z).abs() <= 1e-12);
    }

    #[test]
    fn rejects_non_finite_loss() {
        let reg = hedge(2, 1.0);
        assert!(matches!(
            solve(&[f64::NAN, 0.0], &reg),
            Err(Error::Argument(_))
        ));
    }
}
