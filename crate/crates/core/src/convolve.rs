//! Exact n-fold convolution of a lattice law via the De Pril / Panjer-type
//! recursion, a brute-force pairwise oracle, and the compound-binomial route
//! that the recursion is algebraically equivalent to.

use crate::error::{Error, Result};
use crate::kahan::{CompensatedSum, DoubleDouble};
use crate::lattice::LatticeDistribution;

/// Hard cap on the number of output grid points.
const MAX_OUTPUT_POINTS: usize = 10_000_000;
/// Rescale the working vector once entries exceed this magnitude.
const RESCALE_THRESHOLD: f64 = 1e250;
/// Rescaling always applies exact powers of two.
const RESCALE_EXP2: i32 = 664;
const LN_2: f64 = std::f64::consts::LN_2;

/// Law of `S_n` together with the truncation bookkeeping.
#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    /// Distribution of the n-fold sum (a full probability law; any truncated
    /// remainder has been folded into the final cell).
    pub dist: LatticeDistribution,
    pub n: u32,
    /// Mass beyond the early-stop point, folded into the last cell.
    pub truncated_mass: f64,
    /// Whether the recursion ran on a log-rescaled sequence because the
    /// start value `q_0^n` underflows.
    pub log_scale_used: bool,
}

/// Compute `mu^{*n}` by the recursion
/// `mu^{*n}[0] = q_0^n`,
/// `mu^{*n}[j] = (1/(j q_0)) sum_{l=1..j} ((n+1) l - j) q_l mu^{*n}[j-l]`.
///
/// A law with no mass at its origin is shifted so that its minimal support
/// point sits at zero and the result is shifted back by `n * min_support`.
/// The recursion stops once the accumulated mass reaches `1 - trunc_eps`;
/// the deficit is folded into the final cell and reported.
pub fn convolve_n(
    d: &LatticeDistribution,
    n: u32,
    trunc_eps: f64,
) -> Result<ConvolutionResult> {
    if n == 0 {
        return Err(Error::DomainError("collective size n must be at least 1".into()));
    }
    if !(0.0..=1e-9).contains(&trunc_eps) {
        return Err(Error::DomainError(format!(
            "trunc_eps must lie in [0, 1e-9], got {trunc_eps}"
        )));
    }
    let masses = d.masses();
    let min_idx = masses.iter().position(|&q| q > 0.0).ok_or(Error::EmptySupport)?;
    let max_idx = masses.iter().rposition(|&q| q > 0.0).expect("some mass exists");
    let q = &masses[min_idx..=max_idx];
    // every output sits at n * shift + j * step
    let out_offset = n as f64 * (d.offset() + min_idx as f64 * d.step());

    if q.len() == 1 {
        return Ok(ConvolutionResult {
            dist: LatticeDistribution::new(out_offset, d.step(), vec![1.0])?,
            n,
            truncated_mass: 0.0,
            log_scale_used: false,
        });
    }

    // full support size; the loop usually stops far earlier via truncation,
    // so only the actually produced output is size-limited
    let j_max = (q.len() - 1) as u64 * n as u64;

    let q0 = q[0];
    let ln_start = n as f64 * q0.ln();
    if ln_start < -1e7 {
        return Err(Error::Underflow(format!(
            "log start value {ln_start:.3e} exceeds the rescaling budget"
        )));
    }
    // working values w_j = mu^{*n}[j] * exp(log_scale)
    let (start, mut log_scale, log_scale_used) = if ln_start < -690.0 {
        (1.0, -ln_start, true)
    } else {
        (q0.powi(n as i32), 0.0, false)
    };
    let mut true_scale = (-log_scale).exp(); // exp(-log_scale), 0.0 when underflowing

    let mut w: Vec<DoubleDouble> = Vec::with_capacity(((j_max + 1) as usize).min(1 << 20));
    w.push(DoubleDouble::from_f64(start));
    let mut cumulative = CompensatedSum::new();
    cumulative.add(start * true_scale);
    let n_plus_1 = (n as f64) + 1.0;

    for j in 1..=j_max as usize {
        if j > MAX_OUTPUT_POINTS {
            return Err(Error::TooLarge(j_max as usize, MAX_OUTPUT_POINTS));
        }
        let jf = j as f64;
        let mut acc = DoubleDouble::ZERO;
        let l_hi = j.min(q.len() - 1);
        for l in 1..=l_hi {
            // (n+1) l and j are exact in f64 up to the output-size cap
            let coeff = n_plus_1 * (l as f64) - jf;
            acc = acc.add(DoubleDouble::product(coeff, q[l]).mul(w[j - l]));
        }
        let mut wj = acc.div_f64(jf).div_f64(q0);
        if wj.to_f64() < 0.0 {
            // the alternating-sign sum can leave rounding residue near zero
            wj = DoubleDouble::ZERO;
        }
        if wj.hi > RESCALE_THRESHOLD && log_scale > 0.0 {
            let exp2 = RESCALE_EXP2.min((log_scale / LN_2) as i32);
            if exp2 > 0 {
                let factor = (-exp2 as f64).exp2();
                for v in w.iter_mut() {
                    *v = v.scale_pow2(factor);
                }
                wj = wj.scale_pow2(factor);
                log_scale -= exp2 as f64 * LN_2;
                true_scale = (-log_scale).exp();
            }
        }
        w.push(wj);
        cumulative.add(wj.to_f64() * true_scale);
        let remaining = 1.0 - cumulative.total();
        if (trunc_eps > 0.0 && remaining <= trunc_eps) || remaining <= 1e-300 {
            break;
        }
    }

    let mut out: Vec<f64> = w.iter().map(|v| v.to_f64() * true_scale).collect();
    let truncated_mass = (1.0 - cumulative.total()).max(0.0);
    if truncated_mass > 0.0 {
        let last = out.len() - 1;
        out[last] += truncated_mass;
    }
    Ok(ConvolutionResult {
        dist: LatticeDistribution::new(out_offset, d.step(), out)?,
        n,
        truncated_mass,
        log_scale_used,
    })
}

/// Pairwise convolution of two laws on the same step.
fn pairwise(a: &LatticeDistribution, b: &LatticeDistribution) -> Result<LatticeDistribution> {
    let out_len = a.len() + b.len() - 1;
    if out_len > MAX_OUTPUT_POINTS {
        return Err(Error::TooLarge(out_len, MAX_OUTPUT_POINTS));
    }
    let mut out = vec![0.0f64; out_len];
    for (j, &qa) in a.masses().iter().enumerate() {
        if qa == 0.0 {
            continue;
        }
        for (k, &qb) in b.masses().iter().enumerate() {
            out[j + k] += qa * qb;
        }
    }
    LatticeDistribution::new(a.offset() + b.offset(), a.step(), out)
}

/// Convolution of two independent lattice laws on a common step.
pub fn convolve_pair(
    a: &LatticeDistribution,
    b: &LatticeDistribution,
) -> Result<LatticeDistribution> {
    if (a.step() - b.step()).abs() > 1e-9 * a.step() {
        return Err(Error::NonGridInput(format!(
            "steps {} and {} do not match",
            a.step(),
            b.step()
        )));
    }
    pairwise(a, b)
}

/// Brute-force oracle: iterated pairwise convolution sums, no truncation.
pub fn convolve_direct(d: &LatticeDistribution, n: u32) -> Result<LatticeDistribution> {
    if n == 0 {
        return Err(Error::DomainError("collective size n must be at least 1".into()));
    }
    let mut result = d.clone();
    for _ in 1..n {
        result = pairwise(&result, d)?;
    }
    Ok(result)
}

/// Compound binomial `nu^{*Bin(n,p)}` by the Panjer recursion
/// `s_0 = (1-p)^n`,
/// `s_j = (p / ((1-p) j)) sum_{l=1..j} ((n+1) l - j) nu_l s_{j-l}`.
/// The severity must put no mass at zero.
pub fn compound_binomial(
    severity: &LatticeDistribution,
    n: u32,
    p: f64,
) -> Result<LatticeDistribution> {
    if n == 0 {
        return Err(Error::DomainError("collective size n must be at least 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateP(p));
    }
    if severity.offset() != 0.0 {
        return Err(Error::DomainError(format!(
            "severity support must lie on h*{{1,2,...}}, got offset {}",
            severity.offset()
        )));
    }
    let nu = severity.masses();
    if nu[0] != 0.0 {
        return Err(Error::MassAtZero(nu[0]));
    }
    let start = (1.0 - p).powi(n as i32);
    if start < 1e-300 {
        return Err(Error::Underflow(format!(
            "(1-p)^n = {start:e}; use convolve_n on the mixture for this regime"
        )));
    }
    let j_max = (nu.len() - 1)
        .checked_mul(n as usize)
        .filter(|&m| m < MAX_OUTPUT_POINTS)
        .ok_or(Error::TooLarge((nu.len() - 1).saturating_mul(n as usize), MAX_OUTPUT_POINTS))?;
    let n_plus_1 = (n as f64) + 1.0;
    let mut s: Vec<DoubleDouble> = Vec::with_capacity(j_max + 1);
    s.push(DoubleDouble::from_f64(start));
    for j in 1..=j_max {
        let jf = j as f64;
        let mut acc = DoubleDouble::ZERO;
        for l in 1..=j.min(nu.len() - 1) {
            let coeff = n_plus_1 * (l as f64) - jf;
            acc = acc.add(DoubleDouble::product(coeff, nu[l]).mul(s[j - l]));
        }
        let sj = acc.mul_f64(p).div_f64(1.0 - p).div_f64(jf);
        s.push(if sj.to_f64() < 0.0 { DoubleDouble::ZERO } else { sj });
    }
    let masses = s.iter().map(|v| v.to_f64()).collect();
    LatticeDistribution::new(0.0, severity.step(), masses)
}

/// Total variation distance between two lattice laws on a common grid.
pub fn total_variation(a: &LatticeDistribution, b: &LatticeDistribution) -> f64 {
    assert!(
        (a.step() - b.step()).abs() <= 1e-9 * a.step(),
        "total variation needs a common grid"
    );
    // align supports through their offsets
    let shift = ((b.offset() - a.offset()) / a.step()).round() as i64;
    let len = a.len().max((b.len() as i64 + shift).max(0) as usize);
    let mut acc = CompensatedSum::new();
    for j in 0..len {
        let qa = a.masses().get(j).copied().unwrap_or(0.0);
        let jb = j as i64 - shift;
        let qb = if jb >= 0 { b.masses().get(jb as usize).copied().unwrap_or(0.0) } else { 0.0 };
        acc.add((qa - qb).abs());
    }
    0.5 * acc.total()
}
