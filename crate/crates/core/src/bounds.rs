//! Analytic cost bounds for the order-up-to and projected-inventory-level
//! policies, and the safety-stock search intervals they induce.
//!
//! All bounds assume i.i.d. normal forecast errors with a stationary standard
//! deviation, no fixed ordering cost and no yield loss. Writing `D(k)` for a
//! sum of `k` forecast errors (standard deviation `sigma * sqrt(k)`):
//!
//! ```text
//! OUT LB(s) = T [ h E(s - D(L+1))+ + b/(L+1) E(D(L+1) - s)+ + (w - hL)/(m+L) E(s - D(m+L))+ ]
//! OUT UB(s) = T [ h E(s - D(L+1))+ + (b + hL) E(D(L+1) - s)+ ]
//! PIL LB(u) = OUT LB(u) - T (w - hL)/(m+L) sum_t sum_{j=t+1}^{t+m-1} d_j
//! PIL UB(u) = T [ (h + w/m) E(u - D(L+1))+ + b E(D(L+1) - u)+ ]
//! ```

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid bound context: {0}")]
    InvalidContext(String),
    #[error("critical ratio {0} is not inside (0, 1)")]
    DegenerateRatio(f64),
}

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn std_normal_pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// `E[(s - X)^+]` for `X ~ N(0, sigma^2)`, i.e. `s Phi(s/sigma) + sigma phi(s/sigma)`.
pub fn normal_loss(s: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return s.max(0.0);
    }
    s.max(0.0) + normal_tail(s.abs(), sigma)
}

/// `E[(X - s)^+]` for `X ~ N(0, sigma^2)`.
pub fn normal_excess(s: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return (-s).max(0.0);
    }
    (-s).max(0.0) + normal_tail(s.abs(), sigma)
}

/// `E[(X - a)^+]` for `a >= 0`. Both terms shrink together in the tail, so
/// the difference is clamped against rounding below zero.
fn normal_tail(a: f64, sigma: f64) -> f64 {
    let z = a / sigma;
    (sigma * std_normal_pdf(z) - a * std_normal_cdf(-z)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Out,
    Pil,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Out => "OUT",
            PolicyKind::Pil => "PIL",
        }
    }
}

/// Inputs to the bounds, in transformed cost units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub lead_time: usize,
    pub lifetime: usize,
    pub horizon: usize,
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
    /// Stationary per-period forecast-error standard deviation.
    pub sigma: f64,
    /// Forecast series, used only by the PIL lower bound.
    pub forecast: Vec<f64>,
}

impl BoundContext {
    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |m: String| Err(BoundsError::InvalidContext(m));
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma {} must be non-negative", self.sigma));
        }
        if self.lifetime == 0 {
            return bad("lifetime must be at least 1".into());
        }
        if [self.holding, self.lost_sales, self.expiration]
            .iter()
            .any(|c| !(*c >= 0.0))
        {
            return bad("cost rates must be non-negative".into());
        }
        Ok(())
    }

    /// Standard deviation of the error sum over the lead time plus one period.
    pub fn sd_lead(&self) -> f64 {
        self.sigma * ((self.lead_time + 1) as f64).sqrt()
    }

    /// Standard deviation of the error sum over `m + L` periods.
    pub fn sd_life(&self) -> f64 {
        self.sigma * ((self.lifetime + self.lead_time) as f64).sqrt()
    }

    fn per_period_lb(&self, s: f64) -> f64 {
        let l = self.lead_time as f64;
        let ml = (self.lifetime + self.lead_time) as f64;
        self.holding * normal_loss(s, self.sd_lead())
            + self.lost_sales / (l + 1.0) * normal_excess(s, self.sd_lead())
            + (self.expiration - self.holding * l) / ml * normal_loss(s, self.sd_life())
    }

    /// `sum_{t=1}^T sum_{j=t+1}^{t+m-1} d_j`, zero-padded past the horizon.
    pub fn forecast_overlap_sum(&self) -> f64 {
        let m = self.lifetime;
        let d = |j: usize| self.forecast.get(j - 1).copied().unwrap_or(0.0);
        (1..=self.horizon)
            .map(|t| (t + 1..t + m).map(d).sum::<f64>())
            .sum()
    }
}

pub fn out_lb(s: f64, ctx: &BoundContext) -> f64 {
    ctx.horizon as f64 * ctx.per_period_lb(s)
}

pub fn out_ub(s: f64, ctx: &BoundContext) -> f64 {
    let l = ctx.lead_time as f64;
    ctx.horizon as f64
        * (ctx.holding * normal_loss(s, ctx.sd_lead())
            + (ctx.lost_sales + ctx.holding * l) * normal_excess(s, ctx.sd_lead()))
}

pub fn pil_lb(u: f64, ctx: &BoundContext) -> f64 {
    let l = ctx.lead_time as f64;
    let ml = (ctx.lifetime + ctx.lead_time) as f64;
    out_lb(u, ctx) - (ctx.expiration - ctx.holding * l) / ml * ctx.forecast_overlap_sum()
}

pub fn pil_ub(u: f64, ctx: &BoundContext) -> f64 {
    let m = ctx.lifetime as f64;
    ctx.horizon as f64
        * ((ctx.holding + ctx.expiration / m) * normal_loss(u, ctx.sd_lead())
            + ctx.lost_sales * normal_excess(u, ctx.sd_lead()))
}

fn quantile_of_lead_sum(ratio: f64, ctx: &BoundContext) -> Result<f64, BoundsError> {
    if ctx.sigma == 0.0 {
        return Ok(0.0);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(BoundsError::DegenerateRatio(ratio));
    }
    Ok(ctx.sd_lead() * std_normal_quantile(ratio))
}

/// Critical ratio `(b + hL) / (b + (L+1) h)` minimizing the OUT upper bound.
pub fn out_ub_ratio(ctx: &BoundContext) -> f64 {
    let l = ctx.lead_time as f64;
    (ctx.lost_sales + ctx.holding * l) / (ctx.lost_sales + (l + 1.0) * ctx.holding)
}

pub fn out_ub_argmin(ctx: &BoundContext) -> Result<f64, BoundsError> {
    let l = ctx.lead_time as f64;
    if !(ctx.lost_sales + (l + 1.0) * ctx.holding > 0.0) {
        return Err(BoundsError::InvalidContext(
            "b + (L+1) h must be positive".into(),
        ));
    }
    quantile_of_lead_sum(out_ub_ratio(ctx), ctx)
}

/// Critical ratio `b / (b + h + w/m)` minimizing the PIL upper bound.
pub fn pil_ub_ratio(ctx: &BoundContext) -> f64 {
    let m = ctx.lifetime as f64;
    ctx.lost_sales / (ctx.lost_sales + ctx.holding + ctx.expiration / m)
}

pub fn pil_ub_argmin(ctx: &BoundContext) -> Result<f64, BoundsError> {
    quantile_of_lead_sum(pil_ub_ratio(ctx), ctx)
}

/// Minimizer of the lower bound on a dense grid; the smallest grid point wins
/// ties. The lower bound can be non-convex when `w < hL`, hence the grid.
/// The OUT and PIL lower bounds differ by a constant and share it.
pub fn lb_argmin(ctx: &BoundContext) -> f64 {
    if ctx.sigma == 0.0 {
        return 0.0;
    }
    let step = ctx.sigma / 50.0;
    let mut reach = 6.0 * ctx.sd_life();
    if let Ok(ub) = out_ub_argmin(ctx) {
        reach = reach.max(ub.abs() + ctx.sd_lead());
    }
    let n = (2.0 * reach / step).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=n {
        let s = -reach + k as f64 * step;
        let v = ctx.per_period_lb(s);
        if v < best.0 {
            best = (v, s);
        }
    }
    best.1
}

pub fn ub_argmin(kind: PolicyKind, ctx: &BoundContext) -> Result<f64, BoundsError> {
    match kind {
        PolicyKind::Out => out_ub_argmin(ctx),
        PolicyKind::Pil => pil_ub_argmin(ctx),
    }
}

pub fn lower_bound(kind: PolicyKind, s: f64, ctx: &BoundContext) -> f64 {
    match kind {
        PolicyKind::Out => out_lb(s, ctx),
        PolicyKind::Pil => pil_lb(s, ctx),
    }
}

pub fn upper_bound(kind: PolicyKind, s: f64, ctx: &BoundContext) -> f64 {
    match kind {
        PolicyKind::Out => out_ub(s, ctx),
        PolicyKind::Pil => pil_ub(s, ctx),
    }
}

/// Integer candidate interval `[lo, hi]` for the safety-stock search.
pub fn search_interval(
    kind: PolicyKind,
    ctx: &BoundContext,
    margin: i64,
) -> Result<(i64, i64), BoundsError> {
    ctx.validate()?;
    let a = lb_argmin(ctx);
    let b = ub_argmin(kind, ctx)?;
    let hi = a.max(b).ceil() as i64 + margin;
    let lo = a.min(b).floor() as i64 - margin;
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub s: i64,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub kind: PolicyKind,
    pub rows: Vec<BoundsRow>,
    pub argmin_lb: f64,
    pub argmin_ub: f64,
    pub interval: (i64, i64),
}

pub fn bounds_report(
    kind: PolicyKind,
    ctx: &BoundContext,
    margin: i64,
) -> Result<BoundsReport, BoundsError> {
    let interval = search_interval(kind, ctx, margin)?;
    let rows = (interval.0..=interval.1)
        .map(|s| BoundsRow {
            s,
            lb: lower_bound(kind, s as f64, ctx),
            ub: upper_bound(kind, s as f64, ctx),
        })
        .collect();
    Ok(BoundsReport {
        kind,
        rows,
        argmin_lb: lb_argmin(ctx),
        argmin_ub: ub_argmin(kind, ctx)?,
        interval,
    })
}
