//! Frame-quality metrics on `[0, 1]` pixel values: MSE, PSNR and
//! Gaussian-window SSIM, plus aggregation into per-(variant, horizon)
//! reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Once;

use crate::dataset::{to_unit, EvalWindow, Frame, CHANNELS};
use crate::error::{DgganError, Result};
use crate::inference::{rollout_batch, Predictor, Variant};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_C1: f64 = SSIM_K1 * SSIM_K1;
pub const SSIM_C2: f64 = SSIM_K2 * SSIM_K2;

fn check_shapes(a: &Frame, b: &Frame, what: &str) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(DgganError::Contract(format!(
            "{what}: frames differ in shape ({}×{} vs {}×{})",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )))
    }
}

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    check_shapes(a, b, "mse")?;
    let sum: f64 = a.pixels().iter().zip(b.pixels()).map(|(&x, &y)| (to_unit(x) - to_unit(y)).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB with a peak of 1; `f64::INFINITY` for
/// identical frames.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Normalised 1-D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// SSIM from weighted local statistics.
pub fn ssim_from_stats(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2))
}

fn channel(f: &Frame, c: usize) -> Vec<f64> {
    let n = f.height() * f.width();
    f.pixels()[c * n..(c + 1) * n].iter().map(|&x| to_unit(x)).collect()
}

/// Valid-mode separable filtering of an `h×w` plane.
fn filter_valid(x: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = taps.iter().enumerate().map(|(t, &g)| g * x[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = taps.iter().enumerate().map(|(t, &g)| g * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

fn ssim_channel(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        static NOTE: Once = Once::new();
        NOTE.call_once(|| log::info!("ssim: {h}×{w} is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window; using one global window"));
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n;
        let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        return ssim_from_stats(ma, mb, va, vb, cov);
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let f = |v: &[f64]| filter_valid(v, h, w, &taps);
    let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let (ma, mb) = (f(a), f(b));
    let (saa, sbb, sab) = (f(&sq(a, a)), f(&sq(b, b)), f(&sq(a, b)));
    let n = ma.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ua, ub) = (ma[i], mb[i]);
            ssim_from_stats(ua, ub, saa[i] - ua * ua, sbb[i] - ub * ub, sab[i] - ua * ub)
        })
        .sum();
    total / n as f64
}

/// Mean SSIM over all valid 11×11 Gaussian-window positions, per channel,
/// then averaged over channels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    check_shapes(a, b, "ssim")?;
    let (h, w) = (a.height(), a.width());
    let sum: f64 = (0..CHANNELS).map(|c| ssim_channel(&channel(a, c), &channel(b, c), h, w)).sum();
    Ok(sum / CHANNELS as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameScore {
    pub variant: Variant,
    pub horizon: usize,
    pub ssim: f64,
    pub psnr: f64,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub variant: Variant,
    pub horizon: usize,
    pub count: usize,
    pub ssim: f64,
    /// Mean over finite values only.
    pub psnr: f64,
    /// Rows with identical frames, left out of `psnr`.
    pub psnr_infinite: usize,
    pub mse: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub per_frame: Vec<FrameScore>,
    pub aggregates: Vec<Aggregate>,
}

/// One prediction to score. `truth` is `None` when the ground truth is
/// missing, which is an error.
pub struct Scored<'a> {
    pub variant: Variant,
    pub horizon: usize,
    pub prediction: &'a Frame,
    pub truth: Option<&'a Frame>,
}

pub fn evaluate(items: &[Scored<'_>]) -> Result<MetricsReport> {
    let mut per_frame = Vec::with_capacity(items.len());
    for it in items {
        let truth = it.truth.ok_or_else(|| {
            DgganError::Contract(format!("{} prediction at horizon {} has no ground truth", it.variant, it.horizon))
        })?;
        let m = mse(it.prediction, truth)?;
        per_frame.push(FrameScore {
            variant: it.variant,
            horizon: it.horizon,
            ssim: ssim(it.prediction, truth)?,
            psnr: psnr_from_mse(m),
            mse: m,
        });
    }
    let aggregates = aggregate(&per_frame);
    Ok(MetricsReport { per_frame, aggregates })
}

/// Means per (variant, horizon), summed in row order.
pub fn aggregate(rows: &[FrameScore]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(Variant, usize), Vec<&FrameScore>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.variant, r.horizon)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((variant, horizon), rs)| {
            let n = rs.len() as f64;
            let finite: Vec<f64> = rs.iter().map(|r| r.psnr).filter(|p| p.is_finite()).collect();
            Aggregate {
                variant,
                horizon,
                count: rs.len(),
                ssim: rs.iter().map(|r| r.ssim).sum::<f64>() / n,
                psnr: if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 },
                psnr_infinite: rs.len() - finite.len(),
                mse: rs.iter().map(|r| r.mse).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Rolls every predictor forward over each window and scores horizons
/// `1..=horizon` against the window's future frames.
pub fn evaluate_predictors(predictors: &[&dyn Predictor], windows: &[EvalWindow], horizon: usize) -> Result<MetricsReport> {
    let mut predictions = Vec::new();
    for p in predictors {
        for chunk in windows.chunks(64) {
            let inputs: Vec<&[Frame]> = chunk.iter().map(|w| w.inputs.as_slice()).collect();
            for (w, r) in chunk.iter().zip(rollout_batch(*p, &inputs, horizon)) {
                for (k, frame) in r.frames.into_iter().enumerate() {
                    predictions.push((p.variant(), k + 1, frame, w.future.get(k)));
                }
            }
        }
    }
    let items: Vec<Scored<'_>> = predictions
        .iter()
        .map(|(variant, horizon, frame, truth)| Scored { variant: *variant, horizon: *horizon, prediction: frame, truth: *truth })
        .collect();
    evaluate(&items)
}

impl MetricsReport {
    pub fn get(&self, variant: Variant, horizon: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.variant == variant && a.horizon == horizon)
    }

    /// Structured report: a header of `#` lines recording the metric
    /// constants, then one `name=value` row per (variant, horizon).
    pub fn to_report_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# metrics on [0,1] frames; psnr peak=1; mse printed as-is (console table uses x1e-3)");
        let _ = writeln!(
            s,
            "# ssim window={SSIM_WINDOW} sigma={SSIM_SIGMA} c1={SSIM_C1} c2={SSIM_C2} per-channel mean; psnr means exclude identical frames"
        );
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "variant={} horizon={} count={} ssim={:.6} psnr={:.4} psnr_infinite={} mse={:.6e}",
                a.variant, a.horizon, a.count, a.ssim, a.psnr, a.psnr_infinite, a.mse
            );
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_report_string()).map_err(DgganError::io(path))
    }

    /// Methods as rows, horizons as column groups of SSIM, PSNR and MSE
    /// (×10⁻³).
    pub fn table(&self) -> String {
        let mut horizons: Vec<usize> = self.aggregates.iter().map(|a| a.horizon).collect();
        horizons.sort_unstable();
        horizons.dedup();
        let variants: Vec<Variant> = Variant::ALL.into_iter().filter(|v| self.aggregates.iter().any(|a| a.variant == *v)).collect();
        let mut s = String::new();
        let _ = write!(s, "{:<8}", "Method");
        for h in &horizons {
            let _ = write!(s, " | {:>7} {:>7} {:>9}", format!("SSIM@{h}"), format!("PSNR@{h}"), format!("MSE@{h}"));
        }
        let _ = writeln!(s);
        let width = 8 + horizons.len() * 28;
        let _ = writeln!(s, "{}", "-".repeat(width));
        for v in variants {
            let _ = write!(s, "{:<8}", v.name());
            for &h in &horizons {
                match self.get(v, h) {
                    Some(a) => {
                        let _ = write!(s, " | {:>7.4} {:>7.2} {:>9.3}", a.ssim, a.psnr, a.mse * 1e3);
                    }
                    None => {
                        let _ = write!(s, " | {:>7} {:>7} {:>9}", "-", "-", "-");
                    }
                }
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s, "MSE in units of 1e-3; PSNR in dB.");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v01: f32, h: usize, w: usize) -> Frame {
        Frame::filled(h, w, v01 * 2.0 - 1.0)
    }

    #[test]
    fn constant_fields() {
        let a = constant(1.0, 8, 8);
        let b = constant(0.0, 8, 8);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
        let m = mse(&constant(0.5, 8, 8), &constant(0.4, 8, 8)).unwrap();
        assert!((m - 0.01).abs() < 1e-8, "f32 storage of 0.4 limits this to ~1e-9");
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn constant_images_have_the_closed_form_ssim() {
        let a = constant(0.0, 16, 16);
        let b = constant(1.0, 16, 16);
        let expect = SSIM_C1 / (1.0 + SSIM_C1);
        assert!((ssim(&a, &b).unwrap() - expect).abs() < 1e-12);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn taps_sum_to_one() {
        let t = gaussian_taps(11, 1.5);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0], t[10]);
    }

    #[test]
    fn shape_mismatch_is_a_contract_error() {
        assert!(matches!(mse(&constant(0.0, 8, 8), &constant(0.0, 8, 16)), Err(DgganError::Contract(_))));
    }

    #[test]
    fn aggregates_group_by_variant_and_horizon() {
        let a = constant(0.5, 16, 16);
        let b = constant(0.4, 16, 16);
        let items: Vec<Scored> = [Variant::Copy, Variant::Dggan]
            .into_iter()
            .flat_map(|v| (1..=2).map(move |h| (v, h)))
            .map(|(variant, horizon)| Scored { variant, horizon, prediction: &a, truth: Some(&b) })
            .collect();
        let r = evaluate(&items).unwrap();
        assert_eq!(r.aggregates.len(), 4);
        assert_eq!(r.get(Variant::Copy, 2).unwrap().count, 1);
        assert_eq!(r.get(Variant::Copy, 2).unwrap().ssim, r.per_frame[1].ssim);
        let missing = [Scored { variant: Variant::Copy, horizon: 1, prediction: &a, truth: None }];
        assert!(matches!(evaluate(&missing), Err(DgganError::Contract(_))));
    }

    #[test]
    fn infinite_psnr_is_counted_not_averaged() {
        let a = constant(0.5, 16, 16);
        let b = constant(0.4, 16, 16);
        let items = [
            Scored { variant: Variant::Copy, horizon: 1, prediction: &a, truth: Some(&a) },
            Scored { variant: Variant::Copy, horizon: 1, prediction: &a, truth: Some(&b) },
        ];
        let agg = &evaluate(&items).unwrap().aggregates[0];
        assert_eq!(agg.psnr_infinite, 1);
        assert!((agg.psnr - 20.0).abs() < 1e-6);
    }
}
