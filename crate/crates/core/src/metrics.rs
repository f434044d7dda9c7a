//! Full-reference quality metrics and their CSV report.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ImagePlane, MultiPlaneImage};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio `10 log10(L^2 / MSE)` in dB.
/// Identical planes give `f64::INFINITY`.
pub fn psnr(a: &ImagePlane, b: &ImagePlane, range: f64) -> Result<f64> {
    a.check_shape(b, "psnr operands")?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (range * range / mse).log10())
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian filtering over the valid region only.
fn valid_blur(d: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &d[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k
                .iter()
                .zip(&row[x..x + SSIM_WINDOW])
                .map(|(k, v)| k * v)
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(j, k)| k * horiz[(y + j) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11x11 windows.
///
/// `ssim(a, a) = 1` and `ssim(a, b) = ssim(b, a)` hold exactly: every
/// product and sum below is formed symmetrically in `a` and `b`.
pub fn ssim(a: &ImagePlane, b: &ImagePlane, range: f64) -> Result<f64> {
    a.check_shape(b, "ssim operands")?;
    let (w, h) = (a.width(), a.height());
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::shape(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = ssim_kernel();
    let (ad, bd) = (a.data(), b.data());
    let aa: Vec<f64> = ad.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = bd.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = ad.iter().zip(bd).map(|(x, y)| x * y).collect();
    let mu_a = valid_blur(ad, w, h, &k);
    let mu_b = valid_blur(bd, w, h, &k);
    let e_aa = valid_blur(&aa, w, h, &k);
    let e_bb = valid_blur(&bb, w, h, &k);
    let e_ab = valid_blur(&ab, w, h, &k);
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let (ma2, mb2, mab) = (ma * ma, mb * mb, ma * mb);
        let va = e_aa[i] - ma2;
        let vb = e_bb[i] - mb2;
        let cab = e_ab[i] - mab;
        total += ((2.0 * mab + c1) * (2.0 * cab + c2)) / ((ma2 + mb2 + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

fn check_images(a: &MultiPlaneImage, b: &MultiPlaneImage) -> Result<()> {
    if a.num_planes() != b.num_planes() || !a.same_shape(b) {
        return Err(Error::shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.num_planes(),
            b.width(),
            b.height(),
            b.num_planes()
        )));
    }
    Ok(())
}

/// Per-plane PSNR averaged over planes; infinite when every plane matches.
pub fn psnr_image(a: &MultiPlaneImage, b: &MultiPlaneImage) -> Result<f64> {
    check_images(a, b)?;
    let mut sum = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        sum += psnr(pa, pb, a.range())?;
    }
    Ok(sum / a.num_planes() as f64)
}

/// Per-plane SSIM averaged over planes.
pub fn ssim_image(a: &MultiPlaneImage, b: &MultiPlaneImage) -> Result<f64> {
    check_images(a, b)?;
    let mut sum = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        sum += ssim(pa, pb, a.range())?;
    }
    Ok(sum / a.num_planes() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub method: String,
    pub zeta: usize,
    pub lambda: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    /// Rows ordered by method name, then radius, then lambda.
    pub fn sorted_rows(&self) -> Vec<&MetricRow> {
        let mut rows: Vec<&MetricRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            a.method
                .cmp(&b.method)
                .then(a.zeta.cmp(&b.zeta))
                .then(a.lambda.partial_cmp(&b.lambda).unwrap_or(Ordering::Equal))
        });
        rows
    }

    /// Writes the CSV to any sink.
    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(sink);
        wtr.write_record(["method", "zeta", "lambda", "psnr_db", "ssim"])?;
        for r in self.sorted_rows() {
            wtr.write_record([
                r.method.clone(),
                r.zeta.to_string(),
                r.lambda.to_string(),
                format_metric(r.psnr),
                format_metric(r.ssim),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Four decimals; positive infinity is written as `inf`.
pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Writes the report atomically to `path`.
pub fn emit_report(report: &MetricReport, path: impl AsRef<Path>) -> Result<()> {
    crate::image::write_atomic(path.as_ref(), report.to_csv_string().as_bytes())
}
