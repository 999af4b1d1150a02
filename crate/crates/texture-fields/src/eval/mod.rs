//! Quantitative evaluation and baselines.

pub mod render;
pub mod ssim;
pub mod voxel;

pub use render::{colorize_mesh, render_field};
pub use ssim::{mean_l1, mean_l1_masked, psnr, ssim};
pub use voxel::{build_color_voxel_grid, render_voxel_grid, ColorVoxelGrid};

use crate::error::{Error, Result};
use crate::kv::KvDoc;
use crate::raster::ViewSample;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ViewMetrics {
    pub ssim: f64,
    pub psnr: f64,
    pub l1: f64,
    /// mean-l1 over target-foreground pixels only
    pub l1_fg: f64,
}

/// Per-view and aggregate metrics for one rendered set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model_id: String,
    pub per_view: Vec<ViewMetrics>,
    pub ssim_mean: f64,
    pub psnr_mean: f64,
    pub l1_mean: f64,
    pub l1_fg_mean: f64,
}

impl MetricsReport {
    pub fn view_count(&self) -> usize {
        self.per_view.len()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut doc = KvDoc::new();
        doc.push("format", "texf-metrics-v1");
        doc.push("model", &self.model_id);
        doc.push("views", self.per_view.len());
        doc.push("ssim_mean", self.ssim_mean);
        doc.push("psnr_mean", self.psnr_mean);
        doc.push("l1_mean", self.l1_mean);
        doc.push("l1_fg_mean", self.l1_fg_mean);
        for (i, v) in self.per_view.iter().enumerate() {
            doc.push(
                "per_view",
                format!(
                    "index={} ssim={} psnr={} l1={} l1_fg={}",
                    i, v.ssim, v.psnr, v.l1, v.l1_fg
                ),
            );
        }
        doc.write(path)
    }
}

/// Compare rendered views against targets pairwise. Both lists must align;
/// callers render with the same cameras that produced the targets.
pub fn metrics_report(
    model_id: &str,
    renders: &[ViewSample],
    targets: &[ViewSample],
) -> Result<MetricsReport> {
    if renders.len() != targets.len() {
        return Err(Error::Contract(format!(
            "{} renders vs {} targets",
            renders.len(),
            targets.len()
        )));
    }
    if renders.is_empty() {
        return Err(Error::Contract("metrics over an empty view set".into()));
    }
    let mut per_view = Vec::with_capacity(renders.len());
    for (r, t) in renders.iter().zip(targets) {
        let (w, h) = (t.width(), t.height());
        per_view.push(ViewMetrics {
            ssim: ssim(&r.image, &t.image, w, h)?,
            psnr: psnr(&r.image, &t.image, w, h)?,
            l1: mean_l1(&r.image, &t.image, w, h)?,
            l1_fg: mean_l1_masked(&r.image, &t.image, &t.mask)?,
        });
    }
    let n = per_view.len() as f64;
    Ok(MetricsReport {
        model_id: model_id.to_string(),
        ssim_mean: per_view.iter().map(|v| v.ssim).sum::<f64>() / n,
        psnr_mean: per_view.iter().map(|v| v.psnr).sum::<f64>() / n,
        l1_mean: per_view.iter().map(|v| v.l1).sum::<f64>() / n,
        l1_fg_mean: per_view.iter().map(|v| v.l1_fg).sum::<f64>() / n,
        per_view,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize_mesh;
    use crate::geometry::primitives::six_color_cube;
    use crate::raster::views::sample_views;
    use crate::raster::{rasterize, DEFAULT_BACKGROUND};

    #[test]
    fn identical_views_score_perfectly() {
        let mesh = normalize_mesh(&six_color_cube(1)).unwrap();
        let cams = sample_views(3, (1.5, 1.8), 8, 32, 0.45).unwrap();
        let views: Vec<_> = cams
            .iter()
            .map(|c| rasterize(&mesh, c, DEFAULT_BACKGROUND).unwrap())
            .collect();
        let report = metrics_report("self", &views, &views).unwrap();
        assert_eq!(report.view_count(), 3);
        assert!((report.ssim_mean - 1.0).abs() < 1e-12);
        assert_eq!(report.l1_mean, 0.0);
        assert_eq!(report.psnr_mean, f64::INFINITY);
    }

    #[test]
    fn aggregate_is_the_arithmetic_mean() {
        let mesh = normalize_mesh(&six_color_cube(1)).unwrap();
        let cams = sample_views(4, (1.4, 1.9), 21, 32, 0.45).unwrap();
        let views: Vec<_> = cams
            .iter()
            .map(|c| rasterize(&mesh, c, DEFAULT_BACKGROUND).unwrap())
            .collect();
        // compare against a uniformly shifted copy so metrics are nontrivial
        let shifted: Vec<_> = views
            .iter()
            .map(|v| {
                let mut c = v.clone();
                for px in c.image.iter_mut() {
                    *px = (*px * 0.9).clamp(0.0, 1.0);
                }
                c
            })
            .collect();
        let report = metrics_report("shift", &shifted, &views).unwrap();
        let mean = report.per_view.iter().map(|v| v.l1).sum::<f64>()
            / report.per_view.len() as f64;
        assert!((report.l1_mean - mean).abs() <= 1e-6);
    }

    #[test]
    fn count_mismatch_is_contract_error() {
        let mesh = normalize_mesh(&six_color_cube(1)).unwrap();
        let cams = sample_views(2, (1.5, 1.8), 8, 16, 0.45).unwrap();
        let views: Vec<_> = cams
            .iter()
            .map(|c| rasterize(&mesh, c, DEFAULT_BACKGROUND).unwrap())
            .collect();
        assert!(metrics_report("bad", &views[..1], &views).is_err());
    }

    #[test]
    fn report_file_round_trips_keys() {
        let report = MetricsReport {
            model_id: "demo".into(),
            per_view: vec![ViewMetrics {
                ssim: 0.9,
                psnr: 20.0,
                l1: 0.05,
                l1_fg: 0.08,
            }],
            ssim_mean: 0.9,
            psnr_mean: 20.0,
            l1_mean: 0.05,
            l1_fg_mean: 0.08,
        };
        let dir = std::env::temp_dir().join("texf_metrics_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("metrics.txt");
        report.write(&path).unwrap();
        let doc = crate::kv::KvDoc::read(&path).unwrap();
        assert_eq!(doc.parse_value::<f64>("ssim_mean").unwrap(), 0.9);
        assert_eq!(doc.get_all("per_view").count(), 1);
        std::fs::remove_dir_all(&dir).ok();
    }
}
