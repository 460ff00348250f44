use std::time::Instant;

use rayon::prelude::*;

use qsqs_core::suppression::suppress_image;
use qsqs_core::{Sampler, SuppressionConfig};

use crate::io::{DetectionFile, ImageDetections};
use crate::Result;

#[derive(Debug, Clone)]
pub struct SuppressOutcome {
    pub file: DetectionFile,
    /// Wall time spent on each image, in milliseconds.
    pub per_image_ms: Vec<f64>,
}

impl SuppressOutcome {
    pub fn mean_ms_per_image(&self) -> f64 {
        if self.per_image_ms.is_empty() {
            0.0
        } else {
            self.per_image_ms.iter().sum::<f64>() / self.per_image_ms.len() as f64
        }
    }
}

/// Suppresses every image on the rayon pool. Output order follows input order.
pub fn suppress_file<S>(input: &DetectionFile, cfg: &SuppressionConfig, solver: &S) -> Result<SuppressOutcome>
where
    S: Sampler + Sync + ?Sized,
{
    cfg.validate()?;
    let results: Vec<(ImageDetections, f64)> = input
        .images
        .par_iter()
        .map(|im| {
            let start = Instant::now();
            let detections = suppress_image(&im.detections, cfg, solver)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok((
                ImageDetections {
                    image_id: im.image_id.clone(),
                    detections,
                },
                ms,
            ))
        })
        .collect::<Result<_>>()?;
    let (images, per_image_ms) = results.into_iter().unzip();
    Ok(SuppressOutcome {
        file: DetectionFile { images },
        per_image_ms,
    })
}
